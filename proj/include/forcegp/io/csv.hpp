#pragma once

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "forcegp/errors.hpp"
#include "forcegp/gp_core.hpp"

namespace forcegp::io {

/// Columnar table for CSV exchange. Columns may have different lengths;
/// short columns are padded with empty cells on write.
struct CsvTable {
    std::vector<std::string> comments;  ///< emitted as leading '# ' lines
    std::vector<std::string> columns;
    std::vector<Eigen::VectorXd> data;
};

namespace detail {

inline std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

}  // namespace detail

/// Writes a table with a mandatory header row, '.' decimals, UTF-8.
inline void write_csv(const std::filesystem::path& path, const CsvTable& table) {
    if (table.columns.size() != table.data.size())
        throw ConfigError("write_csv: column name count does not match data columns");
    std::ofstream out(path);
    if (!out) throw IoError("write_csv: cannot open " + path.string());

    for (const auto& c : table.comments) out << "# " << c << '\n';
    for (std::size_t i = 0; i < table.columns.size(); ++i)
        out << table.columns[i] << (i + 1 < table.columns.size() ? "," : "");
    out << '\n';

    Eigen::Index rows = 0;
    for (const auto& col : table.data) rows = std::max(rows, col.size());
    for (Eigen::Index r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < table.data.size(); ++c) {
            if (r < table.data[c].size()) out << detail::format_double(table.data[c][r]);
            if (c + 1 < table.data.size()) out << ',';
        }
        out << '\n';
    }
    if (!out) throw IoError("write_csv: failed while writing " + path.string());
}

/// Parsed CSV: header names plus per-column optional cells (empty cells on
/// ragged rows are allowed; anything unparseable or non-finite is an error).
struct CsvFile {
    std::vector<std::string> columns;
    std::vector<std::vector<std::optional<double>>> cells;  ///< per column

    int column_index(const std::string& name) const {
        for (std::size_t i = 0; i < columns.size(); ++i)
            if (columns[i] == name) return static_cast<int>(i);
        return -1;
    }
};

inline CsvFile read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("read_csv: cannot open " + path.string());

    CsvFile file;
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;

        std::vector<std::string> fields;
        std::size_t start = 0;
        while (true) {
            const std::size_t comma = line.find(',', start);
            fields.push_back(line.substr(start, comma - start));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }

        if (!have_header) {
            file.columns = fields;
            file.cells.resize(fields.size());
            have_header = true;
            continue;
        }
        if (fields.size() > file.columns.size())
            throw IoError("read_csv: line " + std::to_string(line_no) + " of " + path.string() +
                          " has more fields than the header");
        for (std::size_t c = 0; c < file.columns.size(); ++c) {
            if (c >= fields.size() || fields[c].empty()) {
                file.cells[c].push_back(std::nullopt);
                continue;
            }
            const std::string& f = fields[c];
            double v = 0.0;
            const auto res = std::from_chars(f.data(), f.data() + f.size(), v);
            if (res.ec != std::errc{} || res.ptr != f.data() + f.size() || !std::isfinite(v))
                throw IoError("read_csv: bad value '" + f + "' at line " +
                              std::to_string(line_no) + ", column '" + file.columns[c] +
                              "' of " + path.string());
            file.cells[c].push_back(v);
        }
    }
    if (!have_header) throw IoError("read_csv: " + path.string() + " has no header row");
    return file;
}

/// Column naming used for measurement exchange: one time column per type.
struct MeasurementColumns {
    std::string time_disp = "t_disp";
    std::string disp = "disp";
    std::string time_vel = "t_vel";
    std::string vel = "vel";
    std::string time_acc = "t_acc";
    std::string acc = "acc";
};

/// Parses per-type (time, value) column pairs into a MeasurementSet.
/// Missing types are allowed; grids may be irregular.
inline MeasurementSet ingest_csv(const std::filesystem::path& path,
                                 const MeasurementColumns& cols = {}) {
    const CsvFile file = read_csv(path);
    MeasurementSet set;

    auto load_type = [&](ResponseType type, const std::string& tcol, const std::string& vcol) {
        const int ti = file.column_index(tcol);
        const int vi = file.column_index(vcol);
        if (ti < 0 && vi < 0) return;
        if (ti < 0 || vi < 0)
            throw IoError("ingest_csv: need both '" + tcol + "' and '" + vcol +
                          "' columns for " + to_string(type) + " data in " + path.string());
        std::vector<double> t, v;
        const auto& tc = file.cells[static_cast<std::size_t>(ti)];
        const auto& vc = file.cells[static_cast<std::size_t>(vi)];
        for (std::size_t r = 0; r < tc.size(); ++r) {
            const bool ht = tc[r].has_value(), hv = r < vc.size() && vc[r].has_value();
            if (!ht && !hv) continue;
            if (ht != hv)
                throw IoError("ingest_csv: unpaired cell for " + std::string(to_string(type)) +
                              " at data row " + std::to_string(r + 1) + " of " + path.string());
            t.push_back(*tc[r]);
            v.push_back(*vc[r]);
        }
        if (t.empty()) return;
        for (std::size_t i = 1; i < t.size(); ++i)
            if (!(t[i] > t[i - 1]))
                throw IoError("ingest_csv: " + tcol + " must be strictly increasing (row " +
                              std::to_string(i + 1) + ") in " + path.string());
        set.set(type,
                Eigen::Map<Eigen::VectorXd>(t.data(), static_cast<Eigen::Index>(t.size())),
                Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
    };

    load_type(ResponseType::disp, cols.time_disp, cols.disp);
    load_type(ResponseType::vel, cols.time_vel, cols.vel);
    load_type(ResponseType::acc, cols.time_acc, cols.acc);
    if (set.present().empty())
        throw IoError("ingest_csv: no measurement columns found in " + path.string());
    return set;
}

/// Inverse of ingest_csv, using the same column naming.
inline void export_measurements(const std::filesystem::path& path, const MeasurementSet& set,
                                const MeasurementColumns& cols = {}) {
    CsvTable table;
    table.comments.push_back("measurement set; one (time, value) column pair per data type");
    auto add = [&](ResponseType type, const std::string& tcol, const std::string& vcol) {
        if (!set.has(type)) return;
        table.columns.push_back(tcol);
        table.data.push_back(set.series(type).times);
        table.columns.push_back(vcol);
        table.data.push_back(set.series(type).values);
    };
    add(ResponseType::disp, cols.time_disp, cols.disp);
    add(ResponseType::vel, cols.time_vel, cols.vel);
    add(ResponseType::acc, cols.time_acc, cols.acc);
    write_csv(path, table);
}

}  // namespace forcegp::io
