#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "forcegp/errors.hpp"
#include "forcegp/oscillator.hpp"
#include "forcegp/trainer.hpp"
#include "forcegp/windsim.hpp"

namespace forcegp::io {

enum class ExperimentKind { sdof, snr_sweep, datatype_ablation, buffeting, reconstruct_from_csv };

inline const char* to_string(ExperimentKind k) {
    switch (k) {
        case ExperimentKind::sdof: return "sdof";
        case ExperimentKind::snr_sweep: return "snr-sweep";
        case ExperimentKind::datatype_ablation: return "datatype-ablation";
        case ExperimentKind::buffeting: return "buffeting";
        case ExperimentKind::reconstruct_from_csv: return "reconstruct-from-csv";
    }
    return "?";
}

struct OscillatorConfig {
    double mass = 1.0;
    double zeta = 0.05;
    double omega_n = 2.0 * M_PI;  ///< rad/s

    OscillatorParams params() const { return OscillatorParams(mass, zeta, omega_n); }
};

struct ForcingConfig {
    std::string kind = "harmonic";  ///< "harmonic" is the only simulated kind
    double amplitude = 1.0;
    double frequency_hz = 1.0;
    double duration_s = 30.0;
    double sample_rate_hz = 200.0;
};

struct SamplingConfig {
    double interval_s = 0.05;
    std::vector<ResponseType> types{ResponseType::disp, ResponseType::vel, ResponseType::acc};
    std::optional<std::pair<double, double>> window_s;
    double warmup_fraction = 0.1;  ///< leading transient excluded when no window given
};

struct NoiseConfig {
    double snr = 20.0;
};

struct TrainingConfig {
    int restarts = 8;
    int max_iters = 200;
    double grad_tol = 1e-6;
    std::string noise_mode = "optimize";  ///< "optimize" | "fixed"
    double fixed_noise = 0.0;
    bool verbose = false;

    TrainConfig to_train_config(std::uint64_t seed) const {
        TrainConfig cfg;
        cfg.restarts = restarts;
        cfg.max_iters = max_iters;
        cfg.grad_tol = grad_tol;
        cfg.seed = seed;
        if (noise_mode == "fixed")
            for (ResponseType t : kResponseTypes)
                cfg.noise_for(t) = {NoiseTreatment::Mode::fixed, fixed_noise};
        else if (noise_mode != "optimize")
            throw ConfigError("training.noise_mode must be 'optimize' or 'fixed'");
        return cfg;
    }
};

struct PredictionConfig {
    double rate_hz = 20.0;
};

struct WindConfig {
    double mean_speed = 30.0;
    double intensity = 0.10;
    double length_u = 200.0;
    double length_w = 100.0;
    double duration_s = 120.0;
    double sample_rate_hz = 8.0;
};

struct AeroConfig {
    double chord = 31.0;
    double depth = 4.0;
    double air_density = 1.25;
    double alpha_static_deg = 0.0;
    double validity_deg = 10.0;
    std::vector<double> coeff_drag{0.08, 0.0, 0.4};
    std::vector<double> coeff_lift{0.05, -0.8};
    std::vector<double> coeff_moment{0.01, 0.15};
    double centre_drag = 0.0;
    double centre_lift = 0.25;
    double centre_moment = 0.25;
    std::string drag_convention = "as-published";  ///< or "rotated"

    SectionAeroParams params() const {
        SectionAeroParams p;
        p.chord = chord;
        p.depth = depth;
        p.air_density = air_density;
        p.alpha_static = alpha_static_deg * M_PI / 180.0;
        p.validity_angle = validity_deg * M_PI / 180.0;
        p.c_drag = Polynomial{coeff_drag};
        p.c_lift = Polynomial{coeff_lift};
        p.c_moment = Polynomial{coeff_moment};
        p.centre_drag = centre_drag;
        p.centre_lift = centre_lift;
        p.centre_moment = centre_moment;
        if (drag_convention == "as-published")
            p.convention = DragConvention::as_published;
        else if (drag_convention == "rotated")
            p.convention = DragConvention::rotated;
        else
            throw ConfigError("aero.drag_convention must be 'as-published' or 'rotated'");
        p.validate();
        return p;
    }
};

struct ModeConfig {
    std::string name;
    double mass = 1.0;
    double zeta = 0.005;
    double frequency_hz = 0.1;
    ModeParticipation participation{};
    double shape_at_output = 1.0;

    OscillatorParams params() const {
        return OscillatorParams(mass, zeta, 2.0 * M_PI * frequency_hz);
    }
};

struct SnrSweepConfig {
    std::vector<double> values{2, 5, 10, 20, 50, 100};
    int seeds = 10;
};

struct AblationConfig {
    std::vector<std::vector<ResponseType>> combos;
    double snr = 20.0;
    int seeds = 10;
};

struct ReconstructConfig {
    std::string csv;
    std::string time_disp = "t_disp", disp = "disp";
    std::string time_vel = "t_vel", vel = "vel";
    std::string time_acc = "t_acc", acc = "acc";
};

struct RunConfig {
    ExperimentKind experiment = ExperimentKind::sdof;
    std::uint64_t seed = 0;
    std::string output_dir = "out";
    bool detrend = false;  ///< remove per-type training means before fitting

    OscillatorConfig oscillator;
    ForcingConfig forcing;
    SamplingConfig sampling;
    std::optional<NoiseConfig> noise;
    TrainingConfig training;
    PredictionConfig prediction;
    WindConfig wind;
    AeroConfig aero;
    std::vector<ModeConfig> modes;
    SnrSweepConfig snr_sweep;
    AblationConfig ablation;
    ReconstructConfig reconstruct;

    std::string canonical_json;  ///< normalized dump of the parsed config
};

namespace detail_cfg {

using nlohmann::json;

inline void require_keys(const json& j, const std::string& where,
                         const std::vector<std::string>& allowed,
                         const std::vector<std::string>& required = {}) {
    if (!j.is_object()) throw ConfigError(where + ": expected an object");
    for (const auto& [key, value] : j.items()) {
        (void)value;
        bool ok = false;
        for (const auto& a : allowed)
            if (key == a) ok = true;
        if (!ok) throw ConfigError(where + ": unknown key '" + key + "'");
    }
    for (const auto& r : required)
        if (!j.contains(r)) throw ConfigError(where + ": missing required key '" + r + "'");
}

inline double get_num(const json& j, const std::string& where, const std::string& key,
                      std::optional<double> fallback = std::nullopt) {
    if (!j.contains(key)) {
        if (fallback) return *fallback;
        throw ConfigError(where + ": missing required key '" + key + "'");
    }
    if (!j[key].is_number()) throw ConfigError(where + "." + key + ": expected a number");
    return j[key].get<double>();
}

inline ResponseType parse_type(const std::string& s, const std::string& where) {
    if (s == "disp") return ResponseType::disp;
    if (s == "vel") return ResponseType::vel;
    if (s == "acc") return ResponseType::acc;
    throw ConfigError(where + ": unknown data type '" + s + "' (use disp|vel|acc)");
}

inline std::vector<ResponseType> parse_types(const json& j, const std::string& where) {
    if (!j.is_array() || j.empty()) throw ConfigError(where + ": expected a non-empty array");
    std::vector<ResponseType> out;
    for (const auto& e : j) out.push_back(parse_type(e.get<std::string>(), where));
    return out;
}

inline OscillatorConfig parse_oscillator(const json& j) {
    require_keys(j, "oscillator", {"mass", "zeta", "omega_n", "frequency_hz"}, {"mass", "zeta"});
    if (j.contains("omega_n") == j.contains("frequency_hz"))
        throw ConfigError("oscillator: give exactly one of omega_n or frequency_hz");
    OscillatorConfig c;
    c.mass = get_num(j, "oscillator", "mass");
    c.zeta = get_num(j, "oscillator", "zeta");
    c.omega_n = j.contains("omega_n") ? get_num(j, "oscillator", "omega_n")
                                      : 2.0 * M_PI * get_num(j, "oscillator", "frequency_hz");
    c.params();  // validates
    return c;
}

inline ForcingConfig parse_forcing(const json& j) {
    require_keys(j, "forcing",
                 {"kind", "amplitude", "frequency_hz", "duration_s", "sample_rate_hz"},
                 {"duration_s", "sample_rate_hz"});
    ForcingConfig c;
    if (j.contains("kind")) c.kind = j["kind"].get<std::string>();
    if (c.kind != "harmonic")
        throw ConfigError("forcing.kind: only 'harmonic' is supported, got '" + c.kind + "'");
    c.amplitude = get_num(j, "forcing", "amplitude", 1.0);
    c.frequency_hz = get_num(j, "forcing", "frequency_hz", 1.0);
    c.duration_s = get_num(j, "forcing", "duration_s");
    c.sample_rate_hz = get_num(j, "forcing", "sample_rate_hz");
    if (c.duration_s <= 0 || c.sample_rate_hz <= 0 || c.frequency_hz <= 0)
        throw ConfigError("forcing: duration_s, sample_rate_hz, frequency_hz must be > 0");
    return c;
}

inline SamplingConfig parse_sampling(const json& j) {
    require_keys(j, "sampling", {"interval_s", "types", "window_s", "warmup_fraction"},
                 {"interval_s"});
    SamplingConfig c;
    c.interval_s = get_num(j, "sampling", "interval_s");
    if (c.interval_s <= 0) throw ConfigError("sampling.interval_s must be > 0");
    if (j.contains("types")) c.types = parse_types(j["types"], "sampling.types");
    if (j.contains("window_s")) {
        const auto& w = j["window_s"];
        if (!w.is_array() || w.size() != 2)
            throw ConfigError("sampling.window_s: expected [t_start, t_end]");
        c.window_s = {{w[0].get<double>(), w[1].get<double>()}};
        if (!(c.window_s->first < c.window_s->second))
            throw ConfigError("sampling.window_s: start must precede end");
    }
    c.warmup_fraction = get_num(j, "sampling", "warmup_fraction", 0.1);
    if (c.warmup_fraction < 0.0 || c.warmup_fraction >= 1.0)
        throw ConfigError("sampling.warmup_fraction must lie in [0, 1)");
    return c;
}

inline TrainingConfig parse_training(const json& j) {
    require_keys(j, "training",
                 {"restarts", "max_iters", "grad_tol", "noise_mode", "fixed_noise", "verbose"});
    TrainingConfig c;
    c.restarts = static_cast<int>(get_num(j, "training", "restarts", 8));
    c.max_iters = static_cast<int>(get_num(j, "training", "max_iters", 200));
    c.grad_tol = get_num(j, "training", "grad_tol", 1e-6);
    if (j.contains("noise_mode")) c.noise_mode = j["noise_mode"].get<std::string>();
    c.fixed_noise = get_num(j, "training", "fixed_noise", 0.0);
    if (j.contains("verbose")) c.verbose = j["verbose"].get<bool>();
    c.to_train_config(0);  // validates mode string and ranges
    return c;
}

inline WindConfig parse_wind(const json& j) {
    require_keys(j, "wind",
                 {"mean_speed", "intensity", "length_u", "length_w", "duration_s",
                  "sample_rate_hz"},
                 {"mean_speed", "intensity", "length_u", "length_w", "duration_s",
                  "sample_rate_hz"});
    WindConfig c;
    c.mean_speed = get_num(j, "wind", "mean_speed");
    c.intensity = get_num(j, "wind", "intensity");
    c.length_u = get_num(j, "wind", "length_u");
    c.length_w = get_num(j, "wind", "length_w");
    c.duration_s = get_num(j, "wind", "duration_s");
    c.sample_rate_hz = get_num(j, "wind", "sample_rate_hz");
    return c;
}

inline AeroConfig parse_aero(const json& j) {
    require_keys(j, "aero",
                 {"chord", "depth", "air_density", "alpha_static_deg", "validity_deg",
                  "coefficients", "centres", "drag_convention"},
                 {"chord", "depth", "air_density", "coefficients"});
    AeroConfig c;
    c.chord = get_num(j, "aero", "chord");
    c.depth = get_num(j, "aero", "depth");
    c.air_density = get_num(j, "aero", "air_density");
    c.alpha_static_deg = get_num(j, "aero", "alpha_static_deg", 0.0);
    c.validity_deg = get_num(j, "aero", "validity_deg", 10.0);

    const auto& co = j["coefficients"];
    require_keys(co, "aero.coefficients", {"drag", "lift", "moment"},
                 {"drag", "lift", "moment"});
    auto poly = [&](const char* key) {
        std::vector<double> v;
        for (const auto& e : co[key]) v.push_back(e.get<double>());
        if (v.empty()) throw ConfigError(std::string("aero.coefficients.") + key + ": empty");
        return v;
    };
    c.coeff_drag = poly("drag");
    c.coeff_lift = poly("lift");
    c.coeff_moment = poly("moment");

    if (j.contains("centres")) {
        const auto& ce = j["centres"];
        require_keys(ce, "aero.centres", {"drag", "lift", "moment"});
        c.centre_drag = get_num(ce, "aero.centres", "drag", 0.0);
        c.centre_lift = get_num(ce, "aero.centres", "lift", 0.25);
        c.centre_moment = get_num(ce, "aero.centres", "moment", 0.25);
    }
    if (j.contains("drag_convention"))
        c.drag_convention = j["drag_convention"].get<std::string>();
    c.params();  // validates
    return c;
}

inline std::vector<ModeConfig> parse_modes(const json& j) {
    if (!j.is_array() || j.empty())
        throw ConfigError("modes: expected a non-empty array of mode objects");
    std::vector<ModeConfig> out;
    int idx = 0;
    for (const auto& m : j) {
        const std::string where = "modes[" + std::to_string(idx) + "]";
        require_keys(m, where,
                     {"name", "mass", "zeta", "frequency_hz", "participation",
                      "shape_at_output"},
                     {"mass", "zeta", "frequency_hz", "participation"});
        ModeConfig c;
        c.name = m.contains("name") ? m["name"].get<std::string>()
                                    : "mode" + std::to_string(idx + 1);
        c.mass = get_num(m, where, "mass");
        c.zeta = get_num(m, where, "zeta");
        c.frequency_hz = get_num(m, where, "frequency_hz");
        const auto& p = m["participation"];
        require_keys(p, where + ".participation", {"p", "h", "alpha"});
        c.participation.p = get_num(p, where + ".participation", "p", 0.0);
        c.participation.h = get_num(p, where + ".participation", "h", 0.0);
        c.participation.alpha = get_num(p, where + ".participation", "alpha", 0.0);
        c.shape_at_output = get_num(m, where, "shape_at_output", 1.0);
        c.params();  // validates
        out.push_back(std::move(c));
        ++idx;
    }
    return out;
}

inline SnrSweepConfig parse_snr_sweep(const json& j) {
    require_keys(j, "snr_sweep", {"values", "seeds"}, {"values"});
    SnrSweepConfig c;
    c.values.clear();
    for (const auto& e : j["values"]) {
        c.values.push_back(e.get<double>());
        if (c.values.back() <= 0) throw ConfigError("snr_sweep.values must be positive");
    }
    if (c.values.empty()) throw ConfigError("snr_sweep.values: empty");
    c.seeds = static_cast<int>(get_num(j, "snr_sweep", "seeds", 10));
    if (c.seeds < 1) throw ConfigError("snr_sweep.seeds must be >= 1");
    return c;
}

inline AblationConfig parse_ablation(const json& j) {
    require_keys(j, "ablation", {"combos", "snr", "seeds"}, {"combos"});
    AblationConfig c;
    for (const auto& combo : j["combos"])
        c.combos.push_back(parse_types(combo, "ablation.combos"));
    if (c.combos.empty()) throw ConfigError("ablation.combos: empty");
    c.snr = get_num(j, "ablation", "snr", 20.0);
    c.seeds = static_cast<int>(get_num(j, "ablation", "seeds", 10));
    if (c.seeds < 1) throw ConfigError("ablation.seeds must be >= 1");
    return c;
}

inline ReconstructConfig parse_reconstruct(const json& j) {
    require_keys(j, "reconstruct", {"csv", "columns"}, {"csv"});
    ReconstructConfig c;
    c.csv = j["csv"].get<std::string>();
    if (j.contains("columns")) {
        const auto& cols = j["columns"];
        require_keys(cols, "reconstruct.columns",
                     {"time_disp", "disp", "time_vel", "vel", "time_acc", "acc"});
        auto str = [&](const char* key, std::string& target) {
            if (cols.contains(key)) target = cols[key].get<std::string>();
        };
        str("time_disp", c.time_disp);
        str("disp", c.disp);
        str("time_vel", c.time_vel);
        str("vel", c.vel);
        str("time_acc", c.time_acc);
        str("acc", c.acc);
    }
    return c;
}

}  // namespace detail_cfg

/// Parses and schema-validates a run configuration. The accepted syntax is
/// JSON with // and /* */ comments. Unknown keys anywhere are rejected.
inline RunConfig parse_config_json(const nlohmann::json& j) {
    using namespace detail_cfg;

    require_keys(j, "config",
                 {"experiment", "seed", "output_dir", "detrend", "oscillator", "forcing",
                  "sampling", "noise", "training", "prediction", "wind", "aero", "modes",
                  "snr_sweep", "ablation", "reconstruct"},
                 {"experiment"});

    RunConfig cfg;
    const std::string kind = j["experiment"].get<std::string>();
    if (kind == "sdof") cfg.experiment = ExperimentKind::sdof;
    else if (kind == "snr-sweep") cfg.experiment = ExperimentKind::snr_sweep;
    else if (kind == "datatype-ablation") cfg.experiment = ExperimentKind::datatype_ablation;
    else if (kind == "buffeting") cfg.experiment = ExperimentKind::buffeting;
    else if (kind == "reconstruct-from-csv") cfg.experiment = ExperimentKind::reconstruct_from_csv;
    else throw ConfigError("experiment: unknown kind '" + kind + "'");

    if (j.contains("seed")) {
        if (!j["seed"].is_number_integer() ||
            (j["seed"].is_number_integer() && !j["seed"].is_number_unsigned() &&
             j["seed"].get<std::int64_t>() < 0))
            throw ConfigError("seed: expected a non-negative integer");
        cfg.seed = j["seed"].get<std::uint64_t>();
    }
    if (j.contains("output_dir")) cfg.output_dir = j["output_dir"].get<std::string>();
    if (j.contains("detrend")) cfg.detrend = j["detrend"].get<bool>();

    auto need = [&](const char* key) -> const nlohmann::json& {
        if (!j.contains(key))
            throw ConfigError(std::string("config: experiment '") + kind +
                              "' requires section '" + key + "'");
        return j[key];
    };

    if (j.contains("training")) cfg.training = parse_training(j["training"]);
    if (j.contains("prediction")) {
        require_keys(j["prediction"], "prediction", {"rate_hz"});
        cfg.prediction.rate_hz = get_num(j["prediction"], "prediction", "rate_hz", 20.0);
        if (cfg.prediction.rate_hz <= 0) throw ConfigError("prediction.rate_hz must be > 0");
    }
    if (j.contains("noise")) {
        require_keys(j["noise"], "noise", {"snr"}, {"snr"});
        cfg.noise = NoiseConfig{get_num(j["noise"], "noise", "snr")};
        if (cfg.noise->snr <= 0) throw ConfigError("noise.snr must be > 0");
    }

    switch (cfg.experiment) {
        case ExperimentKind::sdof:
            cfg.oscillator = parse_oscillator(need("oscillator"));
            cfg.forcing = parse_forcing(need("forcing"));
            cfg.sampling = parse_sampling(need("sampling"));
            break;
        case ExperimentKind::snr_sweep:
            cfg.oscillator = parse_oscillator(need("oscillator"));
            cfg.forcing = parse_forcing(need("forcing"));
            cfg.sampling = parse_sampling(need("sampling"));
            cfg.snr_sweep = parse_snr_sweep(need("snr_sweep"));
            break;
        case ExperimentKind::datatype_ablation:
            cfg.oscillator = parse_oscillator(need("oscillator"));
            cfg.forcing = parse_forcing(need("forcing"));
            cfg.sampling = parse_sampling(need("sampling"));
            cfg.ablation = parse_ablation(need("ablation"));
            break;
        case ExperimentKind::buffeting:
            cfg.wind = parse_wind(need("wind"));
            cfg.aero = parse_aero(need("aero"));
            cfg.modes = parse_modes(need("modes"));
            cfg.sampling = parse_sampling(need("sampling"));
            if (!cfg.noise)
                throw ConfigError("config: buffeting requires the 'noise' section");
            break;
        case ExperimentKind::reconstruct_from_csv:
            cfg.oscillator = parse_oscillator(need("oscillator"));
            cfg.reconstruct = parse_reconstruct(need("reconstruct"));
            break;
    }

    cfg.canonical_json = j.dump();
    return cfg;
}

inline RunConfig parse_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("config: cannot open " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in, nullptr, /*allow_exceptions=*/true,
                                  /*ignore_comments=*/true);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config: " + path.string() + ": " + e.what());
    }
    return parse_config_json(j);
}

/// FNV-1a hash of the canonical config dump; identifies the run inputs.
inline std::string config_hash(const RunConfig& cfg) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : cfg.canonical_json) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

}  // namespace forcegp::io
