// Command-line front end: runs configured experiments, validates configs,
// and checks measurement CSVs.

#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "forcegp/io/runner.hpp"
#include "forcegp/version.hpp"

namespace {

const char* log_level() {
    const char* v = std::getenv("FORCEGP_LOG");
    return v ? v : "info";
}

int run_command(const std::string& config_path, const std::string& output_dir) {
    forcegp::io::RunConfig cfg = forcegp::io::parse_config_file(config_path);
    if (std::string(log_level()) == "debug") cfg.training.verbose = true;

    const auto man = forcegp::io::run_experiment(
        cfg, output_dir.empty() ? std::filesystem::path{} : std::filesystem::path(output_dir));

    if (std::string(log_level()) != "quiet") {
        const std::string dir = output_dir.empty() ? cfg.output_dir : output_dir;
        std::cout << "experiment: " << man.experiment << "\n"
                  << "outputs:    " << man.outputs.size() << " files + manifest.json in " << dir
                  << "\n"
                  << "config:     " << man.config_hash << "\n";
        for (const auto& note : man.notes) std::cout << "note:       " << note << "\n";
    }
    return 0;
}

int validate_command(const std::string& config_path) {
    const forcegp::io::RunConfig cfg = forcegp::io::parse_config_file(config_path);
    std::cout << "OK: " << forcegp::io::to_string(cfg.experiment) << " (seed " << cfg.seed
              << ")\n";
    return 0;
}

int ingest_command(const std::string& csv_path) {
    const forcegp::MeasurementSet set = forcegp::io::ingest_csv(csv_path);
    std::cout << "OK: " << set.total_count() << " points";
    for (forcegp::ResponseType t : forcegp::kResponseTypes)
        if (set.has(t)) std::cout << " " << forcegp::to_string(t) << "=" << set.count(t);
    std::cout << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"forcegp: latent force reconstruction for harmonic oscillators"};
    app.set_version_flag("--version", forcegp::kVersion);
    app.require_subcommand(1);

    std::string config_path, output_dir, csv_path;
    bool check_only = false;

    auto* run = app.add_subcommand("run", "execute an experiment configuration");
    run->add_option("config", config_path, "path to the run configuration (JSON with comments)")
        ->required();
    run->add_option("--output", output_dir, "override the configured output directory");

    auto* validate = app.add_subcommand("validate", "schema-check a configuration and exit");
    validate->add_option("config", config_path, "path to the run configuration")->required();

    auto* ingest = app.add_subcommand("ingest", "check an external measurement CSV");
    ingest->add_flag("--check", check_only, "parse and report, write nothing");
    ingest->add_option("csv", csv_path, "path to the measurement CSV")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (run->parsed()) return run_command(config_path, output_dir);
        if (validate->parsed()) return validate_command(config_path);
        if (ingest->parsed()) return ingest_command(csv_path);
    } catch (const forcegp::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const forcegp::IoError& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return 4;
    } catch (const forcegp::NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
