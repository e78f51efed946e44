#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "forcegp/io/experiments.hpp"
#include "forcegp/version.hpp"

namespace forcegp::io {

namespace fs = std::filesystem;

/// Everything needed to reproduce and audit one run.
struct ExperimentManifest {
    std::string config_hash;
    std::string version = kVersion;
    std::string experiment;
    std::uint64_t seed = 0;
    std::map<std::string, double> timings_s;
    std::vector<std::string> outputs;
    nlohmann::json models = nlohmann::json::array();
    nlohmann::json notes = nlohmann::json::array();
};

inline nlohmann::json model_summary(const TrainedModel& m, const std::string& label) {
    nlohmann::json j;
    j["label"] = label;
    j["sigma_s"] = m.theta.kernel.sigma_s;
    j["ell"] = m.theta.kernel.ell;
    for (ResponseType t : kResponseTypes)
        if (m.theta.noise_for(t)) j[std::string("noise_") + to_string(t)] = *m.theta.noise_for(t);
    j["log_likelihood"] = m.log_likelihood;
    j["best_restart"] = m.diagnostics.best_restart;
    j["iterations"] = m.diagnostics.iterations;
    j["converged"] = m.diagnostics.converged;
    j["jitter_rel"] = m.diagnostics.jitter_rel;
    return j;
}

/// Atomic write: the manifest appears complete or not at all.
inline void write_manifest(const fs::path& dir, const ExperimentManifest& m) {
    nlohmann::json j;
    j["config_hash"] = m.config_hash;
    j["version"] = m.version;
    j["experiment"] = m.experiment;
    j["seed"] = m.seed;
    j["timings_s"] = m.timings_s;
    j["outputs"] = m.outputs;
    j["models"] = m.models;
    j["notes"] = m.notes;

    const fs::path tmp = dir / "manifest.json.tmp";
    const fs::path final_path = dir / "manifest.json";
    {
        std::ofstream out(tmp);
        if (!out) throw IoError("manifest: cannot open " + tmp.string());
        out << j.dump(2) << '\n';
        if (!out) throw IoError("manifest: failed writing " + tmp.string());
    }
    fs::rename(tmp, final_path);
}

class StageTimer {
public:
    explicit StageTimer(std::map<std::string, double>& sink) : sink_(sink) {}

    template <class Fn>
    auto time(const std::string& stage, Fn&& fn) {
        const auto start = std::chrono::steady_clock::now();
        if constexpr (std::is_void_v<decltype(fn())>) {
            fn();
            sink_[stage] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                               .count();
        } else {
            auto result = fn();
            sink_[stage] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                               .count();
            return result;
        }
    }

private:
    std::map<std::string, double>& sink_;
};

namespace detail_emit {

/// tp_flag column: 1 where a grid time coincides with a training time.
inline Eigen::VectorXd tp_flags(const Eigen::VectorXd& grid, const MeasurementSet& data,
                                ResponseType type) {
    Eigen::VectorXd flags = Eigen::VectorXd::Zero(grid.size());
    if (!data.has(type)) return flags;
    const auto& t = data.series(type).times;
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < grid.size() && k < t.size(); ++i) {
        if (std::abs(grid[i] - t[k]) < 1e-9) {
            flags[i] = 1.0;
            ++k;
        } else if (t[k] < grid[i] - 1e-9) {
            ++k;
            --i;
        }
    }
    return flags;
}

/// Values of a uniformly sampled record at the grid times (grid must be a
/// sub-grid of the record, which the experiment layer guarantees).
inline Eigen::VectorXd at_grid(const Eigen::VectorXd& rec_times, const Eigen::VectorXd& values,
                               const Eigen::VectorXd& grid) {
    Eigen::VectorXd out(grid.size());
    const double h = rec_times[1] - rec_times[0];
    for (Eigen::Index i = 0; i < grid.size(); ++i) {
        const auto k = static_cast<Eigen::Index>(std::llround((grid[i] - rec_times[0]) / h));
        if (k < 0 || k >= rec_times.size() || std::abs(rec_times[k] - grid[i]) > 1e-6)
            throw NumericalError("emit: prediction grid is not aligned with the record");
        out[i] = values[k];
    }
    return out;
}

}  // namespace detail_emit

inline void emit_sdof(const fs::path& dir, const RunConfig& cfg, const SdofResult& res,
                      ExperimentManifest& man) {
    (void)cfg;
    auto emit = [&](const std::string& name, const CsvTable& t) {
        write_csv(dir / name, t);
        man.outputs.push_back(name);
    };

    emit("timeseries.csv",
         {{"simulated oscillator response and applied force"},
          {"t", "u_true", "u_dot_true", "u_ddot_true", "F_true"},
          {res.record.times, res.record.u, res.record.u_dot, res.record.u_ddot,
           res.forcing.values}});

    export_measurements(dir / "training_points.csv", res.training);
    man.outputs.push_back("training_points.csv");

    const Eigen::VectorXd& grid = res.force_posterior.times;
    emit("force_reconstruction.csv",
         {{"displacement overview and reconstructed force mean",
           "tp_flag = 1 where a displacement training point lies on the grid"},
          {"t", "u_true", "tp_flag", "F_true", "F_mean"},
          {grid, detail_emit::at_grid(res.record.times, res.record.u, grid),
           detail_emit::tp_flags(grid, res.training, ResponseType::disp), res.truth,
           res.force_posterior.mean}});

    emit("force_posterior.csv",
         {{"posterior of the latent force on the prediction grid"},
          {"t", "F_true", "F_mean", "F_std", "F_lo95", "F_hi95"},
          {grid, res.truth, res.force_posterior.mean, res.force_posterior.stddev,
           res.force_posterior.lower95(), res.force_posterior.upper95()}});

    Eigen::VectorXd metrics(3);
    metrics << res.rmse_norm, res.max_sigma, res.coverage95;
    emit("metrics.csv", {{"normalized force RMSE, max posterior sigma_F, 95% CI coverage"},
                         {"rmse_norm", "max_sigma_F", "coverage95"},
                         {metrics.segment(0, 1), metrics.segment(1, 1), metrics.segment(2, 1)}});

    man.models.push_back(model_summary(res.model, "sdof"));
}

inline void emit_snr_sweep(const fs::path& dir, const RunConfig& cfg, const SweepResult& res,
                           ExperimentManifest& man) {
    (void)cfg;
    const auto n = static_cast<Eigen::Index>(res.snr_values.size());
    Eigen::VectorXd snr(n), seeds(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        snr[i] = res.snr_values[static_cast<std::size_t>(i)];
        seeds[i] = static_cast<double>(res.rmse.rows());
    }
    write_csv(dir / "rmse_vs_snr.csv",
              {{"seed-ensemble normalized force RMSE per signal-to-noise ratio"},
               {"snr", "rmse_mean", "rmse_std", "n_seeds"},
               {snr, res.rmse_mean, res.rmse_std, seeds}});
    man.outputs.push_back("rmse_vs_snr.csv");

    CsvTable cells;
    cells.comments = {"per-seed cells of the sweep"};
    cells.columns = {"snr", "seed", "rmse"};
    const Eigen::Index total = res.rmse.size();
    Eigen::VectorXd c0(total), c1(total), c2(total);
    Eigen::Index r = 0;
    for (Eigen::Index v = 0; v < res.rmse.cols(); ++v)
        for (Eigen::Index s = 0; s < res.rmse.rows(); ++s, ++r) {
            c0[r] = snr[v];
            c1[r] = static_cast<double>(s);
            c2[r] = res.rmse(s, v);
        }
    cells.data = {c0, c1, c2};
    write_csv(dir / "rmse_cells.csv", cells);
    man.outputs.push_back("rmse_cells.csv");
}

inline void emit_ablation(const fs::path& dir, const RunConfig& cfg, const AblationResult& res,
                          ExperimentManifest& man) {
    (void)cfg;
    const auto n = static_cast<Eigen::Index>(res.combos.size());
    Eigen::VectorXd id(n), nd(n), hd(n), hv(n), ha(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& combo = res.combos[static_cast<std::size_t>(i)];
        id[i] = static_cast<double>(i);
        nd[i] = static_cast<double>(combo.size());
        hd[i] = hv[i] = ha[i] = 0.0;
        for (ResponseType t : combo) {
            if (t == ResponseType::disp) hd[i] = 1.0;
            if (t == ResponseType::vel) hv[i] = 1.0;
            if (t == ResponseType::acc) ha[i] = 1.0;
        }
    }
    write_csv(dir / "rmse_vs_datatypes.csv",
              {{"seed-ensemble normalized force RMSE per training data-type combination",
                "has_* flags identify the combination"},
               {"combo_id", "n_types", "has_disp", "has_vel", "has_acc", "rmse_mean",
                "rmse_std"},
               {id, nd, hd, hv, ha, res.rmse_mean, res.rmse_std}});
    man.outputs.push_back("rmse_vs_datatypes.csv");
}

inline void emit_buffeting(const fs::path& dir, const RunConfig& cfg, const BuffetingRun& res,
                           ExperimentManifest& man) {
    auto emit = [&](const std::string& name, const CsvTable& t) {
        write_csv(dir / name, t);
        man.outputs.push_back(name);
    };

    emit("wind.csv", {{"synthesized turbulence record"},
                      {"t", "u", "w"},
                      {res.wind.times, res.wind.u, res.wind.w}});
    if (res.wind.warning) man.notes.push_back(*res.wind.warning);

    for (std::size_t j = 0; j < res.modes.size(); ++j) {
        const auto& mr = res.modes[j];
        const std::string stem = "mode" + std::to_string(j + 1);
        const Eigen::VectorXd& grid = mr.force_posterior.times;

        emit(stem + "_timeseries.csv",
             {{"modal response and true modal force"},
              {"t", "q_true", "q_dot_true", "q_ddot_true", "F_true"},
              {res.sim.responses[j].times, res.sim.responses[j].u, res.sim.responses[j].u_dot,
               res.sim.responses[j].u_ddot, res.sim.modal_forces[j].values}});

        export_measurements(dir / (stem + "_training.csv"), mr.training);
        man.outputs.push_back(stem + "_training.csv");

        emit(stem + "_force_posterior.csv",
             {{"force posterior with 95% interval",
               "tp_flag = 1 where a displacement training point lies on the grid"},
              {"t", "u_true", "tp_flag", "F_true", "F_mean", "F_lo95", "F_hi95"},
              {grid, res.sim.responses[j].u,
               detail_emit::tp_flags(grid, mr.training, ResponseType::disp), mr.force_truth,
               mr.force_posterior.mean, mr.force_posterior.lower95(),
               mr.force_posterior.upper95()}});

        emit(stem + "_psd.csv", {{"Welch PSD of the true and reconstructed modal force"},
                                 {"f", "S_FF_true", "S_FF_pred"},
                                 {mr.psd_truth.freq, mr.psd_truth.power,
                                  mr.psd_predicted.power}});

        man.models.push_back(model_summary(mr.model, cfg.modes[j].name));
    }

    emit("global_response.csv",
         {{"superposed response at the output location"},
          {"t", "u_true", "u_mean", "u_std", "u_lo95", "u_hi95"},
          {res.global_posterior.times, res.global_truth, res.global_posterior.mean,
           res.global_posterior.stddev, res.global_posterior.lower95(),
           res.global_posterior.upper95()}});

    const auto n = static_cast<Eigen::Index>(res.modes.size());
    Eigen::VectorXd idx(n), rm(n), cov(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        idx[j] = static_cast<double>(j + 1);
        rm[j] = res.modes[static_cast<std::size_t>(j)].rmse_norm;
        cov[j] = res.modes[static_cast<std::size_t>(j)].coverage95;
    }
    emit("rmse_per_mode.csv", {{"normalized modal force RMSE and 95% coverage per mode"},
                               {"mode", "rmse_norm", "coverage95"},
                               {idx, rm, cov}});
}

inline void emit_reconstruct(const fs::path& dir, const RunConfig& cfg,
                             const ReconstructResult& res, ExperimentManifest& man) {
    (void)cfg;
    auto emit = [&](const std::string& name, const CsvTable& t) {
        write_csv(dir / name, t);
        man.outputs.push_back(name);
    };
    emit("force_posterior.csv",
         {{"posterior of the latent force reconstructed from the supplied measurements"},
          {"t", "F_mean", "F_std", "F_lo95", "F_hi95"},
          {res.grid, res.force_posterior.mean, res.force_posterior.stddev,
           res.force_posterior.lower95(), res.force_posterior.upper95()}});
    for (const auto& [type, post] : res.response_posteriors) {
        emit(std::string(to_string(type)) + "_posterior.csv",
             {{"smoothed response posterior"},
              {"t", "mean", "std", "lo95", "hi95"},
              {res.grid, post.mean, post.stddev, post.lower95(), post.upper95()}});
    }
    man.models.push_back(model_summary(res.model, "reconstruct"));
}

/// Executes a validated configuration end to end and writes the output tree.
inline ExperimentManifest run_experiment(const RunConfig& cfg,
                                         const fs::path& output_override = {}) {
    const fs::path dir = output_override.empty() ? fs::path(cfg.output_dir) : output_override;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("run: cannot create output directory " + dir.string());

    ExperimentManifest man;
    man.config_hash = config_hash(cfg);
    man.experiment = to_string(cfg.experiment);
    man.seed = cfg.seed;
    StageTimer timer(man.timings_s);

    switch (cfg.experiment) {
        case ExperimentKind::sdof: {
            const SdofResult res = timer.time("pipeline", [&] { return run_sdof(cfg); });
            timer.time("emit", [&] { emit_sdof(dir, cfg, res, man); });
            break;
        }
        case ExperimentKind::snr_sweep: {
            const SweepResult res = timer.time("pipeline", [&] { return run_snr_sweep(cfg); });
            timer.time("emit", [&] { emit_snr_sweep(dir, cfg, res, man); });
            break;
        }
        case ExperimentKind::datatype_ablation: {
            const AblationResult res = timer.time("pipeline", [&] { return run_ablation(cfg); });
            timer.time("emit", [&] { emit_ablation(dir, cfg, res, man); });
            break;
        }
        case ExperimentKind::buffeting: {
            const BuffetingRun res = timer.time("pipeline", [&] { return run_buffeting(cfg); });
            timer.time("emit", [&] { emit_buffeting(dir, cfg, res, man); });
            break;
        }
        case ExperimentKind::reconstruct_from_csv: {
            const ReconstructResult res =
                timer.time("pipeline", [&] { return run_reconstruct(cfg); });
            timer.time("emit", [&] { emit_reconstruct(dir, cfg, res, man); });
            break;
        }
    }

    write_manifest(dir, man);
    return man;
}

}  // namespace forcegp::io
