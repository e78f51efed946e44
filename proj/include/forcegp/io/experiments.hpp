#pragma once

#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <future>
#include <iostream>
#include <thread>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "forcegp/detail/random.hpp"
#include "forcegp/io/config.hpp"
#include "forcegp/io/csv.hpp"
#include "forcegp/predictor.hpp"
#include "forcegp/signal.hpp"
#include "forcegp/trainer.hpp"
#include "forcegp/windsim.hpp"

namespace forcegp::io {

inline ForcingSignal make_harmonic_forcing(const ForcingConfig& f) {
    const auto n = static_cast<Eigen::Index>(std::llround(f.duration_s * f.sample_rate_hz)) + 1;
    Eigen::VectorXd t =
        Eigen::VectorXd::LinSpaced(n, 0.0, static_cast<double>(n - 1) / f.sample_rate_hz);
    Eigen::VectorXd v(n);
    const double w = 2.0 * M_PI * f.frequency_hz;
    for (Eigen::Index i = 0; i < n; ++i) v[i] = f.amplitude * std::sin(w * t[i]);
    return ForcingSignal(std::move(t), std::move(v));
}

/// Training window: explicit window if given, otherwise everything after
/// the warm-up fraction of the record.
inline std::pair<double, double> training_window(const SamplingConfig& s, double t_begin,
                                                 double t_end) {
    if (s.window_s) return *s.window_s;
    return {t_begin + s.warmup_fraction * (t_end - t_begin), t_end};
}

/// Adds SNR-scaled noise to every response channel (whole-record RMS first,
/// selection afterwards). Each channel gets an independent sub-stream.
inline ResponseRecord corrupt_record(const ResponseRecord& rec, double snr,
                                     std::uint64_t seed) {
    ResponseRecord out = rec;
    out.u = add_noise(rec.u, {snr, forcegp::detail::mix_seed(seed, 11)}).values;
    out.u_dot = add_noise(rec.u_dot, {snr, forcegp::detail::mix_seed(seed, 12)}).values;
    out.u_ddot = add_noise(rec.u_ddot, {snr, forcegp::detail::mix_seed(seed, 13)}).values;
    return out;
}

/// Per-type mean removal; returns the removed means (zero for absent types).
inline std::array<double, 3> center_measurements(MeasurementSet& data) {
    std::array<double, 3> means{0.0, 0.0, 0.0};
    for (ResponseType t : kResponseTypes) {
        if (!data.has(t)) continue;
        const auto& s = data.series(t);
        const double m = s.values.mean();
        means[static_cast<int>(t)] = m;
        data.set(t, s.times, s.values.array() - m);
    }
    return means;
}

/// Constant force offset implied by the removed response means.
inline double force_offset_from_means(const OscillatorParams& osc,
                                      const std::array<double, 3>& means) {
    return osc.stiffness() * means[0] + osc.damping_coeff() * means[1] + osc.mass * means[2];
}

inline TrainConfig resolve_train_config(const TrainingConfig& t, std::uint64_t seed,
                                        std::ostream* log = nullptr) {
    TrainConfig cfg = t.to_train_config(seed);
    cfg.log = t.verbose ? (log ? log : &std::cerr) : nullptr;
    return cfg;
}

// ---------------------------------------------------------------------------
// SDOF reconstruction (single run; also the cell worker for sweeps)

struct SdofResult {
    ResponseRecord record;        ///< clean simulated response
    ForcingSignal forcing;        ///< applied force
    MeasurementSet training;      ///< possibly noisy, subsampled, centered
    std::array<double, 3> removed_means{};
    TrainedModel model;
    ForcePosterior force_posterior;  ///< mean shifted back to original units
    Eigen::VectorXd truth;           ///< true force on the prediction grid
    double rmse_norm = 0.0;
    double max_sigma = 0.0;
    double coverage95 = 0.0;
};

inline SdofResult run_sdof(const RunConfig& cfg) {
    const OscillatorParams osc = cfg.oscillator.params();
    SdofResult res;
    res.forcing = make_harmonic_forcing(cfg.forcing);
    res.record = simulate_response(osc, res.forcing, 0.0, 0.0);

    const auto [w0, w1] = training_window(cfg.sampling, 0.0, cfg.forcing.duration_s);
    const ResponseRecord observed =
        cfg.noise ? corrupt_record(res.record, cfg.noise->snr, cfg.seed) : res.record;

    SamplingSpec spec;
    spec.interval = cfg.sampling.interval_s;
    spec.types = cfg.sampling.types;
    spec.window = {{w0, w1}};
    res.training = subsample(observed, spec);
    if (cfg.detrend) res.removed_means = center_measurements(res.training);

    res.model = train(osc, res.training, resolve_train_config(cfg.training, cfg.seed));

    const auto m = static_cast<Eigen::Index>(std::floor((w1 - w0) * cfg.prediction.rate_hz)) + 1;
    Eigen::VectorXd grid =
        Eigen::VectorXd::LinSpaced(m, w0, w0 + static_cast<double>(m - 1) / cfg.prediction.rate_hz);
    res.force_posterior = predict_force(res.model, grid);
    const double offset = force_offset_from_means(osc, res.removed_means);
    res.force_posterior.mean.array() += offset;

    res.truth.resize(m);
    const double w = 2.0 * M_PI * cfg.forcing.frequency_hz;
    for (Eigen::Index i = 0; i < m; ++i)
        res.truth[i] = cfg.forcing.amplitude * std::sin(w * grid[i]);

    res.rmse_norm = rmse(res.force_posterior.mean, res.truth, true);
    res.max_sigma = res.force_posterior.stddev.maxCoeff();
    Eigen::Index inside = 0;
    for (Eigen::Index i = 0; i < m; ++i)
        if (std::abs(res.truth[i] - res.force_posterior.mean[i]) <=
            1.96 * res.force_posterior.stddev[i])
            ++inside;
    res.coverage95 = static_cast<double>(inside) / static_cast<double>(m);
    return res;
}

// ---------------------------------------------------------------------------
// SNR sweep and data-type ablation (seed ensembles over the same base record)

struct SweepResult {
    std::vector<double> snr_values;
    Eigen::MatrixXd rmse;  ///< (seed, snr)
    Eigen::VectorXd rmse_mean;
    Eigen::VectorXd rmse_std;
};

namespace detail_exp {

/// Runs one noisy training/prediction cell; shared by sweep and ablation.
inline double sweep_cell(const RunConfig& base, double snr,
                         const std::vector<ResponseType>& types, std::uint64_t cell_seed) {
    RunConfig cfg = base;
    cfg.noise = NoiseConfig{snr};
    cfg.sampling.types = types;
    cfg.seed = cell_seed;
    return run_sdof(cfg).rmse_norm;
}

template <class Fn>
void parallel_indexed(int count, Fn&& fn) {
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    std::vector<std::future<void>> futs;
    std::atomic<int> next{0};
    for (unsigned t = 0; t < std::min<unsigned>(hw, static_cast<unsigned>(count)); ++t) {
        futs.push_back(std::async(std::launch::async, [&] {
            for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) fn(i);
        }));
    }
    for (auto& f : futs) f.get();
}

}  // namespace detail_exp

inline SweepResult run_snr_sweep(const RunConfig& cfg) {
    SweepResult out;
    out.snr_values = cfg.snr_sweep.values;
    const int n_snr = static_cast<int>(out.snr_values.size());
    const int n_seeds = cfg.snr_sweep.seeds;
    out.rmse.resize(n_seeds, n_snr);

    detail_exp::parallel_indexed(n_snr * n_seeds, [&](int cell) {
        const int si = cell / n_snr;
        const int vi = cell % n_snr;
        const std::uint64_t cell_seed =
            forcegp::detail::mix_seed(cfg.seed, static_cast<std::uint64_t>(cell));
        out.rmse(si, vi) =
            detail_exp::sweep_cell(cfg, out.snr_values[static_cast<std::size_t>(vi)],
                                   cfg.sampling.types, cell_seed);
    });

    out.rmse_mean = out.rmse.colwise().mean();
    out.rmse_std.resize(n_snr);
    for (int v = 0; v < n_snr; ++v) {
        const double m = out.rmse_mean[v];
        out.rmse_std[v] = n_seeds > 1
                              ? std::sqrt((out.rmse.col(v).array() - m).square().sum() /
                                          (n_seeds - 1))
                              : 0.0;
    }
    return out;
}

struct AblationResult {
    std::vector<std::vector<ResponseType>> combos;
    Eigen::MatrixXd rmse;  ///< (seed, combo)
    Eigen::VectorXd rmse_mean;
    Eigen::VectorXd rmse_std;
};

inline AblationResult run_ablation(const RunConfig& cfg) {
    AblationResult out;
    out.combos = cfg.ablation.combos;
    const int n_combo = static_cast<int>(out.combos.size());
    const int n_seeds = cfg.ablation.seeds;
    out.rmse.resize(n_seeds, n_combo);

    detail_exp::parallel_indexed(n_combo * n_seeds, [&](int cell) {
        const int si = cell / n_combo;
        const int ci = cell % n_combo;
        // One noise realization per seed index: the same seed across combos,
        // so combos differ only in which channels are revealed.
        const std::uint64_t cell_seed =
            forcegp::detail::mix_seed(cfg.seed, 5000 + static_cast<std::uint64_t>(si));
        out.rmse(si, ci) = detail_exp::sweep_cell(
            cfg, cfg.ablation.snr, out.combos[static_cast<std::size_t>(ci)], cell_seed);
    });

    out.rmse_mean = out.rmse.colwise().mean();
    out.rmse_std.resize(n_combo);
    for (int c = 0; c < n_combo; ++c) {
        const double m = out.rmse_mean[c];
        out.rmse_std[c] = n_seeds > 1
                              ? std::sqrt((out.rmse.col(c).array() - m).square().sum() /
                                          (n_seeds - 1))
                              : 0.0;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Buffeting pipeline: wind -> coupled response -> per-mode reconstruction

struct ModeReconstruction {
    MeasurementSet training;
    std::array<double, 3> removed_means{};
    TrainedModel model;
    ForcePosterior force_posterior;   ///< shifted back to original units
    ForcePosterior disp_posterior;    ///< shifted back to original units
    Eigen::VectorXd force_truth;      ///< on the prediction grid
    double rmse_norm = 0.0;
    double coverage95 = 0.0;
    Psd psd_truth;
    Psd psd_predicted;
};

struct BuffetingRun {
    WindField wind;
    BuffetingResult sim;
    std::vector<ModeReconstruction> modes;
    ForcePosterior global_posterior;  ///< superposed vertical response at the output point
    Eigen::VectorXd global_truth;
    double global_rmse_norm = 0.0;
};

inline BuffetingRun run_buffeting(const RunConfig& cfg) {
    BuffetingRun out;
    out.wind = generate_wind(cfg.wind.mean_speed, cfg.wind.intensity, cfg.wind.length_u,
                             cfg.wind.length_w, cfg.wind.duration_s, cfg.wind.sample_rate_hz,
                             forcegp::detail::mix_seed(cfg.seed, 77));

    std::vector<OscillatorParams> oscs;
    std::vector<ModeParticipation> parts;
    for (const auto& m : cfg.modes) {
        oscs.push_back(m.params());
        parts.push_back(m.participation);
    }
    out.sim = simulate_buffeting(cfg.aero.params(), oscs, parts, out.wind,
                                 cfg.wind.sample_rate_hz);

    const Eigen::VectorXd& grid = out.wind.times;  // predictions on the full record
    const auto [w0, w1] = training_window(cfg.sampling, 0.0, cfg.wind.duration_s);

    out.modes.resize(cfg.modes.size());
    for (std::size_t j = 0; j < cfg.modes.size(); ++j) {
        ModeReconstruction& mr = out.modes[j];
        const OscillatorParams& osc = oscs[j];
        const std::uint64_t mode_seed =
            forcegp::detail::mix_seed(cfg.seed, 900 + static_cast<std::uint64_t>(j));

        const ResponseRecord observed =
            corrupt_record(out.sim.responses[j], cfg.noise->snr, mode_seed);

        SamplingSpec spec;
        spec.interval = cfg.sampling.interval_s;
        spec.types = cfg.sampling.types;
        spec.window = {{w0, w1}};
        mr.training = subsample(observed, spec);
        if (cfg.detrend) mr.removed_means = center_measurements(mr.training);

        mr.model = train(osc, mr.training, resolve_train_config(cfg.training, mode_seed));

        mr.force_posterior = predict_force(mr.model, grid);
        const double f_off = force_offset_from_means(osc, mr.removed_means);
        mr.force_posterior.mean.array() += f_off;

        mr.disp_posterior = predict_response(mr.model, grid, ResponseType::disp);
        mr.disp_posterior.mean.array() += mr.removed_means[0];

        mr.force_truth = out.sim.modal_forces[j].values;
        mr.rmse_norm = rmse(mr.force_posterior.mean, mr.force_truth, true);

        Eigen::Index inside = 0;
        for (Eigen::Index i = 0; i < grid.size(); ++i)
            if (std::abs(mr.force_truth[i] - mr.force_posterior.mean[i]) <=
                1.96 * mr.force_posterior.stddev[i])
                ++inside;
        mr.coverage95 = static_cast<double>(inside) / static_cast<double>(grid.size());

        mr.psd_truth = psd(mr.force_truth, cfg.wind.sample_rate_hz);
        mr.psd_predicted = psd(mr.force_posterior.mean, cfg.wind.sample_rate_hz);
    }

    // Global response at the output location: modal superposition of the
    // displacement posteriors with the user-supplied shape ordinates.
    std::vector<ForcePosterior> disp_posts;
    std::vector<double> shapes;
    for (std::size_t j = 0; j < cfg.modes.size(); ++j) {
        disp_posts.push_back(out.modes[j].disp_posterior);
        shapes.push_back(cfg.modes[j].shape_at_output);
    }
    out.global_posterior = superpose_modal(disp_posts, shapes);

    out.global_truth = Eigen::VectorXd::Zero(grid.size());
    for (std::size_t j = 0; j < cfg.modes.size(); ++j)
        out.global_truth += cfg.modes[j].shape_at_output * out.sim.responses[j].u;
    out.global_rmse_norm = rmse(out.global_posterior.mean, out.global_truth, true);
    return out;
}

// ---------------------------------------------------------------------------
// Truth-free reconstruction from externally supplied measurements

struct ReconstructResult {
    MeasurementSet data;
    std::array<double, 3> removed_means{};
    TrainedModel model;
    ForcePosterior force_posterior;
    std::vector<std::pair<ResponseType, ForcePosterior>> response_posteriors;
    Eigen::VectorXd grid;
};

inline ReconstructResult run_reconstruct(const RunConfig& cfg) {
    MeasurementColumns cols;
    cols.time_disp = cfg.reconstruct.time_disp;
    cols.disp = cfg.reconstruct.disp;
    cols.time_vel = cfg.reconstruct.time_vel;
    cols.vel = cfg.reconstruct.vel;
    cols.time_acc = cfg.reconstruct.time_acc;
    cols.acc = cfg.reconstruct.acc;

    ReconstructResult res;
    res.data = ingest_csv(cfg.reconstruct.csv, cols);
    res.data.validate();
    if (cfg.detrend) res.removed_means = center_measurements(res.data);

    const OscillatorParams osc = cfg.oscillator.params();
    res.model = train(osc, res.data, resolve_train_config(cfg.training, cfg.seed));

    double t0 = std::numeric_limits<double>::infinity(), t1 = -t0;
    for (ResponseType t : kResponseTypes) {
        if (!res.data.has(t)) continue;
        const auto& s = res.data.series(t);
        t0 = std::min(t0, s.times[0]);
        t1 = std::max(t1, s.times[s.times.size() - 1]);
    }
    const auto m = static_cast<Eigen::Index>(std::floor((t1 - t0) * cfg.prediction.rate_hz)) + 1;
    res.grid = Eigen::VectorXd::LinSpaced(m, t0, t0 + static_cast<double>(m - 1) /
                                                          cfg.prediction.rate_hz);

    res.force_posterior = predict_force(res.model, res.grid);
    res.force_posterior.mean.array() += force_offset_from_means(osc, res.removed_means);
    for (ResponseType t : kResponseTypes) {
        if (!res.data.has(t)) continue;
        ForcePosterior p = predict_response(res.model, res.grid, t);
        p.mean.array() += res.removed_means[static_cast<int>(t)];
        res.response_posteriors.emplace_back(t, std::move(p));
    }
    return res;
}

}  // namespace forcegp::io
