#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <future>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "forcegp/detail/bfgs.hpp"
#include "forcegp/detail/random.hpp"
#include "forcegp/errors.hpp"
#include "forcegp/gp_core.hpp"

namespace forcegp {

/// How the noise parameter of one data type is handled during training.
struct NoiseTreatment {
    enum class Mode { optimize, fixed };
    Mode mode = Mode::optimize;
    double fixed_value = 0.0;  ///< used when mode == fixed (0 means noise-free)
};

/// Inclusive log-space sampling interval for one parameter's restarts.
struct LogRange {
    double lo;
    double hi;
};

struct TrainConfig {
    int restarts = 8;
    int max_iters = 200;
    double grad_tol = 1e-6;
    std::uint64_t seed = 0;
    /// Per data type; only consulted for types present in the training set.
    std::array<NoiseTreatment, 3> noise{};
    /// Optional overrides of the scale-derived initialization ranges.
    std::optional<LogRange> init_sigma_s;
    std::optional<LogRange> init_ell;
    std::optional<LogRange> init_noise;
    bool parallel_restarts = true;
    std::ostream* log = nullptr;  ///< per-iteration diagnostics when non-null

    NoiseTreatment& noise_for(ResponseType t) { return noise[static_cast<int>(t)]; }
    const NoiseTreatment& noise_for(ResponseType t) const {
        return noise[static_cast<int>(t)];
    }

    void validate() const {
        if (restarts < 1) throw ConfigError("TrainConfig: restarts must be >= 1");
        if (max_iters < 1) throw ConfigError("TrainConfig: max_iters must be >= 1");
        if (!(grad_tol > 0.0)) throw ConfigError("TrainConfig: grad_tol must be > 0");
        for (const auto& nt : noise)
            if (nt.mode == NoiseTreatment::Mode::fixed &&
                !(std::isfinite(nt.fixed_value) && nt.fixed_value >= 0.0))
                throw ConfigError("TrainConfig: fixed noise must be finite and >= 0");
    }
};

struct RestartSummary {
    int index = 0;
    double initial_value = 0.0;
    double final_value = -std::numeric_limits<double>::infinity();
    int iterations = 0;
    bool converged = false;
    bool failed = false;
};

struct TrainDiagnostics {
    std::vector<RestartSummary> restarts;
    int best_restart = -1;
    int iterations = 0;
    bool converged = false;
    double jitter_rel = 0.0;
};

/// A trained GP ready for prediction. Immutable; prediction is read-only.
/// Default-constructed instances are inert (no data, prior-only).
struct TrainedModel {
    Hyperparameters theta{KernelParams(1.0, 1.0)};
    OscillatorParams osc{1.0, 0.0, 1.0};
    MeasurementSet data;
    FactoredCovariance factored;
    Eigen::VectorXd alpha;  ///< K^{-1} y, cached for posterior means
    double log_likelihood = 0.0;
    TrainDiagnostics diagnostics;
};

namespace detail {

inline double sample_std(const Eigen::VectorXd& v) {
    if (v.size() < 2) return 0.0;
    const double mean = v.mean();
    const double ss = (v.array() - mean).square().sum() / static_cast<double>(v.size() - 1);
    return std::sqrt(std::max(ss, 0.0));
}

/// Median spacing of the pooled training times and the record span.
inline std::pair<double, double> time_scales(const MeasurementSet& data) {
    std::vector<double> all;
    for (ResponseType t : kResponseTypes) {
        if (!data.has(t)) continue;
        const auto& s = data.series(t);
        for (Eigen::Index i = 0; i < s.times.size(); ++i) all.push_back(s.times[i]);
    }
    std::sort(all.begin(), all.end());
    std::vector<double> gaps;
    for (std::size_t i = 1; i < all.size(); ++i)
        if (all[i] > all[i - 1]) gaps.push_back(all[i] - all[i - 1]);
    double dt_med = 1.0;
    if (!gaps.empty()) {
        std::nth_element(gaps.begin(), gaps.begin() + gaps.size() / 2, gaps.end());
        dt_med = gaps[gaps.size() / 2];
    }
    const double span = all.empty() ? 1.0 : std::max(all.back() - all.front(), dt_med);
    return {dt_med, span};
}

struct FreeLayout {
    std::vector<ParamId> params;             // [sigma_s, ell, free noises...]
    std::vector<ResponseType> free_noise;    // types whose noise is optimized
};

inline FreeLayout free_layout(const MeasurementSet& data, const TrainConfig& cfg) {
    FreeLayout fl;
    fl.params = {ParamId::sigma_s, ParamId::ell};
    for (ResponseType t : kResponseTypes) {
        if (!data.has(t)) continue;
        if (cfg.noise_for(t).mode == NoiseTreatment::Mode::optimize) {
            fl.params.push_back(noise_param(t));
            fl.free_noise.push_back(t);
        }
    }
    return fl;
}

inline Hyperparameters theta_from_log(const Eigen::VectorXd& x, const MeasurementSet& data,
                                      const TrainConfig& cfg) {
    Hyperparameters theta(KernelParams(std::exp(x[0]), std::exp(x[1])));
    Eigen::Index k = 2;
    for (ResponseType t : kResponseTypes) {
        if (!data.has(t)) continue;
        const auto& nt = cfg.noise_for(t);
        if (nt.mode == NoiseTreatment::Mode::optimize)
            theta.noise_for(t) = std::exp(x[k++]);
        else
            theta.noise_for(t) = nt.fixed_value;
    }
    return theta;
}

}  // namespace detail

/// Maximizes the log marginal likelihood with multi-start BFGS in
/// log-parameter space. Deterministic for a given (data, cfg, seed);
/// restarts are independent and the best final likelihood wins, ties
/// broken by the lower restart index.
inline TrainedModel train(const OscillatorParams& osc, const MeasurementSet& data,
                          const TrainConfig& cfg) {
    cfg.validate();
    data.validate();

    const auto fl = detail::free_layout(data, cfg);
    const auto [dt_med, span] = detail::time_scales(data);

    // Scale-aware default initialization ranges (log-uniform sampling).
    const LogRange ell_range = cfg.init_ell ? *cfg.init_ell
                                            : LogRange{std::log(0.1 * dt_med), std::log(10.0 * span)};

    double disp_std = 0.0;
    if (data.has(ResponseType::disp))
        disp_std = detail::sample_std(data.series(ResponseType::disp).values);

    struct RestartOutcome {
        detail::BfgsResult bfgs;
        RestartSummary summary;
    };

    auto run_restart = [&](int r) {
        std::mt19937_64 rng = detail::make_engine(cfg.seed, static_cast<std::uint64_t>(r));

        const double ell0 = std::exp(detail::uniform(rng, ell_range.lo, ell_range.hi));

        // Amplitude scale: displacement std when available, otherwise the
        // velocity/acceleration std mapped through the candidate length scale.
        double s_hat = disp_std;
        if (s_hat <= 0.0 && data.has(ResponseType::vel))
            s_hat = detail::sample_std(data.series(ResponseType::vel).values) * ell0;
        if (s_hat <= 0.0 && data.has(ResponseType::acc))
            s_hat = detail::sample_std(data.series(ResponseType::acc).values) * ell0 * ell0;
        s_hat = std::max(s_hat, 1e-12);

        const LogRange sig_range = cfg.init_sigma_s
                                       ? *cfg.init_sigma_s
                                       : LogRange{std::log(0.1 * s_hat), std::log(10.0 * s_hat)};

        Eigen::VectorXd x0(static_cast<Eigen::Index>(fl.params.size()));
        x0[0] = detail::uniform(rng, sig_range.lo, sig_range.hi);
        x0[1] = std::log(ell0);
        Eigen::Index k = 2;
        for (ResponseType t : fl.free_noise) {
            const double sd = std::max(detail::sample_std(data.series(t).values), 1e-12);
            const LogRange nr = cfg.init_noise
                                    ? *cfg.init_noise
                                    : LogRange{std::log(1e-4 * sd), std::log(1.0 * sd)};
            x0[k++] = detail::uniform(rng, nr.lo, nr.hi);
        }

        auto value_of = [&](const Eigen::VectorXd& x) -> std::optional<double> {
            if (!x.allFinite() || x.lpNorm<Eigen::Infinity>() > 50.0) return std::nullopt;
            try {
                return log_marginal_value(detail::theta_from_log(x, data, cfg), data);
            } catch (const NumericalError&) {
                return std::nullopt;
            }
        };
        auto grad_of = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
            try {
                return log_marginal_likelihood(detail::theta_from_log(x, data, cfg), data,
                                               fl.params)
                    .grad;
            } catch (const NumericalError&) {
                return Eigen::VectorXd::Constant(x.size(),
                                                 std::numeric_limits<double>::quiet_NaN());
            }
        };

        detail::BfgsOptions opts;
        opts.max_iters = cfg.max_iters;
        opts.grad_tol = cfg.grad_tol;
        std::ostringstream log_lines;
        if (cfg.log) {
            opts.on_iteration = [&, r](int iter, double value, double gnorm) {
                log_lines << "restart=" << r << " iter=" << iter << " loglik=" << value
                          << " gradnorm=" << gnorm << '\n';
            };
        }

        RestartOutcome out;
        out.bfgs = detail::bfgs_maximize(value_of, grad_of, x0, opts);
        out.summary.index = r;
        out.summary.failed = out.bfgs.evaluation_failed;
        out.summary.final_value = out.bfgs.value;
        out.summary.iterations = out.bfgs.iterations;
        out.summary.converged = out.bfgs.converged;
        const auto v0 = value_of(x0);
        out.summary.initial_value = v0 ? *v0 : -std::numeric_limits<double>::infinity();
        if (cfg.log) {
            // Buffered per restart so parallel runs do not interleave lines.
            static std::mutex log_mutex;
            std::lock_guard<std::mutex> lock(log_mutex);
            *cfg.log << log_lines.str();
        }
        return out;
    };

    std::vector<RestartOutcome> outcomes(static_cast<std::size_t>(cfg.restarts));
    if (cfg.parallel_restarts && cfg.restarts > 1) {
        std::vector<std::future<RestartOutcome>> futs;
        futs.reserve(static_cast<std::size_t>(cfg.restarts));
        for (int r = 0; r < cfg.restarts; ++r)
            futs.push_back(std::async(std::launch::async, run_restart, r));
        for (int r = 0; r < cfg.restarts; ++r)
            outcomes[static_cast<std::size_t>(r)] = futs[static_cast<std::size_t>(r)].get();
    } else {
        for (int r = 0; r < cfg.restarts; ++r)
            outcomes[static_cast<std::size_t>(r)] = run_restart(r);
    }

    int best = -1;
    for (int r = 0; r < cfg.restarts; ++r) {
        const auto& o = outcomes[static_cast<std::size_t>(r)];
        if (o.summary.failed) continue;
        if (best < 0 || o.bfgs.value > outcomes[static_cast<std::size_t>(best)].bfgs.value)
            best = r;
    }
    if (best < 0) {
        std::ostringstream msg;
        msg << "train: every restart failed to evaluate the likelihood;";
        for (const auto& o : outcomes)
            msg << " [restart " << o.summary.index << ": failed]";
        throw NumericalError(msg.str());
    }

    const auto& win = outcomes[static_cast<std::size_t>(best)];
    TrainedModel model{detail::theta_from_log(win.bfgs.x, data, cfg), osc, data,
                       FactoredCovariance{}, Eigen::VectorXd{}, win.bfgs.value,
                       TrainDiagnostics{}};
    model.factored = factorize(assemble_covariance(model.theta, data));
    model.alpha = model.factored.solve(data.stacked_values());

    model.diagnostics.best_restart = best;
    model.diagnostics.iterations = win.bfgs.iterations;
    model.diagnostics.converged = win.bfgs.converged;
    model.diagnostics.jitter_rel = model.factored.jitter_rel();
    for (const auto& o : outcomes) model.diagnostics.restarts.push_back(o.summary);
    return model;
}

}  // namespace forcegp
