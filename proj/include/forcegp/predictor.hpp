#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "forcegp/detail/random.hpp"
#include "forcegp/errors.hpp"
#include "forcegp/gp_core.hpp"
#include "forcegp/trainer.hpp"

namespace forcegp {

/// Gaussian posterior of a latent quantity on a prediction grid.
struct ForcePosterior {
    Eigen::VectorXd times;
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;     ///< symmetric, PSD up to clamped roundoff
    Eigen::VectorXd stddev;  ///< sqrt of the clamped diagonal

    Eigen::VectorXd lower95() const { return mean - 1.96 * stddev; }
    Eigen::VectorXd upper95() const { return mean + 1.96 * stddev; }
};

namespace detail {

/// Clamps slightly negative posterior variances to zero. Anything below
/// -1e-8 * max(diag) indicates a genuine defect and raises an error.
inline void clamp_posterior(ForcePosterior& post) {
    const Eigen::Index m = post.cov.rows();
    post.stddev.resize(m);
    const double scale = std::max(post.cov.diagonal().maxCoeff(), 0.0);
    const double tol = 1e-8 * scale;
    for (Eigen::Index i = 0; i < m; ++i) {
        double v = post.cov(i, i);
        if (v < -tol)
            throw NumericalError("posterior variance " + std::to_string(v) + " at index " +
                                 std::to_string(i) + " is below the roundoff tolerance");
        if (v < 0.0) {
            v = 0.0;
            post.cov(i, i) = 0.0;
        }
        post.stddev[i] = std::sqrt(v);
    }
}

/// Shared conditioning algebra: mean = Kx^T K^{-1} y, cov = Kxx - Kx^T K^{-1} Kx,
/// where Kx is (training x prediction).
inline ForcePosterior condition(const TrainedModel& model, Eigen::VectorXd times,
                                const Eigen::MatrixXd& cross, Eigen::MatrixXd prior) {
    ForcePosterior post;
    post.times = std::move(times);
    if (model.data.total_count() == 0) {
        post.mean = Eigen::VectorXd::Zero(post.times.size());
        post.cov = std::move(prior);
    } else {
        post.mean = cross.transpose() * model.alpha;
        const Eigen::MatrixXd kinv_cross = model.factored.solve(cross);
        post.cov = prior - cross.transpose() * kinv_cross;
        // Symmetrize away solver roundoff.
        post.cov = 0.5 * (post.cov + post.cov.transpose()).eval();
    }
    clamp_posterior(post);
    return post;
}

}  // namespace detail

/// Posterior of the latent force at arbitrary prediction times (inside or
/// outside the training span).
inline ForcePosterior predict_force(const TrainedModel& model, const Eigen::VectorXd& times) {
    for (Eigen::Index i = 0; i < times.size(); ++i)
        if (!std::isfinite(times[i]))
            throw ConfigError("predict_force: prediction times must be finite");

    const Eigen::Index n = model.data.total_count();
    const Eigen::Index m = times.size();

    Eigen::MatrixXd cross(n, m);
    for (ResponseType t : kResponseTypes) {
        if (!model.data.has(t)) continue;
        const auto& s = model.data.series(t);
        const Eigen::Index o = model.data.offset(t);
        for (Eigen::Index i = 0; i < s.times.size(); ++i)
            for (Eigen::Index j = 0; j < m; ++j)
                cross(o + i, j) =
                    force_response_kernel(model.osc, model.theta.kernel, t, times[j], s.times[i]);
    }

    Eigen::MatrixXd prior(m, m);
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = i; j < m; ++j) {
            const double v = force_force_kernel(model.osc, model.theta.kernel, times[i], times[j]);
            prior(i, j) = v;
            prior(j, i) = v;
        }

    return detail::condition(model, times, cross, std::move(prior));
}

/// Posterior of a response quantity (smoothing/interpolation of the data, or
/// differentiation/integration across types) with the same conditioning.
inline ForcePosterior predict_response(const TrainedModel& model, const Eigen::VectorXd& times,
                                       ResponseType out) {
    for (Eigen::Index i = 0; i < times.size(); ++i)
        if (!std::isfinite(times[i]))
            throw ConfigError("predict_response: prediction times must be finite");

    const Eigen::Index n = model.data.total_count();
    const Eigen::Index m = times.size();

    Eigen::MatrixXd cross(n, m);
    for (ResponseType t : kResponseTypes) {
        if (!model.data.has(t)) continue;
        const auto& s = model.data.series(t);
        const Eigen::Index o = model.data.offset(t);
        for (Eigen::Index i = 0; i < s.times.size(); ++i)
            for (Eigen::Index j = 0; j < m; ++j)
                cross(o + i, j) =
                    response_kernel(model.theta.kernel, t, out, s.times[i], times[j]);
    }

    Eigen::MatrixXd prior(m, m);
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = i; j < m; ++j) {
            const double v = response_kernel(model.theta.kernel, out, out, times[i], times[j]);
            prior(i, j) = v;
            prior(j, i) = v;
        }

    return detail::condition(model, times, cross, std::move(prior));
}

/// Draws from N(mean, cov); one sample per row. Deterministic per seed.
inline Eigen::MatrixXd sample_posterior(const ForcePosterior& post, int n_samples,
                                        std::uint64_t seed) {
    if (n_samples < 1) throw ConfigError("sample_posterior: n_samples must be >= 1");
    const Eigen::Index m = post.mean.size();
    Eigen::MatrixXd samples(n_samples, m);

    const double scale = post.cov.size() == 0 ? 0.0 : post.cov.diagonal().maxCoeff();
    if (scale <= 0.0) {
        for (int s = 0; s < n_samples; ++s) samples.row(s) = post.mean.transpose();
        return samples;
    }

    const FactoredCovariance f = factorize(post.cov);  // jitter ladder applies
    std::mt19937_64 rng = detail::make_engine(seed, 0);
    detail::NormalDraw normal;
    Eigen::VectorXd z(m);
    for (int s = 0; s < n_samples; ++s) {
        for (Eigen::Index i = 0; i < m; ++i) z[i] = normal(rng);
        samples.row(s) =
            (post.mean + f.lower().triangularView<Eigen::Lower>() * z).transpose();
    }
    return samples;
}

/// Linear combination of independent per-mode posteriors with mode-shape
/// ordinates: mean = sum(phi_j mu_j), var = sum(phi_j^2 sigma_j^2).
/// Cross-mode covariances are taken as zero (modes are trained separately).
inline ForcePosterior superpose_modal(std::span<const ForcePosterior> modes,
                                      std::span<const double> shape_ordinates) {
    if (modes.empty()) throw ConfigError("superpose_modal: need at least one mode");
    if (modes.size() != shape_ordinates.size())
        throw ConfigError("superpose_modal: one shape ordinate per mode required");

    const Eigen::VectorXd& t0 = modes[0].times;
    for (const auto& p : modes) {
        if (p.times.size() != t0.size() || (p.times - t0).lpNorm<Eigen::Infinity>() != 0.0)
            throw ConfigError("superpose_modal: prediction grids must match exactly");
    }

    ForcePosterior out;
    out.times = t0;
    out.mean = Eigen::VectorXd::Zero(t0.size());
    out.cov = Eigen::MatrixXd::Zero(t0.size(), t0.size());
    for (std::size_t j = 0; j < modes.size(); ++j) {
        const double phi = shape_ordinates[j];
        out.mean += phi * modes[j].mean;
        out.cov += (phi * phi) * modes[j].cov;
    }
    detail::clamp_posterior(out);
    return out;
}

}  // namespace forcegp
