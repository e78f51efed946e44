#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "forcegp/errors.hpp"
#include "forcegp/kernels.hpp"
#include "forcegp/oscillator.hpp"

namespace forcegp {

/// Full GP parameter set: kernel hyperparameters plus one noise standard
/// deviation per measured data type. A noise entry is present exactly when
/// that data type is part of the training set.
struct Hyperparameters {
    KernelParams kernel;
    std::array<std::optional<double>, 3> noise{};  ///< indexed by ResponseType

    explicit Hyperparameters(KernelParams kp) : kernel(kp) {}

    std::optional<double>& noise_for(ResponseType t) { return noise[static_cast<int>(t)]; }
    const std::optional<double>& noise_for(ResponseType t) const {
        return noise[static_cast<int>(t)];
    }

    void validate() const {
        for (ResponseType t : kResponseTypes) {
            const auto& n = noise_for(t);
            if (n && !(std::isfinite(*n) && *n >= 0.0))
                throw ConfigError(std::string("Hyperparameters: noise for ") + to_string(t) +
                                  " must be finite and >= 0");
        }
    }
};

/// Identifies one optimizable parameter of the GP.
enum class ParamId { sigma_s, ell, noise_disp, noise_vel, noise_acc };

inline const char* param_name(ParamId id) {
    switch (id) {
        case ParamId::sigma_s: return "sigma_s";
        case ParamId::ell: return "ell";
        case ParamId::noise_disp: return "noise_disp";
        case ParamId::noise_vel: return "noise_vel";
        case ParamId::noise_acc: return "noise_acc";
    }
    return "?";
}

inline ParamId noise_param(ResponseType t) {
    switch (t) {
        case ResponseType::disp: return ParamId::noise_disp;
        case ResponseType::vel: return ParamId::noise_vel;
        case ResponseType::acc: return ParamId::noise_acc;
    }
    throw std::invalid_argument("noise_param: bad response type");
}

/// Heterogeneous training data: per-type time stamps and values. Types may
/// be absent, grids may be irregular and need not coincide across types.
/// The stacked ordering is always [disp, vel, acc].
class MeasurementSet {
public:
    struct Series {
        Eigen::VectorXd times;
        Eigen::VectorXd values;
    };

    void set(ResponseType type, Eigen::VectorXd times, Eigen::VectorXd values) {
        if (times.size() != values.size())
            throw ConfigError(std::string("MeasurementSet: ") + to_string(type) +
                              " times/values length mismatch");
        for (Eigen::Index i = 0; i < times.size(); ++i) {
            if (!std::isfinite(times[i]) || !std::isfinite(values[i]))
                throw ConfigError(std::string("MeasurementSet: non-finite entry in ") +
                                  to_string(type) + " at index " + std::to_string(i));
            if (i > 0 && !(times[i] > times[i - 1]))
                throw ConfigError(std::string("MeasurementSet: ") + to_string(type) +
                                  " times must be strictly increasing (index " +
                                  std::to_string(i) + ")");
        }
        series_[static_cast<int>(type)] = Series{std::move(times), std::move(values)};
    }

    bool has(ResponseType type) const { return series_[static_cast<int>(type)].has_value(); }

    const Series& series(ResponseType type) const {
        const auto& s = series_[static_cast<int>(type)];
        if (!s)
            throw ConfigError(std::string("MeasurementSet: no ") + to_string(type) + " data");
        return *s;
    }

    Eigen::Index count(ResponseType type) const {
        const auto& s = series_[static_cast<int>(type)];
        return s ? s->times.size() : 0;
    }

    Eigen::Index total_count() const {
        Eigen::Index n = 0;
        for (ResponseType t : kResponseTypes) n += count(t);
        return n;
    }

    /// Offset of a type's block in the stacked ordering [disp, vel, acc].
    Eigen::Index offset(ResponseType type) const {
        Eigen::Index o = 0;
        for (ResponseType t : kResponseTypes) {
            if (t == type) return o;
            o += count(t);
        }
        return o;
    }

    std::vector<ResponseType> present() const {
        std::vector<ResponseType> out;
        for (ResponseType t : kResponseTypes)
            if (has(t)) out.push_back(t);
        return out;
    }

    Eigen::VectorXd stacked_values() const {
        Eigen::VectorXd y(total_count());
        Eigen::Index o = 0;
        for (ResponseType t : kResponseTypes) {
            if (!has(t)) continue;
            const auto& s = series(t);
            y.segment(o, s.values.size()) = s.values;
            o += s.values.size();
        }
        return y;
    }

    /// Requires at least one data type with two or more points.
    void validate() const {
        bool ok = false;
        for (ResponseType t : kResponseTypes)
            if (count(t) >= 2) ok = true;
        if (!ok)
            throw ConfigError("MeasurementSet: need at least one data type with >= 2 points");
    }

private:
    std::array<std::optional<Series>, 3> series_{};
};

namespace detail {

inline void check_theta_matches_data(const Hyperparameters& theta, const MeasurementSet& data) {
    theta.validate();
    for (ResponseType t : kResponseTypes) {
        const bool have_data = data.has(t);
        const bool have_noise = theta.noise_for(t).has_value();
        if (have_data != have_noise)
            throw ConfigError(std::string("Hyperparameters/data mismatch for ") + to_string(t) +
                              ": data " + (have_data ? "present" : "absent") + ", noise " +
                              (have_noise ? "present" : "absent"));
    }
}

}  // namespace detail

/// Joint covariance over all stacked measurements. Block (a, b) holds the
/// (a, b) derivative kernel; self blocks get the squared noise on their
/// diagonal. Built on the upper triangle and mirrored, so K == K^T exactly.
inline Eigen::MatrixXd assemble_covariance(const Hyperparameters& theta,
                                           const MeasurementSet& data) {
    detail::check_theta_matches_data(theta, data);

    const Eigen::Index n = data.total_count();
    if (n == 0) throw ConfigError("assemble_covariance: empty measurement set");
    Eigen::MatrixXd K(n, n);

    struct Entry {
        double time;
        int order;
        int type;
    };
    std::vector<Entry> entries;
    entries.reserve(static_cast<std::size_t>(n));
    for (ResponseType t : kResponseTypes) {
        if (!data.has(t)) continue;
        const auto& s = data.series(t);
        for (Eigen::Index i = 0; i < s.times.size(); ++i)
            entries.push_back({s.times[i], deriv_order(t), static_cast<int>(t)});
    }

    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i; j < n; ++j) {
            double v = se_kernel_deriv(theta.kernel,
                                       DerivOrder(entries[i].order, entries[j].order),
                                       entries[i].time, entries[j].time);
            if (i == j) {
                const double sn = *theta.noise[entries[i].type];
                v += sn * sn;
            }
            K(i, j) = v;
            K(j, i) = v;
        }
    }
    return K;
}

/// K plus its elementwise gradients with respect to sigma_s and ell
/// (noise gradients are diagonal and handled by the likelihood directly).
struct CovarianceWithGrads {
    Eigen::MatrixXd K;
    Eigen::MatrixXd d_sigma_s;
    Eigen::MatrixXd d_ell;
};

inline CovarianceWithGrads assemble_covariance_with_grads(const Hyperparameters& theta,
                                                          const MeasurementSet& data) {
    detail::check_theta_matches_data(theta, data);

    const Eigen::Index n = data.total_count();
    if (n == 0) throw ConfigError("assemble_covariance: empty measurement set");
    CovarianceWithGrads out;
    out.K.resize(n, n);
    out.d_sigma_s.resize(n, n);
    out.d_ell.resize(n, n);

    struct Entry {
        double time;
        int order;
        int type;
    };
    std::vector<Entry> entries;
    entries.reserve(static_cast<std::size_t>(n));
    for (ResponseType t : kResponseTypes) {
        if (!data.has(t)) continue;
        const auto& s = data.series(t);
        for (Eigen::Index i = 0; i < s.times.size(); ++i)
            entries.push_back({s.times[i], deriv_order(t), static_cast<int>(t)});
    }

    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i; j < n; ++j) {
            const DerivOrder ord(entries[i].order, entries[j].order);
            double v = se_kernel_deriv(theta.kernel, ord, entries[i].time, entries[j].time);
            const KernelGrad g =
                se_kernel_grad(theta.kernel, ord, entries[i].time, entries[j].time);
            if (i == j) {
                const double sn = *theta.noise[entries[i].type];
                v += sn * sn;
            }
            out.K(i, j) = v;
            out.K(j, i) = v;
            out.d_sigma_s(i, j) = g.d_sigma_s;
            out.d_sigma_s(j, i) = g.d_sigma_s;
            out.d_ell(i, j) = g.d_ell;
            out.d_ell(j, i) = g.d_ell;
        }
    }
    return out;
}

/// Relative jitter ladder tried when a Cholesky factorization fails.
inline constexpr double kJitterLadder[] = {0.0, 1e-10, 1e-8, 1e-6};

/// Cholesky factor of an assembled covariance together with its
/// log-determinant and the jitter that was needed (0 in the clean case).
/// Immutable after construction; safe to share across threads.
class FactoredCovariance {
public:
    FactoredCovariance() = default;

    static FactoredCovariance from_matrix(const Eigen::MatrixXd& K) {
        FactoredCovariance f;
        const Eigen::Index n = K.rows();
        if (K.cols() != n) throw ConfigError("factorize: matrix must be square");
        if (n == 0) return f;
        if (!K.allFinite())
            throw NumericalError("factorize: covariance contains non-finite entries");

        const double mean_diag = K.diagonal().mean();
        std::vector<double> tried;
        for (double eps : kJitterLadder) {
            tried.push_back(eps);
            Eigen::MatrixXd Kj = K;
            if (eps > 0.0) Kj.diagonal().array() += eps * mean_diag;
            Eigen::LLT<Eigen::MatrixXd> llt(Kj);
            if (llt.info() == Eigen::Success) {
                f.lower_ = llt.matrixL();
                f.log_det_ = 2.0 * f.lower_.diagonal().array().log().sum();
                f.jitter_rel_ = eps;
                f.jitter_abs_ = eps * mean_diag;
                if (!std::isfinite(f.log_det_))
                    throw NumericalError("factorize: non-finite log-determinant");
                return f;
            }
        }
        throw IllConditionedError(
            "factorize: Cholesky failed at every jitter level (max " +
                std::to_string(kJitterLadder[3]) + " * mean diagonal)",
            tried);
    }

    Eigen::Index size() const { return lower_.rows(); }
    const Eigen::MatrixXd& lower() const { return lower_; }
    double log_det() const { return log_det_; }
    double jitter_rel() const { return jitter_rel_; }
    double jitter_abs() const { return jitter_abs_; }

    /// Solves K x = b through the triangular factor.
    Eigen::MatrixXd solve(const Eigen::MatrixXd& b) const {
        if (size() == 0) return Eigen::MatrixXd(0, b.cols());
        Eigen::MatrixXd x = lower_.triangularView<Eigen::Lower>().solve(b);
        lower_.triangularView<Eigen::Lower>().adjoint().solveInPlace(x);
        return x;
    }

    Eigen::VectorXd solve(const Eigen::VectorXd& b) const {
        if (size() == 0) return Eigen::VectorXd(0);
        Eigen::VectorXd x = lower_.triangularView<Eigen::Lower>().solve(b);
        lower_.triangularView<Eigen::Lower>().adjoint().solveInPlace(x);
        return x;
    }

private:
    Eigen::MatrixXd lower_;
    double log_det_ = 0.0;
    double jitter_rel_ = 0.0;
    double jitter_abs_ = 0.0;
};

inline FactoredCovariance factorize(const Eigen::MatrixXd& K) {
    return FactoredCovariance::from_matrix(K);
}

/// Log marginal likelihood and its gradient in log-parameter space.
struct LikelihoodResult {
    double value = 0.0;
    Eigen::VectorXd grad;          ///< d value / d log(theta_i)
    std::vector<ParamId> params;   ///< ordering of grad entries
};

inline std::vector<ParamId> all_free_params(const MeasurementSet& data) {
    std::vector<ParamId> ids{ParamId::sigma_s, ParamId::ell};
    for (ResponseType t : kResponseTypes)
        if (data.has(t)) ids.push_back(noise_param(t));
    return ids;
}

/// Value-only evaluation (used heavily inside line searches).
inline double log_marginal_value(const Hyperparameters& theta, const MeasurementSet& data) {
    const Eigen::MatrixXd K = assemble_covariance(theta, data);
    const FactoredCovariance f = factorize(K);
    const Eigen::VectorXd y = data.stacked_values();
    const Eigen::VectorXd alpha = f.solve(y);
    const double n = static_cast<double>(y.size());
    return -0.5 * y.dot(alpha) - 0.5 * f.log_det() - 0.5 * n * std::log(2.0 * M_PI);
}

/// Value and gradient via the trace identity
///   d/d theta = 1/2 tr((alpha alpha^T - K^{-1}) dK/d theta),
/// chained into log space. Noise gradients reduce to block-diagonal sums.
inline LikelihoodResult log_marginal_likelihood(const Hyperparameters& theta,
                                                const MeasurementSet& data,
                                                const std::vector<ParamId>& free_params) {
    const CovarianceWithGrads cg = assemble_covariance_with_grads(theta, data);
    const FactoredCovariance f = factorize(cg.K);
    const Eigen::VectorXd y = data.stacked_values();
    const Eigen::VectorXd alpha = f.solve(y);
    const Eigen::Index n = y.size();

    LikelihoodResult res;
    res.params = free_params;
    res.value = -0.5 * y.dot(alpha) - 0.5 * f.log_det() -
                0.5 * static_cast<double>(n) * std::log(2.0 * M_PI);

    const Eigen::MatrixXd Kinv = f.solve(Eigen::MatrixXd(Eigen::MatrixXd::Identity(n, n)));
    const Eigen::MatrixXd A = alpha * alpha.transpose() - Kinv;

    res.grad.resize(static_cast<Eigen::Index>(free_params.size()));
    for (std::size_t p = 0; p < free_params.size(); ++p) {
        switch (free_params[p]) {
            case ParamId::sigma_s:
                res.grad[static_cast<Eigen::Index>(p)] =
                    0.5 * (A.array() * cg.d_sigma_s.array()).sum() * theta.kernel.sigma_s;
                break;
            case ParamId::ell:
                res.grad[static_cast<Eigen::Index>(p)] =
                    0.5 * (A.array() * cg.d_ell.array()).sum() * theta.kernel.ell;
                break;
            default: {
                const ResponseType t = [&] {
                    switch (free_params[p]) {
                        case ParamId::noise_disp: return ResponseType::disp;
                        case ParamId::noise_vel: return ResponseType::vel;
                        default: return ResponseType::acc;
                    }
                }();
                if (!data.has(t) || !theta.noise_for(t))
                    throw ConfigError(std::string("likelihood gradient: ") +
                                      param_name(free_params[p]) + " is not a free parameter");
                const double sn = *theta.noise_for(t);
                const Eigen::Index o = data.offset(t);
                const Eigen::Index c = data.count(t);
                // d value/d log sn = sn * tr(A * 2 sn I_block)/2 = sn^2 * sum diag
                res.grad[static_cast<Eigen::Index>(p)] =
                    sn * sn * A.diagonal().segment(o, c).sum();
                break;
            }
        }
    }
    return res;
}

inline LikelihoodResult log_marginal_likelihood(const Hyperparameters& theta,
                                                const MeasurementSet& data) {
    return log_marginal_likelihood(theta, data, all_free_params(data));
}

}  // namespace forcegp
