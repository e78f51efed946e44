#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include "forcegp/detail/random.hpp"
#include "forcegp/detail/rk4.hpp"
#include "forcegp/errors.hpp"
#include "forcegp/oscillator.hpp"

namespace forcegp {

/// Dense polynomial with ascending coefficients; evaluated by Horner.
struct Polynomial {
    std::vector<double> coeffs;  ///< c0 + c1 x + c2 x^2 + ...

    double operator()(double x) const {
        double r = 0.0;
        for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) r = r * x + *it;
        return r;
    }

    double derivative(double x) const {
        double r = 0.0;
        for (std::size_t i = coeffs.size(); i-- > 1;)
            r = r * x + static_cast<double>(i) * coeffs[i];
        return r;
    }
};

enum class ForceComponent { drag, lift, moment };

inline const char* to_string(ForceComponent c) {
    switch (c) {
        case ForceComponent::drag: return "drag";
        case ForceComponent::lift: return "lift";
        case ForceComponent::moment: return "moment";
    }
    return "?";
}

/// How wind-axis forces (F_D along the relative wind, F_L perpendicular)
/// map onto deck drag/lift. `as_published` keeps the sign pattern
/// D = F_L sin(phi) - F_D cos(phi); `rotated` uses the plain rotation
/// D = F_D cos(phi) + F_L sin(phi). Lift and moment agree in both.
enum class DragConvention { as_published, rotated };

/// Deck section geometry, static coefficient curves, and aerodynamic centres.
struct SectionAeroParams {
    double chord = 31.0;        ///< B (m)
    double depth = 4.0;         ///< H (m)
    double air_density = 1.25;  ///< rho (kg/m^3)
    double alpha_static = 0.0;  ///< angle of attack at static equilibrium (rad)

    Polynomial c_drag;
    Polynomial c_lift;
    Polynomial c_moment;

    /// Coefficient polynomials are only trusted within +/- this angle (rad).
    double validity_angle = 10.0 * M_PI / 180.0;

    double centre_drag = 0.0;
    double centre_lift = 0.25;
    double centre_moment = 0.25;

    DragConvention convention = DragConvention::as_published;

    double centre(ForceComponent c) const {
        switch (c) {
            case ForceComponent::drag: return centre_drag;
            case ForceComponent::lift: return centre_lift;
            case ForceComponent::moment: return centre_moment;
        }
        return 0.0;
    }

    void validate() const {
        if (!(chord > 0.0 && depth > 0.0 && air_density > 0.0))
            throw ConfigError("SectionAeroParams: chord, depth, air density must be > 0");
        if (!(validity_angle > 0.0))
            throw ConfigError("SectionAeroParams: validity angle must be > 0");
    }
};

/// Synthesized turbulence record at one point (fully coherent spanwise).
struct WindField {
    double mean_speed = 0.0;  ///< U (m/s)
    Eigen::VectorXd times;
    Eigen::VectorXd u;  ///< horizontal fluctuation (m/s)
    Eigen::VectorXd w;  ///< vertical fluctuation (m/s)
    double intensity = 0.0;
    double length_u = 0.0;
    double length_w = 0.0;
    std::optional<std::string> warning;  ///< frequency-resolution caveat, if any

    double sample_rate() const {
        return times.size() > 1 ? 1.0 / (times[1] - times[0]) : 0.0;
    }
};

/// Instantaneous 3-DOF section motion.
struct SectionState {
    double p = 0.0;      ///< horizontal displacement (m)
    double h = 0.0;      ///< vertical displacement (m)
    double alpha = 0.0;  ///< rotation (rad)
    double p_dot = 0.0;
    double h_dot = 0.0;
    double alpha_dot = 0.0;
};

struct WindSample {
    double U = 0.0;
    double u = 0.0;
    double w = 0.0;
};

/// Section forces per unit length.
struct AeroForces {
    double drag = 0.0;    ///< N/m
    double lift = 0.0;    ///< N/m
    double moment = 0.0;  ///< N*m/m
};

struct FlowAngle {
    double alpha_e = 0.0;  ///< effective angle of attack (rad)
    double U_r = 0.0;      ///< resultant relative velocity (m/s)
    double phi = 0.0;      ///< dynamic inflow angle (rad)
};

/// One-sided von Karman PSD of the along-wind component.
inline double von_karman_u_psd(double f, double U, double sigma, double L) {
    const double x = f * L / U;
    return 4.0 * sigma * sigma * (L / U) / std::pow(1.0 + 70.8 * x * x, 5.0 / 6.0);
}

/// One-sided von Karman PSD of the vertical component.
inline double von_karman_w_psd(double f, double U, double sigma, double L) {
    const double x = f * L / U;
    return 4.0 * sigma * sigma * (L / U) * (1.0 + 755.2 * x * x) /
           std::pow(1.0 + 283.2 * x * x, 11.0 / 6.0);
}

namespace detail {

/// Spectral-representation synthesis: deterministic amplitudes from the
/// one-sided PSD, independent uniform phases, assembled via inverse FFT.
template <class PsdFn>
Eigen::VectorXd synthesize_spectral(PsdFn&& target_psd, Eigen::Index n, double f_s,
                                    std::mt19937_64& rng) {
    const double df = f_s / static_cast<double>(n);
    std::vector<std::complex<double>> spectrum(static_cast<std::size_t>(n),
                                               std::complex<double>(0.0, 0.0));
    for (Eigen::Index k = 1; k < n / 2; ++k) {
        const double f = static_cast<double>(k) * df;
        const double amp = std::sqrt(2.0 * target_psd(f) * df);
        const double phase = detail::uniform(rng, 0.0, 2.0 * M_PI);
        const std::complex<double> c =
            0.5 * static_cast<double>(n) * amp * std::exp(std::complex<double>(0.0, phase));
        spectrum[static_cast<std::size_t>(k)] = c;
        spectrum[static_cast<std::size_t>(n - k)] = std::conj(c);
    }
    Eigen::FFT<double> fft;
    std::vector<double> series;
    fft.inv(series, spectrum);
    return Eigen::Map<Eigen::VectorXd>(series.data(), n);
}

}  // namespace detail

/// Generates zero-mean stationary turbulence with sigma_u = sigma_w = I * U
/// and independent components; deterministic per seed.
inline WindField generate_wind(double U, double intensity, double L_u, double L_w,
                               double duration, double f_s, std::uint64_t seed) {
    if (!(U > 0.0 && L_u > 0.0 && L_w > 0.0 && duration > 0.0 && f_s > 0.0))
        throw ConfigError("generate_wind: U, L_u, L_w, duration, f_s must be > 0");
    if (intensity < 0.0) throw ConfigError("generate_wind: intensity must be >= 0");
    const double count = duration * f_s;
    const auto n = static_cast<Eigen::Index>(std::llround(count));
    if (n < 4 || std::abs(count - static_cast<double>(n)) > 1e-9 * count)
        throw ConfigError("generate_wind: duration * f_s must be an integer sample count");

    WindField wf;
    wf.mean_speed = U;
    wf.intensity = intensity;
    wf.length_u = L_u;
    wf.length_w = L_w;
    wf.times = Eigen::VectorXd::LinSpaced(n, 0.0, static_cast<double>(n - 1) / f_s);
    if (duration < 10.0 * L_u / U)
        wf.warning = "duration " + std::to_string(duration) +
                     " s is shorter than 10 L_u / U = " + std::to_string(10.0 * L_u / U) +
                     " s; the lowest turbulence scales are poorly resolved";

    const double sigma = intensity * U;
    if (sigma == 0.0) {
        wf.u = Eigen::VectorXd::Zero(n);
        wf.w = Eigen::VectorXd::Zero(n);
        return wf;
    }

    std::mt19937_64 rng_u = detail::make_engine(seed, 0);
    std::mt19937_64 rng_w = detail::make_engine(seed, 1);
    wf.u = detail::synthesize_spectral(
        [&](double f) { return von_karman_u_psd(f, U, sigma, L_u); }, n, f_s, rng_u);
    wf.w = detail::synthesize_spectral(
        [&](double f) { return von_karman_w_psd(f, U, sigma, L_w); }, n, f_s, rng_w);
    return wf;
}

/// Effective angle of attack, resultant velocity, and inflow angle for one
/// force component's aerodynamic centre.
inline FlowAngle effective_angle(const SectionAeroParams& params, const SectionState& state,
                                 const WindSample& wind, ForceComponent which) {
    const double horizontal = wind.U + wind.u - state.p_dot;
    if (std::abs(horizontal) < 1e-9)
        throw NumericalError("effective_angle: relative horizontal flow is degenerate "
                             "(stagnation)");
    const double vertical =
        wind.w + state.h_dot + params.centre(which) * params.chord * state.alpha_dot;
    FlowAngle out;
    out.phi = std::atan2(vertical, horizontal);
    out.alpha_e = params.alpha_static + state.alpha + out.phi;
    out.U_r = std::sqrt(horizontal * horizontal + vertical * vertical);
    return out;
}

/// Quasi-steady section forces: static coefficients evaluated at the
/// instantaneous effective angle and resultant velocity per component.
inline AeroForces quasi_steady_forces(const SectionAeroParams& params, const SectionState& state,
                                      const WindSample& wind) {
    const FlowAngle fd = effective_angle(params, state, wind, ForceComponent::drag);
    const FlowAngle fl = effective_angle(params, state, wind, ForceComponent::lift);
    const FlowAngle fm = effective_angle(params, state, wind, ForceComponent::moment);

    for (const auto& [angle, comp] :
         {std::pair{fd, ForceComponent::drag}, std::pair{fl, ForceComponent::lift},
          std::pair{fm, ForceComponent::moment}}) {
        if (std::abs(angle.alpha_e) > params.validity_angle)
            throw NumericalError(std::string("quasi_steady_forces: effective angle ") +
                                 std::to_string(angle.alpha_e) + " rad for " + to_string(comp) +
                                 " is outside the coefficient validity range");
    }

    const double q_d = 0.5 * params.air_density * fd.U_r * fd.U_r * params.chord;
    const double q_l = 0.5 * params.air_density * fl.U_r * fl.U_r * params.chord;
    const double q_m =
        0.5 * params.air_density * fm.U_r * fm.U_r * params.chord * params.chord;

    const double F_D_at_d = q_d * params.c_drag(fd.alpha_e);
    const double F_L_at_d = q_d * params.c_lift(fd.alpha_e);
    const double F_D_at_l = q_l * params.c_drag(fl.alpha_e);
    const double F_L_at_l = q_l * params.c_lift(fl.alpha_e);

    AeroForces out;
    if (params.convention == DragConvention::as_published)
        out.drag = F_L_at_d * std::sin(fd.phi) - F_D_at_d * std::cos(fd.phi);
    else
        out.drag = F_D_at_d * std::cos(fd.phi) + F_L_at_d * std::sin(fd.phi);
    out.lift = F_L_at_l * std::cos(fl.phi) - F_D_at_l * std::sin(fl.phi);
    out.moment = q_m * params.c_moment(fm.alpha_e);
    return out;
}

/// Participation of one mode in the section coordinates (p, h, alpha).
struct ModeParticipation {
    double p = 0.0;
    double h = 0.0;
    double alpha = 0.0;
};

struct BuffetingResult {
    std::vector<ResponseRecord> responses;     ///< modal coordinates per mode
    std::vector<ForcingSignal> modal_forces;   ///< generalized forces per mode
};

/// Marches the coupled aeroelastic system: section motion is rebuilt from
/// the modal coordinates, quasi-steady forces are projected back through the
/// same participation factors, and each modal oscillator advances under RK4
/// at the wind sample rate. Returns both the responses and the true modal
/// forces they were driven by.
inline BuffetingResult simulate_buffeting(const SectionAeroParams& params,
                                          std::span<const OscillatorParams> modes,
                                          std::span<const ModeParticipation> participation,
                                          const WindField& wind, double f_s,
                                          std::span<const double> q0 = {},
                                          std::span<const double> v0 = {}) {
    params.validate();
    const std::size_t n_modes = modes.size();
    if (n_modes == 0) throw ConfigError("simulate_buffeting: need at least one mode");
    if (participation.size() != n_modes)
        throw ConfigError("simulate_buffeting: one participation entry per mode required");
    if (!q0.empty() && q0.size() != n_modes)
        throw ConfigError("simulate_buffeting: initial displacement size mismatch");
    if (!v0.empty() && v0.size() != n_modes)
        throw ConfigError("simulate_buffeting: initial velocity size mismatch");

    const Eigen::Index n = wind.times.size();
    if (n < 2) throw ConfigError("simulate_buffeting: wind record too short");
    const double h_step = wind.times[1] - wind.times[0];
    if (std::abs(h_step * f_s - 1.0) > 1e-9)
        throw ConfigError("simulate_buffeting: wind record is not sampled at f_s");
    for (Eigen::Index i = 1; i < n; ++i)
        if (std::abs(wind.times[i] - wind.times[i - 1] - h_step) > 1e-9 * h_step)
            throw ConfigError("simulate_buffeting: wind grid must be uniform");

    const auto nm = static_cast<Eigen::Index>(n_modes);
    std::vector<double> c(n_modes), ks(n_modes), mass(n_modes);
    for (std::size_t j = 0; j < n_modes; ++j) {
        c[j] = modes[j].damping_coeff();
        ks[j] = modes[j].stiffness();
        mass[j] = modes[j].mass;
    }

    // state = [q_0..q_{m-1}, qdot_0..qdot_{m-1}]
    Eigen::VectorXd state = Eigen::VectorXd::Zero(2 * nm);
    for (std::size_t j = 0; j < q0.size(); ++j) state[static_cast<Eigen::Index>(j)] = q0[j];
    for (std::size_t j = 0; j < v0.size(); ++j) state[nm + static_cast<Eigen::Index>(j)] = v0[j];

    auto modal_forces_at = [&](const WindSample& ws, const Eigen::VectorXd& s,
                               Eigen::VectorXd& out) {
        SectionState sec;
        for (Eigen::Index j = 0; j < nm; ++j) {
            const auto& phi = participation[static_cast<std::size_t>(j)];
            sec.p += phi.p * s[j];
            sec.h += phi.h * s[j];
            sec.alpha += phi.alpha * s[j];
            sec.p_dot += phi.p * s[nm + j];
            sec.h_dot += phi.h * s[nm + j];
            sec.alpha_dot += phi.alpha * s[nm + j];
        }
        const AeroForces f = quasi_steady_forces(params, sec, ws);
        for (Eigen::Index j = 0; j < nm; ++j) {
            const auto& phi = participation[static_cast<std::size_t>(j)];
            out[j] = phi.p * f.drag + phi.h * f.lift + phi.alpha * f.moment;
        }
    };

    BuffetingResult result;
    result.responses.resize(n_modes);
    result.modal_forces.resize(n_modes);
    std::vector<Eigen::MatrixXd> series(n_modes, Eigen::MatrixXd(n, 4));  // q, qd, qdd, Q

    Eigen::VectorXd q_force(nm);
    // Static response scale per mode, frozen after an initial window; the
    // divergence guard compares against 1000x this value.
    std::vector<double> static_scale(n_modes, 0.0);
    const Eigen::Index freeze_after = std::max<Eigen::Index>(10, n / 4);
    for (std::size_t j = 0; j < n_modes; ++j)
        static_scale[j] = std::abs(state[static_cast<Eigen::Index>(j)]);

    auto record_sample = [&](Eigen::Index i) {
        const WindSample ws{wind.mean_speed, wind.u[i], wind.w[i]};
        modal_forces_at(ws, state, q_force);
        for (Eigen::Index j = 0; j < nm; ++j) {
            const auto ju = static_cast<std::size_t>(j);
            series[ju](i, 0) = state[j];
            series[ju](i, 1) = state[nm + j];
            series[ju](i, 2) = detail::modal_acceleration(q_force[j], c[ju], ks[ju], mass[ju],
                                                          state[j], state[nm + j]);
            series[ju](i, 3) = q_force[j];
            if (i <= freeze_after)
                static_scale[ju] = std::max(static_scale[ju], std::abs(q_force[j]) / ks[ju]);
        }
    };

    record_sample(0);
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
        const WindSample ws_sub[3] = {
            {wind.mean_speed, wind.u[i], wind.w[i]},
            {wind.mean_speed, detail::midpoint_sample(wind.u, i),
             detail::midpoint_sample(wind.w, i)},
            {wind.mean_speed, wind.u[i + 1], wind.w[i + 1]}};
        auto deriv = [&](int sub, const Eigen::VectorXd& s) {
            Eigen::VectorXd d(2 * nm);
            Eigen::VectorXd Q(nm);
            modal_forces_at(ws_sub[sub], s, Q);
            for (Eigen::Index j = 0; j < nm; ++j) {
                const auto ju = static_cast<std::size_t>(j);
                d[j] = s[nm + j];
                d[nm + j] =
                    detail::modal_acceleration(Q[j], c[ju], ks[ju], mass[ju], s[j], s[nm + j]);
            }
            return d;
        };
        detail::rk4_step(deriv, h_step, state);
        if (!state.allFinite())
            throw NumericalError("simulate_buffeting: diverged at step " +
                                 std::to_string(i + 1) + " (state is non-finite)");
        record_sample(i + 1);

        for (Eigen::Index j = 0; j < nm; ++j) {
            const auto ju = static_cast<std::size_t>(j);
            if (i > freeze_after && static_scale[ju] > 0.0 &&
                std::abs(state[j]) > 1e3 * static_scale[ju])
                throw NumericalError("simulate_buffeting: mode " + std::to_string(j) +
                                     " diverged at step " + std::to_string(i + 1) +
                                     " (|q| exceeds 1000x the static estimate)");
        }
    }

    for (std::size_t j = 0; j < n_modes; ++j) {
        ResponseRecord rec;
        rec.times = wind.times;
        rec.u = series[j].col(0);
        rec.u_dot = series[j].col(1);
        rec.u_ddot = series[j].col(2);
        result.responses[j] = std::move(rec);
        result.modal_forces[j] = ForcingSignal(wind.times, series[j].col(3));
    }
    return result;
}

}  // namespace forcegp
