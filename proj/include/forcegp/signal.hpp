#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include "forcegp/detail/random.hpp"
#include "forcegp/errors.hpp"
#include "forcegp/gp_core.hpp"
#include "forcegp/oscillator.hpp"

namespace forcegp {

/// RMS-based signal-to-noise specification: noise std = RMS(signal) / snr.
struct NoiseSpec {
    double snr;
    std::uint64_t seed = 0;
};

struct NoisyResult {
    Eigen::VectorXd values;
    double realized_sigma = 0.0;  ///< the noise std actually applied
};

inline double rms(const Eigen::VectorXd& v) {
    if (v.size() == 0) return 0.0;
    return std::sqrt(v.squaredNorm() / static_cast<double>(v.size()));
}

/// Adds i.i.d. zero-mean Gaussian noise scaled to the requested SNR.
inline NoisyResult add_noise(const Eigen::VectorXd& series, const NoiseSpec& spec) {
    if (!(spec.snr > 0.0)) throw ConfigError("add_noise: snr must be > 0");
    const double a = rms(series);
    if (a <= 0.0) throw ConfigError("add_noise: series RMS is zero, SNR undefined");

    NoisyResult out;
    out.realized_sigma = a / spec.snr;
    out.values = series;
    std::mt19937_64 rng = detail::make_engine(spec.seed, 0);
    detail::NormalDraw normal;
    for (Eigen::Index i = 0; i < series.size(); ++i)
        out.values[i] += out.realized_sigma * normal(rng);
    return out;
}

/// Selection of training points from a simulated record: a regular interval
/// or an explicit index list, applied to a chosen set of data types within
/// an optional time window.
struct SamplingSpec {
    std::optional<double> interval;                  ///< s, multiple of the source step
    std::optional<std::vector<Eigen::Index>> indices;
    std::vector<ResponseType> types{ResponseType::disp, ResponseType::vel, ResponseType::acc};
    std::optional<std::pair<double, double>> window;  ///< [t0, t1] inclusive
};

/// Extracts a MeasurementSet from a response record. Omitted types stay
/// absent, so downstream hyperparameters exclude their noise terms.
inline MeasurementSet subsample(const ResponseRecord& rec, const SamplingSpec& spec) {
    if (rec.times.size() < 2) throw ConfigError("subsample: record too short");
    if (spec.interval && spec.indices)
        throw ConfigError("subsample: give either an interval or indices, not both");
    if (!spec.interval && !spec.indices)
        throw ConfigError("subsample: need an interval or an index list");
    if (spec.types.empty()) throw ConfigError("subsample: no data types selected");

    std::vector<Eigen::Index> idx;
    if (spec.indices) {
        idx = *spec.indices;
        for (Eigen::Index i : idx)
            if (i < 0 || i >= rec.times.size())
                throw ConfigError("subsample: index " + std::to_string(i) + " out of range");
    } else {
        const double h = rec.times[1] - rec.times[0];
        const double ratio = *spec.interval / h;
        const auto stride = static_cast<Eigen::Index>(std::llround(ratio));
        if (stride < 1 || std::abs(ratio - static_cast<double>(stride)) > 1e-9)
            throw ConfigError("subsample: interval " + std::to_string(*spec.interval) +
                              " is not a multiple of the source step " + std::to_string(h));
        for (Eigen::Index i = 0; i < rec.times.size(); i += stride) idx.push_back(i);
    }

    if (spec.window) {
        std::vector<Eigen::Index> kept;
        for (Eigen::Index i : idx)
            if (rec.times[i] >= spec.window->first - 1e-12 &&
                rec.times[i] <= spec.window->second + 1e-12)
                kept.push_back(i);
        idx = std::move(kept);
    }
    if (idx.size() < 2) throw ConfigError("subsample: selection leaves fewer than 2 points");

    Eigen::VectorXd t(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) t[static_cast<Eigen::Index>(k)] = rec.times[idx[k]];

    MeasurementSet set;
    for (ResponseType type : spec.types) {
        const Eigen::VectorXd& src = type == ResponseType::disp  ? rec.u
                                     : type == ResponseType::vel ? rec.u_dot
                                                                 : rec.u_ddot;
        Eigen::VectorXd v(t.size());
        for (std::size_t k = 0; k < idx.size(); ++k)
            v[static_cast<Eigen::Index>(k)] = src[idx[k]];
        set.set(type, t, v);
    }
    return set;
}

/// Root-mean-square error; with normalize, both series are scaled by
/// max |truth| first.
inline double rmse(const Eigen::VectorXd& predicted, const Eigen::VectorXd& truth,
                   bool normalize = false) {
    if (predicted.size() != truth.size())
        throw ConfigError("rmse: length mismatch (" + std::to_string(predicted.size()) + " vs " +
                          std::to_string(truth.size()) + ")");
    if (predicted.size() == 0) throw ConfigError("rmse: empty series");
    double scale = 1.0;
    if (normalize) {
        scale = truth.cwiseAbs().maxCoeff();
        if (scale <= 0.0) throw ConfigError("rmse: cannot normalize by an all-zero truth");
    }
    return std::sqrt((predicted - truth).squaredNorm() / static_cast<double>(truth.size())) /
           scale;
}

/// One-sided Welch power spectral density estimate.
struct Psd {
    Eigen::VectorXd freq;   ///< Hz, from 0 to f_s/2
    Eigen::VectorXd power;  ///< units^2 / Hz
};

/// Segment length giving about 8 Hann segments at 50% overlap.
inline Eigen::Index welch_default_segment(Eigen::Index n) {
    Eigen::Index seg = (2 * n) / 9;
    if (seg % 2 != 0) --seg;
    return std::max<Eigen::Index>(seg, 8);
}

/// Welch-averaged one-sided periodogram with a (periodic) Hann window.
/// Normalized so that the integral of the PSD over frequency matches the
/// series variance (checked by tests via Parseval).
inline Psd psd(const Eigen::VectorXd& series, double f_s, Eigen::Index segment_length,
               double overlap = 0.5) {
    const Eigen::Index n = series.size();
    if (segment_length < 4) throw ConfigError("psd: segment length must be >= 4");
    if (segment_length > n) throw ConfigError("psd: segment longer than series");
    if (!(f_s > 0.0)) throw ConfigError("psd: sample rate must be > 0");
    if (!(overlap >= 0.0 && overlap < 1.0)) throw ConfigError("psd: overlap must be in [0, 1)");

    const Eigen::Index L = segment_length;
    const auto step = std::max<Eigen::Index>(
        1, static_cast<Eigen::Index>(std::llround((1.0 - overlap) * static_cast<double>(L))));

    Eigen::VectorXd window(L);
    for (Eigen::Index i = 0; i < L; ++i)
        window[i] = 0.5 * (1.0 - std::cos(2.0 * M_PI * static_cast<double>(i) /
                                          static_cast<double>(L)));
    const double win_power = window.squaredNorm();

    const Eigen::Index n_bins = L / 2 + 1;
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(n_bins);
    Eigen::FFT<double> fft;
    std::vector<double> buf(static_cast<std::size_t>(L));
    std::vector<std::complex<double>> spec;

    Eigen::Index n_segments = 0;
    for (Eigen::Index start = 0; start + L <= n; start += step) {
        // Per-segment mean removal, so the estimate tracks the variance of
        // signals with a nonzero operating point.
        const double seg_mean = series.segment(start, L).mean();
        for (Eigen::Index i = 0; i < L; ++i)
            buf[static_cast<std::size_t>(i)] = (series[start + i] - seg_mean) * window[i];
        fft.fwd(spec, buf);
        for (Eigen::Index k = 0; k < n_bins; ++k)
            acc[k] += std::norm(spec[static_cast<std::size_t>(k)]);
        ++n_segments;
    }

    Psd out;
    out.freq.resize(n_bins);
    out.power.resize(n_bins);
    const double scale = 1.0 / (f_s * win_power * static_cast<double>(n_segments));
    for (Eigen::Index k = 0; k < n_bins; ++k) {
        out.freq[k] = static_cast<double>(k) * f_s / static_cast<double>(L);
        const bool interior = k != 0 && !(L % 2 == 0 && k == n_bins - 1);
        out.power[k] = acc[k] * scale * (interior ? 2.0 : 1.0);
    }
    return out;
}

inline Psd psd(const Eigen::VectorXd& series, double f_s) {
    return psd(series, f_s, welch_default_segment(series.size()));
}

/// Averages a PSD into logarithmically spaced frequency bands; used for
/// spectrum comparisons that should not be dominated by per-bin scatter.
struct BandedPsd {
    Eigen::VectorXd freq;   ///< band centers (geometric mean)
    Eigen::VectorXd power;  ///< mean power per band
};

inline BandedPsd band_average(const Psd& spectrum, double f_lo, double f_hi, int n_bands) {
    if (!(f_lo > 0.0 && f_hi > f_lo)) throw ConfigError("band_average: bad frequency range");
    if (n_bands < 1) throw ConfigError("band_average: need at least one band");
    const double ratio = std::pow(f_hi / f_lo, 1.0 / n_bands);
    std::vector<double> fc, pw;
    for (int b = 0; b < n_bands; ++b) {
        const double lo = f_lo * std::pow(ratio, b);
        const double hi = lo * ratio;
        double sum = 0.0;
        int count = 0;
        for (Eigen::Index k = 0; k < spectrum.freq.size(); ++k) {
            if (spectrum.freq[k] >= lo && spectrum.freq[k] < hi) {
                sum += spectrum.power[k];
                ++count;
            }
        }
        if (count > 0) {
            fc.push_back(std::sqrt(lo * hi));
            pw.push_back(sum / count);
        }
    }
    BandedPsd out;
    out.freq = Eigen::Map<Eigen::VectorXd>(fc.data(), static_cast<Eigen::Index>(fc.size()));
    out.power = Eigen::Map<Eigen::VectorXd>(pw.data(), static_cast<Eigen::Index>(pw.size()));
    return out;
}

}  // namespace forcegp
