#pragma once

// Continuous pulse shapes (Gaussian, root-raised-cosine) and their truncated,
// energy-normalized discrete representations on the T_s/M sampling grid.
// Time is measured in symbol durations throughout (T_s = 1).

#include "ftnq/errors.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ftnq {

enum class PulseFamily { Gaussian, RootRaisedCosine };

inline std::string_view to_string(PulseFamily f) {
    return f == PulseFamily::Gaussian ? "gaussian" : "rrc";
}

inline PulseFamily parse_pulse_family(std::string_view s) {
    if (s == "gaussian" || s == "gauss") return PulseFamily::Gaussian;
    if (s == "rrc" || s == "root_raised_cosine") return PulseFamily::RootRaisedCosine;
    throw ConfigError("unknown pulse family '" + std::string(s) + "' (expected gaussian|rrc)");
}

struct PulseSpec {
    PulseFamily family = PulseFamily::RootRaisedCosine;
    /// B_3dB*T_s for Gaussian pulses, roll-off beta for RRC.
    double shape = 0.22;
    /// T_x/T_s: time scale of the pulse relative to the symbol duration.
    double signaling_ratio = 1.0;
    int span_symbols = 9;
    int oversampling = 1;

    void validate() const {
        if (family == PulseFamily::Gaussian) {
            if (!(shape > 0.0) || !std::isfinite(shape))
                throw ParameterError("Gaussian B3dB*Ts must be > 0, got " + std::to_string(shape));
        } else if (!(shape >= 0.0 && shape <= 1.0)) {
            throw ParameterError("RRC roll-off must lie in [0,1], got " + std::to_string(shape));
        }
        if (!(signaling_ratio >= 1.0) || !std::isfinite(signaling_ratio))
            throw ParameterError("signaling ratio Tx/Ts must be >= 1, got " +
                                 std::to_string(signaling_ratio));
        if (span_symbols < 1 || span_symbols % 2 == 0)
            throw ParameterError("span_symbols must be a positive odd integer, got " +
                                 std::to_string(span_symbols));
        if (oversampling < 1)
            throw ParameterError("oversampling factor must be >= 1, got " +
                                 std::to_string(oversampling));
    }
};

/// Real filter sampled on a uniform grid; tap i sits at time origin + i*spacing.
struct FilterTaps {
    std::vector<double> taps;
    double spacing = 1.0;
    double origin = 0.0;

    std::size_t size() const noexcept { return taps.size(); }
    double time(std::size_t i) const noexcept { return origin + spacing * static_cast<double>(i); }
    double operator[](std::size_t i) const noexcept { return taps[i]; }
};

inline double tap_energy(std::span<const double> taps) {
    double e = 0.0;
    for (double t : taps) e += t * t;
    return e;
}

/// Largest |taps[i] - taps[n-1-i]|, i.e. deviation from even symmetry about the grid center.
inline double symmetry_defect(std::span<const double> taps) {
    double worst = 0.0;
    const std::size_t n = taps.size();
    for (std::size_t i = 0; i < n / 2; ++i)
        worst = std::max(worst, std::abs(taps[i] - taps[n - 1 - i]));
    return worst;
}

/// Gaussian pulse with 3 dB bandwidth b3db_ts (in units of 1/T_s), unit DC gain.
inline double eval_gaussian(double t, double b3db_ts) {
    if (!(b3db_ts > 0.0)) throw ParameterError("Gaussian B3dB*Ts must be > 0");
    using std::numbers::pi;
    const double k = std::sqrt(2.0) * pi / std::sqrt(std::numbers::ln2) * b3db_ts / 2.0;
    const double a = std::sqrt(2.0 * pi) / std::sqrt(std::numbers::ln2) * b3db_ts / 2.0;
    return a * std::exp(-(k * t) * (k * t));
}

/// Root-raised-cosine pulse with roll-off beta and time scale tx.
///
/// The removable singularities at t = 0 and |t| = tx/(4 beta) are replaced by
/// their limits whenever the general-branch denominator falls inside a 1e-9 guard band.
inline double eval_rrc(double t, double beta, double tx) {
    if (!(beta >= 0.0 && beta <= 1.0)) throw ParameterError("RRC roll-off must lie in [0,1]");
    if (!(tx > 0.0)) throw ParameterError("RRC time scale must be > 0");
    using std::numbers::pi;
    constexpr double guard = 1e-9;
    const double u = t / tx;
    if (std::abs(pi * u) < guard) return 1.0 - beta + 4.0 * beta / pi;
    const double q = 4.0 * beta * u;
    if (beta > 0.0 && std::abs(1.0 - q * q) < guard) {
        const double w = pi / (4.0 * beta);
        return beta / std::sqrt(2.0) *
               ((1.0 + 2.0 / pi) * std::sin(w) + (1.0 - 2.0 / pi) * std::cos(w));
    }
    return (std::sin(pi * u * (1.0 - beta)) + q * std::cos(pi * u * (1.0 + beta))) /
           (pi * u * (1.0 - q * q));
}

/// Value of the continuous pulse described by spec at time t (time axis stretched by T_x/T_s).
inline double eval_pulse(const PulseSpec& spec, double t) {
    if (spec.family == PulseFamily::Gaussian)
        return eval_gaussian(t / spec.signaling_ratio, spec.shape);
    return eval_rrc(t, spec.shape, spec.signaling_ratio);
}

inline void normalize_energy(std::vector<double>& taps) {
    const double e = tap_energy(taps);
    if (!(e > 0.0)) throw ParameterError("filter has zero energy after truncation");
    const double s = 1.0 / std::sqrt(e);
    for (double& t : taps) t *= s;
}

/// Samples the pulse on span_symbols*M taps spaced 1/M apart, centered on t = 0, and
/// rescales to unit energy. The grid is t_i = (i - (n-1)/2)/M, so for even n there is
/// no tap at t = 0 and the taps straddle it symmetrically.
inline FilterTaps discretize(const PulseSpec& spec) {
    spec.validate();
    const auto n = static_cast<std::size_t>(spec.span_symbols) * static_cast<std::size_t>(spec.oversampling);
    const double m = spec.oversampling;
    FilterTaps out;
    out.spacing = 1.0 / m;
    out.origin = -0.5 * static_cast<double>(n - 1) / m;
    out.taps.resize(n);
    // Fill symmetric pairs from one evaluation so the taps are exactly even.
    for (std::size_t i = 0; i < (n + 1) / 2; ++i) {
        const double t = (static_cast<double>(i) - 0.5 * static_cast<double>(n - 1)) / m;
        const double v = eval_pulse(spec, t);
        out.taps[i] = v;
        out.taps[n - 1 - i] = v;
    }
    normalize_energy(out.taps);
    return out;
}

/// Single unit tap at t = 0: the ideal (wideband) sampler.
inline FilterTaps delta_filter(int oversampling) {
    return FilterTaps{{1.0}, 1.0 / oversampling, 0.0};
}

inline std::vector<double> convolve(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) return {};
    std::vector<double> out(a.size() + b.size() - 1, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
    return out;
}

inline bool same_grid(const FilterTaps& a, const FilterTaps& b) {
    return std::abs(a.spacing - b.spacing) <= 1e-12 * std::max(a.spacing, b.spacing);
}

/// Combined response h = v * g on the common grid, truncated about its peak to
/// span_symbols symbols. Not renormalized: for unit-energy matched filters the
/// peak equals the pulse energy (1).
///
/// The window keeps span_symbols*M taps, or one more when that is needed to
/// keep it symmetric about the peak.
inline FilterTaps matched_combine(const FilterTaps& v, const FilterTaps& g, int span_symbols) {
    if (!same_grid(v, g)) throw ConfigError("matched_combine: filters are on different grids");
    if (span_symbols < 1) throw ParameterError("span_symbols must be >= 1");
    // Canonical operand order so that combine(v, g) == combine(g, v) bit for bit.
    const bool swap = g.taps.size() < v.taps.size() ||
                      (g.taps.size() == v.taps.size() && g.taps < v.taps);
    const auto full = swap ? convolve(g.taps, v.taps) : convolve(v.taps, g.taps);
    const double origin = v.origin + g.origin;

    std::size_t peak = 0;
    for (std::size_t i = 1; i < full.size(); ++i)
        if (std::abs(full[i]) > std::abs(full[peak]) + 1e-15) peak = i;

    const auto per_symbol = static_cast<std::size_t>(std::llround(1.0 / v.spacing));
    std::size_t want = static_cast<std::size_t>(span_symbols) * per_symbol;
    if (want % 2 == 0) ++want;
    const std::size_t half = want / 2;
    const std::size_t lo = peak >= half ? peak - half : 0;
    const std::size_t hi = std::min(full.size(), peak + half + 1);

    FilterTaps h;
    h.spacing = v.spacing;
    h.origin = origin + static_cast<double>(lo) * v.spacing;
    h.taps.assign(full.begin() + static_cast<std::ptrdiff_t>(lo), full.begin() + static_cast<std::ptrdiff_t>(hi));
    return h;
}

/// Grid refinement used when sampling the continuous-time combined response:
/// the smallest even K with M*K >= 16.
inline int refinement_factor(int oversampling) {
    int k = 2;
    while (oversampling * k < 16) k += 2;
    return k;
}

enum class ReceiveFilter { Matched, Delta };

inline std::string_view to_string(ReceiveFilter r) {
    return r == ReceiveFilter::Matched ? "matched" : "delta";
}

inline ReceiveFilter parse_receive_filter(std::string_view s) {
    if (s == "matched") return ReceiveFilter::Matched;
    if (s == "delta") return ReceiveFilter::Delta;
    throw ConfigError("unknown receive filter '" + std::string(s) + "' (expected matched|delta)");
}

/// Combined channel response h on the observation grid: span_symbols*M taps at
/// t_i = (i - (n-1)/2)/M, the same grid discretize() produces.
///
/// For a matched receiver, v and g are truncated and normalized on a K-times finer
/// grid, convolved there (a Riemann sum of the continuous convolution) and the result
/// is read back at the M-grid instants. Convolving directly on the M-grid would alias
/// pulses whose bandwidth exceeds M/2. For a delta receiver h is just v.
inline FilterTaps combined_response(const PulseSpec& spec, ReceiveFilter receive) {
    spec.validate();
    if (receive == ReceiveFilter::Delta) return discretize(spec);

    const int k = refinement_factor(spec.oversampling);
    PulseSpec fine = spec;
    fine.oversampling = spec.oversampling * k;
    const FilterTaps vf = discretize(fine);
    const auto full = convolve(vf.taps, vf.taps);

    const auto n = static_cast<std::size_t>(spec.span_symbols) * static_cast<std::size_t>(spec.oversampling);
    const std::size_t nf = vf.size();
    // Fine index of M-grid time t_i: (nf-1) + k*i - k*(n-1)/2; k is even so this is integral.
    const std::size_t base = (nf - 1) - static_cast<std::size_t>(k) * (n - 1) / 2;

    FilterTaps h;
    h.spacing = 1.0 / spec.oversampling;
    h.origin = -0.5 * static_cast<double>(n - 1) * h.spacing;
    h.taps.resize(n);
    for (std::size_t i = 0; i < n; ++i) h.taps[i] = full[base + static_cast<std::size_t>(k) * i];
    return h;
}

/// One-sided frequency (in units of 1/T_s) where the magnitude response first drops
/// to 1/sqrt(2) of its DC value, from a dense evaluation of the tap spectrum.
inline double bandwidth_3db(const FilterTaps& f, int points_per_unit = 4096) {
    const double dc = [&] {
        double s = 0.0;
        for (double t : f.taps) s += t;
        return std::abs(s);
    }();
    if (!(dc > 0.0)) throw ParameterError("filter has no DC response");
    const double target = dc / std::sqrt(2.0);
    const double nyquist = 0.5 / f.spacing;
    const int steps = static_cast<int>(std::ceil(nyquist * points_per_unit));
    auto mag = [&](double freq) {
        std::complex<double> acc{0.0, 0.0};
        const double w = -2.0 * std::numbers::pi * freq;
        for (std::size_t i = 0; i < f.size(); ++i) acc += f.taps[i] * std::polar(1.0, w * f.time(i));
        return std::abs(acc);
    };
    double prev_f = 0.0, prev_m = dc;
    for (int s = 1; s <= steps; ++s) {
        const double freq = nyquist * s / steps;
        const double m = mag(freq);
        if (m <= target) {
            // Linear interpolation inside the crossing bin.
            return prev_f + (prev_m - target) / (prev_m - m) * (freq - prev_f);
        }
        prev_f = freq;
        prev_m = m;
    }
    return nyquist;
}

} // namespace ftnq
