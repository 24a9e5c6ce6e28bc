#pragma once

// Discrete per-symbol observation model y_k = Q1[H U x + G n] for one real
// phase component of a coherent QAM link.

#include "ftnq/errors.hpp"
#include "ftnq/pulse_shaping.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ftnq {

/// Per-component amplitude set of a square QAM constellation.
struct ComponentAlphabet {
    std::string name;
    std::vector<double> levels;
    std::vector<double> priors;

    std::size_t size() const noexcept { return levels.size(); }

    double mean_energy() const {
        double e = 0.0;
        for (std::size_t i = 0; i < levels.size(); ++i) e += priors[i] * levels[i] * levels[i];
        return e;
    }

    void validate() const {
        if (levels.empty() || levels.size() != priors.size())
            throw ConfigError("alphabet '" + name + "': levels and priors must be non-empty and equal length");
        double total = 0.0;
        for (double p : priors) {
            if (!(p >= 0.0)) throw ConfigError("alphabet '" + name + "': negative prior");
            total += p;
        }
        if (std::abs(total - 1.0) > 1e-12) throw ConfigError("alphabet '" + name + "': priors do not sum to 1");
        for (std::size_t i = 1; i < levels.size(); ++i)
            if (!(levels[i] > levels[i - 1]))
                throw ConfigError("alphabet '" + name + "': levels must be distinct and ascending");
        for (std::size_t i = 0; i < levels.size(); ++i)
            if (std::abs(levels[i] + levels[levels.size() - 1 - i]) > 1e-15)
                throw ConfigError("alphabet '" + name + "': levels must be symmetric about 0");
        if (std::abs(mean_energy() - 0.5) > 1e-12)
            throw ConfigError("alphabet '" + name + "': mean per-component energy must be 1/2");
    }

    /// Index of the level equal to -levels[i].
    std::size_t mirror(std::size_t i) const noexcept { return levels.size() - 1 - i; }

    static ComponentAlphabet qam4() {
        const double a = 1.0 / std::sqrt(2.0);
        return {"4qam", {-a, a}, {0.5, 0.5}};
    }

    static ComponentAlphabet qam16() {
        const double a = 1.0 / std::sqrt(10.0);
        return {"16qam", {-3 * a, -a, a, 3 * a}, {0.25, 0.25, 0.25, 0.25}};
    }

    /// Only square QAM is accepted: the I/Q doubling of the rate relies on it.
    static ComponentAlphabet from_name(std::string_view n) {
        if (n == "4qam" || n == "qpsk") return qam4();
        if (n == "16qam") return qam16();
        throw ConfigError("unknown alphabet '" + std::string(n) + "' (expected 4qam|16qam)");
    }
};

/// The M sign bits of one symbol period, each -1 or +1.
struct ObservationVector {
    std::vector<int> bits;

    /// Canonical index: bit m (0-based) set when sample m quantized to +1.
    std::uint32_t index() const noexcept {
        std::uint32_t idx = 0;
        for (std::size_t m = 0; m < bits.size(); ++m)
            if (bits[m] > 0) idx |= 1u << m;
        return idx;
    }

    static ObservationVector from_index(std::uint32_t idx, int m) {
        ObservationVector y;
        y.bits.resize(static_cast<std::size_t>(m));
        for (int i = 0; i < m; ++i) y.bits[static_cast<std::size_t>(i)] = (idx >> i) & 1u ? 1 : -1;
        return y;
    }
};

/// Index of the observation with every bit negated.
inline std::uint32_t flip_index(std::uint32_t idx, int m) noexcept {
    return ~idx & ((1u << m) - 1u);
}

/// Sign quantizer; zero maps to +1.
inline ObservationVector quantize_1bit(std::span<const double> z) {
    ObservationVector y;
    y.bits.reserve(z.size());
    for (double v : z) y.bits.push_back(v >= 0.0 ? 1 : -1);
    return y;
}

/// Sampling instants within a symbol period, relative to the symbol center, in units of T_s.
inline std::vector<double> sampling_offsets(int m) {
    if (m < 1) throw ParameterError("oversampling factor must be >= 1");
    std::vector<double> o(static_cast<std::size_t>(m));
    for (int i = 1; i <= m; ++i)
        o[static_cast<std::size_t>(i - 1)] = -0.5 * (m + 1.0) / m + static_cast<double>(i) / m;
    return o;
}

/// (L+2)M-1 x (L+1) upsampling matrix; symbol j (0-based) lands on row (j+1)M-1.
inline Eigen::MatrixXd build_upsampling(int l, int m) {
    if (l < 0 || l % 2 != 0) throw ConfigError("L must be a non-negative even integer, got " + std::to_string(l));
    if (m < 1) throw ConfigError("oversampling factor must be >= 1");
    Eigen::MatrixXd u = Eigen::MatrixXd::Zero((l + 2) * m - 1, l + 1);
    for (int j = 0; j <= l; ++j) u((j + 1) * m - 1, j) = 1.0;
    return u;
}

/// Row r holds the reversed filter starting at column r, zero elsewhere.
inline Eigen::MatrixXd build_toeplitz(const FilterTaps& filter, int rows, int cols) {
    const auto n = static_cast<int>(filter.size());
    if (rows < 1 || n < 1) throw ConfigError("build_toeplitz: empty filter or no rows");
    if (n + rows - 1 > cols)
        throw ConfigError("build_toeplitz: filter of " + std::to_string(n) + " taps does not fit " +
                          std::to_string(rows) + " shifted rows in " + std::to_string(cols) + " columns");
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(rows, cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < n; ++c) t(r, r + c) = filter.taps[static_cast<std::size_t>(n - 1 - c)];
    return t;
}

struct DiscreteChannel {
    int M = 1;
    int L = 0;
    int N = 0;
    Eigen::MatrixXd U;
    Eigen::MatrixXd H;
    Eigen::MatrixXd G;
    /// Complex-noise covariance sigma2 * G G^T; each real component sees half of it.
    Eigen::MatrixXd R;
    /// H*U, M x (L+1): the mean of the unquantized samples is mean_map * x.
    Eigen::MatrixXd mean_map;
    double sigma2 = 1.0;
    ComponentAlphabet alphabet;
    FilterTaps h;
    FilterTaps g;

    int outputs() const noexcept { return 1 << M; }
    int sequence_length() const noexcept { return L + 1; }
    Eigen::MatrixXd component_covariance() const { return 0.5 * R; }
};

inline double snr_db_to_sigma2(double snr_db) { return std::pow(10.0, -snr_db / 10.0); }

inline Eigen::MatrixXd symmetric_gram(const Eigen::MatrixXd& g, double scale) {
    const auto m = g.rows();
    Eigen::MatrixXd r(m, m);
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j <= i; ++j) r(i, j) = r(j, i) = scale * g.row(i).dot(g.row(j));
    return r;
}

/// Assembles the model from explicit taps. h must span (L+1)M taps on the
/// observation grid; g may be any length up to (N+1)M.
inline DiscreteChannel assemble_channel(FilterTaps h, FilterTaps g, int m, int l, int n, double sigma2,
                                        ComponentAlphabet alphabet) {
    alphabet.validate();
    if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) throw ParameterError("noise power sigma2 must be > 0");
    if (n < 0 || n % 2 != 0) throw ConfigError("N must be a non-negative even integer");
    if (static_cast<int>(h.size()) != (l + 1) * m)
        throw DimensionError("h must have (L+1)M = " + std::to_string((l + 1) * m) + " taps, got " +
                             std::to_string(h.size()));
    if (static_cast<int>(g.size()) > (n + 1) * m)
        throw DimensionError("g must have at most (N+1)M taps");

    DiscreteChannel ch;
    ch.M = m;
    ch.L = l;
    ch.N = n;
    ch.U = build_upsampling(l, m);
    ch.H = build_toeplitz(h, m, (l + 2) * m - 1);
    ch.G = build_toeplitz(g, m, (n + 2) * m - 1);
    if (ch.H.cols() != ch.U.rows()) throw DimensionError("H and U dimensions do not chain");
    ch.mean_map = ch.H * ch.U;
    ch.R = symmetric_gram(ch.G, sigma2);
    ch.sigma2 = sigma2;
    ch.alphabet = std::move(alphabet);
    ch.h = std::move(h);
    ch.g = std::move(g);
    return ch;
}

struct ChannelConfig {
    PulseSpec pulse;
    ReceiveFilter receive = ReceiveFilter::Matched;
    ComponentAlphabet alphabet = ComponentAlphabet::qam4();
    double snr_db = 10.0;
};

/// Builds the matched-filter (or ideal-sampler) channel with L = N = span_symbols - 1.
inline DiscreteChannel assemble_channel(const ChannelConfig& cfg) {
    cfg.pulse.validate();
    const int m = cfg.pulse.oversampling;
    const int l = cfg.pulse.span_symbols - 1;
    FilterTaps h = combined_response(cfg.pulse, cfg.receive);
    FilterTaps g = cfg.receive == ReceiveFilter::Matched ? discretize(cfg.pulse) : delta_filter(m);
    const int n = cfg.receive == ReceiveFilter::Matched ? l : 0;
    return assemble_channel(std::move(h), std::move(g), m, l, n, snr_db_to_sigma2(cfg.snr_db), cfg.alphabet);
}

inline Eigen::VectorXd mean_vector(const DiscreteChannel& ch, std::span<const double> x_seq) {
    if (static_cast<int>(x_seq.size()) != ch.sequence_length())
        throw DimensionError("symbol sequence must have L+1 = " + std::to_string(ch.sequence_length()) +
                             " entries, got " + std::to_string(x_seq.size()));
    for (double x : x_seq) {
        bool known = false;
        for (double lv : ch.alphabet.levels) known = known || x == lv;
        if (!known && x != 0.0) throw ParameterError("symbol sequence contains a value outside the alphabet");
    }
    const Eigen::Map<const Eigen::VectorXd> x(x_seq.data(), static_cast<Eigen::Index>(x_seq.size()));
    return ch.mean_map * x;
}

inline const Eigen::MatrixXd& noise_covariance(const DiscreteChannel& ch) {
    if (!(ch.sigma2 > 0.0)) throw ParameterError("noise power sigma2 must be > 0");
    return ch.R;
}

} // namespace ftnq
