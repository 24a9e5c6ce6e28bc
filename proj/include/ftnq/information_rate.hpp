#pragma once

// Symbol-by-symbol (DMC) information rate of the 1-bit oversampled channel and
// its bandwidth-normalized variant.

#include "ftnq/errors.hpp"
#include "ftnq/system_model.hpp"
#include "ftnq/transition_model.hpp"

#include <json.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

namespace ftnq {

/// Shannon entropy in bits, 0 log 0 := 0.
inline double entropy_bits(std::span<const double> p) {
    double h = 0.0;
    for (double v : p)
        if (v > 0.0) h -= v * std::log2(v);
    return h;
}

inline double binary_entropy(double p) {
    const double q[2] = {p, 1.0 - p};
    return entropy_bits(q);
}

inline void validate_stochastic(const Eigen::MatrixXd& probs, double tol) {
    for (Eigen::Index x = 0; x < probs.rows(); ++x) {
        for (Eigen::Index y = 0; y < probs.cols(); ++y) {
            const double p = probs(x, y);
            if (!(p >= 0.0 && p <= 1.0))
                throw ParameterError("transition probabilities must lie in [0,1]");
        }
        if (std::abs(probs.row(x).sum() - 1.0) > tol)
            throw ParameterError("transition table row " + std::to_string(x) + " does not sum to 1");
    }
}

/// I(X;Y) in bits for input law `priors` and channel `probs` (rows x, columns y).
inline double dmc_mutual_information(const Eigen::MatrixXd& probs, std::span<const double> priors,
                                     double row_tolerance = 1e-6) {
    if (static_cast<Eigen::Index>(priors.size()) != probs.rows())
        throw DimensionError("priors do not match the table's input alphabet");
    validate_stochastic(probs, row_tolerance);

    Eigen::VectorXd py = Eigen::VectorXd::Zero(probs.cols());
    for (Eigen::Index x = 0; x < probs.rows(); ++x) py += priors[static_cast<std::size_t>(x)] * probs.row(x).transpose();

    double info = 0.0;
    for (Eigen::Index y = 0; y < probs.cols(); ++y) {
        if (!(py(y) > 0.0)) continue;
        for (Eigen::Index x = 0; x < probs.rows(); ++x) {
            const double joint = probs(x, y) * priors[static_cast<std::size_t>(x)];
            if (joint > 0.0) info += joint * std::log2(probs(x, y) / py(y));
        }
    }
#ifndef NDEBUG
    {
        double h_y_given_x = 0.0;
        for (Eigen::Index x = 0; x < probs.rows(); ++x) {
            const Eigen::VectorXd row = probs.row(x).transpose();
            h_y_given_x += priors[static_cast<std::size_t>(x)] * entropy_bits({row.data(), static_cast<std::size_t>(row.size())});
        }
        const double h_y = entropy_bits({py.data(), static_cast<std::size_t>(py.size())});
        assert(std::abs(info - (h_y - h_y_given_x)) < 1e-12);
    }
#endif
    return std::max(0.0, info);
}

inline double dmc_mutual_information(const TransitionTable& table, std::span<const double> priors) {
    return dmc_mutual_information(table.probs, priors, table.row_tolerance());
}

struct RateOptions {
    Estimator estimator = Estimator::MonteCarlo;
    /// Total Monte Carlo symbol periods, split evenly across replicates.
    std::uint64_t samples = 1'000'000;
    std::uint64_t seed = 1;
    /// Independent batches used for the standard error; 1 falls back to the delta method.
    unsigned replicates = 10;
    unsigned workers = 1;
    std::uint64_t enumeration_budget = default_enumeration_budget;
};

struct RateResult {
    double rate_bpcu = 0.0;
    double rate_per_component = 0.0;
    double rate_3db = 0.0;
    /// Standard error of rate_bpcu (0 for enumeration).
    double stderr_bpcu = 0.0;

    std::string alphabet;
    int M = 1;
    PulseFamily pulse = PulseFamily::RootRaisedCosine;
    double shape = 0.0;
    double signaling_ratio = 1.0;
    int span_symbols = 9;
    ReceiveFilter receive = ReceiveFilter::Matched;
    double snr_db = 0.0;
    Estimator estimator = Estimator::MonteCarlo;
    std::uint64_t samples = 0;
    std::uint64_t seed = 0;
    unsigned replicates = 1;
    std::string fingerprint;
    std::string error;
};

/// Canonical description of everything that determines a rate computation (worker
/// count excluded: it never changes results).
inline nlohmann::json config_record(const ChannelConfig& cfg, const RateOptions& opt) {
    nlohmann::json j;
    j["alphabet"] = cfg.alphabet.name;
    j["oversampling"] = cfg.pulse.oversampling;
    j["pulse"] = std::string(to_string(cfg.pulse.family));
    j["shape"] = cfg.pulse.shape;
    j["signaling_ratio"] = cfg.pulse.signaling_ratio;
    j["span_symbols"] = cfg.pulse.span_symbols;
    j["receive_filter"] = std::string(to_string(cfg.receive));
    j["snr_db"] = cfg.snr_db;
    j["estimator"] = std::string(to_string(opt.estimator));
    if (opt.estimator == Estimator::MonteCarlo) {
        j["samples"] = opt.samples;
        j["replicates"] = opt.replicates;
        j["seed"] = opt.seed;
    }
    return j;
}

/// 64-bit FNV-1a of the compact JSON dump (keys sorted), as 16 hex digits.
inline std::string fingerprint(const nlohmann::json& record) {
    const std::string s = record.dump();
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

namespace detail {

/// Delta-method variance of the plug-in MI from one pooled table:
/// Var[log2 P(y|x)/P(y)] / n under the estimated joint law.
inline double delta_method_stderr(const TransitionTable& t, std::span<const double> priors) {
    Eigen::VectorXd py = output_marginal(t, priors);
    double m1 = 0.0, m2 = 0.0;
    for (Eigen::Index x = 0; x < t.probs.rows(); ++x)
        for (Eigen::Index y = 0; y < t.probs.cols(); ++y) {
            const double j = t.probs(x, y) * priors[static_cast<std::size_t>(x)];
            if (j <= 0.0) continue;
            const double i = std::log2(t.probs(x, y) / py(y));
            m1 += j * i;
            m2 += j * i * i;
        }
    if (t.samples == 0) return std::numeric_limits<double>::infinity();
    return std::sqrt(std::max(0.0, m2 - m1 * m1) / static_cast<double>(t.samples));
}

} // namespace detail

struct ComponentRate {
    double rate = 0.0;
    double stderr_rate = 0.0;
    TransitionTable table;
};

/// Per-component mutual information with its standard error.
///
/// Monte Carlo: the sample budget is split into `replicates` batches with independent
/// streams; the reported rate comes from the pooled table, the standard error is the
/// sample standard deviation of the batch rates divided by sqrt(replicates).
inline ComponentRate component_rate(const DiscreteChannel& ch, const RateOptions& opt) {
    const auto& priors = ch.alphabet.priors;
    ComponentRate out;
    if (opt.estimator == Estimator::Enumeration) {
        out.table = enumerate_exact(ch, opt.enumeration_budget);
        out.rate = dmc_mutual_information(out.table, priors);
        return out;
    }
    if (opt.samples < 1) throw ParameterError("Monte Carlo estimation needs at least one sample");
    const unsigned reps = std::max(1u, opt.replicates);
    if (opt.samples < reps) throw ParameterError("fewer samples than replicates");

    TransitionCounts pooled(static_cast<int>(ch.alphabet.size()), ch.M);
    std::vector<double> batch_rates;
    batch_rates.reserve(reps);
    for (unsigned r = 0; r < reps; ++r) {
        const std::uint64_t n = opt.samples / reps + (r < opt.samples % reps ? 1 : 0);
        const auto counts = mc_counts(ch, n, opt.seed, {opt.workers, r});
        pooled += counts;
        if (reps > 1) batch_rates.push_back(dmc_mutual_information(table_from_counts(counts), priors));
    }
    out.table = table_from_counts(pooled);
    out.rate = dmc_mutual_information(out.table, priors);
    if (reps > 1) {
        const double mean = std::accumulate(batch_rates.begin(), batch_rates.end(), 0.0) / reps;
        double ss = 0.0;
        for (double v : batch_rates) ss += (v - mean) * (v - mean);
        out.stderr_rate = std::sqrt(ss / (reps - 1)) / std::sqrt(static_cast<double>(reps));
    } else {
        out.stderr_rate = detail::delta_method_stderr(out.table, priors);
    }
    return out;
}

/// Complex-symbol rate: twice the per-component rate (independent, identical I and Q),
/// plus I_3dB = rate * Tx/Ts.
inline RateResult rate_for_config(const ChannelConfig& cfg, const RateOptions& opt) {
    const DiscreteChannel ch = assemble_channel(cfg);
    const ComponentRate cr = component_rate(ch, opt);

    RateResult r;
    r.rate_per_component = cr.rate;
    r.rate_bpcu = 2.0 * cr.rate;
    r.rate_3db = r.rate_bpcu * cfg.pulse.signaling_ratio;
    r.stderr_bpcu = 2.0 * cr.stderr_rate;
    r.alphabet = cfg.alphabet.name;
    r.M = cfg.pulse.oversampling;
    r.pulse = cfg.pulse.family;
    r.shape = cfg.pulse.shape;
    r.signaling_ratio = cfg.pulse.signaling_ratio;
    r.span_symbols = cfg.pulse.span_symbols;
    r.receive = cfg.receive;
    r.snr_db = cfg.snr_db;
    r.estimator = opt.estimator;
    r.samples = opt.estimator == Estimator::MonteCarlo ? opt.samples : 0;
    r.seed = opt.estimator == Estimator::MonteCarlo ? opt.seed : 0;
    r.replicates = opt.estimator == Estimator::MonteCarlo ? std::max(1u, opt.replicates) : 1;
    r.fingerprint = fingerprint(config_record(cfg, opt));
    return r;
}

inline nlohmann::json to_json(const RateResult& r) {
    nlohmann::json j;
    j["rate_bpcu"] = r.rate_bpcu;
    j["rate_per_component"] = r.rate_per_component;
    j["rate_3db"] = r.rate_3db;
    j["stderr"] = r.stderr_bpcu;
    j["alphabet"] = r.alphabet;
    j["M"] = r.M;
    j["pulse"] = std::string(to_string(r.pulse));
    j["shape"] = r.shape;
    j["signaling_ratio"] = r.signaling_ratio;
    j["span_symbols"] = r.span_symbols;
    j["receive_filter"] = std::string(to_string(r.receive));
    j["snr_db"] = r.snr_db;
    j["estimator"] = std::string(to_string(r.estimator));
    j["samples"] = r.samples;
    j["seed"] = r.seed;
    j["replicates"] = r.replicates;
    j["fingerprint"] = r.fingerprint;
    if (!r.error.empty()) j["error"] = r.error;
    return j;
}

inline RateResult rate_result_from_json(const nlohmann::json& j) {
    // NaN serializes as null.
    auto number = [&](const char* key) {
        const auto it = j.find(key);
        return it == j.end() || !it->is_number() ? std::nan("") : it->get<double>();
    };
    RateResult r;
    r.rate_bpcu = number("rate_bpcu");
    r.rate_per_component = number("rate_per_component");
    r.rate_3db = number("rate_3db");
    r.stderr_bpcu = number("stderr");
    r.alphabet = j.at("alphabet").get<std::string>();
    r.M = j.at("M").get<int>();
    r.pulse = parse_pulse_family(j.at("pulse").get<std::string>());
    r.shape = j.at("shape").get<double>();
    r.signaling_ratio = j.at("signaling_ratio").get<double>();
    r.span_symbols = j.value("span_symbols", 9);
    r.receive = parse_receive_filter(j.value("receive_filter", std::string("matched")));
    r.snr_db = j.at("snr_db").get<double>();
    r.estimator = parse_estimator(j.value("estimator", std::string("mc")));
    r.samples = j.value("samples", std::uint64_t{0});
    r.seed = j.value("seed", std::uint64_t{0});
    r.replicates = j.value("replicates", 1u);
    r.fingerprint = j.value("fingerprint", std::string());
    r.error = j.value("error", std::string());
    return r;
}

struct AppendixReport {
    int block_length = 1;
    /// H(X^n | Y^n) in bits.
    double joint_conditional_entropy = 0.0;
    /// sum_k H(X_k | Y_k) in bits.
    double sum_marginal_conditional_entropy = 0.0;
    /// sum - joint; nonnegative up to rounding.
    double gap = 0.0;
};

namespace detail {

/// H(A|B) from a joint table p[a][b] stored row-major with `nb` columns.
inline double conditional_entropy(const std::vector<double>& joint, std::size_t na, std::size_t nb) {
    std::vector<double> pb(nb, 0.0);
    for (std::size_t a = 0; a < na; ++a)
        for (std::size_t b = 0; b < nb; ++b) pb[b] += joint[a * nb + b];
    return entropy_bits(joint) - entropy_bits(pb);
}

} // namespace detail

/// Exact check of H(X^n|Y^n) <= sum_k H(X_k|Y_k) on a block of n consecutive symbol
/// periods. The block model keeps the channel's ISI (H U) and the per-sample noise
/// variances, but treats noise samples as independent so that every block orthant
/// probability factorizes; L/2 boundary symbols on each side are marginalized.
inline AppendixReport appendix_bound_check(const DiscreteChannel& ch, int block_length,
                                           std::uint64_t budget = default_enumeration_budget) {
    if (block_length < 1) throw ParameterError("block length must be >= 1");
    const std::size_t nx = ch.alphabet.size();
    const int m = ch.M;
    const int len = ch.sequence_length();
    const int total_symbols = block_length + ch.L;
    const int obs_bits = block_length * m;
    if (obs_bits > 24) throw EstimatorRefusal("block observation alphabet too large", ~0ull, budget);
    const std::uint64_t cost = enumeration_cost(nx, total_symbols, obs_bits);
    if (cost > budget)
        throw EstimatorRefusal("block enumeration needs " + std::to_string(cost) + " evaluations, budget is " +
                                   std::to_string(budget),
                               cost, budget);

    const Eigen::VectorXd sd = ch.component_covariance().diagonal().cwiseSqrt();
    std::size_t nblock = 1;
    for (int k = 0; k < block_length; ++k) nblock *= nx;
    const std::size_t ny = std::size_t{1} << obs_bits;
    std::vector<double> joint(nblock * ny, 0.0);

    std::vector<std::size_t> idx(static_cast<std::size_t>(total_symbols), 0);
    Eigen::VectorXd window(len);
    std::vector<double> p_plus(static_cast<std::size_t>(obs_bits));
    while (true) {
        double weight = 1.0;
        for (int j = 0; j < total_symbols; ++j) weight *= ch.alphabet.priors[idx[static_cast<std::size_t>(j)]];
        if (weight > 0.0) {
            for (int k = 0; k < block_length; ++k) {
                for (int j = 0; j < len; ++j) window(j) = ch.alphabet.levels[idx[static_cast<std::size_t>(k + j)]];
                const Eigen::VectorXd mu = ch.mean_map * window;
                for (int i = 0; i < m; ++i) p_plus[static_cast<std::size_t>(k * m + i)] = normal_cdf(mu(i) / sd(i));
            }
            std::size_t xb = 0;
            for (int k = block_length - 1; k >= 0; --k) xb = xb * nx + idx[static_cast<std::size_t>(ch.L / 2 + k)];
            for (std::size_t y = 0; y < ny; ++y) {
                double p = weight;
                for (int b = 0; b < obs_bits; ++b)
                    p *= (y >> b) & 1u ? p_plus[static_cast<std::size_t>(b)] : 1.0 - p_plus[static_cast<std::size_t>(b)];
                joint[xb * ny + y] += p;
            }
        }
        int j = 0;
        while (j < total_symbols && ++idx[static_cast<std::size_t>(j)] == nx) idx[static_cast<std::size_t>(j++)] = 0;
        if (j == total_symbols) break;
    }

    AppendixReport rep;
    rep.block_length = block_length;
    rep.joint_conditional_entropy = detail::conditional_entropy(joint, nblock, ny);

    const std::size_t ny1 = std::size_t{1} << m;
    for (int k = 0; k < block_length; ++k) {
        std::vector<double> marginal(nx * ny1, 0.0);
        std::size_t stride = 1;
        for (int i = 0; i < k; ++i) stride *= nx;
        for (std::size_t xb = 0; xb < nblock; ++xb) {
            const std::size_t xk = (xb / stride) % nx;
            for (std::size_t y = 0; y < ny; ++y) {
                const std::size_t yk = (y >> (k * m)) & (ny1 - 1);
                marginal[xk * ny1 + yk] += joint[xb * ny + y];
            }
        }
        rep.sum_marginal_conditional_entropy += detail::conditional_entropy(marginal, nx, ny1);
    }
    rep.gap = rep.sum_marginal_conditional_entropy - rep.joint_conditional_entropy;
    return rep;
}

} // namespace ftnq
