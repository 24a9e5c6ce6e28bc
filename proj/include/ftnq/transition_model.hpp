#pragma once

// P(y | x): law of the M sign bits of one symbol period given the center symbol,
// marginalized over i.i.d. neighbor symbols. Two estimators: Monte Carlo
// simulation and exact enumeration of neighbor sequences with Gaussian orthant
// integration.

#include "ftnq/errors.hpp"
#include "ftnq/orthant.hpp"
#include "ftnq/parallel.hpp"
#include "ftnq/random.hpp"
#include "ftnq/system_model.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ftnq {

enum class Estimator { MonteCarlo, Enumeration };

inline std::string_view to_string(Estimator e) { return e == Estimator::MonteCarlo ? "mc" : "enum"; }

inline Estimator parse_estimator(std::string_view s) {
    if (s == "mc") return Estimator::MonteCarlo;
    if (s == "enum") return Estimator::Enumeration;
    throw ConfigError("unknown estimator '" + std::string(s) + "' (expected mc|enum)");
}

struct TransitionTable {
    /// Rows: alphabet level index, columns: canonical observation index.
    Eigen::MatrixXd probs;
    Estimator method = Estimator::MonteCarlo;
    int M = 1;
    std::uint64_t samples = 0;
    std::vector<std::uint64_t> row_samples;
    /// Largest per-entry standard error sqrt(p(1-p)/n_x); infinite when a row saw no samples.
    double stderr_max = 0.0;

    bool reliable() const noexcept { return std::isfinite(stderr_max); }

    /// Row-sum tolerance appropriate for the estimator.
    double row_tolerance() const noexcept { return method == Estimator::Enumeration ? 1e-9 : 1e-6; }
};

/// Raw Monte Carlo tallies: counts[x * 2^M + y].
struct TransitionCounts {
    int levels = 0;
    int M = 1;
    std::vector<std::uint64_t> counts;

    TransitionCounts() = default;
    TransitionCounts(int n_levels, int m)
        : levels(n_levels), M(m), counts(static_cast<std::size_t>(n_levels) << m, 0) {}

    TransitionCounts& operator+=(const TransitionCounts& o) {
        for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += o.counts[i];
        return *this;
    }

    std::uint64_t total() const {
        std::uint64_t t = 0;
        for (auto c : counts) t += c;
        return t;
    }
};

inline TransitionTable table_from_counts(const TransitionCounts& c) {
    const int ny = 1 << c.M;
    TransitionTable t;
    t.method = Estimator::MonteCarlo;
    t.M = c.M;
    t.probs = Eigen::MatrixXd::Zero(c.levels, ny);
    t.row_samples.assign(static_cast<std::size_t>(c.levels), 0);
    for (int x = 0; x < c.levels; ++x) {
        std::uint64_t n = 0;
        for (int y = 0; y < ny; ++y) n += c.counts[static_cast<std::size_t>(x * ny + y)];
        t.row_samples[static_cast<std::size_t>(x)] = n;
        t.samples += n;
        if (n == 0) {
            // Unreliable row: keep it stochastic, flag it through stderr_max.
            t.probs.row(x).setConstant(1.0 / ny);
            t.stderr_max = std::numeric_limits<double>::infinity();
            continue;
        }
        for (int y = 0; y < ny; ++y) {
            const double p = static_cast<double>(c.counts[static_cast<std::size_t>(x * ny + y)]) / static_cast<double>(n);
            t.probs(x, y) = p;
            t.stderr_max = std::max(t.stderr_max, std::sqrt(p * (1.0 - p) / static_cast<double>(n)));
        }
    }
    return t;
}

/// Per-component Gaussian noise model: covariance (sigma2/2) G G^T and its Cholesky factor.
struct GaussianObservationModel {
    Eigen::MatrixXd covariance;
    Eigen::MatrixXd cholesky;
    bool jittered = false;

    /// Factorizes; if that fails, adds 1e-12*trace/M to the diagonal once and retries.
    static GaussianObservationModel from_channel(const DiscreteChannel& ch) {
        GaussianObservationModel g;
        g.covariance = ch.component_covariance();
        auto ok = [](const Eigen::LLT<Eigen::MatrixXd>& llt) {
            if (llt.info() != Eigen::Success) return false;
            const Eigen::MatrixXd l = llt.matrixL();
            for (Eigen::Index i = 0; i < l.rows(); ++i)
                if (!(l(i, i) > 0.0) || !std::isfinite(l(i, i))) return false;
            return true;
        };
        Eigen::LLT<Eigen::MatrixXd> llt(g.covariance);
        if (!ok(llt)) {
            const double jitter = 1e-12 * g.covariance.trace() / static_cast<double>(g.covariance.rows());
            g.covariance.diagonal().array() += jitter;
            g.jittered = true;
            llt.compute(g.covariance);
            if (!ok(llt)) throw ParameterError("noise covariance is not positive definite even after jitter");
        }
        g.cholesky = llt.matrixL();
        return g;
    }

    bool diagonal() const {
        for (Eigen::Index i = 0; i < covariance.rows(); ++i)
            for (Eigen::Index j = 0; j < i; ++j)
                if (std::abs(covariance(i, j)) > 1e-14 * std::sqrt(covariance(i, i) * covariance(j, j))) return false;
        return true;
    }
};

struct MonteCarloOptions {
    unsigned workers = 1;
    /// Replicate index of the stream family; see random.hpp.
    std::uint64_t replicate = 0;
};

/// Simulates `samples` symbol periods and tallies (center symbol, observation) pairs.
/// Deterministic for a fixed (seed, replicate, samples) at any worker count.
inline TransitionCounts mc_counts(const DiscreteChannel& ch, std::uint64_t samples, std::uint64_t seed,
                                  const MonteCarloOptions& opt = {}) {
    const auto noise = GaussianObservationModel::from_channel(ch);
    const int m = ch.M;
    const int len = ch.sequence_length();
    const int center = ch.L / 2;
    const auto n_levels = static_cast<int>(ch.alphabet.size());

    // Row-major copies for the inner loop.
    std::vector<double> a(static_cast<std::size_t>(m * len));
    std::vector<double> c(static_cast<std::size_t>(m * m), 0.0);
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < len; ++j) a[static_cast<std::size_t>(i * len + j)] = ch.mean_map(i, j);
        for (int j = 0; j <= i; ++j) c[static_cast<std::size_t>(i * m + j)] = noise.cholesky(i, j);
    }
    const auto& levels = ch.alphabet.levels;
    const auto& priors = ch.alphabet.priors;
    bool uniform = true;
    for (double p : priors) uniform = uniform && p == priors.front();

    const std::uint64_t chunks = (samples + chunk_samples - 1) / chunk_samples;
    std::vector<TransitionCounts> partial(static_cast<std::size_t>(chunks), TransitionCounts(n_levels, m));

    parallel_for(static_cast<std::size_t>(chunks), opt.workers, [&](std::size_t k) {
        Engine eng = make_stream(seed, opt.replicate, k);
        std::uniform_int_distribution<int> pick_uniform(0, n_levels - 1);
        std::discrete_distribution<int> pick_weighted(priors.begin(), priors.end());
        std::normal_distribution<double> gauss(0.0, 1.0);
        std::vector<double> x(static_cast<std::size_t>(len));
        std::vector<double> w(static_cast<std::size_t>(m));
        auto& counts = partial[k].counts;
        const std::uint64_t begin = k * chunk_samples;
        const std::uint64_t end = std::min(samples, begin + chunk_samples);
        for (std::uint64_t s = begin; s < end; ++s) {
            int center_idx = 0;
            for (int j = 0; j < len; ++j) {
                const int idx = uniform ? pick_uniform(eng) : pick_weighted(eng);
                if (j == center) center_idx = idx;
                x[static_cast<std::size_t>(j)] = levels[static_cast<std::size_t>(idx)];
            }
            for (int i = 0; i < m; ++i) w[static_cast<std::size_t>(i)] = gauss(eng);
            std::uint32_t y = 0;
            for (int i = 0; i < m; ++i) {
                double z = 0.0;
                const double* ai = &a[static_cast<std::size_t>(i * len)];
                for (int j = 0; j < len; ++j) z += ai[j] * x[static_cast<std::size_t>(j)];
                const double* ci = &c[static_cast<std::size_t>(i * m)];
                for (int j = 0; j <= i; ++j) z += ci[j] * w[static_cast<std::size_t>(j)];
                if (z >= 0.0) y |= 1u << i;
            }
            ++counts[(static_cast<std::size_t>(center_idx) << m) + y];
        }
    });

    TransitionCounts total(n_levels, m);
    for (const auto& p : partial) total += p;
    return total;
}

inline TransitionTable mc_estimate(const DiscreteChannel& ch, std::uint64_t samples, std::uint64_t seed,
                                   const MonteCarloOptions& opt = {}) {
    if (samples < 1) throw ParameterError("Monte Carlo estimation needs at least one sample");
    return table_from_counts(mc_counts(ch, samples, seed, opt));
}

inline constexpr std::uint64_t default_enumeration_budget = std::uint64_t{1} << 26;

/// |levels|^(L+1) * 2^M, saturating at uint64 max.
inline std::uint64_t enumeration_cost(std::size_t levels, int sequence_length, int outputs_log2) {
    constexpr auto cap = std::numeric_limits<std::uint64_t>::max();
    std::uint64_t cost = std::uint64_t{1} << outputs_log2;
    for (int i = 0; i < sequence_length; ++i) {
        if (cost > cap / levels) return cap;
        cost *= levels;
    }
    return cost;
}

/// Exact P(y|x): sums the Gaussian orthant probability of every neighbor sequence,
/// weighted by its prior. Correlated noise is supported for M <= 3 only.
inline TransitionTable enumerate_exact(const DiscreteChannel& ch,
                                       std::uint64_t budget = default_enumeration_budget) {
    const std::size_t nx = ch.alphabet.size();
    const int len = ch.sequence_length();
    const int m = ch.M;
    const std::uint64_t cost = enumeration_cost(nx, len, m);
    if (cost > budget)
        throw EstimatorRefusal("enumeration needs " + std::to_string(cost) + " orthant evaluations, budget is " +
                                   std::to_string(budget),
                               cost, budget);
    const auto noise = GaussianObservationModel::from_channel(ch);
    const bool diag = noise.diagonal();
    if (!diag && m > 3)
        throw EstimatorRefusal("enumeration with correlated noise is limited to M <= 3 (got M = " +
                                   std::to_string(m) + ")",
                               cost, budget);
    const Eigen::VectorXd sd = noise.covariance.diagonal().cwiseSqrt();

    const int ny = 1 << m;
    const int center = ch.L / 2;
    TransitionTable t;
    t.method = Estimator::Enumeration;
    t.M = m;
    t.probs = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(nx), ny);

    std::vector<std::size_t> idx(static_cast<std::size_t>(len), 0);
    Eigen::VectorXd x(len);
    while (true) {
        double weight = 1.0;
        for (int j = 0; j < len; ++j) {
            x(j) = ch.alphabet.levels[idx[static_cast<std::size_t>(j)]];
            if (j != center) weight *= ch.alphabet.priors[idx[static_cast<std::size_t>(j)]];
        }
        if (weight > 0.0) {
            const Eigen::VectorXd mu = ch.mean_map * x;
            const auto row = static_cast<Eigen::Index>(idx[static_cast<std::size_t>(center)]);
            for (int y = 0; y < ny; ++y) {
                const auto yy = static_cast<std::uint32_t>(y);
                const double p = diag ? orthant_probability_diagonal(mu, sd, yy)
                                      : orthant_probability_correlated(mu, noise.cholesky, yy);
                t.probs(row, y) += weight * p;
            }
        }
        int j = 0;
        while (j < len && ++idx[static_cast<std::size_t>(j)] == nx) idx[static_cast<std::size_t>(j++)] = 0;
        if (j == len) break;
    }
    return t;
}

/// P(y) = sum_x P(x) P(y|x).
inline Eigen::VectorXd output_marginal(const TransitionTable& table, std::span<const double> priors) {
    if (static_cast<Eigen::Index>(priors.size()) != table.probs.rows())
        throw DimensionError("priors do not match the table's input alphabet");
    Eigen::VectorXd py = Eigen::VectorXd::Zero(table.probs.cols());
    for (Eigen::Index x = 0; x < table.probs.rows(); ++x)
        py += priors[static_cast<std::size_t>(x)] * table.probs.row(x).transpose();
    return py;
}

/// CSV rows `x_level,y_index,prob` with a header line.
inline void write_table_csv(std::ostream& os, const TransitionTable& table, const ComponentAlphabet& alphabet) {
    char buf[64];
    os << "x_level,y_index,prob\n";
    for (Eigen::Index x = 0; x < table.probs.rows(); ++x)
        for (Eigen::Index y = 0; y < table.probs.cols(); ++y) {
            std::snprintf(buf, sizeof buf, "%.17g", alphabet.levels[static_cast<std::size_t>(x)]);
            os << buf << ',' << y << ',';
            std::snprintf(buf, sizeof buf, "%.17g", table.probs(x, y));
            os << buf << '\n';
        }
}

} // namespace ftnq
