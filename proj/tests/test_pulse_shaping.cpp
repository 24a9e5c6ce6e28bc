#include "ftnq/pulse_shaping.hpp"

#include <catch_amalgamated.hpp>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

using namespace ftnq;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

// Reference values below were computed in 50-digit arithmetic.
TEST_CASE("gaussian pulse reference values") {
    CHECK_THAT(eval_gaussian(0.0, 0.5), WithinAbs(0.752691847789252482, 1e-12));
    CHECK_THAT(eval_gaussian(1.3, 0.5), WithinAbs(0.0371774805514673736, 1e-12));
    CHECK(eval_gaussian(-1.3, 0.5) == eval_gaussian(1.3, 0.5));
    double prev = eval_gaussian(0.0, 0.3);
    for (int i = 1; i < 200; ++i) {
        const double v = eval_gaussian(0.05 * i, 0.3);
        CHECK(v < prev);
        prev = v;
    }
    CHECK_THROWS_AS(eval_gaussian(0.0, 0.0), ParameterError);
    CHECK_THROWS_AS(eval_gaussian(0.0, -1.0), ParameterError);
}

TEST_CASE("rrc reference values") {
    CHECK_THAT(eval_rrc(0.0, 0.5, 1.0), WithinAbs(1.13661977236758134, 1e-12));
    CHECK_THAT(eval_rrc(0.5, 0.5, 1.0), WithinAbs(0.578632469632550280, 1e-12));
    CHECK_THAT(eval_rrc(1.0 / 0.88, 0.22, 1.0), WithinAbs(-0.157184262077207242, 1e-12));
    CHECK_THAT(eval_rrc(-1.0 / 0.88, 0.22, 1.0), WithinAbs(-0.157184262077207242, 1e-12));
    CHECK_THAT(eval_rrc(0.7, 0.3, 1.25), WithinAbs(0.520058582890984635, 1e-12));
}

TEST_CASE("rrc with zero roll-off is a sinc") {
    CHECK(eval_rrc(0.0, 0.0, 1.0) == 1.0);
    for (int k = 1; k <= 6; ++k) {
        CHECK_THAT(eval_rrc(k, 0.0, 1.0), WithinAbs(0.0, 1e-15));
        CHECK_THAT(eval_rrc(-k, 0.0, 1.0), WithinAbs(0.0, 1e-15));
    }
    CHECK_THAT(eval_rrc(0.5, 0.0, 1.0), WithinAbs(2.0 / std::numbers::pi, 1e-15));
}

TEST_CASE("rrc is continuous at its removable singularities") {
    for (double beta : {0.1, 0.22, 0.5, 0.9, 1.0}) {
        for (double tx : {1.0, 1.5}) {
            const double ts = tx / (4.0 * beta);
            for (double d : {1e-7, -1e-7}) {
                CHECK_THAT(eval_rrc(ts + d, beta, tx), WithinAbs(eval_rrc(ts, beta, tx), 1e-6));
                CHECK_THAT(eval_rrc(d, beta, tx), WithinAbs(eval_rrc(0.0, beta, tx), 1e-6));
            }
        }
    }
}

TEST_CASE("parameter validation") {
    CHECK_THROWS_AS(eval_rrc(0.0, 1.5, 1.0), ParameterError);
    CHECK_THROWS_AS(eval_rrc(0.0, -0.1, 1.0), ParameterError);
    PulseSpec s;
    s.shape = 1.5;
    CHECK_THROWS_AS(discretize(s), ParameterError);
    s = {};
    s.signaling_ratio = 0.9;
    CHECK_THROWS_AS(discretize(s), ParameterError);
    s = {};
    s.span_symbols = 8;
    CHECK_THROWS_AS(discretize(s), ParameterError);
    s = {};
    s.oversampling = 0;
    CHECK_THROWS_AS(discretize(s), ParameterError);
    s = {PulseFamily::Gaussian, 0.0, 1.0, 9, 1};
    CHECK_THROWS_AS(discretize(s), ParameterError);
    CHECK(parse_pulse_family("rrc") == PulseFamily::RootRaisedCosine);
    CHECK(parse_pulse_family("gaussian") == PulseFamily::Gaussian);
    CHECK_THROWS_AS(parse_pulse_family("sinc"), ConfigError);
}

TEST_CASE("discretized taps are unit energy and even") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> beta(0.0, 1.0), ratio(1.0, 2.0), bw(0.1, 2.0);
    std::uniform_int_distribution<int> m(1, 8), span(0, 8);
    for (int trial = 0; trial < 200; ++trial) {
        PulseSpec s;
        s.family = trial % 2 ? PulseFamily::Gaussian : PulseFamily::RootRaisedCosine;
        s.shape = s.family == PulseFamily::Gaussian ? bw(rng) : beta(rng);
        s.signaling_ratio = ratio(rng);
        s.span_symbols = 2 * span(rng) + 1;
        s.oversampling = m(rng);
        const auto f = discretize(s);
        REQUIRE(f.size() == static_cast<std::size_t>(s.span_symbols * s.oversampling));
        CHECK_THAT(tap_energy(f.taps), WithinAbs(1.0, 1e-12));
        CHECK(symmetry_defect(f.taps) <= 1e-9);
        CHECK_THAT(f.time(0), WithinAbs(-f.time(f.size() - 1), 1e-12));
    }
}

TEST_CASE("discretization is deterministic and follows the continuous pulse") {
    PulseSpec s{PulseFamily::RootRaisedCosine, 0.22, 1.0, 9, 4};
    const auto a = discretize(s);
    const auto b = discretize(s);
    CHECK(a.taps == b.taps);
    REQUIRE(a.size() == 36);
    // Independent evaluation on t = (i - 17.5)/4 up to a common scale.
    std::vector<double> raw(36);
    double e = 0.0;
    for (int i = 0; i < 36; ++i) {
        raw[i] = eval_rrc((i - 17.5) / 4.0, 0.22, 1.0);
        e += raw[i] * raw[i];
    }
    std::size_t peak = 0;
    for (std::size_t i = 0; i < 36; ++i) {
        CHECK_THAT(a.taps[i], WithinAbs(raw[i] / std::sqrt(e), 1e-14));
        if (std::abs(a.taps[i]) > std::abs(a.taps[peak])) peak = i;
    }
    CHECK((peak == 17 || peak == 18));
    CHECK(a.taps[17] == a.taps[18]);
}

TEST_CASE("3 dB bandwidth scales inversely with the signaling ratio") {
    for (auto family : {PulseFamily::RootRaisedCosine, PulseFamily::Gaussian}) {
        const double shape = family == PulseFamily::Gaussian ? 0.5 : 0.3;
        const double b1 = bandwidth_3db(discretize({family, shape, 1.0, 33, 8}));
        for (double r : {1.25, 1.5, 2.0}) {
            const double br = bandwidth_3db(discretize({family, shape, r, 33, 8}));
            CHECK_THAT(br * r / b1, WithinAbs(1.0, 0.05));
        }
    }
    // |V(f)| falls as exp(-pi^2 f^2 / k^2), reaching 1/sqrt(2) at f = B3dB*Ts/2: the
    // parameter is the two-sided bandwidth, like 1/Tx for the RRC pulse.
    CHECK_THAT(bandwidth_3db(discretize({PulseFamily::Gaussian, 0.5, 1.0, 33, 8})), WithinRel(0.25, 0.01));
    CHECK_THAT(bandwidth_3db(discretize({PulseFamily::RootRaisedCosine, 0.3, 1.0, 33, 8})), WithinRel(0.5, 0.02));
}

TEST_CASE("matched_combine") {
    const FilterTaps unit{{1.0}, 0.25, 0.0};
    const auto v = discretize({PulseFamily::RootRaisedCosine, 0.5, 1.0, 9, 4});
    SECTION("a unit tap is the identity") {
        const auto h = matched_combine(v, unit, 9);
        REQUIRE(h.size() >= v.size());
        std::size_t off = 0;
        while (off < h.size() && h.taps[off] != v.taps[0]) ++off;
        REQUIRE(off + v.size() <= h.size());
        for (std::size_t i = 0; i < v.size(); ++i) CHECK(h.taps[off + i] == v.taps[i]);
    }
    SECTION("commutative to the bit") {
        const auto g = discretize({PulseFamily::Gaussian, 0.7, 1.2, 9, 4});
        CHECK(matched_combine(v, g, 9).taps == matched_combine(g, v, 9).taps);
        CHECK(matched_combine(v, unit, 9).taps == matched_combine(unit, v, 9).taps);
    }
    SECTION("self-combination of an even pulse is even with unit peak") {
        const auto w = discretize({PulseFamily::RootRaisedCosine, 0.3, 1.0, 33, 4});
        const auto h = matched_combine(w, w, 33);
        CHECK(h.size() % 2 == 1);
        CHECK(symmetry_defect(h.taps) <= 1e-12);
        CHECK_THAT(h.taps[h.size() / 2], WithinAbs(1.0, 1e-12));
        // Nyquist: zero crossings one symbol from the peak.
        CHECK_THAT(h.taps[h.size() / 2 + 4], WithinAbs(0.0, 2e-2));
    }
    SECTION("grid mismatch") {
        const FilterTaps other{{1.0}, 0.5, 0.0};
        CHECK_THROWS_AS(matched_combine(v, other, 9), ConfigError);
    }
}

namespace {

// Continuous convolution of the pulse (truncated to the span and normalized) with itself.
double continuous_combined(const PulseSpec& s, double t) {
    using boost::math::quadrature::gauss_kronrod;
    const double half = 0.5 * s.span_symbols;
    auto v = [&](double x) { return std::abs(x) <= half ? eval_pulse(s, x) : 0.0; };
    const double energy = gauss_kronrod<double, 61>::integrate([&](double x) { return v(x) * v(x); }, -half, half, 15, 1e-13);
    const double lo = std::max(-half, t - half), hi = std::min(half, t + half);
    if (lo >= hi) return 0.0;
    return gauss_kronrod<double, 61>::integrate([&](double x) { return v(x) * v(t - x); }, lo, hi, 15, 1e-13) / energy;
}

} // namespace

TEST_CASE("combined response matches the continuous convolution") {
    for (const PulseSpec& s : {PulseSpec{PulseFamily::RootRaisedCosine, 0.5, 1.25, 9, 4},
                               PulseSpec{PulseFamily::RootRaisedCosine, 0.22, 1.0, 9, 1},
                               PulseSpec{PulseFamily::Gaussian, 0.5, 1.0, 9, 2}}) {
        const auto h = combined_response(s, ReceiveFilter::Matched);
        REQUIRE(h.size() == static_cast<std::size_t>(s.span_symbols * s.oversampling));
        CHECK(symmetry_defect(h.taps) <= 1e-12);
        for (std::size_t i = 0; i < h.size(); ++i) CHECK_THAT(h.taps[i], WithinAbs(continuous_combined(s, h.time(i)), 2e-3));
    }
    const PulseSpec s{PulseFamily::RootRaisedCosine, 0.22, 1.0, 9, 4};
    CHECK(combined_response(s, ReceiveFilter::Delta).taps == discretize(s).taps);
}

TEST_CASE("refinement factor") {
    CHECK(refinement_factor(1) == 16);
    CHECK(refinement_factor(4) == 4);
    CHECK(refinement_factor(3) == 6);
    CHECK(refinement_factor(16) == 2);
}
