#include "ftnq/system_model.hpp"

#include <catch_amalgamated.hpp>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <random>
#include <vector>

using namespace ftnq;
using Catch::Matchers::WithinAbs;

namespace {

// h evaluated at time t by locating the tap whose grid time equals t.
double tap_at(const FilterTaps& h, double t) {
    for (std::size_t i = 0; i < h.size(); ++i)
        if (std::abs(h.time(i) - t) < 1e-9) return h.taps[i];
    return 0.0;
}

FilterTaps random_taps(std::mt19937_64& rng, int n, int m) {
    std::normal_distribution<double> d;
    FilterTaps f;
    f.spacing = 1.0 / m;
    f.origin = -0.5 * (n - 1) / static_cast<double>(m);
    for (int i = 0; i < n; ++i) f.taps.push_back(d(rng));
    return f;
}

} // namespace

TEST_CASE("sampling offsets") {
    CHECK(sampling_offsets(1) == std::vector<double>{0.0});
    const auto o4 = sampling_offsets(4);
    const std::vector<double> want{-0.375, -0.125, 0.125, 0.375};
    for (int i = 0; i < 4; ++i) CHECK_THAT(o4[i], WithinAbs(want[i], 1e-15));
    for (int m = 1; m <= 8; ++m) {
        double s = 0.0;
        for (double v : sampling_offsets(m)) s += v;
        CHECK_THAT(s, WithinAbs(0.0, 1e-14));
    }
    CHECK_THROWS_AS(sampling_offsets(0), ParameterError);
}

TEST_CASE("upsampling matrix") {
    const auto u0 = build_upsampling(0, 1);
    REQUIRE(u0.rows() == 1);
    REQUIRE(u0.cols() == 1);
    CHECK(u0(0, 0) == 1.0);

    const auto u = build_upsampling(2, 2);
    REQUIRE(u.rows() == 7);
    REQUIRE(u.cols() == 3);
    CHECK(u.sum() == 3.0);
    for (int j = 0; j < 3; ++j) CHECK(u.col(j).sum() == 1.0);
    const Eigen::VectorXd ones = u * Eigen::VectorXd::Ones(3);
    CHECK(ones(1) == 1.0);
    CHECK(ones(3) == 1.0);
    CHECK(ones(5) == 1.0);

    CHECK_THROWS_AS(build_upsampling(3, 2), ConfigError);
    CHECK_THROWS_AS(build_upsampling(-2, 2), ConfigError);
}

TEST_CASE("toeplitz filter matrix") {
    const FilterTaps one{{1.0}, 1.0, 0.0};
    const auto t1 = build_toeplitz(one, 1, 1);
    CHECK(t1(0, 0) == 1.0);

    const FilterTaps f{{1.0, 2.0, 3.0}, 0.5, -0.5};
    const auto t = build_toeplitz(f, 2, 5);
    Eigen::MatrixXd want(2, 5);
    want << 3, 2, 1, 0, 0,
            0, 3, 2, 1, 0;
    CHECK(t == want);
    CHECK_THROWS_AS(build_toeplitz(f, 2, 3), ConfigError);
}

TEST_CASE("mean matches the time-domain superposition") {
    std::mt19937_64 rng(11);
    for (auto [l, m] : {std::pair{2, 2}, std::pair{8, 4}, std::pair{0, 3}, std::pair{4, 1}}) {
        const auto h = random_taps(rng, (l + 1) * m, m);
        const auto ch = assemble_channel(h, delta_filter(m), m, l, 0, 1.0, ComponentAlphabet::qam16());
        REQUIRE(ch.H.rows() == m);
        REQUIRE(ch.H.cols() == (l + 2) * m - 1);
        REQUIRE(ch.U.rows() == (l + 2) * m - 1);
        REQUIRE(ch.U.cols() == l + 1);
        REQUIRE(ch.G.cols() == 2 * m - 1);

        std::uniform_int_distribution<int> pick(0, 3);
        std::vector<double> x(l + 1);
        for (auto& v : x) v = ch.alphabet.levels[pick(rng)];
        const auto mu = mean_vector(ch, x);
        const auto off = sampling_offsets(m);
        for (int r = 0; r < m; ++r) {
            double z = 0.0;
            for (int j = 0; j <= l; ++j) z += x[j] * tap_at(h, off[r] - (j - l / 2));
            CHECK_THAT(mu(r), WithinAbs(z, 1e-12));
        }
    }
}

TEST_CASE("mean vector properties") {
    const PulseSpec s{PulseFamily::RootRaisedCosine, 0.22, 1.0, 9, 4};
    const auto ch = assemble_channel(ChannelConfig{s, ReceiveFilter::Matched, ComponentAlphabet::qam4(), 10.0});
    std::vector<double> x(9, 0.0);
    CHECK(mean_vector(ch, x).isZero());
    const double a = ch.alphabet.levels[1];
    std::vector<double> xp{a, -a, a, a, -a, -a, a, -a, a}, xn;
    for (double v : xp) xn.push_back(-v);
    CHECK(mean_vector(ch, xn) == -mean_vector(ch, xp));
    CHECK_THROWS_AS(mean_vector(ch, std::vector<double>(8, a)), DimensionError);
    CHECK_THROWS_AS(mean_vector(ch, std::vector<double>(9, 0.3)), ParameterError);

    // Ideal sampler with M = 1 and a delta h: the center symbol passes through.
    const FilterTaps delta{{0.0, 1.0, 0.0}, 1.0, -1.0};
    const auto d = assemble_channel(delta, delta_filter(1), 1, 2, 0, 1.0, ComponentAlphabet::qam4());
    const std::vector<double> x3{-a, a, -a};
    CHECK(mean_vector(d, x3)(0) == a);
}

TEST_CASE("noise covariance") {
    SECTION("unit-tap receiver gives white noise") {
        const FilterTaps h{std::vector<double>(12, 0.1), 0.25, -1.375};
        const auto ch = assemble_channel(h, delta_filter(4), 4, 2, 0, 0.3, ComponentAlphabet::qam4());
        CHECK(noise_covariance(ch).isApprox(0.3 * Eigen::MatrixXd::Identity(4, 4)));
        CHECK(ch.component_covariance().isApprox(0.15 * Eigen::MatrixXd::Identity(4, 4)));
    }
    SECTION("matched RRC receiver") {
        const PulseSpec s{PulseFamily::RootRaisedCosine, 0.22, 1.0, 9, 4};
        const auto ch = assemble_channel(ChannelConfig{s, ReceiveFilter::Matched, ComponentAlphabet::qam4(), 10.0});
        const auto& r = noise_covariance(ch);
        CHECK(r == r.transpose());
        for (int i = 0; i < 4; ++i) CHECK_THAT(r(i, i), WithinAbs(ch.sigma2, 1e-10));
        for (int i = 0; i < 3; ++i) CHECK(r(i, i + 1) > 0.0);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(r);
        CHECK(es.eigenvalues().minCoeff() >= -1e-10);
    }
    SECTION("SNR convention") {
        CHECK_THAT(snr_db_to_sigma2(0.0), WithinAbs(1.0, 1e-15));
        CHECK_THAT(snr_db_to_sigma2(10.0), WithinAbs(0.1, 1e-15));
        CHECK_THAT(snr_db_to_sigma2(-20.0), WithinAbs(100.0, 1e-12));
    }
    SECTION("invalid noise power") {
        const FilterTaps h{{1.0}, 1.0, 0.0};
        CHECK_THROWS_AS(assemble_channel(h, delta_filter(1), 1, 0, 0, 0.0, ComponentAlphabet::qam4()), ParameterError);
        CHECK_THROWS_AS(assemble_channel(h, delta_filter(1), 1, 0, 0, -1.0, ComponentAlphabet::qam4()), ParameterError);
    }
}

TEST_CASE("dimension checks") {
    const FilterTaps h{std::vector<double>(8, 0.1), 0.25, -0.875};
    CHECK_THROWS_AS(assemble_channel(h, delta_filter(4), 4, 2, 0, 1.0, ComponentAlphabet::qam4()), DimensionError);
    const FilterTaps g{std::vector<double>(9, 0.1), 0.25, -1.0};
    const FilterTaps h12{std::vector<double>(12, 0.1), 0.25, -1.375};
    CHECK_THROWS_AS(assemble_channel(h12, g, 4, 2, 0, 1.0, ComponentAlphabet::qam4()), DimensionError);
    CHECK_THROWS_AS(assemble_channel(h12, g, 4, 2, 1, 1.0, ComponentAlphabet::qam4()), ConfigError);
    CHECK_NOTHROW(assemble_channel(h12, g, 4, 2, 2, 1.0, ComponentAlphabet::qam4()));

    const auto ch = assemble_channel(
        ChannelConfig{{PulseFamily::RootRaisedCosine, 0.5, 1.3, 9, 4}, ReceiveFilter::Matched, ComponentAlphabet::qam16(), 5.0});
    CHECK(ch.L == 8);
    CHECK(ch.N == 8);
    CHECK(ch.mean_map.rows() == 4);
    CHECK(ch.mean_map.cols() == 9);
    CHECK(ch.G.cols() == 10 * 4 - 1);
    CHECK(ch.outputs() == 16);
}

TEST_CASE("one-bit quantizer") {
    const std::vector<double> z{0.0, -0.3, 2.0, -0.0};
    const auto y = quantize_1bit(z);
    CHECK(y.bits == std::vector<int>{1, -1, 1, 1});
    CHECK(y.index() == 0b1101u);
    CHECK(ObservationVector::from_index(0b1101u, 4).bits == y.bits);

    std::mt19937_64 rng(3);
    std::normal_distribution<double> d;
    for (int t = 0; t < 100; ++t) {
        std::vector<double> v(5), scaled(5), neg(5);
        for (int i = 0; i < 5; ++i) {
            v[i] = d(rng);
            scaled[i] = 3.7 * v[i];
            neg[i] = -v[i];
        }
        const auto q = quantize_1bit(v);
        CHECK(quantize_1bit(scaled).bits == q.bits);
        CHECK(quantize_1bit(neg).index() == flip_index(q.index(), 5));
    }
    for (std::uint32_t i = 0; i < 16; ++i) CHECK(ObservationVector::from_index(i, 4).index() == i);
}

TEST_CASE("alphabets") {
    for (const auto& a : {ComponentAlphabet::qam4(), ComponentAlphabet::qam16()}) {
        CHECK_NOTHROW(a.validate());
        CHECK_THAT(a.mean_energy(), WithinAbs(0.5, 1e-15));
        for (std::size_t i = 0; i < a.size(); ++i) CHECK(a.levels[a.mirror(i)] == -a.levels[i]);
    }
    CHECK(ComponentAlphabet::from_name("qpsk").levels == ComponentAlphabet::qam4().levels);
    CHECK_THROWS_AS(ComponentAlphabet::from_name("8psk"), ConfigError);
    ComponentAlphabet bad{"bad", {-1.0, 1.0}, {0.5, 0.5}};
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = {"bad", {-0.5, 0.9}, {0.5, 0.5}};
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = ComponentAlphabet::qam4();
    bad.priors = {0.6, 0.6};
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("the full model is odd in the symbols and the noise") {
    const PulseSpec s{PulseFamily::RootRaisedCosine, 0.3, 1.2, 9, 3};
    const auto ch = assemble_channel(ChannelConfig{s, ReceiveFilter::Matched, ComponentAlphabet::qam16(), 5.0});
    std::mt19937_64 rng(5);
    std::normal_distribution<double> d;
    std::uniform_int_distribution<int> pick(0, 3);
    const Eigen::LLT<Eigen::MatrixXd> llt(ch.component_covariance());
    const Eigen::MatrixXd c = llt.matrixL();
    for (int t = 0; t < 200; ++t) {
        std::vector<double> x(9), xn(9);
        for (int j = 0; j < 9; ++j) {
            x[j] = ch.alphabet.levels[pick(rng)];
            xn[j] = -x[j];
        }
        Eigen::VectorXd w(3);
        for (int i = 0; i < 3; ++i) w(i) = d(rng);
        const Eigen::VectorXd z = mean_vector(ch, x) + c * w;
        const Eigen::VectorXd zn = mean_vector(ch, xn) - c * w;
        const auto y = quantize_1bit({z.data(), 3});
        const auto yn = quantize_1bit({zn.data(), 3});
        bool on_boundary = false;
        for (int i = 0; i < 3; ++i) on_boundary = on_boundary || z(i) == 0.0;
        if (!on_boundary) CHECK(yn.index() == flip_index(y.index(), 3));
    }
}
