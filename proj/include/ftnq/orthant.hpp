#pragma once

// Gaussian orthant probabilities P(sign(Z) = y) for Z ~ N(mu, C C^T), C lower triangular.

#include "ftnq/errors.hpp"

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/owens_t.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace ftnq {

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

inline double normal_pdf(double x) {
    return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

namespace detail {

// Standard normal mass outside |w| > 10 is below 1e-23.
inline constexpr double whitened_limit = 10.0;
inline constexpr double quadrature_tolerance = 1e-8;

inline int sign_of(std::uint32_t y, int m) { return (y >> m) & 1u ? 1 : -1; }

/// Interval of w for which s*(a + c*w) >= 0, intersected with the truncation box.
inline bool half_line(double a, double c, int s, double& lo, double& hi) {
    lo = -whitened_limit;
    hi = whitened_limit;
    const double cut = -a / c;
    if (s * c > 0) lo = std::max(lo, cut);
    else hi = std::min(hi, cut);
    return lo < hi;
}

/// Adaptive bisection on GK15 with an absolute error budget split evenly between halves.
/// (boost's own adaptive driver uses a tolerance relative to the integral, which
/// cannot be met on probabilities far below the roundoff of the integrand.)
template <class F>
double integrate_abs(const F& f, double lo, double hi, double tol, int depth, double& err_acc) {
    double err = 0.0;
    const double v = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(f, lo, hi, 0, 0.0, &err);
    if (err <= tol || depth == 0) {
        err_acc += err;
        return v;
    }
    const double mid = 0.5 * (lo + hi);
    return integrate_abs(f, lo, mid, 0.5 * tol, depth - 1, err_acc) +
           integrate_abs(f, mid, hi, 0.5 * tol, depth - 1, err_acc);
}

// T(h, (k - rho h) / (h sqrt(1 - rho^2))), with the h = 0 limit.
inline double owens_term(double h, double k, double rho, double s) {
    if (h == 0.0) return k - rho * h >= 0.0 ? 0.25 : -0.25;
    return boost::math::owens_t(h, (k - rho * h) / (h * s));
}

} // namespace detail

/// P(U < h, V < k) for standard normals with correlation rho (Owen's T representation).
inline double bivariate_normal_cdf(double h, double k, double rho) {
    using std::numbers::pi;
    if (rho >= 1.0 - 1e-15) return normal_cdf(std::min(h, k));
    if (rho <= -1.0 + 1e-15) return std::max(0.0, normal_cdf(h) - normal_cdf(-k));
    if (h == 0.0 && k == 0.0) return 0.25 + std::asin(rho) / (2.0 * pi);
    const double s = std::sqrt(1.0 - rho * rho);
    const double offset = h * k > 0.0 || (h * k == 0.0 && h + k >= 0.0) ? 0.0 : 0.5;
    const double p = 0.5 * (normal_cdf(h) + normal_cdf(k)) - detail::owens_term(h, k, rho, s) -
                     detail::owens_term(k, h, rho, s) - offset;
    return std::clamp(p, 0.0, 1.0);
}

/// Orthant probability with independent coordinates: product of 1-D Gaussian tails.
inline double orthant_probability_diagonal(const Eigen::VectorXd& mu, const Eigen::VectorXd& sd, std::uint32_t y) {
    double p = 1.0;
    for (Eigen::Index m = 0; m < mu.size(); ++m)
        p *= normal_cdf(detail::sign_of(y, static_cast<int>(m)) * mu(m) / sd(m));
    return p;
}

/// Orthant probability for M <= 3 with Z = mu + C w, C lower triangular.
///
/// The last two coordinates are handled by the bivariate normal CDF; for M = 3 the
/// first whitened coordinate is integrated by adaptive Gauss-Kronrod quadrature.
inline double orthant_probability_correlated(const Eigen::VectorXd& mu, const Eigen::MatrixXd& chol, std::uint32_t y) {
    using namespace detail;
    const auto m = static_cast<int>(mu.size());
    if (m < 1 || m > 3) throw ParameterError("correlated orthant quadrature supports 1 <= M <= 3");
    const int s0 = sign_of(y, 0);
    if (m == 1) return normal_cdf(s0 * mu(0) / chol(0, 0));

    // Orthant of the pair (a + u, b + v), u = ca*w_i, v = cb*w_i + cc*w_j.
    auto pair = [](double a, double b, int sa, int sb, double ca, double cb, double cc) {
        const double sd_a = std::abs(ca), sd_b = std::hypot(cb, cc);
        const double rho = ca * cb / (sd_a * sd_b);
        return bivariate_normal_cdf(sa * a / sd_a, sb * b / sd_b, sa * sb * rho);
    };
    const int s1 = sign_of(y, 1);
    if (m == 2) return pair(mu(0), mu(1), s0, s1, chol(0, 0), chol(1, 0), chol(1, 1));

    double lo = 0.0, hi = 0.0;
    if (!half_line(mu(0), chol(0, 0), s0, lo, hi)) return 0.0;
    const int s2 = sign_of(y, 2);
    auto f = [&](double w0) {
        return normal_pdf(w0) *
               pair(mu(1) + chol(1, 0) * w0, mu(2) + chol(2, 0) * w0, s1, s2, chol(1, 1), chol(2, 1), chol(2, 2));
    };
    double err = 0.0;
    const double p = integrate_abs(f, lo, hi, 1e-10, 20, err);
    if (!(err <= quadrature_tolerance) || !std::isfinite(p))
        throw QuadratureError("orthant quadrature did not reach 1e-8 absolute tolerance", err);
    return std::clamp(p, 0.0, 1.0);
}

} // namespace ftnq
