#pragma once

// Real-argument cylinder functions J_n, Y_n and the second-kind Hankel
// function H_n^(2) = J_n - j Y_n, for integer orders 0..60.
//
// Evaluation strategy:
//   J: ascending power series for x <= 2, Miller backward recurrence with
//      series normalization otherwise (uniformly accurate, no cancellation).
//   Y: ascending series (with log term) for orders 0,1 up to x = 13, Hankel
//      asymptotic expansion beyond; upward recurrence for higher orders,
//      which is stable because Y grows with the order.
// The two Y branches agree to ~1e-11 at the x = 13 seam; near zeros of the
// functions accuracy is relative to the J/Y envelope, as usual in double
// precision.

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace iscat {

inline constexpr int kMaxBesselOrder = 60;

namespace detail {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kEulerGamma = std::numbers::egamma;
inline constexpr double kYSeamX = 13.0;

// J_n by ascending series; used for x <= 2 where the terms decay at once.
inline double bessel_j_series(int n, double x) {
    const double half = 0.5 * x;
    double term = 1.0;
    for (int i = 1; i <= n; ++i) term *= half / static_cast<double>(i);
    double sum = term;
    const double q = half * half;
    for (int k = 1; k <= 80; ++k) {
        term *= -q / (static_cast<double>(k) * static_cast<double>(n + k));
        sum += term;
        if (std::abs(term) <= 1e-18 * std::abs(sum)) break;
    }
    return sum;
}

// All of J_0..J_nmax in one Miller backward-recurrence pass.
inline std::vector<double> bessel_j_backward(int nmax, double x) {
    const double cbrtx = std::cbrt(x);
    int mstart = std::max(nmax, static_cast<int>(std::ceil(x + 14.0 * cbrtx))) + 22;
    if (mstart % 2) ++mstart;

    std::vector<double> out(static_cast<std::size_t>(nmax) + 1, 0.0);
    double jp = 0.0;   // J~_{m+1}
    double jc = 1e-30; // J~_{m}
    double norm = 0.0; // J_0 + 2*sum_{k>=1} J_{2k}
    for (int m = mstart; m >= 0; --m) {
        const double jm = (2.0 * (m + 1) / x) * jc - jp;
        jp = jc;
        jc = jm;
        if ((m % 2) == 0) norm += (m == 0) ? jc : 2.0 * jc;
        if (m <= nmax) out[static_cast<std::size_t>(m)] = jc;
        if (std::abs(jc) > 1e250) {
            jp *= 1e-250;
            jc *= 1e-250;
            norm *= 1e-250;
            for (double& v : out) v *= 1e-250;
        }
    }
    for (double& v : out) v /= norm;
    return out;
}

// Hankel asymptotic amplitude series P, Q for order n at large x.
inline void hankel_pq(int n, double x, double& p, double& q) {
    const double mu = 4.0 * n * n;
    const double inv8x = 1.0 / (8.0 * x);
    p = 1.0;
    q = 0.0;
    double term = 1.0;
    double prev = std::numeric_limits<double>::max();
    for (int m = 1; m <= 40; ++m) {
        const double f = (mu - (2.0 * m - 1.0) * (2.0 * m - 1.0)) * inv8x / m;
        term *= f;
        const double mag = std::abs(term);
        if (mag >= prev) break; // past the smallest term: stop
        prev = mag;
        const int r = m % 4;
        if (r == 1) q += term;
        else if (r == 2) p -= term;
        else if (r == 3) q -= term;
        else p += term;
        if (mag <= 1e-17) break;
    }
}

// J_n and Y_n for n in {0,1} from the asymptotic expansion, x > seam.
inline void jy01_asymptotic(int n, double x, double& j, double& y) {
    double p, q;
    hankel_pq(n, x, p, q);
    const double omega = x - (2 * n + 1) * kPi / 4.0;
    const double amp = std::sqrt(2.0 / (kPi * x));
    const double c = std::cos(omega), s = std::sin(omega);
    j = amp * (p * c - q * s);
    y = amp * (p * s + q * c);
}

// Ascending series for Y_0, Y_1 (A&S 9.1.11), x <= seam.
inline double bessel_y01_series(int n, double x) {
    const double half = 0.5 * x;
    const double q = half * half;
    const double lg = std::log(half);

    // (2/pi) ln(x/2) J_n(x)
    double result = (2.0 / kPi) * lg * bessel_j_series(n, x);

    // -(1/pi) * (x/2)^{-n} * sum_{k=0}^{n-1} (n-k-1)!/k! (x^2/4)^k
    if (n == 1) result -= (1.0 / kPi) / half;

    // -(1/pi) (x/2)^n sum_k (psi(k+1)+psi(n+k+1)) (-x^2/4)^k / (k!(n+k)!)
    double psi_a = -kEulerGamma;          // psi(1)
    double psi_b = -kEulerGamma;          // psi(n+1)
    for (int i = 1; i <= n; ++i) psi_b += 1.0 / i;
    double coef = 1.0;                    // (x/2)^n / (0!(n+0)!)
    for (int i = 1; i <= n; ++i) coef *= half / i;
    double sum = (psi_a + psi_b) * coef;
    for (int k = 1; k <= 80; ++k) {
        coef *= -q / (static_cast<double>(k) * static_cast<double>(n + k));
        psi_a += 1.0 / k;
        psi_b += 1.0 / (n + k);
        const double term = (psi_a + psi_b) * coef;
        sum += term;
        if (std::abs(term) <= 1e-18 * std::abs(sum)) break;
    }
    result -= sum / kPi;
    return result;
}

inline double bessel_y01(int n, double x) {
    if (x > kYSeamX) {
        double j, y;
        jy01_asymptotic(n, x, j, y);
        return y;
    }
    return bessel_y01_series(n, x);
}

inline void check_order(int order) {
    if (order < 0 || order > kMaxBesselOrder)
        throw std::invalid_argument("bessel: order must be in [0, 60]");
}

} // namespace detail

/// J_order(x) for x >= 0.
inline double bessel_j(int order, double x) {
    detail::check_order(order);
    if (!(x >= 0.0) || !std::isfinite(x))
        throw std::domain_error("bessel_j: requires finite x >= 0");
    if (x == 0.0) return order == 0 ? 1.0 : 0.0;
    if (x <= 2.0) return detail::bessel_j_series(order, x);
    return detail::bessel_j_backward(order, x)[static_cast<std::size_t>(order)];
}

/// J_0..J_nmax(x) in one pass (the natural form for harmonic expansions).
inline std::vector<double> bessel_j_all(int nmax, double x) {
    detail::check_order(nmax);
    if (!(x >= 0.0) || !std::isfinite(x))
        throw std::domain_error("bessel_j_all: requires finite x >= 0");
    std::vector<double> out(static_cast<std::size_t>(nmax) + 1, 0.0);
    if (x == 0.0) {
        out[0] = 1.0;
        return out;
    }
    if (x <= 2.0) {
        for (int n = 0; n <= nmax; ++n) out[static_cast<std::size_t>(n)] = detail::bessel_j_series(n, x);
        return out;
    }
    return detail::bessel_j_backward(nmax, x);
}

/// Y_order(x) for x > 0 (logarithmic singularity at the origin).
inline double bessel_y(int order, double x) {
    detail::check_order(order);
    if (!(x > 0.0) || !std::isfinite(x))
        throw std::domain_error("bessel_y: requires finite x > 0");
    const double y0 = detail::bessel_y01(0, x);
    if (order == 0) return y0;
    const double y1 = detail::bessel_y01(1, x);
    if (order == 1) return y1;
    // upward recurrence, stable for Y
    double ym = y0, yc = y1;
    for (int m = 1; m < order; ++m) {
        const double yn = (2.0 * m / x) * yc - ym;
        ym = yc;
        yc = yn;
    }
    return yc;
}

/// H_order^(2)(x) = J_order(x) - j Y_order(x), x > 0.
inline std::complex<double> hankel2(int order, double x) {
    return {bessel_j(order, x), -bessel_y(order, x)};
}

} // namespace iscat
