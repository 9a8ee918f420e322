#pragma once

// Method-of-moments assembly of the discrete radiation operators on the
// pulse-basis / point-matching scheme with Richmond's equal-area-disc rule:
// every square cell is integrated as the disc of equal area (radius a_cell),
// which gives closed forms for all entries including the singular self term.

#include <vector>

#include <Eigen/Dense>

#include "iscat/domain.hpp"
#include "iscat/errors.hpp"
#include "iscat/specfun.hpp"

namespace iscat {

enum class OperatorKind { Internal, External, InternalY0, InternalModified };

struct DiscreteOperator {
    MatrixXcd entries;
    OperatorKind kind = OperatorKind::Internal;
};

enum class FieldRole { Incident, Total, ContrastSource, FD, FJ0, Indicator };

struct FieldMap {
    VectorXcd values;
    FieldRole role = FieldRole::Incident;
};

/// G_b(r, r') = -(j/4) k_b^2 H_0^(2)(k_b |r - r'|).
inline Complex green2d(const Point& r, const Point& r_src, double k_b) {
    const double d = (r - r_src).norm();
    if (d == 0.0) throw std::domain_error("green2d: coincident source and observation points");
    return -kJ / 4.0 * k_b * k_b * hankel2(0, k_b * d);
}

namespace mom {

/// Off-diagonal weight: cell integral of G_b equals -j * w_e * H_0^(2)(k d).
inline double offdiag_weight(double k_b, double a_cell) {
    return std::numbers::pi * k_b * a_cell / 2.0 * bessel_j(1, k_b * a_cell);
}

/// Closed-form self integral of G_b over the equal-area disc.
inline Complex self_term(double k_b, double a_cell) {
    const double x = k_b * a_cell;
    return -kJ * std::numbers::pi * x / 2.0 * hankel2(1, x) - 1.0;
}

/// Self integral of the -(k^2/4) Y_0 part alone (real).
inline double self_term_y0(double k_b, double a_cell) {
    const double x = k_b * a_cell;
    return -std::numbers::pi * x / 2.0 * bessel_y(1, x) - 1.0;
}

/// Cell integral of the bare J_0 kernel (the smooth part of H_0^(2)),
/// exact for any separation including zero.
inline double j0_cell_weight(double k_b, double a_cell) {
    return 2.0 * std::numbers::pi * a_cell / k_b * bessel_j(1, k_b * a_cell);
}

/// A_i on an arbitrary set of equal-area cells (used for disc-masked domains).
inline MatrixXcd internal_on_points(const std::vector<Point>& pts, double k_b, double a_cell) {
    const int n = static_cast<int>(pts.size());
    const double w = offdiag_weight(k_b, a_cell);
    const Complex diag = self_term(k_b, a_cell);
    MatrixXcd a(n, n);
    for (int i = 0; i < n; ++i) {
        a(i, i) = diag;
        for (int j = 0; j < i; ++j) {
            const Complex v = -kJ * w * hankel2(0, k_b * (pts[static_cast<std::size_t>(i)] - pts[static_cast<std::size_t>(j)]).norm());
            a(i, j) = v;
            a(j, i) = v;
        }
    }
    return a;
}

/// A_i^{Y0} = -(k^2/4) integral of Y_0(k|r-r'|): the real part of the kernel.
inline MatrixXcd y0_internal_on_points(const std::vector<Point>& pts, double k_b, double a_cell) {
    const int n = static_cast<int>(pts.size());
    const double w = offdiag_weight(k_b, a_cell);
    const double diag = self_term_y0(k_b, a_cell);
    MatrixXcd a(n, n);
    for (int i = 0; i < n; ++i) {
        a(i, i) = diag;
        for (int j = 0; j < i; ++j) {
            const double v = -w * bessel_y(0, k_b * (pts[static_cast<std::size_t>(i)] - pts[static_cast<std::size_t>(j)]).norm());
            a(i, j) = v;
            a(j, i) = v;
        }
    }
    return a;
}

/// Convolution matrix of the bare J_0 kernel with cell-area weighting, so that
/// A_i = -j (k^2/4) * J0conv + A_i^{Y0} holds entrywise.
inline Eigen::MatrixXd j0_conv_on_points(const std::vector<Point>& pts, double k_b, double a_cell) {
    const int n = static_cast<int>(pts.size());
    const double sw = j0_cell_weight(k_b, a_cell);
    Eigen::MatrixXd a(n, n);
    for (int i = 0; i < n; ++i) {
        a(i, i) = sw;
        for (int j = 0; j < i; ++j) {
            const double v = sw * bessel_j(0, k_b * (pts[static_cast<std::size_t>(i)] - pts[static_cast<std::size_t>(j)]).norm());
            a(i, j) = v;
            a(j, i) = v;
        }
    }
    return a;
}

} // namespace mom

inline DiscreteOperator assemble_internal(const Grid& grid) {
    return {mom::internal_on_points(grid.centers, grid.medium.k_b(), grid.a_cell()),
            OperatorKind::Internal};
}

inline DiscreteOperator assemble_y0_internal(const Grid& grid) {
    return {mom::y0_internal_on_points(grid.centers, grid.medium.k_b(), grid.a_cell()),
            OperatorKind::InternalY0};
}

inline DiscreteOperator assemble_external(const Grid& grid, const ProbeRing& probes) {
    require_probes_outside(probes, grid);
    const double k = grid.medium.k_b();
    const double w = mom::offdiag_weight(k, grid.a_cell());
    MatrixXcd a(probes.n_rx(), grid.cell_count());
    for (int m = 0; m < probes.n_rx(); ++m) {
        const Point rm = probes.rx_position(m);
        for (int c = 0; c < grid.cell_count(); ++c)
            a(m, c) = -kJ * w * hankel2(0, k * (rm - grid.centers[static_cast<std::size_t>(c)]).norm());
    }
    return {std::move(a), OperatorKind::External};
}

/// f_D of the CS-EB family for disc parameter a, evaluated at the cell centers:
///   f_D(r) = -(j pi k a / 2) H_1^(2)(k a) J_0(k |r|) - 1.
inline FieldMap compute_fD(const Grid& grid, double a) {
    if (!(a > 0.0)) throw ConfigError("compute_fD: disc parameter a must be positive");
    const double k = grid.medium.k_b();
    const Complex front = -kJ * std::numbers::pi * k * a / 2.0 * hankel2(1, k * a);
    FieldMap f;
    f.role = FieldRole::FD;
    f.values.resize(grid.cell_count());
    for (int c = 0; c < grid.cell_count(); ++c)
        f.values[c] = front * bessel_j(0, k * grid.centers[static_cast<std::size_t>(c)].norm()) - 1.0;
    return f;
}

inline VectorXcd compute_fD_on_points(const std::vector<Point>& pts, double k_b, double a) {
    if (!(a > 0.0)) throw ConfigError("compute_fD: disc parameter a must be positive");
    const Complex front = -kJ * std::numbers::pi * k_b * a / 2.0 * hankel2(1, k_b * a);
    VectorXcd f(pts.size());
    for (Eigen::Index c = 0; c < f.size(); ++c)
        f[c] = front * bessel_j(0, k_b * pts[static_cast<std::size_t>(c)].norm()) - 1.0;
    return f;
}

} // namespace iscat
