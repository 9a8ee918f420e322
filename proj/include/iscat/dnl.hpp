#pragma once

// Degree-of-non-linearity analytics: spectral norms of the rewritten internal
// operators, auxiliary-contrast norms, the Schwarz bound chi_mod * A_mod, the
// Fig.-1-style norm curves over circular domains, and the footnote rule of
// thumb (bound < 2) for false-solution-free inversion.

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "iscat/domain.hpp"
#include "iscat/linalg.hpp"
#include "iscat/models.hpp"
#include "iscat/operators.hpp"

namespace iscat {

/// Largest singular value of the discrete operator (relative accuracy 1e-8).
inline double operator_norm(const DiscreteOperator& op) { return spectral_norm(op.entries); }
inline double operator_norm(const MatrixXcd& entries) { return spectral_norm(entries); }

/// max_r |chi_mod(r)|, the contrast-side factor of the bound.
inline double contrast_norm(const ContrastMap& chi_mod) {
    return chi_mod.values.size() == 0 ? 0.0 : chi_mod.values.cwiseAbs().maxCoeff();
}

/// Schwarz upper bound ||chi_mod|| * ||A_mod|| for the given rewriting.
inline double dnl_bound(const ModelKind& kind, const ContrastMap& chi, const Grid& grid) {
    const ModifiedModel model = build_modified_model(kind, grid);
    return contrast_norm(model.chi_to_mod(chi)) * spectral_norm(model.a_mod);
}

inline double dnl_bound(const ModifiedModel& model, const ContrastMap& chi) {
    return contrast_norm(model.chi_to_mod(chi)) * spectral_norm(model.a_mod);
}

struct NormCurve {
    ModelKind kind;
    std::vector<double> radii;  // r_D / lambda, strictly increasing
    std::vector<double> norms;
};

namespace detail {

/// Lattice cells whose centers fall inside the disc of radius r_d; the cell
/// size honors cells_per_lambda but is also capped so at least eight cells
/// span the diameter (small discs stay resolvable).
inline std::vector<Point> disc_cells(double r_d_lambda, int cells_per_lambda, double* a_cell) {
    const double h = std::min(1.0 / cells_per_lambda, 2.0 * r_d_lambda / 8.0);
    const int n = std::max(2, static_cast<int>(std::ceil(2.0 * r_d_lambda / h)));
    std::vector<Point> pts;
    for (int iy = 0; iy < n; ++iy)
        for (int ix = 0; ix < n; ++ix) {
            const Point p{(ix + 0.5 - n / 2.0) * h, (iy + 0.5 - n / 2.0) * h};
            if (p.norm() <= r_d_lambda) pts.push_back(p);
        }
    *a_cell = std::sqrt(h * h / std::numbers::pi);
    return pts;
}

inline MatrixXcd modified_operator_on_points(const ModelKind& kind, const std::vector<Point>& pts,
                                             double k_b, double a_cell) {
    switch (kind.tag) {
        case ModelKind::Tag::H0:
            return mom::internal_on_points(pts, k_b, a_cell);
        case ModelKind::Tag::CSEB: {
            MatrixXcd a = mom::internal_on_points(pts, k_b, a_cell);
            a.diagonal() -= compute_fD_on_points(pts, k_b, kind.cseb_a);
            return a;
        }
        case ModelKind::Tag::NIE: {
            MatrixXcd a = mom::internal_on_points(pts, k_b, a_cell) / kind.beta;
            a.diagonal().array() += 1.0;
            return a;
        }
        case ModelKind::Tag::Y0:
            return mom::y0_internal_on_points(pts, k_b, a_cell);
        case ModelKind::Tag::Y0NIE: {
            MatrixXcd a = mom::y0_internal_on_points(pts, k_b, a_cell) / kind.beta;
            a.diagonal().array() += 1.0;
            return a;
        }
    }
    return {};
}

} // namespace detail

/// ||A_mod|| on circular domains of radius r_D, abscissa in r_D/lambda.
/// Lengths are expressed in wavelengths internally; the norms are invariant
/// to the absolute scale.
inline NormCurve norm_curve(const ModelKind& kind, const std::vector<double>& radii_over_lambda,
                            int cells_per_lambda) {
    if (cells_per_lambda < 10) throw ConfigError("norm_curve: need at least 10 cells per wavelength");
    for (std::size_t i = 1; i < radii_over_lambda.size(); ++i)
        if (radii_over_lambda[i] <= radii_over_lambda[i - 1])
            throw ConfigError("norm_curve: radii must be strictly increasing");
    const double k_b = 2.0 * std::numbers::pi;  // lambda = 1 units
    NormCurve curve;
    curve.kind = kind;
    curve.radii = radii_over_lambda;
    curve.norms.resize(radii_over_lambda.size());
    for (std::size_t i = 0; i < radii_over_lambda.size(); ++i) {
        double a_cell = 0.0;
        const std::vector<Point> pts = detail::disc_cells(radii_over_lambda[i], cells_per_lambda, &a_cell);
        curve.norms[i] = spectral_norm(detail::modified_operator_on_points(kind, pts, k_b, a_cell));
    }
    return curve;
}

/// Smallest n with q^{n+1}/(1-q) <= tol; empty when the series bound diverges.
inline std::optional<int> neumann_terms_needed(double q, double tol) {
    if (!(tol > 0.0)) throw ConfigError("neumann_terms_needed: tol must be positive");
    if (q < 0.0) throw ConfigError("neumann_terms_needed: q must be >= 0");
    if (q >= 1.0) return std::nullopt;
    if (q == 0.0) return 0;
    double bound = q / (1.0 - q);  // n = 0
    int n = 0;
    while (bound > tol) {
        bound *= q;
        if (++n > 100000000) return std::nullopt;  // tol unreachably small
    }
    return n;
}

struct FeasibilityVerdict {
    bool likely_recoverable = false;
    double bound = 0.0;
};

/// Footnote rule of thumb: inversion is likely false-solution free when
/// ||chi_mod|| * ||A_mod|| < 2 (full-aspect data).
inline FeasibilityVerdict feasibility_heuristic(const ModelKind& kind, const ContrastMap& chi,
                                                const Grid& grid) {
    const double b = dnl_bound(kind, chi, grid);
    return {b < 2.0, b};
}

} // namespace iscat
