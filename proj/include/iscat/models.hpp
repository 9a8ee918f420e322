#pragma once

// The state-equation rewritings (CS-EB, NIE, Y0, Y0-NIE) expressed as one
// uniform ModifiedModel: every model provides the modified internal operator,
// the pointwise contrast map chi <-> chi_mod and its inverse, the contrast
// source scale, and (for the Y0 family) the incident-field transform that
// subtracts the radiating-current contribution -j k^2/4 F_J0.
//
// All rewritings are exact: the contrast sources solving the standard state
// equation also solve every modified one, which the tests pin down to 1e-10.

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "iscat/domain.hpp"
#include "iscat/errors.hpp"
#include "iscat/operators.hpp"

namespace iscat {

inline constexpr double kSingularGuard = 1e-8;

struct ModelKind {
    enum class Tag { H0, CSEB, NIE, Y0, Y0NIE };
    Tag tag = Tag::H0;
    double cseb_a = 0.0;      // CS-EB disc parameter a (m)
    Complex beta{1.0, 0.0};   // NIE family constant

    static ModelKind h0() { return {Tag::H0, 0.0, {1.0, 0.0}}; }
    static ModelKind cseb(double a) {
        if (!(a > 0.0)) throw ConfigError("CS-EB model: parameter a must be positive");
        return {Tag::CSEB, a, {1.0, 0.0}};
    }
    static ModelKind nie(Complex beta) {
        if (beta == Complex{0.0, 0.0}) throw ConfigError("NIE model: beta must be nonzero");
        return {Tag::NIE, 0.0, beta};
    }
    static ModelKind y0() { return {Tag::Y0, 0.0, {1.0, 0.0}}; }
    static ModelKind y0nie(Complex beta) {
        if (beta == Complex{0.0, 0.0}) throw ConfigError("Y0-NIE model: beta must be nonzero");
        return {Tag::Y0NIE, 0.0, beta};
    }

    bool is_nie_family() const { return tag == Tag::NIE || tag == Tag::Y0NIE; }
    bool is_y0_family() const { return tag == Tag::Y0 || tag == Tag::Y0NIE; }

    std::string name() const {
        switch (tag) {
            case Tag::H0: return "h0";
            case Tag::CSEB: return "cseb";
            case Tag::NIE: return "nie";
            case Tag::Y0: return "y0";
            case Tag::Y0NIE: return "y0nie";
        }
        return "?";
    }
};

namespace detail {

template <typename F>
VectorXcd pointwise_guarded(const VectorXcd& in, F&& denom_of, const char* what) {
    std::vector<int> bad;
    VectorXcd out(in.size());
    for (Eigen::Index i = 0; i < in.size(); ++i) {
        const Complex den = denom_of(i);
        if (std::abs(den) <= kSingularGuard) bad.push_back(static_cast<int>(i));
        else out[i] = in[i] / den;
    }
    if (!bad.empty()) throw SingularMapError(what, bad);
    return out;
}

} // namespace detail

/// p = chi / (1 - chi f_D)
inline ContrastMap chi_to_p(const ContrastMap& chi, const FieldMap& f_d) {
    VectorXcd p = detail::pointwise_guarded(chi.values,
        [&](Eigen::Index i) { return 1.0 - chi.values[i] * f_d.values[i]; },
        "chi_to_p: 1 - chi*f_D vanished (near-singular cells listed)");
    return {std::move(p), ContrastSemantics::AuxiliaryP};
}

/// chi = p / (1 + p f_D)
inline ContrastMap p_to_chi(const ContrastMap& p, const FieldMap& f_d) {
    VectorXcd chi = detail::pointwise_guarded(p.values,
        [&](Eigen::Index i) { return 1.0 + p.values[i] * f_d.values[i]; },
        "p_to_chi: 1 + p*f_D vanished (near-singular cells listed)");
    return {std::move(chi), ContrastSemantics::PhysicalChi};
}

/// R = beta chi / (beta chi + 1)
inline ContrastMap chi_to_R(const ContrastMap& chi, Complex beta) {
    VectorXcd r(chi.values.size());
    std::vector<int> bad;
    for (Eigen::Index i = 0; i < chi.values.size(); ++i) {
        const Complex bc = beta * chi.values[i];
        if (std::abs(bc + 1.0) <= kSingularGuard) bad.push_back(static_cast<int>(i));
        else r[i] = bc / (bc + 1.0);
    }
    if (!bad.empty()) throw SingularMapError("chi_to_R: beta*chi + 1 vanished", bad);
    return {std::move(r), ContrastSemantics::AuxiliaryR};
}

/// chi = R / (beta (1 - R))
inline ContrastMap R_to_chi(const ContrastMap& r, Complex beta) {
    VectorXcd chi = detail::pointwise_guarded(r.values,
        [&](Eigen::Index i) { return beta * (1.0 - r.values[i]); },
        "R_to_chi: 1 - R vanished (errors in R amplify here)");
    return {std::move(chi), ContrastSemantics::PhysicalChi};
}

/// F_J0 per view with a precomputed J_0 convolution matrix.
inline MatrixXcd compute_F_J0(const MatrixXcd& w_views, const MatrixXcd& j0_conv) {
    return j0_conv * w_views;
}

/// F_J0 = integral of J_0(k|r-r'|) W(r') over D, one column per view.
inline MatrixXcd compute_F_J0(const MatrixXcd& w_views, const Grid& grid) {
    const MatrixXcd j0c =
        mom::j0_conv_on_points(grid.centers, grid.medium.k_b(), grid.a_cell()).cast<Complex>();
    return compute_F_J0(w_views, j0c);
}

struct ModifiedModel {
    ModelKind kind;
    MatrixXcd a_mod;     // the rewritten internal operator (Eq.-17 role)
    MatrixXcd j0_conv;   // J_0 convolution matrix; Y0 family only
    Complex source_scale{1.0, 0.0};  // W_mod = source_scale * W
    bool y0_incident = false;        // E_i_mod = E_i - j k^2/4 F_J0
    VectorXcd f_d;             // CS-EB only
    double k_b = 0.0;

    ContrastMap chi_to_mod(const ContrastMap& chi) const {
        switch (kind.tag) {
            case ModelKind::Tag::H0:
            case ModelKind::Tag::Y0: return chi;
            case ModelKind::Tag::CSEB: return chi_to_p(chi, FieldMap{f_d, FieldRole::FD});
            case ModelKind::Tag::NIE:
            case ModelKind::Tag::Y0NIE: return chi_to_R(chi, kind.beta);
        }
        return chi;
    }

    ContrastMap mod_to_chi(const ContrastMap& chi_mod) const {
        switch (kind.tag) {
            case ModelKind::Tag::H0:
            case ModelKind::Tag::Y0: return chi_mod;
            case ModelKind::Tag::CSEB: return p_to_chi(chi_mod, FieldMap{f_d, FieldRole::FD});
            case ModelKind::Tag::NIE:
            case ModelKind::Tag::Y0NIE: return R_to_chi(chi_mod, kind.beta);
        }
        return chi_mod;
    }

    /// The W-closed operator for direct forward solves: substituting the
    /// F_J0(W) dependence back into the state equation turns the Y0 kernel
    /// back into the full one, so this always reduces to A_i-based algebra.
    MatrixXcd solve_operator() const {
        if (!y0_incident) return a_mod;
        const Complex c = -kJ * k_b * k_b / 4.0 / source_scale;
        return a_mod + c * j0_conv;
    }

    /// Modified incident field given F_J0 (identity transform otherwise).
    MatrixXcd modified_incident(const MatrixXcd& e_inc, const MatrixXcd& f_j0) const {
        if (!y0_incident) return e_inc;
        return e_inc - kJ * (k_b * k_b / 4.0) * f_j0;
    }
};

inline ModifiedModel build_modified_model(const ModelKind& kind, const Grid& grid) {
    ModifiedModel m;
    m.kind = kind;
    m.k_b = grid.medium.k_b();
    m.source_scale = kind.is_nie_family() ? kind.beta : Complex{1.0, 0.0};
    m.y0_incident = kind.is_y0_family();

    switch (kind.tag) {
        case ModelKind::Tag::H0:
            m.a_mod = assemble_internal(grid).entries;
            break;
        case ModelKind::Tag::CSEB: {
            m.a_mod = assemble_internal(grid).entries;
            m.f_d = compute_fD(grid, kind.cseb_a).values;
            m.a_mod.diagonal() -= m.f_d;
            break;
        }
        case ModelKind::Tag::NIE:
            m.a_mod = assemble_internal(grid).entries / kind.beta;
            m.a_mod.diagonal().array() += 1.0;
            break;
        case ModelKind::Tag::Y0:
            m.a_mod = assemble_y0_internal(grid).entries;
            m.j0_conv = mom::j0_conv_on_points(grid.centers, m.k_b, grid.a_cell()).cast<Complex>();
            break;
        case ModelKind::Tag::Y0NIE:
            m.a_mod = assemble_y0_internal(grid).entries / kind.beta;
            m.a_mod.diagonal().array() += 1.0;
            m.j0_conv = mom::j0_conv_on_points(grid.centers, m.k_b, grid.a_cell()).cast<Complex>();
            break;
    }
    return m;
}

inline ModifiedModel build_modified_model(const ModelKind& kind, const Grid& grid,
                                          const ProbeRing& probes) {
    require_probes_outside(probes, grid);
    return build_modified_model(kind, grid);
}

/// Data-driven estimate of F_J0: receiver-angle harmonics of the measured
/// scattered field, de-embedded by the H_n^(2)(k R) radiation factors, then
/// resynthesized inside D through the Bessel addition theorem.
inline MatrixXcd estimate_F_J0_from_data(const MatrixXcd& data, const ProbeRing& probes,
                                         const Grid& grid, int n_harmonics,
                                         std::vector<std::string>* warnings = nullptr) {
    const int n_rx = probes.n_rx();
    const int n_views = static_cast<int>(data.cols());
    const double k = grid.medium.k_b();
    const int n_avail = std::min((n_rx - 1) / 2, kMaxBesselOrder);
    int nh = std::min(n_harmonics, n_avail);
    const int n_visible = static_cast<int>(std::ceil(k * grid.enclosing_radius()));
    if (warnings && n_harmonics > n_avail)
        warnings->push_back("estimate_F_J0: receiver count supports only " + std::to_string(n_avail) + " harmonics");
    if (warnings && nh < n_visible + 5)
        warnings->push_back("estimate_F_J0: harmonic band truncated below k*r_D + 5");

    // receiver-angle harmonic coefficients c_n, |n| <= nh
    MatrixXcd coeff(2 * nh + 1, n_views);
    for (int h = -nh; h <= nh; ++h) {
        VectorXcd basis(n_rx);
        for (int mrx = 0; mrx < n_rx; ++mrx)
            basis[mrx] = std::exp(-kJ * (static_cast<double>(h) * probes.rx_angles[mrx]));
        coeff.row(h + nh) = (basis.transpose() * data) / static_cast<double>(n_rx);
    }

    // soft-threshold at 3x the noise floor, estimated from supra-visible orders
    double sigma = 0.0;
    {
        std::vector<double> tail;
        for (int h = -nh; h <= nh; ++h)
            if (std::abs(h) > n_visible)
                for (int t = 0; t < n_views; ++t) tail.push_back(std::abs(coeff(h + nh, t)));
        if (!tail.empty()) {
            std::nth_element(tail.begin(), tail.begin() + tail.size() / 2, tail.end());
            sigma = tail[tail.size() / 2];
        }
    }
    const double thresh = 3.0 * sigma;
    if (thresh > 0.0)
        coeff = coeff.unaryExpr([thresh](Complex c) {
            const double a = std::abs(c);
            return (a <= thresh) ? Complex{0.0, 0.0} : c * ((a - thresh) / a);
        });

    // de-embed and resynthesize
    VectorXcd deembed(2 * nh + 1);
    for (int h = -nh; h <= nh; ++h) {
        const int ha = std::abs(h);
        Complex hank = hankel2(ha, k * probes.radius);
        if (h < 0 && (ha % 2)) hank = -hank;  // H_{-n} = (-1)^n H_n
        deembed[h + nh] = 1.0 / (-kJ * k * k / 4.0 * hank);
    }

    MatrixXcd f = MatrixXcd::Zero(grid.cell_count(), n_views);
    for (int c = 0; c < grid.cell_count(); ++c) {
        const Point& r = grid.centers[static_cast<std::size_t>(c)];
        const double rho = r.norm();
        const double phi = std::atan2(r.y(), r.x());
        const std::vector<double> jn = bessel_j_all(nh, k * rho);
        for (int h = -nh; h <= nh; ++h) {
            const int ha = std::abs(h);
            double jval = jn[static_cast<std::size_t>(ha)];
            if (h < 0 && (ha % 2)) jval = -jval;  // J_{-n} = (-1)^n J_n
            const Complex mode = jval * std::exp(kJ * (static_cast<double>(h) * phi));
            f.row(c) += (deembed[h + nh] * mode) * coeff.row(h + nh);
        }
    }
    return f;
}

} // namespace iscat
