#pragma once

// Virtual-Experiments layer: the regularized multistatic focusing solve that
// designs superposition coefficients alpha per pivot point, the derived
// indicator map, and greedy pivot selection inside the estimated support.

#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "iscat/domain.hpp"
#include "iscat/errors.hpp"
#include "iscat/forward.hpp"
#include "iscat/operators.hpp"

namespace iscat {

inline constexpr double kDefaultVeReg = 1e-2;  // eta = reg * sigma_max(F)^2

struct VirtualExperiment {
    Point pivot = Point::Zero();
    VectorXcd alpha;  // one coefficient per transmitter
    VectorXcd e_i;    // superposed incident field on the grid cells
    VectorXcd e_s;    // superposed data at the receivers
};

struct PivotSet {
    std::vector<Point> points;
    std::vector<int> cell_indices;
    std::vector<double> scores;
    std::string warning;  // nonempty if fewer than requested were admissible
};

namespace detail {

struct FocusingSolver {
    Eigen::JacobiSVD<MatrixXcd> svd;
    VectorXd filter;  // sigma_i / (sigma_i^2 + eta)

    FocusingSolver(const MatrixXcd& f, double reg) : svd(f, Eigen::ComputeThinU | Eigen::ComputeThinV) {
        const VectorXd& s = svd.singularValues();
        if (s.size() == 0 || s[0] == 0.0)
            throw SolverError("virtual experiments: degenerate (zero) multistatic data");
        const double eta = reg * s[0] * s[0];
        filter = (s.array() / (s.array().square() + eta)).matrix();
    }

    VectorXcd solve(const VectorXcd& g) const {
        return svd.matrixV() * (filter.asDiagonal() * (svd.matrixU().adjoint() * g));
    }
};

inline VectorXcd green_to_receivers(const Point& z, const ProbeRing& probes, double k_b) {
    VectorXcd g(probes.n_rx());
    for (int m = 0; m < probes.n_rx(); ++m) g[m] = green2d(probes.rx_position(m), z, k_b);
    return g;
}

} // namespace detail

/// 1/||alpha_z|| over the grid: large inside the scatterer support.
inline FieldMap lsm_indicator(const MultistaticData& data, const Grid& grid, double reg = kDefaultVeReg) {
    if (data.n_tx() < 2) throw ConfigError("lsm_indicator: need at least 2 transmitters");
    const detail::FocusingSolver solver(data.values, reg);
    const double k = grid.medium.k_b();
    FieldMap ind;
    ind.role = FieldRole::Indicator;
    ind.values.resize(grid.cell_count());
    for (int c = 0; c < grid.cell_count(); ++c) {
        const VectorXcd alpha = solver.solve(
            detail::green_to_receivers(grid.centers[static_cast<std::size_t>(c)], data.probes, k));
        ind.values[c] = 1.0 / alpha.norm();
    }
    return ind;
}

/// Designs one virtual experiment focused on the pivot: alpha is the Tikhonov
/// solution of F alpha = G_b(., pivot), and the VE fields/data are the
/// alpha-weighted superpositions of the originals.
inline VirtualExperiment design_ve(const MultistaticData& data, const Point& pivot, double reg,
                                   const Grid& grid, const MatrixXcd& incident) {
    if (std::abs(pivot.x()) > grid.length / 2.0 || std::abs(pivot.y()) > grid.length / 2.0)
        throw ConfigError("design_ve: pivot must lie inside D");
    const detail::FocusingSolver solver(data.values, reg);
    VirtualExperiment ve;
    ve.pivot = pivot;
    ve.alpha = solver.solve(detail::green_to_receivers(pivot, data.probes, grid.medium.k_b()));
    ve.e_i = incident * ve.alpha;
    ve.e_s = data.values * ve.alpha;
    return ve;
}

/// Exact alpha-weighted superposition over transmitters (data, fields or
/// contrast sources alike: anything stored one column per transmitter).
inline VectorXcd superpose(const MatrixXcd& per_transmitter, const VectorXcd& alpha) {
    if (per_transmitter.cols() != alpha.size())
        throw ConfigError("superpose: transmitter count mismatch");
    return per_transmitter * alpha;
}

/// Greedy selection of the P highest-indicator cells with a pairwise
/// separation floor; deterministic lexicographic tie-break.
inline PivotSet select_pivots(const FieldMap& indicator, const Grid& grid, int p,
                              double min_separation) {
    if (p < 1) throw ConfigError("select_pivots: P must be >= 1");
    if (indicator.values.size() != grid.cell_count())
        throw ConfigError("select_pivots: indicator / grid size mismatch");
    std::vector<int> order(static_cast<std::size_t>(grid.cell_count()));
    for (int i = 0; i < grid.cell_count(); ++i) order[static_cast<std::size_t>(i)] = i;
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        const double va = std::abs(indicator.values[a]), vb = std::abs(indicator.values[b]);
        if (va != vb) return va > vb;
        return a < b;
    });
    PivotSet out;
    for (int idx : order) {
        if (static_cast<int>(out.points.size()) == p) break;
        const Point& cand = grid.centers[static_cast<std::size_t>(idx)];
        bool ok = true;
        for (const Point& chosen : out.points)
            if ((cand - chosen).norm() < min_separation) { ok = false; break; }
        if (!ok) continue;
        out.points.push_back(cand);
        out.cell_indices.push_back(idx);
        out.scores.push_back(std::abs(indicator.values[idx]));
    }
    if (static_cast<int>(out.points.size()) < p)
        out.warning = "select_pivots: only " + std::to_string(out.points.size()) +
                      " admissible pivots for requested " + std::to_string(p);
    return out;
}

} // namespace iscat
