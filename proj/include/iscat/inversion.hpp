#pragma once

// Model-generic Contrast Source Inversion.
//
// One engine drives standard CSI (any ModifiedModel: H0, CS-EB, NIE, Y0,
// Y0-NIE) and VE-CSI (views are designed virtual experiments, optionally with
// the angular-variation penalty around each pivot). Per outer iteration:
//   (a) one Polak-Ribiere CG step per view on the contrast sources, with the
//       exact complex step length of the quadratic cost;
//   (b) pointwise least-squares update of chi_mod over views, followed by
//       projection onto the centered N_arm x N_arm Fourier band; the update
//       is kept only if it does not increase the cost.
// Cost terms are normalized per view by ||E_i_mod||_D^2 and ||E_s||_Gamma^2.
//
// For the Y0 family the modified incident field starts from the data-driven
// F_J0 estimate and is refreshed from the current contrast-source iterate
// every fj0_refresh iterations (the CG state restarts there, and the cost may
// step discontinuously since the model itself changed).

#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "iscat/domain.hpp"
#include "iscat/errors.hpp"
#include "iscat/linalg.hpp"
#include "iscat/models.hpp"
#include "iscat/operators.hpp"
#include "iscat/virtexp.hpp"

namespace iscat {

struct InversionOptions {
    int max_iterations = 15000;
    double stall_tol = 1e-6;  // relative cost decrease over the stall window
    int stall_window = 50;
    int n_arm = 13;                     // odd, <= min(Nx, Ny)
    std::vector<double> tau;            // per-pivot penalty weights; empty = auto
    double tau_auto_scale = 0.1;        // auto: tau = scale * cost(init)/Phi_W(init)
    double neighborhood_radius = -1.0;  // J_R radius (m); <= 0 means 0.25 lambda_b
    int fj0_refresh = 50;               // Y0 family refresh period; 0 = never
    int fj0_harmonics = 64;             // capped by the receiver ring anyway
    std::uint64_t seed = 0;             // recorded in metadata; the engine is RNG-free
    int threads = 0;                    // 0 = hardware concurrency

    void validate(const Grid& grid) const {
        if (max_iterations < 1) throw ConfigError("inversion: max_iterations must be >= 1");
        if (n_arm % 2 == 0 || n_arm > std::min(grid.nx, grid.ny))
            throw ConfigError("inversion: N_arm must be odd and <= min(Nx, Ny)");
        if (stall_window < 1 || stall_tol < 0) throw ConfigError("inversion: bad stall rule");
        for (double t : tau)
            if (t < 0) throw ConfigError("inversion: penalty weights must be >= 0");
    }
};

struct InversionResult {
    ContrastMap chi_mod;
    ContrastMap chi;
    MatrixXcd w;  // unscaled contrast sources, one column per view/pivot
    std::vector<double> cost_history;
    int iterations = 0;
    double nmse = std::numeric_limits<double>::quiet_NaN();
    std::vector<int> clamped_cells;
    std::vector<std::string> warnings;
};

/// Back-propagation starting guess: per view W_0 = c A_e^H d with the
/// residual-optimal complex scalar c.
inline MatrixXcd backprop_init(const MatrixXcd& a_e, const MatrixXcd& data,
                               std::vector<std::string>* warnings = nullptr) {
    MatrixXcd w0(a_e.cols(), data.cols());
    for (Eigen::Index t = 0; t < data.cols(); ++t) {
        const VectorXcd b = a_e.adjoint() * data.col(t);
        const VectorXcd ab = a_e * b;
        const double denom = ab.squaredNorm();
        if (denom == 0.0) {
            if (warnings) warnings->push_back("backprop_init: zero data view " + std::to_string(t));
            w0.col(t).setZero();
            continue;
        }
        const Complex c = ab.dot(data.col(t)) / denom;  // dot() conjugates the lhs
        w0.col(t) = c * b;
    }
    return w0;
}

/// NMSE = ||chi - chi_hat||^2 / ||chi||^2 (discrete 2-norm over cells).
inline double nmse(const ContrastMap& chi_true, const ContrastMap& chi_hat) {
    const double denom = chi_true.values.squaredNorm();
    if (denom == 0.0) throw std::invalid_argument("nmse: ground truth is identically zero");
    return (chi_true.values - chi_hat.values).squaredNorm() / denom;
}

/// Real symmetric Dirichlet-kernel projector onto the centered n_arm-band.
inline Eigen::MatrixXd dirichlet_projector(int n, int n_arm) {
    Eigen::MatrixXd p(n, n);
    for (int m = 0; m < n; ++m)
        for (int l = 0; l <= m; ++l) {
            const int d = m - l;
            double v;
            if (d == 0) v = static_cast<double>(n_arm) / n;
            else v = std::sin(std::numbers::pi * n_arm * d / n) /
                     (n * std::sin(std::numbers::pi * d / n));
            p(m, l) = v;
            p(l, m) = v;
        }
    return p;
}

/// Band-limit a cell map to the centered N_arm x N_arm Fourier block.
inline ContrastMap fourier_project(const ContrastMap& chi_mod, int n_arm, const Grid& grid) {
    if (n_arm % 2 == 0 || n_arm < 1 || n_arm > std::min(grid.nx, grid.ny))
        throw ConfigError("fourier_project: N_arm must be odd and <= grid size");
    if (chi_mod.values.size() != grid.cell_count())
        throw ConfigError("fourier_project: map / grid size mismatch");
    const MatrixXcd px = dirichlet_projector(grid.nx, n_arm).cast<Complex>();
    const MatrixXcd py = (grid.ny == grid.nx) ? px : dirichlet_projector(grid.ny, n_arm).cast<Complex>();
    using RowMat = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    Eigen::Map<const RowMat> m(chi_mod.values.data(), grid.ny, grid.nx);
    RowMat out = py * m * px;  // both projectors are symmetric
    ContrastMap r;
    r.semantics = chi_mod.semantics;
    r.values = Eigen::Map<const VectorXcd>(out.data(), grid.cell_count());
    return r;
}

/// Fixed linear resampling operator behind the Eq.-26 angular penalty:
/// 5 concentric rings of 16 bilinear samples inside J_R(pivot), spectral
/// differentiation along each ring, rows scaled by the ring quadrature
/// weight sqrt(rho_i * d_rho * d_phi).
struct AngularPenaltyOp {
    Eigen::MatrixXd m;  // (rings*16) x cells; empty if no ring fits
    bool empty() const { return m.size() == 0; }

    VectorXcd apply(const VectorXcd& u) const {
        return (m * u.real()).cast<Complex>() + kJ * (m * u.imag()).cast<Complex>();
    }
    VectorXcd apply_adjoint(const VectorXcd& y) const {
        return (m.transpose() * y.real()).cast<Complex>() +
               kJ * (m.transpose() * y.imag()).cast<Complex>();
    }
    double value(const VectorXcd& u, double tau) const {
        if (empty() || tau == 0.0) return 0.0;
        return tau * apply(u).squaredNorm();
    }
    /// d(value)/d(conj u); pair with 2*Re<g, v> for directional derivatives.
    VectorXcd gradient(const VectorXcd& u, double tau) const {
        if (empty() || tau == 0.0) return VectorXcd::Zero(u.size());
        return tau * apply_adjoint(apply(u));
    }
};

inline AngularPenaltyOp make_angular_penalty(const Grid& grid, const Point& pivot, double radius,
                                             std::string* warning = nullptr) {
    constexpr int kRings = 5;
    constexpr int kAngles = 16;
    if (!(radius > 0.0)) throw ConfigError("angular penalty: neighborhood radius must be positive");

    // spectral differentiation on kAngles uniform samples (Nyquist zeroed):
    // D(m,l) = -(2/N) sum_{f=1}^{N/2-1} f sin(2 pi f (m-l) / N)
    Eigen::MatrixXd diff(kAngles, kAngles);
    for (int m = 0; m < kAngles; ++m)
        for (int l = 0; l < kAngles; ++l) {
            double s = 0.0;
            for (int f = 1; f < kAngles / 2; ++f)
                s += f * std::sin(2.0 * std::numbers::pi * f * (m - l) / kAngles);
            diff(m, l) = -2.0 * s / kAngles;
        }

    const double d_rho = radius / kRings;
    const double d_phi = 2.0 * std::numbers::pi / kAngles;
    std::vector<Eigen::MatrixXd> ring_rows;
    for (int i = 1; i <= kRings; ++i) {
        const double rho = i * d_rho;
        Eigen::MatrixXd b = Eigen::MatrixXd::Zero(kAngles, grid.cell_count());
        bool ok = true;
        for (int a = 0; a < kAngles && ok; ++a) {
            const double phi = a * d_phi;
            const Point p = pivot + rho * Point{std::cos(phi), std::sin(phi)};
            const double fx = (p.x() + grid.length / 2.0) / grid.dx() - 0.5;
            const double fy = (p.y() + grid.length / 2.0) / grid.dy() - 0.5;
            const int ix = static_cast<int>(std::floor(fx));
            const int iy = static_cast<int>(std::floor(fy));
            if (ix < 0 || iy < 0 || ix + 1 >= grid.nx || iy + 1 >= grid.ny) {
                ok = false;
                break;
            }
            const double tx = fx - ix, ty = fy - iy;
            b(a, iy * grid.nx + ix) += (1 - tx) * (1 - ty);
            b(a, iy * grid.nx + ix + 1) += tx * (1 - ty);
            b(a, (iy + 1) * grid.nx + ix) += (1 - tx) * ty;
            b(a, (iy + 1) * grid.nx + ix + 1) += tx * ty;
        }
        if (!ok) continue;  // ring leaves the domain: drop it
        ring_rows.push_back(std::sqrt(rho * d_rho * d_phi) * (diff * b));
    }

    AngularPenaltyOp op;
    if (ring_rows.empty()) {
        if (warning) *warning = "angular penalty: neighborhood around pivot leaves the grid";
        return op;
    }
    op.m.resize(static_cast<Eigen::Index>(ring_rows.size()) * kAngles, grid.cell_count());
    for (std::size_t i = 0; i < ring_rows.size(); ++i)
        op.m.middleRows(static_cast<Eigen::Index>(i) * kAngles, kAngles) = ring_rows[i];
    return op;
}

/// Eq.-26 penalty term tau * ||d W / d phi||^2 over J_R(pivot) and its
/// gradient under the fixed ring-resampling discretization.
inline std::pair<double, FieldMap> angular_penalty(const FieldMap& w_p, const Point& pivot,
                                                   double radius, double tau, const Grid& grid,
                                                   std::string* warning = nullptr) {
    const AngularPenaltyOp op = make_angular_penalty(grid, pivot, radius, warning);
    FieldMap grad;
    grad.role = FieldRole::ContrastSource;
    grad.values = op.empty() ? VectorXcd::Zero(w_p.values.size()) : op.gradient(w_p.values, tau);
    return {op.value(w_p.values, tau), std::move(grad)};
}

namespace detail {

/// chi_mod -> chi with the documented fallback: cells whose inverse-map
/// denominator is nearly singular take the largest-magnitude finite chi
/// among their 4-neighbors (0 if none), and are reported.
inline ContrastMap extract_chi_clamped(const ModifiedModel& model, const ContrastMap& chi_mod,
                                       const Grid& grid, std::vector<int>* clamped) {
    constexpr double kClampTol = 1e-3;
    const Eigen::Index n = chi_mod.values.size();
    ContrastMap chi;
    chi.semantics = ContrastSemantics::PhysicalChi;
    chi.values = VectorXcd::Zero(n);
    std::vector<bool> bad(static_cast<std::size_t>(n), false);

    auto denom_of = [&](Eigen::Index i) -> Complex {
        switch (model.kind.tag) {
            case ModelKind::Tag::CSEB: return 1.0 + chi_mod.values[i] * model.f_d[i];
            case ModelKind::Tag::NIE:
            case ModelKind::Tag::Y0NIE: return model.kind.beta * (1.0 - chi_mod.values[i]);
            default: return {1.0, 0.0};
        }
    };
    const bool identity = (model.kind.tag == ModelKind::Tag::H0 || model.kind.tag == ModelKind::Tag::Y0);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Complex den = denom_of(i);
        if (!identity && std::abs(den) < kClampTol) {
            bad[static_cast<std::size_t>(i)] = true;
            continue;
        }
        chi.values[i] = identity ? chi_mod.values[i] : chi_mod.values[i] / den;
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!bad[static_cast<std::size_t>(i)]) continue;
        if (clamped) clamped->push_back(static_cast<int>(i));
        const int ix = static_cast<int>(i) % grid.nx, iy = static_cast<int>(i) / grid.nx;
        Complex best{0.0, 0.0};
        const int nbr[4][2] = {{ix - 1, iy}, {ix + 1, iy}, {ix, iy - 1}, {ix, iy + 1}};
        for (auto& nb : nbr) {
            if (nb[0] < 0 || nb[1] < 0 || nb[0] >= grid.nx || nb[1] >= grid.ny) continue;
            const Eigen::Index j = nb[1] * grid.nx + nb[0];
            if (!bad[static_cast<std::size_t>(j)] && std::abs(chi.values[j]) > std::abs(best))
                best = chi.values[j];
        }
        chi.values[i] = best;
    }
    return chi;
}

struct CsiSetup {
    const ModifiedModel* model = nullptr;
    const Grid* grid = nullptr;
    const ProbeRing* probes = nullptr;  // needed for the Y0 data-driven estimate
    MatrixXcd data;                     // receivers x views
    MatrixXcd incident;                 // cells x views, physical incident fields
    MatrixXcd a_e;                      // external operator entries
    std::vector<AngularPenaltyOp> penalties;  // empty, or one per view
};

inline constexpr int kViewChunk = 6;  // fixed chunking => thread-count invariant

inline InversionResult run_csi(const CsiSetup& s, const InversionOptions& opts,
                               const ContrastMap* ground_truth) {
    const ModifiedModel& model = *s.model;
    const Grid& grid = *s.grid;
    opts.validate(grid);
    const Eigen::Index n = grid.cell_count();
    const int n_views = static_cast<int>(s.data.cols());
    if (s.incident.cols() != n_views || s.incident.rows() != n)
        throw ConfigError("csi: incident field dimensions do not match data/grid");

    InversionResult res;
    const MatrixXcd g_op = s.a_e / model.source_scale;  // data operator on W_mod
    const MatrixXcd& a = model.a_mod;

    // modified incident field
    MatrixXcd e_inc;
    if (model.y0_incident) {
        if (!s.probes) throw ConfigError("csi: Y0-family inversion needs the probe ring");
        const MatrixXcd f_j0 =
            estimate_F_J0_from_data(s.data, *s.probes, grid, opts.fj0_harmonics, &res.warnings);
        e_inc = model.modified_incident(s.incident, f_j0);
    } else {
        e_inc = s.incident;
    }

    VectorXd w_state(n_views), w_data(n_views);
    auto refresh_weights = [&] {
        for (int t = 0; t < n_views; ++t) {
            const double es = e_inc.col(t).squaredNorm();
            const double ds = s.data.col(t).squaredNorm();
            if (es == 0.0 || ds == 0.0)
                res.warnings.push_back("csi: zero-norm view " + std::to_string(t) + " left unnormalized");
            w_state[t] = es > 0.0 ? 1.0 / es : 1.0;
            w_data[t] = ds > 0.0 ? 1.0 / ds : 1.0;
        }
    };
    refresh_weights();

    const MatrixXcd px = dirichlet_projector(grid.nx, opts.n_arm).cast<Complex>();
    const MatrixXcd py = (grid.ny == grid.nx) ? px : dirichlet_projector(grid.ny, opts.n_arm).cast<Complex>();
    using RowMat = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    auto project = [&](const VectorXcd& vec) -> VectorXcd {
        Eigen::Map<const RowMat> m(vec.data(), grid.ny, grid.nx);
        RowMat out = py * m * px;
        return Eigen::Map<const VectorXcd>(out.data(), n);
    };

    // chunked products, fixed boundaries, one writer per chunk
    auto gemm_chunked = [&](const MatrixXcd& lhs, bool adjoint, const MatrixXcd& x, MatrixXcd& out) {
        const int chunks = (n_views + kViewChunk - 1) / kViewChunk;
        out.resize(lhs.rows(), x.cols());
        parallel_for(chunks, opts.threads, [&](int c) {
            const int lo = c * kViewChunk;
            const int width = std::min(kViewChunk, n_views - lo);
            if (adjoint)
                out.middleCols(lo, width).noalias() = lhs.adjoint() * x.middleCols(lo, width);
            else
                out.middleCols(lo, width).noalias() = lhs * x.middleCols(lo, width);
        });
    };

    const bool penalized = !s.penalties.empty();
    if (penalized && static_cast<int>(s.penalties.size()) != n_views)
        throw ConfigError("csi: penalty operator count must match views");

    // state
    MatrixXcd u = backprop_init(g_op, s.data, &res.warnings);
    MatrixXcd au;
    gemm_chunked(a, false, u, au);
    MatrixXcd z = e_inc + au;

    VectorXcd chim(n);
    auto pointwise_chi = [&]() -> VectorXcd {
        VectorXcd num = (u.array() * z.conjugate().array()).matrix() * w_state.cast<Complex>();
        VectorXd den = z.cwiseAbs2() * w_state;
        VectorXcd c(n);
        for (Eigen::Index i = 0; i < n; ++i) c[i] = den[i] > 1e-300 ? num[i] / den[i] : Complex{0, 0};
        return project(c);
    };
    chim = pointwise_chi();

    MatrixXcd r = chim.asDiagonal() * z - u;
    MatrixXcd rd = s.data - g_op * u;
    std::vector<VectorXcd> mu(static_cast<std::size_t>(penalized ? n_views : 0));
    if (penalized)
        for (int t = 0; t < n_views; ++t)
            mu[static_cast<std::size_t>(t)] =
                s.penalties[static_cast<std::size_t>(t)].empty()
                    ? VectorXcd()
                    : s.penalties[static_cast<std::size_t>(t)].apply(u.col(t));

    VectorXd tau = VectorXd::Zero(n_views);
    auto base_cost = [&](const MatrixXcd& rr, const MatrixXcd& rrd) {
        double c0 = 0.0;
        for (int t = 0; t < n_views; ++t)
            c0 += w_state[t] * rr.col(t).squaredNorm() + w_data[t] * rrd.col(t).squaredNorm();
        return c0;
    };
    auto penalty_cost = [&](const std::vector<VectorXcd>& m) {
        double c0 = 0.0;
        for (int t = 0; t < n_views; ++t)
            if (m[static_cast<std::size_t>(t)].size() != 0)
                c0 += tau[t] * m[static_cast<std::size_t>(t)].squaredNorm();
        return c0;
    };
    if (penalized) {
        if (!opts.tau.empty()) {
            if (static_cast<int>(opts.tau.size()) != n_views)
                throw ConfigError("csi: tau list must have one entry per pivot");
            for (int t = 0; t < n_views; ++t) tau[t] = opts.tau[static_cast<std::size_t>(t)];
        } else {
            double phi_w0 = 0.0;
            for (const auto& m : mu)
                if (m.size()) phi_w0 += m.squaredNorm();
            const double c0 = base_cost(r, rd);
            tau.setConstant(phi_w0 > 0.0 ? opts.tau_auto_scale * c0 / phi_w0 : 0.0);
        }
    }

    res.cost_history.reserve(static_cast<std::size_t>(opts.max_iterations) + 1);
    res.cost_history.push_back(base_cost(r, rd) + (penalized ? penalty_cost(mu) : 0.0));

    MatrixXcd g_prev, v;
    bool have_prev = false;
    int it = 0;
    for (it = 1; it <= opts.max_iterations; ++it) {
        // Y0-family periodic refresh of the modified incident field
        if (model.y0_incident && opts.fj0_refresh > 0 && (it - 1) > 0 &&
            (it - 1) % opts.fj0_refresh == 0) {
            const MatrixXcd f_j0 = model.j0_conv * (u / model.source_scale);
            e_inc = model.modified_incident(s.incident, f_j0);
            refresh_weights();
            z = e_inc + au;
            r = chim.asDiagonal() * z - u;
            have_prev = false;  // restart CG, the model changed
        }

        // gradient of the cost wrt conj(u), per view
        MatrixXcd tmp = chim.conjugate().asDiagonal() * r;
        MatrixXcd ahr;
        gemm_chunked(a, true, tmp, ahr);
        MatrixXcd ghrd;
        gemm_chunked(g_op, true, rd, ghrd);
        MatrixXcd grad(n, n_views);
        for (int t = 0; t < n_views; ++t) {
            grad.col(t) = w_state[t] * (ahr.col(t) - r.col(t)) - w_data[t] * ghrd.col(t);
            if (penalized && mu[static_cast<std::size_t>(t)].size())
                grad.col(t) += tau[t] * s.penalties[static_cast<std::size_t>(t)].apply_adjoint(
                                            mu[static_cast<std::size_t>(t)]);
        }

        if (!have_prev) {
            v = -grad;
            have_prev = true;
        } else {
            for (int t = 0; t < n_views; ++t) {
                const double denom = g_prev.col(t).squaredNorm();
                double gamma = 0.0;
                if (denom > 1e-300)
                    gamma = std::max(0.0, ((grad.col(t) - g_prev.col(t)).dot(grad.col(t))).real() / denom);
                v.col(t) = -grad.col(t) + gamma * v.col(t);
            }
        }
        g_prev = grad;

        MatrixXcd av;
        gemm_chunked(a, false, v, av);
        MatrixXcd sv = chim.asDiagonal() * av - v;
        MatrixXcd qv = g_op * v;

        for (int t = 0; t < n_views; ++t) {
            Complex num = w_data[t] * qv.col(t).dot(rd.col(t)) - w_state[t] * sv.col(t).dot(r.col(t));
            double den = w_state[t] * sv.col(t).squaredNorm() + w_data[t] * qv.col(t).squaredNorm();
            VectorXcd mv;
            if (penalized && mu[static_cast<std::size_t>(t)].size()) {
                mv = s.penalties[static_cast<std::size_t>(t)].apply(v.col(t));
                num -= tau[t] * mv.dot(mu[static_cast<std::size_t>(t)]);
                den += tau[t] * mv.squaredNorm();
            }
            const Complex alpha = den > 1e-300 ? num / den : Complex{0, 0};
            u.col(t) += alpha * v.col(t);
            au.col(t) += alpha * av.col(t);
            r.col(t) += alpha * sv.col(t);
            rd.col(t) -= alpha * qv.col(t);
            if (penalized && mu[static_cast<std::size_t>(t)].size())
                mu[static_cast<std::size_t>(t)] += alpha * mv;
        }
        z = e_inc + au;

        const double cost_w = base_cost(r, rd) + (penalized ? penalty_cost(mu) : 0.0);

        // chi update, accepted only if it does not increase the cost
        VectorXcd chin = pointwise_chi();
        MatrixXcd rn = chin.asDiagonal() * z - u;
        const double cost_chi = base_cost(rn, rd) + (penalized ? penalty_cost(mu) : 0.0);
        if (cost_chi <= cost_w) {
            chim = chin;
            r.swap(rn);
            res.cost_history.push_back(cost_chi);
        } else {
            res.cost_history.push_back(cost_w);
        }

        const int w = opts.stall_window;
        if (it >= w) {
            const double before = res.cost_history[static_cast<std::size_t>(it - w)];
            const double now = res.cost_history.back();
            if ((before - now) / std::max(before, 1e-300) < opts.stall_tol) break;
        }
    }
    res.iterations = std::min(it, opts.max_iterations);

    res.chi_mod.values = chim;
    res.chi_mod.semantics = model.kind.is_nie_family() ? ContrastSemantics::AuxiliaryR
                          : (model.kind.tag == ModelKind::Tag::CSEB ? ContrastSemantics::AuxiliaryP
                                                                    : ContrastSemantics::PhysicalChi);
    res.chi = extract_chi_clamped(model, res.chi_mod, grid, &res.clamped_cells);
    if (!res.clamped_cells.empty())
        res.warnings.push_back("csi: " + std::to_string(res.clamped_cells.size()) +
                               " cells clamped during contrast extraction");
    res.w = u / model.source_scale;
    if (ground_truth) res.nmse = nmse(*ground_truth, res.chi);
    return res;
}

} // namespace detail

/// Standard CSI on multistatic data (any rewriting; views = transmitters).
inline InversionResult csi_solve(const ModifiedModel& model, const Grid& grid,
                                 const ProbeRing& probes, const MultistaticData& data,
                                 const MatrixXcd& incident, const InversionOptions& opts,
                                 const ContrastMap* ground_truth = nullptr) {
    detail::CsiSetup s;
    s.model = &model;
    s.grid = &grid;
    s.probes = &probes;
    s.data = data.values;
    s.incident = incident;
    s.a_e = assemble_external(grid, probes).entries;
    return detail::run_csi(s, opts, ground_truth);
}

/// VE-CSI: views are the designed virtual experiments, each optionally
/// carrying the Eq.-26 angular penalty around its pivot.
inline InversionResult ve_csi_solve(const ModifiedModel& model, const Grid& grid,
                                    const ProbeRing& probes,
                                    const std::vector<VirtualExperiment>& ves,
                                    const InversionOptions& opts,
                                    const ContrastMap* ground_truth = nullptr) {
    if (model.kind.tag != ModelKind::Tag::H0 && model.kind.tag != ModelKind::Tag::NIE)
        throw ConfigError("ve_csi_solve: VE inversion is defined for the H0 and NIE models");
    if (ves.empty()) throw ConfigError("ve_csi_solve: need at least one virtual experiment");

    detail::CsiSetup s;
    s.model = &model;
    s.grid = &grid;
    s.probes = &probes;
    const int p = static_cast<int>(ves.size());
    s.data.resize(ves[0].e_s.size(), p);
    s.incident.resize(grid.cell_count(), p);
    const double radius =
        opts.neighborhood_radius > 0 ? opts.neighborhood_radius : 0.25 * grid.medium.lambda_b();
    // penalty operators are built whenever tau is given explicitly (even all
    // zeros, so the tau == 0 path stays bit-consistent) or the auto rule is on
    const bool build_penalties = !opts.tau.empty() || opts.tau_auto_scale > 0.0;
    for (int i = 0; i < p; ++i) {
        s.data.col(i) = ves[static_cast<std::size_t>(i)].e_s;
        s.incident.col(i) = ves[static_cast<std::size_t>(i)].e_i;
        if (build_penalties)
            s.penalties.push_back(
                make_angular_penalty(grid, ves[static_cast<std::size_t>(i)].pivot, radius));
    }
    s.a_e = assemble_external(grid, probes).entries;
    return detail::run_csi(s, opts, ground_truth);
}

} // namespace iscat
