#pragma once

// Forward synthesis: state-equation solves, Neumann partial sums, radiation
// to the receiver ring, the analytic cylindrical-harmonic (Mie) oracle for a
// penetrable disc under line-source excitation, and seeded noise corruption.

#include <cmath>
#include <random>

#include <Eigen/Dense>
#include <Eigen/LU>

#include "iscat/domain.hpp"
#include "iscat/errors.hpp"
#include "iscat/linalg.hpp"
#include "iscat/models.hpp"
#include "iscat/operators.hpp"

namespace iscat {

struct MultistaticData {
    MatrixXcd values;  // (receiver m, transmitter t)
    ProbeRing probes;
    double frequency = 0.0;

    int n_rx() const { return static_cast<int>(values.rows()); }
    int n_tx() const { return static_cast<int>(values.cols()); }
};

struct SolutionField {
    MatrixXcd w;        // unscaled contrast sources, one column per view
    MatrixXcd e_total;  // total fields E_t = E_i + A_i[W]
};

/// Exact dense solve of the model's state equation, one view per column of
/// `incident` (physical incident fields). Returns unscaled W. The solve is
/// restricted to the support of chi_mod, which is exact since W vanishes
/// where the contrast does.
inline SolutionField solve_state(const ModifiedModel& model, const ContrastMap& chi,
                                 const MatrixXcd& incident) {
    const ContrastMap chi_mod = model.chi_to_mod(chi);
    const Eigen::Index n = chi_mod.values.size();
    if (incident.rows() != n) throw ConfigError("solve_state: incident field / grid size mismatch");

    std::vector<int> sup;
    for (Eigen::Index i = 0; i < n; ++i)
        if (chi_mod.values[i] != Complex{0.0, 0.0}) sup.push_back(static_cast<int>(i));

    SolutionField out;
    out.w = MatrixXcd::Zero(n, incident.cols());
    out.e_total = incident;
    if (sup.empty()) return out;

    const MatrixXcd solve_op = model.solve_operator();
    const int ns = static_cast<int>(sup.size());
    MatrixXcd sys(ns, ns);
    MatrixXcd rhs(ns, incident.cols());
    for (int i = 0; i < ns; ++i) {
        const Complex ci = chi_mod.values[sup[static_cast<std::size_t>(i)]];
        for (int j = 0; j < ns; ++j)
            sys(i, j) = -ci * solve_op(sup[static_cast<std::size_t>(i)], sup[static_cast<std::size_t>(j)]);
        sys(i, i) += 1.0;
        rhs.row(i) = ci * incident.row(sup[static_cast<std::size_t>(i)]);
    }

    Eigen::PartialPivLU<MatrixXcd> lu(sys);
    if (lu.rcond() < 1e-12)
        throw SolverError("solve_state: state system is numerically singular (rcond < 1e-12)");
    const MatrixXcd u = lu.solve(rhs);  // u = W_mod on the support

    MatrixXcd w_sup = u / model.source_scale;
    for (int i = 0; i < ns; ++i) out.w.row(sup[static_cast<std::size_t>(i)]) = w_sup.row(i);

    // E_t = E_i + A_i[W]; recover A_i[W] from the model's own operator.
    MatrixXcd aiw;
    switch (model.kind.tag) {
        case ModelKind::Tag::H0:
        case ModelKind::Tag::Y0:
            aiw = solve_op(Eigen::all, sup) * w_sup;
            break;
        case ModelKind::Tag::CSEB: {
            aiw = model.a_mod(Eigen::all, sup) * w_sup;
            for (int i = 0; i < ns; ++i)
                aiw.row(sup[static_cast<std::size_t>(i)]) += model.f_d[sup[static_cast<std::size_t>(i)]] * w_sup.row(i);
            break;
        }
        case ModelKind::Tag::NIE:
        case ModelKind::Tag::Y0NIE: {
            // (solve_op - I) u = A_i[W]
            aiw = solve_op(Eigen::all, sup) * u;
            for (int i = 0; i < ns; ++i)
                aiw.row(sup[static_cast<std::size_t>(i)]) -= u.row(i);
            break;
        }
    }
    out.e_total = incident + aiw;
    return out;
}

/// Neumann partial sum W_n = sum_{k<=n} (chi_mod A_mod)^k chi_mod E_mod and
/// the a-priori remainder factor q^{n+1}/(1-q); `incident_mod` must already
/// be the model's modified incident field.
inline std::pair<SolutionField, double> neumann_solve(const ModifiedModel& model,
                                                      const ContrastMap& chi,
                                                      const MatrixXcd& incident_mod,
                                                      int n_terms) {
    if (n_terms < 0) throw ConfigError("neumann_solve: n_terms must be >= 0");
    const ContrastMap chi_mod = model.chi_to_mod(chi);
    const MatrixXcd scaled = chi_mod.values.asDiagonal() * model.a_mod;
    const double q = spectral_norm(scaled);

    MatrixXcd term = chi_mod.values.asDiagonal() * incident_mod;
    MatrixXcd u = term;
    for (int k = 1; k <= n_terms; ++k) {
        term = scaled * term;
        u += term;
    }
    double bound = std::numeric_limits<double>::infinity();
    if (q < 1.0) bound = std::pow(q, n_terms + 1) / (1.0 - q);

    SolutionField sol;
    sol.w = u / model.source_scale;
    return {std::move(sol), bound};
}

inline MultistaticData radiate(const DiscreteOperator& a_e, const SolutionField& sol,
                               const ProbeRing& probes, double frequency) {
    if (a_e.entries.cols() != sol.w.rows()) throw ConfigError("radiate: operator / field size mismatch");
    MultistaticData d;
    d.values = a_e.entries * sol.w;
    d.probes = probes;
    d.frequency = frequency;
    return d;
}

/// Analytic scattered field of a homogeneous penetrable disc (radius a,
/// lossless contrast chi) centered at the origin, for line sources and
/// receivers on the probe ring. Truncated at +-n_harmonics with the tail
/// required below 1e-10 of the series magnitude.
inline MultistaticData mie_circular(double radius, Complex chi, const ProbeRing& probes,
                                    int n_harmonics, const BackgroundMedium& medium) {
    if (radius < 0.0) throw ConfigError("mie_circular: radius must be >= 0");
    if (chi.imag() != 0.0 || chi.real() <= -1.0)
        throw ConfigError("mie_circular: lossless penetrable disc requires real chi > -1");
    if (n_harmonics < 1 || n_harmonics > kMaxBesselOrder)
        throw ConfigError("mie_circular: n_harmonics out of range");
    if (probes.radius <= radius) throw ConfigError("mie_circular: probes must be outside the disc");

    MultistaticData d;
    d.probes = probes;
    d.frequency = medium.frequency;
    d.values = MatrixXcd::Zero(probes.n_rx(), probes.n_tx());
    if (chi == Complex{0.0, 0.0} || radius == 0.0) return d;

    const double k = medium.k_b();
    const double kd = k * std::sqrt(1.0 + chi.real());
    const Complex amp = -kJ / 4.0 * medium.omega() * medium.mu;
    const int nmax = n_harmonics;

    const std::vector<double> jb = bessel_j_all(nmax + 1, k * radius);
    const std::vector<double> jd = bessel_j_all(nmax + 1, kd * radius);
    auto hank = [&](int n, double x) { return hankel2(n, x); };

    // scattering coefficients a_n (TM, nonmagnetic)
    std::vector<Complex> an(static_cast<std::size_t>(nmax) + 1);
    for (int n = 0; n <= nmax; ++n) {
        const double u = jb[static_cast<std::size_t>(n)];
        const double up = (n == 0) ? -jb[1] : jb[static_cast<std::size_t>(n - 1)] - n / (k * radius) * u;
        const double v = jd[static_cast<std::size_t>(n)];
        const double vp = (n == 0) ? -jd[1] : jd[static_cast<std::size_t>(n - 1)] - n / (kd * radius) * v;
        const Complex h = hank(n, k * radius);
        const Complex hp = (n == 0) ? -hank(1, k * radius)
                                    : hank(n - 1, k * radius) - static_cast<double>(n) / (k * radius) * h;
        an[static_cast<std::size_t>(n)] = (kd * vp * u - k * up * v) / (k * hp * v - kd * vp * h);
    }

    std::vector<Complex> ring(static_cast<std::size_t>(nmax) + 1);
    for (int n = 0; n <= nmax; ++n) ring[static_cast<std::size_t>(n)] = hank(n, k * probes.radius);

    double total_mag = 0.0, tail_mag = 0.0;
    for (int m = 0; m < probes.n_rx(); ++m)
        for (int t = 0; t < probes.n_tx(); ++t) {
            const double dphi = probes.rx_angles[m] - probes.tx_angles[t];
            Complex sum = an[0] * ring[0] * ring[0];
            for (int n = 1; n <= nmax; ++n) {
                const Complex term = 2.0 * an[static_cast<std::size_t>(n)] * ring[static_cast<std::size_t>(n)] *
                                     ring[static_cast<std::size_t>(n)] * std::cos(n * dphi);
                sum += term;
                if (m == 0 && t == 0 && n == nmax) tail_mag = std::abs(term);
            }
            if (m == 0 && t == 0) total_mag = std::abs(sum);
            d.values(m, t) = amp * sum;
        }
    if (total_mag > 0.0 && tail_mag > 1e-10 * total_mag)
        throw std::runtime_error("mie_circular: harmonic series not converged at the requested truncation");
    return d;
}

/// Adds circular complex Gaussian noise scaled so the realized total noise
/// power is exactly ||E_s||^2 * 10^(-snr/10); deterministic per seed.
inline MultistaticData add_noise(const MultistaticData& data, double snr_db, std::uint64_t seed) {
    if (std::isinf(snr_db) && snr_db > 0) return data;
    const double sig = data.values.norm();
    if (sig == 0.0) throw std::invalid_argument("add_noise: zero data with finite SNR");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    MatrixXcd noise(data.values.rows(), data.values.cols());
    for (Eigen::Index t = 0; t < noise.cols(); ++t)
        for (Eigen::Index m = 0; m < noise.rows(); ++m)
            noise(m, t) = Complex{gauss(rng), gauss(rng)};
    noise *= sig * std::pow(10.0, -snr_db / 20.0) / noise.norm();
    MultistaticData out = data;
    out.values += noise;
    return out;
}

} // namespace iscat
