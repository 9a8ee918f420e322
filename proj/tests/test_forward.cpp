#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "iscat/forward.hpp"
#include "oracles.hpp"

using namespace iscat;

namespace {
const BackgroundMedium kMedium = free_space_300mhz();
const double kLambda = kMedium.lambda_b();

struct Scene {
    Grid grid;
    ProbeRing probes;
    MatrixXcd e_inc;
    DiscreteOperator a_e;
};

Scene make_scene(double length, int n, int probes_n = 8, double ring = 3.0) {
    Scene s{build_grid(length * kLambda, n, n, kMedium),
            make_probe_ring(ring * kLambda, probes_n, probes_n),
            {},
            {}};
    s.e_inc = incident_fields(s.grid, s.probes);
    s.a_e = assemble_external(s.grid, s.probes);
    return s;
}
} // namespace

TEST_CASE("solve_state with zero contrast", "[forward]") {
    const Scene s = make_scene(1.0, 10);
    ContrastMap zero{VectorXcd::Zero(s.grid.cell_count()), ContrastSemantics::PhysicalChi};
    const ModifiedModel h0 = build_modified_model(ModelKind::h0(), s.grid);
    const SolutionField sol = solve_state(h0, zero, s.e_inc);
    CHECK(sol.w.norm() == 0.0);
    CHECK((sol.e_total - s.e_inc).norm() == 0.0);
}

TEST_CASE("exact rewriting: all models give the same contrast sources", "[forward]") {
    const Scene s = make_scene(1.0, 10);
    const ContrastMap chi = make_circle_target(0.3 * kLambda, {1.2, 0.0}, s.grid);

    const ModifiedModel h0 = build_modified_model(ModelKind::h0(), s.grid);
    const SolutionField ref = solve_state(h0, chi, s.e_inc);
    REQUIRE(ref.w.norm() > 0.0);

    const std::vector<ModelKind> kinds{ModelKind::cseb(0.3 * kLambda), ModelKind::nie({1.0, 0.0}),
                                       ModelKind::nie({2.0, 0.0}), ModelKind::y0(),
                                       ModelKind::y0nie({1.0, 0.0})};
    const MultistaticData d0 = radiate(s.a_e, ref, s.probes, kMedium.frequency);
    for (const ModelKind& kind : kinds) {
        const ModifiedModel m = build_modified_model(kind, s.grid);
        const SolutionField sol = solve_state(m, chi, s.e_inc);
        CHECK((sol.w - ref.w).norm() < 1e-10 * ref.w.norm());
        const MultistaticData d = radiate(s.a_e, sol, s.probes, kMedium.frequency);
        CHECK((d.values - d0.values).norm() < 1e-10 * d0.values.norm());
    }
}

TEST_CASE("state residual and W = chi E_t consistency", "[forward]") {
    const Scene s = make_scene(1.0, 10);
    const ContrastMap chi = make_circle_target(0.35 * kLambda, {1.9, 0.0}, s.grid);
    const ModifiedModel h0 = build_modified_model(ModelKind::h0(), s.grid);
    const SolutionField sol = solve_state(h0, chi, s.e_inc);
    const MatrixXcd res = sol.w - chi.values.asDiagonal() * (s.e_inc + h0.a_mod * sol.w);
    CHECK(res.norm() < 1e-10 * sol.w.norm());
    const MatrixXcd wt = chi.values.asDiagonal() * sol.e_total;
    CHECK((sol.w - wt).norm() < 1e-10 * sol.w.norm());
}

TEST_CASE("rewriting residuals vanish on the H0 solution", "[forward]") {
    const Scene s = make_scene(1.0, 10);
    ContrastMap chi = make_circle_target(0.3 * kLambda, {1.9, 0.0}, s.grid);
    const ModifiedModel h0 = build_modified_model(ModelKind::h0(), s.grid);
    const SolutionField sol = solve_state(h0, chi, s.e_inc);

    // Y0-NIE (Eq.-27 structure) residual with the oracle modified incident
    const Complex beta{1.0, 0.0};
    const ModifiedModel y0nie = build_modified_model(ModelKind::y0nie(beta), s.grid);
    const MatrixXcd f_j0 = compute_F_J0(sol.w, y0nie.j0_conv);
    const MatrixXcd e_hat = y0nie.modified_incident(s.e_inc, f_j0);
    const ContrastMap r_map = y0nie.chi_to_mod(chi);
    const MatrixXcd u = beta * sol.w;
    const MatrixXcd res = u - r_map.values.asDiagonal() * (e_hat + y0nie.a_mod * u);
    CHECK(res.norm() < 1e-10 * u.norm());
}

TEST_CASE("neumann series: Born term, bound, and zero contrast", "[forward]") {
    const Scene s = make_scene(1.0, 10);
    const ModifiedModel h0 = build_modified_model(ModelKind::h0(), s.grid);

    ContrastMap weak = make_circle_target(0.3 * kLambda, {0.16, 0.0}, s.grid);
    const auto [sol0, bound0] = neumann_solve(h0, weak, s.e_inc, 0);
    CHECK((sol0.w - weak.values.asDiagonal() * s.e_inc).norm() < 1e-14 * sol0.w.norm());

    const SolutionField exact = solve_state(h0, weak, s.e_inc);
    const MatrixXcd scaled = weak.values.asDiagonal() * h0.a_mod;
    const double q = spectral_norm(scaled);
    REQUIRE(q < 1.0);
    for (int n_terms : {0, 1, 2, 4, 8, 12}) {
        const auto [sol, bound] = neumann_solve(h0, weak, s.e_inc, n_terms);
        const double rel = (sol.w - exact.w).norm() / exact.w.norm();
        CHECK(rel <= bound * (1.0 + 1e-9));
    }

    ContrastMap zero{VectorXcd::Zero(s.grid.cell_count()), ContrastSemantics::PhysicalChi};
    const auto [solz, boundz] = neumann_solve(h0, zero, s.e_inc, 0);
    CHECK(solz.w.norm() == 0.0);

    ContrastMap strong = make_circle_target(0.35 * kLambda, {3.5, 0.0}, s.grid);
    const auto [sols, bounds] = neumann_solve(h0, strong, s.e_inc, 3);
    CHECK(std::isinf(bounds));  // q >= 1 flagged, not an error
}

TEST_CASE("radiate: zero, linearity, reciprocity", "[forward]") {
    const Scene s = make_scene(1.0, 10, 12);
    SolutionField zero;
    zero.w = MatrixXcd::Zero(s.grid.cell_count(), s.probes.n_tx());
    CHECK(radiate(s.a_e, zero, s.probes, kMedium.frequency).values.norm() == 0.0);

    std::mt19937 rng(3);
    std::uniform_real_distribution<double> uni(-1, 1);
    SolutionField w1, w2;
    w1.w.resize(s.grid.cell_count(), s.probes.n_tx());
    w2.w.resize(s.grid.cell_count(), s.probes.n_tx());
    for (Eigen::Index i = 0; i < w1.w.size(); ++i) {
        w1.w.data()[i] = Complex{uni(rng), uni(rng)};
        w2.w.data()[i] = Complex{uni(rng), uni(rng)};
    }
    const Complex a{0.7, -1.1};
    SolutionField mix;
    mix.w = a * w1.w + w2.w;
    const MatrixXcd lhs = radiate(s.a_e, mix, s.probes, kMedium.frequency).values;
    const MatrixXcd rhs = a * radiate(s.a_e, w1, s.probes, kMedium.frequency).values +
                          radiate(s.a_e, w2, s.probes, kMedium.frequency).values;
    CHECK((lhs - rhs).norm() < 1e-12 * rhs.norm());

    // full-pipeline reciprocity on coincident rings
    const ContrastMap chi = make_circle_target(0.32 * kLambda, {1.5, 0.0}, s.grid);
    const ModifiedModel h0 = build_modified_model(ModelKind::h0(), s.grid);
    const MultistaticData d =
        radiate(s.a_e, solve_state(h0, chi, s.e_inc), s.probes, kMedium.frequency);
    CHECK((d.values - d.values.transpose()).norm() < 1e-8 * d.values.norm());
}

TEST_CASE("mie_circular oracle edge cases", "[forward]") {
    const ProbeRing probes = make_probe_ring(3.75 * kLambda, 18, 18);
    CHECK(mie_circular(0.5 * kLambda, {0.0, 0.0}, probes, 30, kMedium).values.norm() == 0.0);
    const double tiny =
        mie_circular(1e-4 * kLambda, {1.0, 0.0}, probes, 10, kMedium).values.cwiseAbs().maxCoeff();
    CHECK(tiny < 1e-6);
    CHECK_THROWS_AS(mie_circular(0.5 * kLambda, {1.0, 0.5}, probes, 30, kMedium), ConfigError);
    CHECK_THROWS(mie_circular(1.0 * kLambda, {2.0, 0.0}, probes, 4, kMedium));
}

TEST_CASE("MoM forward matches the Mie oracle on a penetrable disc", "[forward]") {
    const Scene s = make_scene(0.9, 18, 18, 3.75);
    const ContrastMap chi = make_circle_target(0.3 * kLambda, {1.0, 0.0}, s.grid);
    const ModifiedModel h0 = build_modified_model(ModelKind::h0(), s.grid);
    const MultistaticData mom =
        radiate(s.a_e, solve_state(h0, chi, s.e_inc), s.probes, kMedium.frequency);
    const MultistaticData mie = mie_circular(0.3 * kLambda, {1.0, 0.0}, s.probes, 40, kMedium);
    CHECK((mom.values - mie.values).norm() < 0.05 * mie.values.norm());
}

TEST_CASE("add_noise: sentinel, determinism, exact SNR", "[forward]") {
    const Scene s = make_scene(0.9, 18, 18, 3.75);
    const ContrastMap chi = make_circle_target(0.3 * kLambda, {1.0, 0.0}, s.grid);
    const ModifiedModel h0 = build_modified_model(ModelKind::h0(), s.grid);
    const MultistaticData clean =
        radiate(s.a_e, solve_state(h0, chi, s.e_inc), s.probes, kMedium.frequency);

    const MultistaticData same = add_noise(clean, std::numeric_limits<double>::infinity(), 1);
    CHECK((same.values - clean.values).norm() == 0.0);

    const MultistaticData n1 = add_noise(clean, 30.0, 42);
    const MultistaticData n2 = add_noise(clean, 30.0, 42);
    CHECK((n1.values - n2.values).norm() == 0.0);  // bit-exact per seed
    const MultistaticData n3 = add_noise(clean, 30.0, 43);
    CHECK((n1.values - n3.values).norm() > 0.0);

    for (std::uint64_t seed : {7ULL, 1234ULL, 99ULL}) {
        const MultistaticData noisy = add_noise(clean, 30.0, seed);
        const double snr = 10.0 * std::log10(clean.values.squaredNorm() /
                                             (noisy.values - clean.values).squaredNorm());
        CHECK(std::abs(snr - 30.0) < 1e-9);
    }

    MultistaticData zero = clean;
    zero.values.setZero();
    CHECK_THROWS_AS(add_noise(zero, 30.0, 1), std::invalid_argument);
}
