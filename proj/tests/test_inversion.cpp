#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "iscat/dnl.hpp"
#include "iscat/inversion.hpp"
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

Scene make_scene(double length, int n, int probes_n) {
    Scene s{build_grid(length * kLambda, n, n, kMedium),
            make_probe_ring(3.0 * kLambda, probes_n, probes_n),
            {},
            {}};
    s.e_inc = incident_fields(s.grid, s.probes);
    s.a_e = assemble_external(s.grid, s.probes);
    return s;
}
} // namespace

TEST_CASE("backprop_init: zero data, optimal scale, point scatterer", "[inversion]") {
    const Scene s = make_scene(1.0, 10, 8);
    std::vector<std::string> warnings;
    const MatrixXcd z0 = backprop_init(s.a_e.entries, MatrixXcd::Zero(8, 8), &warnings);
    CHECK(z0.norm() == 0.0);
    CHECK(warnings.size() == 8);

    // data from a single-cell scatterer
    const int cell = 4 * 10 + 6;
    ContrastMap chi{VectorXcd::Zero(s.grid.cell_count()), ContrastSemantics::PhysicalChi};
    chi.values[cell] = 1.0;
    const ModifiedModel h0 = build_modified_model(ModelKind::h0(), s.grid);
    const MultistaticData data =
        radiate(s.a_e, solve_state(h0, chi, s.e_inc), s.probes, kMedium.frequency);

    const MatrixXcd w0 = backprop_init(s.a_e.entries, data.values);
    for (int t = 0; t < 8; ++t) {
        int argmax = 0;
        for (int c = 0; c < s.grid.cell_count(); ++c)
            if (std::abs(w0(c, t)) > std::abs(w0(argmax, t))) argmax = c;
        CHECK(argmax == cell);
    }

    // the closed-form scale beats +-10% perturbations
    for (int t = 0; t < 3; ++t) {
        const VectorXcd b = s.a_e.entries.adjoint() * data.values.col(t);
        const Complex c_opt = (s.a_e.entries * b).dot(data.values.col(t)) /
                              (s.a_e.entries * b).squaredNorm();
        const double r_opt = (data.values.col(t) - s.a_e.entries * (c_opt * b)).norm();
        for (double f : {0.9, 1.1}) {
            const double r = (data.values.col(t) - s.a_e.entries * (f * c_opt * b)).norm();
            CHECK(r > r_opt);
        }
    }
}

TEST_CASE("nmse identities", "[inversion]") {
    ContrastMap truth{VectorXcd::Random(30), ContrastSemantics::PhysicalChi};
    CHECK(nmse(truth, truth) == 0.0);
    ContrastMap zero{VectorXcd::Zero(30), ContrastSemantics::PhysicalChi};
    CHECK(nmse(truth, zero) == 1.0);
    ContrastMap twice{2.0 * truth.values, ContrastSemantics::PhysicalChi};
    CHECK(oracle::rel_err(nmse(truth, twice), 1.0) < 1e-12);
    CHECK_THROWS_AS(nmse(zero, truth), std::invalid_argument);
}

TEST_CASE("fourier projection: identity, DC, idempotence, symmetry", "[inversion]") {
    const Grid g = build_grid(1.5 * kLambda, 15, 15, kMedium);
    ContrastMap m{VectorXcd::Random(g.cell_count()), ContrastSemantics::PhysicalChi};

    const ContrastMap full = fourier_project(m, 15, g);
    CHECK((full.values - m.values).cwiseAbs().maxCoeff() < 1e-12);

    ContrastMap dc{VectorXcd::Constant(g.cell_count(), Complex{0.7, -0.2}),
                   ContrastSemantics::PhysicalChi};
    const ContrastMap dc_proj = fourier_project(dc, 5, g);
    CHECK((dc_proj.values - dc.values).cwiseAbs().maxCoeff() < 1e-12);

    const ContrastMap once = fourier_project(m, 7, g);
    const ContrastMap twice = fourier_project(once, 7, g);
    CHECK((twice.values - once.values).cwiseAbs().maxCoeff() < 1e-12);

    // commutes with complex scaling; preserves realness of real maps
    const Complex c{1.3, -0.4};
    ContrastMap scaled{c * m.values, ContrastSemantics::PhysicalChi};
    CHECK((fourier_project(scaled, 7, g).values - c * once.values).cwiseAbs().maxCoeff() < 1e-12);
    ContrastMap real_map{m.values.real().cast<Complex>(), ContrastSemantics::PhysicalChi};
    CHECK(fourier_project(real_map, 7, g).values.imag().cwiseAbs().maxCoeff() < 1e-12);

    CHECK_THROWS_AS(fourier_project(m, 8, g), ConfigError);   // even
    CHECK_THROWS_AS(fourier_project(m, 17, g), ConfigError);  // larger than the grid
}

TEST_CASE("angular penalty: constants, single mode, gradient", "[inversion]") {
    const Grid g = build_grid(2.0 * kLambda, 20, 20, kMedium);
    const Point pivot{0.05 * kLambda, -0.02 * kLambda};
    const double radius = 0.25 * kLambda;
    const AngularPenaltyOp op = make_angular_penalty(g, pivot, radius);
    REQUIRE_FALSE(op.empty());

    // constants are annihilated exactly (spectral differentiation kills DC)
    const VectorXcd konst = VectorXcd::Constant(g.cell_count(), Complex{2.0, -1.0});
    CHECK(op.value(konst, 1.0) < 1e-24);

    // ring samples of e^{j phi}: derivative magnitude 1 per sample,
    // value = tau * samples per ring * ring weight
    constexpr int kAngles = 16;
    Eigen::MatrixXd diff(kAngles, kAngles);
    for (int m = 0; m < kAngles; ++m)
        for (int l = 0; l < kAngles; ++l) {
            double sum = 0.0;
            for (int f = 1; f < kAngles / 2; ++f)
                sum += f * std::sin(2.0 * std::numbers::pi * f * (m - l) / kAngles);
            diff(m, l) = -2.0 * sum / kAngles;
        }
    VectorXcd mode(kAngles);
    for (int a = 0; a < kAngles; ++a)
        mode[a] = std::exp(kJ * (2.0 * std::numbers::pi * a / kAngles));
    const VectorXcd dmode = (diff * mode.real()).cast<Complex>() +
                            kJ * (diff * mode.imag()).cast<Complex>();
    for (int a = 0; a < kAngles; ++a)
        CHECK(oracle::rel_err(dmode[a], kJ * mode[a]) < 1e-12);

    // radially symmetric cell map: tiny angular energy relative to a swirl
    VectorXcd radial(g.cell_count()), swirl(g.cell_count());
    for (int c = 0; c < g.cell_count(); ++c) {
        const Point d = g.centers[static_cast<std::size_t>(c)] - pivot;
        radial[c] = std::exp(-d.squaredNorm() / (0.1 * kLambda * kLambda));
        swirl[c] = radial[c] * std::exp(kJ * std::atan2(d.y(), d.x()));
    }
    CHECK(op.value(radial, 1.0) < 0.02 * op.value(swirl, 1.0));

    // gradient against central finite differences, 20 random directions
    std::mt19937 rng(9);
    std::uniform_real_distribution<double> uni(-1, 1);
    VectorXcd u(g.cell_count());
    for (auto& v : u) v = Complex{uni(rng), uni(rng)};
    const double tau = 0.37;
    const VectorXcd grad = op.gradient(u, tau);
    for (int d = 0; d < 20; ++d) {
        VectorXcd dir(g.cell_count());
        for (auto& v : dir) v = Complex{uni(rng), uni(rng)};
        const double eps = 1e-6;
        const double fp = op.value(u + eps * dir, tau);
        const double fm = op.value(u - eps * dir, tau);
        const double fd = (fp - fm) / (2 * eps);
        const double an = 2.0 * grad.dot(dir).real();  // d/dt value(u + t v)
        CHECK(std::abs(fd - an) < 1e-5 * std::max(std::abs(fd), 1e-12));
    }

    // far-outside pivot: every ring leaves the grid
    std::string warn;
    const auto [val, gradmap] =
        angular_penalty(FieldMap{u, FieldRole::ContrastSource}, Point{0.93 * kLambda, 0.93 * kLambda},
                        radius, 1.0, g, &warn);
    CHECK(val == 0.0);
    CHECK_FALSE(warn.empty());
}

TEST_CASE("csi on zero-contrast data returns zero contrast", "[inversion]") {
    const Scene s = make_scene(1.0, 10, 8);
    const ModifiedModel h0 = build_modified_model(ModelKind::h0(), s.grid);
    MultistaticData zero;
    zero.values = MatrixXcd::Zero(8, 8);
    zero.probes = s.probes;
    zero.frequency = kMedium.frequency;
    InversionOptions opts;
    opts.max_iterations = 40;
    opts.n_arm = 9;
    const InversionResult res = csi_solve(h0, s.grid, s.probes, zero, s.e_inc, opts);
    CHECK(res.chi.values.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("csi recovers a weak scatterer in the Born regime", "[inversion]") {
    const Scene s = make_scene(1.0, 10, 10);
    const ContrastMap truth = make_circle_target(0.3 * kLambda, {0.3, 0.0}, s.grid);
    const ModifiedModel h0 = build_modified_model(ModelKind::h0(), s.grid);
    REQUIRE(dnl_bound(ModelKind::h0(), truth, s.grid) < 1.0);  // low-DNL scenario
    const MultistaticData data =
        radiate(s.a_e, solve_state(h0, truth, s.e_inc), s.probes, kMedium.frequency);

    InversionOptions opts;
    opts.max_iterations = 2000;
    opts.n_arm = 9;
    opts.threads = 2;
    const InversionResult res = csi_solve(h0, s.grid, s.probes, data, s.e_inc, opts, &truth);
    CHECK(res.nmse <= 0.05);
    // monotone cost within slack
    for (std::size_t i = 1; i < res.cost_history.size(); ++i)
        CHECK(res.cost_history[i] <= res.cost_history[i - 1] * (1.0 + 1e-12) + 1e-18);
}

TEST_CASE("one-hot VEs with zero tau replay standard CSI exactly", "[inversion]") {
    const Scene s = make_scene(1.0, 10, 8);
    const ContrastMap truth = make_circle_target(0.3 * kLambda, {0.8, 0.0}, s.grid);
    const ModifiedModel nie = build_modified_model(ModelKind::nie({1.0, 0.0}), s.grid);
    const ModifiedModel h0 = build_modified_model(ModelKind::h0(), s.grid);
    const MultistaticData data =
        radiate(s.a_e, solve_state(h0, truth, s.e_inc), s.probes, kMedium.frequency);

    InversionOptions opts;
    opts.max_iterations = 25;
    opts.n_arm = 9;
    opts.tau.assign(8, 0.0);  // penalties built, weights identically zero

    std::vector<VirtualExperiment> ves(8);
    for (int t = 0; t < 8; ++t) {
        ves[static_cast<std::size_t>(t)].pivot = Point{0.01 * kLambda, 0.0};
        ves[static_cast<std::size_t>(t)].alpha = VectorXcd::Zero(8);
        ves[static_cast<std::size_t>(t)].alpha[t] = 1.0;
        ves[static_cast<std::size_t>(t)].e_i = s.e_inc.col(t);
        ves[static_cast<std::size_t>(t)].e_s = data.values.col(t);
    }
    const InversionResult ve_res = ve_csi_solve(nie, s.grid, s.probes, ves, opts, &truth);

    InversionOptions opts2 = opts;
    opts2.tau.clear();
    opts2.tau_auto_scale = 0.0;
    const InversionResult csi_res = csi_solve(nie, s.grid, s.probes, data, s.e_inc, opts2, &truth);

    REQUIRE(ve_res.cost_history.size() == csi_res.cost_history.size());
    for (std::size_t i = 0; i < ve_res.cost_history.size(); ++i)
        CHECK(ve_res.cost_history[i] == csi_res.cost_history[i]);
    CHECK(ve_res.nmse == csi_res.nmse);
}

TEST_CASE("csi cost history is thread-count invariant", "[inversion]") {
    const Scene s = make_scene(1.0, 10, 8);
    const ContrastMap truth = make_circle_target(0.32 * kLambda, {1.0, 0.0}, s.grid);
    const ModifiedModel h0 = build_modified_model(ModelKind::h0(), s.grid);
    const MultistaticData data =
        radiate(s.a_e, solve_state(h0, truth, s.e_inc), s.probes, kMedium.frequency);

    InversionOptions opts;
    opts.max_iterations = 60;
    opts.n_arm = 9;
    opts.threads = 1;
    const InversionResult r1 = csi_solve(h0, s.grid, s.probes, data, s.e_inc, opts, &truth);
    opts.threads = 2;
    const InversionResult r2 = csi_solve(h0, s.grid, s.probes, data, s.e_inc, opts, &truth);
    REQUIRE(r1.cost_history.size() == r2.cost_history.size());
    for (std::size_t i = 0; i < r1.cost_history.size(); ++i)
        CHECK(r1.cost_history[i] == r2.cost_history[i]);
    CHECK(r1.nmse == r2.nmse);
    CHECK((r1.chi.values - r2.chi.values).norm() == 0.0);
}

TEST_CASE("y0nie csi runs and decreases its cost", "[inversion]") {
    const Scene s = make_scene(1.0, 10, 12);
    const ContrastMap truth = make_circle_target(0.3 * kLambda, {1.2, 0.0}, s.grid);
    const ModifiedModel h0 = build_modified_model(ModelKind::h0(), s.grid);
    const MultistaticData data =
        radiate(s.a_e, solve_state(h0, truth, s.e_inc), s.probes, kMedium.frequency);

    const ModifiedModel y0nie = build_modified_model(ModelKind::y0nie({1.0, 0.0}), s.grid);
    InversionOptions opts;
    opts.max_iterations = 150;
    opts.n_arm = 9;
    opts.fj0_refresh = 50;
    const InversionResult res = csi_solve(y0nie, s.grid, s.probes, data, s.e_inc, opts, &truth);
    CHECK(res.cost_history.back() < 0.2 * res.cost_history.front());
    CHECK(res.nmse < 1.0);
    CHECK(res.chi_mod.semantics == ContrastSemantics::AuxiliaryR);
}

TEST_CASE("contrast extraction clamps near-singular cells with a report", "[inversion]") {
    const Grid g = build_grid(1.0 * kLambda, 10, 10, kMedium);
    const ModifiedModel nie = build_modified_model(ModelKind::nie({1.0, 0.0}), g);
    ContrastMap r_map{VectorXcd::Constant(g.cell_count(), Complex{0.5, 0.0}),
                      ContrastSemantics::AuxiliaryR};
    r_map.values[37] = Complex{1.0, 1e-6};  // |1 - R| tiny
    std::vector<int> clamped;
    const ContrastMap chi = iscat::detail::extract_chi_clamped(nie, r_map, g, &clamped);
    REQUIRE(clamped.size() == 1);
    CHECK(clamped[0] == 37);
    CHECK(oracle::rel_err(chi.values[36], Complex{1.0, 0.0}) < 1e-12);  // R=0.5 -> chi=1
    CHECK(chi.values[37] == chi.values[36]);  // neighbor fallback
}
