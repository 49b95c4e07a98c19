#include <catch2/catch_amalgamated.hpp>

#include "thermalab/protocol.hpp"

using namespace thermalab;
using Catch::Approx;

namespace {

Observable random_projector(int dim, int rank, std::uint64_t seed) {
    Matrix v = haar_unitary(dim, seed);
    Matrix p = v.leftCols(rank) * v.leftCols(rank).adjoint();
    return make_observable((p + p.adjoint()) / 2.0, "P", true);
}

}  // namespace

TEST_CASE("controlled branch state reproduces exact echoes") {
    auto sys = diagonalize_hamiltonian(random_hamiltonian(Ensemble::gue, 16, 1));
    DensityOperator mixed{Matrix::Identity(16, 16) / 16.0};

    // identity branches: the auxiliary ends in |+><+|
    auto plus = controlled_branch_state(sys, mixed, {}, {});
    CHECK(std::abs(plus(0, 0) - cxd(0.5, 0.0)) < 1e-12);
    CHECK(std::abs(plus(0, 1) - cxd(0.5, 0.0)) < 1e-12);

    // U0 = e^{-iHt}, U1 = 1 on the maximally mixed state: 2<sigma+> = L_H(t)
    for (double t : {0.7, 2.3}) {
        auto aux = controlled_branch_state(sys, mixed, {BranchOp::evolve_for(t)}, {});
        cxd two_sigma_plus = 2.0 * aux(0, 1);  // Tr[U0 rho U1^dag]
        cxd expected = echo(sys, EchoKind::L_H, Observable{}, t);
        CHECK(std::abs(two_sigma_plus - expected) < 1e-12);
    }

    // projector branches: 2<sigma+> = L_AA(t1, t2) in rho_A
    Observable p = random_projector(16, 6, 2);
    DensityOperator rho_a{p.matrix / p.matrix.trace().real()};
    auto aux = controlled_branch_state(sys, rho_a,
                                       {BranchOp::evolve_for(0.9), BranchOp::project(p)},
                                       {BranchOp::evolve_for(1.7), BranchOp::project(p)});
    cxd expected = echo(sys, EchoKind::L_AA, p, 0.9, 1.7);
    CHECK(std::abs(2.0 * aux(0, 1) - expected) < 1e-11);
}

TEST_CASE("sigma+ convention: 2<sigma+> = <sigma_x> + i <sigma_y>") {
    // for a known 2x2 state, sampling converges to the exact expectations
    Eigen::Matrix2cd aux;
    aux << 0.5, cxd(0.2, -0.15), cxd(0.2, 0.15), 0.5;
    auto ex = sample_pauli(aux, PauliAxis::x, 200000, 5);
    auto ey = sample_pauli(aux, PauliAxis::y, 200000, 6);
    // <sigma_x> = 2 Re rho01 = 0.4, <sigma_y> = -2 Im rho01 = 0.3
    CHECK(ex.mean.real() == Approx(0.4).margin(5.0 * ex.stderr_re));
    CHECK(ey.mean.real() == Approx(0.3).margin(5.0 * ey.stderr_re));
}

TEST_CASE("pauli sampling statistics") {
    // deterministic |+> state on the x axis
    Eigen::Matrix2cd plus;
    plus << 0.5, 0.5, 0.5, 0.5;
    auto est = sample_pauli(plus, PauliAxis::x, 10000, 7);
    CHECK(est.mean.real() == Approx(1.0).margin(1e-12));
    CHECK(est.stderr_re == Approx(0.0).margin(1e-12));

    // <sigma_x> = 0 state: stderr ~ 1/sqrt(shots) within 20%
    Eigen::Matrix2cd mixed = Eigen::Matrix2cd::Identity() * 0.5;
    auto zero = sample_pauli(mixed, PauliAxis::x, 10000, 8);
    CHECK(std::abs(zero.stderr_re - 0.01) < 0.002);

    // determinism per seed
    auto again = sample_pauli(mixed, PauliAxis::x, 10000, 8);
    CHECK(zero.mean == again.mean);

    // zero-trace branch
    Eigen::Matrix2cd dead = Eigen::Matrix2cd::Zero();
    CHECK_THROWS(sample_pauli(dead, PauliAxis::x, 100, 9));
}

TEST_CASE("estimate_echo: exact injection and coverage") {
    auto sys = diagonalize_hamiltonian(random_hamiltonian(Ensemble::gue, 16, 11));
    Observable p = random_projector(16, 6, 12);

    ProtocolPlan plan;
    plan.target = EchoKind::L_H;
    for (int j = 0; j < 8; ++j) plan.time_points.push_back({0.5 * j, 0.0});
    plan.shots_per_point = 100000;
    plan.seed = 13;

    // t = 0: L_H = 1 exactly, no variance on the x axis
    auto exact = exact_echo_values(sys, plan);
    CHECK(std::abs(exact.at({0.0, 0.0}).mean - cxd(1.0, 0.0)) < 1e-12);

    auto est = estimate_echo(sys, plan);
    CHECK(std::abs(est.at({0.0, 0.0}).mean.real() - 1.0) < 1e-12);

    // coverage: |estimate - exact| <= 4 stderr on >= 95% of points across seeds
    int covered = 0, total = 0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        ProtocolPlan pl = plan;
        pl.target = EchoKind::L_AA;
        pl.observable = p;
        pl.shots_per_point = 100000;
        pl.seed = seed;
        pl.time_points.clear();
        for (int j = 0; j < 4; ++j) pl.time_points.push_back({0.7 * j, 0.7 * j});
        auto ests = estimate_echo(sys, pl);
        for (const auto& [tp, e] : ests) {
            cxd truth = echo(sys, EchoKind::L_AA, p, tp.t1, tp.t2);
            double err = std::abs(e.mean - truth);
            double sigma = std::max(e.stderr_total, 1e-12);
            if (err <= 4.0 * sigma) ++covered;
            ++total;
        }
    }
    CHECK(static_cast<double>(covered) / total >= 0.95);
}

TEST_CASE("negative times come from conjugation") {
    auto sys = diagonalize_hamiltonian(random_hamiltonian(Ensemble::gue, 8, 21));
    ProtocolPlan plan;
    plan.target = EchoKind::L_H;
    plan.time_points = {{-1.3, 0.0}};
    plan.shots_per_point = 200000;
    plan.seed = 22;
    auto est = estimate_echo(sys, plan);
    cxd truth = echo(sys, EchoKind::L_H, Observable{}, -1.3);
    CHECK(std::abs(est.at({-1.3, 0.0}).mean - truth) < 5.0 * est.at({-1.3, 0.0}).stderr_total + 1e-3);
}

TEST_CASE("stderr scales as shots^(-1/2)") {
    auto sys = diagonalize_hamiltonian(random_hamiltonian(Ensemble::gue, 16, 31));
    Observable p = random_projector(16, 8, 32);

    double r_small = 0.0, r_big = 0.0;
    int count = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        ProtocolPlan plan;
        plan.target = EchoKind::L_AA;
        plan.observable = p;
        plan.time_points = {{0.9, 0.9}};
        plan.seed = 100 + seed;
        plan.shots_per_point = 10000;
        auto small = estimate_echo(sys, plan);
        plan.shots_per_point = 40000;
        auto big = estimate_echo(sys, plan);
        r_small += small.at({0.9, 0.9}).stderr_total;
        r_big += big.at({0.9, 0.9}).stderr_total;
        ++count;
    }
    double ratio = (r_small / count) / (r_big / count);
    CHECK(std::abs(ratio - 2.0) < 0.3);  // 4x shots halves the error, within 15%
}

TEST_CASE("estimator is unbiased across seeds") {
    auto sys = diagonalize_hamiltonian(random_hamiltonian(Ensemble::gue, 8, 41));
    Observable p = random_projector(8, 3, 42);
    cxd truth = echo(sys, EchoKind::L_AA, p, 0.8, 0.8);

    cxd acc = 0.0;
    double var_acc = 0.0;
    const int n_seeds = 1000;
    for (std::uint64_t seed = 0; seed < n_seeds; ++seed) {
        ProtocolPlan plan;
        plan.target = EchoKind::L_AA;
        plan.observable = p;
        plan.time_points = {{0.8, 0.8}};
        plan.shots_per_point = 400;
        plan.seed = 1000 + seed;
        auto est = estimate_echo(sys, plan);
        acc += est.at({0.8, 0.8}).mean;
        var_acc += est.at({0.8, 0.8}).stderr_total * est.at({0.8, 0.8}).stderr_total;
    }
    cxd mean = acc / static_cast<double>(n_seeds);
    double combined = std::sqrt(var_acc) / n_seeds;
    CHECK(std::abs(mean - truth) <= 5.0 * combined);
}

TEST_CASE("certified shell metric from shots") {
    auto sys = diagonalize_hamiltonian(random_hamiltonian(Ensemble::gue, 16, 51));
    Observable p = random_projector(16, 6, 52);
    double spread = sys.spectral_spread();
    double e_c = 0.5 * (sys.energies(0) + sys.energies(15));

    ShellEchoConfig cfg;
    cfg.w_plus = fejer_weight(8, 1.0);
    cfg.v_plus = fejer_weight(4, 0.9 * 2.0 * pi / (1.5 * spread));
    cfg.e_center = e_c;
    EnergyShell shell = interval_shell(sys, e_c - 0.2 * spread, e_c + 0.2 * spread);
    cfg.thermal_value = microcanonical_value(p, shell, sys);
    BandSpec band(0.25);

    // grids demanded by the weights
    ProtocolPlan plan_aa, plan_a, plan_h;
    plan_aa.target = EchoKind::L_AA;
    plan_aa.observable = p;
    plan_a.target = EchoKind::L_A;
    plan_a.observable = p;
    plan_h.target = EchoKind::L_H;
    for (const auto& wa : cfg.w_plus.atoms)
        for (const auto& va : cfg.v_plus.atoms)
            plan_aa.time_points.push_back({wa.t + 0.5 * va.t, wa.t - 0.5 * va.t});
    for (const auto& va : cfg.v_plus.atoms) {
        plan_a.time_points.push_back({va.t, 0.0});
        plan_h.time_points.push_back({va.t, 0.0});
    }

    // zero noise: injected exact values reproduce the analytic echo
    auto cert0 = certified_shell_metric_from_shots(sys, p, cfg, exact_echo_values(sys, plan_aa),
                                                   exact_echo_values(sys, plan_a),
                                                   exact_echo_values(sys, plan_h), shell, band);
    auto exact = shell_echo_expectation(sys, p, cfg);
    CHECK(cert0.estimate == Approx(exact.value()).margin(1e-10));
    CHECK(cert0.stderr_total == 0.0);
    CHECK(cert0.report.holds);

    // heavy sampling: certified bound within 2x of the exact-echo bound
    plan_aa.shots_per_point = plan_a.shots_per_point = plan_h.shots_per_point = 1000000;
    plan_aa.seed = 61;
    plan_a.seed = 62;
    plan_h.seed = 63;
    auto cert = certified_shell_metric_from_shots(sys, p, cfg, estimate_echo(sys, plan_aa),
                                                  estimate_echo(sys, plan_a),
                                                  estimate_echo(sys, plan_h), shell, band);
    CHECK(cert.report.holds);
    double exact_bound = cert0.report.rhs;
    CHECK(cert.report.rhs <= 2.0 * exact_bound + 1e-9);

    // starved sampling: error bar dominates and the report is flagged
    plan_aa.shots_per_point = plan_a.shots_per_point = plan_h.shots_per_point = 16;
    auto starved = certified_shell_metric_from_shots(sys, p, cfg, estimate_echo(sys, plan_aa),
                                                     estimate_echo(sys, plan_a),
                                                     estimate_echo(sys, plan_h), shell, band);
    CHECK(starved.report.notes.count("non_informative") == 1);

    // missing grid points are rejected
    auto missing = estimate_echo(sys, plan_a);
    missing.erase(missing.begin());
    CHECK_THROWS(certified_shell_metric_from_shots(sys, p, cfg, exact_echo_values(sys, plan_aa),
                                                   missing, exact_echo_values(sys, plan_h), shell,
                                                   band));
}
