#include <catch2/catch_amalgamated.hpp>

#include "thermalab/metrics.hpp"
#include "thermalab/models.hpp"

using namespace thermalab;
using Catch::Approx;

namespace {

Observable eigenbasis_diag(const SpectralSystem& sys, const RealVector& diag,
                           bool projector = false) {
    Matrix m = sys.eigenbasis * diag.cast<cxd>().asDiagonal() * sys.eigenbasis.adjoint();
    return make_observable((m + m.adjoint()) / 2.0, "diag", projector);
}

Observable random_projector(int dim, int rank, std::uint64_t seed) {
    Matrix v = haar_unitary(dim, seed);
    Matrix p = v.leftCols(rank) * v.leftCols(rank).adjoint();
    return make_observable((p + p.adjoint()) / 2.0, "P", true);
}

}  // namespace

TEST_CASE("eigenstate deviations") {
    auto sys = diagonalize_hamiltonian(random_hamiltonian(Ensemble::gue, 8, 1));

    Observable c = make_observable(0.7 * Matrix::Identity(8, 8), "c1");
    for (double d : eigenstate_deviations(sys, c, full_shell(8))) CHECK(d < 1e-12);

    auto sys2 = diagonalize_hamiltonian(random_hamiltonian(Ensemble::gue, 2, 2));
    RealVector diag(2);
    diag << 1.0, 0.0;
    auto dev = eigenstate_deviations(sys2, eigenbasis_diag(sys2, diag), full_shell(2));
    CHECK(dev[0] == Approx(0.5).margin(1e-10));
    CHECK(dev[1] == Approx(0.5).margin(1e-10));

    Observable p = random_projector(8, 3, 3);
    for (double d : eigenstate_deviations(sys, p, full_shell(8))) CHECK(d <= 1.0 + 1e-12);
}

TEST_CASE("eigenspace metric") {
    auto sys = diagonalize_hamiltonian(degenerate_hamiltonian({2, 1}, {1.0}, 4));
    auto spaces = eigenspace_partition(sys, 1e-10);
    REQUIRE(spaces.size() == 2);

    Observable c = make_observable(0.3 * Matrix::Identity(3, 3), "c1");
    CHECK(eigenspace_metric(sys, c, spaces[0], 0.3).value == Approx(0.0).margin(1e-12));

    // singleton eigenspace reduces to the squared eigenstate deviation
    Observable a = make_observable(random_hamiltonian(Ensemble::gue, 3, 5), "A");
    double th = microcanonical_value(a, full_shell(3), sys);
    auto devs = eigenstate_deviations(sys, a, spaces[1]);
    double shifted_dev = std::abs((sys.eigenbasis.col(2).adjoint() * a.matrix * sys.eigenbasis.col(2))(0).real() - th);
    CHECK(eigenspace_metric(sys, a, spaces[1], th).value ==
          Approx(shifted_dev * shifted_dev).margin(1e-10));
    (void)devs;

    // planted off-diagonal element x inside a 2-fold degenerate space
    cxd x(0.2, 0.1);
    Matrix me = Matrix::Zero(3, 3);
    me(0, 1) = x;
    me(1, 0) = std::conj(x);
    Observable planted = make_observable(sys.from_eigen(me), "planted");
    double m = eigenspace_metric(sys, planted, spaces[0], 0.0).value;
    CHECK(m == Approx(2.0 * std::norm(x)).margin(1e-10));
}

TEST_CASE("band metric hand evaluation") {
    RealVector evals(4);
    evals << 0.0, 0.1, 1.0, 1.1;
    Matrix h = evals.cast<cxd>().asDiagonal();
    auto sys = diagonalize_hamiltonian(h);
    RealVector diag(4);
    diag << 1.0, 0.0, 1.0, 0.0;
    Observable a = eigenbasis_diag(sys, diag);

    auto report = band_metric(sys, a, full_shell(4), BandSpec(0.5), 0.5);
    CHECK(report.value == Approx(0.25).margin(1e-10));
    CHECK(report.epsilon == Approx(0.5).margin(1e-10));

    Observable c = make_observable(0.5 * Matrix::Identity(4, 4), "c");
    CHECK(band_metric(sys, c, full_shell(4), BandSpec(0.5), 0.5).value == Approx(0.0).margin(1e-12));
}

TEST_CASE("band metric properties") {
    auto sys = diagonalize_hamiltonian(random_hamiltonian(Ensemble::gue, 24, 7));
    Observable a = random_projector(24, 9, 8);
    double th = microcanonical_value(a, full_shell(24), sys);

    // monotone non-decreasing in DeltaE
    double prev = 0.0;
    for (double de : {0.05, 0.1, 0.3, 0.8, 2.0, 10.0}) {
        double v = band_metric(sys, a, full_shell(24), BandSpec(de), th).value;
        CHECK(v >= prev - 1e-12);
        prev = v;
    }

    // all pairs admitted: (1/D) Tr[(A - <A>)^2]
    Matrix dev = a.matrix - th * Matrix::Identity(24, 24);
    double full = (dev * dev).trace().real() / 24.0;
    CHECK(band_metric(sys, a, full_shell(24), BandSpec(1e6), th).value == Approx(full).margin(1e-10));

    // shell variant beyond spread: (1/d) Tr[(P_S (A - th) P_S)^2]
    EnergyShell shell = make_shell({2, 3, 5, 8, 13, 21}, 24);
    Matrix ae = sys.to_eigen(a.matrix);
    Matrix masked = Matrix::Zero(24, 24);
    for (int n : shell.indices)
        for (int m : shell.indices) masked(n, m) = ae(n, m) - ((n == m) ? th : 0.0);
    double expect = (masked * masked).trace().real() / shell.d();
    CHECK(band_metric(sys, a, shell, BandSpec(1e6), th).value == Approx(expect).margin(1e-10));

    // summed eigenspace metrics bounded by d * band metric
    double sum_spaces = 0.0;
    for (const auto& space : eigenspace_partition(sys, 1e-10))
        sum_spaces += eigenspace_metric(sys, a, space, th).value;
    for (double de : {0.05, 0.5}) {
        double band = band_metric(sys, a, full_shell(24), BandSpec(de), th).value;
        CHECK(sum_spaces <= 24.0 * band + 1e-10);
    }
}

TEST_CASE("metrics are invariant under frame rotation on nondegenerate spectra") {
    Matrix h = random_hamiltonian(Ensemble::gue, 12, 9);
    Observable a = random_projector(12, 5, 10);
    auto s1 = diagonalize_hamiltonian(h);
    Matrix v = haar_unitary(12, 19);
    auto s2 = diagonalize_hamiltonian(v * h * v.adjoint());
    Observable a2 = make_observable(v * a.matrix * v.adjoint(), "A", true);

    double th = microcanonical_value(a, full_shell(12), s1);
    for (double de : {0.2, 1.0}) {
        double m1 = band_metric(s1, a, full_shell(12), BandSpec(de), th).value;
        double m2 = band_metric(s2, a2, full_shell(12), BandSpec(de), th).value;
        CHECK(m1 == Approx(m2).margin(1e-9));
    }
}

TEST_CASE("cloned band metric equals the quadruple brute force") {
    Rng seeds(1);
    for (int trial = 0; trial < 6; ++trial) {
        int d = 4 + static_cast<int>(seeds.uniform_index(5));  // 4..8
        auto sys = diagonalize_hamiltonian(random_hamiltonian(Ensemble::gue, d, 100 + trial));
        Observable a = random_projector(d, std::max(1, d / 2), 200 + trial);
        double th = microcanonical_value(a, full_shell(d), sys);
        for (double de : {0.1, 0.5, 2.0}) {
            double sweep = cloned_band_metric(sys, a, full_shell(d), BandSpec(de), th).value;
            double brute = cloned_band_metric_bruteforce(sys, a, full_shell(d), BandSpec(de), th);
            CHECK(sweep == Approx(brute).margin(1e-10));
        }
    }
}

TEST_CASE("cloned band metric limits") {
    auto sys = diagonalize_hamiltonian(random_hamiltonian(Ensemble::gue, 10, 31));
    Observable c = make_observable(0.4 * Matrix::Identity(10, 10), "c");
    CHECK(cloned_band_metric(sys, c, full_shell(10), BandSpec(0.3), 0.4).value ==
          Approx(0.0).margin(1e-12));

    // beyond 2x spread the full sum factorizes into the squared band metric
    Observable a = random_projector(10, 4, 32);
    double th = microcanonical_value(a, full_shell(10), sys);
    double spread = sys.spectral_spread();
    double full = band_metric(sys, a, full_shell(10), BandSpec(1e6), th).value;
    double cloned = cloned_band_metric(sys, a, full_shell(10), BandSpec(2.5 * spread + 1.0), th).value;
    CHECK(cloned == Approx(full * full).margin(1e-10));

    CHECK_THROWS(cloned_band_metric(sys, a, full_shell(10), BandSpec(1.0), th, 8));
}

TEST_CASE("cloned band metric with circle metric matches brute force") {
    Rng rng(5);
    auto sys = diagonalize_floquet(haar_unitary(6, rng));
    Observable a = random_projector(6, 3, 55);
    double th = microcanonical_value(a, full_shell(6), sys);
    BandSpec band(0.7, true);
    double sweep = cloned_band_metric(sys, a, full_shell(6), band, th).value;
    double brute = cloned_band_metric_bruteforce(sys, a, full_shell(6), band, th);
    CHECK(sweep == Approx(brute).margin(1e-10));
}

TEST_CASE("nonthermal fraction") {
    auto sys = diagonalize_hamiltonian(random_hamiltonian(Ensemble::gue, 16, 61));
    auto w = fejer_weight(16, 1.0);

    Observable c = make_observable(0.25 * Matrix::Identity(16, 16), "c");
    CHECK(nonthermal_fraction(sys, c, computational_basis(16), w, 0.25, 1e-6) == 0.0);

    // in the eigenbasis the weighted average is stationary: the fraction
    // counts eigenstate deviations
    Observable a = random_projector(16, 6, 62);
    double th = microcanonical_value(a, full_shell(16), sys);
    auto devs = eigenstate_deviations(sys, a, full_shell(16));
    for (double lambda : {0.02, 0.1, 0.4}) {
        int count = 0;
        for (double d : devs)
            if (d >= lambda) ++count;
        double f = nonthermal_fraction(sys, a, shell_eigenbasis(sys, full_shell(16)), w, th, lambda);
        CHECK(f == Approx(static_cast<double>(count) / 16.0).margin(1e-12));
    }
    CHECK_THROWS(nonthermal_fraction(sys, a, computational_basis(16), w, th, 0.0));
}

TEST_CASE("eigenspace violation count") {
    // planted: degenerate spectrum, A thermal except inside one eigenspace
    auto sys = diagonalize_hamiltonian(degenerate_hamiltonian({3, 3, 2}, {1.0, 1.0}, 71));
    double th = 0.5;
    Matrix me = th * Matrix::Identity(8, 8);
    me(3, 4) = cxd(0.0, 0.3);  // inside the second eigenspace {3,4,5}
    me(4, 3) = cxd(0.0, -0.3);
    Observable a = make_observable(sys.from_eigen(me), "planted");

    auto vc = eigenspace_violation_count(sys, a, full_shell(8), BandSpec(0.5), th, 0.1);
    CHECK(vc.count == 1);
    CHECK(vc.count <= vc.bound + 1e-12);

    Observable c = make_observable(th * Matrix::Identity(8, 8), "c");
    CHECK(eigenspace_violation_count(sys, c, full_shell(8), BandSpec(0.5), th, 0.1).count == 0);
}

TEST_CASE("violation count is bounded on random instances") {
    for (int trial = 0; trial < 50; ++trial) {
        int d = 8 + 4 * (trial % 4);
        auto sys = diagonalize_hamiltonian(random_hamiltonian(Ensemble::gue, d, 300 + trial));
        Observable a = random_projector(d, std::max(1, d / 3), 400 + trial);
        double th = microcanonical_value(a, full_shell(d), sys);
        auto vc = eigenspace_violation_count(sys, a, full_shell(d), BandSpec(0.4), th, 0.2);
        CHECK(vc.count <= vc.bound + 1e-12);
    }
}

TEST_CASE("participation fraction") {
    auto sys = diagonalize_hamiltonian(random_hamiltonian(Ensemble::gue, 8, 81));
    EnergyShell shell = make_shell({1, 2, 4, 6}, 8);
    CHECK(participation_fraction(maximally_mixed(sys, shell), shell.d()) == Approx(1.0).margin(1e-10));

    Vector psi = Vector::Zero(8);
    psi(2) = 1.0;
    CHECK(participation_fraction(pure_state(psi), 4) == Approx(0.25).margin(1e-12));

    // equal mixture of k orthogonal states -> k/d
    Matrix mix = Matrix::Zero(8, 8);
    for (int n : {0, 1, 2}) mix(n, n) = 1.0 / 3.0;
    CHECK(participation_fraction(DensityOperator{mix}, 4) == Approx(3.0 / 4.0).margin(1e-12));
}

TEST_CASE("basis validation") {
    CHECK_THROWS(make_basis(Matrix::Ones(4, 2)));
    auto b = computational_basis(4);
    CHECK(b.d() == 4);
}
