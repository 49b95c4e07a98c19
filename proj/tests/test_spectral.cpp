#include <catch2/catch_amalgamated.hpp>

#include "thermalab/models.hpp"
#include "thermalab/spectral.hpp"

using namespace thermalab;
using Catch::Approx;

namespace {

// Taylor-series matrix exponential with scaling and squaring; the
// independent oracle for phase evolution.
Matrix series_expm(const Matrix& m) {
    int k = 0;
    double norm = m.cwiseAbs().rowwise().sum().maxCoeff();
    while (norm > 0.5) {
        norm /= 2.0;
        ++k;
    }
    Matrix x = m / std::pow(2.0, k);
    Matrix term = Matrix::Identity(m.rows(), m.cols());
    Matrix acc = term;
    for (int j = 1; j < 40; ++j) {
        term = term * x / static_cast<double>(j);
        acc += term;
        if (term.norm() < 1e-18) break;
    }
    for (int j = 0; j < k; ++j) acc = acc * acc;
    return acc;
}

}  // namespace

TEST_CASE("diagonalize sorts a diagonal Hamiltonian") {
    Matrix h = Matrix::Zero(3, 3);
    h(0, 0) = 3.0;
    h(1, 1) = 1.0;
    h(2, 2) = 2.0;
    auto sys = diagonalize_hamiltonian(h);
    CHECK(sys.energies(0) == Approx(1.0).margin(1e-12));
    CHECK(sys.energies(1) == Approx(2.0).margin(1e-12));
    CHECK(sys.energies(2) == Approx(3.0).margin(1e-12));
    // permutation matrix up to phases
    for (int j = 0; j < 3; ++j) {
        CHECK(sys.eigenbasis.col(j).cwiseAbs().maxCoeff() == Approx(1.0).margin(1e-12));
    }
}

TEST_CASE("diagonalize Pauli-x") {
    Matrix sx(2, 2);
    sx << 0.0, 1.0, 1.0, 0.0;
    auto sys = diagonalize_hamiltonian(sx);
    CHECK(sys.energies(0) == Approx(-1.0).margin(1e-12));
    CHECK(sys.energies(1) == Approx(1.0).margin(1e-12));
    double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    CHECK(std::abs(sys.eigenbasis(0, 0)) == Approx(inv_sqrt2).margin(1e-12));
    CHECK(std::abs(sys.eigenbasis(1, 1)) == Approx(inv_sqrt2).margin(1e-12));
}

TEST_CASE("random GUE reconstruction and orthonormality") {
    Matrix h = random_hamiltonian(Ensemble::gue, 64, 17);
    auto sys = diagonalize_hamiltonian(h);
    CHECK(unitarity_residual(sys.eigenbasis) < 1e-10);
    CHECK(relative_frobenius(sys.reconstruct(), h) < 1e-9);
    for (int n = 1; n < sys.dim(); ++n) CHECK(sys.energies(n) >= sys.energies(n - 1));
}

TEST_CASE("floquet diagonalization reconstructs the unitary") {
    Rng rng(5);
    Matrix u = haar_unitary(32, rng);
    auto sys = diagonalize_floquet(u);
    CHECK(relative_frobenius(sys.reconstruct(), u) < 1e-9);
    for (int n = 0; n < sys.dim(); ++n) {
        CHECK(sys.energies(n) > -pi - 1e-12);
        CHECK(sys.energies(n) <= pi + 1e-12);
    }
    CHECK(unitarity_residual(sys.eigenbasis) < 1e-10);
}

TEST_CASE("diagonalize rejects bad input") {
    Matrix rect = Matrix::Zero(2, 3);
    CHECK_THROWS(diagonalize_hamiltonian(rect));
    Matrix nh(2, 2);
    nh << 0.0, 1.0, 0.0, 0.0;
    CHECK_THROWS(diagonalize_hamiltonian(nh));
    CHECK_THROWS(diagonalize_floquet(nh));
}

TEST_CASE("diagonalize is deterministic for fixed input") {
    Matrix h = degenerate_hamiltonian({3, 2, 1}, {1.0, 1.0}, 9);
    auto a = diagonalize_hamiltonian(h);
    auto b = diagonalize_hamiltonian(h);
    CHECK(max_abs(a.eigenbasis - b.eigenbasis) == 0.0);
}

TEST_CASE("to_eigenbasis preserves traces and diagonalizes the source") {
    Matrix h = random_hamiltonian(Ensemble::gue, 16, 3);
    auto sys = diagonalize_hamiltonian(h);

    Observable id = make_observable(Matrix::Identity(16, 16), "1", true);
    CHECK(max_abs(to_eigenbasis(sys, id) - Matrix::Identity(16, 16)) < 1e-10);

    Observable hh = make_observable(h, "H");
    Matrix he = to_eigenbasis(sys, hh);
    CHECK(max_abs(he - Matrix(sys.energies.cast<cxd>().asDiagonal())) < 1e-9);

    Matrix r = random_hamiltonian(Ensemble::gue, 16, 4);
    Observable a = make_observable(r, "A");
    Matrix ae = to_eigenbasis(sys, a);
    CHECK(std::abs((ae.trace() - r.trace()).real()) < 1e-9);
    CHECK(std::abs((ae * ae).trace().real() - (r * r).trace().real()) < 1e-9);
    CHECK(hermiticity_residual(ae) < 1e-10);
}

TEST_CASE("band_restrict applies the strict selector") {
    Matrix h = Matrix::Zero(2, 2);
    h(1, 1) = 1.0;
    auto sys = diagonalize_hamiltonian(h);
    Matrix am(2, 2);
    am << 0.7, cxd(0.1, 0.2), cxd(0.1, -0.2), 0.3;
    Observable a = make_observable(am, "A");

    Matrix banded = band_restrict(sys, a, full_shell(2), BandSpec(0.5));
    CHECK(std::abs(banded(0, 1)) == 0.0);
    CHECK(std::abs(banded(1, 0)) == 0.0);
    CHECK(banded(0, 0).real() == Approx(0.7).margin(1e-12));

    Matrix wide = band_restrict(sys, a, full_shell(2), BandSpec(10.0));
    CHECK(max_abs(wide - to_eigenbasis(sys, a)) < 1e-12);

    // idempotent: the selector is a mask
    Observable banded_obs = make_observable(sys.from_eigen(banded), "Ab");
    Matrix twice = band_restrict(sys, banded_obs, full_shell(2), BandSpec(0.5));
    CHECK(max_abs(twice - banded) < 1e-12);
}

TEST_CASE("microcanonical values") {
    Matrix h = random_hamiltonian(Ensemble::gue, 4, 11);
    auto sys = diagonalize_hamiltonian(h);

    Observable id = make_observable(Matrix::Identity(4, 4), "1", true);
    CHECK(microcanonical_value(id, full_shell(4), sys) == Approx(1.0).margin(1e-12));

    EnergyShell half = make_shell({0, 1}, 4);
    RealVector diag(4);
    diag << 1.0, 0.0, 1.0, 0.0;
    Matrix am = sys.eigenbasis * diag.cast<cxd>().asDiagonal() * sys.eigenbasis.adjoint();
    Observable a = make_observable((am + am.adjoint()) / 2.0, "A");
    CHECK(microcanonical_value(a, half, sys) == Approx(0.5).margin(1e-10));

    // projector onto the shell
    Matrix pm = Matrix::Zero(4, 4);
    for (int n : half.indices) pm += sys.eigenbasis.col(n) * sys.eigenbasis.col(n).adjoint();
    Observable pshell = make_observable((pm + pm.adjoint()) / 2.0, "P", true);
    CHECK(microcanonical_value(pshell, half, sys) == Approx(1.0).margin(1e-10));

    // full shell equals Tr[A]/D
    Matrix r = random_hamiltonian(Ensemble::gue, 4, 12);
    Observable b = make_observable(r, "B");
    CHECK(microcanonical_value(b, full_shell(4), sys) ==
          Approx(r.trace().real() / 4.0).margin(1e-12));
}

TEST_CASE("eigenspace_partition groups near-degenerate levels") {
    Matrix h = Matrix::Zero(3, 3);
    h(0, 0) = 1.0;
    h(1, 1) = 1.0 + 1e-14;
    h(2, 2) = 2.0;
    auto sys = diagonalize_hamiltonian(h);
    auto parts = eigenspace_partition(sys, 1e-10);
    REQUIRE(parts.size() == 2);
    CHECK(parts[0].d() == 2);
    CHECK(parts[1].d() == 1);

    Matrix g = random_hamiltonian(Ensemble::gue, 32, 2);
    auto gsys = diagonalize_hamiltonian(g);
    CHECK(eigenspace_partition(gsys, 1e-12).size() == 32);

    Matrix dh = degenerate_hamiltonian({3, 2, 1}, {1.0, 0.5}, 21);
    auto dsys = diagonalize_hamiltonian(dh);
    auto dparts = eigenspace_partition(dsys, 1e-10);
    REQUIRE(dparts.size() == 3);
    CHECK(dparts[0].d() == 3);
    CHECK(dparts[1].d() == 2);
    CHECK(dparts[2].d() == 1);
}

TEST_CASE("evolve: stationarity, unitarity of the map, series oracle") {
    Matrix h = random_hamiltonian(Ensemble::gue, 12, 31);
    auto sys = diagonalize_hamiltonian(h);

    Rng rng(77);
    Matrix g = random_complex_gaussian(12, 4, rng);
    Matrix rho_m = g * g.adjoint();
    rho_m /= rho_m.trace().real();
    DensityOperator rho = make_density((rho_m + rho_m.adjoint()) / 2.0);

    auto same = evolve(sys, rho, 0.0);
    CHECK(max_abs(same.matrix - rho.matrix) < 1e-12);

    auto later = evolve(sys, rho, 2.7);
    CHECK(std::abs(later.matrix.trace().real() - 1.0) < 1e-10);
    CHECK(std::abs(later.purity() - rho.purity()) < 1e-10);

    // stationary state stays put
    DensityOperator stat = maximally_mixed(sys, make_shell({2, 5, 7}, 12));
    auto evolved = evolve(sys, stat, 13.3);
    CHECK(max_abs(evolved.matrix - stat.matrix) < 1e-10);

    // series-exponential oracle
    double t = 0.9;
    Matrix u = series_expm(cxd(0.0, -t) * h);
    Matrix expected = u * rho.matrix * u.adjoint();
    CHECK((later.matrix - evolve(sys, rho, 2.7).matrix).norm() == 0.0);
    CHECK((evolve(sys, rho, t).matrix - expected).norm() < 1e-8);
}

TEST_CASE("evolve floquet requires integer steps") {
    Rng rng(3);
    Matrix u = haar_unitary(8, rng);
    auto sys = diagonalize_floquet(u);
    DensityOperator rho = maximally_mixed(sys, full_shell(8));
    CHECK_NOTHROW(evolve(sys, rho, 3.0));
    CHECK_THROWS(evolve(sys, rho, 0.5));

    // integer evolution matches direct conjugation by powers of U
    Vector psi = Vector::Zero(8);
    psi(0) = 1.0;
    DensityOperator pure = pure_state(psi);
    Matrix direct = u * u * pure.matrix * (u * u).adjoint();
    CHECK(max_abs(evolve(sys, pure, 2.0).matrix - direct) < 1e-9);
}

TEST_CASE("two evolution code paths agree") {
    // Tr[evolve(rho,t) A] via materialized evolution vs the eigen-sum
    Matrix h = random_hamiltonian(Ensemble::gue, 10, 41);
    auto sys = diagonalize_hamiltonian(h);
    Rng rng(42);
    Matrix g = random_complex_gaussian(10, 10, rng);
    Matrix rho_m = g * g.adjoint();
    rho_m /= rho_m.trace().real();
    DensityOperator rho = make_density((rho_m + rho_m.adjoint()) / 2.0);
    Observable a = make_observable(random_hamiltonian(Ensemble::gue, 10, 43), "A");

    Matrix re = sys.to_eigen(rho.matrix), ae = sys.to_eigen(a.matrix);
    for (double t : {0.3, 1.7, 12.0}) {
        double via_matrix = expectation(evolve(sys, rho, t), a);
        cxd via_sum = 0.0;
        for (int n = 0; n < 10; ++n)
            for (int m = 0; m < 10; ++m)
                via_sum += std::exp(cxd(0.0, -(sys.energies(n) - sys.energies(m)) * t)) * re(n, m) * ae(m, n);
        CHECK(std::abs(via_matrix - via_sum.real()) < 1e-10);
    }
}

TEST_CASE("density validation catches bad states") {
    Matrix ok = Matrix::Identity(4, 4) / 4.0;
    CHECK_NOTHROW(make_density(ok));
    CHECK_THROWS(make_density(Matrix::Identity(4, 4)));  // trace 4
    Matrix neg = Matrix::Zero(2, 2);
    neg(0, 0) = 1.5;
    neg(1, 1) = -0.5;
    CHECK_THROWS(make_density(neg));
}

TEST_CASE("shell validation") {
    CHECK_THROWS(make_shell({}, 4));
    CHECK_THROWS(make_shell({0, 0}, 4));
    CHECK_THROWS(make_shell({3, 1}, 4));
    CHECK_THROWS(make_shell({0, 4}, 4));
    CHECK(make_shell({0, 2, 3}, 4).d() == 3);
    CHECK_THROWS(BandSpec(0.0));
}

TEST_CASE("circle metric wraps quasi-energy gaps") {
    BandSpec wrap(0.5, true);
    CHECK(in_band(wrap, 2.0 * pi - 0.1));
    CHECK(!in_band(wrap, pi));
    BandSpec flat(0.5, false);
    CHECK(!in_band(flat, 2.0 * pi - 0.1));
}
