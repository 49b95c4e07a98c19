#pragma once

// Dense Hermitian/unitary diagonalization, eigenbasis transforms, energy
// shells, band-restricted operators and exact time evolution. Everything
// downstream (metrics, echoes, verifiers) consumes the SpectralSystem
// produced here as the single source of spectral truth.

#include "thermalab/linalg.hpp"

#include <algorithm>
#include <numeric>
#include <optional>
#include <vector>

namespace thermalab {

struct Tolerances {
    double hermitian = 1e-10;       // input validation for diagonalize
    double unitary = 1e-10;         // input validation for diagonalize
    double observable = 1e-12;      // Hermiticity of observables
    double projector = 1e-10;       // max |P^2 - P|
    double cluster_rel = 1e-10;     // near-degeneracy grouping, relative to spread
    double first_nonzero = 1e-10;   // "first nonzero coefficient" cutoff
};

inline const Tolerances& default_tols() {
    static Tolerances t;
    return t;
}

enum class SystemKind { hamiltonian, floquet };

struct SpectralSystem {
    SystemKind kind = SystemKind::hamiltonian;
    RealVector energies;    // ascending; quasi-energies in (-pi, pi] for floquet
    Matrix eigenbasis;      // columns are eigenvectors

    int dim() const { return static_cast<int>(energies.size()); }
    bool is_floquet() const { return kind == SystemKind::floquet; }

    double spectral_spread() const {
        return energies(dim() - 1) - energies(0);
    }

    // V^dag M V
    Matrix to_eigen(const Matrix& m) const {
        return eigenbasis.adjoint() * m * eigenbasis;
    }
    Matrix from_eigen(const Matrix& m) const {
        return eigenbasis * m * eigenbasis.adjoint();
    }

    // exp(-i E_n t) for all n
    Vector phases(double t) const {
        Vector u(dim());
        for (int n = 0; n < dim(); ++n) u(n) = std::exp(cxd(0.0, -energies(n) * t));
        return u;
    }

    Matrix reconstruct() const {
        int d = dim();
        Vector lam(d);
        for (int n = 0; n < d; ++n)
            lam(n) = is_floquet() ? std::exp(cxd(0.0, -energies(n))) : cxd(energies(n), 0.0);
        return eigenbasis * lam.asDiagonal() * eigenbasis.adjoint();
    }
};

struct Observable {
    Matrix matrix;
    bool is_projector = false;
    std::string label;

    int dim() const { return static_cast<int>(matrix.rows()); }
};

inline Observable make_observable(Matrix m, std::string label = "", bool is_projector = false,
                                  const Tolerances& tol = default_tols()) {
    if (m.rows() != m.cols()) throw std::invalid_argument("observable: matrix not square");
    if (hermiticity_residual(m) > tol.observable)
        throw std::invalid_argument("observable '" + label + "': not Hermitian within tolerance");
    if (is_projector && max_abs(m * m - m) > tol.projector)
        throw std::invalid_argument("observable '" + label + "': projector flag set but P^2 != P");
    return Observable{std::move(m), is_projector, std::move(label)};
}

struct DensityOperator {
    Matrix matrix;

    int dim() const { return static_cast<int>(matrix.rows()); }
    double purity() const { return matrix.squaredNorm(); }  // Tr[rho^2] for Hermitian rho
};

// Full validation: Hermiticity, unit trace, purity range and positive
// semidefiniteness (the last one costs an eigensolve).
inline DensityOperator make_density(Matrix m, bool check_psd = true) {
    int d = static_cast<int>(m.rows());
    if (m.rows() != m.cols()) throw std::invalid_argument("density: matrix not square");
    if (hermiticity_residual(m) > 1e-12) throw std::invalid_argument("density: not Hermitian");
    if (std::abs(m.trace().real() - 1.0) > 1e-12 || std::abs(m.trace().imag()) > 1e-12)
        throw std::invalid_argument("density: trace != 1");
    double pur = m.squaredNorm();
    if (pur < 1.0 / d - 1e-10 || pur > 1.0 + 1e-10)
        throw std::invalid_argument("density: purity outside [1/D, 1]");
    if (check_psd) {
        Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
        if (es.eigenvalues()(0) < -1e-10)
            throw std::invalid_argument("density: negative eigenvalue");
    }
    return DensityOperator{std::move(m)};
}

inline DensityOperator pure_state(const Vector& psi) {
    Vector v = psi / psi.norm();
    return DensityOperator{v * v.adjoint()};
}

struct EnergyShell {
    std::vector<int> indices;  // strictly increasing subset of 0..D-1

    int d() const { return static_cast<int>(indices.size()); }
};

inline EnergyShell make_shell(std::vector<int> indices, int dim) {
    if (indices.empty()) throw std::invalid_argument("shell: empty index set");
    for (size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] < 0 || indices[i] >= dim) throw std::invalid_argument("shell: index out of range");
        if (i > 0 && indices[i] <= indices[i - 1])
            throw std::invalid_argument("shell: indices not strictly increasing");
    }
    return EnergyShell{std::move(indices)};
}

inline EnergyShell full_shell(int dim) {
    std::vector<int> idx(dim);
    std::iota(idx.begin(), idx.end(), 0);
    return EnergyShell{std::move(idx)};
}

// Closed energy window [e_lo, e_hi].
inline EnergyShell interval_shell(const SpectralSystem& sys, double e_lo, double e_hi) {
    std::vector<int> idx;
    for (int n = 0; n < sys.dim(); ++n)
        if (sys.energies(n) >= e_lo && sys.energies(n) <= e_hi) idx.push_back(n);
    return make_shell(std::move(idx), sys.dim());
}

struct BandSpec {
    double delta_e = 0.0;
    bool circle_metric = false;  // wrap quasi-energy differences mod 2pi

    BandSpec() = default;
    BandSpec(double de, bool circle = false) : delta_e(de), circle_metric(circle) {
        if (!(de > 0.0)) throw std::invalid_argument("band: delta_e must be positive");
    }
};

inline BandSpec band_for(const SpectralSystem& sys, double delta_e) {
    return BandSpec(delta_e, sys.is_floquet());
}

inline double band_distance(const BandSpec& band, double gap) {
    double g = std::abs(gap);
    if (!band.circle_metric) return g;
    g = std::fmod(g, 2.0 * pi);
    return std::min(g, 2.0 * pi - g);
}

inline bool in_band(const BandSpec& band, double gap) {
    return band_distance(band, gap) < band.delta_e;  // strict
}

namespace detail {

// Deterministic basis fixing. Within each near-degenerate cluster the
// eigenvectors are re-orthonormalized and ordered by descending magnitude
// of their first nonzero coefficient (ties broken by the next one); every
// column gets its first significant coefficient rotated to be real positive.
inline void fix_cluster_basis(Matrix& basis, const std::vector<std::pair<int, int>>& clusters,
                              double first_nonzero_tol) {
    int dim = static_cast<int>(basis.rows());
    for (auto [lo, hi] : clusters) {
        int k = hi - lo;
        if (k > 1) {
            Matrix block = basis.middleCols(lo, k);
            Eigen::HouseholderQR<Matrix> qr(block);
            Matrix q = Matrix(qr.householderQ()).leftCols(k);
            Matrix r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
            for (int j = 0; j < k; ++j) {
                cxd d = r(j, j);
                double a = std::abs(d);
                if (a > 0.0) q.col(j) *= d / a;
            }
            std::vector<int> order(k);
            std::iota(order.begin(), order.end(), 0);
            std::sort(order.begin(), order.end(), [&](int a, int b) {
                for (int i = 0; i < dim; ++i) {
                    double da = std::abs(q(i, a)), db = std::abs(q(i, b));
                    if (std::abs(da - db) > first_nonzero_tol) return da > db;
                }
                return a < b;
            });
            for (int j = 0; j < k; ++j) basis.col(lo + j) = q.col(order[j]);
        }
        for (int j = lo; j < hi; ++j) {
            for (int i = 0; i < dim; ++i) {
                double a = std::abs(basis(i, j));
                if (a > first_nonzero_tol) {
                    basis.col(j) *= std::conj(basis(i, j)) / a;
                    break;
                }
            }
        }
    }
}

inline std::vector<std::pair<int, int>> cluster_ranges(const RealVector& energies, double threshold) {
    std::vector<std::pair<int, int>> out;
    int d = static_cast<int>(energies.size());
    int start = 0;
    for (int n = 1; n <= d; ++n) {
        if (n == d || energies(n) - energies(n - 1) > threshold) {
            out.emplace_back(start, n);
            start = n;
        }
    }
    return out;
}

inline double cluster_threshold(const RealVector& energies, double rel_tol) {
    double spread = energies(energies.size() - 1) - energies(0);
    return rel_tol * std::max(1.0, spread);
}

}  // namespace detail

inline SpectralSystem diagonalize(const Matrix& input, SystemKind kind,
                                  const Tolerances& tol = default_tols()) {
    if (input.rows() != input.cols()) throw std::invalid_argument("diagonalize: non-square input");
    int d = static_cast<int>(input.rows());
    SpectralSystem sys;
    sys.kind = kind;

    if (kind == SystemKind::hamiltonian) {
        if (hermiticity_residual(input) > tol.hermitian)
            throw std::invalid_argument("diagonalize: input not Hermitian within tolerance");
        Eigen::SelfAdjointEigenSolver<Matrix> es(input);
        if (es.info() != Eigen::Success) throw std::runtime_error("diagonalize: eigensolver failed");
        sys.energies = es.eigenvalues();
        sys.eigenbasis = es.eigenvectors();
    } else {
        if (unitarity_residual(input) > tol.unitary)
            throw std::invalid_argument("diagonalize: input not unitary within tolerance");
        Eigen::ComplexSchur<Matrix> schur(input, true);
        if (schur.info() != Eigen::Success) throw std::runtime_error("diagonalize: Schur failed");
        // Schur of a normal matrix: T is diagonal up to roundoff, Q unitary.
        RealVector quasi(d);
        for (int n = 0; n < d; ++n) {
            double e = -std::arg(schur.matrixT()(n, n));  // eigenvalue = exp(-i E)
            if (e <= -pi) e += 2.0 * pi;
            quasi(n) = e;
        }
        std::vector<int> order(d);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return quasi(a) < quasi(b); });
        sys.energies.resize(d);
        sys.eigenbasis.resize(d, d);
        const Matrix& q = schur.matrixU();
        for (int n = 0; n < d; ++n) {
            sys.energies(n) = quasi(order[n]);
            sys.eigenbasis.col(n) = q.col(order[n]);
        }
    }

    double threshold = detail::cluster_threshold(sys.energies, tol.cluster_rel);
    auto clusters = detail::cluster_ranges(sys.energies, threshold);
    detail::fix_cluster_basis(sys.eigenbasis, clusters, tol.first_nonzero);
    return sys;
}

inline SpectralSystem diagonalize_hamiltonian(const Matrix& h, const Tolerances& tol = default_tols()) {
    return diagonalize(h, SystemKind::hamiltonian, tol);
}

inline SpectralSystem diagonalize_floquet(const Matrix& u, const Tolerances& tol = default_tols()) {
    return diagonalize(u, SystemKind::floquet, tol);
}

inline Matrix to_eigenbasis(const SpectralSystem& sys, const Observable& a) {
    if (a.dim() != sys.dim()) throw std::invalid_argument("to_eigenbasis: dimension mismatch");
    return sys.to_eigen(a.matrix);
}

// [A]_{shell, DeltaE} expressed in the eigenbasis: keep <E_n|A|E_m> when
// n, m are in the shell and |E_n - E_m| < DeltaE (circle distance for
// floquet systems with circle_metric), zero elsewhere.
inline Matrix band_restrict(const SpectralSystem& sys, const Observable& a, const EnergyShell& shell,
                            const BandSpec& band) {
    if (a.dim() != sys.dim()) throw std::invalid_argument("band_restrict: dimension mismatch");
    Matrix ae = sys.to_eigen(a.matrix);
    Matrix out = Matrix::Zero(sys.dim(), sys.dim());
    for (int n : shell.indices)
        for (int m : shell.indices)
            if (in_band(band, sys.energies(n) - sys.energies(m))) out(n, m) = ae(n, m);
    return out;
}

inline double microcanonical_value(const Observable& a, const EnergyShell& shell,
                                   const SpectralSystem& sys) {
    if (a.dim() != sys.dim()) throw std::invalid_argument("microcanonical_value: dimension mismatch");
    cxd acc = 0.0;
    for (int n : shell.indices) {
        acc += (sys.eigenbasis.col(n).adjoint() * a.matrix * sys.eigenbasis.col(n))(0);
    }
    acc /= static_cast<double>(shell.d());
    if (std::abs(acc.imag()) > 1e-12)
        throw std::runtime_error("microcanonical_value: imaginary residue too large");
    return acc.real();
}

// Maximally mixed state on a shell, expressed in the original basis.
inline DensityOperator maximally_mixed(const SpectralSystem& sys, const EnergyShell& shell) {
    Matrix m = Matrix::Zero(sys.dim(), sys.dim());
    for (int n : shell.indices) {
        m.noalias() += sys.eigenbasis.col(n) * sys.eigenbasis.col(n).adjoint();
    }
    return DensityOperator{m / static_cast<double>(shell.d())};
}

// One shell per (nearly) degenerate eigenspace H(E).
inline std::vector<EnergyShell> eigenspace_partition(const SpectralSystem& sys, double rel_tol) {
    if (!(rel_tol > 0.0)) throw std::invalid_argument("eigenspace_partition: rel_tol must be > 0");
    double threshold = detail::cluster_threshold(sys.energies, rel_tol);
    auto clusters = detail::cluster_ranges(sys.energies, threshold);
    std::vector<EnergyShell> out;
    out.reserve(clusters.size());
    for (auto [lo, hi] : clusters) {
        std::vector<int> idx(hi - lo);
        std::iota(idx.begin(), idx.end(), lo);
        out.push_back(EnergyShell{std::move(idx)});
    }
    return out;
}

inline DensityOperator evolve(const SpectralSystem& sys, const DensityOperator& rho, double t) {
    if (rho.dim() != sys.dim()) throw std::invalid_argument("evolve: dimension mismatch");
    if (sys.is_floquet() && std::abs(t - std::round(t)) > 1e-9)
        throw std::invalid_argument("evolve: floquet systems evolve by integer steps");
    Vector u = sys.phases(t);
    Matrix re = sys.to_eigen(rho.matrix);
    re = u.asDiagonal() * re * u.adjoint().asDiagonal();
    return DensityOperator{sys.from_eigen(re)};
}

inline double expectation(const DensityOperator& rho, const Observable& a) {
    return (rho.matrix.cwiseProduct(a.matrix.transpose())).sum().real();
}

// Projection residual of rho onto the shell span (support check).
inline double shell_support_residual(const SpectralSystem& sys, const DensityOperator& rho,
                                     const EnergyShell& shell) {
    Matrix re = sys.to_eigen(rho.matrix);
    double out = 0.0;
    std::vector<bool> in(sys.dim(), false);
    for (int n : shell.indices) in[n] = true;
    for (int n = 0; n < sys.dim(); ++n)
        for (int m = 0; m < sys.dim(); ++m)
            if (!in[n] || !in[m]) out = std::max(out, std::abs(re(n, m)));
    return out;
}

}  // namespace thermalab
