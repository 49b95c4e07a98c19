#pragma once

// Model constructors: random-matrix Hamiltonians, planted degenerate
// spectra, mixed-field Ising chains, block models with exact conserved
// charges, dual-unitary brickwork Floquet circuits and site projectors.
// All constructors are deterministic per seed.
//
// Qubit convention: site 0 is the leftmost / most significant bit of the
// computational basis index.

#include "thermalab/spectral.hpp"

#include <array>
#include <map>
#include <optional>
#include <vector>

namespace thermalab {

enum class Ensemble { gue, goe };

inline Matrix random_hamiltonian(Ensemble ensemble, int dim, std::uint64_t seed) {
    if (dim < 2) throw std::invalid_argument("random_hamiltonian: dim must be >= 2");
    Rng rng(seed);
    Matrix a(dim, dim);
    if (ensemble == Ensemble::gue) {
        a = random_complex_gaussian(dim, dim, rng);
        return (a + a.adjoint()) / (2.0 * std::sqrt(static_cast<double>(dim)));
    }
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) a(i, j) = rng.gaussian();
    return (a + a.transpose()) / (2.0 * std::sqrt(static_cast<double>(dim)));
}

// Spectrum with exact planted multiplicities, conjugated by a seeded Haar
// unitary. Eigenvalues start at 0 and step by the given gaps.
inline Matrix degenerate_hamiltonian(const std::vector<int>& multiplicities,
                                     const std::vector<double>& gaps, std::uint64_t seed) {
    if (multiplicities.empty()) throw std::invalid_argument("degenerate_hamiltonian: no multiplicities");
    if (gaps.size() + 1 != multiplicities.size())
        throw std::invalid_argument("degenerate_hamiltonian: need |gaps| = |multiplicities| - 1");
    int dim = 0;
    for (int m : multiplicities) {
        if (m < 1) throw std::invalid_argument("degenerate_hamiltonian: multiplicity must be >= 1");
        dim += m;
    }
    RealVector evals(dim);
    double e = 0.0;
    int pos = 0;
    for (size_t k = 0; k < multiplicities.size(); ++k) {
        for (int j = 0; j < multiplicities[k]; ++j) evals(pos++) = e;
        if (k + 1 < multiplicities.size()) {
            if (!(gaps[k] > 0.0)) throw std::invalid_argument("degenerate_hamiltonian: gaps must be > 0");
            e += gaps[k];
        }
    }
    Matrix v = haar_unitary(dim, seed);
    Matrix h = v * evals.cast<cxd>().asDiagonal() * v.adjoint();
    return (h + h.adjoint()) / 2.0;
}

namespace detail {

inline int site_mask(int n_qubits, int site) { return 1 << (n_qubits - 1 - site); }

inline int bit_at(int n_qubits, int basis_index, int site) {
    return (basis_index >> (n_qubits - 1 - site)) & 1;
}

}  // namespace detail

// Mixed-field Ising chain: H = sum_i jz Z_i Z_{i+1} + hx X_i + hz Z_i.
inline Matrix spin_chain(int n_qubits, double jz, double hx, double hz, bool periodic) {
    if (n_qubits < 2 || n_qubits > 12) throw std::invalid_argument("spin_chain: n_qubits must be in [2, 12]");
    int dim = 1 << n_qubits;
    Matrix h = Matrix::Zero(dim, dim);
    int n_bonds = periodic ? n_qubits : n_qubits - 1;
    for (int b = 0; b < dim; ++b) {
        double diag = 0.0;
        for (int i = 0; i < n_bonds; ++i) {
            int zi = 1 - 2 * detail::bit_at(n_qubits, b, i);
            int zj = 1 - 2 * detail::bit_at(n_qubits, b, (i + 1) % n_qubits);
            diag += jz * zi * zj;
        }
        for (int i = 0; i < n_qubits; ++i) diag += hz * (1 - 2 * detail::bit_at(n_qubits, b, i));
        h(b, b) = diag;
        for (int i = 0; i < n_qubits; ++i) h(b ^ detail::site_mask(n_qubits, i), b) += hx;
    }
    return h;
}

// Cyclic one-site shift |s_0 s_1 ... s_{n-1}> -> |s_{n-1} s_0 ... s_{n-2}>.
inline Matrix cyclic_shift_matrix(int n_qubits) {
    int dim = 1 << n_qubits;
    Matrix s = Matrix::Zero(dim, dim);
    for (int b = 0; b < dim; ++b) {
        int low = b & 1;
        int shifted = (b >> 1) | (low << (n_qubits - 1));
        s(shifted, b) = 1.0;
    }
    return s;
}

// Projector onto computational value `bit` at one site, identity elsewhere.
inline Observable site_projector(int n_qubits, int site, int bit) {
    if (site < 0 || site >= n_qubits) throw std::invalid_argument("site_projector: site out of range");
    int dim = 1 << n_qubits;
    Matrix p = Matrix::Zero(dim, dim);
    for (int b = 0; b < dim; ++b)
        if (detail::bit_at(n_qubits, b, site) == bit) p(b, b) = 1.0;
    return make_observable(std::move(p), "site_projector", true);
}

// Traceless single-site Z observable.
inline Observable site_z(int n_qubits, int site) {
    int dim = 1 << n_qubits;
    Matrix z = Matrix::Zero(dim, dim);
    for (int b = 0; b < dim; ++b) z(b, b) = 1.0 - 2.0 * detail::bit_at(n_qubits, b, site);
    return make_observable(std::move(z), "site_z");
}

struct ChargedModel {
    Matrix h;
    Matrix q;                           // integer block charges in the common frame
    std::vector<Matrix> block_projectors;
};

// Block-diagonal GUE Hamiltonian with an exactly commuting block charge
// Q = sum_b (b+1) P_b, both conjugated into a common seeded random frame.
inline ChargedModel charged_model(int n_blocks, const std::vector<int>& block_dims,
                                  std::uint64_t seed) {
    if (n_blocks < 1 || static_cast<int>(block_dims.size()) != n_blocks)
        throw std::invalid_argument("charged_model: block count mismatch");
    int dim = 0;
    for (int d : block_dims) {
        if (d < 2) throw std::invalid_argument("charged_model: block dims must be >= 2");
        dim += d;
    }
    Matrix h0 = Matrix::Zero(dim, dim);
    Matrix q0 = Matrix::Zero(dim, dim);
    int pos = 0;
    for (int b = 0; b < n_blocks; ++b) {
        int d = block_dims[b];
        h0.block(pos, pos, d, d) = random_hamiltonian(Ensemble::gue, d, derive_seed(seed, 1000 + b));
        for (int j = 0; j < d; ++j) q0(pos + j, pos + j) = static_cast<double>(b + 1);
        pos += d;
    }
    Matrix v = haar_unitary(dim, derive_seed(seed, 7));
    ChargedModel model;
    Matrix h = v * h0 * v.adjoint();
    Matrix q = v * q0 * v.adjoint();
    model.h = (h + h.adjoint()) / 2.0;
    model.q = (q + q.adjoint()) / 2.0;
    pos = 0;
    for (int b = 0; b < n_blocks; ++b) {
        int d = block_dims[b];
        Matrix p = v.middleCols(pos, d) * v.middleCols(pos, d).adjoint();
        model.block_projectors.push_back((p + p.adjoint()) / 2.0);
        pos += d;
    }
    return model;
}

// ---------------------------------------------------------------------------
// dual-unitary brickwork circuits

// Space-time reshuffle Ut[(c a), (d b)] = U[(c d), (a b)]; U is dual-unitary
// iff the reshuffle is unitary.
inline Matrix dual_reshuffle(const Matrix& u) {
    Matrix ut(4, 4);
    for (int c = 0; c < 2; ++c)
        for (int a = 0; a < 2; ++a)
            for (int d = 0; d < 2; ++d)
                for (int b = 0; b < 2; ++b) ut(2 * c + a, 2 * d + b) = u(2 * c + d, 2 * a + b);
    return ut;
}

inline bool is_dual_unitary(const Matrix& u, double tol = 1e-9) {
    if (u.rows() != 4 || u.cols() != 4) throw std::invalid_argument("is_dual_unitary: need a 4x4 gate");
    if (unitarity_residual(u) > 1e-10) throw std::invalid_argument("is_dual_unitary: input not unitary");
    return unitarity_residual(dual_reshuffle(u)) <= tol;
}

struct TwoQubitGate {
    Matrix matrix;  // 4x4 unitary
    bool dual_flag = false;
};

inline Matrix rz(double a) {
    Matrix m(2, 2);
    m << std::exp(cxd(0.0, -0.5 * a)), 0.0, 0.0, std::exp(cxd(0.0, 0.5 * a));
    return m;
}

inline Matrix ry(double a) {
    Matrix m(2, 2);
    m << std::cos(0.5 * a), -std::sin(0.5 * a), std::sin(0.5 * a), std::cos(0.5 * a);
    return m;
}

inline Matrix kron2(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

// Core gate exp[-i (pi/4 XX + pi/4 YY + jz ZZ)] in closed form; jz = pi/4
// gives SWAP up to a global phase.
inline Matrix dual_core_gate(double jz) {
    Matrix c = Matrix::Zero(4, 4);
    cxd em = std::exp(cxd(0.0, -jz)), ep = std::exp(cxd(0.0, jz));
    c(0, 0) = em;
    c(3, 3) = em;
    c(1, 2) = cxd(0.0, -1.0) * ep;
    c(2, 1) = cxd(0.0, -1.0) * ep;
    return c;
}

// (u1 x u2) * core(jz) * (v1 x v2) with locals Rz(p0) Ry(p1) etc. Local
// unitaries preserve dual-unitarity; the reshuffle test is still run so
// correctness never rests on the parametrization.
inline TwoQubitGate dual_unitary_gate(double jz, const std::array<double, 8>& local_phases) {
    Matrix u1 = rz(local_phases[0]) * ry(local_phases[1]);
    Matrix u2 = rz(local_phases[2]) * ry(local_phases[3]);
    Matrix v1 = rz(local_phases[4]) * ry(local_phases[5]);
    Matrix v2 = rz(local_phases[6]) * ry(local_phases[7]);
    Matrix g = kron2(u1, u2) * dual_core_gate(jz) * kron2(v1, v2);
    if (!is_dual_unitary(g)) throw std::runtime_error("dual_unitary_gate: reshuffle check failed");
    return TwoQubitGate{std::move(g), true};
}

inline TwoQubitGate dual_unitary_gate(double jz, std::uint64_t seed) {
    Rng rng(seed);
    std::array<double, 8> phases;
    for (auto& p : phases) p = rng.uniform(0.0, 2.0 * pi);
    return dual_unitary_gate(jz, phases);
}

inline TwoQubitGate random_dual_unitary_gate(std::uint64_t seed) {
    Rng rng(seed);
    double jz = rng.uniform(0.0, 0.5 * pi);
    std::array<double, 8> phases;
    for (auto& p : phases) p = rng.uniform(0.0, 2.0 * pi);
    return dual_unitary_gate(jz, phases);
}

inline TwoQubitGate swap_gate() {
    Matrix s = Matrix::Zero(4, 4);
    s(0, 0) = 1.0;
    s(1, 2) = 1.0;
    s(2, 1) = 1.0;
    s(3, 3) = 1.0;
    return TwoQubitGate{std::move(s), true};
}

inline TwoQubitGate cnot_gate() {
    Matrix c = Matrix::Zero(4, 4);
    c(0, 0) = 1.0;
    c(1, 1) = 1.0;
    c(2, 3) = 1.0;
    c(3, 2) = 1.0;
    return TwoQubitGate{std::move(c), false};
}

namespace detail {

// M <- (G acting on sites a, b) * M, applied row-wise in place.
inline void apply_gate_left(Matrix& m, const Matrix& gate, int n_qubits, int site_a, int site_b) {
    int dim = static_cast<int>(m.rows());
    int ma = site_mask(n_qubits, site_a), mb = site_mask(n_qubits, site_b);
    for (int base = 0; base < dim; ++base) {
        if (base & ma || base & mb) continue;
        int r[4] = {base, base | mb, base | ma, base | ma | mb};
        Eigen::Matrix<cxd, 4, Eigen::Dynamic> rows(4, m.cols());
        for (int i = 0; i < 4; ++i) rows.row(i) = m.row(r[i]);
        Eigen::Matrix<cxd, 4, Eigen::Dynamic> mixed = gate * rows;
        for (int i = 0; i < 4; ++i) m.row(r[i]) = mixed.row(i);
    }
}

}  // namespace detail

// Periodic brickwork Floquet circuit: even layer on bonds (0,1),(2,3),...,
// odd layer on bonds (1,2),(3,4),...,(n-1,0); one step is U_odd * U_even.
// Gates may all differ (no spatial translation invariance required).
struct BrickworkCircuit {
    int n_qubits = 0;
    std::vector<TwoQubitGate> even_gates;  // n/2 gates
    std::vector<TwoQubitGate> odd_gates;   // n/2 gates

    int dim() const { return 1 << n_qubits; }

    bool all_dual() const {
        for (const auto& g : even_gates)
            if (!g.dual_flag) return false;
        for (const auto& g : odd_gates)
            if (!g.dual_flag) return false;
        return true;
    }

    void apply_even_layer(Matrix& m, bool inverse = false) const {
        for (int b = 0; b < n_qubits / 2; ++b)
            detail::apply_gate_left(m, inverse ? Matrix(even_gates[b].matrix.adjoint()) : even_gates[b].matrix,
                                    n_qubits, 2 * b, 2 * b + 1);
    }
    void apply_odd_layer(Matrix& m, bool inverse = false) const {
        for (int b = 0; b < n_qubits / 2; ++b)
            detail::apply_gate_left(m, inverse ? Matrix(odd_gates[b].matrix.adjoint()) : odd_gates[b].matrix,
                                    n_qubits, 2 * b + 1, (2 * b + 2) % n_qubits);
    }

    // M <- U_F * M without forming U_F
    void apply_left(Matrix& m) const {
        apply_even_layer(m);
        apply_odd_layer(m);
    }

    // M <- U_F^dag * M
    void apply_inverse_left(Matrix& m) const {
        apply_odd_layer(m, true);
        apply_even_layer(m, true);
    }

    Matrix dense() const {
        Matrix u = Matrix::Identity(dim(), dim());
        apply_left(u);
        return u;
    }
};

inline BrickworkCircuit brickwork_floquet(int n_qubits, std::vector<TwoQubitGate> even_gates,
                                          std::vector<TwoQubitGate> odd_gates) {
    if (n_qubits % 2 != 0 || n_qubits < 4 || n_qubits > 12)
        throw std::invalid_argument("brickwork_floquet: n_qubits must be even and in [4, 12]");
    if (static_cast<int>(even_gates.size()) != n_qubits / 2 ||
        static_cast<int>(odd_gates.size()) != n_qubits / 2)
        throw std::invalid_argument("brickwork_floquet: need n/2 gates per layer");
    return BrickworkCircuit{n_qubits, std::move(even_gates), std::move(odd_gates)};
}

inline BrickworkCircuit random_dual_unitary_circuit(int n_qubits, std::uint64_t seed) {
    std::vector<TwoQubitGate> even, odd;
    for (int b = 0; b < n_qubits / 2; ++b) {
        even.push_back(random_dual_unitary_gate(derive_seed(seed, 2 * b)));
        odd.push_back(random_dual_unitary_gate(derive_seed(seed, 2 * b + 1)));
    }
    return brickwork_floquet(n_qubits, std::move(even), std::move(odd));
}

inline BrickworkCircuit swap_circuit(int n_qubits) {
    std::vector<TwoQubitGate> even(n_qubits / 2, swap_gate()), odd(n_qubits / 2, swap_gate());
    return brickwork_floquet(n_qubits, std::move(even), std::move(odd));
}

// ---------------------------------------------------------------------------
// declarative model specs (config/CLI surface)

enum class ModelFamily { gue, goe, degenerate, spin_chain, dual_unitary_circuit, shift_circuit, charged };

struct ModelSpec {
    ModelFamily family = ModelFamily::gue;
    std::map<std::string, double> params;
    std::map<std::string, std::vector<double>> list_params;
    std::uint64_t seed = 0;

    double param(const std::string& key, std::optional<double> fallback = {}) const {
        auto it = params.find(key);
        if (it != params.end()) return it->second;
        if (fallback) return *fallback;
        throw std::invalid_argument("model spec: missing parameter '" + key + "'");
    }
};

struct BuiltModel {
    SystemKind kind = SystemKind::hamiltonian;
    Matrix op;  // Hamiltonian or Floquet unitary
    std::optional<Matrix> charge;
    std::optional<BrickworkCircuit> circuit;
};

inline BuiltModel build_model(const ModelSpec& spec) {
    BuiltModel out;
    switch (spec.family) {
        case ModelFamily::gue:
        case ModelFamily::goe: {
            int d = static_cast<int>(spec.param("dim"));
            out.op = random_hamiltonian(spec.family == ModelFamily::gue ? Ensemble::gue : Ensemble::goe,
                                        d, spec.seed);
            break;
        }
        case ModelFamily::degenerate: {
            auto mit = spec.list_params.find("multiplicities");
            auto git = spec.list_params.find("gaps");
            if (mit == spec.list_params.end() || git == spec.list_params.end())
                throw std::invalid_argument("model spec: degenerate needs multiplicities and gaps");
            std::vector<int> mult;
            for (double m : mit->second) mult.push_back(static_cast<int>(m));
            out.op = degenerate_hamiltonian(mult, git->second, spec.seed);
            break;
        }
        case ModelFamily::spin_chain:
            out.op = spin_chain(static_cast<int>(spec.param("n_qubits")), spec.param("jz", 1.0),
                                spec.param("hx", 0.0), spec.param("hz", 0.0),
                                spec.param("periodic", 1.0) != 0.0);
            break;
        case ModelFamily::dual_unitary_circuit: {
            int n = static_cast<int>(spec.param("n_qubits"));
            out.circuit = random_dual_unitary_circuit(n, spec.seed);
            out.op = out.circuit->dense();
            out.kind = SystemKind::floquet;
            break;
        }
        case ModelFamily::shift_circuit: {
            int n = static_cast<int>(spec.param("n_qubits"));
            out.circuit = swap_circuit(n);
            out.op = out.circuit->dense();
            out.kind = SystemKind::floquet;
            break;
        }
        case ModelFamily::charged: {
            auto bit = spec.list_params.find("block_dims");
            if (bit == spec.list_params.end())
                throw std::invalid_argument("model spec: charged needs block_dims");
            std::vector<int> dims;
            for (double d : bit->second) dims.push_back(static_cast<int>(d));
            ChargedModel cm = charged_model(static_cast<int>(dims.size()), dims, spec.seed);
            out.op = cm.h;
            out.charge = cm.q;
            break;
        }
    }
    return out;
}

}  // namespace thermalab
