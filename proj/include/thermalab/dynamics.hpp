#pragma once

// Weighted time averages, dephasing (infinite-time) averages, projector
// autocorrelators and the echo family L_AA, L_A, L_H with their shell,
// charged and cloned assemblies.
//
// Every average has two evaluations: a time-domain path that sums weight
// atoms over evolved states/echo traces, and an eigenbasis path that sums
// matrix elements against the exact Fourier transform of the weights.
// Agreement of the two is a standing check; callers read .value() (the
// time-domain number) and .disagreement().

#include "thermalab/metrics.hpp"

#include <optional>

namespace thermalab {

struct DualReal {
    double time_domain = 0.0;
    double eigenbasis = 0.0;

    double value() const { return time_domain; }
    double disagreement() const {
        double scale = std::max({1.0, std::abs(time_domain), std::abs(eigenbasis)});
        return std::abs(time_domain - eigenbasis) / scale;
    }
};

enum class EchoKind { L_AA, L_A, L_H };

namespace detail {

// Cached eigenbasis data for projector echoes: rho_A = Pi/Tr[Pi].
struct EchoCache {
    const SpectralSystem* sys = nullptr;
    double tr_pi = 0.0;
    double global_avg = 0.0;  // Tr[Pi]/D
    Matrix sq;                // |Pi in eigenbasis|^2, elementwise
    Vector diag;              // diagonal of Pi in eigenbasis

    EchoCache(const SpectralSystem& s, const Observable& pi) : sys(&s) {
        if (!pi.is_projector) throw std::invalid_argument("echo: observable must be a projector");
        if (pi.dim() != s.dim()) throw std::invalid_argument("echo: dimension mismatch");
        Matrix pe = s.to_eigen(pi.matrix);
        tr_pi = pe.trace().real();
        if (tr_pi <= 0.0) throw std::invalid_argument("echo: projector has zero trace");
        global_avg = tr_pi / s.dim();
        sq = pe.cwiseAbs2().cast<cxd>();
        diag = pe.diagonal();
    }

    cxd l_aa(double t1, double t2) const {
        Vector u1 = sys->phases(t1), u2 = sys->phases(t2);
        return (u1.transpose() * (sq * u2.conjugate()))(0) / tr_pi;
    }
    cxd l_a(double t) const {
        Vector u = sys->phases(t);
        return (u.transpose() * diag)(0) / tr_pi;
    }
    cxd l_h(double t) const {
        return sys->phases(t).sum() / static_cast<double>(sys->dim());
    }
    // L_AA - 2 A_th L_A + (A_th^2/<Pi>) L_H at split times (t + tau/2, t - tau/2)
    cxd bracket(double t, double tau, double a_th) const {
        return l_aa(t + 0.5 * tau, t - 0.5 * tau) - 2.0 * a_th * l_a(tau) +
               (a_th * a_th / global_avg) * l_h(tau);
    }
};

}  // namespace detail

inline cxd echo(const SpectralSystem& sys, EchoKind kind, const Observable& a, double t1,
                double t2 = 0.0) {
    if (kind == EchoKind::L_H) {
        return sys.phases(t1).sum() / static_cast<double>(sys.dim());
    }
    detail::EchoCache cache(sys, a);
    return (kind == EchoKind::L_AA) ? cache.l_aa(t1, t2) : cache.l_a(t1);
}

inline double spectral_form_factor(const SpectralSystem& sys, double t) {
    return std::norm(echo(sys, EchoKind::L_H, Observable{}, t));
}

// sum_j w_j Tr[rho(t_j) A], also as sum_nm w~(E_n - E_m) rho_nm A_mn.
inline DualReal weighted_average(const SpectralSystem& sys, const DensityOperator& rho,
                                 const Observable& a, const WeightFunction& w) {
    if (rho.dim() != sys.dim() || a.dim() != sys.dim())
        throw std::invalid_argument("weighted_average: dimension mismatch");
    Matrix re = sys.to_eigen(rho.matrix);
    Matrix ae = sys.to_eigen(a.matrix);
    Matrix c = re.cwiseProduct(ae.transpose());  // c(n,m) = rho_nm * A_mn

    DualReal out;
    for (const auto& atom : w.atoms) {
        Vector u = sys.phases(atom.t);
        out.time_domain += atom.weight * (u.transpose() * (c * u.conjugate()))(0).real();
    }
    // wtm(n,m) = w~(E_m - E_n); transpose gives w~(E_n - E_m)
    Matrix wt = weight_transform_matrix(sys, w);
    out.eigenbasis = wt.transpose().cwiseProduct(c).sum().real();
    return out;
}

// Degeneracy-respecting dephasing average:
// sum over eigenspaces H(E) of sum_{n,m in H(E)} rho_nm A_mn.
inline double infinite_time_average(const SpectralSystem& sys, const DensityOperator& rho,
                                    const Observable& a, double rel_tol = 1e-10) {
    Matrix re = sys.to_eigen(rho.matrix);
    Matrix ae = sys.to_eigen(a.matrix);
    cxd acc = 0.0;
    for (const auto& space : eigenspace_partition(sys, rel_tol))
        for (int n : space.indices)
            for (int m : space.indices) acc += re(n, m) * ae(m, n);
    return acc.real();
}

// Connected autocorrelator of a projector in its own state rho_A:
//   time path: sum_j w_j Tr[rho_A(t_j) Pi] - Tr[Pi]/D
//   eigen path: (1/Tr Pi) sum_nm w~(E_n-E_m) |<E_n|(Pi - <Pi>)|E_m>|^2
inline DualReal weighted_autocorrelator(const SpectralSystem& sys, const Observable& a,
                                        const WeightFunction& w_plus) {
    detail::EchoCache cache(sys, a);
    DualReal out;
    for (const auto& atom : w_plus.atoms)
        out.time_domain += atom.weight * cache.l_aa(atom.t, atom.t).real();
    out.time_domain -= cache.global_avg;

    Matrix pe = sys.to_eigen(a.matrix);
    Matrix dev = pe - cache.global_avg * Matrix::Identity(sys.dim(), sys.dim());
    Matrix wt = weight_transform_matrix(sys, w_plus);
    out.eigenbasis = wt.transpose().cwiseProduct(dev.cwiseAbs2().cast<cxd>()).sum().real() / cache.tr_pi;
    return out;
}

// Heisenberg-picture autocorrelator sum_j w_j Tr[A(t_j) A(0)] for a general
// Hermitian observable (not normalized, not connected).
inline DualReal heisenberg_autocorrelator(const SpectralSystem& sys, const Observable& a,
                                          const WeightFunction& w) {
    Matrix ae = sys.to_eigen(a.matrix);
    Matrix sq = ae.cwiseAbs2().cast<cxd>();
    DualReal out;
    for (const auto& atom : w.atoms) {
        Vector u = sys.phases(atom.t);
        out.time_domain += atom.weight * (u.conjugate().transpose() * (sq * u))(0).real();
    }
    Matrix wt = weight_transform_matrix(sys, w);
    out.eigenbasis = wt.cwiseProduct(sq).sum().real();
    return out;
}

struct ChargeBlock {
    Observable q;            // conserved charge, same frame as the Hamiltonian
    WeightFunction s_weight; // charge-window weight (atoms on the s1 - s2 axis)
    double q_center = 0.0;
};

struct ShellEchoConfig {
    WeightFunction w_plus;  // band weight, atoms on the (t1+t2)/2 axis
    WeightFunction v_plus;  // shell weight, atoms on the t1-t2 axis
    double e_center = 0.0;
    double thermal_value = 0.0;  // A_th in the shell of interest
    std::optional<ChargeBlock> charge;
};

// Tr[gamma_A^shell (Pi - A_th 1)]:
//   time path: sum over (w, v) atom pairs of e^{+i E_c dt} times the
//     three-echo bracket at (t + dt/2, t - dt/2);
//   eigen path: (1/Tr Pi) sum_nm w~(E_n-E_m) v~((E_n+E_m)/2 - E_c)
//     |<E_n|(Pi - A_th 1)|E_m>|^2.
inline DualReal shell_echo_expectation(const SpectralSystem& sys, const Observable& a,
                                       const ShellEchoConfig& cfg) {
    detail::EchoCache cache(sys, a);
    const double a_th = cfg.thermal_value;

    cxd acc = 0.0;
    for (const auto& wa : cfg.w_plus.atoms)
        for (const auto& va : cfg.v_plus.atoms)
            acc += wa.weight * va.weight * std::exp(cxd(0.0, cfg.e_center * va.t)) *
                   cache.bracket(wa.t, va.t, a_th);

    DualReal out;
    out.time_domain = acc.real();

    Matrix pe = sys.to_eigen(a.matrix);
    Matrix dev = pe - a_th * Matrix::Identity(sys.dim(), sys.dim());
    Matrix wt = weight_transform_matrix(sys, cfg.w_plus);
    double eig = 0.0;
    for (int n = 0; n < sys.dim(); ++n)
        for (int m = 0; m < sys.dim(); ++m) {
            double mean = 0.5 * (sys.energies(n) + sys.energies(m));
            eig += (wt(m, n) * fourier(cfg.v_plus, mean - cfg.e_center)).real() * std::norm(dev(n, m));
        }
    out.eigenbasis = eig / cache.tr_pi;
    return out;
}

// ---------------------------------------------------------------------------
// conserved charges: joint (E, Q) eigenbasis

struct JointSystem {
    SpectralSystem sys;
    RealVector charges;  // q_n per eigenvector
};

// Simultaneous diagonalization of H and a commuting Q: diagonalize H, then
// rotate within each near-degenerate eigenspace to diagonalize Q's block.
inline JointSystem joint_diagonalize(const Matrix& h, const Matrix& q, double rel_tol = 1e-10,
                                     double commutator_tol = 1e-8) {
    if (max_abs(h * q - q * h) > commutator_tol)
        throw std::invalid_argument("joint_diagonalize: [H, Q] exceeds tolerance");
    SpectralSystem sys = diagonalize_hamiltonian(h);
    Matrix qe = sys.to_eigen(q);
    for (const auto& space : eigenspace_partition(sys, rel_tol)) {
        int k = space.d();
        if (k == 1) continue;
        int lo = space.indices.front();
        Matrix block = qe.block(lo, lo, k, k);
        Eigen::SelfAdjointEigenSolver<Matrix> es((block + block.adjoint()) / 2.0);
        sys.eigenbasis.middleCols(lo, k) = sys.eigenbasis.middleCols(lo, k) * es.eigenvectors();
    }
    qe = sys.to_eigen(q);
    JointSystem joint{std::move(sys), qe.diagonal().real()};
    Matrix offdiag = qe - Matrix(qe.diagonal().asDiagonal());
    if (max_abs(offdiag) > commutator_tol)
        throw std::runtime_error("joint_diagonalize: residual off-diagonal charge elements");
    return joint;
}

namespace detail {

struct ChargedEchoCache {
    const JointSystem* joint = nullptr;
    double tr_pi = 0.0;
    double global_avg = 0.0;
    Matrix sq;
    Vector diag;

    ChargedEchoCache(const JointSystem& j, const Observable& pi) : joint(&j) {
        if (!pi.is_projector) throw std::invalid_argument("charged echo: observable must be a projector");
        Matrix pe = j.sys.to_eigen(pi.matrix);
        tr_pi = pe.trace().real();
        global_avg = tr_pi / j.sys.dim();
        sq = pe.cwiseAbs2().cast<cxd>();
        diag = pe.diagonal();
    }

    Vector phases(double t, double s) const {
        int d = joint->sys.dim();
        Vector u(d);
        for (int n = 0; n < d; ++n)
            u(n) = std::exp(cxd(0.0, -(joint->sys.energies(n) * t + joint->charges(n) * s)));
        return u;
    }
    cxd l_aa(double t1, double t2, double s1, double s2) const {
        Vector u1 = phases(t1, s1), u2 = phases(t2, s2);
        return (u1.transpose() * (sq * u2.conjugate()))(0) / tr_pi;
    }
    cxd l_a(double t, double s) const {
        return (phases(t, s).transpose() * diag)(0) / tr_pi;
    }
    cxd l_h(double t, double s) const {
        return phases(t, s).sum() / static_cast<double>(joint->sys.dim());
    }
    cxd bracket(double t, double tau, double sig, double a_th) const {
        return l_aa(t + 0.5 * tau, t - 0.5 * tau, 0.5 * sig, -0.5 * sig) -
               2.0 * a_th * l_a(tau, sig) + (a_th * a_th / global_avg) * l_h(tau, sig);
    }
};

}  // namespace detail

// Shell echo with an additional charge window: the s-weight atoms live on
// the s1 - s2 axis and select mean charges (q_n + q_m)/2 near q_center.
inline DualReal charged_shell_echo(const JointSystem& joint, const Observable& a,
                                   const ShellEchoConfig& cfg) {
    if (!cfg.charge) throw std::invalid_argument("charged_shell_echo: config has no charge block");
    const auto& cb = *cfg.charge;
    detail::ChargedEchoCache cache(joint, a);
    const double a_th = cfg.thermal_value;

    cxd acc = 0.0;
    for (const auto& wa : cfg.w_plus.atoms)
        for (const auto& va : cfg.v_plus.atoms)
            for (const auto& sa : cb.s_weight.atoms)
                acc += wa.weight * va.weight * sa.weight *
                       std::exp(cxd(0.0, cfg.e_center * va.t + cb.q_center * sa.t)) *
                       cache.bracket(wa.t, va.t, sa.t, a_th);

    DualReal out;
    out.time_domain = acc.real();

    const SpectralSystem& sys = joint.sys;
    Matrix pe = sys.to_eigen(a.matrix);
    Matrix dev = pe - a_th * Matrix::Identity(sys.dim(), sys.dim());
    Matrix wt = weight_transform_matrix(sys, cfg.w_plus);
    double eig = 0.0;
    for (int n = 0; n < sys.dim(); ++n)
        for (int m = 0; m < sys.dim(); ++m) {
            double mean_e = 0.5 * (sys.energies(n) + sys.energies(m));
            double mean_q = 0.5 * (joint.charges(n) + joint.charges(m));
            cxd f = wt(m, n) * fourier(cfg.v_plus, mean_e - cfg.e_center) *
                    fourier(cb.s_weight, mean_q - cb.q_center);
            eig += f.real() * std::norm(dev(n, m));
        }
    out.eigenbasis = eig / cache.tr_pi;
    return out;
}

// ---------------------------------------------------------------------------
// cloned (doubled-space) echo, never materializing D^2 x D^2 operators

// Tr_{HxH}[Gamma_A^shell (Pi - A_th) x (Pi - A_th)]:
//   time path: triple atom sum of w(t) vL(tauL) vR(tauR) e^{+iE_c(tauL+tauR)}
//     bracket(t, tauL) * bracket(t, tauR);
//   eigen path: per w-atom product of the two single-copy pair sums,
//     equal to the doubled-eigenbasis quadruple sum with
//     w~(E_n + E_l - E_m - E_k).
inline DualReal cloned_shell_echo(const SpectralSystem& sys, const Observable& a,
                                  const ShellEchoConfig& cfg_l, const ShellEchoConfig& cfg_r,
                                  const WeightFunction& w_plus, bool allow_mismatch = false) {
    if (!allow_mismatch &&
        (std::abs(cfg_l.thermal_value - cfg_r.thermal_value) > 1e-12 ||
         std::abs(cfg_l.e_center - cfg_r.e_center) > 1e-12))
        throw std::invalid_argument("cloned_shell_echo: cfg_L and cfg_R must share A_th and E_c");

    detail::EchoCache cache(sys, a);
    const double a_th = cfg_l.thermal_value;
    const double e_c = cfg_l.e_center;

    DualReal out;
    cxd acc = 0.0;
    for (const auto& wa : w_plus.atoms) {
        cxd sl = 0.0, sr = 0.0;
        for (const auto& va : cfg_l.v_plus.atoms)
            sl += va.weight * std::exp(cxd(0.0, e_c * va.t)) * cache.bracket(wa.t, va.t, a_th);
        for (const auto& va : cfg_r.v_plus.atoms)
            sr += va.weight * std::exp(cxd(0.0, cfg_r.e_center * va.t)) *
                  cache.bracket(wa.t, va.t, cfg_r.thermal_value);
        acc += wa.weight * sl * sr;
    }
    out.time_domain = acc.real();

    const int d = sys.dim();
    Matrix pe = sys.to_eigen(a.matrix);
    Matrix dev = pe - a_th * Matrix::Identity(d, d);
    RealMatrix sq = dev.cwiseAbs2();
    RealMatrix vl(d, d), vr(d, d);
    for (int n = 0; n < d; ++n)
        for (int m = 0; m < d; ++m) {
            double mean = 0.5 * (sys.energies(n) + sys.energies(m));
            vl(n, m) = fourier(cfg_l.v_plus, mean - e_c).real();
            vr(n, m) = fourier(cfg_r.v_plus, mean - cfg_r.e_center).real();
        }
    cxd eig = 0.0;
    for (const auto& wa : w_plus.atoms) {
        Vector u = sys.phases(wa.t);
        cxd sl = 0.0, sr = 0.0;
        for (int n = 0; n < d; ++n)
            for (int m = 0; m < d; ++m) {
                cxd ph = u(n) * std::conj(u(m));  // e^{-i(E_n - E_m) t}
                sl += vl(n, m) * sq(n, m) * ph;
                sr += vr(n, m) * sq(n, m) * ph;
            }
        eig += wa.weight * sl * sr;
    }
    out.eigenbasis = eig.real() / (cache.tr_pi * cache.tr_pi);
    return out;
}

// Quadruple-sum oracle for the cloned echo (test use, small D).
inline double cloned_shell_echo_bruteforce(const SpectralSystem& sys, const Observable& a,
                                           const ShellEchoConfig& cfg_l, const ShellEchoConfig& cfg_r,
                                           const WeightFunction& w_plus) {
    const int d = sys.dim();
    Matrix pe = sys.to_eigen(a.matrix);
    Matrix dev = pe - cfg_l.thermal_value * Matrix::Identity(d, d);
    double tr_pi = pe.trace().real();
    cxd acc = 0.0;
    for (int n = 0; n < d; ++n)
        for (int m = 0; m < d; ++m)
            for (int k = 0; k < d; ++k)
                for (int l = 0; l < d; ++l) {
                    double gap = sys.energies(n) + sys.energies(l) - sys.energies(m) - sys.energies(k);
                    cxd f = fourier(w_plus, gap) *
                            fourier(cfg_l.v_plus, 0.5 * (sys.energies(n) + sys.energies(m)) - cfg_l.e_center) *
                            fourier(cfg_r.v_plus, 0.5 * (sys.energies(k) + sys.energies(l)) - cfg_r.e_center);
                    acc += f * std::norm(dev(n, m)) * std::norm(dev(l, k));
                }
    return acc.real() / (tr_pi * tr_pi);
}

}  // namespace thermalab
