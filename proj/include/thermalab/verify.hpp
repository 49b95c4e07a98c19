#pragma once

// One verifier per inequality: each evaluates lhs and rhs on a concrete
// instance and reports the margin. Where an op has two evaluation paths,
// the verifier checks their agreement before judging the inequality and
// records the disagreement in the report.

#include "thermalab/dynamics.hpp"
#include "thermalab/models.hpp"

#include <map>

namespace thermalab {

struct PathDisagreement : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct VerificationReport {
    std::string claim_id;
    double lhs = 0.0;
    double rhs = 0.0;
    double margin = 0.0;  // rhs - lhs
    bool holds = false;   // lhs <= rhs + 1e-10 * max(1, |rhs|)
    std::map<std::string, double> instance;  // provenance: seeds, widths, tolerances, path checks
    std::map<std::string, std::string> notes;
};

inline VerificationReport make_report(std::string claim_id, double lhs, double rhs) {
    VerificationReport r;
    r.claim_id = std::move(claim_id);
    r.lhs = lhs;
    r.rhs = rhs;
    r.margin = rhs - lhs;
    r.holds = lhs <= rhs + 1e-10 * std::max(1.0, std::abs(rhs));
    return r;
}

namespace detail {

inline void check_paths(const DualReal& v, double tol, const std::string& what,
                        VerificationReport* report = nullptr) {
    if (report) report->instance["path_disagreement_" + what] = v.disagreement();
    if (v.disagreement() > tol)
        throw PathDisagreement(what + ": time-domain and eigenbasis paths disagree by " +
                               std::to_string(v.disagreement()));
}

inline double scan_step(double band) { return band / 200.0; }

// max |w~| over [band, e_max]; the w0 certificate for weights whose W side
// is not needed (generic long-time averages).
inline double tail_max(const WeightFunction& w, double band, double e_max) {
    double step = scan_step(band);
    if (step > e_max / 1000.0) step = e_max / 1000.0;
    double top = 0.0;
    for (double e = band; e <= e_max + 0.5 * step; e += step) {
        top = std::max(top, std::abs(fourier(w, e)));
        top = std::max(top, std::abs(fourier(w, -e)));
    }
    return top;
}

inline double scan_limit(const SpectralSystem& sys, double band) {
    return std::max(1.5 * sys.spectral_spread(), 2.0 * band);
}

}  // namespace detail

// Thm: energy-band thermalization implies thermalization o.a.:
//   |sum_j w_j Tr[rho(t_j) Pi] - <Pi>_shell| < (eps + w0 sqrt(<Pi>_shell)) sqrt(d Tr[rho^2])
inline VerificationReport verify_thermalization_bound(const SpectralSystem& sys, const Observable& a,
                                                      const DensityOperator& rho,
                                                      const EnergyShell& shell, const BandSpec& band,
                                                      const WeightFunction& w,
                                                      double path_tol = 1e-8) {
    if (!a.is_projector) throw std::invalid_argument("thm-5.2: observable must be a projector");
    if (shell_support_residual(sys, rho, shell) > 1e-10)
        throw std::invalid_argument("thm-5.2: rho not supported in the shell");

    double th = microcanonical_value(a, shell, sys);
    double w0 = detail::tail_max(w, band.delta_e, detail::scan_limit(sys, band.delta_e));
    double eps = band_metric(sys, a, shell, band, th).epsilon;

    auto avg = weighted_average(sys, rho, a, w);
    VerificationReport r = make_report("thm-5.2", std::abs(avg.value() - th),
                                       (eps + w0 * std::sqrt(std::max(th, 0.0))) *
                                           std::sqrt(shell.d() * rho.purity()));
    detail::check_paths(avg, path_tol, "weighted_average", &r);
    r.instance["epsilon"] = eps;
    r.instance["w0"] = w0;
    r.instance["thermal_value"] = th;
    r.instance["delta_e"] = band.delta_e;
    r.instance["d"] = shell.d();
    return r;
}

// Thm: almost all physical basis states thermalize o.a.:
//   f_lambda[B] < (sqrt(2)/lambda) (eps + w0 sqrt(<Pi>_shell))
inline VerificationReport verify_basis_fraction(const SpectralSystem& sys, const Observable& a,
                                                const BasisFamily& basis, const EnergyShell& shell,
                                                const BandSpec& band, const WeightFunction& w,
                                                double lambda) {
    if (!a.is_projector) throw std::invalid_argument("thm-5.3: observable must be a projector");
    if (basis.d() != shell.d())
        throw std::invalid_argument("thm-5.3: basis must be complete for the shell");

    double th = microcanonical_value(a, shell, sys);
    double w0 = detail::tail_max(w, band.delta_e, detail::scan_limit(sys, band.delta_e));
    double eps = band_metric(sys, a, shell, band, th).epsilon;
    double f = nonthermal_fraction(sys, a, basis, w, th, lambda);

    VerificationReport r = make_report(
        "thm-5.3", f, std::sqrt(2.0) / lambda * (eps + w0 * std::sqrt(std::max(th, 0.0))));
    r.instance["epsilon"] = eps;
    r.instance["w0"] = w0;
    r.instance["lambda"] = lambda;
    r.instance["d"] = shell.d();
    return r;
}

// Prop: instantaneous thermal equilibrium in small energy shells:
//   f_lambda[B_DeltaE] < (eps/lambda) sqrt(2 d / d_DeltaE)
inline VerificationReport verify_instantaneous_equilibrium(const SpectralSystem& sys,
                                                           const Observable& a,
                                                           const EnergyShell& shell,
                                                           const EnergyShell& narrow_shell,
                                                           const BandSpec& band, double lambda,
                                                           std::uint64_t basis_seed = 0) {
    if (!a.is_projector) throw std::invalid_argument("prop-5.4: observable must be a projector");
    for (int q : narrow_shell.indices)
        for (int rdx : narrow_shell.indices)
            if (!in_band(band, sys.energies(q) - sys.energies(rdx)))
                throw std::invalid_argument("prop-5.4: narrow shell wider than the band");

    double th = microcanonical_value(a, shell, sys);
    double eps = band_metric(sys, a, shell, band, th).epsilon;

    BasisFamily basis = random_shell_basis(sys, narrow_shell, basis_seed);
    double f = nonthermal_fraction(sys, a, basis, delta_weight(), th, lambda);

    VerificationReport r =
        make_report("prop-5.4", f,
                    eps / lambda * std::sqrt(2.0 * shell.d() / static_cast<double>(narrow_shell.d())));
    r.instance["epsilon"] = eps;
    r.instance["lambda"] = lambda;
    r.instance["d"] = shell.d();
    r.instance["d_narrow"] = narrow_shell.d();
    return r;
}

// Prop: autocorrelator thermalization implies global energy-band
// thermalization: eps^2 < Tr[Pi] eps_A / (W D)
inline VerificationReport verify_autocorr_to_band(const SpectralSystem& sys, const Observable& a,
                                                  const WeightFunction& w_plus, double target_band,
                                                  double path_tol = 1e-8) {
    if (!w_plus.completely_positive())
        throw std::invalid_argument("prop-6.1: weight must be completely positive");
    auto cal = calibrate(w_plus, target_band, detail::scan_limit(sys, target_band));

    auto ac = weighted_autocorrelator(sys, a, w_plus);
    double eps_a = std::max(ac.value(), 0.0);
    double tr_pi = a.matrix.trace().real();
    double th = tr_pi / sys.dim();
    double eps2 = band_metric(sys, a, full_shell(sys.dim()),
                              BandSpec(target_band, sys.is_floquet()), th).value;

    VerificationReport r = make_report("prop-6.1", eps2, tr_pi * eps_a / (cal.W * sys.dim()));
    detail::check_paths(ac, path_tol, "autocorrelator", &r);
    r.instance["eps_A"] = eps_a;
    r.instance["W"] = cal.W;
    r.instance["delta_e"] = target_band;
    return r;
}

// Corollaries chaining the autocorrelator through energy-band
// thermalization to basis fractions and longer-time autocorrelators.
// Bounds follow the composition of the autocorrelator-to-band proposition
// with the thermalization theorems; see notes in the reports.
inline std::vector<VerificationReport> verify_bypass_chain(
    const SpectralSystem& sys, const Observable& a, const BasisFamily& basis,
    const WeightFunction& w_plus, const WeightFunction& w, double lambda, double target_band,
    double path_tol = 1e-8) {
    if (!w_plus.completely_positive())
        throw std::invalid_argument("cor-6.2: short weight must be completely positive");
    const int dim = sys.dim();
    auto cal = calibrate(w_plus, target_band, detail::scan_limit(sys, target_band));
    double w0 = detail::tail_max(w, target_band, detail::scan_limit(sys, target_band));

    auto ac_short = weighted_autocorrelator(sys, a, w_plus);
    double eps_a = std::max(ac_short.value(), 0.0);
    double tr_pi = a.matrix.trace().real();
    double th = tr_pi / dim;

    std::vector<VerificationReport> out;

    // fraction of basis states failing to thermalize with the longer weight
    double f = nonthermal_fraction(sys, a, basis, w, th, lambda);
    double eps_chained = std::sqrt(tr_pi * eps_a / (cal.W * dim));
    VerificationReport r62 = make_report(
        "cor-6.2", f,
        std::sqrt(2.0) / lambda * (eps_chained + w0 * std::sqrt(std::max(th, 0.0))));
    detail::check_paths(ac_short, path_tol, "autocorrelator", &r62);
    r62.instance["eps_A"] = eps_a;
    r62.instance["W"] = cal.W;
    r62.instance["w0"] = w0;
    r62.instance["lambda"] = lambda;
    out.push_back(std::move(r62));

    // feed-forward: the longer-window autocorrelator stays thermal
    auto ac_long = weighted_autocorrelator(sys, a, w);
    VerificationReport r63 = make_report("cor-6.3", std::abs(ac_long.value()), w0 + eps_a / cal.W);
    detail::check_paths(ac_long, path_tol, "long_autocorrelator", &r63);
    r63.instance["eps_A"] = eps_a;
    r63.instance["W"] = cal.W;
    r63.instance["w0"] = w0;
    out.push_back(std::move(r63));
    return out;
}

// Reverse ("bulky") bound: the autocorrelator is controlled by the
// nonthermal fraction of any eigenbasis of Pi:
//   |autocorr - <Pi>| <= (D/Tr Pi) f_lambda (1 - lambda) + lambda
inline VerificationReport verify_bulky_reverse(const SpectralSystem& sys, const Observable& a,
                                               const WeightFunction& w, double lambda,
                                               double path_tol = 1e-8) {
    if (!a.is_projector) throw std::invalid_argument("bulky-reverse: observable must be a projector");
    const int dim = sys.dim();
    Eigen::SelfAdjointEigenSolver<Matrix> es(a.matrix);
    BasisFamily basis_a{"eigenbasis_of_A", es.eigenvectors()};

    double tr_pi = a.matrix.trace().real();
    double th = tr_pi / dim;
    double f = nonthermal_fraction(sys, a, basis_a, w, th, lambda);

    auto ac = weighted_autocorrelator(sys, a, w);
    double rhs = dim / tr_pi * f * (1.0 - lambda) + lambda;
    VerificationReport r = make_report("bulky-reverse", std::abs(ac.value()), rhs);
    detail::check_paths(ac, path_tol, "autocorrelator", &r);
    r.instance["f_lambda"] = f;
    r.instance["lambda"] = lambda;
    if (rhs >= 1.0 - 1e-9) r.notes["non_informative"] = "bound at or above the trivial value 1";
    return r;
}

// Shell-echo theorem pair. The shell must be a contiguous run of levels
// whose energies sit inside the v-transform's certified window around E_c.
inline std::vector<VerificationReport> verify_shell_echo_theorems(const SpectralSystem& sys,
                                                                  const Observable& a,
                                                                  const ShellEchoConfig& cfg,
                                                                  const EnergyShell& shell,
                                                                  const BandSpec& band,
                                                                  double path_tol = 1e-8) {
    if (!cfg.w_plus.completely_positive() || !cfg.v_plus.completely_positive())
        throw std::invalid_argument("thm-7.1: echo weights must be completely positive");
    for (size_t i = 1; i < shell.indices.size(); ++i)
        if (shell.indices[i] != shell.indices[i - 1] + 1)
            throw std::invalid_argument("thm-7.1: shell must be a contiguous run of levels");

    const int dim = sys.dim();
    double e_lo = sys.energies(shell.indices.front());
    double e_hi = sys.energies(shell.indices.back());

    auto wcal = calibrate(cfg.w_plus, band.delta_e, detail::scan_limit(sys, band.delta_e));

    // V: certified minimum of the v transform over the shell's energy range
    double vmin = std::numeric_limits<double>::infinity();
    {
        double step = std::max((e_hi - e_lo) / 2000.0, 1e-9);
        for (double e = e_lo; e <= e_hi + 0.5 * step; e += step)
            vmin = std::min(vmin, fourier(cfg.v_plus, std::min(e, e_hi) - cfg.e_center).real());
    }
    if (!(vmin > 0.0)) throw std::invalid_argument("thm-7.1: v transform not positive on the shell");

    auto echo_val = shell_echo_expectation(sys, a, cfg);
    double eps_a = std::max(echo_val.value(), 0.0);
    double tr_pi = a.matrix.trace().real();
    double eps2 = band_metric(sys, a, shell, band, cfg.thermal_value).value;

    std::vector<VerificationReport> out;
    VerificationReport r71 =
        make_report("thm-7.1", eps2, tr_pi * eps_a / (wcal.W * vmin * shell.d()));
    detail::check_paths(echo_val, path_tol, "shell_echo", &r71);
    r71.instance["eps_A"] = eps_a;
    r71.instance["W"] = wcal.W;
    r71.instance["V"] = vmin;
    r71.instance["delta_e"] = band.delta_e;
    r71.instance["d"] = shell.d();
    out.push_back(std::move(r71));

    // converse: energy-band thermalization constrains the echo,
    //   echo < (d/Tr Pi) eps^2 + v0 + v0 w0 + w0
    // with v0 the measured tail of the v transform outside the shrunk shell
    double lo_in = e_lo + band.delta_e, hi_in = e_hi - band.delta_e;
    if (lo_in >= hi_in)
        throw std::invalid_argument("thm-7.2: shell narrower than twice the bandwidth");
    double v0 = 0.0;
    {
        double margin = 0.5 * sys.spectral_spread();
        double step = std::max(sys.spectral_spread() / 4000.0, 1e-9);
        for (double e = sys.energies(0) - margin; e <= sys.energies(dim - 1) + margin; e += step) {
            if (e >= lo_in && e <= hi_in) continue;
            v0 = std::max(v0, std::abs(fourier(cfg.v_plus, e - cfg.e_center)));
        }
    }
    VerificationReport r72 = make_report(
        "thm-7.2", echo_val.value(),
        shell.d() / tr_pi * eps2 + v0 + v0 * wcal.w0 + wcal.w0);
    r72.instance["eps2"] = eps2;
    r72.instance["v0"] = v0;
    r72.instance["w0"] = wcal.w0;
    r72.instance["d"] = shell.d();
    out.push_back(std::move(r72));
    return out;
}

// Cloned corollary pair: decorrelation of almost all basis-state pairs, and
// thermal equilibrium of large ensembles at almost all times.
inline std::vector<VerificationReport> verify_cloned_corollaries(
    const SpectralSystem& sys, const Observable& a, const BasisFamily& basis,
    const EnergyShell& shell, const BandSpec& band, const WeightFunction& w, double big_lambda,
    const std::vector<double>& ensemble_probs, double kappa, double lambda) {
    if (!a.is_projector) throw std::invalid_argument("cor-8.1: observable must be a projector");
    if (basis.d() != shell.d())
        throw std::invalid_argument("cor-8.1: basis must be complete for the shell");
    if (static_cast<int>(ensemble_probs.size()) != basis.d())
        throw std::invalid_argument("cor-8.2: ensemble size mismatch");

    double th = microcanonical_value(a, shell, sys);
    double eps = cloned_band_metric(sys, a, shell, band, th).epsilon;
    // the doubled spectrum spans twice the single-copy spread
    double w0 = detail::tail_max(w, band.delta_e, 3.0 * std::max(sys.spectral_spread(), band.delta_e));

    RealMatrix dev = basis_deviation_series(sys, a, basis, w, th);
    const int d = basis.d();
    const int na = static_cast<int>(w.atoms.size());

    std::vector<VerificationReport> out;

    // F_Lambda: fraction of correlated pairs
    int correlated = 0;
    for (int k = 0; k < d; ++k)
        for (int l = 0; l < d; ++l) {
            double corr = 0.0;
            for (int j = 0; j < na; ++j) corr += w.atoms[j].weight * dev(k, j) * dev(l, j);
            if (std::abs(corr) >= big_lambda) ++correlated;
        }
    double f_corr = static_cast<double>(correlated) / (static_cast<double>(d) * d);
    VerificationReport r81 =
        make_report("cor-8.1", f_corr, std::sqrt(2.0) / big_lambda * (eps + w0 * th));
    r81.instance["epsilon"] = eps;
    r81.instance["w0"] = w0;
    r81.instance["Lambda"] = big_lambda;
    out.push_back(std::move(r81));

    // ensemble equilibrium: exceptional-time mass below kappa, thermal to
    // accuracy lambda elsewhere, given a large enough participation fraction
    double psum = 0.0, p2 = 0.0;
    for (double p : ensemble_probs) {
        if (p < -1e-15) throw std::invalid_argument("cor-8.2: negative probability");
        psum += p;
        p2 += p * p;
    }
    if (std::abs(psum - 1.0) > 1e-10) throw std::invalid_argument("cor-8.2: probabilities not normalized");
    double mu = 1.0 / (d * p2);
    double mu_required = (eps + w0 * th) / (kappa * lambda * lambda);

    double rho2 = p2;  // Tr[rho^2] for the diagonal ensemble in an orthonormal basis
    double threshold = (eps + w0 * th) * d * rho2 / kappa;
    double exceptional_mass = 0.0;
    double max_ok_dev = 0.0;
    for (int j = 0; j < na; ++j) {
        double dj = 0.0;
        for (int k = 0; k < d; ++k) dj += ensemble_probs[k] * dev(k, j);
        if (dj * dj >= threshold)
            exceptional_mass += w.atoms[j].weight;
        else
            max_ok_dev = std::max(max_ok_dev, std::abs(dj));
    }
    VerificationReport r82 = make_report("cor-8.2", exceptional_mass, kappa);
    r82.instance["mu"] = mu;
    r82.instance["mu_required"] = mu_required;
    r82.instance["kappa"] = kappa;
    r82.instance["lambda"] = lambda;
    r82.instance["max_nonexceptional_deviation"] = max_ok_dev;
    if (mu >= mu_required && max_ok_dev >= lambda) {
        // the participation hypothesis held but equilibrium failed: defect
        r82.holds = false;
        r82.notes["equilibrium"] = "non-exceptional deviation at or above lambda";
    }
    if (mu < mu_required) r82.notes["participation"] = "mu below the required threshold; mass bound still checked";
    out.push_back(std::move(r82));
    return out;
}

// Finite-time Mazur-Suzuki inequality with approximately conserved,
// trace-orthogonal charges:
//   sum_j w+_j Tr[A(t_j) A] > W sum_k max(|Tr[A Q_k]| - sqrt(dQ_k^2/(1-w20) Tr[A^2]), 0)^2 / Tr[Q_k^2]
// The max(.,0) clamp is what the derivation supports; see the ledger.
inline VerificationReport mazur_suzuki(const SpectralSystem& sys, const Observable& a,
                                       const std::vector<Observable>& charges,
                                       const WeightFunction& w_plus, const WeightFunction& w2_plus,
                                       double target_band, double path_tol = 1e-8) {
    if (!w_plus.completely_positive() || !w2_plus.completely_positive())
        throw std::invalid_argument("mazur-suzuki: weights must be completely positive");

    // orthogonality within tolerance, then Gram-Schmidt under the trace
    // inner product; the adjustment norm is recorded
    for (size_t i = 0; i < charges.size(); ++i)
        for (size_t j = i + 1; j < charges.size(); ++j) {
            double qi = charges[i].matrix.squaredNorm(), qj = charges[j].matrix.squaredNorm();
            double overlap = std::abs((charges[i].matrix.adjoint() * charges[j].matrix).trace());
            if (overlap > 1e-8 * std::sqrt(qi * qj))
                throw std::invalid_argument("mazur-suzuki: charges not orthogonal within tolerance");
        }
    std::vector<Matrix> ortho;
    double adjustment = 0.0;
    for (const auto& q : charges) {
        Matrix v = q.matrix;
        for (const auto& u : ortho) v -= (u.adjoint() * v).trace() / u.squaredNorm() * u;
        adjustment = std::max(adjustment, (v - q.matrix).norm() / q.matrix.norm());
        ortho.push_back(std::move(v));
    }

    auto cal = calibrate(w_plus, target_band, detail::scan_limit(sys, target_band));
    double w20 = detail::tail_max(w2_plus, target_band, detail::scan_limit(sys, target_band));
    if (w20 >= 1.0) throw std::invalid_argument("mazur-suzuki: w2 tail reaches 1");

    auto ac = heisenberg_autocorrelator(sys, a, w_plus);
    double tr_a2 = a.matrix.squaredNorm();

    VerificationReport r;
    double rhs = 0.0;
    int k = 0;
    for (const auto& q : ortho) {
        Observable qobs = make_observable((q + q.adjoint()) / 2.0, "Q" + std::to_string(k));
        double tr_q2 = qobs.matrix.squaredNorm();
        auto qac = heisenberg_autocorrelator(sys, qobs, w2_plus);
        detail::check_paths(qac, path_tol, "charge_autocorrelator_" + std::to_string(k), &r);
        double dq2 = std::abs(tr_q2 - qac.value());
        double overlap = std::abs((a.matrix * qobs.matrix).trace().real());
        double term = std::max(overlap - std::sqrt(dq2 / (1.0 - w20) * tr_a2), 0.0);
        rhs += cal.W * term * term / tr_q2;
        r.instance["dQ2_" + std::to_string(k)] = dq2;
        ++k;
    }

    // a lower bound on the autocorrelator: report with lhs = bound so the
    // holds convention (lhs <= rhs) reads the right way around
    VerificationReport full = make_report("mazur-suzuki", rhs, ac.value());
    full.instance = r.instance;
    detail::check_paths(ac, path_tol, "observable_autocorrelator", &full);
    full.instance["W"] = cal.W;
    full.instance["w20"] = w20;
    full.instance["gram_schmidt_adjustment"] = adjustment;
    return full;
}

// Dual-unitary circuit check: autocorrelators of traceless single-site
// observables vanish exactly for all gate layers 0 < |t| < N. Time here
// counts single brick layers (half a Floquet period); in full two-layer
// periods the light cone wraps the ring at N/2 and the correlator revives,
// as the all-SWAP circuit shows exactly. Comoving correlators (observable
// shifted two sites per full period) are evaluated and reported without
// asserting a bound.
inline VerificationReport dual_unitary_check(const BrickworkCircuit& circuit, int site,
                                             int max_layers = -1) {
    const int n = circuit.n_qubits;
    const int dim = circuit.dim();
    if (site < 0 || site >= n) throw std::invalid_argument("app-b: site out of range");
    if (max_layers < 0) max_layers = n - 1;

    auto correlator = [&](const Matrix& w_t, int obs_site) {
        // Tr[W^dag Z_obs W Z_site] / D with both Z diagonal
        double acc = 0.0;
        for (int col = 0; col < dim; ++col) {
            double zcol = 1.0 - 2.0 * ((col >> (n - 1 - site)) & 1);
            double inner = 0.0;
            for (int row = 0; row < dim; ++row) {
                double zrow = 1.0 - 2.0 * ((row >> (n - 1 - obs_site)) & 1);
                inner += zrow * std::norm(w_t(row, col));
            }
            acc += zcol * inner;
        }
        return acc / dim;
    };

    VerificationReport r;
    double worst = 0.0;
    Matrix fwd = Matrix::Identity(dim, dim), bwd = Matrix::Identity(dim, dim);
    for (int layer = 1; layer <= max_layers; ++layer) {
        // forward layers run even, odd, even, ...; backward undoes odd first
        if (layer % 2 == 1) {
            circuit.apply_even_layer(fwd);
            circuit.apply_odd_layer(bwd, true);
        } else {
            circuit.apply_odd_layer(fwd);
            circuit.apply_even_layer(bwd, true);
        }
        double c_plus = correlator(fwd, site);
        double c_minus = correlator(bwd, site);
        worst = std::max({worst, std::abs(c_plus), std::abs(c_minus)});
        r.instance["corr_layer" + std::to_string(layer)] = c_plus;
        if (layer % 2 == 0)
            r.instance["comoving_step" + std::to_string(layer / 2)] =
                correlator(fwd, (site + layer) % n);
    }

    VerificationReport full = make_report("app-b", worst, 1e-9);
    full.instance = r.instance;
    full.instance["n_qubits"] = n;
    full.instance["site"] = site;
    full.notes["all_dual"] = circuit.all_dual() ? "true" : "false";
    return full;
}

// Eigenspace proposition pair: the dephasing average stays within the worst
// eigenspace accuracy, and the violation count respects the band bound.
inline std::vector<VerificationReport> verify_eigenspace_propositions(
    const SpectralSystem& sys, const Observable& a, const DensityOperator& rho,
    const EnergyShell& shell, double rel_tol, const BandSpec& band, double lambda) {
    if (shell_support_residual(sys, rho, shell) > 1e-10)
        throw std::invalid_argument("prop-4.2: rho not supported in the shell");
    double th = microcanonical_value(a, shell, sys);

    std::vector<bool> in_shell(sys.dim(), false);
    for (int n : shell.indices) in_shell[n] = true;
    double eps = 0.0;
    int n_spaces = 0;
    bool nondegenerate = true;
    for (const auto& space : eigenspace_partition(sys, rel_tol)) {
        bool inside = true;
        for (int n : space.indices) inside = inside && in_shell[n];
        if (!inside) continue;
        ++n_spaces;
        if (space.d() > 1) nondegenerate = false;
        eps = std::max(eps, eigenspace_metric(sys, a, space, th).epsilon);
    }

    double ita = infinite_time_average(sys, rho, a, rel_tol);
    std::vector<VerificationReport> out;
    VerificationReport r42 = make_report("prop-4.2", std::abs(ita - th), eps);
    r42.instance["thermal_value"] = th;
    r42.instance["n_eigenspaces"] = n_spaces;
    r42.notes["form"] = nondegenerate ? "prop-4.1 (nondegenerate)" : "prop-4.2 (degenerate)";
    out.push_back(std::move(r42));

    auto vc = eigenspace_violation_count(sys, a, shell, band, th, lambda, rel_tol);
    VerificationReport rc1 = make_report("prop-c.1", static_cast<double>(vc.count), vc.bound);
    rc1.instance["lambda"] = lambda;
    rc1.instance["delta_e"] = band.delta_e;
    out.push_back(std::move(rc1));
    return out;
}

}  // namespace thermalab
