#pragma once

// Thermalization metrics: eigenstate deviations, the eigenspace metric
// (unnormalized, per Definition 4.1-style accounting), the 1/d-normalized
// energy-band metric, its cloned (doubled-space) variant, nonthermal basis
// fractions and the participation fraction.

#include "thermalab/spectral.hpp"
#include "thermalab/weights.hpp"

#include <vector>

namespace thermalab {

struct MetricContext {
    int shell_d = 0;
    double delta_e = 0.0;     // 0 when not band-resolved
    double thermal_value = 0.0;
    std::string kind;
};

struct MetricReport {
    double value = 0.0;    // the squared metric (>= 0 up to roundoff)
    double epsilon = 0.0;  // sqrt(max(value, 0))
    MetricContext context;
};

inline MetricReport make_metric_report(double value, MetricContext ctx) {
    if (value < -1e-12) throw std::runtime_error("metric: negative value beyond roundoff");
    return MetricReport{value, std::sqrt(std::max(value, 0.0)), std::move(ctx)};
}

struct BasisFamily {
    std::string label;
    Matrix vectors;  // D x d, orthonormal columns

    int d() const { return static_cast<int>(vectors.cols()); }
};

inline BasisFamily make_basis(Matrix vectors, std::string label = "",
                              double ortho_tol = 1e-10) {
    if (max_abs(vectors.adjoint() * vectors - Matrix::Identity(vectors.cols(), vectors.cols())) > ortho_tol)
        throw std::invalid_argument("basis '" + label + "': columns not orthonormal");
    return BasisFamily{std::move(label), std::move(vectors)};
}

// Computational basis of the full space.
inline BasisFamily computational_basis(int dim) {
    return BasisFamily{"computational", Matrix::Identity(dim, dim)};
}

// Eigenbasis columns restricted to a shell.
inline BasisFamily shell_eigenbasis(const SpectralSystem& sys, const EnergyShell& shell) {
    Matrix v(sys.dim(), shell.d());
    for (int j = 0; j < shell.d(); ++j) v.col(j) = sys.eigenbasis.col(shell.indices[j]);
    return BasisFamily{"eigenbasis", std::move(v)};
}

// Seeded random orthonormal basis of the span of a shell.
inline BasisFamily random_shell_basis(const SpectralSystem& sys, const EnergyShell& shell,
                                      std::uint64_t seed) {
    Matrix mix = haar_unitary(shell.d(), seed);
    return BasisFamily{"random", shell_eigenbasis(sys, shell).vectors * mix};
}

inline std::vector<double> eigenstate_deviations(const SpectralSystem& sys, const Observable& a,
                                                 const EnergyShell& shell) {
    double th = microcanonical_value(a, shell, sys);
    std::vector<double> out;
    out.reserve(shell.d());
    for (int n : shell.indices) {
        cxd ann = (sys.eigenbasis.col(n).adjoint() * a.matrix * sys.eigenbasis.col(n))(0);
        out.push_back(std::abs(ann.real() - th));
    }
    return out;
}

// Unnormalized eigenspace metric: sum over pairs in one eigenspace of
// |<E_n|A|E_m> - th * delta_nm|^2.
inline MetricReport eigenspace_metric(const SpectralSystem& sys, const Observable& a,
                                      const EnergyShell& eigenspace, double thermal_value) {
    Matrix ae = sys.to_eigen(a.matrix);
    double acc = 0.0;
    for (int n : eigenspace.indices)
        for (int m : eigenspace.indices) {
            cxd v = ae(n, m);
            if (n == m) v -= thermal_value;
            acc += std::norm(v);
        }
    return make_metric_report(acc, {eigenspace.d(), 0.0, thermal_value, "eigenspace"});
}

namespace detail {

// Sum over band pairs of |ae(n,m) - th*delta_nm|^2, via shell-pair
// enumeration on the sorted spectrum.
inline double band_pair_sum(const SpectralSystem& sys, const Matrix& ae, const EnergyShell& shell,
                            const BandSpec& band, double thermal_value) {
    double acc = 0.0;
    for (int n : shell.indices)
        for (int m : shell.indices) {
            if (!in_band(band, sys.energies(n) - sys.energies(m))) continue;
            cxd v = ae(n, m);
            if (n == m) v -= thermal_value;
            acc += std::norm(v);
        }
    return acc;
}

}  // namespace detail

// (1/d) sum over shell pairs with |E_n - E_m| < DeltaE of
// |<E_n|A|E_m> - th*delta_nm|^2. Cross-checked against the band-restricted
// trace route.
inline MetricReport band_metric(const SpectralSystem& sys, const Observable& a,
                                const EnergyShell& shell, const BandSpec& band,
                                double thermal_value, double crosscheck_tol = 1e-10) {
    Matrix ae = sys.to_eigen(a.matrix);
    double direct = detail::band_pair_sum(sys, ae, shell, band, thermal_value) / shell.d();

    // second route: (1/d) Tr[ [A - th*1]_{shell,band}^2 ]
    Matrix masked = Matrix::Zero(sys.dim(), sys.dim());
    for (int n : shell.indices)
        for (int m : shell.indices)
            if (in_band(band, sys.energies(n) - sys.energies(m))) {
                masked(n, m) = ae(n, m);
                if (n == m) masked(n, m) -= thermal_value;
            }
    double traced = (masked * masked).trace().real() / shell.d();
    if (std::abs(direct - traced) > crosscheck_tol * std::max(1.0, std::abs(direct)))
        throw std::runtime_error("band_metric: pair sum and trace route disagree");

    return make_metric_report(direct, {shell.d(), band.delta_e, thermal_value, "band"});
}

// convenience overload: thermal value = microcanonical value on the shell
inline MetricReport band_metric(const SpectralSystem& sys, const Observable& a,
                                const EnergyShell& shell, const BandSpec& band) {
    return band_metric(sys, a, shell, band, microcanonical_value(a, shell, sys));
}

// Cloned (doubled-space) band metric:
//   (1/d^2) sum over shell quadruples (n,m,k,l) with
//   |E_n + E_l - E_m - E_k| < DeltaE of a_nm * a_lk,
//   a_nm = |<E_n|A|E_m> - th*delta_nm|^2.
// Evaluated by sorting the d^2 pair gaps x_nm = E_n - E_m and sweeping a
// prefix-sum window, O(d^2 log d). The quadruple condition is
// |x_nm + x_lk| < DeltaE.
inline MetricReport cloned_band_metric(const SpectralSystem& sys, const Observable& a,
                                       const EnergyShell& shell, const BandSpec& band,
                                       double thermal_value, int pair_sweep_cap = 512) {
    if (shell.d() > pair_sweep_cap)
        throw std::invalid_argument("cloned_band_metric: shell dimension exceeds pair-sweep cap");
    Matrix ae = sys.to_eigen(a.matrix);
    const int d = shell.d();
    const size_t np = static_cast<size_t>(d) * d;

    std::vector<std::pair<double, double>> pairs;  // (gap, weight)
    pairs.reserve(np);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            int n = shell.indices[i], m = shell.indices[j];
            cxd v = ae(n, m);
            if (n == m) v -= thermal_value;
            pairs.emplace_back(sys.energies(n) - sys.energies(m), std::norm(v));
        }
    std::sort(pairs.begin(), pairs.end());

    std::vector<double> xs(np), prefix(np + 1, 0.0);
    for (size_t p = 0; p < np; ++p) {
        xs[p] = pairs[p].first;
        prefix[p + 1] = prefix[p] + pairs[p].second;
    }
    auto window_sum = [&](double lo, double hi) {
        // sum of weights over gaps strictly inside (lo, hi)
        auto a_it = std::upper_bound(xs.begin(), xs.end(), lo);
        auto b_it = std::lower_bound(xs.begin(), xs.end(), hi);
        size_t ia = a_it - xs.begin(), ib = b_it - xs.begin();
        return (ib > ia) ? prefix[ib] - prefix[ia] : 0.0;
    };

    // circle metric: the summed gap is defined mod 2pi, so the admissible
    // set is a union of windows around multiples of 2pi
    int kmax = band.circle_metric ? 2 : 0;
    double acc = 0.0;
    for (size_t p = 0; p < np; ++p) {
        double w = 0.0;
        for (int k = -kmax; k <= kmax; ++k) {
            double c = 2.0 * pi * k - xs[p];
            w += window_sum(c - band.delta_e, c + band.delta_e);
        }
        acc += pairs[p].second * w;
    }
    acc /= static_cast<double>(np);
    return make_metric_report(acc, {d, band.delta_e, thermal_value, "cloned-band"});
}

// O(d^4) brute force for the cloned metric; the oracle the sweep is
// validated against in tests.
inline double cloned_band_metric_bruteforce(const SpectralSystem& sys, const Observable& a,
                                            const EnergyShell& shell, const BandSpec& band,
                                            double thermal_value) {
    Matrix ae = sys.to_eigen(a.matrix);
    const int d = shell.d();
    double acc = 0.0;
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            for (int k = 0; k < d; ++k)
                for (int l = 0; l < d; ++l) {
                    int n = shell.indices[i], m = shell.indices[j];
                    int kk = shell.indices[k], ll = shell.indices[l];
                    double gap = sys.energies(n) + sys.energies(ll) - sys.energies(m) - sys.energies(kk);
                    if (!in_band(band, gap)) continue;
                    cxd vnm = ae(n, m);
                    if (n == m) vnm -= thermal_value;
                    cxd vlk = ae(ll, kk);
                    if (ll == kk) vlk -= thermal_value;
                    acc += std::norm(vnm) * std::norm(vlk);
                }
    return acc / (static_cast<double>(d) * d);
}

// Matrix of transform values wt(n, m) = w~(E_m - E_n), assembled as a
// Gram product over weight atoms.
inline Matrix weight_transform_matrix(const SpectralSystem& sys, const WeightFunction& w) {
    const int d = sys.dim();
    const int na = static_cast<int>(w.atoms.size());
    Matrix p(d, na);
    for (int j = 0; j < na; ++j) p.col(j) = std::sqrt(w.atoms[j].weight) * sys.phases(w.atoms[j].t);
    return p.conjugate() * p.transpose();
}

// Per-basis-state deviations of the w-weighted time average from the
// thermal value: lambda_k[w] = sum_j w_j <k(t_j)|A|k(t_j)> - th.
// Evaluated as the quadratic form of A masked by the weight transform.
inline std::vector<double> basis_deviations(const SpectralSystem& sys, const Observable& a,
                                            const BasisFamily& basis, const WeightFunction& w,
                                            double thermal_value) {
    Matrix m = sys.to_eigen(a.matrix).cwiseProduct(weight_transform_matrix(sys, w));
    Matrix be = sys.eigenbasis.adjoint() * basis.vectors;
    std::vector<double> dev(basis.d());
    for (int k = 0; k < basis.d(); ++k)
        dev[k] = (be.col(k).adjoint() * m * be.col(k))(0).real() - thermal_value;
    return dev;
}

// Deviation time series dev(k, j) = <k(t_j)|A|k(t_j)> - th, one column per
// weight atom. Used for pair-correlation (cloned) statistics.
inline RealMatrix basis_deviation_series(const SpectralSystem& sys, const Observable& a,
                                         const BasisFamily& basis, const WeightFunction& w,
                                         double thermal_value) {
    Matrix ae = sys.to_eigen(a.matrix);
    Matrix be = sys.eigenbasis.adjoint() * basis.vectors;
    RealMatrix dev(basis.d(), static_cast<int>(w.atoms.size()));
    for (size_t j = 0; j < w.atoms.size(); ++j) {
        Vector u = sys.phases(w.atoms[j].t);
        Matrix evolved = u.asDiagonal() * be;
        for (int k = 0; k < basis.d(); ++k) {
            cxd val = (evolved.col(k).adjoint() * ae * evolved.col(k))(0);
            dev(k, static_cast<int>(j)) = val.real() - thermal_value;
        }
    }
    return dev;
}

// Fraction of basis states whose weighted time average deviates from the
// thermal value by at least lambda.
inline double nonthermal_fraction(const SpectralSystem& sys, const Observable& a,
                                  const BasisFamily& basis, const WeightFunction& w,
                                  double thermal_value, double lambda) {
    if (!(lambda > 0.0)) throw std::invalid_argument("nonthermal_fraction: lambda must be > 0");
    auto dev = basis_deviations(sys, a, basis, w, thermal_value);
    int count = 0;
    for (double d : dev)
        if (std::abs(d) >= lambda) ++count;
    return static_cast<double>(count) / basis.d();
}

struct ViolationCount {
    int count = 0;      // eigenspaces with eigenspace metric >= lambda^2
    double bound = 0.0; // (band epsilon^2 / lambda^2) * d
};

inline ViolationCount eigenspace_violation_count(const SpectralSystem& sys, const Observable& a,
                                                 const EnergyShell& shell, const BandSpec& band,
                                                 double thermal_value, double lambda,
                                                 double rel_tol = 1e-10) {
    if (!(lambda > 0.0)) throw std::invalid_argument("eigenspace_violation_count: lambda must be > 0");
    std::vector<bool> in_shell(sys.dim(), false);
    for (int n : shell.indices) in_shell[n] = true;

    int count = 0;
    for (const auto& space : eigenspace_partition(sys, rel_tol)) {
        bool inside = true;
        for (int n : space.indices) inside = inside && in_shell[n];
        if (!inside) continue;
        if (eigenspace_metric(sys, a, space, thermal_value).value >= lambda * lambda) ++count;
    }
    double eps2 = band_metric(sys, a, shell, band, thermal_value).value;
    return ViolationCount{count, eps2 * shell.d() / (lambda * lambda)};
}

inline double participation_fraction(const DensityOperator& rho, int d) {
    if (d < 1) throw std::invalid_argument("participation_fraction: d must be >= 1");
    return 1.0 / (d * rho.purity());
}

}  // namespace thermalab
