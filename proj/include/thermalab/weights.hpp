#pragma once

// Discrete-time weight functions for time averaging. Atoms are the
// canonical representation; continuous kernels only appear in tests as
// closed-form oracles. Completely positive weights are constructed from
// point-set pair differences, which makes their transform a squared
// magnitude and hence non-negative by construction.

#include "thermalab/linalg.hpp"

#include <algorithm>
#include <map>
#include <optional>
#include <vector>

namespace thermalab {

struct WeightAtom {
    double t = 0.0;
    double weight = 0.0;
};

enum class WeightProvenance { generic, cp_pointset };

struct WeightFunction {
    std::vector<WeightAtom> atoms;  // sorted by time, weights >= 0, sum == 1
    WeightProvenance provenance = WeightProvenance::generic;
    std::vector<double> pointset;   // the zeta list when provenance == cp_pointset

    bool completely_positive() const { return provenance == WeightProvenance::cp_pointset; }

    double max_time() const {
        double m = 0.0;
        for (const auto& a : atoms) m = std::max(m, std::abs(a.t));
        return m;
    }
};

namespace detail {

constexpr double atom_merge_tol = 1e-12;

inline std::vector<WeightAtom> merge_atoms(std::vector<WeightAtom> atoms) {
    std::sort(atoms.begin(), atoms.end(), [](const WeightAtom& a, const WeightAtom& b) { return a.t < b.t; });
    std::vector<WeightAtom> out;
    for (const auto& a : atoms) {
        if (!out.empty() && std::abs(a.t - out.back().t) <= atom_merge_tol)
            out.back().weight += a.weight;
        else
            out.push_back(a);
    }
    return out;
}

inline void validate_weight(const WeightFunction& w) {
    double sum = 0.0;
    for (const auto& a : w.atoms) {
        if (a.weight < 0.0) throw std::invalid_argument("weight: negative atom");
        sum += a.weight;
    }
    if (std::abs(sum - 1.0) > 1e-12) throw std::invalid_argument("weight: atoms not normalized");
}

}  // namespace detail

inline WeightFunction make_weight(std::vector<WeightAtom> atoms) {
    WeightFunction w;
    w.atoms = detail::merge_atoms(std::move(atoms));
    detail::validate_weight(w);
    return w;
}

// Single atom at time t0 (an instantaneous "average").
inline WeightFunction delta_weight(double t0 = 0.0) {
    WeightFunction w;
    w.atoms = {{t0, 1.0}};
    w.provenance = (t0 == 0.0) ? WeightProvenance::cp_pointset : WeightProvenance::generic;
    if (t0 == 0.0) w.pointset = {0.0};
    return w;
}

// Uniform average over n equally spaced atoms; positive but not
// completely positive for n > 1.
inline WeightFunction uniform_weight(int n_atoms, double spacing, double t0 = 0.0) {
    if (n_atoms < 1) throw std::invalid_argument("uniform_weight: n_atoms must be >= 1");
    std::vector<WeightAtom> atoms;
    double off = 0.5 * (n_atoms - 1) * spacing;
    for (int j = 0; j < n_atoms; ++j) atoms.push_back({t0 + j * spacing - off, 1.0 / n_atoms});
    return make_weight(std::move(atoms));
}

// Completely positive weight from a point set: atoms at all pairwise
// differences zeta_j - zeta_k with weight 1/tau, tau = |zeta|^2. The
// transform is |sum_k exp(-i zeta_k E)|^2 / eta^2 >= 0.
inline WeightFunction cp_from_pointset(std::vector<double> zeta) {
    if (zeta.empty()) throw std::invalid_argument("cp_from_pointset: empty point set");
    size_t eta = zeta.size();
    double tau = static_cast<double>(eta) * static_cast<double>(eta);
    std::vector<WeightAtom> atoms;
    atoms.reserve(eta * eta);
    for (double zj : zeta)
        for (double zk : zeta) atoms.push_back({zj - zk, 1.0 / tau});
    WeightFunction w = make_weight(std::move(atoms));
    w.provenance = WeightProvenance::cp_pointset;
    w.pointset = std::move(zeta);
    return w;
}

// Triangular (Fejer) window: atoms at t_j = j * spacing for |j| <= n-1
// with weight (n - |j|)/n^2; the point-set autocorrelation of n equally
// spaced points, so completely positive.
inline WeightFunction fejer_weight(int n_atoms, double spacing) {
    if (n_atoms < 1) throw std::invalid_argument("fejer_weight: n_atoms must be >= 1");
    std::vector<double> zeta(n_atoms);
    for (int k = 0; k < n_atoms; ++k) zeta[k] = k * spacing;
    return cp_from_pointset(std::move(zeta));
}

// Closed-form Fejer transform, used as an oracle against fourier().
inline double fejer_transform(int n, double spacing, double delta_e) {
    double x = 0.5 * spacing * delta_e;
    double s = std::sin(x);
    if (std::abs(s) < 1e-12) {
        // near a recurrence peak; expand around x = k*pi
        double y = x - pi * std::round(x / pi);
        if (std::abs(y) < 1e-12) return 1.0;
        double num = std::sin(n * x) / (n * std::sin(x));
        return num * num;
    }
    double num = std::sin(n * x) / (n * s);
    return num * num;
}

inline cxd fourier(const WeightFunction& w, double delta_e) {
    cxd acc = 0.0;
    for (const auto& a : w.atoms) acc += a.weight * std::exp(cxd(0.0, -delta_e * a.t));
    return acc;
}

// Time-shifted copy, t -> t + t0. Only meaningful for generic weights;
// cp point-set averages cannot be shifted without losing positivity of
// the transform.
inline WeightFunction shifted(const WeightFunction& w, double t0) {
    if (w.completely_positive() && t0 != 0.0)
        throw std::invalid_argument("shifted: cp point-set weights cannot be time-shifted");
    WeightFunction out = w;
    for (auto& a : out.atoms) a.t += t0;
    return out;
}

struct BandCalibration {
    double W = 0.0;          // min of the transform inside |dE| < delta_e_w
    double delta_e_w = 0.0;  // certified band
    double w0 = 0.0;         // max |transform| on [delta_e_w, e_max_scan]
    double e_max_scan = 0.0;
    double grid_step = 0.0;
};

// Certify (W, w0) for a target band by dense grid scan over [0, e_max_scan].
// Grid-level rigor only: the scan step must place at least ~1e3 points on
// the interval.
inline BandCalibration calibrate(const WeightFunction& w, double target_band, double e_max_scan,
                                 double grid_step = 0.0) {
    if (!(target_band > 0.0) || !(e_max_scan > target_band))
        throw std::invalid_argument("calibrate: need 0 < target_band < e_max_scan");
    if (grid_step <= 0.0) grid_step = target_band / 200.0;
    if (grid_step > e_max_scan / 1000.0) grid_step = e_max_scan / 1000.0;

    BandCalibration cal;
    cal.delta_e_w = target_band;
    cal.e_max_scan = e_max_scan;
    cal.grid_step = grid_step;

    // scan the closed interval [0, target_band]; the endpoint inclusion can
    // only underestimate W, which keeps the certificate valid
    double wmin = std::numeric_limits<double>::infinity();
    for (double e = 0.0; e <= target_band + 0.5 * grid_step; e += grid_step) {
        double ec = std::min(e, target_band);
        wmin = std::min(wmin, fourier(w, ec).real());
        wmin = std::min(wmin, fourier(w, -ec).real());
    }
    cal.W = wmin;
    if (cal.W <= 1e-12)
        throw std::runtime_error("calibrate: transform not positive on the target band (W <= 0)");

    double wmax = 0.0;
    for (double e = target_band; e <= e_max_scan + 0.5 * grid_step; e += grid_step) {
        wmax = std::max(wmax, std::abs(fourier(w, e)));
        wmax = std::max(wmax, std::abs(fourier(w, -e)));
    }
    cal.w0 = wmax;
    return cal;
}

// Scan min of the transform's real part over a symmetric grid; the
// complete-positivity witness.
inline double transform_min(const WeightFunction& w, double e_max, int n_points) {
    double m = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n_points; ++i) {
        double e = -e_max + 2.0 * e_max * i / (n_points - 1);
        m = std::min(m, fourier(w, e).real());
    }
    return m;
}

// Poisson point process: cumulative sums of exponential inter-arrival draws.
inline std::vector<double> poisson_pointset(double mean_spacing, int count, std::uint64_t seed) {
    if (count < 1) throw std::invalid_argument("poisson_pointset: count must be >= 1");
    Rng rng(seed);
    std::vector<double> pts(count);
    double acc = 0.0;
    for (int k = 0; k < count; ++k) {
        acc += rng.exponential(mean_spacing);
        pts[k] = acc;
    }
    return pts;
}

}  // namespace thermalab
