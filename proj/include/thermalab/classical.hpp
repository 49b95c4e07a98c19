#pragma once

// Finite classical reference model: a measured partition of phase space
// into ergodic subsets, the classical eigenstate-thermalization check, and
// the single-state determination identity. Serves as the pedagogical
// oracle against which the quantum machinery is compared.

#include <cmath>
#include <stdexcept>
#include <vector>

namespace thermalab {

struct ClassicalPartition {
    std::vector<double> subset_measure;        // mu(P_k) > 0
    std::vector<double> intersection_measure;  // mu(A \cap P_k) in [0, mu(P_k)]

    int size() const { return static_cast<int>(subset_measure.size()); }

    double total_measure() const {
        double acc = 0.0;
        for (double m : subset_measure) acc += m;
        return acc;
    }
    double observable_measure() const {
        double acc = 0.0;
        for (double m : intersection_measure) acc += m;
        return acc;
    }
    double thermal_value() const { return observable_measure() / total_measure(); }
};

inline ClassicalPartition make_partition(std::vector<double> subset_measure,
                                         std::vector<double> intersection_measure) {
    if (subset_measure.empty() || subset_measure.size() != intersection_measure.size())
        throw std::invalid_argument("partition: size mismatch");
    for (size_t k = 0; k < subset_measure.size(); ++k) {
        if (!(subset_measure[k] > 0.0)) throw std::invalid_argument("partition: subset with zero measure");
        if (intersection_measure[k] < 0.0 || intersection_measure[k] > subset_measure[k] + 1e-15)
            throw std::invalid_argument("partition: intersection outside [0, mu(P_k)]");
    }
    return ClassicalPartition{std::move(subset_measure), std::move(intersection_measure)};
}

// Time-averaged probability of A: sum_k (mu(A,P_k)/mu(P_k)) pi_k[rho],
// using the ergodicity of each subset.
inline double classical_time_average(const ClassicalPartition& p,
                                     const std::vector<double>& initial_weights) {
    if (static_cast<int>(initial_weights.size()) != p.size())
        throw std::invalid_argument("classical_time_average: weight count mismatch");
    double acc = 0.0;
    for (int k = 0; k < p.size(); ++k) {
        if (initial_weights[k] < 0.0)
            throw std::invalid_argument("classical_time_average: negative weight");
        acc += p.intersection_measure[k] / p.subset_measure[k] * initial_weights[k];
    }
    return acc;
}

// Initial weights of the state rho_A = Pi_A / mu(A).
inline std::vector<double> rho_a_weights(const ClassicalPartition& p) {
    double mu_a = p.observable_measure();
    if (!(mu_a > 0.0)) throw std::invalid_argument("rho_a_weights: mu(A) = 0");
    std::vector<double> w(p.size());
    for (int k = 0; k < p.size(); ++k) w[k] = p.intersection_measure[k] / mu_a;
    return w;
}

// Per-subset eigenstate-thermalization check:
// |mu(A,P_k)/mu(P_k) - mu(A)/mu(P)| <= tol.
inline std::vector<bool> classical_eigenstate_check(const ClassicalPartition& p, double tol) {
    double th = p.thermal_value();
    std::vector<bool> out(p.size());
    for (int k = 0; k < p.size(); ++k)
        out[k] = std::abs(p.intersection_measure[k] / p.subset_measure[k] - th) <= tol;
    return out;
}

struct SingleStateResult {
    double variance = 0.0;
    bool implies_eigenstate_thermalization = false;
};

// The weighted-variance identity: the deviation of the rho_A time average
// from the thermal value equals
//   (1/mu(A)) sum_k mu(P_k) [mu(A,P_k)/mu(P_k) - mu(A)/mu(P)]^2.
inline SingleStateResult single_state_determination(const ClassicalPartition& p,
                                                    double identity_tol = 1e-12) {
    double mu_a = p.observable_measure();
    if (!(mu_a > 0.0)) throw std::invalid_argument("single_state_determination: mu(A) = 0");
    double th = p.thermal_value();
    double variance = 0.0;
    for (int k = 0; k < p.size(); ++k) {
        double r = p.intersection_measure[k] / p.subset_measure[k] - th;
        variance += p.subset_measure[k] * r * r;
    }
    variance /= mu_a;

    double avg = classical_time_average(p, rho_a_weights(p));
    if (std::abs((avg - th) - variance) > identity_tol * std::max(1.0, std::abs(variance)))
        throw std::runtime_error("single_state_determination: variance identity violated");

    return SingleStateResult{variance, variance <= 1e-12};
}

}  // namespace thermalab
