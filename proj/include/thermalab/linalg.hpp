#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace thermalab {

using cxd = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using RealMatrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

constexpr double pi = 3.14159265358979323846;

inline double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

inline double hermiticity_residual(const Matrix& m) {
    return max_abs(m - m.adjoint());
}

inline double unitarity_residual(const Matrix& m) {
    return max_abs(m.adjoint() * m - Matrix::Identity(m.rows(), m.cols()));
}

inline double relative_frobenius(const Matrix& a, const Matrix& b) {
    double scale = std::max(1e-300, b.norm());
    return (a - b).norm() / scale;
}

// Seed mixer for deriving independent per-task seeds from a base seed.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
    return splitmix64(base ^ splitmix64(stream + 0x51a2b3c4d5e6f708ULL));
}

// Deterministic RNG. All distributions are generated through explicit
// formulas on raw mt19937_64 output, so a seed fixes the draw sequence
// independent of the standard library's distribution internals.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t raw() { return gen_(); }

    // uniform in [0, 1)
    double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // standard normal via Box-Muller
    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 1.0 - uniform01();  // (0, 1]
        double u2 = uniform01();
        double r = std::sqrt(-2.0 * std::log(u1));
        spare_ = r * std::sin(2.0 * pi * u2);
        have_spare_ = true;
        return r * std::cos(2.0 * pi * u2);
    }

    cxd complex_gaussian() {
        double re = gaussian();
        double im = gaussian();
        return {re, im};
    }

    double exponential(double mean) { return -mean * std::log(1.0 - uniform01()); }

    std::uint64_t uniform_index(std::uint64_t n) { return gen_() % n; }

private:
    std::mt19937_64 gen_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

inline Matrix random_complex_gaussian(int rows, int cols, Rng& rng) {
    Matrix m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) m(i, j) = rng.complex_gaussian();
    return m;
}

// Haar-distributed unitary: QR of a complex Ginibre matrix with the
// R-diagonal phase fix.
inline Matrix haar_unitary(int dim, Rng& rng) {
    Matrix g = random_complex_gaussian(dim, dim, rng);
    Eigen::HouseholderQR<Matrix> qr(g);
    Matrix q = qr.householderQ();
    Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int j = 0; j < dim; ++j) {
        cxd d = r(j, j);
        double a = std::abs(d);
        q.col(j) *= (a > 0.0) ? d / a : cxd(1.0, 0.0);
    }
    return q;
}

inline Matrix haar_unitary(int dim, std::uint64_t seed) {
    Rng rng(seed);
    return haar_unitary(dim, rng);
}

}  // namespace thermalab
