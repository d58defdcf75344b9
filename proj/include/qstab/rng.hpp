#pragma once

#include <Eigen/Dense>
#include <Eigen/QR>

#include <cmath>
#include <cstdint>

#include "qstab/operator.hpp"

namespace qstab {

// Counter-based splittable generator (splitmix64 core). Output i is a pure
// function of (key, i), so trials can be seeded independently and results do
// not depend on platform library details.
class Rng {
  public:
    explicit Rng(std::uint64_t key) : key_(key) {}

    static std::uint64_t mix(std::uint64_t z) {
        z += 0x9E3779B97F4A7C15ull;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    // Order-sensitive combination of a base seed and an index (per-trial keys).
    static std::uint64_t hash(std::uint64_t a, std::uint64_t b) {
        return mix(a ^ (mix(b) + 0x9E3779B97F4A7C15ull + (a << 6) + (a >> 2)));
    }

    Rng split(std::uint64_t child) const { return Rng(hash(key_, child)); }

    std::uint64_t next_u64() { return mix(key_ + 0x9E3779B97F4A7C15ull * (++ctr_)); }

    double next_double() {  // uniform in [0, 1)
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double next_gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u = 0.0;
        while (u <= 0.0) u = next_double();
        const double v = next_double();
        const double r = std::sqrt(-2.0 * std::log(u));
        spare_ = r * std::sin(2.0 * M_PI * v);
        have_spare_ = true;
        return r * std::cos(2.0 * M_PI * v);
    }

    Complex next_cgauss() {
        const double re = next_gaussian();
        const double im = next_gaussian();
        return Complex(re, im);
    }

    Matrix gaussian_matrix(std::size_t rows, std::size_t cols) {
        Matrix M(rows, cols);
        for (std::size_t j = 0; j < cols; ++j)
            for (std::size_t i = 0; i < rows; ++i) M(i, j) = next_cgauss();
        return M;
    }

    Vector haar_vector(std::size_t d) {
        Vector v(d);
        for (std::size_t i = 0; i < d; ++i) v(i) = next_cgauss();
        return v / v.norm();
    }

    Matrix haar_unitary(std::size_t d) {
        Matrix G = gaussian_matrix(d, d);
        Eigen::HouseholderQR<Matrix> qr(G);
        Matrix Q = qr.householderQ();
        Matrix R = qr.matrixQR().triangularView<Eigen::Upper>();
        for (std::size_t k = 0; k < d; ++k) {
            Complex r = R(k, k);
            Q.col(k) *= (std::abs(r) > 0.0) ? r / std::abs(r) : Complex(1, 0);
        }
        return Q;
    }

    // Random full-rank density matrix (Wishart plus a floor).
    Matrix random_density(std::size_t d, double floor = 1e-3) {
        Matrix G = gaussian_matrix(d, d);
        Matrix W = G * G.adjoint() + floor * Matrix::Identity(d, d);
        return W / W.trace().real();
    }

    Matrix random_hermitian(std::size_t d) {
        Matrix G = gaussian_matrix(d, d);
        return hermitize(G);
    }

  private:
    std::uint64_t key_;
    std::uint64_t ctr_ = 0;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

inline constexpr std::uint64_t kDefaultSeed = 0xA17E;

}  // namespace qstab
