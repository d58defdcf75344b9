#include "qstab/states.hpp"

#include <bit>
#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/Eigenvalues>

namespace qstab {
namespace {

HilbertSpace qubit_register(std::size_t n) {
    if (n == 0) throw std::invalid_argument("state factory: need at least one qubit");
    return HilbertSpace(std::vector<std::size_t>(n, 2));
}

}  // namespace

DensityMatrix ghz_state(std::size_t n) {
    const HilbertSpace H = qubit_register(n);
    Vector v = Vector::Zero(H.dim());
    const double a = 1.0 / std::sqrt(2.0);
    v(0) = a;
    v(H.dim() - 1) = a;
    return pure_state(H, v);
}

DensityMatrix dicke_state(std::size_t n, std::size_t k) {
    if (k > n) throw std::invalid_argument("dicke_state: excitation number exceeds qubit count");
    const HilbertSpace H = qubit_register(n);
    Vector v = Vector::Zero(H.dim());
    std::size_t count = 0;
    for (std::size_t idx = 0; idx < H.dim(); ++idx) {
        if (std::popcount(idx) == static_cast<int>(k)) {
            v(idx) = 1.0;
            ++count;
        }
    }
    v /= std::sqrt(static_cast<double>(count));
    return pure_state(H, v);
}

DensityMatrix w_state(std::size_t n) { return dicke_state(n, 1); }

DensityMatrix graph_state(std::size_t n,
                          const std::vector<std::pair<std::size_t, std::size_t>>& edges) {
    const HilbertSpace H = qubit_register(n);
    Vector v = Vector::Constant(H.dim(), 1.0 / std::sqrt(static_cast<double>(H.dim())));
    for (const auto& [a, b] : edges) {
        if (a >= n || b >= n || a == b) throw std::invalid_argument("graph_state: bad edge");
        for (std::size_t idx = 0; idx < H.dim(); ++idx) {
            const bool ba = (idx >> (n - 1 - a)) & 1u;
            const bool bb = (idx >> (n - 1 - b)) & 1u;
            if (ba && bb) v(idx) = -v(idx);
        }
    }
    return pure_state(H, v);
}

DensityMatrix gibbs_commuting(const HilbertSpace& H, const std::vector<Operator>& terms,
                              double beta) {
    if (terms.empty()) throw std::invalid_argument("gibbs_commuting: no terms");
    if (!std::isfinite(beta)) throw std::invalid_argument("gibbs_commuting: beta must be finite");
    for (std::size_t i = 0; i < terms.size(); ++i) {
        if (terms[i].space != H) throw std::invalid_argument("gibbs_commuting: term space mismatch");
        if (!is_hermitian(terms[i].mat, 1e-10))
            throw std::invalid_argument("gibbs_commuting: term " + std::to_string(i) +
                                        " is not Hermitian");
    }
    for (std::size_t i = 0; i < terms.size(); ++i)
        for (std::size_t j = i + 1; j < terms.size(); ++j) {
            const Matrix comm = terms[i].mat * terms[j].mat - terms[j].mat * terms[i].mat;
            const double nrm = spectral_norm(comm);
            if (nrm > 1e-10)
                throw std::invalid_argument("gibbs_commuting: terms " + std::to_string(i) +
                                            " and " + std::to_string(j) +
                                            " do not commute (norm " + std::to_string(nrm) + ")");
        }

    Matrix Hsum = Matrix::Zero(H.dim(), H.dim());
    for (const auto& t : terms) Hsum += t.mat;
    Eigen::SelfAdjointEigenSolver<Matrix> es(hermitize(Hsum));
    const RealVector& ev = es.eigenvalues();
    const double shift = (beta >= 0.0) ? ev.minCoeff() : ev.maxCoeff();
    RealVector w(ev.size());
    for (Eigen::Index k = 0; k < ev.size(); ++k) w(k) = std::exp(-beta * (ev(k) - shift));
    w /= w.sum();
    Matrix rho = es.eigenvectors() * w.asDiagonal() * es.eigenvectors().adjoint();
    return DensityMatrix::validated(Operator(H, hermitize(rho)));
}

std::vector<Operator> zz_chain_terms(std::size_t n, double coupling) {
    if (n < 2) throw std::invalid_argument("zz_chain_terms: need at least two qubits");
    const HilbertSpace H = qubit_register(n);
    Matrix z(2, 2);
    z << 1, 0, 0, -1;
    const Matrix zz = coupling * kron(z, z);
    const HilbertSpace pair({2, 2});
    std::vector<Operator> terms;
    terms.reserve(n - 1);
    for (std::size_t a = 0; a + 1 < n; ++a)
        terms.push_back(tensor_embed(Operator(pair, zz), H, {a, a + 1}));
    return terms;
}

DensityMatrix dicke_ghz_mixture(double eps) {
    if (!(eps > 0.0 && eps < 1.0))
        throw std::invalid_argument("dicke_ghz_mixture: eps must lie in (0,1)");
    DensityMatrix d = dicke_state(4, 2);
    DensityMatrix g = ghz_state(4);
    Matrix m = (1.0 - eps) * d.mat() + eps * g.mat();
    return DensityMatrix::validated(Operator(d.space(), m));
}

}  // namespace qstab
