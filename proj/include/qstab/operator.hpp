#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "qstab/config.hpp"

namespace qstab {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

// ---- multipartite Hilbert space ----

// A finite-dimensional space with a fixed tensor-factor structure. Factor 0
// is the most significant one in the composite index, matching the usual
// Kronecker-product convention.
class HilbertSpace {
  public:
    explicit HilbertSpace(std::vector<std::size_t> factor_dims);

    std::size_t dim() const { return total_; }
    std::size_t num_factors() const { return dims_.size(); }
    std::size_t factor_dim(std::size_t k) const { return dims_.at(k); }
    const std::vector<std::size_t>& factor_dims() const { return dims_; }

    bool operator==(const HilbertSpace& other) const { return dims_ == other.dims_; }
    bool operator!=(const HilbertSpace& other) const { return !(*this == other); }

    // Product of factor dimensions over a position set.
    std::size_t sub_dim(const std::vector<std::size_t>& positions) const;
    // Ascending positions not contained in `positions`.
    std::vector<std::size_t> complement(const std::vector<std::size_t>& positions) const;
    // Space formed by the factors at `positions` (ascending order).
    HilbertSpace sub_space(const std::vector<std::size_t>& positions) const;

    // Validates a position set: sorted, unique, in range. Throws otherwise.
    void check_positions(const std::vector<std::size_t>& positions) const;

  private:
    std::vector<std::size_t> dims_;
    std::size_t total_ = 1;
};

// Offset tables for a bipartition of the factors: the composite index of a
// basis vector is part_offset[a] + rest_offset[e], where a runs over the
// sub-basis of the selected factors and e over the complement. This is what
// makes embeddings and partial traces pure index arithmetic.
struct SplitIndex {
    std::vector<std::size_t> part_offset;
    std::vector<std::size_t> rest_offset;

    static SplitIndex make(const HilbertSpace& H, const std::vector<std::size_t>& positions);
};

// ---- operators ----

struct Operator {
    HilbertSpace space;
    Matrix mat;

    Operator(HilbertSpace s, Matrix m);

    std::size_t dim() const { return space.dim(); }
    Operator adjoint() const { return Operator(space, mat.adjoint()); }
};

Operator identity_op(const HilbertSpace& H);
Operator zero_op(const HilbertSpace& H);

bool is_hermitian(const Matrix& M, double tol);
Matrix hermitize(const Matrix& M);

// ---- states ----

class DensityMatrix {
  public:
    // Checks Hermiticity, positivity and unit trace against the global
    // tolerances; throws std::invalid_argument on violation.
    static DensityMatrix validated(Operator op);
    // Skips the checks; for iteration loops where the invariant is preserved
    // by construction.
    static DensityMatrix trusted(Operator op);

    const Operator& op() const { return op_; }
    const Matrix& mat() const { return op_.mat; }
    const HilbertSpace& space() const { return op_.space; }
    std::size_t dim() const { return op_.dim(); }

  private:
    explicit DensityMatrix(Operator op) : op_(std::move(op)) {}
    Operator op_;
};

DensityMatrix pure_state(const HilbertSpace& H, const Vector& psi);
DensityMatrix maximally_mixed(const HilbertSpace& H);

// ---- vectorization (column-major) ----

Vector vec(const Matrix& M);
Matrix unvec(const Vector& v, std::size_t rows, std::size_t cols);

Matrix kron(const Matrix& A, const Matrix& B);

// ---- tensor-structure operations ----

// Embeds `local` (acting on the factors listed in `positions`, ascending) into
// H, acting as the identity elsewhere.
Operator tensor_embed(const Operator& local, const HilbertSpace& H,
                      const std::vector<std::size_t>& positions);

// Places A on `positions` and B on the complementary factors.
Operator tensor_on_parts(const Matrix& A, const Matrix& B, const HilbertSpace& H,
                         const std::vector<std::size_t>& positions);

// Traces out every factor not listed in `keep`.
Operator partial_trace(const Operator& X, const std::vector<std::size_t>& keep);

// ---- norms and distances ----

double spectral_norm(const Matrix& M);
double trace_norm(const Matrix& M);

double trace_distance(const DensityMatrix& a, const DensityMatrix& b);
double trace_distance(const Operator& a, const Operator& b);

// Distance to a target set represented by an idempotent state-to-set
// projection map. This is an upper-bound surrogate for the true set distance:
// the image of rho under the projection is a member of the set, not
// necessarily the closest one.
double trace_distance_to_set(const DensityMatrix& rho,
                             const std::function<Operator(const Operator&)>& project_to_set);
double trace_distance_to_set(const DensityMatrix& rho, const DensityMatrix& target);

// ---- spectral helpers ----

// Orthonormal basis of the support (range) of a Hermitian PSD matrix: columns
// are eigenvectors whose eigenvalue exceeds rel_tol times the largest one.
Matrix support_basis(const Matrix& psd, double rel_tol);

// Hermitian power with eigenvalue floor; used for metric weights and modular
// maps. Eigenvalues below floor_rel times the largest are treated as zero
// (pseudo-power) when allow_singular is set, and raise otherwise.
Matrix hermitian_power(const Matrix& M, double exponent, bool allow_singular = false,
                       double floor_rel = 1e-12);

// Canonical Hermitian basis of B(H): diagonal units, then symmetric and
// antisymmetric combinations of off-diagonal units, all HS-normalized.
std::vector<Matrix> hermitian_basis(std::size_t d);

}  // namespace qstab
