#pragma once

#include <cstdint>

#include "qstab/channel.hpp"
#include "qstab/rng.hpp"
#include "qstab/subspace.hpp"

namespace qstab {

// ---- fixed points of channels ----

struct FixedSpaceReport {
    OperatorSubspace space;  // HS-metric subspace of B(H), dagger closed
    double spectral_gap;     // min |eig - 1| over eigenvalues outside the window
    bool gap_warning;        // another eigenvalue within 10x tol.eig of 1
};

// Kernel of (E - Id) on the vectorized space, Hermitized and re-orthonormalized.
FixedSpaceReport fixed_point_space(const Channel& E);

// Limit of the damped iteration applied to the maximally mixed state. Among
// fixed states its support is maximal.
DensityMatrix max_rank_fixed_state(const Channel& E);

// ---- operator Schmidt span ----

// Span of the factors on `positions` in the minimal product expansion of X
// across (positions | complement), via the realignment SVD.
OperatorSubspace schmidt_span(const Operator& X, const std::vector<std::size_t>& positions);

// rho^lambda X rho^{-lambda}; pseudo-powers on the support when
// allow_singular is set.
Operator modular_map(const DensityMatrix& rho, double lambda, const Operator& X,
                     bool allow_singular = false);

// ---- distorted algebras ----

// Subspace of B(H) containing rho_ref, closed under the adjoint and the
// distorted product (X, Y) -> X rho^{-1} Y.
class DistortedAlgebra {
  public:
    // Smallest such subspace containing the generators and rho_ref.
    static DistortedAlgebra close(const DensityMatrix& rho_ref,
                                  const std::vector<Operator>& generators);

    const OperatorSubspace& subspace() const { return sub_; }
    const DensityMatrix& rho_ref() const { return rho_; }
    const HilbertSpace& space() const { return rho_.space(); }
    std::size_t dim() const { return sub_.dim(); }
    bool modular_invariant() const { return modular_invariant_; }

    // Worst residual of dagger / distorted-product closure and of rho_ref
    // membership, recomputed on the current basis.
    double verify_closure() const;

  private:
    DistortedAlgebra(OperatorSubspace s, DensityMatrix r)
        : sub_(std::move(s)), rho_(std::move(r)) {}
    OperatorSubspace sub_;
    DensityMatrix rho_;
    bool modular_invariant_ = false;

    friend DistortedAlgebra minimal_fixed_point_set(const DensityMatrix&,
                                                    const std::vector<Operator>&);
};

// Iterates closure and the half-modular map until the subspace stabilizes;
// the result is the smallest valid fixed-point candidate containing W.
DistortedAlgebra minimal_fixed_point_set(const DensityMatrix& rho,
                                         const std::vector<Operator>& W);

// ---- block structure ----

struct Block {
    Matrix isometry;  // d x (s*f); column p*f + j is (S basis p) x (F basis j)
    std::size_t s = 0;
    std::size_t f = 0;
    Matrix rho_s;  // s x s state carried by rho_ref on the S factor
    Matrix tau_f;  // f x f fixed state on the F factor
    double p = 0;  // weight of the block in rho_ref
};

struct BlockDecomposition {
    HilbertSpace space;
    std::vector<Block> blocks;
    Matrix remainder_projector;   // complement of the block ranges
    double factor_residual = 0;   // worst deviation of a basis op from M (x) I form
    double reassembly_residual = 0;  // projector distance to the input subspace
};

// Wedderburn-style decomposition of a dagger- and product-closed distorted
// algebra with full-rank rho_ref. Seeded; the central element is sampled
// twice and both draws must agree.
BlockDecomposition block_decompose(const DistortedAlgebra& A,
                                   std::uint64_t seed = kDefaultSeed);

}  // namespace qstab
