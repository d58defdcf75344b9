#pragma once

#include <optional>

#include "qstab/projector.hpp"

namespace qstab {

// Which subsystems each correction map may act on. Sets are held sorted and
// duplicate-free; a set covering every subsystem is rejected unless
// allow_full was passed (enlargement can legitimately produce one, but then
// locality is void and has_full_set records it).
struct NeighborhoodStructure {
    std::size_t n = 0;
    std::vector<std::vector<std::size_t>> neighborhoods;
    bool allow_full = false;
    bool covers_all = false;   // union touches every subsystem
    bool has_full_set = false; // some neighborhood is the whole register

    static NeighborhoodStructure make(std::size_t n,
                                      std::vector<std::vector<std::size_t>> sets,
                                      bool allow_full = false);

    // Each set grows to the union of all sets overlapping it.
    NeighborhoodStructure enlarged() const;
};

// Projector onto supp(rho_N) tensored with the untouched factors.
Matrix neighborhood_support(const DensityMatrix& rho, const std::vector<std::size_t>& neighborhood);

struct QlsReport {
    bool decision = false;
    std::size_t intersection_dim = 0;     // Hilbert dim (pure) / operator dim (mixed)
    std::vector<std::size_t> support_dims;  // per neighborhood, same convention
    // Invariant state different from the target certifying a negative
    // decision, when one could be constructed.
    std::optional<DensityMatrix> witness;
    // Whether the joint support of the neighborhood fixed sets collapses onto
    // the target's support. Always true for pure and full-rank targets; for
    // other targets it is the hypothesis under which the synthesized cycle
    // provably converges from every input, reported alongside the decision.
    bool support_condition = true;
};

// A pure state is stabilizable by neighborhood maps exactly when the
// neighborhood supports intersect on its own ray.
QlsReport is_qls_pure(const DensityMatrix& psi, const NeighborhoodStructure& N);

// Per neighborhood: the smallest fixed-point set on the local factors
// containing the target's Schmidt span, and its embedding padded with the
// full algebra on the remaining factors.
struct NeighborhoodAlgebra {
    std::vector<std::size_t> neighborhood;
    DistortedAlgebra local;
    OperatorSubspace embedded;
};

std::vector<NeighborhoodAlgebra> minimal_neighborhood_sets(const DensityMatrix& rho,
                                                           const NeighborhoodStructure& N);

// Full-rank targets: stabilizable exactly when the embedded minimal sets
// intersect on span{rho}. Rank-deficient mixed targets run the same
// uniqueness test with each minimal set built on the local support; the
// report's support_condition flag records whether the stronger
// every-input convergence hypothesis also holds.
QlsReport is_qls_full_rank(const DensityMatrix& rho, const NeighborhoodStructure& N);

// Dispatches on the rank of rho: pure, full-rank, or general.
QlsReport is_qls(const DensityMatrix& rho, const NeighborhoodStructure& N);

// One projection channel per neighborhood, each leaving rho invariant:
// support resets for pure targets, conditional-expectation projections for
// full-rank ones, support-funneled compositions otherwise. Refuses to build
// for a target the decision procedure rejects unless override_check is set.
std::vector<ProjectionChannel> stabilizing_maps(const DensityMatrix& rho,
                                                const NeighborhoodStructure& N,
                                                bool override_check = false);

struct ParentHamiltonian {
    std::vector<Operator> terms;  // embedded complement projectors, one per set
    Operator total;
    std::size_t kernel_dim = 0;   // dim of the joint kernel of the terms
    bool frustration_free = false;  // ground space of the sum = joint kernel
    bool unique_ground = false;     // ... and it is exactly the target ray
};

// H_k = (I - supp projector) per neighborhood; the target is always a
// zero-energy state of every term.
ParentHamiltonian parent_hamiltonian(const DensityMatrix& psi, const NeighborhoodStructure& N);

}  // namespace qstab
