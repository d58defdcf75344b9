#pragma once

#include <utility>

#include "qstab/operator.hpp"

namespace qstab {

// Benchmark state factory. All states live on qubit registers with factor 0
// as the most significant bit of the computational basis index.

DensityMatrix ghz_state(std::size_t n);

// Equal superposition of all weight-k computational basis strings.
DensityMatrix dicke_state(std::size_t n, std::size_t k);

DensityMatrix w_state(std::size_t n);

// CZ gates along the listed edges applied to |+>^n.
DensityMatrix graph_state(std::size_t n,
                          const std::vector<std::pair<std::size_t, std::size_t>>& edges);

// exp(-beta * sum terms) / Tr. Terms must act on H, be Hermitian, and
// pairwise commute; a non-commuting pair is rejected with its indices.
DensityMatrix gibbs_commuting(const HilbertSpace& H, const std::vector<Operator>& terms,
                              double beta);

// Nearest-neighbor ZZ chain terms, embedded on the n-qubit space.
std::vector<Operator> zz_chain_terms(std::size_t n, double coupling = 1.0);

// (1-eps) |D^4_2><D^4_2| + eps |GHZ^4><GHZ^4| on four qubits.
DensityMatrix dicke_ghz_mixture(double eps);

}  // namespace qstab
