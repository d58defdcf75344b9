#pragma once

#include "qstab/fixpoint.hpp"

namespace qstab {

enum class ProjectionMethod { Reset, Damped, Direct, Composed };

// An idempotent CPTP map together with its fixed subspace (HS metric).
struct ProjectionChannel {
    ProjectionMethod method;
    Channel channel;
    OperatorSubspace image;
};

// Reset onto the range of the orthogonal projector P: keeps the P-block of
// the input and recycles the complement's weight into the state P/tr(P).
// Fixed set: all operators supported on range(P).
ProjectionChannel reset_map(const HilbertSpace& H, const Matrix& P);

// Idempotent map with the same fixed space as E, computed by repeated
// squaring of the damped map (1-lambda) E + lambda Id and re-extracting a
// Kraus form from the limit.
ProjectionChannel cptp_projection(const Channel& E, double lambda = 0.5);

// Projection onto a block-decomposed distorted algebra: inside each block the
// second factor is traced out and replaced by its fixed state. Requires an
// empty remainder (the blocks must exhaust the space).
ProjectionChannel direct_projection(const BlockDecomposition& bd);

// Projection onto an algebra supported on a proper subspace, as a reset onto
// the support followed by the direct projection inside it. V is the support
// isometry (d x m) and `inner` the decomposition on the compressed space.
ProjectionChannel composed_projection(const HilbertSpace& H, const Matrix& V,
                                      const BlockDecomposition& inner);

// End-to-end synthesis: minimal valid fixed-point set generated by (rho, W),
// block decomposition, then a direct projection (full-rank rho) or a composed
// one (rho supported on a proper subspace; generators must live inside it).
ProjectionChannel algebra_projection(const DensityMatrix& rho, const std::vector<Operator>& W,
                                     std::uint64_t seed = kDefaultSeed);

// Largest asymmetry |<E(B_i), B_j> - <B_i, E(B_j)>| over the canonical
// Hermitian basis, measured with the literal weighted inner product.
double check_self_adjoint(const Channel& E, const Metric& metric);

// Same check in the metric weighted by rho^{-1} (the natural one for
// state-side projections; rho must be full rank). HS mode ignores rho.
double check_self_adjoint(const ProjectionChannel& E, const DensityMatrix& rho, InnerMode mode);

}  // namespace qstab
