#pragma once

#include "qstab/operator.hpp"

namespace qstab {

// ---- inner products on operator space ----

// HS is the Hilbert-Schmidt inner product. XI weights by a positive operator
// xi on one side, XI_SYM symmetrically by xi^{1/2} on both sides. The
// weighted values are the usual ones for Hermitian arguments; geometry
// (orthonormalization, projections, angles) uses the sesquilinear extension,
// which agrees with them on Hermitian pairs and is a genuine inner product on
// all of B(H).
enum class InnerMode { HS, XI, XI_SYM };

class Metric {
  public:
    static Metric hs(const HilbertSpace& H);
    // xi must be Hermitian positive definite on H.
    static Metric xi(const HilbertSpace& H, const Matrix& xi_op, InnerMode mode = InnerMode::XI);

    InnerMode mode() const { return mode_; }
    const HilbertSpace& space() const { return space_; }
    const Matrix& xi_op() const { return xi_; }

    // Weighted coordinates: w(X) such that <X,Y> = vec(w(X))^dag vec(w(Y)).
    Matrix weight(const Matrix& X) const;
    Matrix unweight(const Matrix& X) const;
    Vector wvec(const Matrix& X) const { return vec(weight(X)); }
    Matrix unwvec(const Vector& v) const;

    bool compatible(const Metric& other, double tol = 1e-12) const;

  private:
    Metric(HilbertSpace H, InnerMode m) : space_(std::move(H)), mode_(m) {}
    HilbertSpace space_;
    InnerMode mode_;
    Matrix xi_;      // empty for HS
    Matrix w_l_;     // left weight factor
    Matrix w_r_;     // right weight factor (XI_SYM only)
    Matrix w_l_inv_;
    Matrix w_r_inv_;
};

// Literal inner-product values. XI modes assume Hermitian arguments; the
// value Tr(X xi Y) (resp. Tr(X xi^{1/2} Y xi^{1/2})) is returned as computed.
Complex inner(const Operator& X, const Operator& Y, const Metric& metric);

// ---- operator subspaces ----

class OperatorSubspace {
  public:
    // Orthonormalizes the generators (modified Gram-Schmidt, two passes) in
    // the metric, dropping numerically dependent ones. Throws if every
    // generator is numerically zero.
    static OperatorSubspace span(const Metric& metric, const std::vector<Operator>& generators);
    // Adopts already-orthonormal weighted coordinates (columns of Q).
    static OperatorSubspace from_wcols(const Metric& metric, Matrix Q);

    std::size_t dim() const { return static_cast<std::size_t>(Q_.cols()); }
    const Metric& metric() const { return metric_; }
    const HilbertSpace& space() const { return metric_.space(); }
    const Matrix& wcols() const { return Q_; }

    // Orthonormal basis mapped back to operators.
    std::vector<Operator> basis() const;
    Operator basis_op(std::size_t k) const;

    // Projector on the weighted coordinate space (dim d^2 x d^2).
    Matrix projector() const { return Q_ * Q_.adjoint(); }

    // Metric-orthogonal projection of X onto the subspace.
    Operator project(const Operator& X) const;
    // Relative residual of X against the subspace (0 when contained).
    double residual(const Operator& X) const;
    bool contains(const Operator& X, double tol) const { return residual(X) <= tol; }

  private:
    OperatorSubspace(Metric m, Matrix Q) : metric_(std::move(m)), Q_(std::move(Q)) {}
    Metric metric_;
    Matrix Q_;  // weighted coordinates, orthonormal columns
};

OperatorSubspace subspace_intersect(const OperatorSubspace& A, const OperatorSubspace& B);
OperatorSubspace subspace_intersect(const std::vector<OperatorSubspace>& list);

struct SubspaceAngle {
    double cosine;   // ||P_A P_B - P_{A&B}||
    double radians;  // acos(cosine)
};

// Friedrichs angle between subspaces computed from the projector product with
// the intersection removed.
SubspaceAngle subspace_angle(const OperatorSubspace& A, const OperatorSubspace& B);

// Spectral-norm distance between the subspace projectors (same metric).
double projector_distance(const OperatorSubspace& A, const OperatorSubspace& B);

// Orthonormalizes plain vectors of C^n (two-pass MGS) with rank truncation;
// shared by Hilbert-space-level subspace work in the locality module.
Matrix orthonormal_cols(const std::vector<Vector>& gens, double rank_tol);

// Intersection of column spans (orthonormal inputs) via principal vectors.
Matrix intersect_cols(const Matrix& A, const Matrix& B, double eig_tol);

}  // namespace qstab
