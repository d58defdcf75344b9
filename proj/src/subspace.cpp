#include "qstab/subspace.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <cmath>

namespace qstab {

// ---- Metric ----

Metric Metric::hs(const HilbertSpace& H) { return Metric(H, InnerMode::HS); }

Metric Metric::xi(const HilbertSpace& H, const Matrix& xi_op, InnerMode mode) {
    if (mode == InnerMode::HS) return hs(H);
    if (static_cast<std::size_t>(xi_op.rows()) != H.dim() || xi_op.rows() != xi_op.cols())
        throw std::invalid_argument("Metric: xi shape mismatch");
    if (!is_hermitian(xi_op, 1e-9)) throw std::invalid_argument("Metric: xi not Hermitian");

    Metric m(H, mode);
    m.xi_ = hermitize(xi_op);
    Eigen::SelfAdjointEigenSolver<Matrix> es(m.xi_);
    if (es.eigenvalues().minCoeff() <= 0.0)
        throw std::invalid_argument("Metric: xi not positive definite");
    if (mode == InnerMode::XI) {
        m.w_l_ = hermitian_power(m.xi_, 0.5);
        m.w_l_inv_ = hermitian_power(m.xi_, -0.5);
    } else {
        m.w_l_ = hermitian_power(m.xi_, 0.25);
        m.w_r_ = m.w_l_;
        m.w_l_inv_ = hermitian_power(m.xi_, -0.25);
        m.w_r_inv_ = m.w_l_inv_;
    }
    return m;
}

Matrix Metric::weight(const Matrix& X) const {
    switch (mode_) {
        case InnerMode::HS: return X;
        case InnerMode::XI: return w_l_ * X;
        case InnerMode::XI_SYM: return w_l_ * X * w_r_;
    }
    throw std::logic_error("Metric::weight: bad mode");
}

Matrix Metric::unweight(const Matrix& X) const {
    switch (mode_) {
        case InnerMode::HS: return X;
        case InnerMode::XI: return w_l_inv_ * X;
        case InnerMode::XI_SYM: return w_l_inv_ * X * w_r_inv_;
    }
    throw std::logic_error("Metric::unweight: bad mode");
}

Matrix Metric::unwvec(const Vector& v) const {
    return unweight(unvec(v, space_.dim(), space_.dim()));
}

bool Metric::compatible(const Metric& other, double tol) const {
    if (space_ != other.space_ || mode_ != other.mode_) return false;
    if (mode_ == InnerMode::HS) return true;
    return (xi_ - other.xi_).cwiseAbs().maxCoeff() <= tol * xi_.cwiseAbs().maxCoeff();
}

Complex inner(const Operator& X, const Operator& Y, const Metric& metric) {
    if (X.space != metric.space() || Y.space != metric.space())
        throw std::invalid_argument("inner: space mismatch");
    switch (metric.mode()) {
        case InnerMode::HS: return (X.mat.adjoint() * Y.mat).trace();
        case InnerMode::XI: return (X.mat * metric.xi_op() * Y.mat).trace();
        case InnerMode::XI_SYM: {
            Matrix r = hermitian_power(metric.xi_op(), 0.5);
            return (X.mat * r * Y.mat * r).trace();
        }
    }
    throw std::logic_error("inner: bad mode");
}

// ---- orthonormalization ----

Matrix orthonormal_cols(const std::vector<Vector>& gens, double rank_tol) {
    if (gens.empty()) throw std::invalid_argument("orthonormal_cols: no generators");
    const Eigen::Index n = gens.front().size();
    std::vector<Vector> basis;
    bool any_nonzero = false;
    for (const Vector& g : gens) {
        if (g.size() != n) throw std::invalid_argument("orthonormal_cols: length mismatch");
        const double n0 = g.norm();
        if (n0 <= rank_tol) continue;
        any_nonzero = true;
        Vector v = g;
        for (int pass = 0; pass < 2; ++pass)
            for (const Vector& q : basis) v -= q * q.dot(v);
        if (v.norm() > rank_tol * n0) basis.push_back(v.normalized());
    }
    if (!any_nonzero) throw std::invalid_argument("orthonormal_cols: all generators numerically zero");
    Matrix Q(n, basis.size());
    for (std::size_t k = 0; k < basis.size(); ++k) Q.col(k) = basis[k];
    return Q;
}

// ---- OperatorSubspace ----

OperatorSubspace OperatorSubspace::span(const Metric& metric,
                                        const std::vector<Operator>& generators) {
    std::vector<Vector> vs;
    vs.reserve(generators.size());
    for (const Operator& g : generators) {
        if (g.space != metric.space())
            throw std::invalid_argument("OperatorSubspace::span: space mismatch");
        vs.push_back(metric.wvec(g.mat));
    }
    return OperatorSubspace(metric, orthonormal_cols(vs, config().tol.rank));
}

OperatorSubspace OperatorSubspace::from_wcols(const Metric& metric, Matrix Q) {
    const std::size_t d2 = metric.space().dim() * metric.space().dim();
    if (static_cast<std::size_t>(Q.rows()) != d2)
        throw std::invalid_argument("OperatorSubspace::from_wcols: row count mismatch");
    return OperatorSubspace(metric, std::move(Q));
}

std::vector<Operator> OperatorSubspace::basis() const {
    std::vector<Operator> ops;
    ops.reserve(dim());
    for (std::size_t k = 0; k < dim(); ++k) ops.push_back(basis_op(k));
    return ops;
}

Operator OperatorSubspace::basis_op(std::size_t k) const {
    return Operator(space(), metric_.unwvec(Q_.col(k)));
}

Operator OperatorSubspace::project(const Operator& X) const {
    if (X.space != space()) throw std::invalid_argument("project: space mismatch");
    Vector v = metric_.wvec(X.mat);
    Vector p = Q_ * (Q_.adjoint() * v);
    return Operator(space(), metric_.unwvec(p));
}

double OperatorSubspace::residual(const Operator& X) const {
    Vector v = metric_.wvec(X.mat);
    const double n = v.norm();
    if (n == 0.0) return 0.0;
    Vector r = v - Q_ * (Q_.adjoint() * v);
    return r.norm() / n;
}

// ---- intersections and angles ----

Matrix intersect_cols(const Matrix& A, const Matrix& B, double eig_tol) {
    if (A.cols() == 0 || B.cols() == 0) return Matrix(A.rows(), 0);
    // Principal vectors: singular values of A^dag B near 1 mark common
    // directions; this is the eigenvalue-1 eigenspace of P_A P_B P_A.
    Matrix M = A.adjoint() * B;
    Eigen::JacobiSVD<Matrix> svd(M, Eigen::ComputeFullU);
    const RealVector& sv = svd.singularValues();
    std::vector<Eigen::Index> idx;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv(i) * sv(i) >= 1.0 - eig_tol) idx.push_back(i);
    Matrix C(A.rows(), idx.size());
    for (std::size_t k = 0; k < idx.size(); ++k) C.col(k) = A * svd.matrixU().col(idx[k]);
    return C;
}

OperatorSubspace subspace_intersect(const OperatorSubspace& A, const OperatorSubspace& B) {
    if (!A.metric().compatible(B.metric()))
        throw std::invalid_argument("subspace_intersect: metric mismatch");
    Matrix C = intersect_cols(A.wcols(), B.wcols(), config().tol.eig);
    return OperatorSubspace::from_wcols(A.metric(), std::move(C));
}

OperatorSubspace subspace_intersect(const std::vector<OperatorSubspace>& list) {
    if (list.empty()) throw std::invalid_argument("subspace_intersect: empty list");
    OperatorSubspace acc = list.front();
    for (std::size_t k = 1; k < list.size(); ++k) acc = subspace_intersect(acc, list[k]);
    return acc;
}

SubspaceAngle subspace_angle(const OperatorSubspace& A, const OperatorSubspace& B) {
    if (!A.metric().compatible(B.metric()))
        throw std::invalid_argument("subspace_angle: metric mismatch");
    Matrix PA = A.projector();
    Matrix PB = B.projector();
    Matrix PC = subspace_intersect(A, B).projector();
    double c = spectral_norm(PA * PB - PC);
    c = std::min(1.0, std::max(0.0, c));
    return SubspaceAngle{c, std::acos(c)};
}

double projector_distance(const OperatorSubspace& A, const OperatorSubspace& B) {
    if (!A.metric().compatible(B.metric()))
        throw std::invalid_argument("projector_distance: metric mismatch");
    return spectral_norm(A.projector() - B.projector());
}

}  // namespace qstab
