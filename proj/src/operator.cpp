#include "qstab/operator.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>

namespace qstab {

Config& config() {
    static Config cfg;
    return cfg;
}

// ---- HilbertSpace ----

HilbertSpace::HilbertSpace(std::vector<std::size_t> factor_dims) : dims_(std::move(factor_dims)) {
    if (dims_.empty()) throw std::invalid_argument("HilbertSpace: no factors");
    for (std::size_t d : dims_) {
        if (d < 1) throw std::invalid_argument("HilbertSpace: factor dimension < 1");
        total_ *= d;
    }
    if (total_ > config().dim_cap)
        throw std::invalid_argument("HilbertSpace: dimension " + std::to_string(total_) +
                                    " exceeds cap " + std::to_string(config().dim_cap));
}

void HilbertSpace::check_positions(const std::vector<std::size_t>& positions) const {
    if (positions.empty()) throw std::invalid_argument("position set is empty");
    for (std::size_t k = 0; k < positions.size(); ++k) {
        if (positions[k] >= dims_.size()) throw std::out_of_range("position out of range");
        if (k > 0 && positions[k] <= positions[k - 1])
            throw std::invalid_argument("positions must be strictly ascending");
    }
}

std::size_t HilbertSpace::sub_dim(const std::vector<std::size_t>& positions) const {
    std::size_t d = 1;
    for (std::size_t p : positions) d *= dims_.at(p);
    return d;
}

std::vector<std::size_t> HilbertSpace::complement(const std::vector<std::size_t>& positions) const {
    std::vector<std::size_t> rest;
    for (std::size_t k = 0; k < dims_.size(); ++k)
        if (std::find(positions.begin(), positions.end(), k) == positions.end()) rest.push_back(k);
    return rest;
}

HilbertSpace HilbertSpace::sub_space(const std::vector<std::size_t>& positions) const {
    check_positions(positions);
    std::vector<std::size_t> d;
    for (std::size_t p : positions) d.push_back(dims_.at(p));
    return HilbertSpace(d);
}

SplitIndex SplitIndex::make(const HilbertSpace& H, const std::vector<std::size_t>& positions) {
    H.check_positions(positions);
    const auto rest = H.complement(positions);

    // Stride of factor k in the composite index (factor 0 most significant).
    std::vector<std::size_t> stride(H.num_factors(), 1);
    for (std::size_t k = H.num_factors(); k-- > 1;)
        stride[k - 1] = stride[k] * H.factor_dim(k);

    auto offsets = [&](const std::vector<std::size_t>& pos) {
        std::size_t n = 1;
        for (std::size_t p : pos) n *= H.factor_dim(p);
        std::vector<std::size_t> off(n, 0);
        for (std::size_t a = 0; a < n; ++a) {
            std::size_t rem = a, acc = 0;
            for (std::size_t k = pos.size(); k-- > 0;) {
                const std::size_t dk = H.factor_dim(pos[k]);
                acc += (rem % dk) * stride[pos[k]];
                rem /= dk;
            }
            off[a] = acc;
        }
        return off;
    };

    SplitIndex s;
    s.part_offset = offsets(positions);
    s.rest_offset = rest.empty() ? std::vector<std::size_t>{0} : offsets(rest);
    return s;
}

// ---- Operator ----

Operator::Operator(HilbertSpace s, Matrix m) : space(std::move(s)), mat(std::move(m)) {
    if (mat.rows() != mat.cols() || static_cast<std::size_t>(mat.rows()) != space.dim())
        throw std::invalid_argument("Operator: matrix shape does not match space");
}

Operator identity_op(const HilbertSpace& H) {
    return Operator(H, Matrix::Identity(H.dim(), H.dim()));
}

Operator zero_op(const HilbertSpace& H) { return Operator(H, Matrix::Zero(H.dim(), H.dim())); }

bool is_hermitian(const Matrix& M, double tol) {
    return (M - M.adjoint()).cwiseAbs().maxCoeff() <= tol;
}

Matrix hermitize(const Matrix& M) { return 0.5 * (M + M.adjoint()); }

// ---- DensityMatrix ----

DensityMatrix DensityMatrix::validated(Operator op) {
    const auto& tol = config().tol;
    if (!is_hermitian(op.mat, tol.herm))
        throw std::invalid_argument("DensityMatrix: not Hermitian");
    if (std::abs(op.mat.trace().real() - 1.0) > tol.trace || std::abs(op.mat.trace().imag()) > tol.trace)
        throw std::invalid_argument("DensityMatrix: trace not 1");
    Eigen::SelfAdjointEigenSolver<Matrix> es(hermitize(op.mat), Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -tol.psd)
        throw std::invalid_argument("DensityMatrix: negative eigenvalue");
    return DensityMatrix(std::move(op));
}

DensityMatrix DensityMatrix::trusted(Operator op) { return DensityMatrix(std::move(op)); }

DensityMatrix pure_state(const HilbertSpace& H, const Vector& psi) {
    if (static_cast<std::size_t>(psi.size()) != H.dim())
        throw std::invalid_argument("pure_state: vector length mismatch");
    const double n = psi.norm();
    if (n < 1e-14) throw std::invalid_argument("pure_state: zero vector");
    Vector u = psi / n;
    return DensityMatrix::trusted(Operator(H, u * u.adjoint()));
}

DensityMatrix maximally_mixed(const HilbertSpace& H) {
    const double d = static_cast<double>(H.dim());
    return DensityMatrix::trusted(Operator(H, Matrix::Identity(H.dim(), H.dim()) / d));
}

// ---- vectorization ----

Vector vec(const Matrix& M) {
    return Eigen::Map<const Vector>(M.data(), M.size());
}

Matrix unvec(const Vector& v, std::size_t rows, std::size_t cols) {
    if (static_cast<std::size_t>(v.size()) != rows * cols)
        throw std::invalid_argument("unvec: size mismatch");
    return Eigen::Map<const Matrix>(v.data(), rows, cols);
}

Matrix kron(const Matrix& A, const Matrix& B) {
    Matrix K(A.rows() * B.rows(), A.cols() * B.cols());
    for (Eigen::Index i = 0; i < A.rows(); ++i)
        for (Eigen::Index j = 0; j < A.cols(); ++j)
            K.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
    return K;
}

// ---- tensor-structure operations ----

Operator tensor_embed(const Operator& local, const HilbertSpace& H,
                      const std::vector<std::size_t>& positions) {
    const auto split = SplitIndex::make(H, positions);
    const std::size_t dS = split.part_offset.size();
    if (local.dim() != dS)
        throw std::invalid_argument("tensor_embed: local dimension does not match positions");

    Matrix out = Matrix::Zero(H.dim(), H.dim());
    for (std::size_t a = 0; a < dS; ++a)
        for (std::size_t b = 0; b < dS; ++b) {
            const Complex v = local.mat(a, b);
            if (v == Complex(0, 0)) continue;
            for (std::size_t e : split.rest_offset)
                out(split.part_offset[a] + e, split.part_offset[b] + e) = v;
        }
    return Operator(H, std::move(out));
}

Operator tensor_on_parts(const Matrix& A, const Matrix& B, const HilbertSpace& H,
                         const std::vector<std::size_t>& positions) {
    const auto split = SplitIndex::make(H, positions);
    const std::size_t dS = split.part_offset.size();
    const std::size_t dR = split.rest_offset.size();
    if (static_cast<std::size_t>(A.rows()) != dS || static_cast<std::size_t>(B.rows()) != dR)
        throw std::invalid_argument("tensor_on_parts: dimension mismatch");

    Matrix out = Matrix::Zero(H.dim(), H.dim());
    for (std::size_t a = 0; a < dS; ++a)
        for (std::size_t b = 0; b < dS; ++b) {
            const Complex v = A(a, b);
            if (v == Complex(0, 0)) continue;
            for (std::size_t e = 0; e < dR; ++e)
                for (std::size_t f = 0; f < dR; ++f)
                    out(split.part_offset[a] + split.rest_offset[e],
                        split.part_offset[b] + split.rest_offset[f]) = v * B(e, f);
        }
    return Operator(H, std::move(out));
}

Operator partial_trace(const Operator& X, const std::vector<std::size_t>& keep) {
    const HilbertSpace& H = X.space;
    H.check_positions(keep);
    if (keep.size() == H.num_factors()) return X;

    const auto split = SplitIndex::make(H, keep);
    const std::size_t dK = split.part_offset.size();
    Matrix out = Matrix::Zero(dK, dK);
    for (std::size_t a = 0; a < dK; ++a)
        for (std::size_t b = 0; b < dK; ++b) {
            Complex acc(0, 0);
            for (std::size_t e : split.rest_offset)
                acc += X.mat(split.part_offset[a] + e, split.part_offset[b] + e);
            out(a, b) = acc;
        }
    return Operator(H.sub_space(keep), std::move(out));
}

// ---- norms and distances ----

double spectral_norm(const Matrix& M) {
    if (M.rows() == 0 || M.cols() == 0) return 0.0;
    // Largest singular value via the Hermitian Gram matrix: accurate in
    // relative terms and much faster than a full SVD at these sizes.
    Matrix G = M.adjoint() * M;
    Eigen::SelfAdjointEigenSolver<Matrix> es(hermitize(G), Eigen::EigenvaluesOnly);
    return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

double trace_norm(const Matrix& M) {
    if (is_hermitian(M, 1e-12)) {
        Eigen::SelfAdjointEigenSolver<Matrix> es(hermitize(M), Eigen::EigenvaluesOnly);
        return es.eigenvalues().cwiseAbs().sum();
    }
    Eigen::JacobiSVD<Matrix> svd(M);
    return svd.singularValues().sum();
}

double trace_distance(const Operator& a, const Operator& b) {
    if (a.space != b.space) throw std::invalid_argument("trace_distance: space mismatch");
    return trace_norm(a.mat - b.mat);
}

double trace_distance(const DensityMatrix& a, const DensityMatrix& b) {
    return trace_distance(a.op(), b.op());
}

double trace_distance_to_set(const DensityMatrix& rho,
                             const std::function<Operator(const Operator&)>& project_to_set) {
    Operator image = project_to_set(rho.op());
    return trace_norm(rho.mat() - image.mat);
}

double trace_distance_to_set(const DensityMatrix& rho, const DensityMatrix& target) {
    return trace_distance(rho, target);
}

// ---- spectral helpers ----

Matrix support_basis(const Matrix& psd, double rel_tol) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(hermitize(psd));
    const RealVector& ev = es.eigenvalues();
    const double top = ev.cwiseAbs().maxCoeff();
    if (top <= 0.0) return Matrix(psd.rows(), 0);
    std::vector<Eigen::Index> idx;
    for (Eigen::Index i = 0; i < ev.size(); ++i)
        if (ev(i) > rel_tol * top) idx.push_back(i);
    Matrix V(psd.rows(), idx.size());
    for (std::size_t k = 0; k < idx.size(); ++k) V.col(k) = es.eigenvectors().col(idx[k]);
    return V;
}

Matrix hermitian_power(const Matrix& M, double exponent, bool allow_singular, double floor_rel) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(hermitize(M));
    const RealVector& ev = es.eigenvalues();
    const double top = ev.cwiseAbs().maxCoeff();
    const double floor = floor_rel * std::max(top, 1e-300);
    RealVector powered(ev.size());
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
        if (ev(i) <= floor) {
            if (!allow_singular)
                throw std::invalid_argument("hermitian_power: matrix is singular within floor");
            powered(i) = 0.0;
        } else {
            powered(i) = std::pow(ev(i), exponent);
        }
    }
    return es.eigenvectors() * powered.asDiagonal() * es.eigenvectors().adjoint();
}

std::vector<Matrix> hermitian_basis(std::size_t d) {
    std::vector<Matrix> basis;
    basis.reserve(d * d);
    const double s = 1.0 / std::sqrt(2.0);
    for (std::size_t i = 0; i < d; ++i) {
        Matrix E = Matrix::Zero(d, d);
        E(i, i) = 1.0;
        basis.push_back(E);
    }
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = i + 1; j < d; ++j) {
            Matrix S = Matrix::Zero(d, d);
            S(i, j) = s;
            S(j, i) = s;
            basis.push_back(S);
            Matrix A = Matrix::Zero(d, d);
            A(i, j) = Complex(0, -s);
            A(j, i) = Complex(0, s);
            basis.push_back(A);
        }
    return basis;
}

}  // namespace qstab
