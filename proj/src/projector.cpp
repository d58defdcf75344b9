#include "qstab/projector.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <utility>

namespace qstab {

ProjectionChannel reset_map(const HilbertSpace& H, const Matrix& P) {
    const std::size_t d = H.dim();
    if (P.rows() != static_cast<Eigen::Index>(d) || P.cols() != P.rows())
        throw std::invalid_argument("reset_map: projector has the wrong shape");
    if (!is_hermitian(P, config().tol.herm) || spectral_norm(P * P - P) > config().tol.idem)
        throw std::invalid_argument("reset_map: not an orthogonal projector");

    const Matrix U = support_basis(P, 0.5);  // eigenvalues are 0 or 1
    const std::size_t r = static_cast<std::size_t>(U.cols());
    if (r == 0) throw std::invalid_argument("reset_map: zero projector");
    const Matrix Vp = support_basis(Matrix(Matrix::Identity(d, d) - P), 0.5);

    std::vector<Matrix> ks;
    ks.push_back(U * U.adjoint());
    const double scale = 1.0 / std::sqrt(static_cast<double>(r));
    for (Eigen::Index a = 0; a < U.cols(); ++a)
        for (Eigen::Index b = 0; b < Vp.cols(); ++b)
            ks.push_back(scale * U.col(a) * Vp.col(b).adjoint());
    Channel ch = Channel::from_kraus(H, std::move(ks), "reset");

    std::vector<Operator> gens;
    for (Eigen::Index a = 0; a < U.cols(); ++a)
        for (Eigen::Index b = 0; b < U.cols(); ++b)
            gens.emplace_back(H, (U.col(a) * U.col(b).adjoint()).eval());
    OperatorSubspace image = OperatorSubspace::span(Metric::hs(H), gens);
    return ProjectionChannel{ProjectionMethod::Reset, std::move(ch), std::move(image)};
}

ProjectionChannel cptp_projection(const Channel& E, double lambda) {
    if (!(lambda > 0.0 && lambda < 1.0))
        throw std::invalid_argument("cptp_projection: damping weight must lie in (0,1)");
    const HilbertSpace& H = E.space();
    const std::size_t d = H.dim();
    const std::size_t D = d * d;

    Matrix S = (1.0 - lambda) * E.superoperator() + lambda * Matrix::Identity(D, D);
    Matrix best = S;
    double best_res = spectral_norm(S * S - S);
    // early squarings can transiently grow the residual, so keep the best
    // iterate rather than stopping at the first non-decrease
    for (int k = 0; k < 60 && best_res > config().tol.idem; ++k) {
        S = (S * S).eval();
        const double res = spectral_norm(S * S - S);
        if (res < best_res) {
            best = S;
            best_res = res;
        } else if (best_res < 1e-6) {
            break;  // rounding floor reached
        }
    }
    if (best_res > 1e-7)
        throw std::runtime_error("cptp_projection: damped powers did not become idempotent");
    S = std::move(best);

    std::vector<Matrix> ks = kraus_from_choi(choi_from_super(S, d), d, config().tol.psd, 1e-7);
    Matrix gram = Matrix::Zero(d, d);
    for (const Matrix& K : ks) gram += K.adjoint() * K;
    if (spectral_norm(gram - Matrix::Identity(d, d)) > 1e-13) {
        const Matrix fix = hermitian_power(gram, -0.5);
        for (Matrix& K : ks) K = (K * fix).eval();
    }
    Channel ch = Channel::from_kraus(H, std::move(ks),
                                     E.label().empty() ? "proj" : E.label() + "~proj");

    OperatorSubspace image = fixed_point_space(ch).space;
    return ProjectionChannel{ProjectionMethod::Damped, std::move(ch), std::move(image)};
}

ProjectionChannel direct_projection(const BlockDecomposition& bd) {
    const HilbertSpace& H = bd.space;
    if (bd.blocks.empty()) throw std::invalid_argument("direct_projection: no blocks");
    if (spectral_norm(bd.remainder_projector) > 1e-9)
        throw std::invalid_argument("direct_projection: remainder block present");

    std::vector<Matrix> ks;
    std::vector<Operator> gens;
    for (const Block& b : bd.blocks) {
        const Matrix Is = Matrix::Identity(b.s, b.s);
        Eigen::SelfAdjointEigenSolver<Matrix> es(b.tau_f);
        for (std::size_t m = 0; m < b.f; ++m) {
            const double t = es.eigenvalues()(static_cast<Eigen::Index>(m));
            if (t < 1e-14) continue;
            for (std::size_t k = 0; k < b.f; ++k) {
                const Matrix core =
                    std::sqrt(t) * es.eigenvectors().col(static_cast<Eigen::Index>(m)) *
                    es.eigenvectors().col(static_cast<Eigen::Index>(k)).adjoint();
                ks.push_back(b.isometry * kron(Is, core) * b.isometry.adjoint());
            }
        }
        Matrix unit = Matrix::Zero(b.s, b.s);
        for (std::size_t p = 0; p < b.s; ++p)
            for (std::size_t q = 0; q < b.s; ++q) {
                unit.setZero();
                unit(p, q) = 1.0;
                gens.emplace_back(H, (b.isometry * kron(unit, b.tau_f) * b.isometry.adjoint()).eval());
            }
    }
    Channel ch = Channel::from_kraus(H, std::move(ks), "direct");
    OperatorSubspace image = OperatorSubspace::span(Metric::hs(H), gens);
    return ProjectionChannel{ProjectionMethod::Direct, std::move(ch), std::move(image)};
}

ProjectionChannel composed_projection(const HilbertSpace& H, const Matrix& V,
                                      const BlockDecomposition& inner) {
    const std::size_t d = H.dim();
    const std::size_t m = static_cast<std::size_t>(V.cols());
    if (V.rows() != static_cast<Eigen::Index>(d) || m == 0 || m > d)
        throw std::invalid_argument("composed_projection: support basis has the wrong shape");
    if (spectral_norm(V.adjoint() * V - Matrix::Identity(m, m)) > 1e-10)
        throw std::invalid_argument("composed_projection: support basis is not an isometry");
    if (inner.space.dim() != m)
        throw std::invalid_argument("composed_projection: inner decomposition dimension mismatch");

    const Matrix P = V * V.adjoint();
    ProjectionChannel onto_support = reset_map(H, P);
    ProjectionChannel within = direct_projection(inner);

    std::vector<Matrix> ks;
    for (const Matrix& K : within.channel.kraus()) ks.push_back(V * K * V.adjoint());
    if (m < d) ks.push_back(Matrix::Identity(d, d) - P);
    Channel lifted = Channel::from_kraus(H, std::move(ks), "direct@supp");

    Channel comp = compose(lifted, onto_support.channel);

    std::vector<Operator> gens;
    for (std::size_t i = 0; i < within.image.dim(); ++i)
        gens.emplace_back(H, (V * within.image.basis_op(i).mat * V.adjoint()).eval());
    OperatorSubspace image = OperatorSubspace::span(Metric::hs(H), gens);
    return ProjectionChannel{ProjectionMethod::Composed, std::move(comp), std::move(image)};
}

ProjectionChannel algebra_projection(const DensityMatrix& rho, const std::vector<Operator>& W,
                                     std::uint64_t seed) {
    const HilbertSpace& H = rho.space();
    const Matrix V = support_basis(rho.mat(), 1e-10);
    const std::size_t m = static_cast<std::size_t>(V.cols());

    if (m == H.dim()) {
        DistortedAlgebra A = minimal_fixed_point_set(rho, W);
        return direct_projection(block_decompose(A, seed));
    }

    const Matrix P = V * V.adjoint();
    const HilbertSpace Hs({m});
    std::vector<Operator> Wt;
    for (const Operator& w : W) {
        const double scale = std::max(1.0, spectral_norm(w.mat));
        if (spectral_norm(w.mat - P * w.mat * P) > 1e-9 * scale)
            throw std::invalid_argument("algebra_projection: generator leaks outside the support");
        Wt.emplace_back(Hs, (V.adjoint() * w.mat * V).eval());
    }
    DensityMatrix rt = DensityMatrix::validated(Operator(Hs, (V.adjoint() * rho.mat() * V).eval()));
    DistortedAlgebra At = minimal_fixed_point_set(rt, Wt);
    return composed_projection(H, V, block_decompose(At, seed));
}

double check_self_adjoint(const Channel& E, const Metric& metric) {
    const HilbertSpace& H = E.space();
    if (!(metric.space() == H))
        throw std::invalid_argument("check_self_adjoint: metric lives on a different space");

    const std::vector<Matrix> basis = hermitian_basis(H.dim());
    std::vector<Operator> in, out;
    in.reserve(basis.size());
    out.reserve(basis.size());
    for (const Matrix& B : basis) {
        in.emplace_back(H, B);
        out.emplace_back(H, E.apply(B));
    }

    double worst = 0.0;
    for (std::size_t i = 0; i < basis.size(); ++i)
        for (std::size_t j = 0; j < basis.size(); ++j) {
            const Complex lhs = inner(out[i], in[j], metric);
            const Complex rhs = inner(in[i], out[j], metric);
            worst = std::max(worst, std::abs(lhs - rhs));
        }
    return worst;
}

double check_self_adjoint(const ProjectionChannel& E, const DensityMatrix& rho, InnerMode mode) {
    const HilbertSpace& H = E.channel.space();
    if (mode == InnerMode::HS) return check_self_adjoint(E.channel, Metric::hs(H));
    const Matrix xi = hermitian_power(rho.mat(), -1.0);
    return check_self_adjoint(E.channel, Metric::xi(H, xi, mode));
}

}  // namespace qstab
