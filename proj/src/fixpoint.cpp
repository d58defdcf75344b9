#include "qstab/fixpoint.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <optional>
#include <utility>

namespace qstab {

namespace {

// Splits a (dagger-closed) list of operators into Hermitian spanning parts.
void push_hermitian_parts(std::vector<Operator>& out, const HilbertSpace& H, const Matrix& X) {
    const Complex half_i(0.0, 0.5);
    out.emplace_back(H, (0.5 * (X + X.adjoint())).eval());
    out.emplace_back(H, (half_i * (X.adjoint() - X)).eval());
}

}  // namespace

FixedSpaceReport fixed_point_space(const Channel& E) {
    const HilbertSpace& H = E.space();
    const std::size_t D = H.dim() * H.dim();
    const double tol = config().tol.eig;

    Matrix A = E.superoperator() - Matrix::Identity(D, D);
    Eigen::JacobiSVD<Matrix> svd(A, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();

    std::size_t k = 0;
    for (Eigen::Index i = sv.size(); i-- > 0 && sv(i) <= tol;) ++k;
    if (k == 0) throw std::runtime_error("fixed_point_space: no fixed point within tolerance");

    std::vector<Operator> gens;
    gens.reserve(2 * k);
    for (std::size_t i = 0; i < k; ++i) {
        const Vector v = svd.matrixV().col(static_cast<Eigen::Index>(D - 1 - i));
        push_hermitian_parts(gens, H, unvec(v, H.dim(), H.dim()));
    }
    OperatorSubspace sub = OperatorSubspace::span(Metric::hs(H), gens);
    if (sub.dim() != k)
        throw std::runtime_error("fixed_point_space: fixed space is not dagger closed");

    Eigen::ComplexEigenSolver<Matrix> es(E.superoperator(), false);
    double gap = 2.0;  // largest possible |eig - 1| never exceeds 2
    bool seen_outside = false;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
        const double dist = std::abs(es.eigenvalues()(i) - Complex(1.0, 0.0));
        if (dist > tol) {
            seen_outside = true;
            gap = std::min(gap, dist);
        }
    }
    const bool warn = seen_outside && gap < 10.0 * tol;
    return FixedSpaceReport{std::move(sub), seen_outside ? gap : 2.0, warn};
}

DensityMatrix max_rank_fixed_state(const Channel& E) {
    const HilbertSpace& H = E.space();
    const std::size_t d = H.dim();
    const std::size_t D = d * d;

    Matrix M = 0.5 * (E.superoperator() + Matrix::Identity(D, D));
    const Vector v0 = vec(Matrix(Matrix::Identity(d, d) / static_cast<double>(d)));

    Vector cur = M * v0;
    bool converged = false;
    for (int step = 0; step < 15; ++step) {  // powers up to 2^15 > 1e4
        M = (M * M).eval();
        Vector nxt = M * v0;
        const double r = (nxt - cur).norm();
        cur = std::move(nxt);
        if (r < 1e-11) {
            converged = true;
            break;
        }
    }
    if (!converged)
        throw std::runtime_error("max_rank_fixed_state: damped iteration did not converge");

    Matrix X = hermitize(unvec(cur, d, d));
    Eigen::SelfAdjointEigenSolver<Matrix> es(X);
    RealVector ev = es.eigenvalues().cwiseMax(0.0);
    X = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
    X /= X.trace().real();

    DensityMatrix rho = DensityMatrix::validated(Operator(H, X));
    if (trace_norm(E.apply(rho.mat()) - rho.mat()) > 1e-8)
        throw std::runtime_error("max_rank_fixed_state: limit is not a fixed state");
    return rho;
}

OperatorSubspace schmidt_span(const Operator& X, const std::vector<std::size_t>& positions) {
    const HilbertSpace& H = X.space;
    H.check_positions(positions);
    if (positions.size() == H.num_factors())
        throw std::invalid_argument("schmidt_span: trivial bipartition (no complement)");

    const std::size_t dS = H.sub_dim(positions);
    const std::size_t dC = H.dim() / dS;
    const SplitIndex split = SplitIndex::make(H, positions);

    Matrix R(dS * dS, dC * dC);
    for (std::size_t sj = 0; sj < dS; ++sj)
        for (std::size_t si = 0; si < dS; ++si)
            for (std::size_t cj = 0; cj < dC; ++cj)
                for (std::size_t ci = 0; ci < dC; ++ci)
                    R(si + dS * sj, ci + dC * cj) =
                        X.mat(split.part_offset[si] + split.rest_offset[ci],
                              split.part_offset[sj] + split.rest_offset[cj]);

    Eigen::JacobiSVD<Matrix> svd(R, Eigen::ComputeThinU);
    const auto& sv = svd.singularValues();
    if (sv.size() == 0 || sv(0) <= 0.0)
        throw std::invalid_argument("schmidt_span: zero operator");
    Eigen::Index rank = 0;
    while (rank < sv.size() && sv(rank) > config().tol.rank * sv(0)) ++rank;

    const Metric m = Metric::hs(H.sub_space(positions));
    return OperatorSubspace::from_wcols(m, svd.matrixU().leftCols(rank));
}

Operator modular_map(const DensityMatrix& rho, double lambda, const Operator& X,
                     bool allow_singular) {
    if (X.space != rho.space())
        throw std::invalid_argument("modular_map: operator and state live on different spaces");
    const Matrix L = hermitian_power(rho.mat(), lambda, allow_singular);
    const Matrix R = hermitian_power(rho.mat(), -lambda, allow_singular);
    return Operator(X.space, (L * X.mat * R).eval());
}

DistortedAlgebra DistortedAlgebra::close(const DensityMatrix& rho_ref,
                                         const std::vector<Operator>& generators) {
    const HilbertSpace& H = rho_ref.space();
    const Matrix Rinv = hermitian_power(rho_ref.mat(), -1.0);

    std::vector<Operator> gens;
    gens.push_back(rho_ref.op());
    for (const Operator& g : generators) {
        if (g.space != H)
            throw std::invalid_argument("distorted closure: generator on a different space");
        gens.push_back(g);
        gens.push_back(g.adjoint());
    }

    const Metric m = Metric::hs(H);
    OperatorSubspace sub = OperatorSubspace::span(m, gens);
    const std::size_t cap = H.dim() * H.dim();

    for (std::size_t round = 0; sub.dim() < cap; ++round) {
        if (round > cap)
            throw std::runtime_error("distorted closure: iteration failed to stabilize");
        std::vector<Operator> next = sub.basis();
        const std::size_t k = next.size();
        for (std::size_t i = 0; i < k; ++i)
            for (std::size_t j = 0; j < k; ++j)
                next.emplace_back(H, (next[i].mat * Rinv * next[j].mat).eval());
        OperatorSubspace grown = OperatorSubspace::span(m, next);
        if (grown.dim() == k) break;
        sub = std::move(grown);
    }
    return DistortedAlgebra(std::move(sub), rho_ref);
}

double DistortedAlgebra::verify_closure() const {
    const HilbertSpace& H = space();
    const Matrix Rinv = hermitian_power(rho_.mat(), -1.0);
    const std::vector<Operator> B = sub_.basis();

    double worst = sub_.residual(rho_.op());
    for (const Operator& X : B) {
        worst = std::max(worst, sub_.residual(X.adjoint()));
        for (const Operator& Y : B)
            worst = std::max(worst, sub_.residual(Operator(H, (X.mat * Rinv * Y.mat).eval())));
    }
    return worst;
}

DistortedAlgebra minimal_fixed_point_set(const DensityMatrix& rho,
                                         const std::vector<Operator>& W) {
    DistortedAlgebra A = DistortedAlgebra::close(rho, W);
    const std::size_t cap = rho.space().dim() * rho.space().dim();

    for (std::size_t round = 0;; ++round) {
        if (round > cap)
            throw std::runtime_error("minimal_fixed_point_set: iteration failed to stabilize");
        std::vector<Operator> gens = A.subspace().basis();
        const std::size_t k = gens.size();
        for (std::size_t i = 0; i < k; ++i) gens.push_back(modular_map(rho, 0.5, gens[i]));
        DistortedAlgebra grown = DistortedAlgebra::close(rho, gens);
        if (grown.dim() == A.dim()) {
            grown.modular_invariant_ = true;
            return grown;
        }
        A = std::move(grown);
    }
}

namespace {

// Eigenvalue clustering of a Hermitian matrix: groups adjacent eigenvalues
// whose gap is below the tolerance and returns one isometry per group.
std::vector<Matrix> eig_clusters(const Matrix& Z, double gap_tol) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(Z);
    const RealVector& ev = es.eigenvalues();
    const Matrix& V = es.eigenvectors();
    std::vector<Matrix> groups;
    Eigen::Index start = 0;
    for (Eigen::Index i = 1; i <= ev.size(); ++i) {
        if (i == ev.size() || ev(i) - ev(i - 1) > gap_tol) {
            groups.push_back(V.middleCols(start, i - start));
            start = i;
        }
    }
    return groups;
}

// Hermitian orthonormal basis of a dagger-closed subspace.
std::vector<Operator> hermitian_algebra_basis(const OperatorSubspace& sub) {
    std::vector<Operator> parts;
    const HilbertSpace& H = sub.space();
    for (std::size_t i = 0; i < sub.dim(); ++i)
        push_hermitian_parts(parts, H, sub.basis_op(i).mat);
    OperatorSubspace hs = OperatorSubspace::span(sub.metric(), parts);
    if (hs.dim() != sub.dim())
        throw std::runtime_error("block_decompose: subspace is not dagger closed");
    return hs.basis();
}

std::vector<Matrix> sample_center_blocks(const std::vector<Operator>& zbasis, Rng rng,
                                         std::size_t want) {
    for (int attempt = 0; attempt < 8; ++attempt) {
        Matrix Z = Matrix::Zero(zbasis.front().dim(), zbasis.front().dim());
        for (const Operator& B : zbasis) Z += (1.0 + rng.next_double()) * B.mat;
        const double spread = spectral_norm(Z);
        auto groups = eig_clusters(Z, 1e-6 * std::max(1.0, spread));
        if (groups.size() == want) return groups;
    }
    throw std::runtime_error("block_decompose: center clustering failed");
}

}  // namespace

BlockDecomposition block_decompose(const DistortedAlgebra& A, std::uint64_t seed) {
    const HilbertSpace& H = A.space();
    const std::size_t d = H.dim();
    const Matrix& rho = A.rho_ref().mat();

    Eigen::SelfAdjointEigenSolver<Matrix> rs(rho);
    if (rs.eigenvalues()(0) <= 1e-12 * rs.eigenvalues()(rs.eigenvalues().size() - 1))
        throw std::invalid_argument("block_decompose: full-rank reference state required");
    const Matrix rmh = hermitian_power(rho, -0.5);

    // Undistorted picture: a unital, dagger-closed matrix algebra.
    const Metric m = Metric::hs(H);
    std::vector<Operator> ugens;
    for (std::size_t i = 0; i < A.dim(); ++i)
        ugens.emplace_back(H, (rmh * A.subspace().basis_op(i).mat * rmh).eval());
    OperatorSubspace Au = OperatorSubspace::span(m, ugens);
    if (Au.dim() != A.dim())
        throw std::runtime_error("block_decompose: undistortion changed the dimension");
    if (Au.residual(identity_op(H)) > 1e-8)
        throw std::runtime_error("block_decompose: algebra does not contain the identity");

    // Commutant via the kernel of the stacked commutator maps.
    const Matrix Id = Matrix::Identity(d, d);
    Matrix Msum = Matrix::Zero(d * d, d * d);
    for (std::size_t i = 0; i < Au.dim(); ++i) {
        const Matrix G = Au.basis_op(i).mat;
        const Matrix L = kron(Id, G) - kron(G.transpose(), Id);
        Msum += L.adjoint() * L;
    }
    Eigen::SelfAdjointEigenSolver<Matrix> cs(Msum);
    const double cthr = std::max(cs.eigenvalues().maxCoeff(), 1e-6) * 1e-10;
    Eigen::Index cdim = 0;
    while (cdim < cs.eigenvalues().size() && cs.eigenvalues()(cdim) < cthr) ++cdim;
    const Matrix comm_w = cs.eigenvectors().leftCols(cdim);

    // Center = algebra intersected with its commutant, then a Hermitian basis.
    const Matrix center_w = intersect_cols(Au.wcols(), comm_w, config().tol.eig);
    const std::size_t nblocks = static_cast<std::size_t>(center_w.cols());
    if (nblocks == 0) throw std::runtime_error("block_decompose: empty center");
    std::vector<Operator> cgens;
    for (Eigen::Index c = 0; c < center_w.cols(); ++c)
        push_hermitian_parts(cgens, H, unvec(center_w.col(c), d, d));
    const std::vector<Operator> zbasis =
        hermitian_algebra_basis(OperatorSubspace::span(m, cgens));

    // Two independent draws of a generic central element must give the same
    // block projectors.
    auto draw1 = sample_center_blocks(zbasis, Rng(Rng::hash(seed, 1)), nblocks);
    auto draw2 = sample_center_blocks(zbasis, Rng(Rng::hash(seed, 2)), nblocks);
    for (const Matrix& V : draw1) {
        bool matched = false;
        for (const Matrix& U : draw2)
            if (V.cols() == U.cols() &&
                spectral_norm(V * V.adjoint() - U * U.adjoint()) < 1e-8) {
                matched = true;
                break;
            }
        if (!matched)
            throw std::runtime_error("block_decompose: central samples disagree");
    }

    BlockDecomposition out{H, {}, Matrix::Zero(d, d), 0.0, 0.0};
    Rng brng(Rng::hash(seed, 3));

    for (const Matrix& V : draw1) {
        const std::size_t mdim = static_cast<std::size_t>(V.cols());
        const HilbertSpace Hb({mdim});
        const Metric mb = Metric::hs(Hb);

        std::vector<Operator> comp;
        for (std::size_t i = 0; i < Au.dim(); ++i)
            comp.emplace_back(Hb, (V.adjoint() * Au.basis_op(i).mat * V).eval());
        OperatorSubspace Ab = OperatorSubspace::span(mb, comp);

        const std::size_t s =
            static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(Ab.dim()))));
        if (s * s != Ab.dim())
            throw std::runtime_error("block_decompose: block is not a full matrix factor");
        if (mdim % s != 0)
            throw std::runtime_error("block_decompose: block dimensions are inconsistent");
        const std::size_t f = mdim / s;

        const std::vector<Operator> hb = hermitian_algebra_basis(Ab);

        // Generic Hermitian element: s eigenvalue groups of multiplicity f.
        std::vector<Matrix> groups;
        for (int attempt = 0; attempt < 8 && groups.empty(); ++attempt) {
            Matrix X = Matrix::Zero(mdim, mdim);
            for (const Operator& B : hb) X += (1.0 + brng.next_double()) * B.mat;
            auto g = eig_clusters(X, 1e-6 * std::max(1.0, spectral_norm(X)));
            if (g.size() != s) continue;
            bool ok = true;
            for (const Matrix& q : g) ok = ok && static_cast<std::size_t>(q.cols()) == f;
            if (ok) groups = std::move(g);
        }
        if (groups.empty())
            throw std::runtime_error("block_decompose: factor spectrum never separated");

        const Matrix VF = groups[0];             // mdim x f, coordinates of the F factor
        const Matrix P1 = VF * VF.adjoint();

        // Partial isometries connecting the first group to the others, taken
        // from a generic algebra element.
        std::vector<Matrix> T(s);
        T[0] = P1;
        for (std::size_t p = 1; p < s; ++p) {
            bool done = false;
            for (int attempt = 0; attempt < 8 && !done; ++attempt) {
                Matrix Z = Matrix::Zero(mdim, mdim);
                for (std::size_t i = 0; i < Ab.dim(); ++i)
                    Z += brng.next_cgauss() * Ab.basis_op(i).mat;
                const Matrix Pp = groups[p] * groups[p].adjoint();
                Matrix Tp = Pp * Z * P1;
                const double c = (Tp.adjoint() * Tp).trace().real() / static_cast<double>(f);
                if (c < 1e-12) continue;
                Tp /= std::sqrt(c);
                if (spectral_norm(Tp.adjoint() * Tp - P1) > 1e-7) continue;
                T[p] = std::move(Tp);
                done = true;
            }
            if (!done)
                throw std::runtime_error("block_decompose: no connecting isometry found");
        }

        Matrix Wl(mdim, s * f);
        for (std::size_t p = 0; p < s; ++p) Wl.middleCols(p * f, f) = T[p] * VF;
        if (spectral_norm(Wl.adjoint() * Wl - Matrix::Identity(s * f, s * f)) > 1e-8)
            throw std::runtime_error("block_decompose: product coordinates not orthonormal");
        const Matrix W = V * Wl;  // d x (s*f)

        // Every algebra element must look like M (x) I in these coordinates.
        const HilbertSpace Hsf({s, f});
        const Matrix If = Matrix::Identity(f, f);
        for (std::size_t i = 0; i < A.dim(); ++i) {
            const Matrix Xc = W.adjoint() * Au.basis_op(i).mat * W;
            const Matrix Ms =
                partial_trace(Operator(Hsf, Xc), {0}).mat / static_cast<double>(f);
            out.factor_residual =
                std::max(out.factor_residual, spectral_norm(Xc - kron(Ms, If)));
        }

        // rho_ref restricted to the block factorizes across (S, F).
        const Matrix rho_b = W.adjoint() * rho * W;
        const double p = rho_b.trace().real();
        if (p <= 0.0) throw std::runtime_error("block_decompose: block carries no weight");
        const Matrix rho_s = partial_trace(Operator(Hsf, rho_b), {0}).mat / p;
        const Matrix tau_f = partial_trace(Operator(Hsf, rho_b), {1}).mat / p;
        out.factor_residual = std::max(
            out.factor_residual, spectral_norm(rho_b - p * kron(rho_s, tau_f)));

        Block blk;
        blk.isometry = W;
        blk.s = s;
        blk.f = f;
        blk.rho_s = rho_s;
        blk.tau_f = tau_f;
        blk.p = p;
        out.blocks.push_back(std::move(blk));
    }

    std::stable_sort(out.blocks.begin(), out.blocks.end(), [](const Block& a, const Block& b) {
        if (a.p != b.p) return a.p > b.p;
        if (a.s != b.s) return a.s < b.s;
        return a.f < b.f;
    });

    Matrix range = Matrix::Zero(d, d);
    for (const Block& b : out.blocks) range += b.isometry * b.isometry.adjoint();
    out.remainder_projector = Matrix::Identity(d, d) - range;

    // Rebuilding the distorted algebra from the blocks must reproduce it.
    std::vector<Operator> rebuilt;
    for (const Block& b : out.blocks) {
        Matrix unit = Matrix::Zero(b.s, b.s);
        for (std::size_t pp = 0; pp < b.s; ++pp)
            for (std::size_t qq = 0; qq < b.s; ++qq) {
                unit.setZero();
                unit(pp, qq) = 1.0;
                rebuilt.emplace_back(
                    H, (b.isometry * kron(unit, b.tau_f) * b.isometry.adjoint()).eval());
            }
    }
    OperatorSubspace span_rebuilt = OperatorSubspace::span(m, rebuilt);
    out.reassembly_residual = projector_distance(span_rebuilt, A.subspace());

    return out;
}

}  // namespace qstab
