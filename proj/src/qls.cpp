#include "qstab/qls.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

namespace qstab {

namespace {

constexpr double kSupportTol = 1e-10;  // relative eigenvalue floor for supports
constexpr double kPurityTol = 1e-9;    // 1 - largest eigenvalue accepted as pure
constexpr double kMemberTol = 1e-8;    // membership / invariance residuals
constexpr double kProjTol = 0.5;       // projector eigenvalues are 0 or 1
constexpr double kZeroModeTol = 1e-10;  // absolute threshold for zero energy

std::pair<double, Vector> top_eigenpair(const Matrix& M) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(hermitize(M));
    const Eigen::Index last = es.eigenvalues().size() - 1;
    return {es.eigenvalues()(last), es.eigenvectors().col(last)};
}

void check_register(const DensityMatrix& rho, const NeighborhoodStructure& N, const char* who) {
    if (N.n != rho.space().num_factors())
        throw std::invalid_argument(std::string(who) +
                                    ": neighborhood structure does not match the register");
    if (N.neighborhoods.empty())
        throw std::invalid_argument(std::string(who) + ": no neighborhoods");
}

Vector require_pure(const DensityMatrix& rho, const char* who) {
    auto [lmax, v] = top_eigenpair(rho.mat());
    if (lmax < 1.0 - kPurityTol)
        throw std::invalid_argument(std::string(who) + ": state is not pure");
    return v;
}

// Spans {A_i (x) unit_ab} on the full space, A_i on `positions` and matrix
// units on the rest. HS-orthonormal locals stay orthonormal after the
// embedding (it permutes the Kronecker basis), so no re-orthogonalization.
OperatorSubspace pad_with_rest(const std::vector<Matrix>& locals, const HilbertSpace& H,
                               const std::vector<std::size_t>& positions) {
    const std::size_t r = H.sub_dim(H.complement(positions));
    const std::size_t d = H.dim();
    Matrix Q(d * d, locals.size() * r * r);
    Eigen::Index col = 0;
    Matrix unit = Matrix::Zero(r, r);
    for (const Matrix& A : locals)
        for (std::size_t a = 0; a < r; ++a)
            for (std::size_t b = 0; b < r; ++b) {
                unit.setZero();
                unit(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = Complex(1, 0);
                Q.col(col++) = vec(tensor_on_parts(A, unit, H, positions).mat);
            }
    return OperatorSubspace::from_wcols(Metric::hs(H), std::move(Q));
}

// Schmidt factors of rho on the neighborhood; the state itself when the
// neighborhood is the whole register (no bipartition to expand across).
std::vector<Operator> local_generators(const DensityMatrix& rho,
                                       const std::vector<std::size_t>& nb) {
    if (nb.size() == rho.space().num_factors()) return {rho.op()};
    return schmidt_span(rho.op(), nb).basis();
}

// Everything one correction map needs: the local support isometry, the
// minimal fixed-point set on the (support-compressed) neighborhood, and its
// lift padded with the full algebra on the untouched factors.
struct MapPlan {
    std::vector<std::size_t> nb;
    Matrix v_loc;            // d_N x m support isometry of the reduced state
    DistortedAlgebra inner;  // on the m-dimensional compressed space
    OperatorSubspace embedded;
};

MapPlan plan_neighborhood(const DensityMatrix& rho, const std::vector<std::size_t>& nb) {
    const HilbertSpace& H = rho.space();
    const Operator red = partial_trace(rho.op(), nb);
    Matrix v_loc = support_basis(red.mat, kSupportTol);
    const std::size_t m = static_cast<std::size_t>(v_loc.cols());
    const std::vector<Operator> W = local_generators(rho, nb);

    if (m == red.dim()) {
        DensityMatrix rho_n = DensityMatrix::validated(red);
        DistortedAlgebra local = minimal_fixed_point_set(rho_n, W);
        std::vector<Matrix> mats;
        mats.reserve(local.dim());
        for (const Operator& B : local.subspace().basis()) mats.push_back(B.mat);
        OperatorSubspace emb = pad_with_rest(mats, H, nb);
        return MapPlan{nb, std::move(v_loc), std::move(local), std::move(emb)};
    }

    // Rank-deficient reduced state: work on its support, where the reference
    // is faithful, then lift the basis back with the isometry.
    const HilbertSpace Hm({m});
    DensityMatrix rho_c =
        DensityMatrix::validated(Operator(Hm, v_loc.adjoint() * red.mat * v_loc));
    std::vector<Operator> Wc;
    Wc.reserve(W.size());
    for (const Operator& w : W) Wc.emplace_back(Hm, v_loc.adjoint() * w.mat * v_loc);
    DistortedAlgebra inner = minimal_fixed_point_set(rho_c, Wc);
    std::vector<Matrix> lifted;
    lifted.reserve(inner.dim());
    for (const Operator& B : inner.subspace().basis())
        lifted.push_back(v_loc * B.mat * v_loc.adjoint());
    OperatorSubspace emb = pad_with_rest(lifted, H, nb);
    return MapPlan{nb, std::move(v_loc), std::move(inner), std::move(emb)};
}

// sigma = rho + t Z for a Hermitian traceless meet direction Z, with t small
// enough to keep sigma positive. `floor_eig` is the smallest eigenvalue of
// rho on its support; `on_support`, when given, rejects directions leaking
// out of the support projector.
std::optional<DensityMatrix> tilted_witness(const DensityMatrix& rho, const OperatorSubspace& meet,
                                            double floor_eig, const Matrix* on_support) {
    Matrix best;
    double best_norm = 0.0;
    for (std::size_t k = 0; k < meet.dim(); ++k) {
        const Matrix Y = meet.basis_op(k).mat;
        const Matrix Z0 = Y - Y.trace() * rho.mat();
        const Matrix cand[2] = {hermitize(Z0), Complex(0, -0.5) * (Z0 - Z0.adjoint())};
        for (const Matrix& Z : cand) {
            const double nz = spectral_norm(Z);
            if (nz <= 1e-10) continue;
            if (on_support &&
                spectral_norm(Z - (*on_support) * Z * (*on_support)) > kMemberTol * nz)
                continue;
            if (nz > best_norm) {
                best_norm = nz;
                best = Z;
            }
        }
    }
    if (best_norm <= 0.0 || floor_eig <= 0.0) return std::nullopt;
    const double t = floor_eig / (2.0 * best_norm);
    return DensityMatrix::validated(Operator(rho.space(), rho.mat() + t * best));
}

}  // namespace

NeighborhoodStructure NeighborhoodStructure::make(std::size_t n,
                                                  std::vector<std::vector<std::size_t>> sets,
                                                  bool allow_full) {
    if (n == 0) throw std::invalid_argument("neighborhood structure: empty register");
    if (sets.empty()) throw std::invalid_argument("neighborhood structure: no neighborhoods");
    std::vector<bool> touched(n, false);
    bool full = false;
    for (auto& s : sets) {
        if (s.empty()) throw std::invalid_argument("neighborhood structure: empty neighborhood");
        std::sort(s.begin(), s.end());
        for (std::size_t k = 0; k + 1 < s.size(); ++k)
            if (s[k] == s[k + 1])
                throw std::invalid_argument("neighborhood structure: duplicate subsystem");
        if (s.back() >= n)
            throw std::invalid_argument("neighborhood structure: subsystem index out of range");
        for (std::size_t p : s) touched[p] = true;
        if (s.size() == n) {
            if (!allow_full)
                throw std::invalid_argument(
                    "neighborhood structure: a neighborhood covers the whole register; pass "
                    "allow_full to accept it");
            full = true;
        }
    }
    NeighborhoodStructure N;
    N.n = n;
    N.neighborhoods = std::move(sets);
    N.allow_full = allow_full;
    N.covers_all = std::all_of(touched.begin(), touched.end(), [](bool b) { return b; });
    N.has_full_set = full;
    return N;
}

NeighborhoodStructure NeighborhoodStructure::enlarged() const {
    std::vector<std::vector<std::size_t>> grown;
    grown.reserve(neighborhoods.size());
    for (const auto& base : neighborhoods) {
        std::vector<bool> in_base(n, false), in_grown(n, false);
        for (std::size_t p : base) in_base[p] = in_grown[p] = true;
        for (const auto& other : neighborhoods) {
            const bool overlaps = std::any_of(other.begin(), other.end(),
                                              [&](std::size_t p) { return in_base[p]; });
            if (!overlaps) continue;
            for (std::size_t p : other) in_grown[p] = true;
        }
        std::vector<std::size_t> s;
        for (std::size_t p = 0; p < n; ++p)
            if (in_grown[p]) s.push_back(p);
        if (std::find(grown.begin(), grown.end(), s) == grown.end()) grown.push_back(std::move(s));
    }
    return make(n, std::move(grown), true);
}

Matrix neighborhood_support(const DensityMatrix& rho,
                            const std::vector<std::size_t>& neighborhood) {
    const HilbertSpace& H = rho.space();
    H.check_positions(neighborhood);
    const Operator red = partial_trace(rho.op(), neighborhood);
    const Matrix V = support_basis(red.mat, kSupportTol);
    return tensor_embed(Operator(H.sub_space(neighborhood), V * V.adjoint()), H, neighborhood)
        .mat;
}

QlsReport is_qls_pure(const DensityMatrix& psi, const NeighborhoodStructure& N) {
    check_register(psi, N, "is_qls_pure");
    const Vector v = require_pure(psi, "is_qls_pure");
    const HilbertSpace& H = psi.space();

    QlsReport rep;
    Matrix C;
    bool first = true;
    for (const auto& nb : N.neighborhoods) {
        const Matrix Vj = support_basis(neighborhood_support(psi, nb), kProjTol);
        rep.support_dims.push_back(static_cast<std::size_t>(Vj.cols()));
        C = first ? Vj : intersect_cols(C, Vj, config().tol.eig);
        first = false;
    }
    rep.intersection_dim = static_cast<std::size_t>(C.cols());
    rep.decision = rep.intersection_dim == 1;
    if (!rep.decision && C.cols() > 0) {
        // the intersection direction farthest from the target ray; it lives in
        // every neighborhood support, so every correction map keeps it fixed
        Vector best;
        double best_norm = -1.0;
        for (Eigen::Index k = 0; k < C.cols(); ++k) {
            Vector w = C.col(k) - v * v.dot(C.col(k));
            if (w.norm() > best_norm) {
                best_norm = w.norm();
                best = w;
            }
        }
        if (best_norm > kMemberTol) rep.witness = pure_state(H, best.normalized());
    }
    return rep;
}

std::vector<NeighborhoodAlgebra> minimal_neighborhood_sets(const DensityMatrix& rho,
                                                           const NeighborhoodStructure& N) {
    check_register(rho, N, "minimal_neighborhood_sets");
    Eigen::SelfAdjointEigenSolver<Matrix> es(hermitize(rho.mat()), Eigen::EigenvaluesOnly);
    const auto& ev = es.eigenvalues();
    if (ev(0) <= kSupportTol * ev(ev.size() - 1))
        throw std::invalid_argument("minimal_neighborhood_sets: state is not full rank");

    std::vector<NeighborhoodAlgebra> out;
    out.reserve(N.neighborhoods.size());
    for (const auto& nb : N.neighborhoods) {
        MapPlan plan = plan_neighborhood(rho, nb);
        out.push_back(
            NeighborhoodAlgebra{plan.nb, std::move(plan.inner), std::move(plan.embedded)});
    }
    return out;
}

QlsReport is_qls_full_rank(const DensityMatrix& rho, const NeighborhoodStructure& N) {
    check_register(rho, N, "is_qls_full_rank");
    const HilbertSpace& H = rho.space();
    Eigen::SelfAdjointEigenSolver<Matrix> es(hermitize(rho.mat()), Eigen::EigenvaluesOnly);
    const auto& ev = es.eigenvalues();
    const bool full_rank = ev(0) > kSupportTol * ev(ev.size() - 1);

    QlsReport rep;
    std::vector<OperatorSubspace> embedded;
    embedded.reserve(N.neighborhoods.size());

    if (full_rank) {
        for (const auto& nb : N.neighborhoods) {
            MapPlan plan = plan_neighborhood(rho, nb);
            rep.support_dims.push_back(plan.embedded.dim());
            embedded.push_back(std::move(plan.embedded));
        }
        const OperatorSubspace meet = subspace_intersect(embedded);
        rep.intersection_dim = meet.dim();
        rep.decision = meet.dim() == 1 && meet.contains(rho.op(), kMemberTol);
        if (!rep.decision && meet.dim() > 1)
            rep.witness = tilted_witness(rho, meet, ev(0), nullptr);
        return rep;
    }

    // Rank-deficient target: the same uniqueness test with each minimal set
    // built on the local support. The joint-support comparison does not gate
    // the decision (the fixed sets carry correlations the supports cannot
    // see); it is reported as the stronger every-input hypothesis.
    Matrix C;
    bool first = true;
    for (const auto& nb : N.neighborhoods) {
        MapPlan plan = plan_neighborhood(rho, nb);
        rep.support_dims.push_back(plan.embedded.dim());
        embedded.push_back(std::move(plan.embedded));
        const Matrix P =
            tensor_embed(Operator(H.sub_space(nb), plan.v_loc * plan.v_loc.adjoint()), H, nb).mat;
        const Matrix Vj = support_basis(P, kProjTol);
        C = first ? Vj : intersect_cols(C, Vj, config().tol.eig);
        first = false;
    }
    const Matrix Vg = support_basis(rho.mat(), kSupportTol);
    const Matrix Pg = Vg * Vg.adjoint();
    rep.support_condition =
        C.cols() == Vg.cols() && spectral_norm(C * C.adjoint() - Pg) < kMemberTol;

    const OperatorSubspace meet = subspace_intersect(embedded);
    rep.intersection_dim = meet.dim();
    rep.decision = meet.dim() == 1 && meet.contains(rho.op(), kMemberTol);
    if (!rep.decision && meet.dim() > 1) {
        // a second fixed state must stay on the target's support to be built
        // by a small tilt; meet directions leaking outside are skipped
        Eigen::SelfAdjointEigenSolver<Matrix> cs(hermitize(Vg.adjoint() * rho.mat() * Vg),
                                                 Eigen::EigenvaluesOnly);
        rep.witness = tilted_witness(rho, meet, cs.eigenvalues()(0), &Pg);
    }
    return rep;
}

QlsReport is_qls(const DensityMatrix& rho, const NeighborhoodStructure& N) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(hermitize(rho.mat()), Eigen::EigenvaluesOnly);
    const auto& ev = es.eigenvalues();
    if (ev(ev.size() - 1) >= 1.0 - kPurityTol) return is_qls_pure(rho, N);
    return is_qls_full_rank(rho, N);
}

std::vector<ProjectionChannel> stabilizing_maps(const DensityMatrix& rho,
                                                const NeighborhoodStructure& N,
                                                bool override_check) {
    check_register(rho, N, "stabilizing_maps");
    const HilbertSpace& H = rho.space();
    const QlsReport rep = is_qls(rho, N);
    if (!rep.decision && !override_check)
        throw std::runtime_error(
            "stabilizing_maps: target fails the stabilizability test; pass override_check to "
            "build the maps anyway");

    Eigen::SelfAdjointEigenSolver<Matrix> es(hermitize(rho.mat()), Eigen::EigenvaluesOnly);
    const auto& ev = es.eigenvalues();
    const bool pure = ev(ev.size() - 1) >= 1.0 - kPurityTol;

    std::vector<ProjectionChannel> maps;
    maps.reserve(N.neighborhoods.size());
    for (const auto& nb : N.neighborhoods) {
        if (pure) {
            const Operator red = partial_trace(rho.op(), nb);
            const Matrix v = support_basis(red.mat, kSupportTol);
            ProjectionChannel local = reset_map(H.sub_space(nb), v * v.adjoint());
            std::vector<Matrix> units;
            units.reserve(static_cast<std::size_t>(v.cols() * v.cols()));
            for (Eigen::Index p = 0; p < v.cols(); ++p)
                for (Eigen::Index q = 0; q < v.cols(); ++q)
                    units.push_back(v.col(p) * v.col(q).adjoint());
            maps.push_back(ProjectionChannel{ProjectionMethod::Reset,
                                             embed_neighborhood(local.channel, H, nb),
                                             pad_with_rest(units, H, nb)});
        } else {
            MapPlan plan = plan_neighborhood(rho, nb);
            const bool compressed = plan.v_loc.cols() < plan.v_loc.rows();
            const BlockDecomposition bd = block_decompose(plan.inner);
            ProjectionChannel local = compressed
                                          ? composed_projection(H.sub_space(nb), plan.v_loc, bd)
                                          : direct_projection(bd);
            maps.push_back(ProjectionChannel{
                compressed ? ProjectionMethod::Composed : ProjectionMethod::Direct,
                embed_neighborhood(local.channel, H, nb), std::move(plan.embedded)});
        }
        const double drift = trace_norm(maps.back().channel.apply(rho.mat()) - rho.mat());
        if (drift > kMemberTol)
            throw std::runtime_error("stabilizing_maps: synthesized map moves the target by " +
                                     std::to_string(drift));
    }
    return maps;
}

ParentHamiltonian parent_hamiltonian(const DensityMatrix& psi, const NeighborhoodStructure& N) {
    check_register(psi, N, "parent_hamiltonian");
    const Vector v = require_pure(psi, "parent_hamiltonian");
    const HilbertSpace& H = psi.space();
    const std::size_t d = H.dim();

    std::vector<Operator> terms;
    terms.reserve(N.neighborhoods.size());
    Matrix total = Matrix::Zero(d, d);
    Matrix C;
    bool first = true;
    for (const auto& nb : N.neighborhoods) {
        const Matrix P = neighborhood_support(psi, nb);
        Matrix term = Matrix::Identity(d, d) - P;
        total += term;
        terms.emplace_back(H, std::move(term));
        const Matrix Vj = support_basis(P, kProjTol);
        C = first ? Vj : intersect_cols(C, Vj, config().tol.eig);
        first = false;
    }
    if ((total * v).norm() > kMemberTol)
        throw std::runtime_error("parent_hamiltonian: target is not a zero mode of every term");

    Eigen::SelfAdjointEigenSolver<Matrix> es(hermitize(total));
    std::size_t ground = 0;
    while (ground < d && es.eigenvalues()(static_cast<Eigen::Index>(ground)) < kZeroModeTol)
        ++ground;
    const std::size_t kernel = static_cast<std::size_t>(C.cols());
    const bool ff = kernel > 0 && ground == kernel;
    bool unique = ff && kernel == 1;
    if (unique) unique = std::abs(es.eigenvectors().col(0).dot(v)) > 1.0 - kMemberTol;
    return ParentHamiltonian{std::move(terms), Operator(H, std::move(total)), kernel, ff, unique};
}

}  // namespace qstab
