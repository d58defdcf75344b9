#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/QR>

#include "qstab/operator.hpp"
#include "qstab/rng.hpp"
#include "qstab/subspace.hpp"
#include "testutil.hpp"

using namespace qstab;
using namespace qstab::test;

TEST_CASE("hilbert space basics") {
    HilbertSpace H({2, 3, 2});
    CHECK(H.dim() == 12);
    CHECK(H.num_factors() == 3);
    CHECK(H.sub_dim({0, 2}) == 4);
    CHECK(H.complement({1}) == std::vector<std::size_t>{0, 2});
    CHECK_THROWS_AS(HilbertSpace({2, 2, 2, 2, 2, 2, 2}), std::invalid_argument);  // over cap
    CHECK_THROWS_AS(H.check_positions({2, 1}), std::invalid_argument);
    CHECK_THROWS_AS(H.check_positions({5}), std::out_of_range);
}

TEST_CASE("tensor_embed matches naive bit-arithmetic oracle") {
    HilbertSpace H = qubits(3);
    Rng rng(11);

    auto naive_embed = [&](const Matrix& local, const std::vector<std::size_t>& pos) {
        const std::size_t d = H.dim();
        Matrix out = Matrix::Zero(d, d);
        auto bit = [](std::size_t x, std::size_t k) { return (x >> (2 - k)) & 1u; };
        for (std::size_t r = 0; r < d; ++r)
            for (std::size_t c = 0; c < d; ++c) {
                std::size_t lr = 0, lc = 0;
                bool diag = true;
                for (std::size_t k = 0; k < 3; ++k) {
                    const bool in = std::find(pos.begin(), pos.end(), k) != pos.end();
                    if (in) {
                        lr = 2 * lr + bit(r, k);
                        lc = 2 * lc + bit(c, k);
                    } else if (bit(r, k) != bit(c, k)) {
                        diag = false;
                    }
                }
                if (diag) out(r, c) = local(lr, lc);
            }
        return out;
    };

    SUBCASE("single-site middle factor") {
        Operator Z(qubits(1), pauli_z());
        Matrix got = tensor_embed(Z, H, {1}).mat;
        Matrix want = kron(kron(Matrix::Identity(2, 2), pauli_z()), Matrix::Identity(2, 2));
        CHECK((got - want).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
    }
    SUBCASE("non-contiguous two-site block") {
        Matrix L = rng.gaussian_matrix(4, 4);
        Operator A(qubits(2), L);
        Matrix got = tensor_embed(A, H, {0, 2}).mat;
        Matrix want = naive_embed(L, {0, 2});
        CHECK((got - want).cwiseAbs().maxCoeff() < 1e-14);
    }
    SUBCASE("embedding the identity yields the identity") {
        Matrix got = tensor_embed(identity_op(qubits(2)), H, {0, 1}).mat;
        CHECK((got - Matrix::Identity(8, 8)).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
    }
}

TEST_CASE("tensor_on_parts splits a Kronecker product across positions") {
    HilbertSpace H = qubits(3);
    Rng rng(12);
    Matrix A = rng.gaussian_matrix(2, 2);
    Matrix B = rng.gaussian_matrix(4, 4);
    // A on the middle factor, B on the outer two.
    Matrix got = tensor_on_parts(A, B, H, {1}).mat;
    // Oracle: embed A and a 4x4 operator placed at {0,2} separately, multiply.
    Matrix embA = tensor_embed(Operator(qubits(1), A), H, {1}).mat;
    Matrix embB = tensor_embed(Operator(qubits(2), B), H, {0, 2}).mat;
    CHECK((got - embA * embB).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("partial_trace") {
    SUBCASE("Bell state reduces to the maximally mixed state") {
        HilbertSpace H = qubits(2);
        Vector bell(4);
        bell << 1, 0, 0, 1;
        DensityMatrix rho = pure_state(H, bell);
        Operator r1 = partial_trace(rho.op(), {0});
        CHECK((r1.mat - 0.5 * Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-15);
    }
    SUBCASE("product operator factorizes") {
        Rng rng(13);
        Matrix A = rng.gaussian_matrix(2, 2);
        Matrix B = rng.gaussian_matrix(3, 3);
        HilbertSpace H({2, 3});
        Operator X(H, kron(A, B));
        Operator tA = partial_trace(X, {0});
        CHECK((tA.mat - B.trace() * A).cwiseAbs().maxCoeff() < 1e-13);
        Operator tB = partial_trace(X, {1});
        CHECK((tB.mat - A.trace() * B).cwiseAbs().maxCoeff() < 1e-13);
    }
    SUBCASE("trace is preserved and keep-all is the identity") {
        Rng rng(14);
        HilbertSpace H = qubits(3);
        Matrix X = rng.gaussian_matrix(8, 8);
        Operator op(H, X);
        Operator t = partial_trace(op, {0, 2});
        CHECK(std::abs(t.mat.trace() - X.trace()) < 1e-13);
        CHECK((partial_trace(op, {0, 1, 2}).mat - X).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("trace distance") {
    HilbertSpace H = qubits(1);
    Vector e0(2), e1(2);
    e0 << 1, 0;
    e1 << 0, 1;
    DensityMatrix p0 = pure_state(H, e0), p1 = pure_state(H, e1);
    CHECK(trace_distance(p0, p0) == doctest::Approx(0.0));
    CHECK(trace_distance(p0, p1) == doctest::Approx(2.0));

    // Set distance through an explicit projection-to-member map.
    auto to_p0 = [&](const Operator& x) {
        return Operator(H, x.mat.trace() * p0.mat());
    };
    CHECK(trace_distance_to_set(p1, to_p0) == doctest::Approx(2.0));
    CHECK(trace_distance_to_set(p0, p0) == doctest::Approx(0.0));
}

TEST_CASE("density matrix validation") {
    HilbertSpace H = qubits(1);
    Matrix bad(2, 2);
    bad << 1.5, 0, 0, -0.5;
    CHECK_THROWS_AS(DensityMatrix::validated(Operator(H, bad)), std::invalid_argument);
    Matrix nonherm(2, 2);
    nonherm << 0.5, 0.2, 0.0, 0.5;
    CHECK_THROWS_AS(DensityMatrix::validated(Operator(H, nonherm)), std::invalid_argument);
    CHECK_NOTHROW(DensityMatrix::validated(Operator(H, 0.5 * Matrix::Identity(2, 2))));
}

TEST_CASE("inner products") {
    HilbertSpace H = qubits(1);
    Matrix rho(2, 2);
    rho << 2.0 / 3.0, 0, 0, 1.0 / 3.0;
    Matrix xi = rho.inverse();

    Metric mxi = Metric::xi(H, xi, InnerMode::XI);
    Metric msym = Metric::xi(H, xi, InnerMode::XI_SYM);
    Operator Z(H, pauli_z());

    // Tr(Z rho^{-1} Z) = Tr(rho^{-1}) = 3/2 + 3.
    CHECK(inner(Z, Z, mxi).real() == doctest::Approx(4.5));
    CHECK(inner(Z, Z, mxi).imag() == doctest::Approx(0.0));
    CHECK(inner(Z, Z, msym).real() == doctest::Approx(4.5));

    // Literal values against direct trace evaluation for a non-commuting pair.
    Operator X(H, pauli_x());
    Operator Xpz(H, pauli_x() + 0.3 * pauli_z());
    Complex direct = (Xpz.mat * xi * X.mat).trace();
    Complex got = inner(Xpz, X, mxi);
    CHECK(std::abs(got - direct) < 1e-13);

    Metric hs = Metric::hs(H);
    CHECK(inner(X, X, hs).real() == doctest::Approx(2.0));
    CHECK_THROWS_AS(Metric::xi(H, pauli_z(), InnerMode::XI), std::invalid_argument);  // not PD
}

TEST_CASE("weighted geometry agrees with literal inner products on Hermitian pairs") {
    HilbertSpace H = qubits(1);
    Rng rng(21);
    Matrix xi = rng.random_density(2, 0.2).inverse();
    xi = hermitize(xi);
    for (InnerMode mode : {InnerMode::XI, InnerMode::XI_SYM}) {
        Metric m = Metric::xi(H, xi, mode);
        Matrix A = rng.random_hermitian(2), B = rng.random_hermitian(2);
        Complex lit = inner(Operator(H, A), Operator(H, B), m);
        Complex viaw = m.wvec(A).dot(m.wvec(B));
        CHECK(std::abs(lit - viaw) < 1e-12);
    }
}

TEST_CASE("orthonormalization") {
    HilbertSpace H = qubits(1);
    Metric hs = Metric::hs(H);

    SUBCASE("parallel generators collapse to one dimension") {
        Operator I1 = identity_op(H);
        Operator I2(H, 2.0 * Matrix::Identity(2, 2));
        auto S = OperatorSubspace::span(hs, {I1, I2});
        CHECK(S.dim() == 1);
    }
    SUBCASE("zero generators are rejected") {
        CHECK_THROWS_AS(OperatorSubspace::span(hs, {zero_op(H)}), std::invalid_argument);
    }
    SUBCASE("rank matches a pivoted-QR oracle on random generators") {
        Rng rng(22);
        HilbertSpace H2 = qubits(2);
        Metric hs2 = Metric::hs(H2);
        for (int t = 0; t < 8; ++t) {
            std::vector<Operator> gens;
            Matrix stacked(16, 5);
            // Three independent directions, two dependent combinations.
            std::vector<Matrix> raw;
            for (int k = 0; k < 3; ++k) raw.push_back(rng.gaussian_matrix(4, 4));
            raw.push_back(0.5 * raw[0] - 1.5 * raw[2]);
            raw.push_back(raw[1] + raw[2]);
            for (int k = 0; k < 5; ++k) {
                gens.emplace_back(H2, raw[k]);
                stacked.col(k) = vec(raw[k]);
            }
            auto S = OperatorSubspace::span(hs2, gens);
            Eigen::ColPivHouseholderQR<Matrix> qr(stacked);
            qr.setThreshold(1e-9);
            CHECK(S.dim() == static_cast<std::size_t>(qr.rank()));
            // Basis is orthonormal and spans the generators.
            Matrix G = S.wcols().adjoint() * S.wcols();
            CHECK((G - Matrix::Identity(S.dim(), S.dim())).cwiseAbs().maxCoeff() < 1e-12);
            for (const auto& g : gens) CHECK(S.residual(g) < 1e-10);
        }
    }
    SUBCASE("projection is idempotent and metric self-adjoint") {
        Rng rng(23);
        Matrix xi = hermitize(rng.random_density(2, 0.3).inverse());
        Metric m = Metric::xi(H, xi, InnerMode::XI);
        std::vector<Operator> gens = {Operator(H, rng.random_hermitian(2)),
                                      Operator(H, rng.random_hermitian(2))};
        auto S = OperatorSubspace::span(m, gens);
        Operator X(H, rng.gaussian_matrix(2, 2));
        Operator PX = S.project(X);
        Operator PPX = S.project(PX);
        CHECK((PX.mat - PPX.mat).cwiseAbs().maxCoeff() < 1e-12);
        // <PX, Y> = <X, PY> in the weighted coordinates.
        Operator Y(H, rng.gaussian_matrix(2, 2));
        Operator PY = S.project(Y);
        Complex a = m.wvec(PX.mat).dot(m.wvec(Y.mat));
        Complex b = m.wvec(X.mat).dot(m.wvec(PY.mat));
        CHECK(std::abs(a - b) < 1e-12);
    }
}

TEST_CASE("subspace intersection recovers a planted common operator") {
    Rng rng(31);
    HilbertSpace H = qubits(2);
    Metric hs = Metric::hs(H);
    for (int t = 0; t < 6; ++t) {
        Operator C(H, rng.gaussian_matrix(4, 4));
        std::vector<Operator> ga = {C, Operator(H, rng.gaussian_matrix(4, 4)),
                                    Operator(H, rng.gaussian_matrix(4, 4))};
        std::vector<Operator> gb = {C, Operator(H, rng.gaussian_matrix(4, 4)),
                                    Operator(H, rng.gaussian_matrix(4, 4))};
        auto A = OperatorSubspace::span(hs, ga);
        auto B = OperatorSubspace::span(hs, gb);
        auto I = subspace_intersect(A, B);
        CHECK(I.dim() == 1);
        CHECK(I.residual(C) < 1e-8);
    }
}

TEST_CASE("subspace angles") {
    HilbertSpace H = qubits(1);
    Metric hs = Metric::hs(H);
    Operator X(H, pauli_x()), Y(H, pauli_y());

    SUBCASE("identical subspaces have zero cosine") {
        auto A = OperatorSubspace::span(hs, {X, Y});
        auto angle = subspace_angle(A, A);
        CHECK(angle.cosine == doctest::Approx(0.0).epsilon(1e-9));
    }
    SUBCASE("planted rotation angle is recovered") {
        for (double theta : {0.3, 0.7, 1.2}) {
            Operator rot(H, std::cos(theta) * pauli_x() + std::sin(theta) * pauli_z());
            auto A = OperatorSubspace::span(hs, {X});
            auto B = OperatorSubspace::span(hs, {rot});
            auto angle = subspace_angle(A, B);
            // Normalized HS overlap of X and rot is cos(theta).
            CHECK(angle.cosine == doctest::Approx(std::cos(theta)).epsilon(1e-9));
        }
    }
    SUBCASE("angle modulo a planted intersection") {
        Rng rng(32);
        HilbertSpace H2 = qubits(2);
        Metric hs2 = Metric::hs(H2);
        Operator C(H2, rng.gaussian_matrix(4, 4));
        Operator D1(H2, rng.gaussian_matrix(4, 4)), D2(H2, rng.gaussian_matrix(4, 4));
        auto A = OperatorSubspace::span(hs2, {C, D1});
        auto B = OperatorSubspace::span(hs2, {C, D2});
        auto angle = subspace_angle(A, B);
        // The common direction is removed, so the cosine is strictly below 1.
        CHECK(angle.cosine < 1.0 - 1e-6);
        CHECK(angle.cosine > 0.0);
        // Cross-check against || P_A P_B P_{(A&B)^perp} ||.
        Matrix PC = subspace_intersect(A, B).projector();
        Matrix Pperp = Matrix::Identity(16, 16) - PC;
        double alt = spectral_norm(A.projector() * B.projector() * Pperp);
        CHECK(angle.cosine == doctest::Approx(alt).epsilon(1e-9));
    }
}

TEST_CASE("hermitian_power and support_basis") {
    Rng rng(41);
    Matrix rho = rng.random_density(4, 0.1);
    Matrix half = hermitian_power(rho, 0.5);
    CHECK((half * half - rho).cwiseAbs().maxCoeff() < 1e-12);
    Matrix inv = hermitian_power(rho, -1.0);
    CHECK((inv * rho - Matrix::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-10);

    // Rank-deficient input: pseudo-power only with the explicit flag.
    Matrix P = Matrix::Zero(2, 2);
    P(0, 0) = 1.0;
    CHECK_THROWS_AS(hermitian_power(P, -0.5), std::invalid_argument);
    Matrix pinv = hermitian_power(P, -1.0, true);
    CHECK((pinv - P).cwiseAbs().maxCoeff() < 1e-14);

    Matrix V = support_basis(P, 1e-10);
    CHECK(V.cols() == 1);
    CHECK(std::abs(std::abs(V(0, 0)) - 1.0) < 1e-14);
}

TEST_CASE("spectral and trace norms") {
    Matrix A(2, 2);
    A << 3, 0, 0, -4;
    CHECK(spectral_norm(A) == doctest::Approx(4.0));
    CHECK(trace_norm(A) == doctest::Approx(7.0));
    Rng rng(42);
    Matrix G = rng.gaussian_matrix(5, 5);
    Eigen::JacobiSVD<Matrix> svd(G);
    CHECK(spectral_norm(G) == doctest::Approx(svd.singularValues()(0)).epsilon(1e-10));
}
