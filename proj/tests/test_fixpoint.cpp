#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>

#include "qstab/channel.hpp"
#include "qstab/fixpoint.hpp"
#include "testutil.hpp"

using namespace qstab;
using namespace qstab::test;

namespace {

Channel pinching(const HilbertSpace& H, const Matrix& U) {
    std::vector<Matrix> ks;
    for (std::size_t k = 0; k < H.dim(); ++k)
        ks.push_back(U.col(k) * U.col(k).adjoint());
    return Channel::from_kraus(H, ks, "pinch");
}

// Independent realignment rank: collects the complement-indexed slices of X
// as plain vectors and ranks them with column-pivoted QR.
int slice_rank(const Matrix& X, std::size_t dS, std::size_t dC) {
    Matrix R(dC * dC, dS * dS);
    for (std::size_t si = 0; si < dS; ++si)
        for (std::size_t sj = 0; sj < dS; ++sj)
            for (std::size_t ci = 0; ci < dC; ++ci)
                for (std::size_t cj = 0; cj < dC; ++cj)
                    R(ci + dC * cj, si + dS * sj) = X(si * dC + ci, sj * dC + cj);
    Eigen::ColPivHouseholderQR<Matrix> qr(R);
    qr.setThreshold(1e-9);
    return static_cast<int>(qr.rank());
}

struct Planted {
    DensityMatrix rho;
    std::vector<Operator> basis;  // spanning set of the distorted algebra
    Matrix U;                     // frame unitary
};

// Two-block algebra on C^4: a full 2x2 factor on the first two frame vectors
// (weight p1, state rho1) and a scalar block carrying tau2 on the last two
// (weight p2). Elements are U (M (+) c*tau2) U^dag.
Planted planted_two_block(std::uint64_t seed) {
    const HilbertSpace H({4});
    Rng rng(seed);
    Matrix U = rng.haar_unitary(4);

    Matrix rho1(2, 2);
    rho1 << 0.75, Complex(0.1, 0.05), Complex(0.1, -0.05), 0.25;
    Matrix tau2(2, 2);
    tau2 << 0.7, 0, 0, 0.3;
    const double p1 = 0.6, p2 = 0.4;

    Matrix rho_m = Matrix::Zero(4, 4);
    rho_m.topLeftCorner(2, 2) = p1 * rho1;
    rho_m.bottomRightCorner(2, 2) = p2 * tau2;
    rho_m = U * rho_m * U.adjoint();

    std::vector<Operator> basis;
    for (int p = 0; p < 2; ++p)
        for (int q = 0; q < 2; ++q) {
            Matrix E = Matrix::Zero(4, 4);
            E(p, q) = 1.0;
            basis.emplace_back(H, (U * E * U.adjoint()).eval());
        }
    Matrix T = Matrix::Zero(4, 4);
    T.bottomRightCorner(2, 2) = tau2;
    basis.emplace_back(H, (U * T * U.adjoint()).eval());

    return Planted{DensityMatrix::validated(Operator(H, rho_m)), std::move(basis), std::move(U)};
}

const Block& block_with_s(const BlockDecomposition& bd, std::size_t s) {
    for (const Block& b : bd.blocks)
        if (b.s == s) return b;
    REQUIRE(false);
    return bd.blocks.front();
}

RealVector sorted_eigs(const Matrix& M) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(M);
    return es.eigenvalues();
}

}  // namespace

TEST_CASE("fixed space of amplitude damping is the ground projector") {
    const HilbertSpace H = qubits(1);
    Channel E = Channel::from_kraus(H, amplitude_damping(0.4), "ad");
    FixedSpaceReport rep = fixed_point_space(E);

    CHECK(rep.space.dim() == 1);
    Matrix P00 = Matrix::Zero(2, 2);
    P00(0, 0) = 1.0;
    CHECK(rep.space.residual(Operator(H, P00)) < 1e-9);
    CHECK(rep.spectral_gap == doctest::Approx(1.0 - std::sqrt(0.6)).epsilon(1e-9));
    CHECK_FALSE(rep.gap_warning);
}

TEST_CASE("identity channel fixes all of operator space") {
    const HilbertSpace H({3});
    Channel E = Channel::from_kraus(H, {Matrix::Identity(3, 3)}, "id");
    FixedSpaceReport rep = fixed_point_space(E);
    CHECK(rep.space.dim() == 9);
    CHECK(rep.spectral_gap == doctest::Approx(2.0));
    CHECK_FALSE(rep.gap_warning);
}

TEST_CASE("phase rotation fixes the diagonal and its gap is the phase distance") {
    const HilbertSpace H = qubits(1);
    const double theta = 0.3;
    Matrix U = Matrix::Identity(2, 2);
    U(1, 1) = std::exp(Complex(0, theta));
    Channel E = Channel::from_kraus(H, {U}, "rot");
    FixedSpaceReport rep = fixed_point_space(E);

    CHECK(rep.space.dim() == 2);
    CHECK(rep.space.residual(Operator(H, pauli_z())) < 1e-9);
    CHECK(rep.spectral_gap == doctest::Approx(2.0 * std::sin(theta / 2)).epsilon(1e-9));
}

TEST_CASE("a near-unit eigenvalue raises the gap warning") {
    const HilbertSpace H = qubits(1);
    const double theta = 5e-9;
    Matrix U = Matrix::Identity(2, 2);
    U(1, 1) = std::exp(Complex(0, theta));
    Channel E = Channel::from_kraus(H, {U}, "slow");
    FixedSpaceReport rep = fixed_point_space(E);

    CHECK(rep.space.dim() == 2);
    CHECK(rep.gap_warning);
    CHECK(rep.spectral_gap < 1e-8);
}

TEST_CASE("depolarizing fixes only the identity line") {
    const HilbertSpace H = qubits(1);
    Channel E = Channel::from_kraus(H, depolarizing(0.3), "dep");
    FixedSpaceReport rep = fixed_point_space(E);
    CHECK(rep.space.dim() == 1);
    CHECK(rep.space.residual(identity_op(H)) < 1e-9);
    CHECK(rep.spectral_gap == doctest::Approx(0.3).epsilon(1e-8));
}

TEST_CASE("pinching in a rotated frame fixes exactly its eigenprojector span") {
    const HilbertSpace H({3});
    Rng rng(41);
    Matrix U = rng.haar_unitary(3);
    Channel E = pinching(H, U);

    FixedSpaceReport rep = fixed_point_space(E);
    CHECK(rep.space.dim() == 3);
    for (std::size_t k = 0; k < 3; ++k) {
        Matrix P = U.col(k) * U.col(k).adjoint();
        CHECK(rep.space.residual(Operator(H, P)) < 1e-9);
    }
    CHECK(rep.space.residual(Operator(H, U.col(0) * U.col(1).adjoint())) > 0.9);
}

TEST_CASE("maximal-rank fixed state reproduces known limits") {
    const HilbertSpace H = qubits(1);

    Channel ad = Channel::from_kraus(H, amplitude_damping(0.35), "ad");
    DensityMatrix ground = max_rank_fixed_state(ad);
    Matrix P00 = Matrix::Zero(2, 2);
    P00(0, 0) = 1.0;
    CHECK(trace_norm(ground.mat() - P00) < 1e-9);

    Channel dep = Channel::from_kraus(H, depolarizing(0.25), "dep");
    DensityMatrix mixed = max_rank_fixed_state(dep);
    CHECK(trace_norm(mixed.mat() - 0.5 * Matrix::Identity(2, 2)) < 1e-9);
}

TEST_CASE("every fixed point lives inside the maximal fixed support") {
    const HilbertSpace H = qubits(2);
    Rng rng(77);
    Matrix U = rng.haar_unitary(4);
    std::vector<Matrix> ks;
    for (const Matrix& K : amplitude_damping(0.3))
        ks.push_back(U * kron(K, Matrix::Identity(2, 2)) * U.adjoint());
    Channel E = Channel::from_kraus(H, ks, "ad1");

    DensityMatrix rho = max_rank_fixed_state(E);
    Matrix V = support_basis(rho.mat(), 1e-10);
    CHECK(V.cols() == 2);
    Matrix P = V * V.adjoint();

    FixedSpaceReport rep = fixed_point_space(E);
    CHECK(rep.space.dim() == 4);
    for (std::size_t i = 0; i < rep.space.dim(); ++i) {
        const Matrix B = rep.space.basis_op(i).mat;
        CHECK(spectral_norm(B - P * B * P) < 1e-8);
    }
}

TEST_CASE("full-rank fixed spaces transform into the dual fixed algebra") {
    const HilbertSpace H3({3});
    Rng rng(913);
    std::vector<Channel> cases;
    cases.push_back(Channel::from_kraus(qubits(1), depolarizing(0.35), "dep"));
    cases.push_back(pinching(H3, rng.haar_unitary(3)));
    cases.push_back(Channel::from_kraus(H3, random_kraus(rng, 3, 3), "rand3"));

    for (const Channel& E : cases) {
        DensityMatrix rho = max_rank_fixed_state(E);
        RealVector ev = sorted_eigs(rho.mat());
        REQUIRE(ev(0) > 1e-8);  // the transform below assumes a faithful fixed state

        Matrix sq = hermitian_power(rho.mat(), 0.5);
        FixedSpaceReport fwd = fixed_point_space(E);
        FixedSpaceReport dualF = fixed_point_space(dual(E));
        CHECK(dualF.space.dim() == fwd.space.dim());

        std::vector<Operator> mapped;
        for (std::size_t i = 0; i < dualF.space.dim(); ++i)
            mapped.emplace_back(E.space(), (sq * dualF.space.basis_op(i).mat * sq).eval());
        OperatorSubspace image = OperatorSubspace::span(Metric::hs(E.space()), mapped);
        CHECK(projector_distance(image, fwd.space) < 1e-7);
    }
}

TEST_CASE("rank-deficient fixed spaces reduce to the support compression") {
    const HilbertSpace H = qubits(2);
    Rng rng(515);
    Matrix U = rng.haar_unitary(4);
    std::vector<Matrix> ks;
    for (const Matrix& K : amplitude_damping(0.45))
        ks.push_back(U * kron(K, Matrix::Identity(2, 2)) * U.adjoint());
    Channel E = Channel::from_kraus(H, ks, "ad1");

    DensityMatrix rho = max_rank_fixed_state(E);
    Matrix V = support_basis(rho.mat(), 1e-10);
    REQUIRE(V.cols() == 2);

    Channel Et = compress(E, V);
    FixedSpaceReport inner = fixed_point_space(dual(Et));
    Matrix sq = hermitian_power(rho.mat(), 0.5, true);

    std::vector<Operator> mapped;
    for (std::size_t i = 0; i < inner.space.dim(); ++i) {
        const Matrix lifted = V * inner.space.basis_op(i).mat * V.adjoint();
        mapped.emplace_back(H, (sq * lifted * sq).eval());
    }
    OperatorSubspace image = OperatorSubspace::span(Metric::hs(H), mapped);

    FixedSpaceReport full = fixed_point_space(E);
    CHECK(full.space.dim() == 4);
    CHECK(image.dim() == 4);
    CHECK(projector_distance(image, full.space) < 1e-7);
}

TEST_CASE("schmidt span of elementary product structures") {
    const HilbertSpace H = qubits(2);
    Matrix A(2, 2), B(2, 2), Cm(2, 2), D(2, 2);
    A << 1, 2, 3, 4;
    B << 0, 1, 1, 1;
    Cm << 1, 0, 0, -1;
    D << 2, 0, 0, 5;

    OperatorSubspace one = schmidt_span(Operator(H, kron(A, B)), {0});
    CHECK(one.dim() == 1);
    CHECK(one.residual(Operator(qubits(1), A)) < 1e-10);

    OperatorSubspace two = schmidt_span(Operator(H, kron(A, B) + kron(Cm, D)), {0});
    CHECK(two.dim() == 2);
    OperatorSubspace direct =
        OperatorSubspace::span(Metric::hs(qubits(1)), {Operator(qubits(1), A), Operator(qubits(1), Cm)});
    CHECK(projector_distance(two, direct) < 1e-10);

    CHECK_THROWS_AS(schmidt_span(Operator(H, Matrix::Zero(4, 4)), {0}), std::invalid_argument);
    CHECK_THROWS_AS(schmidt_span(Operator(H, kron(A, B)), {0, 1}), std::invalid_argument);
}

TEST_CASE("schmidt span dimensions of W and GHZ projectors") {
    const HilbertSpace H = qubits(3);
    Vector w = Vector::Zero(8);
    w(4) = w(2) = w(1) = 1.0 / std::sqrt(3.0);
    DensityMatrix rw = pure_state(H, w);
    Vector g = Vector::Zero(8);
    g(0) = g(7) = 1.0 / std::sqrt(2.0);
    DensityMatrix rg = pure_state(H, g);

    OperatorSubspace w0 = schmidt_span(rw.op(), {0});
    CHECK(w0.dim() == 4);
    CHECK(w0.dim() == slice_rank(rw.mat(), 2, 4));

    std::vector<Operator> full2;
    for (const Matrix& B : hermitian_basis(2)) full2.emplace_back(qubits(1), B);
    CHECK(projector_distance(w0, OperatorSubspace::span(Metric::hs(qubits(1)), full2)) < 1e-9);

    OperatorSubspace w01 = schmidt_span(rw.op(), {0, 1});
    CHECK(w01.dim() == 4);
    CHECK(w01.dim() == slice_rank(rw.mat(), 4, 2));
    for (std::size_t i = 0; i < w01.dim(); ++i)
        CHECK(w01.residual(w01.basis_op(i).adjoint()) < 1e-9);

    OperatorSubspace g0 = schmidt_span(rg.op(), {0});
    CHECK(g0.dim() == 4);
    CHECK(g0.dim() == slice_rank(rg.mat(), 2, 4));
}

TEST_CASE("modular map rescales coherences by support ratios") {
    const HilbertSpace H = qubits(1);
    Matrix rho_m(2, 2);
    rho_m << 2.0 / 3.0, 0, 0, 1.0 / 3.0;
    DensityMatrix rho = DensityMatrix::validated(Operator(H, rho_m));

    Operator out = modular_map(rho, 0.5, Operator(H, pauli_x()));
    CHECK(std::abs(out.mat(0, 1) - Complex(std::sqrt(2.0), 0)) < 1e-12);
    CHECK(std::abs(out.mat(1, 0) - Complex(1.0 / std::sqrt(2.0), 0)) < 1e-12);
    CHECK(std::abs(out.mat(0, 0)) < 1e-14);

    Operator same = modular_map(rho, 0.0, Operator(H, pauli_x()));
    CHECK(spectral_norm(same.mat - pauli_x()) < 1e-14);

    Operator twice = modular_map(rho, 0.5, out);
    Operator once = modular_map(rho, 1.0, Operator(H, pauli_x()));
    CHECK(spectral_norm(twice.mat - once.mat) < 1e-12);

    Matrix sing = Matrix::Zero(2, 2);
    sing(0, 0) = 1.0;
    DensityMatrix rs = DensityMatrix::validated(Operator(H, sing));
    CHECK_THROWS_AS(modular_map(rs, 0.5, Operator(H, pauli_z())), std::invalid_argument);
    CHECK_NOTHROW(modular_map(rs, 0.5, Operator(H, pauli_z()), true));
}

TEST_CASE("distorted closure reproduces a planted two-block algebra") {
    Planted pl = planted_two_block(2024);
    const HilbertSpace H = pl.rho.space();
    const Metric m = Metric::hs(H);
    OperatorSubspace target = OperatorSubspace::span(m, pl.basis);
    REQUIRE(target.dim() == 5);

    DistortedAlgebra whole = DistortedAlgebra::close(pl.rho, pl.basis);
    CHECK(whole.dim() == 5);
    CHECK(projector_distance(whole.subspace(), target) < 1e-9);
    CHECK(whole.verify_closure() < 1e-9);

    // A single generic element generates the same algebra.
    Matrix X(2, 2);
    X << Complex(0.3, 0.1), Complex(1.0, -0.4), Complex(0.2, 0.7), Complex(-0.5, 0.0);
    Matrix G = Matrix::Zero(4, 4);
    G.topLeftCorner(2, 2) = X;
    Matrix tau2(2, 2);
    tau2 << 0.7, 0, 0, 0.3;
    G.bottomRightCorner(2, 2) = tau2;
    DistortedAlgebra gen =
        DistortedAlgebra::close(pl.rho, {Operator(H, (pl.U * G * pl.U.adjoint()).eval())});
    CHECK(gen.dim() == 5);
    CHECK(projector_distance(gen.subspace(), target) < 1e-8);

    Matrix sing = Matrix::Zero(4, 4);
    sing(0, 0) = 1.0;
    CHECK_THROWS_AS(
        DistortedAlgebra::close(DensityMatrix::validated(Operator(H, sing)), pl.basis),
        std::invalid_argument);
}

TEST_CASE("minimal fixed-point set grows under the modular action") {
    const HilbertSpace H = qubits(1);
    Matrix rho_m(2, 2);
    rho_m << 0.7, 0, 0, 0.3;
    DensityMatrix rho = DensityMatrix::validated(Operator(H, rho_m));

    Matrix plus(2, 2);
    plus << 0.5, 0.5, 0.5, 0.5;
    Matrix sq = hermitian_power(rho_m, 0.5);
    Operator gen(H, (sq * plus * sq).eval());

    DistortedAlgebra closed = DistortedAlgebra::close(rho, {gen});
    CHECK(closed.dim() == 2);
    CHECK_FALSE(closed.modular_invariant());

    DistortedAlgebra minimal = minimal_fixed_point_set(rho, {gen});
    CHECK(minimal.dim() == 4);
    CHECK(minimal.modular_invariant());

    // Commuting generators stay put.
    DistortedAlgebra diag = minimal_fixed_point_set(rho, {Operator(H, pauli_z())});
    CHECK(diag.dim() == 2);
    for (std::size_t i = 0; i < diag.dim(); ++i) {
        Operator mm = modular_map(rho, 0.5, diag.subspace().basis_op(i));
        CHECK(diag.subspace().residual(mm) < 1e-9);
    }

    DistortedAlgebra again = minimal_fixed_point_set(rho, minimal.subspace().basis());
    CHECK(again.dim() == minimal.dim());
}

TEST_CASE("block decomposition recovers a planted two-block algebra") {
    Planted pl = planted_two_block(321);
    DistortedAlgebra A = DistortedAlgebra::close(pl.rho, pl.basis);
    REQUIRE(A.dim() == 5);

    BlockDecomposition bd = block_decompose(A);
    REQUIRE(bd.blocks.size() == 2);
    CHECK(bd.factor_residual < 1e-8);
    CHECK(bd.reassembly_residual < 1e-8);
    CHECK(spectral_norm(bd.remainder_projector) < 1e-8);

    const Block& fac = block_with_s(bd, 2);
    CHECK(fac.f == 1);
    CHECK(fac.p == doctest::Approx(0.6).epsilon(1e-8));
    Matrix P_planted = pl.U.leftCols(2) * pl.U.leftCols(2).adjoint();
    CHECK(spectral_norm(fac.isometry * fac.isometry.adjoint() - P_planted) < 1e-8);
    Matrix rho1(2, 2);
    rho1 << 0.75, Complex(0.1, 0.05), Complex(0.1, -0.05), 0.25;
    RealVector got = sorted_eigs(fac.rho_s), want = sorted_eigs(rho1);
    for (int i = 0; i < 2; ++i) CHECK(got(i) == doctest::Approx(want(i)).epsilon(1e-8));

    const Block& scal = block_with_s(bd, 1);
    CHECK(scal.f == 2);
    CHECK(scal.p == doctest::Approx(0.4).epsilon(1e-8));
    RealVector te = sorted_eigs(scal.tau_f);
    CHECK(te(0) == doctest::Approx(0.3).epsilon(1e-8));
    CHECK(te(1) == doctest::Approx(0.7).epsilon(1e-8));

    // Blocks reassemble the reference state exactly.
    Matrix rebuilt = Matrix::Zero(4, 4);
    for (const Block& b : bd.blocks)
        rebuilt += b.p * b.isometry * kron(b.rho_s, b.tau_f) * b.isometry.adjoint();
    CHECK(spectral_norm(rebuilt - pl.rho.mat()) < 1e-8);
}

TEST_CASE("block decomposition handles factors with both dimensions above one") {
    const HilbertSpace H({8});
    Rng rng(88);
    Matrix U = rng.haar_unitary(8);

    Matrix tau_a(2, 2), tau_b(2, 2);
    tau_a << 0.8, 0, 0, 0.2;
    tau_b << 0.5, 0, 0, 0.5;
    Matrix rho_a = rng.random_density(2), rho_b = rng.random_density(2);

    Matrix rho_m = Matrix::Zero(8, 8);
    rho_m.topLeftCorner(4, 4) = 0.55 * kron(rho_a, tau_a);
    rho_m.bottomRightCorner(4, 4) = 0.45 * kron(rho_b, tau_b);
    rho_m = U * rho_m * U.adjoint();
    DensityMatrix rho = DensityMatrix::validated(Operator(H, rho_m));

    std::vector<Operator> gens;
    for (int p = 0; p < 2; ++p)
        for (int q = 0; q < 2; ++q) {
            Matrix E = Matrix::Zero(2, 2);
            E(p, q) = 1.0;
            Matrix top = Matrix::Zero(8, 8), bot = Matrix::Zero(8, 8);
            top.topLeftCorner(4, 4) = kron(E, tau_a);
            bot.bottomRightCorner(4, 4) = kron(E, tau_b);
            gens.emplace_back(H, (U * top * U.adjoint()).eval());
            gens.emplace_back(H, (U * bot * U.adjoint()).eval());
        }

    DistortedAlgebra A = DistortedAlgebra::close(rho, gens);
    REQUIRE(A.dim() == 8);

    BlockDecomposition bd = block_decompose(A);
    REQUIRE(bd.blocks.size() == 2);
    for (const Block& b : bd.blocks) {
        CHECK(b.s == 2);
        CHECK(b.f == 2);
    }
    CHECK(bd.factor_residual < 1e-7);
    CHECK(bd.reassembly_residual < 1e-7);

    RealVector ta = sorted_eigs(bd.blocks[0].p > bd.blocks[1].p ? bd.blocks[0].tau_f
                                                                : bd.blocks[1].tau_f);
    CHECK(ta(0) == doctest::Approx(0.2).epsilon(1e-7));
    CHECK(ta(1) == doctest::Approx(0.8).epsilon(1e-7));
}

TEST_CASE("block decomposition degenerate shapes") {
    Rng rng(5150);

    SUBCASE("full matrix algebra is a single square block") {
        const HilbertSpace H({3});
        Matrix rho_m = rng.random_density(3);
        DensityMatrix rho = DensityMatrix::validated(Operator(H, rho_m));
        std::vector<Operator> gens;
        for (const Matrix& B : hermitian_basis(3)) gens.emplace_back(H, B);
        DistortedAlgebra A = DistortedAlgebra::close(rho, gens);
        REQUIRE(A.dim() == 9);
        BlockDecomposition bd = block_decompose(A);
        REQUIRE(bd.blocks.size() == 1);
        CHECK(bd.blocks[0].s == 3);
        CHECK(bd.blocks[0].f == 1);
        CHECK(bd.factor_residual < 1e-8);
    }

    SUBCASE("diagonal algebra splits into scalar blocks") {
        const HilbertSpace H({3});
        Matrix rho_m = Matrix::Zero(3, 3);
        rho_m.diagonal() << 0.5, 0.3, 0.2;
        DensityMatrix rho = DensityMatrix::validated(Operator(H, rho_m));
        std::vector<Operator> gens;
        for (int k = 0; k < 3; ++k) {
            Matrix E = Matrix::Zero(3, 3);
            E(k, k) = 1.0;
            gens.emplace_back(H, E);
        }
        DistortedAlgebra A = DistortedAlgebra::close(rho, gens);
        REQUIRE(A.dim() == 3);
        BlockDecomposition bd = block_decompose(A);
        REQUIRE(bd.blocks.size() == 3);
        for (const Block& b : bd.blocks) {
            CHECK(b.s == 1);
            CHECK(b.f == 1);
        }
        CHECK(bd.blocks[0].p == doctest::Approx(0.5).epsilon(1e-9));
    }

    SUBCASE("the span of rho alone is one scalar block with tau = rho") {
        const HilbertSpace H({4});
        Matrix rho_m = rng.random_density(4);
        DensityMatrix rho = DensityMatrix::validated(Operator(H, rho_m));
        DistortedAlgebra A = DistortedAlgebra::close(rho, {});
        REQUIRE(A.dim() == 1);
        BlockDecomposition bd = block_decompose(A);
        REQUIRE(bd.blocks.size() == 1);
        CHECK(bd.blocks[0].s == 1);
        CHECK(bd.blocks[0].f == 4);
        CHECK(bd.blocks[0].p == doctest::Approx(1.0).epsilon(1e-10));
        RealVector got = sorted_eigs(bd.blocks[0].tau_f), want = sorted_eigs(rho_m);
        for (int i = 0; i < 4; ++i) CHECK(got(i) == doctest::Approx(want(i)).epsilon(1e-8));
    }

    SUBCASE("rank-deficient reference state is rejected") {
        const HilbertSpace H = qubits(1);
        Matrix sing = Matrix::Zero(2, 2);
        sing(0, 0) = 1.0;
        DensityMatrix rho = DensityMatrix::validated(Operator(H, sing));
        Matrix rho_full = 0.5 * Matrix::Identity(2, 2);
        DistortedAlgebra A = DistortedAlgebra::close(
            DensityMatrix::validated(Operator(H, rho_full)), {Operator(H, pauli_z())});
        // splice in a singular reference by building the algebra over it directly
        CHECK_THROWS_AS(
            block_decompose(DistortedAlgebra::close(rho, {})), std::invalid_argument);
        (void)A;
    }
}

TEST_CASE("block decomposition is deterministic and seed-stable") {
    Planted pl = planted_two_block(999);
    DistortedAlgebra A = DistortedAlgebra::close(pl.rho, pl.basis);

    BlockDecomposition a = block_decompose(A, 123);
    BlockDecomposition b = block_decompose(A, 123);
    REQUIRE(a.blocks.size() == b.blocks.size());
    for (std::size_t i = 0; i < a.blocks.size(); ++i)
        CHECK(spectral_norm(a.blocks[i].isometry - b.blocks[i].isometry) == 0.0);

    BlockDecomposition c = block_decompose(A, 456);
    REQUIRE(c.blocks.size() == a.blocks.size());
    for (std::size_t i = 0; i < a.blocks.size(); ++i) {
        CHECK(a.blocks[i].s == c.blocks[i].s);
        CHECK(a.blocks[i].f == c.blocks[i].f);
        CHECK(a.blocks[i].p == doctest::Approx(c.blocks[i].p).epsilon(1e-9));
        CHECK(spectral_norm(a.blocks[i].isometry * a.blocks[i].isometry.adjoint() -
                            c.blocks[i].isometry * c.blocks[i].isometry.adjoint()) < 1e-8);
    }
}

TEST_CASE("fixed spaces of faithful channels are distorted algebras") {
    Rng rng(2718);
    std::vector<Channel> cases;
    cases.push_back(pinching(HilbertSpace({3}), rng.haar_unitary(3)));
    cases.push_back(Channel::from_kraus(HilbertSpace({3}), random_kraus(rng, 3, 2), "r32"));
    cases.push_back(Channel::from_kraus(HilbertSpace({4}), random_kraus(rng, 4, 3), "r43"));

    for (const Channel& E : cases) {
        DensityMatrix rho = max_rank_fixed_state(E);
        REQUIRE(sorted_eigs(rho.mat())(0) > 1e-8);

        FixedSpaceReport rep = fixed_point_space(E);
        DistortedAlgebra closed = DistortedAlgebra::close(rho, rep.space.basis());
        CHECK(closed.dim() == rep.space.dim());

        DistortedAlgebra minimal = minimal_fixed_point_set(rho, rep.space.basis());
        CHECK(minimal.dim() == rep.space.dim());

        // Dual fixed points form a unital algebra under the plain product.
        FixedSpaceReport dualF = fixed_point_space(dual(E));
        CHECK(dualF.space.residual(identity_op(E.space())) < 1e-9);
        for (std::size_t i = 0; i < dualF.space.dim(); ++i)
            for (std::size_t j = 0; j < dualF.space.dim(); ++j) {
                const Matrix prod =
                    dualF.space.basis_op(i).mat * dualF.space.basis_op(j).mat;
                CHECK(dualF.space.residual(Operator(E.space(), prod)) < 1e-8);
            }
    }
}

TEST_CASE("a shared faithful fixed state makes mixtures fix the intersection") {
    const HilbertSpace H({3});
    Rng rng(31415);
    Channel E1 = pinching(H, rng.haar_unitary(3));
    Channel E2 = pinching(H, rng.haar_unitary(3));
    Channel mix = mixture({E1, E2}, {0.5, 0.5});

    OperatorSubspace f1 = fixed_point_space(E1).space;
    OperatorSubspace f2 = fixed_point_space(E2).space;
    OperatorSubspace fm = fixed_point_space(mix).space;
    OperatorSubspace meet = subspace_intersect(f1, f2);

    CHECK(fm.dim() == meet.dim());
    CHECK(projector_distance(fm, meet) < 1e-7);
    CHECK(fm.residual(identity_op(H)) < 1e-9);
}
