#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>

#include <gramor/reduction.hpp>
#include <gramor/rng.hpp>
#include <gramor/signal.hpp>

#include "testutil.hpp"

using namespace gramor;

namespace {

StochasticLinearSystem example42() {
    StochasticLinearSystem sys;
    sys.A = Matrix{{0.0, -10.0}, {1.0, -10.0}};
    sys.B = Matrix{{0.0}, {10.0}};
    sys.N = {Matrix::Zero(2, 2)};
    return sys;
}

}  // namespace

TEST_CASE("Example 4.2 reachability Gramian is diag(50, 5)") {
    auto g = reachability_gramian(example42());
    Matrix expected{{50.0, 0.0}, {0.0, 5.0}};
    CHECK((g.P - expected).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(g.clipAmount == 0.0);
}

TEST_CASE("B = 0 gives the zero Gramian") {
    auto sys = example42();
    sys.B.setZero();
    CHECK(reachability_gramian(sys).P.norm() == 0.0);
}

TEST_CASE("stability precondition failure raises a stability error") {
    StochasticLinearSystem sys;
    sys.A = Matrix::Identity(2, 2);
    sys.B = Matrix::Ones(2, 1);
    CHECK_THROWS_AS(reachability_gramian(sys), StabilityError);
}

TEST_CASE("bilinear Gramian at gamma = 1 equals the stochastic one") {
    std::mt19937_64 rng(11);
    auto bsys = testutil::random_stable_bilinear(rng, 8, 2, 1.0);
    StochasticLinearSystem ssys{bsys.A, bsys.N, bsys.B};
    auto pg = bilinear_gramian(bsys);
    auto ps = reachability_gramian(ssys);
    CHECK((pg.P - ps.P).norm() <= 1e-12 * (1.0 + ps.P.norm()));
}

TEST_CASE("gamma -> infinity recovers the standard Lyapunov solution") {
    std::mt19937_64 rng(12);
    auto bsys = testutil::random_stable_bilinear(rng, 10, 2, 1.0);
    bsys.gamma = 1e3;
    Matrix Pg = bilinear_gramian(bsys).P;
    Matrix X = solve_standard_lyapunov(bsys.A, bsys.B * bsys.B.transpose()).X;
    CHECK((bsys.gamma * bsys.gamma * Pg - X).norm() <= 1e-4 * X.norm());
}

TEST_CASE("spectral_factorize sorts descending and rebuilds P") {
    Matrix P{{5.0, 0.0}, {0.0, 50.0}};
    auto spec = spectral_factorize(P);
    CHECK(spec.eigenvalues(0) == 50.0);
    CHECK(spec.eigenvalues(1) == 5.0);
    CHECK((spec.basis * spec.eigenvalues.asDiagonal() * spec.basis.transpose() - P).norm() <=
          1e-9 * (1.0 + P.norm()));
    CHECK((spec.basis.transpose() * spec.basis - Matrix::Identity(2, 2)).norm() <= 1e-10);

    auto ident = spectral_factorize(Matrix::Identity(3, 3));
    CHECK((ident.eigenvalues.array() == 1.0).all());
}

TEST_CASE("spectral_factorize of the Example 4.3 Gramian") {
    Matrix P{{0.25, 0.25}, {0.25, 0.25}};
    auto spec = spectral_factorize(P);
    CHECK(spec.eigenvalues(0) == Catch::Approx(0.5).epsilon(1e-12));
    CHECK(spec.eigenvalues(1) == Catch::Approx(0.0).margin(1e-14));
    const double s = 1.0 / std::sqrt(2.0);
    CHECK((spec.basis.col(0).cwiseAbs() - Vector::Constant(2, s)).norm() < 1e-12);
}

TEST_CASE("spectral_factorize rejects indefinite matrices") {
    Matrix P{{1.0, 0.0}, {0.0, -1e-3}};
    CHECK_THROWS_AS(spectral_factorize(P), NonPsdError);
}

TEST_CASE("Example 4.2 OS reduction at r = 1 is exactly zero") {
    auto sys = example42();
    auto spec = spectral_factorize(reachability_gramian(sys).P);
    auto rom = galerkin_reduce(sys, spec, 1);
    CHECK(rom.reducedA(0, 0) == 0.0);
    CHECK(rom.reducedB(0, 0) == 0.0);
    CHECK(rom.reducedN[0](0, 0) == 0.0);
    CHECK(rom.method == ReductionMethod::OS);
}

TEST_CASE("r = n reduction is an orthogonal change of basis") {
    std::mt19937_64 rng(21);
    auto sys = testutil::random_stable_system(rng, 9, 2, 2);
    auto g = reachability_gramian(sys);
    auto spec = spectral_factorize(g.P);
    auto rom = galerkin_reduce(sys, spec, 9);
    auto full = spectral_abscissa(sys.A, sys.N);
    auto red = spectral_abscissa(rom.reducedA, rom.reducedN);
    CHECK(red.abscissa == Catch::Approx(full.abscissa).margin(1e-9 * (1.0 + std::abs(full.abscissa))));
    // Gramian eigenvalues agree to relative 1e-9
    auto gr = solve_generalized_lyapunov(rom.reducedA, rom.reducedN,
                                         rom.reducedB * rom.reducedB.transpose());
    auto specRed = spectral_factorize(symmetrize(gr.X));
    CHECK((specRed.eigenvalues - spec.eigenvalues).norm() <= 1e-9 * spec.eigenvalues.norm());
}

TEST_CASE("galerkin_reduce validates the order") {
    auto sys = example42();
    auto spec = spectral_factorize(reachability_gramian(sys).P);
    CHECK_THROWS_AS(galerkin_reduce(sys, spec, 0), ArgumentError);
    CHECK_THROWS_AS(galerkin_reduce(sys, spec, 3), ArgumentError);
}

TEST_CASE("GalerkinRom invariants hold on random systems") {
    std::mt19937_64 rng(31);
    auto sys = testutil::random_stable_system(rng, 12, 2, 3);
    auto spec = spectral_factorize(reachability_gramian(sys).P);
    auto rom = galerkin_reduce(sys, spec, 5);
    CHECK((rom.V.transpose() * rom.V - Matrix::Identity(5, 5)).norm() <= 1e-12);
    CHECK((rom.reducedA - rom.W.transpose() * sys.A * rom.V).norm() <=
          1e-10 * (1.0 + sys.A.norm()));
    CHECK((rom.reducedB - rom.W.transpose() * sys.B).norm() <= 1e-10 * (1.0 + sys.B.norm()));
    for (Index i = 0; i < sys.q(); ++i)
        CHECK((rom.reducedN[i] - rom.W.transpose() * sys.N[i] * rom.V).norm() <=
              1e-10 * (1.0 + sys.N[i].norm()));
}

TEST_CASE("observability Gramian closed form and residual") {
    StochasticLinearSystem sys;
    sys.A = -0.5 * Matrix::Identity(2, 2);
    sys.B = Matrix::Ones(2, 1);
    auto q = observability_gramian(sys);
    CHECK((q.P - Matrix::Identity(2, 2)).norm() < 1e-12);

    auto e42 = example42();
    auto qe = observability_gramian(e42);
    CHECK(residual_generalized(e42.A.transpose(), {Matrix::Zero(2, 2)},
                               Matrix::Identity(2, 2), qe.P) <= 1e-10);
}

TEST_CASE("BT with equal Gramians spans the OS subspace") {
    std::mt19937_64 rng(41);
    auto sys = testutil::random_stable_system(rng, 8, 1, 2);
    Matrix P = reachability_gramian(sys).P;
    auto spec = spectral_factorize(P);
    const Index r = 3;
    auto bt = balanced_truncation_reduce(sys, P, P, r);
    Matrix Vos = spec.basis.leftCols(r);
    // principal angles: singular values of Vos^T Vbt_orth
    Eigen::HouseholderQR<Matrix> qr(bt.V);
    Matrix Vbt = qr.householderQ() * Matrix::Identity(8, r);
    Eigen::BDCSVD<Matrix> svd(Vos.transpose() * Vbt);
    CHECK(svd.singularValues().minCoeff() >= 1.0 - 1e-8);
}

TEST_CASE("BT at r = n balances both Gramians") {
    std::mt19937_64 rng(42);
    auto sys = testutil::random_stable_system(rng, 6, 1, 2);
    Matrix P = reachability_gramian(sys).P;
    Matrix Q = observability_gramian(sys).P;
    auto bt = balanced_truncation_reduce(sys, P, Q, 6);
    Eigen::EigenSolver<Matrix> es(P * Q, false);
    Vector hankel = es.eigenvalues().real().cwiseMax(0.0).cwiseSqrt();
    std::sort(hankel.data(), hankel.data() + hankel.size(), std::greater<double>());
    Matrix Pb = bt.W.transpose() * P * bt.W;
    Matrix Qb = bt.V.transpose() * Q * bt.V;
    CHECK((Pb - Matrix(hankel.asDiagonal())).norm() <= 1e-8 * hankel(0));
    CHECK((Qb - Matrix(hankel.asDiagonal())).norm() <= 1e-8 * hankel(0));
}

TEST_CASE("BT biorthogonality holds for every produced ROM") {
    std::mt19937_64 rng(43);
    auto sys = testutil::random_stable_system(rng, 10, 2, 2);
    Matrix P = reachability_gramian(sys).P;
    Matrix Q = observability_gramian(sys).P;
    for (Index r : {1, 3, 5, 8}) {
        auto bt = balanced_truncation_reduce(sys, P, Q, r);
        CHECK((bt.W.transpose() * bt.V - Matrix::Identity(r, r)).norm() <= 1e-10);
    }
}

TEST_CASE("BT rejects orders past the numerical rank") {
    std::mt19937_64 rng(44);
    auto sys = testutil::random_stable_system(rng, 6, 0, 1);  // rank-1 input
    Matrix P = reachability_gramian(sys).P;                   // rank <= ... small
    Matrix Q = observability_gramian(sys).P;
    CHECK_THROWS_AS(balanced_truncation_reduce(sys, P, Q, 6), ArgumentError);
}

TEST_CASE("reduced Gramian of the Example 4.2 ROM is zero") {
    auto sys = example42();
    auto spec = spectral_factorize(reachability_gramian(sys).P);
    auto rom = galerkin_reduce(sys, spec, 1);
    Matrix Phat = reduced_gramian(rom);
    CHECK(Phat.norm() == 0.0);
}

TEST_CASE("reduced Gramian at r = n is Lambda") {
    std::mt19937_64 rng(51);
    auto sys = testutil::random_stable_system(rng, 7, 1, 2);
    auto spec = spectral_factorize(reachability_gramian(sys).P);
    auto rom = galerkin_reduce(sys, spec, 7);
    Matrix Phat = reduced_gramian(rom);
    CHECK((Phat - Matrix(spec.eigenvalues.asDiagonal())).norm() <=
          1e-9 * (1.0 + spec.eigenvalues.sum()));
}

TEST_CASE("reduced Gramian rejects unstable triples") {
    GalerkinRom rom;
    rom.V = Matrix::Identity(2, 2);
    rom.W = rom.V;
    rom.reducedA = Matrix::Identity(2, 2);
    rom.reducedN = {};
    rom.reducedB = Matrix::Ones(2, 1);
    rom.sourceDim = 2;
    CHECK_THROWS_AS(reduced_gramian(rom), ContractError);
}

TEST_CASE("Cor 4.5: tr(Phat) <= tr(Lambda_1) over random systems") {
    std::mt19937_64 rng(61);
    for (int trial = 0; trial < 10; ++trial) {
        const Index n = 4 + static_cast<Index>(rng() % 27);  // up to 30
        const Index q = static_cast<Index>(rng() % 4);       // up to 3
        auto sys = testutil::random_stable_system(rng, n, q, 2);
        auto spec = spectral_factorize(reachability_gramian(sys).P);
        for (Index r : {Index(1), n / 2 > 0 ? n / 2 : 1, n}) {
            if (r < 1 || r > n) continue;
            auto rom = galerkin_reduce(sys, spec, r);
            const double trPhat = reduced_gramian(rom).trace();
            const double trL1 = spec.eigenvalues.head(r).sum();
            CHECK(trPhat <= trL1 + 1e-9 * trL1 + 1e-13);
        }
    }
}

TEST_CASE("energy interpretation: sup E|<x, p_k>| <= sqrt(lambda_k) ||u||") {
    // Monte Carlo on a small stable system with a smooth input
    std::mt19937_64 rng(71);
    auto sys = testutil::random_stable_system(rng, 6, 1, 1);
    auto spec = spectral_factorize(reachability_gramian(sys).P);
    auto u = InputSignal::named("paper-default", 1.0);
    const double unorm = input_l2_norm(u);

    const int steps = 256, samples = 4000;
    const double h = 1.0 / steps;
    Eigen::PartialPivLU<Matrix> lu(Matrix::Identity(6, 6) - h * sys.A);
    std::vector<Matrix> dirs = {spec.basis.col(0), spec.basis.col(2), spec.basis.col(5)};
    std::vector<Index> ks = {0, 2, 5};
    Matrix sup = Matrix::Zero(2, 3);  // row 0: running |mean|, row 1: sd accumulator
    Matrix acc = Matrix::Zero(steps + 1, 3), accSq = Matrix::Zero(steps + 1, 3);
    for (int s = 0; s < samples; ++s) {
        Vector x = Vector::Zero(6);
        for (int k = 0; k < steps; ++k) {
            const double dw = std::sqrt(h) * normal_draw(3, static_cast<std::uint64_t>(s),
                                                         static_cast<std::uint32_t>(k), 0);
            Vector rhs = x + h * sys.B * Vector::Constant(1, u.eval(0, k * h)) +
                         sys.N[0] * x * dw;
            x = lu.solve(rhs);
            for (int d = 0; d < 3; ++d) {
                const double v = std::abs(dirs[static_cast<std::size_t>(d)].col(0).dot(x));
                acc(k + 1, d) += v;
                accSq(k + 1, d) += v * v;
            }
        }
    }
    for (int d = 0; d < 3; ++d) {
        for (int k = 1; k <= steps; ++k) {
            const double mean = acc(k, d) / samples;
            const double var =
                std::max(0.0, (accSq(k, d) - samples * mean * mean) / (samples - 1.0));
            const double se = std::sqrt(var / samples);
            const double lim =
                std::sqrt(spec.eigenvalues(ks[static_cast<std::size_t>(d)])) * unorm + 3.0 * se;
            CHECK(mean <= lim + 1e-12);
        }
    }
    (void)sup;
}
