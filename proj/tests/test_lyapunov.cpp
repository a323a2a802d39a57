#include <catch2/catch_amalgamated.hpp>

#include <random>

#include <Eigen/Eigenvalues>

#include <gramor/lyapunov.hpp>

#include "testutil.hpp"

using namespace gramor;

namespace {

const Matrix kA42{{0.0, -10.0}, {1.0, -10.0}};
const Matrix kB42{{0.0}, {10.0}};

}  // namespace

TEST_CASE("Bartels-Stewart reproduces the Example 4.2 Gramian") {
    auto sol = solve_standard_lyapunov(kA42, kB42 * kB42.transpose());
    Matrix expected{{50.0, 0.0}, {0.0, 5.0}};
    CHECK((sol.X - expected).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(sol.residualNorm <= 1e-9 * (1.0 + 100.0));
    CHECK(sol.method == LyapMethod::BartelsStewart);
    CHECK(sol.iterations == 0);
}

TEST_CASE("A = -I gives X = C/2") {
    Matrix A = -Matrix::Identity(3, 3);
    auto sol = solve_standard_lyapunov(A, Matrix::Identity(3, 3));
    CHECK((sol.X - 0.5 * Matrix::Identity(3, 3)).norm() < 1e-14);
}

TEST_CASE("Example 4.3 raises a singular-pencil error") {
    Matrix A{{-1.0, -1.0}, {-1.0, -1.0}};
    Matrix C{{1.0, 1.0}, {1.0, 1.0}};
    CHECK_THROWS_AS(solve_standard_lyapunov(A, C), SingularPencilError);
}

TEST_CASE("generalized solve with N = {0} matches the standard solve") {
    std::vector<Matrix> N = {Matrix::Zero(2, 2)};
    auto sol = solve_generalized_lyapunov(kA42, N, kB42 * kB42.transpose());
    Matrix expected{{50.0, 0.0}, {0.0, 5.0}};
    CHECK((sol.X - expected).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("generalized closed form: A=-I, N=I/2, C=I gives (4/7) I") {
    const Index n = 2;
    Matrix A = -Matrix::Identity(n, n);
    std::vector<Matrix> N = {0.5 * Matrix::Identity(n, n)};
    for (auto method : {SolveOptions::Method::DirectKron, SolveOptions::Method::Splitting}) {
        SolveOptions opts;
        opts.method = method;
        auto sol = solve_generalized_lyapunov(A, N, Matrix::Identity(n, n), opts);
        CHECK((sol.X - (4.0 / 7.0) * Matrix::Identity(n, n)).norm() < 1e-11);
    }
}

TEST_CASE("splitting iteration agrees with the direct Kronecker oracle") {
    std::mt19937_64 rng(123);
    for (int trial = 0; trial < 8; ++trial) {
        const Index n = 4 + static_cast<Index>(rng() % 17);  // up to 20
        const Index q = 1 + static_cast<Index>(rng() % 3);
        auto sys = testutil::random_stable_system(rng, n, q, 2);
        Matrix C = sys.B * sys.B.transpose();
        SolveOptions direct;
        direct.method = SolveOptions::Method::DirectKron;
        SolveOptions split;
        split.method = SolveOptions::Method::Splitting;
        auto xd = solve_generalized_lyapunov(sys.A, sys.N, C, direct);
        auto xs = solve_generalized_lyapunov(sys.A, sys.N, C, split);
        CHECK((xd.X - xs.X).norm() <= 1e-8 * (1.0 + xd.X.norm()));
        CHECK(xs.method == LyapMethod::SplittingIteration);
        CHECK(xs.iterations > 0);
    }
}

TEST_CASE("returned solutions are exactly symmetric and numerically PSD") {
    std::mt19937_64 rng(99);
    auto sys = testutil::random_stable_system(rng, 12, 2, 3);
    auto sol = solve_generalized_lyapunov(sys.A, sys.N, sys.B * sys.B.transpose());
    CHECK((sol.X - sol.X.transpose()).norm() == 0.0);
    Eigen::SelfAdjointEigenSolver<Matrix> es(sol.X, Eigen::EigenvaluesOnly);
    CHECK(es.eigenvalues().minCoeff() >= -1e-10 * sol.X.trace());
}

TEST_CASE("splitting iterates are Loewner monotone for PSD C") {
    std::mt19937_64 rng(5);
    auto sys = testutil::random_stable_system(rng, 8, 2, 2);
    Matrix C = sys.B * sys.B.transpose();
    // reproduce the iteration by hand and check X_{k+1} - X_k >= 0
    SylvesterSolver solver(sys.A);
    Matrix X = Matrix::Zero(8, 8);
    for (int k = 0; k < 12; ++k) {
        Matrix rhs = C;
        for (const auto& Ni : sys.N) rhs += Ni * X * Ni.transpose();
        Matrix Xn = symmetrize(solver.solve(rhs));
        Eigen::SelfAdjointEigenSolver<Matrix> es(Xn - X, Eigen::EigenvaluesOnly);
        CHECK(es.eigenvalues().minCoeff() >= -1e-10);
        X = Xn;
    }
}

TEST_CASE("mixed sylvester degenerates to the Gramian when paired with itself") {
    std::mt19937_64 rng(42);
    auto sys = testutil::random_stable_system(rng, 10, 1, 2);
    Matrix C = sys.B * sys.B.transpose();
    auto gram = solve_generalized_lyapunov(sys.A, sys.N, C);
    auto mixed = solve_mixed_sylvester(sys.A, sys.A, sys.N, sys.N, C);
    CHECK((gram.X - mixed.X).norm() <= 1e-9 * (1.0 + gram.X.norm()));
}

TEST_CASE("mixed sylvester with an identity projection returns P") {
    std::mt19937_64 rng(43);
    auto sys = testutil::random_stable_system(rng, 9, 2, 1);
    Matrix C = sys.B * sys.B.transpose();
    auto gram = solve_generalized_lyapunov(sys.A, sys.N, C);
    // V = I: the "reduced" matrices are the originals
    auto mixed = solve_mixed_sylvester(sys.A, sys.A, sys.N, sys.N, sys.B * sys.B.transpose());
    CHECK((gram.X - mixed.X).norm() <= 1e-9 * (1.0 + gram.X.norm()));
}

TEST_CASE("mixed splitting and direct agree on rectangular problems") {
    std::mt19937_64 rng(77);
    auto sys = testutil::random_stable_system(rng, 14, 2, 2);
    // project onto a random orthonormal basis to get a stable-ish reduced triple
    Matrix G = testutil::random_matrix(rng, 14, 5);
    Eigen::HouseholderQR<Matrix> qr(G);
    Matrix V = qr.householderQ() * Matrix::Identity(14, 5);
    Matrix Ah = V.transpose() * sys.A * V;
    std::vector<Matrix> Nh;
    for (const auto& Ni : sys.N) Nh.push_back(V.transpose() * Ni * V);
    Matrix C = sys.B * (V.transpose() * sys.B).transpose();
    SolveOptions direct;
    direct.method = SolveOptions::Method::DirectKron;
    SolveOptions split;
    split.method = SolveOptions::Method::Splitting;
    auto xd = solve_mixed_sylvester(sys.A, Ah, sys.N, Nh, C, direct);
    auto xs = solve_mixed_sylvester(sys.A, Ah, sys.N, Nh, C, split);
    CHECK((xd.X - xs.X).norm() <= 1e-8 * (1.0 + xd.X.norm()));
}

TEST_CASE("residual_generalized is the literal equation residual") {
    Matrix X{{50.0, 0.0}, {0.0, 5.0}};
    CHECK(residual_generalized(kA42, {}, kB42 * kB42.transpose(), X) <= 1e-12);
    Matrix C = kB42 * kB42.transpose();
    CHECK(residual_generalized(kA42, {}, C, Matrix::Zero(2, 2)) == Catch::Approx(C.norm()));
    // perturbation by eps*I with N = 0: residual is ||eps (A + A^T)||_F
    const double eps = 1e-3;
    Matrix Xp = X + eps * Matrix::Identity(2, 2);
    CHECK(residual_generalized(kA42, {}, C, Xp) ==
          Catch::Approx((eps * (kA42 + kA42.transpose())).norm()).epsilon(1e-9));
}

TEST_CASE("divergence reports an iteration error with the last residual") {
    // unstable generalized operator: splitting blows up
    Matrix A = -0.1 * Matrix::Identity(2, 2);
    std::vector<Matrix> N = {3.0 * Matrix::Identity(2, 2)};
    SolveOptions opts;
    opts.method = SolveOptions::Method::Splitting;
    opts.maxIter = 50;
    CHECK_THROWS_AS(solve_generalized_lyapunov(A, N, Matrix::Identity(2, 2), opts),
                    IterationDivergenceError);
}
