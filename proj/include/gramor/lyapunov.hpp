#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Eigenvalues>

#include "gramor/errors.hpp"
#include "gramor/matrix.hpp"

namespace gramor {

enum class LyapMethod { DirectKron, SplittingIteration, BartelsStewart };

inline const char* to_string(LyapMethod m) {
    switch (m) {
        case LyapMethod::DirectKron: return "direct-kron";
        case LyapMethod::SplittingIteration: return "splitting-iteration";
        default: return "bartels-stewart";
    }
}

struct LyapunovSolution {
    Matrix X;
    double residualNorm = 0.0;  // recomputed from X, never assumed
    LyapMethod method = LyapMethod::BartelsStewart;
    int iterations = 0;         // 0 for direct solves
};

struct SolveOptions {
    enum class Method { Auto, DirectKron, Splitting };
    Method method = Method::Auto;
    Index kronCutoff = 60;   // direct Kronecker solve allowed while n < cutoff
    double stepTol = 1e-12;  // splitting step tolerance, relative
    int maxIter = 10000;
};

namespace detail {

// Quasi-triangular block starts/sizes of a real Schur form.
inline std::vector<std::pair<Index, Index>> schur_blocks(const Matrix& T) {
    std::vector<std::pair<Index, Index>> blocks;
    Index i = 0;
    while (i < T.rows()) {
        const Index sz = (i + 1 < T.rows() && T(i + 1, i) != 0.0) ? 2 : 1;
        blocks.emplace_back(i, sz);
        i += sz;
    }
    return blocks;
}

/// Back-substitution for T Y + Y S^T = F with T, S quasi upper triangular.
/// F is overwritten with Y. pivotFloor flags lambda_i(T) + lambda_j(S) ~ 0.
inline void quasi_triangular_sylvester(const Matrix& T, const Matrix& S, Matrix& F,
                                       double pivotFloor) {
    const auto bt = schur_blocks(T);
    const auto bs = schur_blocks(S);
    const Index m = T.rows(), n = S.rows();
    for (Index jb = static_cast<Index>(bs.size()) - 1; jb >= 0; --jb) {
        const auto [j0, js] = bs[static_cast<std::size_t>(jb)];
        for (Index ib = static_cast<Index>(bt.size()) - 1; ib >= 0; --ib) {
            const auto [i0, is] = bt[static_cast<std::size_t>(ib)];
            Matrix rhs = F.block(i0, j0, is, js);
            const Index ia = i0 + is;  // first row past this block
            const Index ja = j0 + js;
            if (ia < m) rhs -= T.block(i0, ia, is, m - ia) * F.block(ia, j0, m - ia, js);
            if (ja < n) rhs -= F.block(i0, ja, is, n - ja) * S.block(j0, ja, js, n - ja).transpose();
            if (is == 1 && js == 1) {
                const double piv = T(i0, i0) + S(j0, j0);
                if (std::abs(piv) <= pivotFloor)
                    throw SingularPencilError(
                        "lyapunov pencil is singular: eigenvalue pair sums to " +
                        std::to_string(piv));
                F(i0, j0) = rhs(0, 0) / piv;
            } else {
                // vec form: (I (x) T_II + S_JJ (x) I) z = vec(rhs), at most 4x4
                Matrix M = kron(Matrix::Identity(js, js), T.block(i0, i0, is, is)) +
                           kron(S.block(j0, j0, js, js), Matrix::Identity(is, is));
                Eigen::FullPivLU<Matrix> lu(M);
                const double piv = lu.matrixLU().diagonal().cwiseAbs().minCoeff();
                if (piv <= pivotFloor)
                    throw SingularPencilError(
                        "lyapunov pencil is singular on a 2x2 diagonal block, pivot " +
                        std::to_string(piv));
                Vector z = lu.solve(vec(rhs));
                F.block(i0, j0, is, js) = unvec(z, is, js);
            }
        }
    }
}

}  // namespace detail

/// Schur-based solver for A X + X B^T = -C, caching both decompositions so
/// the splitting iterations can reuse them across right-hand sides.
class SylvesterSolver {
public:
    SylvesterSolver(const Matrix& A, const Matrix& B) { init(A, B, false); }

    /// Lyapunov flavor (B = A); only one Schur decomposition is computed.
    explicit SylvesterSolver(const Matrix& A) { init(A, A, true); }

    Matrix solve(const Matrix& C) const {
        if (C.rows() == 0 || C.cols() == 0) return Matrix(C.rows(), C.cols());
        Matrix F = -(ua_.transpose() * C * ub_);
        detail::quasi_triangular_sylvester(ta_, tb_, F, pivotFloor_);
        return ua_ * F * ub_.transpose();
    }

private:
    void init(const Matrix& A, const Matrix& B, bool same) {
        if (A.rows() > 0) {
            Eigen::RealSchur<Matrix> sa(A);
            if (sa.info() != Eigen::Success)
                throw Error("real Schur decomposition of A did not converge");
            ua_ = sa.matrixU();
            ta_ = sa.matrixT();
        }
        if (same) {
            ub_ = ua_;
            tb_ = ta_;
        } else if (B.rows() > 0) {
            Eigen::RealSchur<Matrix> sb(B);
            if (sb.info() != Eigen::Success)
                throw Error("real Schur decomposition of B did not converge");
            ub_ = sb.matrixU();
            tb_ = sb.matrixT();
        }
        pivotFloor_ = 1e-13 * std::max(A.norm(), B.norm());
    }

    Matrix ua_, ta_, ub_, tb_;
    double pivotFloor_ = 0.0;
};

/// Residual norm || A X + X A^T + sum_i N_i X N_i^T + C ||_F.
inline double residual_generalized(const Matrix& A, const std::vector<Matrix>& N,
                                   const Matrix& C, const Matrix& X) {
    Matrix R = A * X + X * A.transpose() + C;
    for (const Matrix& Ni : N) R += Ni * X * Ni.transpose();
    return R.norm();
}

/// Residual norm || A X + X Ahat^T + sum_i N_i X Nhat_i^T + C ||_F.
inline double residual_mixed(const Matrix& A, const Matrix& Ahat,
                             const std::vector<Matrix>& N, const std::vector<Matrix>& Nhat,
                             const Matrix& C, const Matrix& X) {
    Matrix R = A * X + X * Ahat.transpose() + C;
    for (std::size_t i = 0; i < N.size(); ++i) R += N[i] * X * Nhat[i].transpose();
    return R.norm();
}

/// Bartels-Stewart solve of A X + X A^T = -C; X is symmetrized after the solve.
inline LyapunovSolution solve_standard_lyapunov(const Matrix& A, const Matrix& C) {
    SylvesterSolver solver(A);
    LyapunovSolution sol;
    sol.X = symmetrize(solver.solve(C));
    sol.method = LyapMethod::BartelsStewart;
    sol.iterations = 0;
    sol.residualNorm = residual_generalized(A, {}, C, sol.X);
    return sol;
}

namespace detail {

// I (x) A + Ahat (x) I + sum Nhat_i (x) N_i, acting on vec(X) for X of size
// A.rows() x Ahat.rows().
inline Matrix assemble_kron(const Matrix& A, const Matrix& Ahat,
                            const std::vector<Matrix>& N, const std::vector<Matrix>& Nhat) {
    const Index n = A.rows(), r = Ahat.rows();
    Matrix K = kron(Matrix::Identity(r, r), A) + kron(Ahat, Matrix::Identity(n, n));
    for (std::size_t i = 0; i < N.size(); ++i) K += kron(Nhat[i], N[i]);
    return K;
}

inline Matrix solve_kron_direct(const Matrix& K, const Matrix& C) {
    Eigen::PartialPivLU<Matrix> lu(K);
    const double piv = lu.matrixLU().diagonal().cwiseAbs().minCoeff();
    if (piv <= 1e-13 * K.norm())
        throw SingularPencilError("Kronecker matrix is numerically singular, pivot " +
                                  std::to_string(piv));
    Vector x = lu.solve(-vec(C));
    return unvec(x, C.rows(), C.cols());
}

template <typename RhsUpdate>
inline std::pair<Matrix, int> splitting_loop(const SylvesterSolver& solver, const Matrix& C,
                                             RhsUpdate&& noiseTerm, const SolveOptions& opts,
                                             bool symmetric) {
    Matrix X = Matrix::Zero(C.rows(), C.cols());
    for (int k = 1; k <= opts.maxIter; ++k) {
        Matrix Xn = solver.solve(C + noiseTerm(X));
        if (symmetric) Xn = symmetrize(Xn);
        if (!Xn.allFinite())
            throw IterationDivergenceError(
                "splitting iteration overflowed at iteration " + std::to_string(k),
                std::numeric_limits<double>::infinity());
        const double step = (Xn - X).norm();
        X.swap(Xn);
        if (step <= opts.stepTol * (1.0 + X.norm())) return {X, k};
    }
    return {X, -1};  // caller reports divergence with the recomputed residual
}

}  // namespace detail

/// Generalized Lyapunov equation A X + X A^T + sum_i N_i X N_i^T = -C.
/// Two strategies: a direct dense solve of the vectorized n^2 x n^2 system
/// (small n) and the stationary splitting iteration whose inner solves are
/// Bartels-Stewart with the Schur form of A computed once.
inline LyapunovSolution solve_generalized_lyapunov(const Matrix& A, const std::vector<Matrix>& N,
                                                   const Matrix& C,
                                                   const SolveOptions& opts = {}) {
    const Index n = A.rows();
    const bool direct = opts.method == SolveOptions::Method::DirectKron ||
                        (opts.method == SolveOptions::Method::Auto && n < opts.kronCutoff);
    LyapunovSolution sol;
    if (direct) {
        Matrix K = detail::assemble_kron(A, A, N, N);
        sol.X = symmetrize(detail::solve_kron_direct(K, C));
        sol.method = LyapMethod::DirectKron;
        sol.iterations = 0;
    } else {
        SylvesterSolver solver(A);
        auto noise = [&](const Matrix& X) {
            Matrix R = Matrix::Zero(n, n);
            for (const Matrix& Ni : N) R += Ni * X * Ni.transpose();
            return R;
        };
        auto [X, iters] = detail::splitting_loop(solver, C, noise, opts, true);
        if (iters < 0)
            throw IterationDivergenceError(
                "splitting iteration did not converge within " + std::to_string(opts.maxIter) +
                    " iterations",
                residual_generalized(A, N, C, X));
        sol.X = std::move(X);
        sol.method = LyapMethod::SplittingIteration;
        sol.iterations = iters;
    }
    sol.residualNorm = residual_generalized(A, N, C, sol.X);
    return sol;
}

/// Mixed Sylvester-type equation A X + X Ahat^T + sum_i N_i X Nhat_i^T = -C
/// for rectangular X (full system on the left, reduced on the right).
inline LyapunovSolution solve_mixed_sylvester(const Matrix& A, const Matrix& Ahat,
                                              const std::vector<Matrix>& N,
                                              const std::vector<Matrix>& Nhat, const Matrix& C,
                                              const SolveOptions& opts = {}) {
    if (N.size() != Nhat.size())
        throw ArgumentError("mixed sylvester: N and Nhat counts differ");
    if (C.rows() != A.rows() || C.cols() != Ahat.rows())
        throw ArgumentError("mixed sylvester: C must be n x r");
    const bool direct =
        opts.method == SolveOptions::Method::DirectKron ||
        (opts.method == SolveOptions::Method::Auto &&
         A.rows() * Ahat.rows() <= opts.kronCutoff * opts.kronCutoff);
    LyapunovSolution sol;
    if (direct) {
        Matrix K = detail::assemble_kron(A, Ahat, N, Nhat);
        sol.X = detail::solve_kron_direct(K, C);
        sol.method = LyapMethod::DirectKron;
        sol.iterations = 0;
    } else {
        SylvesterSolver solver(A, Ahat);
        auto noise = [&](const Matrix& X) {
            Matrix R = Matrix::Zero(C.rows(), C.cols());
            for (std::size_t i = 0; i < N.size(); ++i) R += N[i] * X * Nhat[i].transpose();
            return R;
        };
        auto [X, iters] = detail::splitting_loop(solver, C, noise, opts, false);
        if (iters < 0)
            throw IterationDivergenceError(
                "mixed splitting iteration did not converge within " +
                    std::to_string(opts.maxIter) + " iterations",
                residual_mixed(A, Ahat, N, Nhat, C, X));
        sol.X = std::move(X);
        sol.method = LyapMethod::SplittingIteration;
        sol.iterations = iters;
    }
    sol.residualNorm = residual_mixed(A, Ahat, N, Nhat, C, sol.X);
    return sol;
}

}  // namespace gramor
