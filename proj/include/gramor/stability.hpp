#pragma once

#include <cmath>
#include <complex>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "gramor/errors.hpp"
#include "gramor/lyapunov.hpp"
#include "gramor/matrix.hpp"
#include "gramor/system.hpp"

namespace gramor {

enum class StabilityVerdict { AsymptoticallyStable, MarginallyStable, Unstable };

inline const char* to_string(StabilityVerdict v) {
    switch (v) {
        case StabilityVerdict::AsymptoticallyStable: return "asymptotically-stable";
        case StabilityVerdict::MarginallyStable: return "marginally-stable";
        default: return "unstable";
    }
}

enum class AbscissaMethod { DenseEig, MatrixFreePower };

inline const char* to_string(AbscissaMethod m) {
    return m == AbscissaMethod::DenseEig ? "dense-eig" : "matrix-free-power";
}

struct StabilityReport {
    double abscissa = 0.0;  // max real part of lambda(K)
    StabilityVerdict verdict = StabilityVerdict::MarginallyStable;
    AbscissaMethod method = AbscissaMethod::DenseEig;
    double tolerance = 0.0;
};

struct AbscissaOptions {
    Index denseCutoff = 60;  // dense eig of the explicit n^2 x n^2 matrix up to here
    int maxIter = 5000;      // matrix-free matvec budget
    double tol = 0.0;        // verdict tolerance; 0 selects 1e-9 * ||K acting on I||_F
};

/// A X + X A^T + sum_i N_i X N_i^T, the operator behind K, applied without
/// ever forming K.
inline Matrix kron_operator_action(const Matrix& A, const std::vector<Matrix>& N,
                                   const Matrix& X) {
    Matrix R = A * X + X * A.transpose();
    for (const Matrix& Ni : N) R += Ni * X * Ni.transpose();
    return R;
}

/// Adjoint action A^T X + X A + sum_i N_i^T X N_i.
inline Matrix kron_operator_action_adjoint(const Matrix& A, const std::vector<Matrix>& N,
                                           const Matrix& X) {
    Matrix R = A.transpose() * X + X * A;
    for (const Matrix& Ni : N) R += Ni.transpose() * X * Ni;
    return R;
}

/// Explicit K = I (x) A + A (x) I + sum_i N_i (x) N_i.
inline Matrix kron_matrix(const Matrix& A, const std::vector<Matrix>& N) {
    return detail::assemble_kron(A, A, N, N);
}

namespace detail {

inline double verdict_tolerance(const Matrix& A, const std::vector<Matrix>& N, double requested) {
    if (requested > 0.0) return requested;
    const Index n = A.rows();
    return 1e-9 * kron_operator_action(A, N, Matrix::Identity(n, n)).norm();
}

inline StabilityVerdict classify(double abscissa, double tol) {
    if (abscissa < -tol) return StabilityVerdict::AsymptoticallyStable;
    if (abscissa <= tol) return StabilityVerdict::MarginallyStable;
    return StabilityVerdict::Unstable;
}

/// Restarted Arnoldi for the rightmost eigenvalue of the shifted operator
/// v -> vec(action(unvec(v))) + sigma v. The shift makes the rightmost
/// eigenvalue dominant in modulus; the Krylov basis accelerates past the tiny
/// relative gaps a plain power iteration cannot handle.
struct ArnoldiResult {
    double rightmost;                 // real part, unshifted
    double residual;
    Vector ritzVector;                // real part of the converged Ritz vector
    bool converged;
};

template <typename Action>
inline ArnoldiResult arnoldi_rightmost(Action&& act, Index dim, double sigma, double tolAbs,
                                       int maxMatvec, const Vector& start) {
    const Index m = std::min<Index>(dim, 60);
    Matrix V(dim, m + 1);
    Matrix H = Matrix::Zero(m + 1, m);
    Vector v0 = start;
    double best = -std::numeric_limits<double>::infinity();
    double bestRes = std::numeric_limits<double>::infinity();
    Vector bestVec = v0;
    int used = 0;
    while (used < maxMatvec) {
        v0.normalize();
        V.col(0) = v0;
        Index k = 0;
        for (; k < m && used < maxMatvec; ++k, ++used) {
            Vector w = act(V.col(k)) + sigma * V.col(k);
            for (Index i = 0; i <= k; ++i) {  // modified Gram-Schmidt, one re-pass
                H(i, k) = V.col(i).dot(w);
                w -= H(i, k) * V.col(i);
            }
            for (Index i = 0; i <= k; ++i) {
                const double c = V.col(i).dot(w);
                H(i, k) += c;
                w -= c * V.col(i);
            }
            H(k + 1, k) = w.norm();
            if (H(k + 1, k) < 1e-14 * sigma) { ++k; break; }  // invariant subspace
            V.col(k + 1) = w / H(k + 1, k);
        }
        if (k == 0) break;
        Eigen::EigenSolver<Matrix> es(H.topLeftCorner(k, k));
        // Ritz value with the largest real part
        Index pick = 0;
        double re = -std::numeric_limits<double>::infinity();
        for (Index i = 0; i < k; ++i)
            if (es.eigenvalues()(i).real() > re) { re = es.eigenvalues()(i).real(); pick = i; }
        const auto y = es.eigenvectors().col(pick);
        const double res = (k < H.rows()) ? H(k, k - 1) * std::abs(y(k - 1)) : 0.0;
        Vector ritz = (V.leftCols(k) * y.real()).eval();
        if (ritz.norm() < 1e-300) ritz = V.col(0); else ritz.normalize();
        best = re - sigma;
        bestRes = res;
        bestVec = ritz;
        if (res <= tolAbs) return {best, res, bestVec, true};
        v0 = ritz;  // restart towards the rightmost Ritz direction
    }
    return {best, bestRes, bestVec, false};
}

}  // namespace detail

/// Spectral abscissa of the generalized Lyapunov operator: dense
/// eigendecomposition of the explicit Kronecker matrix for small n, shifted
/// Arnoldi on the matrix-free action otherwise.
inline StabilityReport spectral_abscissa(const Matrix& A, const std::vector<Matrix>& N,
                                         const AbscissaOptions& opts = {}) {
    const Index n = A.rows();
    StabilityReport rep;
    rep.tolerance = detail::verdict_tolerance(A, N, opts.tol);
    if (n == 0) {  // empty system: trivially stable
        rep.abscissa = -std::numeric_limits<double>::infinity();
        rep.verdict = StabilityVerdict::AsymptoticallyStable;
        rep.method = AbscissaMethod::DenseEig;
        return rep;
    }
    if (n <= opts.denseCutoff) {
        Matrix K = kron_matrix(A, N);
        Eigen::EigenSolver<Matrix> es(K, /*computeEigenvectors=*/false);
        rep.abscissa = es.eigenvalues().real().maxCoeff();
        rep.method = AbscissaMethod::DenseEig;
    } else {
        double sigma = 2.0 * A.norm();
        for (const Matrix& Ni : N) sigma += Ni.norm() * Ni.norm();
        auto act = [&](const Vector& v) {
            return vec(kron_operator_action(A, N, unvec(v, n, n)));
        };
        // vec(I) has guaranteed overlap with the PSD eigenmatrix at the abscissa
        Vector start = vec(Matrix::Identity(n, n));
        auto res = detail::arnoldi_rightmost(act, n * n, sigma, rep.tolerance, opts.maxIter, start);
        if (!res.converged)
            throw ConvergenceError("matrix-free abscissa iteration did not converge within " +
                                       std::to_string(opts.maxIter) + " matvecs",
                                   res.rightmost);
        rep.abscissa = res.rightmost;
        rep.method = AbscissaMethod::MatrixFreePower;
    }
    rep.verdict = detail::classify(rep.abscissa, rep.tolerance);
    return rep;
}

/// Lemma-2.1-style sufficient certificate for mean square stability: try to
/// produce X > 0 with L_A(X) + Pi_N(X) <= -Y. Success certifies the spectrum
/// of K lies in the closed left half plane (strict negativity of the
/// right-hand side actually certifies the open one). Failure proves nothing.
struct StabilityWitness {
    bool success = false;
    Matrix X;            // the witness when success
    double minEig = 0.0;
    std::string note;
};

inline StabilityWitness sufficient_ms_stability(const Matrix& A, const std::vector<Matrix>& N,
                                                const Matrix& Y,
                                                const SolveOptions& opts = {}) {
    StabilityWitness w;
    const Index n = A.rows();
    const double eps = 1e-8 * (1.0 + Y.norm());
    Matrix rhs = symmetrize(Y) + eps * Matrix::Identity(n, n);
    try {
        LyapunovSolution sol = solve_generalized_lyapunov(A, N, rhs, opts);
        Eigen::SelfAdjointEigenSolver<Matrix> es(sol.X, Eigen::EigenvaluesOnly);
        w.minEig = es.eigenvalues().minCoeff();
        w.X = sol.X;
        if (w.minEig > 0.0) {
            w.success = true;
        } else {
            w.note = "solver produced X with min eigenvalue " + std::to_string(w.minEig) +
                     "; inconclusive";
        }
    } catch (const Error& e) {
        w.note = std::string("inconclusive: ") + e.what();
    }
    return w;
}

/// PSD eigenmatrix of the adjoint operator at its spectral abscissa
/// (Lemma 2.2 applied to X -> A^T X + X A + sum N_i^T X N_i).
/// Normalized to unit Frobenius norm, eigen-equation residual <= 1e-8.
inline Matrix psd_null_eigenmatrix(const Matrix& A, const std::vector<Matrix>& N,
                                   const AbscissaOptions& opts = {}) {
    const Index n = A.rows();
    if (n == 0) throw ArgumentError("psd_null_eigenmatrix: empty system");
    const StabilityReport rep = spectral_abscissa(A, N, opts);
    const double alpha = rep.abscissa;

    std::vector<Matrix> candidates;
    if (n <= opts.denseCutoff) {
        std::vector<Matrix> Nt;
        Nt.reserve(N.size());
        for (const Matrix& Ni : N) Nt.push_back(Ni.transpose());
        Matrix Kadj = kron_matrix(A.transpose(), Nt);
        Matrix M = Kadj - alpha * Matrix::Identity(n * n, n * n);
        Eigen::BDCSVD<Matrix> svd(M, Eigen::ComputeThinV);
        const auto& sv = svd.singularValues();
        const double cut = std::max(1e-10 * sv(0), 0.0);
        std::vector<Index> kernelCols;
        for (Index i = sv.size() - 1; i >= 0; --i) {
            if (sv(i) <= cut || i == sv.size() - 1) kernelCols.push_back(i);
        }
        // projection of the identity onto the kernel span first: if the
        // eigenspace contains a PSD matrix, this combination tends to find it
        Matrix proj = Matrix::Zero(n, n);
        for (Index c : kernelCols) {
            Vector basisVec = svd.matrixV().col(c);
            proj += basisVec.dot(vec(Matrix::Identity(n, n))) * unvec(basisVec, n, n);
        }
        candidates.push_back(proj);
        for (Index c : kernelCols) candidates.push_back(unvec(svd.matrixV().col(c), n, n));
    } else {
        auto act = [&](const Vector& v) {
            return vec(kron_operator_action_adjoint(A, N, unvec(v, n, n)));
        };
        double sigma = 2.0 * A.norm();
        for (const Matrix& Ni : N) sigma += Ni.norm() * Ni.norm();
        Vector start = vec(Matrix::Identity(n, n));
        auto res = detail::arnoldi_rightmost(act, n * n, sigma,
                                             detail::verdict_tolerance(A, N, opts.tol),
                                             opts.maxIter, start);
        if (!res.converged)
            throw ConvergenceError("adjoint eigenmatrix iteration did not converge",
                                   res.rightmost);
        candidates.push_back(unvec(res.ritzVector, n, n));
    }

    for (const Matrix& cand : candidates) {
        Matrix Vhat = symmetrize(cand);
        const double norm = Vhat.norm();
        if (norm < 1e-12) continue;
        Vhat /= norm;
        if (Vhat.trace() < 0.0) Vhat = -Vhat;
        Eigen::SelfAdjointEigenSolver<Matrix> es(Vhat, Eigen::EigenvaluesOnly);
        if (es.eigenvalues().minCoeff() < -1e-8) continue;
        const double resid = (kron_operator_action_adjoint(A, N, Vhat) - alpha * Vhat).norm();
        if (resid <= 1e-8 * std::max(1.0, std::abs(alpha))) return Vhat;
    }
    throw DegenerateEigenspaceError(
        "no PSD eigenmatrix found at the abscissa; the zero eigenspace appears degenerate");
}

/// Mean square asymptotically stable realization extracted from a marginal
/// reduced triple by repeated projection onto the kernel of the adjoint PSD
/// eigenmatrix. Preserves Phi(t) B exactly: Phi(t) B = V0 Phi0(t) B0.
struct StableRealization {
    Matrix V0;  // r x r0, orthonormal columns
    Matrix projectedA;
    std::vector<Matrix> projectedN;
    Matrix projectedB;
    int steps = 0;  // kernel-projection rounds performed
};

inline StableRealization extract_stable_realization(const Matrix& Ahat,
                                                    const std::vector<Matrix>& Nhat,
                                                    const Matrix& Bhat,
                                                    const AbscissaOptions& opts = {}) {
    const Index r = Ahat.rows();
    StableRealization out;
    out.V0 = Matrix::Identity(r, r);
    out.projectedA = Ahat;
    out.projectedN = Nhat;
    out.projectedB = Bhat;

    if (Bhat.norm() == 0.0) {  // uncontrolled: the empty realization, Phi B = 0
        out.V0 = Matrix(r, 0);
        out.projectedA = Matrix(0, 0);
        for (Matrix& Ni : out.projectedN) Ni = Matrix(0, 0);
        out.projectedB = Matrix(0, Bhat.cols());
        return out;
    }

    for (int round = 0; round <= r; ++round) {
        const StabilityReport rep = spectral_abscissa(out.projectedA, out.projectedN, opts);
        if (rep.verdict == StabilityVerdict::AsymptoticallyStable) return out;
        if (rep.verdict == StabilityVerdict::Unstable)
            throw ContractError(
                "triple is mean square unstable (abscissa " + std::to_string(rep.abscissa) +
                "); the dissipation identity required for extraction cannot hold");

        Matrix Vhat = psd_null_eigenmatrix(out.projectedA, out.projectedN, opts);
        Eigen::SelfAdjointEigenSolver<Matrix> es(Vhat);
        const Vector& ev = es.eigenvalues();  // ascending
        const double lmax = ev(ev.size() - 1);
        Index kernelDim = 0;
        double cutoff = 1e-10;
        for (int attempt = 0; attempt < 2; ++attempt) {
            kernelDim = 0;
            while (kernelDim < ev.size() && ev(kernelDim) < cutoff * lmax) ++kernelDim;
            if (kernelDim > 0) break;
            cutoff *= 10.0;  // loosen once if the kernel came out empty
        }
        if (kernelDim == 0)
            throw ContractError(
                "adjoint eigenmatrix is positive definite while B is nonzero; "
                "contradicts the reachability structure (Thm 4.3)");

        Matrix V2 = es.eigenvectors().leftCols(kernelDim);
        out.projectedA = (V2.transpose() * out.projectedA * V2).eval();
        for (Matrix& Ni : out.projectedN) Ni = (V2.transpose() * Ni * V2).eval();
        out.projectedB = (V2.transpose() * out.projectedB).eval();
        out.V0 = (out.V0 * V2).eval();
        out.steps += 1;
    }
    throw Error("stable realization extraction failed to terminate");
}

inline StableRealization extract_stable_realization(const GalerkinRom& rom,
                                                    const AbscissaOptions& opts = {}) {
    return extract_stable_realization(rom.reducedA, rom.reducedN, rom.reducedB, opts);
}

}  // namespace gramor
