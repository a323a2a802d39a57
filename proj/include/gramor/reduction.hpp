#pragma once

#include <cmath>
#include <iostream>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "gramor/errors.hpp"
#include "gramor/lyapunov.hpp"
#include "gramor/matrix.hpp"
#include "gramor/stability.hpp"
#include "gramor/system.hpp"

namespace gramor {

/// Ordered eigendecomposition P = basis * diag(eigenvalues) * basis^T with
/// eigenvalues nonincreasing; basis is the paper's S^T.
struct GramianSpectrum {
    Vector eigenvalues;
    Matrix basis;
};

struct GramianOptions {
    SolveOptions solve;
    enum class StabilityCheck { Auto, Skip, Abscissa, Witness };
    StabilityCheck check = StabilityCheck::Auto;
    AbscissaOptions abscissa;
};

struct Gramian {
    Matrix P;                  // symmetric, eigenvalues clipped at zero
    LyapunovSolution solution; // solver metadata; residual recomputed on P
    double clipAmount = 0.0;   // magnitude of the most negative clipped eigenvalue
};

namespace detail {

inline void verify_ms_stability(const Matrix& A, const std::vector<Matrix>& N,
                                const GramianOptions& opts) {
    using Check = GramianOptions::StabilityCheck;
    Check mode = opts.check;
    if (mode == Check::Skip) return;
    if (mode == Check::Auto)
        mode = (A.rows() <= opts.abscissa.denseCutoff) ? Check::Abscissa : Check::Witness;
    if (mode == Check::Abscissa) {
        const StabilityReport rep = spectral_abscissa(A, N, opts.abscissa);
        if (rep.verdict != StabilityVerdict::AsymptoticallyStable)
            throw StabilityError(std::string("system is not mean square asymptotically "
                                             "stable (verdict ") +
                                 to_string(rep.verdict) + ", abscissa " +
                                 std::to_string(rep.abscissa) + ")");
    } else {
        const Index n = A.rows();
        StabilityWitness w = sufficient_ms_stability(A, N, Matrix::Zero(n, n), opts.solve);
        if (!w.success)
            throw StabilityError("mean square stability witness failed: " + w.note);
    }
}

inline Gramian clip_psd(LyapunovSolution sol, const Matrix& A, const std::vector<Matrix>& N,
                        const Matrix& C) {
    Gramian g;
    Matrix X = symmetrize(sol.X);
    Eigen::SelfAdjointEigenSolver<Matrix> es(X);
    Vector ev = es.eigenvalues();
    double worst = 0.0;
    for (Index i = 0; i < ev.size(); ++i) {
        if (ev(i) < 0.0) {
            worst = std::min(worst, ev(i));
            ev(i) = 0.0;
        }
    }
    g.clipAmount = -worst;
    if (g.clipAmount > 0.0)
        X = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
    g.P = symmetrize(X);
    sol.residualNorm = residual_generalized(A, N, C, g.P);
    sol.X = g.P;
    g.solution = std::move(sol);
    return g;
}

}  // namespace detail

/// Reachability Gramian P solving A P + P A^T + sum N_i P N_i^T = -B B^T.
/// Mean square asymptotic stability is verified first unless the caller
/// overrides (dense abscissa for small n, Lemma 2.1 witness otherwise).
inline Gramian reachability_gramian(const StochasticLinearSystem& sys,
                                    const GramianOptions& opts = {}) {
    detail::verify_ms_stability(sys.A, sys.N, opts);
    Matrix C = sys.B * sys.B.transpose();
    LyapunovSolution sol = solve_generalized_lyapunov(sys.A, sys.N, C, opts.solve);
    return detail::clip_psd(std::move(sol), sys.A, sys.N, C);
}

/// Bilinear Gramian P_gamma: the reachability Gramian of the gamma-scaled
/// stochastic companion (A, N_i/gamma, B/gamma).
inline Gramian bilinear_gramian(const BilinearControlSystem& sys,
                                const GramianOptions& opts = {}) {
    return reachability_gramian(scaled_stochastic(sys), opts);
}

/// Observability-type Gramian Q solving A^T Q + Q A + sum N_i^T Q N_i = -I.
/// The full-rank right-hand side rules out low-rank shortcuts; the dense
/// splitting iteration is used at scale.
inline Gramian observability_gramian(const StochasticLinearSystem& sys,
                                     const GramianOptions& opts = {}) {
    detail::verify_ms_stability(sys.A, sys.N, opts);
    std::vector<Matrix> Nt;
    Nt.reserve(sys.N.size());
    for (const Matrix& Ni : sys.N) Nt.push_back(Ni.transpose());
    Matrix C = Matrix::Identity(sys.n(), sys.n());
    LyapunovSolution sol = solve_generalized_lyapunov(sys.A.transpose(), Nt, C, opts.solve);
    return detail::clip_psd(std::move(sol), sys.A.transpose(), Nt, C);
}

/// Symmetric eigendecomposition with eigenvalues sorted nonincreasing.
/// Negative eigenvalues beyond -1e-12 * lambda_1 are rejected; smaller
/// negative noise is clipped to zero.
inline GramianSpectrum spectral_factorize(const Matrix& P) {
    if (P.rows() != P.cols()) throw ArgumentError("spectral_factorize: P must be square");
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(P));
    if (es.info() != Eigen::Success) throw Error("symmetric eigendecomposition failed");
    const Index n = P.rows();
    GramianSpectrum spec;
    spec.eigenvalues = Vector(n);
    spec.basis = Matrix(n, n);
    for (Index i = 0; i < n; ++i) {  // ascending -> descending
        spec.eigenvalues(i) = es.eigenvalues()(n - 1 - i);
        spec.basis.col(i) = es.eigenvectors().col(n - 1 - i);
    }
    const double lmax = std::max(spec.eigenvalues(0), 0.0);
    for (Index i = 0; i < n; ++i) {
        if (spec.eigenvalues(i) < -1e-12 * lmax)
            throw NonPsdError("matrix is not PSD: eigenvalue " +
                              std::to_string(spec.eigenvalues(i)) + " at index " +
                              std::to_string(i));
        if (spec.eigenvalues(i) < 0.0) spec.eigenvalues(i) = 0.0;
    }
    return spec;
}

namespace detail {

template <class System>
inline GalerkinRom project(const System& sys, const Matrix& V, const Matrix& W,
                           ReductionMethod method) {
    GalerkinRom rom;
    rom.V = V;
    rom.W = W;
    rom.reducedA = W.transpose() * sys.A * V;
    rom.reducedN.reserve(sys.N.size());
    for (const Matrix& Ni : sys.N) rom.reducedN.push_back(W.transpose() * Ni * V);
    rom.reducedB = W.transpose() * sys.B;
    rom.method = method;
    rom.sourceDim = sys.n();
    return rom;
}

}  // namespace detail

/// Galerkin (OS) reduction: V = leading r eigenvectors of the Gramian, W = V.
template <class System>
inline GalerkinRom galerkin_reduce(const System& sys, const GramianSpectrum& spectrum,
                                   Index r) {
    const Index n = sys.n();
    if (r < 1 || r > n)
        throw ArgumentError("reduced order r=" + std::to_string(r) + " out of range [1," +
                            std::to_string(n) + "]");
    if (spectrum.basis.rows() != n)
        throw ArgumentError("spectrum dimension does not match the system");
    if (spectrum.eigenvalues(r - 1) <= 1e-12 * spectrum.eigenvalues(0))
        std::cerr << "gramor: warning: lambda_" << r
                  << " is numerically zero; the reduced Gramian theory assumes "
                     "Lambda_1 > 0\n";
    Matrix V = spectrum.basis.leftCols(r);
    return detail::project(sys, V, V, ReductionMethod::OS);
}

/// Square-root balanced truncation: P = Zp Zp^T, Q = Zq Zq^T,
/// Zq^T Zp = U S M^T, V = Zp M_1 S_1^{-1/2}, W = Zq U_1 S_1^{-1/2}.
template <class System>
inline GalerkinRom balanced_truncation_reduce(const System& sys, const Matrix& P,
                                              const Matrix& Q, Index r) {
    const Index n = sys.n();
    if (r < 1 || r > n) throw ArgumentError("reduced order out of range");
    auto factor = [](const Matrix& M) {
        GramianSpectrum s = spectral_factorize(M);
        Index rank = 0;
        while (rank < s.eigenvalues.size() &&
               s.eigenvalues(rank) > 1e-12 * s.eigenvalues(0))
            ++rank;
        Matrix Z(M.rows(), rank);
        for (Index i = 0; i < rank; ++i)
            Z.col(i) = s.basis.col(i) * std::sqrt(s.eigenvalues(i));
        return Z;
    };
    Matrix Zp = factor(P), Zq = factor(Q);
    if (r > Zp.cols() || r > Zq.cols())
        throw ArgumentError("r=" + std::to_string(r) + " exceeds the numerical rank of the "
                            "Gramian factors (" + std::to_string(Zp.cols()) + ", " +
                            std::to_string(Zq.cols()) + ")");
    Eigen::BDCSVD<Matrix> svd(Zq.transpose() * Zp, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector& sv = svd.singularValues();
    if (sv(r - 1) / sv(0) < 1e-13)
        throw IllConditionedTruncationError(
            "Hankel value ratio sigma_r/sigma_1 = " + std::to_string(sv(r - 1) / sv(0)) +
            " below 1e-13; truncation ill conditioned");
    Vector scale = sv.head(r).cwiseSqrt().cwiseInverse();
    Matrix V = Zp * svd.matrixV().leftCols(r) * scale.asDiagonal();
    Matrix W = Zq * svd.matrixU().leftCols(r) * scale.asDiagonal();
    // biorthogonality can erode when sigma_r is tiny; one correction restores
    // W^T V = I without leaving span(W)
    Matrix G = W.transpose() * V;
    if ((G - Matrix::Identity(r, r)).norm() > 1e-13)
        W = W * G.inverse().transpose();
    return detail::project(sys, V, W, ReductionMethod::BT);
}

/// Reachability Gramian of the reduced triple. Asymptotically stable ROMs are
/// solved directly; marginal ones go through the stable-realization
/// extraction (Cor 4.4) and lift the small Gramian back: P = V0 P0 V0^T.
inline Matrix reduced_gramian(const GalerkinRom& rom, const SolveOptions& solve = {},
                              const AbscissaOptions& abscissa = {}) {
    const StabilityReport rep = spectral_abscissa(rom.reducedA, rom.reducedN, abscissa);
    if (rep.verdict == StabilityVerdict::Unstable)
        throw ContractError("reduced system is mean square unstable (abscissa " +
                            std::to_string(rep.abscissa) +
                            "); no reachability Gramian exists");
    if (rep.verdict == StabilityVerdict::AsymptoticallyStable) {
        Matrix C = rom.reducedB * rom.reducedB.transpose();
        return symmetrize(solve_generalized_lyapunov(rom.reducedA, rom.reducedN, C, solve).X);
    }
    StableRealization sr = extract_stable_realization(rom, abscissa);
    if (sr.V0.cols() == 0) return Matrix::Zero(rom.r(), rom.r());
    Matrix C0 = sr.projectedB * sr.projectedB.transpose();
    Matrix P0 = symmetrize(solve_generalized_lyapunov(sr.projectedA, sr.projectedN, C0, solve).X);
    return symmetrize(sr.V0 * P0 * sr.V0.transpose());
}

}  // namespace gramor
