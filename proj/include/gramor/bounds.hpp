#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "gramor/errors.hpp"
#include "gramor/lyapunov.hpp"
#include "gramor/matrix.hpp"
#include "gramor/reduction.hpp"
#include "gramor/signal.hpp"
#include "gramor/stability.hpp"
#include "gramor/system.hpp"

namespace gramor {

enum class BoundMethod { General, Weighted, BilinearGeneral, BilinearWeighted };

inline const char* to_string(BoundMethod m) {
    switch (m) {
        case BoundMethod::General: return "general";
        case BoundMethod::Weighted: return "weighted";
        case BoundMethod::BilinearGeneral: return "bilinear-general";
        default: return "bilinear-weighted";
    }
}

/// Which representation of the Thm 4.8 weight to evaluate. WithQhat is the
/// tr(Lambda_2 W) form and needs an asymptotically stable ROM; WithoutQhat is
/// the tr(Phat - Lambda_1) + tr(Lambda_2 W_0) form valid for marginal ROMs.
enum class WeightedForm { Auto, WithQhat, WithoutQhat };

struct ErrorBoundReport {
    double inputIndependentFactor = 0.0;  // E(r)
    double inputNorm = 0.0;               // ||u||_{L2_T}
    double exponentialFactor = 1.0;       // exp(0.5 gamma^2 ||u0||^2); 1 for stochastic
    double gamma = 1.0;                   // 1 for stochastic bounds
    double bound = 0.0;                   // factor * exponential * gamma * norm
    struct Terms {
        double trP = std::numeric_limits<double>::quiet_NaN();
        double trPhat = std::numeric_limits<double>::quiet_NaN();
        double trP2Vt = std::numeric_limits<double>::quiet_NaN();
        double trLambda2Weighted = std::numeric_limits<double>::quiet_NaN();
        double trPhatMinusLambda1 = std::numeric_limits<double>::quiet_NaN();
    } terms;
    BoundMethod method = BoundMethod::General;
};

namespace detail {

struct TraceFactor {
    double value;  // E(r)
    double trP, trPhat, trP2Vt;
};

/// (tr P + tr(Phat V^T V) - 2 tr(P2 V^T))^{1/2} on stochastic-type data.
/// The V^T V weight on the second summand accounts for BT bases, where
/// V^T V != I; it is the identity for OS.
inline TraceFactor trace_factor(const StochasticLinearSystem& sys, const GalerkinRom& rom,
                                const Matrix* precomputedP, const SolveOptions& solve,
                                const GramianOptions& gopts) {
    Matrix P;
    if (precomputedP) {
        P = *precomputedP;
    } else {
        P = reachability_gramian(sys, gopts).P;
    }
    const Matrix Phat = reduced_gramian(rom, solve);
    const Matrix C = sys.B * rom.reducedB.transpose();
    const Matrix P2 =
        solve_mixed_sylvester(sys.A, rom.reducedA, sys.N, rom.reducedN, C, solve).X;

    TraceFactor tf;
    tf.trP = P.trace();
    tf.trPhat = (Phat.array() * (rom.V.transpose() * rom.V).array()).sum();
    tf.trP2Vt = (P2.array() * rom.V.array()).sum();  // tr(P2 V^T)
    const double radicand = tf.trP + tf.trPhat - 2.0 * tf.trP2Vt;
    if (radicand < -1e-10 * tf.trP)
        throw NumericalInconsistencyError(
            "negative radicand in the error bound: tr(P)=" + std::to_string(tf.trP) +
            ", tr(Phat V^T V)=" + std::to_string(tf.trPhat) +
            ", tr(P2 V^T)=" + std::to_string(tf.trP2Vt));
    tf.value = std::sqrt(std::max(radicand, 0.0));
    return tf;
}

struct WeightedFactor {
    double value;
    double trLambda = 0.0, trPhat = 0.0;
    double trLambda2Weighted = 0.0, trPhatMinusLambda1 = 0.0;
};

/// Thm 4.8 machinery on stochastic-type data in balanced coordinates.
inline WeightedFactor weighted_factor(const StochasticLinearSystem& sys,
                                      const GramianSpectrum& spectrum, const GalerkinRom& rom,
                                      WeightedForm form, const SolveOptions& solve) {
    const Index n = sys.n(), r = rom.r();
    const Matrix& basis = spectrum.basis;  // S^T
    const Matrix Ab = basis.transpose() * sys.A * basis;
    std::vector<Matrix> Nb;
    Nb.reserve(sys.N.size());
    for (const Matrix& Ni : sys.N) Nb.push_back(basis.transpose() * Ni * basis);

    WeightedFactor wf;
    wf.trLambda = spectrum.eigenvalues.sum();
    const Matrix Phat = reduced_gramian(rom, solve);
    wf.trPhat = Phat.trace();
    wf.trPhatMinusLambda1 = wf.trPhat - spectrum.eigenvalues.head(r).sum();

    bool useQhat = (form == WeightedForm::WithQhat);
    if (form != WeightedForm::WithoutQhat) {
        const StabilityReport rep = spectral_abscissa(rom.reducedA, rom.reducedN);
        const bool stable = rep.verdict == StabilityVerdict::AsymptoticallyStable;
        if (form == WeightedForm::WithQhat && !stable)
            throw ContractError(
                "the tr(Lambda_2 W) form needs an asymptotically stable reduced system "
                "(abscissa " + std::to_string(rep.abscissa) +
                "); use the W_0 form for marginal ROMs");
        if (form == WeightedForm::Auto) useQhat = stable;
    }

    if (r == n) {  // Lambda_2 empty
        wf.trLambda2Weighted = 0.0;
        const double rad = useQhat ? 0.0 : wf.trPhatMinusLambda1;
        wf.value = std::sqrt(std::max(rad, 0.0));
        return wf;
    }

    const Matrix A11 = Ab.topLeftCorner(r, r);
    const Matrix A12 = Ab.topRightCorner(r, n - r);
    std::vector<Matrix> N11, N11t, Nbt;
    for (const Matrix& Nib : Nb) {
        N11.push_back(Nib.topLeftCorner(r, r));
        N11t.push_back(Nib.topLeftCorner(r, r).transpose());
        Nbt.push_back(Nib.transpose());
    }
    // A11^T Y + Y A_b + sum N11^T Y N_b = -[I 0]
    Matrix Crn = Matrix::Zero(r, n);
    Crn.leftCols(r) = Matrix::Identity(r, r);
    const Matrix Y =
        solve_mixed_sylvester(A11.transpose(), Ab.transpose(), N11t, Nbt, Crn, solve).X;
    const Matrix Y2 = Y.rightCols(n - r);

    Matrix W = Matrix::Identity(n - r, n - r) + 2.0 * A12.transpose() * Y2;
    for (std::size_t i = 0; i < Nb.size(); ++i) {
        const Matrix N12 = Nb[i].topRightCorner(r, n - r);
        W += N12.transpose() * (2.0 * Y * Nb[i].rightCols(n - r));
    }

    double rad;
    if (useQhat) {
        const Matrix Qhat =
            symmetrize(solve_generalized_lyapunov(A11.transpose(), N11t,
                                                  Matrix::Identity(r, r), solve)
                           .X);
        for (std::size_t i = 0; i < Nb.size(); ++i) {
            const Matrix N12 = Nb[i].topRightCorner(r, n - r);
            W -= N12.transpose() * Qhat * N12;
        }
        wf.trLambda2Weighted =
            (spectrum.eigenvalues.tail(n - r).array() * W.diagonal().array()).sum();
        rad = wf.trLambda2Weighted;
    } else {
        wf.trLambda2Weighted =
            (spectrum.eigenvalues.tail(n - r).array() * W.diagonal().array()).sum();
        rad = wf.trPhatMinusLambda1 + wf.trLambda2Weighted;
    }
    if (rad < -1e-10 * wf.trLambda)
        throw NumericalInconsistencyError(
            "negative radicand in the weighted bound: tr(Phat-Lambda_1)=" +
            std::to_string(wf.trPhatMinusLambda1) + ", tr(Lambda_2 W)=" +
            std::to_string(wf.trLambda2Weighted));
    wf.value = std::sqrt(std::max(rad, 0.0));
    return wf;
}

inline GalerkinRom scale_rom(const GalerkinRom& rom, double gamma) {
    GalerkinRom s = rom;
    for (Matrix& Ni : s.reducedN) Ni /= gamma;
    s.reducedB /= gamma;
    return s;
}

inline std::vector<bool> bilinear_active_channels(const BilinearControlSystem& sys) {
    std::vector<bool> keep(sys.N.size());
    for (std::size_t i = 0; i < sys.N.size(); ++i) keep[i] = sys.N[i].norm() != 0.0;
    return keep;
}

}  // namespace detail

/// Prop 4.6: sup_t E||x - V xhat|| <= E(r) ||u||_{L2_T} with
/// E(r) = (tr P + tr(Phat V^T V) - 2 tr(P2 V^T))^{1/2}.
inline ErrorBoundReport general_bound(const StochasticLinearSystem& sys, const GalerkinRom& rom,
                                      const InputSignal& u, const Matrix* precomputedP = nullptr,
                                      const SolveOptions& solve = {},
                                      const GramianOptions& gopts = {}) {
    auto tf = detail::trace_factor(sys, rom, precomputedP, solve, gopts);
    ErrorBoundReport rep;
    rep.method = BoundMethod::General;
    rep.inputIndependentFactor = tf.value;
    rep.inputNorm = input_l2_norm(u);
    rep.bound = rep.inputIndependentFactor * rep.exponentialFactor * rep.gamma * rep.inputNorm;
    rep.terms.trP = tf.trP;
    rep.terms.trPhat = tf.trPhat;
    rep.terms.trP2Vt = tf.trP2Vt;
    return rep;
}

/// Thm 4.8: the Lambda_2-weighted representation of the same bound for OS
/// ROMs of the balanced system.
inline ErrorBoundReport weighted_bound(const StochasticLinearSystem& sys,
                                       const GramianSpectrum& spectrum, const GalerkinRom& rom,
                                       const InputSignal& u,
                                       WeightedForm form = WeightedForm::Auto,
                                       const SolveOptions& solve = {}) {
    if (rom.method != ReductionMethod::OS)
        throw ContractError("weighted_bound applies to OS (Galerkin) reduced models only");
    auto wf = detail::weighted_factor(sys, spectrum, rom, form, solve);
    ErrorBoundReport rep;
    rep.method = BoundMethod::Weighted;
    rep.inputIndependentFactor = wf.value;
    rep.inputNorm = input_l2_norm(u);
    rep.bound = rep.inputIndependentFactor * rep.exponentialFactor * rep.gamma * rep.inputNorm;
    rep.terms.trP = wf.trLambda;
    rep.terms.trPhat = wf.trPhat;
    rep.terms.trLambda2Weighted = wf.trLambda2Weighted;
    rep.terms.trPhatMinusLambda1 = wf.trPhatMinusLambda1;
    return rep;
}

namespace detail {

inline void require_bilinear_rom_stable(const GalerkinRom& scaledRom) {
    const StabilityReport rep = spectral_abscissa(scaledRom.reducedA, scaledRom.reducedN);
    if (rep.verdict != StabilityVerdict::AsymptoticallyStable)
        throw ContractError(
            "bilinear bound requires the gamma-scaled reduced system to be mean square "
            "asymptotically stable; abscissa " + std::to_string(rep.abscissa));
}

}  // namespace detail

/// Prop 5.2: trace factor on the gamma-scaled data times
/// exp(0.5 gamma^2 ||u0||^2) gamma ||u||, u0 keeping only channels with N_i != 0.
inline ErrorBoundReport bilinear_general_bound(const BilinearControlSystem& sys,
                                               const GalerkinRom& rom, const InputSignal& u,
                                               const Matrix* precomputedPgamma = nullptr,
                                               const SolveOptions& solve = {},
                                               const GramianOptions& gopts = {}) {
    if (u.channels() != sys.m())
        throw ArgumentError("input signal has " + std::to_string(u.channels()) +
                            " channels, system expects " + std::to_string(sys.m()));
    const StochasticLinearSystem scaled = scaled_stochastic(sys);
    const GalerkinRom scaledRom = detail::scale_rom(rom, sys.gamma);
    detail::require_bilinear_rom_stable(scaledRom);
    auto tf = detail::trace_factor(scaled, scaledRom, precomputedPgamma, solve, gopts);

    ErrorBoundReport rep;
    rep.method = BoundMethod::BilinearGeneral;
    rep.gamma = sys.gamma;
    rep.inputIndependentFactor = tf.value;
    rep.inputNorm = input_l2_norm(u);
    const double u0 = input_l2_norm(u.masked(detail::bilinear_active_channels(sys)));
    rep.exponentialFactor = std::exp(0.5 * sys.gamma * sys.gamma * u0 * u0);
    rep.bound = rep.inputIndependentFactor * rep.exponentialFactor * rep.gamma * rep.inputNorm;
    rep.terms.trP = tf.trP;
    rep.terms.trPhat = tf.trPhat;
    rep.terms.trP2Vt = tf.trP2Vt;
    return rep;
}

/// Thm 5.3: Lambda_2-weighted bilinear bound on the gamma-scaled data.
inline ErrorBoundReport bilinear_weighted_bound(const BilinearControlSystem& sys,
                                                const GramianSpectrum& spectrumGamma,
                                                const GalerkinRom& rom, const InputSignal& u,
                                                const SolveOptions& solve = {}) {
    if (rom.method != ReductionMethod::OS)
        throw ContractError("bilinear_weighted_bound applies to OS reduced models only");
    if (u.channels() != sys.m())
        throw ArgumentError("input signal channel count does not match the system");
    const StochasticLinearSystem scaled = scaled_stochastic(sys);
    const GalerkinRom scaledRom = detail::scale_rom(rom, sys.gamma);
    detail::require_bilinear_rom_stable(scaledRom);
    auto wf = detail::weighted_factor(scaled, spectrumGamma, scaledRom,
                                      WeightedForm::WithQhat, solve);

    ErrorBoundReport rep;
    rep.method = BoundMethod::BilinearWeighted;
    rep.gamma = sys.gamma;
    rep.inputIndependentFactor = wf.value;
    rep.inputNorm = input_l2_norm(u);
    const double u0 = input_l2_norm(u.masked(detail::bilinear_active_channels(sys)));
    rep.exponentialFactor = std::exp(0.5 * sys.gamma * sys.gamma * u0 * u0);
    rep.bound = rep.inputIndependentFactor * rep.exponentialFactor * rep.gamma * rep.inputNorm;
    rep.terms.trP = wf.trLambda;
    rep.terms.trPhat = wf.trPhat;
    rep.terms.trLambda2Weighted = wf.trLambda2Weighted;
    rep.terms.trPhatMinusLambda1 = wf.trPhatMinusLambda1;
    return rep;
}

}  // namespace gramor
