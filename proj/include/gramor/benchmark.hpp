#pragma once

#include <string>
#include <variant>

#include "gramor/errors.hpp"
#include "gramor/matrix.hpp"
#include "gramor/system.hpp"

namespace gramor {

enum class BenchmarkMode { Stochastic, Bilinear };

/// Boundary-controlled heat equation on the unit square:
///   dx/dt = Laplace(x),   n . grad(x) = c u1 x on the left edge (Robin),
///   x = u2 on the bottom edge (Dirichlet control), x = 0 on the other two.
/// Finite differences on the k x k interior grid, spacing 1/(k+1).
struct HeatBenchmarkSpec {
    Index k = 20;                  // interior grid points per axis, n = k^2
    double robinCoefficient = 0.8;
    BenchmarkMode mode = BenchmarkMode::Stochastic;
    double gamma = 1.0;            // bilinear mode only
};

namespace detail {

struct HeatMatrices {
    Matrix A, N, B;  // B is the single Dirichlet-control column
};

/// 5-point stencil assembly. Row-major node order with x fastest:
/// node (i, j) -> (j-1) k + (i-1), i, j in 1..k.
/// The Robin condition eliminates the left ghost by one-sided differencing:
/// x_{0,j} = x_{1,j} + c*Delta*u1*x_{1,j}, which reflects the stencil into the
/// diagonal of A and puts c/Delta onto the diagonal of N at left-edge nodes.
/// The Dirichlet control contributes 1/Delta^2 at bottom-edge nodes.
inline HeatMatrices assemble_heat(Index k, double robin) {
    if (k < 2) throw ArgumentError("heat benchmark needs k >= 2");
    const double d = 1.0 / static_cast<double>(k + 1);
    const double d2 = d * d;
    const Index n = k * k;
    HeatMatrices hm;
    hm.A = Matrix::Zero(n, n);
    hm.N = Matrix::Zero(n, n);
    hm.B = Matrix::Zero(n, 1);
    auto idx = [k](Index i, Index j) { return (j - 1) * k + (i - 1); };
    for (Index j = 1; j <= k; ++j) {
        for (Index i = 1; i <= k; ++i) {
            const Index p = idx(i, j);
            hm.A(p, p) = -4.0 / d2;
            if (i > 1) hm.A(p, idx(i - 1, j)) = 1.0 / d2;
            if (i < k) hm.A(p, idx(i + 1, j)) = 1.0 / d2;
            if (j > 1) hm.A(p, idx(i, j - 1)) = 1.0 / d2;
            if (j < k) hm.A(p, idx(i, j + 1)) = 1.0 / d2;
            if (i == 1) {  // Gamma_1, Robin
                hm.A(p, p) += 1.0 / d2;
                hm.N(p, p) = robin / d;
            }
            if (j == 1) {  // Gamma_2, Dirichlet control
                hm.B(p, 0) = 1.0 / d2;
            }
        }
    }
    return hm;
}

}  // namespace detail

/// Stochastic mode: q = 1, N_1 the Robin matrix, B the Dirichlet column.
/// Bilinear mode: m = 2 channels (u1 bilinear-only, u2 additive-only):
/// N = {N_robin, 0}, B = [0 | b_dirichlet].
inline std::variant<StochasticLinearSystem, BilinearControlSystem> generate_heat_system(
    const HeatBenchmarkSpec& spec) {
    detail::HeatMatrices hm = detail::assemble_heat(spec.k, spec.robinCoefficient);
    const Index n = spec.k * spec.k;
    if (spec.mode == BenchmarkMode::Stochastic) {
        StochasticLinearSystem sys;
        sys.A = std::move(hm.A);
        sys.N = {std::move(hm.N)};
        sys.B = std::move(hm.B);
        return sys;
    }
    BilinearControlSystem sys;
    sys.A = std::move(hm.A);
    sys.N = {std::move(hm.N), Matrix::Zero(n, n)};
    sys.B = Matrix::Zero(n, 2);
    sys.B.col(1) = hm.B.col(0);
    sys.gamma = spec.gamma;
    return sys;
}

inline StochasticLinearSystem generate_heat_stochastic(Index k, double robin = 0.8) {
    HeatBenchmarkSpec spec;
    spec.k = k;
    spec.robinCoefficient = robin;
    spec.mode = BenchmarkMode::Stochastic;
    return std::get<StochasticLinearSystem>(generate_heat_system(spec));
}

inline BilinearControlSystem generate_heat_bilinear(Index k, double gamma = 1.0,
                                                    double robin = 0.8) {
    HeatBenchmarkSpec spec;
    spec.k = k;
    spec.robinCoefficient = robin;
    spec.mode = BenchmarkMode::Bilinear;
    spec.gamma = gamma;
    return std::get<BilinearControlSystem>(generate_heat_system(spec));
}

}  // namespace gramor
