#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "gramor/errors.hpp"
#include "gramor/matrix.hpp"

namespace gramor {

/// Ito system dx = (A x + B u) dt + sum_i N_i x dW_i.
/// q = 0 (no N matrices) is an ordinary deterministic linear system.
struct StochasticLinearSystem {
    Matrix A;               // n x n drift
    std::vector<Matrix> N;  // q diffusion coefficient matrices, n x n each
    Matrix B;               // n x m input map

    Index n() const { return A.rows(); }
    Index m() const { return B.cols(); }
    Index q() const { return static_cast<Index>(N.size()); }
};

/// Deterministic bilinear system z' = A z + B u + sum_i N_i z u_i,
/// one N per input channel. gamma is the rescaling parameter of the
/// associated stochastic-type Gramian equation.
struct BilinearControlSystem {
    Matrix A;
    std::vector<Matrix> N;  // m matrices, channel i of u multiplies N_i
    Matrix B;               // n x m
    double gamma = 1.0;

    Index n() const { return A.rows(); }
    Index m() const { return B.cols(); }
};

/// The stochastic-type companion (A, N_i/gamma, B/gamma) whose reachability
/// Gramian is the bilinear Gramian P_gamma.
inline StochasticLinearSystem scaled_stochastic(const BilinearControlSystem& sys) {
    StochasticLinearSystem s;
    s.A = sys.A;
    s.B = sys.B / sys.gamma;
    s.N.reserve(sys.N.size());
    for (const Matrix& Ni : sys.N) s.N.push_back(Ni / sys.gamma);
    return s;
}

enum class ReductionMethod { OS, BT };

inline const char* to_string(ReductionMethod m) {
    return m == ReductionMethod::OS ? "OS" : "BT";
}

/// Projected model x ~ V xhat with reduced matrices W^T A V, W^T N_i V, W^T B.
/// W == V for the Galerkin (OS) method; W is the oblique left basis for BT.
struct GalerkinRom {
    Matrix V;  // n x r
    Matrix W;  // n x r
    Matrix reducedA;
    std::vector<Matrix> reducedN;
    Matrix reducedB;
    ReductionMethod method = ReductionMethod::OS;
    Index sourceDim = 0;

    Index r() const { return V.cols(); }
};

/// The trivial projection V = W = I; the reduced system is the system itself.
inline GalerkinRom identity_rom(const StochasticLinearSystem& sys) {
    GalerkinRom rom;
    rom.V = Matrix::Identity(sys.n(), sys.n());
    rom.W = rom.V;
    rom.reducedA = sys.A;
    rom.reducedN = sys.N;
    rom.reducedB = sys.B;
    rom.method = ReductionMethod::OS;
    rom.sourceDim = sys.n();
    return rom;
}

namespace detail {

inline void check_finite(const Matrix& M, const std::string& name,
                         std::vector<std::string>& out) {
    for (Index j = 0; j < M.cols(); ++j)
        for (Index i = 0; i < M.rows(); ++i)
            if (!std::isfinite(M(i, j))) {
                out.push_back(name + "(" + std::to_string(i) + "," + std::to_string(j) +
                              ") is not finite");
                return;  // one violation per matrix is enough to name the entry
            }
}

inline void check_dims(const Matrix& A, const std::vector<Matrix>& N, const Matrix& B,
                       std::vector<std::string>& out) {
    const Index n = A.rows();
    if (n < 1) out.push_back("A must have at least one row");
    if (A.cols() != n)
        out.push_back("A is " + std::to_string(A.rows()) + "x" + std::to_string(A.cols()) +
                      ", expected square");
    for (std::size_t i = 0; i < N.size(); ++i)
        if (N[i].rows() != n || N[i].cols() != n)
            out.push_back("N[" + std::to_string(i) + "] is " + std::to_string(N[i].rows()) +
                          "x" + std::to_string(N[i].cols()) + ", expected " +
                          std::to_string(n) + "x" + std::to_string(n));
    if (B.rows() != n)
        out.push_back("B has " + std::to_string(B.rows()) + " rows, expected " +
                      std::to_string(n));
    if (B.cols() < 1) out.push_back("B must have at least one column");
}

}  // namespace detail

/// Returns every structural violation; an empty list means the system is valid.
inline std::vector<std::string> validate_system(const StochasticLinearSystem& sys) {
    std::vector<std::string> out;
    detail::check_dims(sys.A, sys.N, sys.B, out);
    detail::check_finite(sys.A, "A", out);
    for (std::size_t i = 0; i < sys.N.size(); ++i)
        detail::check_finite(sys.N[i], "N[" + std::to_string(i) + "]", out);
    detail::check_finite(sys.B, "B", out);
    return out;
}

inline std::vector<std::string> validate_system(const BilinearControlSystem& sys) {
    std::vector<std::string> out;
    detail::check_dims(sys.A, sys.N, sys.B, out);
    if (static_cast<Index>(sys.N.size()) != sys.B.cols())
        out.push_back("bilinear system has " + std::to_string(sys.N.size()) +
                      " N matrices but " + std::to_string(sys.B.cols()) +
                      " input channels");
    if (!(sys.gamma > 0.0))
        out.push_back("gamma must be positive, got " + std::to_string(sys.gamma));
    detail::check_finite(sys.A, "A", out);
    for (std::size_t i = 0; i < sys.N.size(); ++i)
        detail::check_finite(sys.N[i], "N[" + std::to_string(i) + "]", out);
    detail::check_finite(sys.B, "B", out);
    return out;
}

}  // namespace gramor
