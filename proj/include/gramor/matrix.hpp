#pragma once

#include <Eigen/Dense>

namespace gramor {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

inline Matrix symmetrize(const Matrix& X) {
    return 0.5 * (X + X.transpose());
}

/// Kronecker product A (x) B.
inline Matrix kron(const Matrix& A, const Matrix& B) {
    Matrix K(A.rows() * B.rows(), A.cols() * B.cols());
    for (Index i = 0; i < A.rows(); ++i)
        for (Index j = 0; j < A.cols(); ++j)
            K.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
    return K;
}

/// Column-major stacking, vec(AXB) = (B^T (x) A) vec(X).
inline Vector vec(const Matrix& X) {
    return Eigen::Map<const Vector>(X.data(), X.size());
}

inline Matrix unvec(const Vector& v, Index rows, Index cols) {
    return Eigen::Map<const Matrix>(v.data(), rows, cols);
}

}  // namespace gramor
