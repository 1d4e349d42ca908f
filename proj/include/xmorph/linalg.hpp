#pragma once

#include <Eigen/Dense>

namespace xmorph {

struct EigenPairs {
    Eigen::VectorXd values;   // ascending
    Eigen::MatrixXd vectors;  // column i pairs with values[i]
    int sweeps = 0;           // Jacobi sweeps used (0 for the tridiagonal path)
};

enum class EigenMethod {
    Jacobi,       // cyclic Jacobi rotations
    Tridiagonal,  // Householder tridiagonalization + implicit QL (Eigen)
    Auto,         // Jacobi up to kJacobiMaxDim, tridiagonal above
};

inline constexpr int kJacobiMaxDim = 192;

// Symmetric eigendecomposition by cyclic Jacobi rotations, iterated until the
// off-diagonal Frobenius norm drops below tol * ||S||_F.
EigenPairs jacobi_eigen(const Eigen::MatrixXd& s, double tol = 1e-12, int max_sweeps = 100);

// Solves A v = lambda (B + eps I) v for symmetric A and symmetric PSD B via
// Cholesky reduction. Eigenvectors satisfy v^T (B + eps I) v = 1 and have
// their largest-magnitude component positive.
// Throws NotSymmetric, CholeskyFailure, DimensionMismatch.
EigenPairs solve_generalized_eig(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double eps,
                                 EigenMethod method = EigenMethod::Auto);

// Flips each column so its largest-magnitude entry is positive.
void fix_eigenvector_signs(Eigen::MatrixXd& vectors);

}  // namespace xmorph
