#ifndef TENPROJ_MATRIX_FUNCTIONS_HPP
#define TENPROJ_MATRIX_FUNCTIONS_HPP

#include "tenproj/types.hpp"

namespace tenproj {

/// Spectral decomposition M = Q diag(values) Q^T of a real symmetric matrix.
/// Eigenvalues are sorted in descending order; each eigenvector has its
/// largest-magnitude component positive.
struct SymEig {
  Vector values;
  Matrix vectors;
};

/// Cyclic Jacobi eigensolver. Sweeps in row-major (p < q) order until the
/// off-diagonal Frobenius norm is at most 1e-14 * ||M||_F, for up to 30
/// sweeps. Throws std::invalid_argument for non-square or asymmetric input
/// and std::runtime_error if the sweep budget runs out.
SymEig sym_eig(const Matrix& m);

/// Q diag(values^exponent) Q^T. All eigenvalues must be positive.
Matrix spectral_power(const SymEig& eig, double exponent);

/// M^{-1/2} for symmetric positive-definite M. Throws std::domain_error on a
/// non-positive eigenvalue.
Matrix inv_sqrt_psd(const Matrix& m);

/// -1/2 (M^{-3/4} kron M^{-3/4}). This is the derivative of M^{-1/2} only
/// along perturbations that commute with M; kept for comparison runs.
Matrix inv_sqrt_jacobian_paper(const Matrix& m);

/// Frechet derivative of M -> M^{-1/2} as a q^2 x q^2 matrix acting on
/// vec(dM) for symmetric dM. In the eigenbasis of M = Q D Q^T the (i,j)
/// coordinate is scaled by -1 / (sqrt(d_i d_j) (sqrt(d_i) + sqrt(d_j))).
Matrix inv_sqrt_jacobian_exact(const Matrix& m);

/// Vector-Jacobian products of M -> M^{-1/2}: given dL/dG (q x q), returns
/// dL/dM without forming the q^2 x q^2 Jacobian.
Matrix inv_sqrt_vjp_exact(const SymEig& eig, const Matrix& grad_g);
Matrix inv_sqrt_vjp_paper(const SymEig& eig, const Matrix& grad_g);

}  // namespace tenproj

#endif  // TENPROJ_MATRIX_FUNCTIONS_HPP
