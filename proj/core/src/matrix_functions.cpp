#include "tenproj/matrix_functions.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "tenproj/tensor.hpp"

namespace tenproj {

namespace {

constexpr double kSymmetryTol = 1e-12;
constexpr double kOffDiagTol = 1e-14;
constexpr int kMaxSweeps = 30;

double off_diagonal_norm(const Matrix& a) {
  double s = 0.0;
  for (Index j = 0; j < a.cols(); ++j) {
    for (Index i = 0; i < a.rows(); ++i) {
      if (i != j) s += a(i, j) * a(i, j);
    }
  }
  return std::sqrt(s);
}

void require_positive(const SymEig& eig) {
  for (Index i = 0; i < eig.values.size(); ++i) {
    if (!(eig.values(i) > 0.0)) {
      throw std::domain_error("matrix is not positive definite (eigenvalue " +
                              std::to_string(eig.values(i)) + ")");
    }
  }
}

// -1 / (sqrt(d_i d_j) (sqrt d_i + sqrt d_j)); continuous as d_i -> d_j.
Matrix inv_sqrt_divided_differences(const Vector& d) {
  const Index q = d.size();
  const Vector s = d.array().sqrt();
  Matrix f(q, q);
  for (Index j = 0; j < q; ++j) {
    for (Index i = 0; i < q; ++i) f(i, j) = -1.0 / (s(i) * s(j) * (s(i) + s(j)));
  }
  return f;
}

}  // namespace

SymEig sym_eig(const Matrix& m) {
  if (m.rows() != m.cols()) throw std::invalid_argument("sym_eig: matrix is not square");
  const Index n = m.rows();
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if (((m - m.transpose()).cwiseAbs().maxCoeff()) > kSymmetryTol * scale) {
    throw std::invalid_argument("sym_eig: matrix is not symmetric");
  }

  Matrix a = 0.5 * (m + m.transpose());
  Matrix v = Matrix::Identity(n, n);
  const double threshold = kOffDiagTol * a.norm();

  int sweep = 0;
  while (off_diagonal_norm(a) > threshold) {
    if (sweep++ == kMaxSweeps) throw std::runtime_error("sym_eig: Jacobi sweeps did not converge");
    for (Index p = 0; p < n - 1; ++p) {
      for (Index q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        // Symmetric Schur rotation annihilating a(p,q).
        const double tau = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        for (Index k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Index k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (Index k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index i, Index j) { return a(i, i) > a(j, j); });

  SymEig out{Vector(n), Matrix(n, n)};
  for (Index k = 0; k < n; ++k) {
    const Index src = order[static_cast<std::size_t>(k)];
    out.values(k) = a(src, src);
    Vector col = v.col(src);
    Index arg = 0;
    col.cwiseAbs().maxCoeff(&arg);
    if (col(arg) < 0.0) col = -col;
    out.vectors.col(k) = col;
  }
  return out;
}

Matrix spectral_power(const SymEig& eig, double exponent) {
  require_positive(eig);
  const Vector p = eig.values.array().pow(exponent);
  return eig.vectors * p.asDiagonal() * eig.vectors.transpose();
}

Matrix inv_sqrt_psd(const Matrix& m) { return spectral_power(sym_eig(m), -0.5); }

Matrix inv_sqrt_jacobian_paper(const Matrix& m) {
  const Matrix a = spectral_power(sym_eig(m), -0.75);
  return -0.5 * kronecker(a, a);
}

Matrix inv_sqrt_jacobian_exact(const Matrix& m) {
  const SymEig eig = sym_eig(m);
  require_positive(eig);
  const Matrix f = inv_sqrt_divided_differences(eig.values);
  const Matrix qq = kronecker(eig.vectors, eig.vectors);
  // vec(Q X Q^T) = (Q kron Q) vec(X); the eigen-coordinate scaling is diagonal.
  return qq * vec(f).asDiagonal() * qq.transpose();
}

Matrix inv_sqrt_vjp_exact(const SymEig& eig, const Matrix& grad_g) {
  require_positive(eig);
  const Matrix& q = eig.vectors;
  const Matrix scaled = (q.transpose() * grad_g * q).cwiseProduct(inv_sqrt_divided_differences(eig.values));
  return q * scaled * q.transpose();
}

Matrix inv_sqrt_vjp_paper(const SymEig& eig, const Matrix& grad_g) {
  const Matrix a = spectral_power(eig, -0.75);
  return -0.5 * a * grad_g * a;
}

}  // namespace tenproj
