#ifndef TENPROJ_TENSOR_HPP
#define TENPROJ_TENSOR_HPP

#include <span>
#include <vector>

#include "tenproj/types.hpp"

namespace tenproj {

/// Dense 3-order tensor stored column-major: element (a,b,c) lives at
/// offset a + p1*b + p1*p2*c, so the storage order is exactly vec(X).
class Tensor3 {
 public:
  Tensor3() = default;
  explicit Tensor3(Dims3 dims);
  Tensor3(Dims3 dims, std::vector<double> data);

  static Tensor3 from_span(Dims3 dims, std::span<const double> data);

  const Dims3& dims() const noexcept { return dims_; }
  /// Extent of a 1-based mode.
  Index dim(int mode) const;
  Index size() const noexcept { return static_cast<Index>(data_.size()); }

  double& operator()(Index a, Index b, Index c) noexcept {
    return data_[static_cast<std::size_t>(a + dims_[0] * (b + dims_[1] * c))];
  }
  double operator()(Index a, Index b, Index c) const noexcept {
    return data_[static_cast<std::size_t>(a + dims_[0] * (b + dims_[1] * c))];
  }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  Eigen::Map<Vector> flat() { return {data_.data(), size()}; }
  Eigen::Map<const Vector> flat() const { return {data_.data(), size()}; }

  Tensor3& operator+=(const Tensor3& other);
  Tensor3& operator*=(double s);
  double frobenius_norm() const;

  friend bool operator==(const Tensor3&, const Tensor3&) = default;

 private:
  Dims3 dims_{0, 0, 0};
  std::vector<double> data_;
};

Vector vec(const Tensor3& x);
Vector vec(const Matrix& m);

/// Mode-k unfolding (k in {1,2,3}) with the Kolda-Bader column ordering:
///   X_(1): p1 x p2p3, column b + p2*c
///   X_(2): p2 x p1p3, column a + p1*c
///   X_(3): p3 x p1p2, column a + p1*b
Matrix unfold(const Tensor3& x, int mode);

/// Inverse of unfold for a tensor of extents `dims`.
Tensor3 fold(const Matrix& m, int mode, const Dims3& dims);

/// X x_k M: replaces p_k by M.rows(). Equal to fold(M * unfold(X,k)), but
/// computed on mapped views of the storage without forming the unfolding.
Tensor3 kmode_product(const Tensor3& x, int mode, const Matrix& m);

/// X x_k M^T, without materializing the transpose.
Tensor3 kmode_product_transposed(const Tensor3& x, int mode, const Matrix& m);

/// unfold(a, k) * unfold(b, k)^T for tensors that agree on every mode but k,
/// evaluated on mapped storage.
Matrix unfolded_product(const Tensor3& a, const Tensor3& b, int mode);

Matrix kronecker(const Matrix& a, const Matrix& b);

/// K_{m,n} with K * vec(A) = vec(A^T) for every m x n matrix A.
Matrix commutation_matrix(Index m, Index n);

/// P^{(k)} with vec(Z) = P^{(k)} * vec(unfold(Z, k)) for every Z of extents `dims`.
Matrix mode_permutation_matrix(int mode, const Dims3& dims);

}  // namespace tenproj

#endif  // TENPROJ_TENSOR_HPP
