#include "tenproj/tensor.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace tenproj {

void check_mode(int mode) {
  if (mode < 1 || mode > 3) {
    throw std::invalid_argument("mode index must be 1, 2 or 3, got " + std::to_string(mode));
  }
}

namespace {

Index element_count(const Dims3& dims) {
  for (Index d : dims) {
    if (d < 1) throw std::invalid_argument("tensor extents must be positive");
  }
  return dims[0] * dims[1] * dims[2];
}

// Rows and columns of the mode-k unfolding.
std::pair<Index, Index> unfolded_shape(const Dims3& d, int mode) {
  switch (mode) {
    case 1: return {d[0], d[1] * d[2]};
    case 2: return {d[1], d[0] * d[2]};
    default: return {d[2], d[0] * d[1]};
  }
}

template <bool Transposed>
Tensor3 kmode_impl(const Tensor3& x, int mode, const Matrix& m) {
  check_mode(mode);
  const Dims3& d = x.dims();
  const Index inner = Transposed ? m.rows() : m.cols();
  const Index outer = Transposed ? m.cols() : m.rows();
  if (inner != d[mode - 1]) {
    throw std::invalid_argument("kmode_product: matrix inner dimension " + std::to_string(inner) +
                                " does not match tensor mode-" + std::to_string(mode) +
                                " extent " + std::to_string(d[mode - 1]));
  }
  Dims3 out_dims = d;
  out_dims[mode - 1] = outer;
  Tensor3 out(out_dims);

  using CMap = Eigen::Map<const Matrix>;
  using MMap = Eigen::Map<Matrix>;
  const double* src = x.data().data();
  double* dst = out.data().data();

  switch (mode) {
    case 1: {
      CMap xs(src, d[0], d[1] * d[2]);
      MMap os(dst, outer, d[1] * d[2]);
      if constexpr (Transposed) os.noalias() = m.transpose() * xs;
      else os.noalias() = m * xs;
      break;
    }
    case 2: {
      // Each frontal slice X(:,:,c) is a p1 x p2 column-major block.
      for (Index c = 0; c < d[2]; ++c) {
        CMap xs(src + d[0] * d[1] * c, d[0], d[1]);
        MMap os(dst + d[0] * outer * c, d[0], outer);
        if constexpr (Transposed) os.noalias() = xs * m;
        else os.noalias() = xs * m.transpose();
      }
      break;
    }
    default: {
      CMap xs(src, d[0] * d[1], d[2]);
      MMap os(dst, d[0] * d[1], outer);
      if constexpr (Transposed) os.noalias() = xs * m;
      else os.noalias() = xs * m.transpose();
      break;
    }
  }
  return out;
}

}  // namespace

Tensor3::Tensor3(Dims3 dims) : dims_(dims), data_(static_cast<std::size_t>(element_count(dims)), 0.0) {}

Tensor3::Tensor3(Dims3 dims, std::vector<double> data) : dims_(dims), data_(std::move(data)) {
  if (static_cast<Index>(data_.size()) != element_count(dims_)) {
    throw std::invalid_argument("Tensor3: data length does not match p1*p2*p3");
  }
}

Tensor3 Tensor3::from_span(Dims3 dims, std::span<const double> data) {
  return Tensor3(dims, std::vector<double>(data.begin(), data.end()));
}

Index Tensor3::dim(int mode) const {
  check_mode(mode);
  return dims_[mode - 1];
}

Tensor3& Tensor3::operator+=(const Tensor3& other) {
  if (other.dims_ != dims_) throw std::invalid_argument("Tensor3 +=: extent mismatch");
  flat() += other.flat();
  return *this;
}

Tensor3& Tensor3::operator*=(double s) {
  flat() *= s;
  return *this;
}

double Tensor3::frobenius_norm() const { return flat().norm(); }

Vector vec(const Tensor3& x) { return x.flat(); }

Vector vec(const Matrix& m) { return Eigen::Map<const Vector>(m.data(), m.size()); }

Matrix unfold(const Tensor3& x, int mode) {
  check_mode(mode);
  const Dims3& d = x.dims();
  auto [rows, cols] = unfolded_shape(d, mode);
  Matrix out(rows, cols);
  for (Index c = 0; c < d[2]; ++c) {
    for (Index b = 0; b < d[1]; ++b) {
      for (Index a = 0; a < d[0]; ++a) {
        const double v = x(a, b, c);
        switch (mode) {
          case 1: out(a, b + d[1] * c) = v; break;
          case 2: out(b, a + d[0] * c) = v; break;
          default: out(c, a + d[0] * b) = v; break;
        }
      }
    }
  }
  return out;
}

Tensor3 fold(const Matrix& m, int mode, const Dims3& dims) {
  check_mode(mode);
  Tensor3 out(dims);
  auto [rows, cols] = unfolded_shape(dims, mode);
  if (m.rows() != rows || m.cols() != cols) {
    throw std::invalid_argument("fold: matrix is " + std::to_string(m.rows()) + "x" +
                                std::to_string(m.cols()) + ", mode-" + std::to_string(mode) +
                                " unfolding of the target needs " + std::to_string(rows) + "x" +
                                std::to_string(cols));
  }
  for (Index c = 0; c < dims[2]; ++c) {
    for (Index b = 0; b < dims[1]; ++b) {
      for (Index a = 0; a < dims[0]; ++a) {
        switch (mode) {
          case 1: out(a, b, c) = m(a, b + dims[1] * c); break;
          case 2: out(a, b, c) = m(b, a + dims[0] * c); break;
          default: out(a, b, c) = m(c, a + dims[0] * b); break;
        }
      }
    }
  }
  return out;
}

Tensor3 kmode_product(const Tensor3& x, int mode, const Matrix& m) { return kmode_impl<false>(x, mode, m); }

Tensor3 kmode_product_transposed(const Tensor3& x, int mode, const Matrix& m) {
  return kmode_impl<true>(x, mode, m);
}

Matrix unfolded_product(const Tensor3& a, const Tensor3& b, int mode) {
  check_mode(mode);
  const Dims3& da = a.dims();
  const Dims3& db = b.dims();
  for (int k = 0; k < 3; ++k) {
    if (k != mode - 1 && da[k] != db[k]) {
      throw std::invalid_argument("unfolded_product: tensors differ outside mode " + std::to_string(mode));
    }
  }
  using CMap = Eigen::Map<const Matrix>;
  const double* pa = a.data().data();
  const double* pb = b.data().data();
  switch (mode) {
    case 1:
      return CMap(pa, da[0], da[1] * da[2]) * CMap(pb, db[0], db[1] * db[2]).transpose();
    case 2: {
      Matrix out = Matrix::Zero(da[1], db[1]);
      for (Index c = 0; c < da[2]; ++c) {
        out.noalias() += CMap(pa + da[0] * da[1] * c, da[0], da[1]).transpose() *
                         CMap(pb + db[0] * db[1] * c, db[0], db[1]);
      }
      return out;
    }
    default:
      return CMap(pa, da[0] * da[1], da[2]).transpose() * CMap(pb, db[0] * db[1], db[2]);
  }
}

Matrix kronecker(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index j = 0; j < a.cols(); ++j) {
    for (Index i = 0; i < a.rows(); ++i) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

Matrix commutation_matrix(Index m, Index n) {
  if (m < 1 || n < 1) throw std::invalid_argument("commutation_matrix: sizes must be positive");
  Matrix k = Matrix::Zero(m * n, m * n);
  // A(i,j) sits at i + m*j in vec(A) and at j + n*i in vec(A^T).
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < m; ++i) k(j + n * i, i + m * j) = 1.0;
  }
  return k;
}

Matrix mode_permutation_matrix(int mode, const Dims3& dims) {
  check_mode(mode);
  const Index total = element_count(dims);
  const Index rows = unfolded_shape(dims, mode).first;
  Matrix p = Matrix::Zero(total, total);
  for (Index c = 0; c < dims[2]; ++c) {
    for (Index b = 0; b < dims[1]; ++b) {
      for (Index a = 0; a < dims[0]; ++a) {
        const Index tensor_offset = a + dims[0] * (b + dims[1] * c);
        Index r = 0;
        Index col = 0;
        switch (mode) {
          case 1: r = a; col = b + dims[1] * c; break;
          case 2: r = b; col = a + dims[0] * c; break;
          default: r = c; col = a + dims[0] * b; break;
        }
        p(tensor_offset, r + rows * col) = 1.0;
      }
    }
  }
  return p;
}

}  // namespace tenproj
