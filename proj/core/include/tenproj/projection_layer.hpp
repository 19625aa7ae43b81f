#ifndef TENPROJ_PROJECTION_LAYER_HPP
#define TENPROJ_PROJECTION_LAYER_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "tenproj/matrix_functions.hpp"
#include "tenproj/tensor.hpp"

namespace tenproj {

/// Which derivative of G = M^{-1/2} the backward pass chains through.
enum class JacobianMode {
  exact,  ///< Frechet derivative; agrees with finite differences
  paper,  ///< -1/2 M^{-3/4} kron M^{-3/4}; exact only when M is a multiple of I
};

std::string_view to_string(JacobianMode mode);
/// Accepts "exact" or "paper"; throws std::invalid_argument otherwise.
JacobianMode parse_jacobian_mode(std::string_view text);

struct ProjectionConfig {
  Dims3 input_dims{1, 1, 1};
  Dims3 output_dims{1, 1, 1};
  std::array<bool, 3> enabled{true, true, true};
  std::array<double, 3> eps{0.01, 0.01, 0.01};
  JacobianMode jacobian_mode = JacobianMode::exact;

  /// Throws std::invalid_argument if q_k > p_k on an enabled mode, q_k != p_k
  /// on a disabled one, or eps_k <= 0.
  void validate() const;
};

/// U = W (W^T W + eps^2 I)^{-1/2}, with the intermediates the backward pass needs.
struct Orthogonalized {
  Matrix u;
  Matrix g;
  Matrix m;
  SymEig eig;  // of m
};

Orthogonalized orthogonalize(const Matrix& w, double eps);

/// d vec(U) / d vec(W) for U = W G(W): (G^T kron I_p) + (I_q kron W) dG/dM dM/dW,
/// with dM/dW = K_{q,q}(I_q kron W^T) + I_q kron W^T. Materialized; for
/// reference checks.
Matrix dvecU_dvecW(const Matrix& w, double eps, JacobianMode mode);

/// dL/dW given dL/dU, without forming any Kronecker product.
Matrix chain_projection_gradient(const Matrix& w, const Orthogonalized& f, const Matrix& grad_u,
                                 JacobianMode mode);

struct LayerGradients {
  std::array<std::optional<Matrix>, 3> dw;  // engaged for enabled modes only
  std::vector<Tensor3> dx;
};

/// Trainable multilinear projection Z = X x1 U1^T x2 U2^T x3 U3^T with
/// U_k = W_k (W_k^T W_k + eps_k^2 I)^{-1/2}. Disabled modes use U_k = I and
/// carry no parameters.
class TensorProjectionLayer {
 public:
  /// W_k entries are drawn from U[-a, a], a = sqrt(6 / (p_k + q_k)).
  TensorProjectionLayer(ProjectionConfig config, std::uint64_t seed);

  const ProjectionConfig& config() const noexcept { return config_; }
  bool mode_enabled(int mode) const;
  void set_jacobian_mode(JacobianMode mode) noexcept { config_.jacobian_mode = mode; }

  const Matrix& weight(int mode) const;
  Matrix& weight(int mode);
  void set_weight(int mode, Matrix w);
  Index parameter_count() const;

  /// Current U_k (identity on disabled modes).
  Matrix projection(int mode) const;

  /// Projects one tensor with the current weights; does not touch the cache.
  Tensor3 apply(const Tensor3& x) const;

  std::vector<Tensor3> forward(std::span<const Tensor3> batch);

  /// Kronecker-free backward. dW_k is the plain sum over the batch.
  LayerGradients backward(std::span<const Tensor3> grad_out) const;

  /// Same quantities through the fully materialized Jacobians
  /// (dvecZ_dvecU, dvecU_dvecW, U3^T kron U2^T kron U1^T). Small shapes only.
  LayerGradients backward_reference(std::span<const Tensor3> grad_out) const;

  /// d vec(Z) / d vec(U_k) for one cached-forward sample:
  /// P^{(k)} [ {(U_c^T kron U_b^T) X_(k)^T} kron I_{q_k} ] K_{p_k,q_k},
  /// where (b, c) are the other two modes in increasing order.
  Matrix dvecZ_dvecU(int mode, const Tensor3& x) const;

  bool has_cache() const noexcept { return cache_valid_; }

 private:
  Matrix cached_u(int mode) const;
  void require_cache(std::span<const Tensor3> grad_out) const;

  ProjectionConfig config_;
  std::array<Matrix, 3> w_;
  std::array<std::optional<Orthogonalized>, 3> factors_;
  std::vector<Tensor3> inputs_;
  bool cache_valid_ = false;
};

}  // namespace tenproj

#endif  // TENPROJ_PROJECTION_LAYER_HPP
