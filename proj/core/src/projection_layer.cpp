#include "tenproj/projection_layer.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "tenproj/rng.hpp"

namespace tenproj {

std::string_view to_string(JacobianMode mode) {
  return mode == JacobianMode::exact ? "exact" : "paper";
}

JacobianMode parse_jacobian_mode(std::string_view text) {
  if (text == "exact") return JacobianMode::exact;
  if (text == "paper") return JacobianMode::paper;
  throw std::invalid_argument("jacobian mode must be 'exact' or 'paper', got '" + std::string(text) + "'");
}

void ProjectionConfig::validate() const {
  for (int k = 0; k < 3; ++k) {
    const std::string mode = std::to_string(k + 1);
    if (input_dims[k] < 1 || output_dims[k] < 1) {
      throw std::invalid_argument("projection extents must be positive (mode " + mode + ")");
    }
    if (enabled[k] && output_dims[k] > input_dims[k]) {
      throw std::invalid_argument("projection mode " + mode + " would expand " +
                                  std::to_string(input_dims[k]) + " -> " + std::to_string(output_dims[k]));
    }
    if (!enabled[k] && output_dims[k] != input_dims[k]) {
      throw std::invalid_argument("disabled projection mode " + mode + " must keep its extent");
    }
    if (!(eps[k] > 0.0) || !std::isfinite(eps[k])) {
      throw std::invalid_argument("projection eps for mode " + mode + " must be positive");
    }
  }
}

Orthogonalized orthogonalize(const Matrix& w, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("orthogonalize: eps must be positive");
  if (!w.allFinite()) throw std::invalid_argument("orthogonalize: W has non-finite entries");
  Orthogonalized out;
  out.m = w.transpose() * w;
  out.m = 0.5 * (out.m + out.m.transpose());
  out.m.diagonal().array() += eps * eps;
  out.eig = sym_eig(out.m);
  out.g = spectral_power(out.eig, -0.5);
  out.u = w * out.g;
  return out;
}

Matrix dvecU_dvecW(const Matrix& w, double eps, JacobianMode mode) {
  const Index p = w.rows();
  const Index q = w.cols();
  const Orthogonalized f = orthogonalize(w, eps);
  const Matrix iq = Matrix::Identity(q, q);
  const Matrix ip = Matrix::Identity(p, p);

  const Matrix iq_wt = kronecker(iq, w.transpose());
  const Matrix dm_dw = commutation_matrix(q, q) * iq_wt + iq_wt;
  const Matrix dg_dm = mode == JacobianMode::exact ? inv_sqrt_jacobian_exact(f.m) : inv_sqrt_jacobian_paper(f.m);
  return kronecker(f.g.transpose(), ip) + kronecker(iq, w) * dg_dm * dm_dw;
}

Matrix chain_projection_gradient(const Matrix& w, const Orthogonalized& f, const Matrix& grad_u,
                                 JacobianMode mode) {
  const Matrix grad_g = w.transpose() * grad_u;
  const Matrix grad_m =
      mode == JacobianMode::exact ? inv_sqrt_vjp_exact(f.eig, grad_g) : inv_sqrt_vjp_paper(f.eig, grad_g);
  return grad_u * f.g.transpose() + w * (grad_m + grad_m.transpose());
}

TensorProjectionLayer::TensorProjectionLayer(ProjectionConfig config, std::uint64_t seed)
    : config_(config) {
  config_.validate();
  for (int k = 0; k < 3; ++k) {
    if (!config_.enabled[k]) continue;
    const Index p = config_.input_dims[k];
    const Index q = config_.output_dims[k];
    const double a = std::sqrt(6.0 / static_cast<double>(p + q));
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(k)));
    w_[k].resize(p, q);
    rng.fill_uniform(w_[k], -a, a);
  }
}

bool TensorProjectionLayer::mode_enabled(int mode) const {
  check_mode(mode);
  return config_.enabled[mode - 1];
}

const Matrix& TensorProjectionLayer::weight(int mode) const {
  if (!mode_enabled(mode)) throw std::invalid_argument("projection mode " + std::to_string(mode) + " is disabled");
  return w_[mode - 1];
}

Matrix& TensorProjectionLayer::weight(int mode) {
  if (!mode_enabled(mode)) throw std::invalid_argument("projection mode " + std::to_string(mode) + " is disabled");
  return w_[mode - 1];
}

void TensorProjectionLayer::set_weight(int mode, Matrix w) {
  Matrix& slot = weight(mode);
  if (w.rows() != slot.rows() || w.cols() != slot.cols()) {
    throw std::invalid_argument("set_weight: shape mismatch for mode " + std::to_string(mode));
  }
  slot = std::move(w);
}

Index TensorProjectionLayer::parameter_count() const {
  Index n = 0;
  for (int k = 0; k < 3; ++k) {
    if (config_.enabled[k]) n += config_.input_dims[k] * config_.output_dims[k];
  }
  return n;
}

Matrix TensorProjectionLayer::projection(int mode) const {
  if (!mode_enabled(mode)) return Matrix::Identity(config_.input_dims[mode - 1], config_.input_dims[mode - 1]);
  return orthogonalize(w_[mode - 1], config_.eps[mode - 1]).u;
}

Tensor3 TensorProjectionLayer::apply(const Tensor3& x) const {
  if (x.dims() != config_.input_dims) throw std::invalid_argument("projection input has wrong extents");
  Tensor3 z = x;
  for (int k = 1; k <= 3; ++k) {
    if (config_.enabled[k - 1]) z = kmode_product_transposed(z, k, projection(k));
  }
  return z;
}

std::vector<Tensor3> TensorProjectionLayer::forward(std::span<const Tensor3> batch) {
  for (const Tensor3& x : batch) {
    if (x.dims() != config_.input_dims) throw std::invalid_argument("projection input has wrong extents");
  }
  for (int k = 0; k < 3; ++k) {
    factors_[k].reset();
    if (config_.enabled[k]) factors_[k] = orthogonalize(w_[k], config_.eps[k]);
  }
  std::vector<Tensor3> out;
  out.reserve(batch.size());
  for (const Tensor3& x : batch) {
    Tensor3 z = x;
    for (int k = 0; k < 3; ++k) {
      if (factors_[k]) z = kmode_product_transposed(z, k + 1, factors_[k]->u);
    }
    out.push_back(std::move(z));
  }
  inputs_.assign(batch.begin(), batch.end());
  cache_valid_ = true;
  return out;
}

Matrix TensorProjectionLayer::cached_u(int mode) const {
  const auto& f = factors_[mode - 1];
  if (f) return f->u;
  return Matrix::Identity(config_.input_dims[mode - 1], config_.input_dims[mode - 1]);
}

void TensorProjectionLayer::require_cache(std::span<const Tensor3> grad_out) const {
  if (!cache_valid_) throw std::logic_error("projection backward called before forward");
  if (grad_out.size() != inputs_.size()) throw std::invalid_argument("projection backward: batch size mismatch");
  for (const Tensor3& g : grad_out) {
    if (g.dims() != config_.output_dims) throw std::invalid_argument("projection backward: gradient has wrong extents");
  }
}

LayerGradients TensorProjectionLayer::backward(std::span<const Tensor3> grad_out) const {
  require_cache(grad_out);
  LayerGradients grads;
  std::array<Matrix, 3> grad_u;
  for (int k = 0; k < 3; ++k) {
    if (factors_[k]) grad_u[k] = Matrix::Zero(config_.input_dims[k], config_.output_dims[k]);
  }

  grads.dx.reserve(grad_out.size());
  for (std::size_t i = 0; i < grad_out.size(); ++i) {
    const Tensor3& dz = grad_out[i];
    Tensor3 dx = dz;
    for (int k = 0; k < 3; ++k) {
      if (factors_[k]) dx = kmode_product(dx, k + 1, factors_[k]->u);
    }
    grads.dx.push_back(std::move(dx));

    for (int k = 0; k < 3; ++k) {
      if (!factors_[k]) continue;
      // dL/dU_k = Y_(k) dZ_(k)^T with Y = X projected on every other mode.
      Tensor3 y = inputs_[i];
      for (int j = 0; j < 3; ++j) {
        if (j != k && factors_[j]) y = kmode_product_transposed(y, j + 1, factors_[j]->u);
      }
      grad_u[k] += unfolded_product(y, dz, k + 1);
    }
  }

  for (int k = 0; k < 3; ++k) {
    if (factors_[k]) grads.dw[k] = chain_projection_gradient(w_[k], *factors_[k], grad_u[k], config_.jacobian_mode);
  }
  return grads;
}

Matrix TensorProjectionLayer::dvecZ_dvecU(int mode, const Tensor3& x) const {
  check_mode(mode);
  if (!cache_valid_) throw std::logic_error("dvecZ_dvecU needs a forward pass first");
  if (x.dims() != config_.input_dims) throw std::invalid_argument("dvecZ_dvecU: input has wrong extents");
  const Matrix u1 = cached_u(1);
  const Matrix u2 = cached_u(2);
  const Matrix u3 = cached_u(3);
  Matrix other;
  switch (mode) {
    case 1: other = kronecker(u3.transpose(), u2.transpose()); break;
    case 2: other = kronecker(u3.transpose(), u1.transpose()); break;
    default: other = kronecker(u2.transpose(), u1.transpose()); break;
  }
  const Index p = config_.input_dims[mode - 1];
  const Index q = config_.output_dims[mode - 1];
  const Matrix inner = kronecker(other * unfold(x, mode).transpose(), Matrix::Identity(q, q));
  return mode_permutation_matrix(mode, config_.output_dims) * inner * commutation_matrix(p, q);
}

LayerGradients TensorProjectionLayer::backward_reference(std::span<const Tensor3> grad_out) const {
  require_cache(grad_out);
  const Matrix full = kronecker(cached_u(3), kronecker(cached_u(2), cached_u(1)));
  std::array<Matrix, 3> du_dw;
  LayerGradients grads;
  for (int k = 0; k < 3; ++k) {
    if (!factors_[k]) continue;
    du_dw[k] = dvecU_dvecW(w_[k], config_.eps[k], config_.jacobian_mode);
    grads.dw[k] = Matrix::Zero(config_.input_dims[k], config_.output_dims[k]);
  }
  for (std::size_t i = 0; i < grad_out.size(); ++i) {
    const Vector dz = vec(grad_out[i]);
    // Row-vector convention: dL/dvec(X) = dL/dvec(Z) (U3^T kron U2^T kron U1^T).
    const Vector dx = (dz.transpose() * full.transpose()).transpose();
    grads.dx.emplace_back(config_.input_dims, std::vector<double>(dx.data(), dx.data() + dx.size()));
    for (int k = 0; k < 3; ++k) {
      if (!factors_[k]) continue;
      const Eigen::RowVectorXd row = dz.transpose() * dvecZ_dvecU(k + 1, inputs_[i]) * du_dw[k];
      *grads.dw[k] += Eigen::Map<const Matrix>(row.data(), config_.input_dims[k], config_.output_dims[k]);
    }
  }
  return grads;
}

}  // namespace tenproj
