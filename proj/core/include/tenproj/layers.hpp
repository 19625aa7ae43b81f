#ifndef TENPROJ_LAYERS_HPP
#define TENPROJ_LAYERS_HPP

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "tenproj/projection_layer.hpp"
#include "tenproj/types.hpp"

namespace tenproj {

// Activations travel between layers as a (h*w*c) x n matrix: one column per
// sample, each column a column-major h x w x c tensor (h fastest). A sample
// column is therefore exactly vec() of its Tensor3, and flatten is free.

enum class LayerKind : std::uint32_t {
  conv2d = 1,
  avgpool = 2,
  tensor_projection = 3,
  flatten = 4,
  dense = 5,
  dropout = 6,
  relu = 7,
};

std::string_view to_string(LayerKind kind);

enum class RunMode { train, eval };

enum class Padding { same, valid };

/// A trainable block and its gradient from the last backward call.
struct ParamBlock {
  std::string name;
  Matrix* value;
  Matrix* grad;
};

class Layer {
 public:
  Layer(Dims3 input_shape, Dims3 output_shape) : in_(input_shape), out_(output_shape) {}
  virtual ~Layer() = default;
  Layer(const Layer&) = delete;
  Layer& operator=(const Layer&) = delete;

  virtual LayerKind kind() const = 0;
  const Dims3& input_shape() const noexcept { return in_; }
  const Dims3& output_shape() const noexcept { return out_; }

  virtual Matrix forward(const Matrix& input, RunMode mode) = 0;
  /// Returns dL/dinput and overwrites the parameter gradients.
  virtual Matrix backward(const Matrix& grad_output) = 0;

  virtual std::vector<ParamBlock> params() { return {}; }
  virtual Index parameter_count() const { return 0; }

  void set_threads(int threads) noexcept { threads_ = threads < 1 ? 1 : threads; }

 protected:
  void check_input(const Matrix& input) const;
  void check_grad(const Matrix& grad_output, Index batch) const;

  Dims3 in_;
  Dims3 out_;
  int threads_ = 1;
};

Index shape_size(const Dims3& d);

struct Conv2dOptions {
  Index filters = 1;
  Index kernel_h = 3;
  Index kernel_w = 3;
  Index stride_h = 1;
  Index stride_w = 1;
  Padding padding = Padding::same;
};

/// Output extents of a convolution (or pooling window) along one axis.
/// Same padding follows the usual convention: out = ceil(in / stride), with the
/// smaller half of the padding placed before the input.
struct ConvAxis {
  Index out;
  Index pad_before;
};
ConvAxis conv_axis(Index in, Index kernel, Index stride, Padding padding);

/// Cross-correlation with bias. Weight is (kh*kw*c_in) x c_out with row
/// index ki + kh*(kj + kw*ci); bias is c_out x 1.
class Conv2d final : public Layer {
 public:
  Conv2d(Dims3 input_shape, Conv2dOptions options, std::uint64_t seed);

  LayerKind kind() const override { return LayerKind::conv2d; }
  Matrix forward(const Matrix& input, RunMode mode) override;
  Matrix backward(const Matrix& grad_output) override;
  std::vector<ParamBlock> params() override;
  Index parameter_count() const override { return weight_.size() + bias_.size(); }

  const Conv2dOptions& options() const noexcept { return opt_; }
  Matrix& weight() noexcept { return weight_; }
  Matrix& bias() noexcept { return bias_; }

 private:
  Conv2dOptions opt_;
  ConvAxis ay_;
  ConvAxis ax_;
  Matrix weight_, bias_, grad_weight_, grad_bias_;
  Matrix cols_;  // (pixels*n) x (kh*kw*c_in), rows grouped per sample
  Index batch_ = -1;
};

/// Direct-loop convolution used to cross-check the im2col path.
Matrix conv2d_direct(const Matrix& input, const Dims3& input_shape, const Matrix& weight, const Matrix& bias,
                     const Conv2dOptions& options);

/// Non-overlapping mean pooling with a pool_h x pool_w window.
class AvgPool2d final : public Layer {
 public:
  /// Throws std::invalid_argument when the spatial extents are not multiples
  /// of the window, unless `truncate` drops the remainder rows/columns.
  AvgPool2d(Dims3 input_shape, Index pool_h = 2, Index pool_w = 2, bool truncate = false);

  LayerKind kind() const override { return LayerKind::avgpool; }
  Matrix forward(const Matrix& input, RunMode mode) override;
  Matrix backward(const Matrix& grad_output) override;

 private:
  Index ph_, pw_;
  Index batch_ = -1;
};

class Flatten final : public Layer {
 public:
  explicit Flatten(Dims3 input_shape);
  LayerKind kind() const override { return LayerKind::flatten; }
  Matrix forward(const Matrix& input, RunMode mode) override;
  Matrix backward(const Matrix& grad_output) override;
};

/// y = W x + b with W of shape units x inputs. Input must be flat (d,1,1).
class Dense final : public Layer {
 public:
  Dense(Dims3 input_shape, Index units, std::uint64_t seed);

  LayerKind kind() const override { return LayerKind::dense; }
  Matrix forward(const Matrix& input, RunMode mode) override;
  Matrix backward(const Matrix& grad_output) override;
  std::vector<ParamBlock> params() override;
  Index parameter_count() const override { return weight_.size() + bias_.size(); }

  Matrix& weight() noexcept { return weight_; }
  Matrix& bias() noexcept { return bias_; }

 private:
  Matrix weight_, bias_, grad_weight_, grad_bias_;
  Matrix input_;
};

class Relu final : public Layer {
 public:
  explicit Relu(Dims3 shape) : Layer(shape, shape) {}
  LayerKind kind() const override { return LayerKind::relu; }
  Matrix forward(const Matrix& input, RunMode mode) override;
  Matrix backward(const Matrix& grad_output) override;

 private:
  Matrix input_;
};

/// Inverted dropout. In train mode each unit is zeroed with probability
/// `rate` and survivors are scaled by 1/(1-rate); eval mode is the identity.
/// Masks are counter-based: a function of (seed, step, element) only.
class Dropout final : public Layer {
 public:
  Dropout(Dims3 shape, double rate, std::uint64_t seed);
  LayerKind kind() const override { return LayerKind::dropout; }
  Matrix forward(const Matrix& input, RunMode mode) override;
  Matrix backward(const Matrix& grad_output) override;

  double rate() const noexcept { return rate_; }
  std::uint64_t step() const noexcept { return step_; }
  void set_step(std::uint64_t step) noexcept { step_ = step; }

 private:
  double rate_;
  std::uint64_t seed_;
  std::uint64_t step_ = 0;
  Index batch_ = -1;
  Matrix mask_;  // empty after an eval-mode forward
};

/// Adapter running a TensorProjectionLayer on per-sample (p1,p2,p3) columns.
class TensorProjection final : public Layer {
 public:
  TensorProjection(ProjectionConfig config, std::uint64_t seed);
  LayerKind kind() const override { return LayerKind::tensor_projection; }
  Matrix forward(const Matrix& input, RunMode mode) override;
  Matrix backward(const Matrix& grad_output) override;
  std::vector<ParamBlock> params() override;
  Index parameter_count() const override { return layer_.parameter_count(); }

  TensorProjectionLayer& layer() noexcept { return layer_; }
  const TensorProjectionLayer& layer() const noexcept { return layer_; }

 private:
  TensorProjectionLayer layer_;
  std::array<Matrix, 3> grads_;
};

}  // namespace tenproj

#endif  // TENPROJ_LAYERS_HPP
