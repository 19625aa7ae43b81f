#ifndef TENPROJ_MODEL_HPP
#define TENPROJ_MODEL_HPP

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tenproj/layers.hpp"

namespace tenproj {

/// Declarative description of one layer. Only the fields relevant to `kind`
/// are read.
struct LayerSpec {
  LayerKind kind = LayerKind::flatten;
  /// If set, must equal the previous layer's output shape.
  std::optional<Dims3> input_shape;

  Conv2dOptions conv;
  Index pool_h = 2;
  Index pool_w = 2;
  bool pool_truncate = false;
  Index units = 0;
  double dropout_rate = 0.5;

  Dims3 projection_output{1, 1, 1};
  std::array<bool, 3> projection_enabled{true, true, true};
  std::array<double, 3> projection_eps{0.01, 0.01, 0.01};
  JacobianMode jacobian_mode = JacobianMode::exact;

  static LayerSpec conv2d(Index filters, Index kernel = 3, Padding padding = Padding::same);
  static LayerSpec avgpool(Index pool = 2);
  static LayerSpec tensor_projection(Dims3 output, std::array<bool, 3> enabled, double eps = 0.01,
                                     JacobianMode mode = JacobianMode::exact);
  static LayerSpec flatten();
  static LayerSpec dense(Index units);
  static LayerSpec dropout(double rate);
  static LayerSpec relu();
};

struct ModelSpec {
  Dims3 input_shape{28, 28, 1};
  std::vector<LayerSpec> layers;
};

/// Text form, one layer per line, '#' comments:
///   input 28 28 1
///   conv2d filters=32 kernel=3x3 stride=1x1 padding=same
///   relu
///   avgpool pool=2x2 [truncate=true]
///   tensor_projection out=7x7x64 modes=1,2 eps=0.01 jacobian=exact
///   flatten
///   dense units=640
///   dropout rate=0.5
/// Throws std::invalid_argument naming the offending line.
ModelSpec parse_model_spec(std::string_view text);

struct ProjectionOptions {
  double eps = 0.01;
  JacobianMode jacobian_mode = JacobianMode::exact;
};

/// Conv-pool-conv-TensorProjection-dense classifier for 28x28x1 inputs, 10 classes.
ModelSpec model1_spec(const ProjectionOptions& options = {});
/// Same network with 2x2 average pooling in place of the projection.
ModelSpec model2_spec();

struct LossResult {
  double loss = 0.0;
  Matrix grad;  // dL/dlogits, classes x n
};

/// Mean over the batch of -log softmax(logits)[label]. Logits are classes x n
/// (one column per sample); the gradient is (softmax - onehot) / n.
LossResult softmax_cross_entropy(const Matrix& logits, std::span<const int> labels);

struct LayerSummary {
  LayerKind kind;
  Dims3 output_shape;
  Index parameters;
};

class NetworkModel {
 public:
  NetworkModel(Dims3 input_shape, std::vector<std::unique_ptr<Layer>> layers);

  const Dims3& input_shape() const noexcept { return input_shape_; }
  Dims3 output_shape() const;
  std::size_t size() const noexcept { return layers_.size(); }
  Layer& layer(std::size_t i) { return *layers_.at(i); }
  const Layer& layer(std::size_t i) const { return *layers_.at(i); }

  std::vector<LayerSummary> summary() const;
  Index parameter_count() const;

  /// Input is (h*w*c) x n; returns the last layer's output (logits).
  Matrix forward(const Matrix& input, RunMode mode);
  /// Backpropagates dL/doutput through every layer, filling parameter grads.
  Matrix backward(const Matrix& grad_output);

  /// forward + softmax cross-entropy + backward.
  double loss_and_gradients(const Matrix& input, std::span<const int> labels, RunMode mode);

  std::vector<ParamBlock> params();
  void set_threads(int threads);

 private:
  Dims3 input_shape_;
  std::vector<std::unique_ptr<Layer>> layers_;
};

/// Instantiates the layers, checking that shapes chain. Layer i draws its
/// initial weights from stream i of `seed`.
NetworkModel build_model(const ModelSpec& spec, std::uint64_t seed);

std::string format_shape(const Dims3& d);

}  // namespace tenproj

#endif  // TENPROJ_MODEL_HPP
