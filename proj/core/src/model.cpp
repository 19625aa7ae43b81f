#include "tenproj/model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "tenproj/rng.hpp"

namespace tenproj {

LayerSpec LayerSpec::conv2d(Index filters, Index kernel, Padding padding) {
  LayerSpec s;
  s.kind = LayerKind::conv2d;
  s.conv = {filters, kernel, kernel, 1, 1, padding};
  return s;
}

LayerSpec LayerSpec::avgpool(Index pool) {
  LayerSpec s;
  s.kind = LayerKind::avgpool;
  s.pool_h = s.pool_w = pool;
  return s;
}

LayerSpec LayerSpec::tensor_projection(Dims3 output, std::array<bool, 3> enabled, double eps, JacobianMode mode) {
  LayerSpec s;
  s.kind = LayerKind::tensor_projection;
  s.projection_output = output;
  s.projection_enabled = enabled;
  s.projection_eps = {eps, eps, eps};
  s.jacobian_mode = mode;
  return s;
}

LayerSpec LayerSpec::flatten() { return LayerSpec{}; }

LayerSpec LayerSpec::dense(Index units) {
  LayerSpec s;
  s.kind = LayerKind::dense;
  s.units = units;
  return s;
}

LayerSpec LayerSpec::dropout(double rate) {
  LayerSpec s;
  s.kind = LayerKind::dropout;
  s.dropout_rate = rate;
  return s;
}

LayerSpec LayerSpec::relu() {
  LayerSpec s;
  s.kind = LayerKind::relu;
  return s;
}

std::string format_shape(const Dims3& d) {
  return "(" + std::to_string(d[0]) + ", " + std::to_string(d[1]) + ", " + std::to_string(d[2]) + ")";
}

ModelSpec model1_spec(const ProjectionOptions& options) {
  return {{28, 28, 1},
          {LayerSpec::conv2d(32), LayerSpec::relu(), LayerSpec::avgpool(2), LayerSpec::conv2d(64), LayerSpec::relu(),
           LayerSpec::tensor_projection({7, 7, 64}, {true, true, false}, options.eps, options.jacobian_mode),
           LayerSpec::flatten(), LayerSpec::dense(640), LayerSpec::relu(), LayerSpec::dropout(0.5),
           LayerSpec::dense(10)}};
}

ModelSpec model2_spec() {
  return {{28, 28, 1},
          {LayerSpec::conv2d(32), LayerSpec::relu(), LayerSpec::avgpool(2), LayerSpec::conv2d(64), LayerSpec::relu(),
           LayerSpec::avgpool(2), LayerSpec::flatten(), LayerSpec::dense(640), LayerSpec::relu(),
           LayerSpec::dropout(0.5), LayerSpec::dense(10)}};
}

LossResult softmax_cross_entropy(const Matrix& logits, std::span<const int> labels) {
  const Index classes = logits.rows();
  const Index n = logits.cols();
  if (static_cast<Index>(labels.size()) != n) throw std::invalid_argument("softmax_cross_entropy: label count mismatch");
  if (n == 0) throw std::invalid_argument("softmax_cross_entropy: empty batch");
  LossResult r{0.0, Matrix(classes, n)};
  for (Index j = 0; j < n; ++j) {
    const int label = labels[static_cast<std::size_t>(j)];
    if (label < 0 || label >= classes) {
      throw std::invalid_argument("softmax_cross_entropy: label " + std::to_string(label) + " out of range");
    }
    const double top = logits.col(j).maxCoeff();
    const Vector shifted = logits.col(j).array() - top;
    const Vector e = shifted.array().exp();
    const double sum = e.sum();
    r.loss += std::log(sum) - shifted(label);
    r.grad.col(j) = e / sum;
    r.grad(label, j) -= 1.0;
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  r.loss *= inv_n;
  r.grad *= inv_n;
  return r;
}

NetworkModel::NetworkModel(Dims3 input_shape, std::vector<std::unique_ptr<Layer>> layers)
    : input_shape_(input_shape), layers_(std::move(layers)) {
  Dims3 shape = input_shape_;
  for (const auto& l : layers_) {
    if (l->input_shape() != shape) throw std::invalid_argument("NetworkModel: layer shapes do not chain");
    shape = l->output_shape();
  }
}

Dims3 NetworkModel::output_shape() const { return layers_.empty() ? input_shape_ : layers_.back()->output_shape(); }

std::vector<LayerSummary> NetworkModel::summary() const {
  std::vector<LayerSummary> out;
  for (const auto& l : layers_) out.push_back({l->kind(), l->output_shape(), l->parameter_count()});
  return out;
}

Index NetworkModel::parameter_count() const {
  Index n = 0;
  for (const auto& l : layers_) n += l->parameter_count();
  return n;
}

Matrix NetworkModel::forward(const Matrix& input, RunMode mode) {
  Matrix x = input;
  for (auto& l : layers_) x = l->forward(x, mode);
  return x;
}

Matrix NetworkModel::backward(const Matrix& grad_output) {
  Matrix g = grad_output;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);
  return g;
}

double NetworkModel::loss_and_gradients(const Matrix& input, std::span<const int> labels, RunMode mode) {
  LossResult r = softmax_cross_entropy(forward(input, mode), labels);
  backward(r.grad);
  return r.loss;
}

std::vector<ParamBlock> NetworkModel::params() {
  std::vector<ParamBlock> out;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    for (ParamBlock& p : layers_[i]->params()) {
      p.name = std::to_string(i) + "." + std::string(to_string(layers_[i]->kind())) + "." + p.name;
      out.push_back(std::move(p));
    }
  }
  return out;
}

void NetworkModel::set_threads(int threads) {
  for (auto& l : layers_) l->set_threads(threads);
}

NetworkModel build_model(const ModelSpec& spec, std::uint64_t seed) {
  std::vector<std::unique_ptr<Layer>> layers;
  Dims3 shape = spec.input_shape;
  for (Index d : shape) {
    if (d < 1) throw std::invalid_argument("build_model: input extents must be positive");
  }
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerSpec& ls = spec.layers[i];
    if (ls.input_shape && *ls.input_shape != shape) {
      throw std::invalid_argument("build_model: layer " + std::to_string(i) + " (" + std::string(to_string(ls.kind)) +
                                  ") declares input " + format_shape(*ls.input_shape) + " but receives " +
                                  format_shape(shape));
    }
    const std::uint64_t layer_seed = derive_seed(seed, i);
    std::unique_ptr<Layer> layer;
    try {
      switch (ls.kind) {
        case LayerKind::conv2d: layer = std::make_unique<Conv2d>(shape, ls.conv, layer_seed); break;
        case LayerKind::avgpool:
          layer = std::make_unique<AvgPool2d>(shape, ls.pool_h, ls.pool_w, ls.pool_truncate);
          break;
        case LayerKind::tensor_projection: {
          ProjectionConfig pc;
          pc.input_dims = shape;
          pc.output_dims = ls.projection_output;
          pc.enabled = ls.projection_enabled;
          pc.eps = ls.projection_eps;
          pc.jacobian_mode = ls.jacobian_mode;
          layer = std::make_unique<TensorProjection>(pc, layer_seed);
          break;
        }
        case LayerKind::flatten: layer = std::make_unique<Flatten>(shape); break;
        case LayerKind::dense: layer = std::make_unique<Dense>(shape, ls.units, layer_seed); break;
        case LayerKind::dropout: layer = std::make_unique<Dropout>(shape, ls.dropout_rate, layer_seed); break;
        case LayerKind::relu: layer = std::make_unique<Relu>(shape); break;
      }
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("build_model: layer " + std::to_string(i) + ": " + e.what());
    }
    shape = layer->output_shape();
    layers.push_back(std::move(layer));
  }
  return NetworkModel(spec.input_shape, std::move(layers));
}

// --- text spec ------------------------------------------------------------

namespace {

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    out.emplace_back(s.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

Index to_index(const std::string& s) {
  Index v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || v < 1) {
    throw std::invalid_argument("expected a positive integer, got '" + s + "'");
  }
  return v;
}

double to_double(const std::string& s) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || s.empty()) throw std::invalid_argument("expected a number, got '" + s + "'");
  return v;
}

std::vector<Index> to_extents(const std::string& s, std::size_t count) {
  const auto parts = split(s, 'x');
  if (parts.size() != count) throw std::invalid_argument("expected " + std::to_string(count) + " extents in '" + s + "'");
  std::vector<Index> out;
  for (const auto& p : parts) out.push_back(to_index(p));
  return out;
}

}  // namespace

ModelSpec parse_model_spec(std::string_view text) {
  ModelSpec spec;
  spec.layers.clear();
  bool have_input = false;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream words(line);
    std::string head;
    if (!(words >> head)) continue;
    try {
      if (head == "input") {
        Index h = 0, w = 0, c = 0;
        if (!(words >> h >> w >> c) || h < 1 || w < 1 || c < 1) throw std::invalid_argument("input needs three positive extents");
        spec.input_shape = {h, w, c};
        have_input = true;
        continue;
      }
      LayerSpec ls;
      if (head == "conv2d") ls = LayerSpec::conv2d(1);
      else if (head == "avgpool") ls = LayerSpec::avgpool(2);
      else if (head == "tensor_projection") ls = LayerSpec::tensor_projection({1, 1, 1}, {true, true, true});
      else if (head == "flatten") ls = LayerSpec::flatten();
      else if (head == "dense") ls = LayerSpec::dense(0);
      else if (head == "dropout") ls = LayerSpec::dropout(0.5);
      else if (head == "relu") ls = LayerSpec::relu();
      else throw std::invalid_argument("unknown layer kind '" + head + "'");

      bool have_filters = false, have_units = false, have_out = false;
      std::string kv;
      while (words >> kv) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw std::invalid_argument("expected key=value, got '" + kv + "'");
        const std::string key = kv.substr(0, eq);
        const std::string value = kv.substr(eq + 1);
        if (head == "conv2d" && key == "filters") {
          ls.conv.filters = to_index(value);
          have_filters = true;
        } else if (head == "conv2d" && key == "kernel") {
          auto e = to_extents(value, 2);
          ls.conv.kernel_h = e[0];
          ls.conv.kernel_w = e[1];
        } else if (head == "conv2d" && key == "stride") {
          auto e = to_extents(value, 2);
          ls.conv.stride_h = e[0];
          ls.conv.stride_w = e[1];
        } else if (head == "conv2d" && key == "padding") {
          if (value == "same") ls.conv.padding = Padding::same;
          else if (value == "valid") ls.conv.padding = Padding::valid;
          else throw std::invalid_argument("padding must be same or valid");
        } else if (head == "avgpool" && key == "pool") {
          auto e = to_extents(value, 2);
          ls.pool_h = e[0];
          ls.pool_w = e[1];
        } else if (head == "avgpool" && key == "truncate") {
          if (value != "true" && value != "false") throw std::invalid_argument("truncate must be true or false");
          ls.pool_truncate = value == "true";
        } else if (head == "tensor_projection" && key == "out") {
          auto e = to_extents(value, 3);
          ls.projection_output = {e[0], e[1], e[2]};
          have_out = true;
        } else if (head == "tensor_projection" && key == "modes") {
          ls.projection_enabled = {false, false, false};
          for (const auto& m : split(value, ',')) {
            const Index k = to_index(m);
            if (k > 3) throw std::invalid_argument("modes must be drawn from 1,2,3");
            ls.projection_enabled[static_cast<std::size_t>(k - 1)] = true;
          }
        } else if (head == "tensor_projection" && key == "eps") {
          const double e = to_double(value);
          ls.projection_eps = {e, e, e};
        } else if (head == "tensor_projection" && key == "jacobian") {
          ls.jacobian_mode = parse_jacobian_mode(value);
        } else if (head == "dense" && key == "units") {
          ls.units = to_index(value);
          have_units = true;
        } else if (head == "dropout" && key == "rate") {
          ls.dropout_rate = to_double(value);
        } else {
          throw std::invalid_argument("unknown option '" + key + "' for " + head);
        }
      }
      if (head == "conv2d" && !have_filters) throw std::invalid_argument("conv2d needs filters=");
      if (head == "dense" && !have_units) throw std::invalid_argument("dense needs units=");
      if (head == "tensor_projection" && !have_out) throw std::invalid_argument("tensor_projection needs out=");
      spec.layers.push_back(ls);
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("model spec line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!have_input) throw std::invalid_argument("model spec: missing 'input h w c' line");
  return spec;
}

}  // namespace tenproj
