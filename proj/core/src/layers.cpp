#include "tenproj/layers.hpp"

#include <cmath>
#include <stdexcept>

#include "tenproj/parallel.hpp"
#include "tenproj/rng.hpp"

namespace tenproj {

std::string_view to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::conv2d: return "conv2d";
    case LayerKind::avgpool: return "avgpool";
    case LayerKind::tensor_projection: return "tensor_projection";
    case LayerKind::flatten: return "flatten";
    case LayerKind::dense: return "dense";
    case LayerKind::dropout: return "dropout";
    case LayerKind::relu: return "relu";
  }
  return "unknown";
}

Index shape_size(const Dims3& d) { return d[0] * d[1] * d[2]; }

namespace {

std::string shape_string(const Dims3& d) {
  return "(" + std::to_string(d[0]) + "," + std::to_string(d[1]) + "," + std::to_string(d[2]) + ")";
}

void glorot_uniform(Matrix& w, Index fan_in, Index fan_out, std::uint64_t seed) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Rng rng(seed);
  rng.fill_uniform(w, -limit, limit);
}

}  // namespace

void Layer::check_input(const Matrix& input) const {
  if (input.rows() != shape_size(in_)) {
    throw std::invalid_argument(std::string(to_string(kind())) + ": input has " + std::to_string(input.rows()) +
                                " rows, expected " + shape_string(in_));
  }
}

void Layer::check_grad(const Matrix& grad_output, Index batch) const {
  if (batch < 0) throw std::logic_error(std::string(to_string(kind())) + ": backward called before forward");
  if (grad_output.rows() != shape_size(out_) || grad_output.cols() != batch) {
    throw std::invalid_argument(std::string(to_string(kind())) + ": upstream gradient has wrong shape");
  }
}

ConvAxis conv_axis(Index in, Index kernel, Index stride, Padding padding) {
  if (in < 1 || kernel < 1 || stride < 1) throw std::invalid_argument("convolution sizes must be positive");
  if (padding == Padding::valid) {
    if (in < kernel) throw std::invalid_argument("valid convolution: kernel larger than input");
    return {(in - kernel) / stride + 1, 0};
  }
  const Index out = (in + stride - 1) / stride;
  const Index total = std::max<Index>((out - 1) * stride + kernel - in, 0);
  return {out, total / 2};
}

// --- Conv2d ---------------------------------------------------------------

Conv2d::Conv2d(Dims3 input_shape, Conv2dOptions options, std::uint64_t seed)
    : Layer(input_shape, input_shape),
      opt_(options),
      ay_(conv_axis(input_shape[0], options.kernel_h, options.stride_h, options.padding)),
      ax_(conv_axis(input_shape[1], options.kernel_w, options.stride_w, options.padding)) {
  if (options.filters < 1) throw std::invalid_argument("conv2d: filters must be positive");
  out_ = {ay_.out, ax_.out, options.filters};
  const Index taps = opt_.kernel_h * opt_.kernel_w;
  weight_.resize(taps * in_[2], opt_.filters);
  glorot_uniform(weight_, taps * in_[2], taps * opt_.filters, seed);
  bias_ = Matrix::Zero(opt_.filters, 1);
  grad_weight_ = Matrix::Zero(weight_.rows(), weight_.cols());
  grad_bias_ = Matrix::Zero(bias_.rows(), 1);
}

Matrix Conv2d::forward(const Matrix& input, RunMode) {
  check_input(input);
  const Index n = input.cols();
  const Index h = in_[0], w = in_[1], cin = in_[2];
  const Index oh = out_[0], ow = out_[1], cout = out_[2];
  const Index pixels = oh * ow;
  const Index kh = opt_.kernel_h, kw = opt_.kernel_w;

  cols_.resize(pixels * n, kh * kw * cin);
  for (Index ci = 0; ci < cin; ++ci) {
    for (Index kj = 0; kj < kw; ++kj) {
      for (Index ki = 0; ki < kh; ++ki) {
        double* dst = cols_.col(ki + kh * (kj + kw * ci)).data();
        for (Index s = 0; s < n; ++s) {
          const double* src = input.col(s).data() + h * w * ci;
          double* d = dst + pixels * s;
          for (Index ox = 0; ox < ow; ++ox) {
            const Index x = ox * opt_.stride_w + kj - ax_.pad_before;
            for (Index oy = 0; oy < oh; ++oy) {
              const Index y = oy * opt_.stride_h + ki - ay_.pad_before;
              d[oy + oh * ox] = (x >= 0 && x < w && y >= 0 && y < h) ? src[y + h * x] : 0.0;
            }
          }
        }
      }
    }
  }

  Matrix out(pixels * cout, n);
  parallel_chunks(n, threads_, [&](int, Index begin, Index end) {
    const Matrix prod = cols_.middleRows(pixels * begin, pixels * (end - begin)) * weight_;
    for (Index s = begin; s < end; ++s) {
      Eigen::Map<Matrix> o(out.col(s).data(), pixels, cout);
      o = prod.middleRows(pixels * (s - begin), pixels);
      o.rowwise() += bias_.col(0).transpose();
    }
  });
  batch_ = n;
  return out;
}

Matrix Conv2d::backward(const Matrix& grad_output) {
  check_grad(grad_output, batch_);
  const Index n = batch_;
  const Index h = in_[0], w = in_[1], cin = in_[2];
  const Index oh = out_[0], ow = out_[1], cout = out_[2];
  const Index pixels = oh * ow;
  const Index kh = opt_.kernel_h, kw = opt_.kernel_w;

  Matrix grad_in = Matrix::Zero(shape_size(in_), n);
  std::vector<Matrix> part_w(static_cast<std::size_t>(std::max(threads_, 1)));
  std::vector<Matrix> part_b(part_w.size());

  const int chunks = parallel_chunks(n, threads_, [&](int chunk, Index begin, Index end) {
    const Index count = end - begin;
    Matrix g(pixels * count, cout);
    for (Index s = begin; s < end; ++s) {
      g.middleRows(pixels * (s - begin), pixels) = Eigen::Map<const Matrix>(grad_output.col(s).data(), pixels, cout);
    }
    part_w[static_cast<std::size_t>(chunk)] = cols_.middleRows(pixels * begin, pixels * count).transpose() * g;
    part_b[static_cast<std::size_t>(chunk)] = g.colwise().sum().transpose();
    const Matrix dcols = g * weight_.transpose();

    for (Index ci = 0; ci < cin; ++ci) {
      for (Index kj = 0; kj < kw; ++kj) {
        for (Index ki = 0; ki < kh; ++ki) {
          const double* src = dcols.col(ki + kh * (kj + kw * ci)).data();
          for (Index s = begin; s < end; ++s) {
            double* dst = grad_in.col(s).data() + h * w * ci;
            const double* d = src + pixels * (s - begin);
            for (Index ox = 0; ox < ow; ++ox) {
              const Index x = ox * opt_.stride_w + kj - ax_.pad_before;
              if (x < 0 || x >= w) continue;
              for (Index oy = 0; oy < oh; ++oy) {
                const Index y = oy * opt_.stride_h + ki - ay_.pad_before;
                if (y >= 0 && y < h) dst[y + h * x] += d[oy + oh * ox];
              }
            }
          }
        }
      }
    }
  });

  grad_weight_ = part_w[0];
  grad_bias_ = part_b[0];
  for (int c = 1; c < chunks; ++c) {
    grad_weight_ += part_w[static_cast<std::size_t>(c)];
    grad_bias_ += part_b[static_cast<std::size_t>(c)];
  }
  return grad_in;
}

std::vector<ParamBlock> Conv2d::params() {
  return {{"kernel", &weight_, &grad_weight_}, {"bias", &bias_, &grad_bias_}};
}

Matrix conv2d_direct(const Matrix& input, const Dims3& in, const Matrix& weight, const Matrix& bias,
                     const Conv2dOptions& opt) {
  const ConvAxis ay = conv_axis(in[0], opt.kernel_h, opt.stride_h, opt.padding);
  const ConvAxis ax = conv_axis(in[1], opt.kernel_w, opt.stride_w, opt.padding);
  const Index cout = opt.filters;
  if (input.rows() != shape_size(in) || weight.rows() != opt.kernel_h * opt.kernel_w * in[2] ||
      weight.cols() != cout || bias.rows() != cout) {
    throw std::invalid_argument("conv2d_direct: shape mismatch");
  }
  Matrix out(ay.out * ax.out * cout, input.cols());
  for (Index s = 0; s < input.cols(); ++s) {
    for (Index co = 0; co < cout; ++co) {
      for (Index ox = 0; ox < ax.out; ++ox) {
        for (Index oy = 0; oy < ay.out; ++oy) {
          double acc = bias(co, 0);
          for (Index ci = 0; ci < in[2]; ++ci) {
            for (Index kj = 0; kj < opt.kernel_w; ++kj) {
              for (Index ki = 0; ki < opt.kernel_h; ++ki) {
                const Index y = oy * opt.stride_h + ki - ay.pad_before;
                const Index x = ox * opt.stride_w + kj - ax.pad_before;
                if (y < 0 || y >= in[0] || x < 0 || x >= in[1]) continue;
                acc += weight(ki + opt.kernel_h * (kj + opt.kernel_w * ci), co) *
                       input(y + in[0] * (x + in[1] * ci), s);
              }
            }
          }
          out(oy + ay.out * (ox + ax.out * co), s) = acc;
        }
      }
    }
  }
  return out;
}

// --- AvgPool2d ------------------------------------------------------------

AvgPool2d::AvgPool2d(Dims3 input_shape, Index pool_h, Index pool_w, bool truncate)
    : Layer(input_shape, input_shape), ph_(pool_h), pw_(pool_w) {
  if (pool_h < 1 || pool_w < 1) throw std::invalid_argument("avgpool: window must be positive");
  if (!truncate && (input_shape[0] % pool_h != 0 || input_shape[1] % pool_w != 0)) {
    throw std::invalid_argument("avgpool: spatial extents " + shape_string(input_shape) +
                                " are not multiples of the window; enable truncation explicitly");
  }
  out_ = {input_shape[0] / pool_h, input_shape[1] / pool_w, input_shape[2]};
  if (out_[0] < 1 || out_[1] < 1) throw std::invalid_argument("avgpool: window larger than input");
}

Matrix AvgPool2d::forward(const Matrix& input, RunMode) {
  check_input(input);
  const Index h = in_[0], w = in_[1];
  const Index oh = out_[0], ow = out_[1];
  const double scale = 1.0 / static_cast<double>(ph_ * pw_);
  Matrix out(shape_size(out_), input.cols());
  for (Index s = 0; s < input.cols(); ++s) {
    for (Index c = 0; c < in_[2]; ++c) {
      const double* src = input.col(s).data() + h * w * c;
      double* dst = out.col(s).data() + oh * ow * c;
      for (Index ox = 0; ox < ow; ++ox) {
        for (Index oy = 0; oy < oh; ++oy) {
          double acc = 0.0;
          for (Index j = 0; j < pw_; ++j)
            for (Index i = 0; i < ph_; ++i) acc += src[(oy * ph_ + i) + h * (ox * pw_ + j)];
          dst[oy + oh * ox] = acc * scale;
        }
      }
    }
  }
  batch_ = input.cols();
  return out;
}

Matrix AvgPool2d::backward(const Matrix& grad_output) {
  check_grad(grad_output, batch_);
  const Index h = in_[0], w = in_[1];
  const Index oh = out_[0], ow = out_[1];
  const double scale = 1.0 / static_cast<double>(ph_ * pw_);
  Matrix grad_in = Matrix::Zero(shape_size(in_), batch_);
  for (Index s = 0; s < batch_; ++s) {
    for (Index c = 0; c < in_[2]; ++c) {
      const double* src = grad_output.col(s).data() + oh * ow * c;
      double* dst = grad_in.col(s).data() + h * w * c;
      for (Index ox = 0; ox < ow; ++ox) {
        for (Index oy = 0; oy < oh; ++oy) {
          const double g = src[oy + oh * ox] * scale;
          for (Index j = 0; j < pw_; ++j)
            for (Index i = 0; i < ph_; ++i) dst[(oy * ph_ + i) + h * (ox * pw_ + j)] = g;
        }
      }
    }
  }
  return grad_in;
}

// --- Flatten --------------------------------------------------------------

Flatten::Flatten(Dims3 input_shape) : Layer(input_shape, {shape_size(input_shape), 1, 1}) {}

Matrix Flatten::forward(const Matrix& input, RunMode) {
  check_input(input);
  return input;
}

Matrix Flatten::backward(const Matrix& grad_output) { return grad_output; }

// --- Dense ----------------------------------------------------------------

Dense::Dense(Dims3 input_shape, Index units, std::uint64_t seed) : Layer(input_shape, {units, 1, 1}) {
  if (input_shape[1] != 1 || input_shape[2] != 1) {
    throw std::invalid_argument("dense: input " + shape_string(input_shape) + " is not flat; add a flatten layer");
  }
  if (units < 1) throw std::invalid_argument("dense: units must be positive");
  weight_.resize(units, input_shape[0]);
  glorot_uniform(weight_, input_shape[0], units, seed);
  bias_ = Matrix::Zero(units, 1);
  grad_weight_ = Matrix::Zero(weight_.rows(), weight_.cols());
  grad_bias_ = Matrix::Zero(units, 1);
}

Matrix Dense::forward(const Matrix& input, RunMode) {
  check_input(input);
  input_ = input;
  Matrix out = weight_ * input;
  out.colwise() += bias_.col(0);
  return out;
}

Matrix Dense::backward(const Matrix& grad_output) {
  check_grad(grad_output, input_.size() == 0 ? -1 : input_.cols());
  grad_weight_.noalias() = grad_output * input_.transpose();
  grad_bias_ = grad_output.rowwise().sum();
  return weight_.transpose() * grad_output;
}

std::vector<ParamBlock> Dense::params() {
  return {{"kernel", &weight_, &grad_weight_}, {"bias", &bias_, &grad_bias_}};
}

// --- Relu -----------------------------------------------------------------

Matrix Relu::forward(const Matrix& input, RunMode) {
  check_input(input);
  input_ = input;
  return input.cwiseMax(0.0);
}

Matrix Relu::backward(const Matrix& grad_output) {
  check_grad(grad_output, input_.size() == 0 ? -1 : input_.cols());
  return (input_.array() > 0.0).select(grad_output, 0.0);
}

// --- Dropout --------------------------------------------------------------

Dropout::Dropout(Dims3 shape, double rate, std::uint64_t seed) : Layer(shape, shape), rate_(rate), seed_(seed) {
  if (!(rate >= 0.0 && rate < 1.0)) throw std::invalid_argument("dropout: rate must lie in [0, 1)");
}

Matrix Dropout::forward(const Matrix& input, RunMode mode) {
  check_input(input);
  batch_ = input.cols();
  if (mode == RunMode::eval || rate_ == 0.0) {
    mask_.resize(0, 0);
    return input;
  }
  const std::uint64_t key = derive_seed(seed_, step_++);
  const double keep_scale = 1.0 / (1.0 - rate_);
  mask_.resize(input.rows(), input.cols());
  for (Index j = 0; j < input.cols(); ++j) {
    for (Index i = 0; i < input.rows(); ++i) {
      const auto element = static_cast<std::uint64_t>(i + input.rows() * j);
      mask_(i, j) = unit_interval(derive_seed(key, element)) < rate_ ? 0.0 : keep_scale;
    }
  }
  return input.cwiseProduct(mask_);
}

Matrix Dropout::backward(const Matrix& grad_output) {
  check_grad(grad_output, batch_);
  if (mask_.rows() == 0) return grad_output;
  return grad_output.cwiseProduct(mask_);
}

// --- TensorProjection -----------------------------------------------------

TensorProjection::TensorProjection(ProjectionConfig config, std::uint64_t seed)
    : Layer(config.input_dims, config.output_dims), layer_(config, seed) {
  for (int k = 0; k < 3; ++k) {
    if (config.enabled[k]) grads_[k] = Matrix::Zero(config.input_dims[k], config.output_dims[k]);
  }
}

Matrix TensorProjection::forward(const Matrix& input, RunMode) {
  check_input(input);
  std::vector<Tensor3> batch;
  batch.reserve(static_cast<std::size_t>(input.cols()));
  for (Index s = 0; s < input.cols(); ++s) {
    batch.push_back(Tensor3::from_span(in_, {input.col(s).data(), static_cast<std::size_t>(input.rows())}));
  }
  const std::vector<Tensor3> z = layer_.forward(batch);
  Matrix out(shape_size(out_), input.cols());
  for (Index s = 0; s < input.cols(); ++s) out.col(s) = z[static_cast<std::size_t>(s)].flat();
  return out;
}

Matrix TensorProjection::backward(const Matrix& grad_output) {
  if (!layer_.has_cache()) throw std::logic_error("tensor_projection: backward called before forward");
  std::vector<Tensor3> dz;
  dz.reserve(static_cast<std::size_t>(grad_output.cols()));
  for (Index s = 0; s < grad_output.cols(); ++s) {
    if (grad_output.rows() != shape_size(out_)) throw std::invalid_argument("tensor_projection: gradient shape");
    dz.push_back(Tensor3::from_span(out_, {grad_output.col(s).data(), static_cast<std::size_t>(grad_output.rows())}));
  }
  LayerGradients g = layer_.backward(dz);
  for (int k = 0; k < 3; ++k) {
    if (g.dw[k]) grads_[k] = std::move(*g.dw[k]);
  }
  Matrix grad_in(shape_size(in_), grad_output.cols());
  for (Index s = 0; s < grad_output.cols(); ++s) grad_in.col(s) = g.dx[static_cast<std::size_t>(s)].flat();
  return grad_in;
}

std::vector<ParamBlock> TensorProjection::params() {
  std::vector<ParamBlock> out;
  for (int k = 1; k <= 3; ++k) {
    if (layer_.mode_enabled(k)) out.push_back({"w" + std::to_string(k), &layer_.weight(k), &grads_[k - 1]});
  }
  return out;
}

}  // namespace tenproj
