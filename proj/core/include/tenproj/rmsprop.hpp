#ifndef TENPROJ_RMSPROP_HPP
#define TENPROJ_RMSPROP_HPP

#include <span>
#include <vector>

#include "tenproj/layers.hpp"

namespace tenproj {

struct RmsPropOptions {
  double learning_rate = 1e-3;
  double rho = 0.9;
  double delta = 1e-7;
};

/// acc <- rho*acc + (1-rho)*g^2;  theta <- theta - lr * g / (sqrt(acc) + delta).
/// Accumulators are created on the first step and must keep the same shapes.
class RmsProp {
 public:
  explicit RmsProp(RmsPropOptions options = {});

  void step(std::span<const ParamBlock> params);

  const RmsPropOptions& options() const noexcept { return opt_; }
  const std::vector<Matrix>& accumulators() const noexcept { return acc_; }

 private:
  RmsPropOptions opt_;
  std::vector<Matrix> acc_;
};

}  // namespace tenproj

#endif  // TENPROJ_RMSPROP_HPP
