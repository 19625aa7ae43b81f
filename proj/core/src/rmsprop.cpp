#include "tenproj/rmsprop.hpp"

#include <stdexcept>

namespace tenproj {

RmsProp::RmsProp(RmsPropOptions options) : opt_(options) {
  if (!(opt_.learning_rate > 0.0)) throw std::invalid_argument("rmsprop: learning rate must be positive");
  if (!(opt_.rho >= 0.0 && opt_.rho < 1.0)) throw std::invalid_argument("rmsprop: rho must lie in [0, 1)");
  if (!(opt_.delta > 0.0)) throw std::invalid_argument("rmsprop: delta must be positive");
}

void RmsProp::step(std::span<const ParamBlock> params) {
  if (acc_.empty()) {
    for (const ParamBlock& p : params) acc_.push_back(Matrix::Zero(p.value->rows(), p.value->cols()));
  }
  if (acc_.size() != params.size()) throw std::invalid_argument("rmsprop: parameter list changed between steps");
  for (std::size_t i = 0; i < params.size(); ++i) {
    Matrix& theta = *params[i].value;
    const Matrix& g = *params[i].grad;
    Matrix& acc = acc_[i];
    if (g.rows() != theta.rows() || g.cols() != theta.cols() || acc.rows() != theta.rows() ||
        acc.cols() != theta.cols()) {
      throw std::invalid_argument("rmsprop: shape mismatch for " + params[i].name);
    }
    acc = opt_.rho * acc + (1.0 - opt_.rho) * g.cwiseAbs2();
    theta.array() -= opt_.learning_rate * g.array() / (acc.array().sqrt() + opt_.delta);
  }
}

}  // namespace tenproj
