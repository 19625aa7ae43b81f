#include "tenproj/training.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tenproj {

double train_epoch(NetworkModel& model, RmsProp& optimizer, const Dataset& data,
                   const std::vector<std::vector<Index>>& batches) {
  double total = 0.0;
  Index seen = 0;
  for (const auto& batch : batches) {
    if (batch.empty()) continue;
    const Matrix x = data.gather(batch);
    const std::vector<int> y = data.gather_labels(batch);
    const double loss = model.loss_and_gradients(x, y, RunMode::train);
    if (!std::isfinite(loss)) throw std::runtime_error("training loss became non-finite");
    const auto params = model.params();
    optimizer.step(params);
    total += loss * static_cast<double>(batch.size());
    seen += static_cast<Index>(batch.size());
  }
  return seen > 0 ? total / static_cast<double>(seen) : 0.0;
}

std::vector<int> predict_classes(const Matrix& logits) {
  std::vector<int> out(static_cast<std::size_t>(logits.cols()));
  for (Index j = 0; j < logits.cols(); ++j) {
    Index best = 0;
    logits.col(j).maxCoeff(&best);
    out[static_cast<std::size_t>(j)] = static_cast<int>(best);
  }
  return out;
}

EvalResult evaluate(NetworkModel& model, const Dataset& data, std::span<const Index> indices, Index batch_size) {
  if (indices.empty()) throw std::invalid_argument("evaluate: no samples");
  if (batch_size < 1) throw std::invalid_argument("evaluate: batch size must be at least 1");
  double loss = 0.0;
  Index correct = 0;
  for (std::size_t start = 0; start < indices.size(); start += static_cast<std::size_t>(batch_size)) {
    const std::size_t len = std::min(indices.size() - start, static_cast<std::size_t>(batch_size));
    const auto chunk = indices.subspan(start, len);
    const Matrix logits = model.forward(data.gather(chunk), RunMode::eval);
    const std::vector<int> y = data.gather_labels(chunk);
    loss += softmax_cross_entropy(logits, y).loss * static_cast<double>(len);
    const auto pred = predict_classes(logits);
    for (std::size_t i = 0; i < len; ++i) correct += pred[i] == y[i] ? 1 : 0;
  }
  const auto n = static_cast<double>(indices.size());
  return {loss / n, static_cast<double>(correct) / n};
}

}  // namespace tenproj
