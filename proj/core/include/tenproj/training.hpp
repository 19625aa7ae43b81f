#ifndef TENPROJ_TRAINING_HPP
#define TENPROJ_TRAINING_HPP

#include <span>
#include <vector>

#include "tenproj/dataset.hpp"
#include "tenproj/model.hpp"
#include "tenproj/rmsprop.hpp"

namespace tenproj {

/// One pass over `batches`, one optimizer step per batch. Returns the
/// sample-weighted mean training loss.
double train_epoch(NetworkModel& model, RmsProp& optimizer, const Dataset& data,
                   const std::vector<std::vector<Index>>& batches);

struct EvalResult {
  double loss = 0.0;
  double accuracy = 0.0;
};

/// Mean loss and accuracy in eval mode over `indices`.
EvalResult evaluate(NetworkModel& model, const Dataset& data, std::span<const Index> indices, Index batch_size);

/// Column-wise argmax.
std::vector<int> predict_classes(const Matrix& logits);

}  // namespace tenproj

#endif  // TENPROJ_TRAINING_HPP
