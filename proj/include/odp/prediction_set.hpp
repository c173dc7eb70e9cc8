#pragma once

#include <optional>
#include <string>

#include "odp/tensor.hpp"

namespace odp {

// One model's recorded outputs on one split. Construct through
// assemble_prediction_set so the cross-tensor invariants hold.
struct PredictionSet {
  TensorF32 logits;                      // [n x C]
  std::optional<TensorF32> features;     // [n x d]
  std::optional<TensorI64> labels;       // [n], values in [0, C)
  std::optional<TensorF32> aug_logits;   // [K x n x C]

  std::size_t num_samples() const { return logits.dim(0); }
  std::size_t num_classes() const { return logits.dim(1); }
  std::size_t num_views() const { return aug_logits ? aug_logits->dim(0) : 0; }
};

PredictionSet assemble_prediction_set(TensorF32 logits, std::optional<TensorF32> features = std::nullopt,
                                      std::optional<TensorI64> labels = std::nullopt,
                                      std::optional<TensorF32> aug_logits = std::nullopt);

struct ModelRecord {
  std::string model_id;
  PredictionSet val;   // labels required
  PredictionSet test;  // labels only needed for ground-truth evaluation
  std::optional<std::string> arch_tag;
};

ModelRecord make_model_record(std::string model_id, PredictionSet val, PredictionSet test,
                              std::optional<std::string> arch_tag = std::nullopt);

// Fraction of samples whose logits argmax equals the label. Requires labels.
double argmax_accuracy(const PredictionSet& set);

}  // namespace odp
