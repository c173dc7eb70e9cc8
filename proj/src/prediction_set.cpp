#include "odp/prediction_set.hpp"

#include "odp/errors.hpp"
#include "odp/kernels.hpp"

namespace odp {

PredictionSet assemble_prediction_set(TensorF32 logits, std::optional<TensorF32> features,
                                      std::optional<TensorI64> labels, std::optional<TensorF32> aug_logits) {
  if (logits.ndim() != 2) {
    throw AssemblyError("logits must be 2-D [n x C], got " + shape_string(logits.shape()));
  }
  const std::size_t n = logits.dim(0);
  const std::size_t classes = logits.dim(1);
  if (classes < 2) throw AssemblyError("need at least 2 classes, logits shape " + shape_string(logits.shape()));

  if (features) {
    if (features->ndim() != 2 || features->dim(0) != n) {
      throw AssemblyError("features shape " + shape_string(features->shape()) + " does not match logits shape " +
                          shape_string(logits.shape()) + " (" + std::to_string(n) + " vs " +
                          std::to_string(features->dim(0)) + " samples)");
    }
  }
  if (labels) {
    if (labels->ndim() != 1 || labels->dim(0) != n) {
      throw AssemblyError("labels shape " + shape_string(labels->shape()) + " does not match logits shape " +
                          shape_string(logits.shape()));
    }
    for (std::size_t i = 0; i < n; ++i) {
      const auto y = (*labels)[i];
      if (y < 0 || static_cast<std::size_t>(y) >= classes) {
        throw LabelRangeError("label " + std::to_string(y) + " at index " + std::to_string(i) +
                              " outside [0, " + std::to_string(classes) + ")");
      }
    }
  }
  if (aug_logits) {
    const auto& s = aug_logits->shape();
    if (s.size() != 3) {
      throw AssemblyError("aug_logits must be 3-D [K x n x C], got " + shape_string(s));
    }
    if (s[2] != classes) {
      throw AssemblyError("aug_logits shape " + shape_string(s) + " class count mismatch with logits shape " +
                          shape_string(logits.shape()) + " (" + std::to_string(s[2]) + " vs " +
                          std::to_string(classes) + ")");
    }
    if (s[1] != n) {
      throw AssemblyError("aug_logits shape " + shape_string(s) + " sample count mismatch with logits shape " +
                          shape_string(logits.shape()) + " (" + std::to_string(s[1]) + " vs " +
                          std::to_string(n) + ")");
    }
    if (s[0] < 2) throw AssemblyError("aug_logits needs K >= 2 views, got " + shape_string(s));
  }
  return PredictionSet{std::move(logits), std::move(features), std::move(labels), std::move(aug_logits)};
}

ModelRecord make_model_record(std::string model_id, PredictionSet val, PredictionSet test,
                              std::optional<std::string> arch_tag) {
  if (!val.labels) throw AssemblyError("model " + model_id + ": validation labels are required");
  if (val.num_classes() != test.num_classes()) {
    throw AssemblyError("model " + model_id + ": val/test class counts differ (" +
                        std::to_string(val.num_classes()) + " vs " + std::to_string(test.num_classes()) + ")");
  }
  return ModelRecord{std::move(model_id), std::move(val), std::move(test), std::move(arch_tag)};
}

double argmax_accuracy(const PredictionSet& set) {
  if (!set.labels) throw EvaluationError("accuracy requires labels");
  const auto pred = kernels::row_argmax(set.logits);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) hits += pred[i] == static_cast<std::size_t>((*set.labels)[i]);
  return static_cast<double>(hits) / static_cast<double>(pred.size());
}

}  // namespace odp
