#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "odp/tensor.hpp"

// Row-wise numeric kernels shared by the scoring methods.
//
// Every kernel exists twice: a plain serial loop kept as the reference, and an
// OpenMP version that splits rows across threads. Each row is computed by the
// same arithmetic in both, and no kernel reduces across rows, so the two agree
// bit-for-bit regardless of thread count. Callers do cross-row sums serially.
namespace odp::kernels {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// View over an [n x C] block of f32 values (a 2-D tensor, or one slice of a 3-D one).
struct LogitView {
  std::span<const float> data;
  std::size_t rows;
  std::size_t cols;

  static LogitView of(const TensorF32& t) { return {t.data(), t.dim(0), t.dim(1)}; }
  // Slice k of a [K x n x C] tensor.
  static LogitView slice(const TensorF32& t, std::size_t k) {
    const std::size_t block = t.dim(1) * t.dim(2);
    return {t.data().subspan(k * block, block), t.dim(1), t.dim(2)};
  }
  std::span<const float> row(std::size_t i) const { return data.subspan(i * cols, cols); }
};

namespace serial {
RowMatrix softmax(LogitView logits, double temperature = 1.0);
std::vector<double> log_sum_exp(LogitView logits, double temperature = 1.0);
std::vector<std::size_t> row_argmax(LogitView logits);
std::vector<double> max_confidence(const RowMatrix& probs);
std::vector<double> negative_entropy(const RowMatrix& probs);
std::vector<double> power_sum(const RowMatrix& probs, double p);
// cost(i, j) = 0.5 * || probs.row(i) - onehot(targets[j]) ||_1
RowMatrix half_l1_to_onehot(const RowMatrix& probs, std::span<const std::size_t> targets);
}  // namespace serial

namespace omp {
RowMatrix softmax(LogitView logits, double temperature = 1.0);
std::vector<double> log_sum_exp(LogitView logits, double temperature = 1.0);
std::vector<std::size_t> row_argmax(LogitView logits);
std::vector<double> max_confidence(const RowMatrix& probs);
std::vector<double> negative_entropy(const RowMatrix& probs);
std::vector<double> power_sum(const RowMatrix& probs, double p);
RowMatrix half_l1_to_onehot(const RowMatrix& probs, std::span<const std::size_t> targets);
}  // namespace omp

// Production entry points use the OpenMP kernels.
using omp::half_l1_to_onehot;
using omp::log_sum_exp;
using omp::max_confidence;
using omp::negative_entropy;
using omp::power_sum;
using omp::row_argmax;
using omp::softmax;

inline RowMatrix softmax(const TensorF32& logits, double temperature = 1.0) {
  return omp::softmax(LogitView::of(logits), temperature);
}
inline std::vector<std::size_t> row_argmax(const TensorF32& logits) { return omp::row_argmax(LogitView::of(logits)); }

}  // namespace odp::kernels
