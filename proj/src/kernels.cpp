#include "odp/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace odp::kernels {

namespace {

// Per-row bodies shared by both variants.

void softmax_row(std::span<const float> in, double inv_t, double* out) {
  double peak = in[0];
  for (float v : in) peak = std::max(peak, static_cast<double>(v));
  double total = 0.0;
  for (std::size_t c = 0; c < in.size(); ++c) {
    out[c] = std::exp((static_cast<double>(in[c]) - peak) * inv_t);
    total += out[c];
  }
  for (std::size_t c = 0; c < in.size(); ++c) out[c] /= total;
}

double log_sum_exp_row(std::span<const float> in, double inv_t) {
  double peak = in[0];
  for (float v : in) peak = std::max(peak, static_cast<double>(v));
  double total = 0.0;
  for (float v : in) total += std::exp((static_cast<double>(v) - peak) * inv_t);
  return peak * inv_t + std::log(total);
}

std::size_t argmax_row(std::span<const float> in) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < in.size(); ++c) {
    if (in[c] > in[best]) best = c;
  }
  return best;
}

double max_row(const double* p, std::size_t cols) { return *std::max_element(p, p + cols); }

double neg_entropy_row(const double* p, std::size_t cols) {
  double acc = 0.0;
  for (std::size_t c = 0; c < cols; ++c) {
    if (p[c] > 0.0) acc += p[c] * std::log(p[c]);
  }
  return acc;
}

double power_row(const double* p, std::size_t cols, double power) {
  double acc = 0.0;
  for (std::size_t c = 0; c < cols; ++c) acc += std::pow(std::abs(p[c]), power);
  return acc;
}

// 0.5 * |p - e_k|_1 for every class k.
void half_l1_row(const double* p, std::size_t cols, double* out) {
  double total = 0.0;
  for (std::size_t c = 0; c < cols; ++c) total += std::abs(p[c]);
  for (std::size_t k = 0; k < cols; ++k) out[k] = 0.5 * (total - std::abs(p[k]) + std::abs(p[k] - 1.0));
}

}  // namespace

namespace serial {

RowMatrix softmax(LogitView logits, double temperature) {
  RowMatrix out(logits.rows, logits.cols);
  const double inv_t = 1.0 / temperature;
  for (std::size_t i = 0; i < logits.rows; ++i) softmax_row(logits.row(i), inv_t, out.row(i).data());
  return out;
}

std::vector<double> log_sum_exp(LogitView logits, double temperature) {
  std::vector<double> out(logits.rows);
  const double inv_t = 1.0 / temperature;
  for (std::size_t i = 0; i < logits.rows; ++i) out[i] = log_sum_exp_row(logits.row(i), inv_t);
  return out;
}

std::vector<std::size_t> row_argmax(LogitView logits) {
  std::vector<std::size_t> out(logits.rows);
  for (std::size_t i = 0; i < logits.rows; ++i) out[i] = argmax_row(logits.row(i));
  return out;
}

std::vector<double> max_confidence(const RowMatrix& probs) {
  std::vector<double> out(probs.rows());
  for (Eigen::Index i = 0; i < probs.rows(); ++i) out[i] = max_row(probs.row(i).data(), probs.cols());
  return out;
}

std::vector<double> negative_entropy(const RowMatrix& probs) {
  std::vector<double> out(probs.rows());
  for (Eigen::Index i = 0; i < probs.rows(); ++i) out[i] = neg_entropy_row(probs.row(i).data(), probs.cols());
  return out;
}

std::vector<double> power_sum(const RowMatrix& probs, double p) {
  std::vector<double> out(probs.rows());
  for (Eigen::Index i = 0; i < probs.rows(); ++i) out[i] = power_row(probs.row(i).data(), probs.cols(), p);
  return out;
}

RowMatrix half_l1_to_onehot(const RowMatrix& probs, std::span<const std::size_t> targets) {
  const Eigen::Index m = probs.rows();
  RowMatrix out(m, static_cast<Eigen::Index>(targets.size()));
  std::vector<double> per_class(probs.cols());
  for (Eigen::Index i = 0; i < m; ++i) {
    half_l1_row(probs.row(i).data(), probs.cols(), per_class.data());
    for (std::size_t j = 0; j < targets.size(); ++j) out(i, j) = per_class[targets[j]];
  }
  return out;
}

}  // namespace serial

namespace omp {

RowMatrix softmax(LogitView logits, double temperature) {
  RowMatrix out(logits.rows, logits.cols);
  const double inv_t = 1.0 / temperature;
  const auto rows = static_cast<std::ptrdiff_t>(logits.rows);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < rows; ++i) softmax_row(logits.row(i), inv_t, out.row(i).data());
  return out;
}

std::vector<double> log_sum_exp(LogitView logits, double temperature) {
  std::vector<double> out(logits.rows);
  const double inv_t = 1.0 / temperature;
  const auto rows = static_cast<std::ptrdiff_t>(logits.rows);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < rows; ++i) out[i] = log_sum_exp_row(logits.row(i), inv_t);
  return out;
}

std::vector<std::size_t> row_argmax(LogitView logits) {
  std::vector<std::size_t> out(logits.rows);
  const auto rows = static_cast<std::ptrdiff_t>(logits.rows);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < rows; ++i) out[i] = argmax_row(logits.row(i));
  return out;
}

std::vector<double> max_confidence(const RowMatrix& probs) {
  std::vector<double> out(probs.rows());
  const Eigen::Index rows = probs.rows();
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < rows; ++i) out[i] = max_row(probs.row(i).data(), probs.cols());
  return out;
}

std::vector<double> negative_entropy(const RowMatrix& probs) {
  std::vector<double> out(probs.rows());
  const Eigen::Index rows = probs.rows();
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < rows; ++i) out[i] = neg_entropy_row(probs.row(i).data(), probs.cols());
  return out;
}

std::vector<double> power_sum(const RowMatrix& probs, double p) {
  std::vector<double> out(probs.rows());
  const Eigen::Index rows = probs.rows();
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < rows; ++i) out[i] = power_row(probs.row(i).data(), probs.cols(), p);
  return out;
}

RowMatrix half_l1_to_onehot(const RowMatrix& probs, std::span<const std::size_t> targets) {
  const Eigen::Index m = probs.rows();
  RowMatrix out(m, static_cast<Eigen::Index>(targets.size()));
#pragma omp parallel
  {
    std::vector<double> per_class(probs.cols());
#pragma omp for schedule(static)
    for (Eigen::Index i = 0; i < m; ++i) {
      half_l1_row(probs.row(i).data(), probs.cols(), per_class.data());
      for (std::size_t j = 0; j < targets.size(); ++j) out(i, j) = per_class[targets[j]];
    }
  }
  return out;
}

}  // namespace omp

}  // namespace odp::kernels
