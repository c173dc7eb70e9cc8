#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "odp/kernels.hpp"

namespace odp {

enum class Metric { SpearmanRho, RSquared, MAE, PrecisionAtTop, RhoAtTop, CACE };

std::string_view metric_name(Metric m);

struct MetricResult {
  Metric metric{};
  double value = 0.0;
  std::size_t n = 0;  // models, or samples for CACE
};

// Average ranks (1-based); tied values share the mean of their positions.
std::vector<double> average_ranks(std::span<const double> values);

// Pearson correlation of average ranks. Equals 1 - 6 sum d^2 / (n (n^2 - 1))
// when there are no ties. Throws UndefinedMetricError on a constant input.
MetricResult spearman_rho(std::span<const double> scores, std::span<const double> accs);

// Coefficient of determination of the OLS fit of accs on scores.
MetricResult r_squared(std::span<const double> scores, std::span<const double> accs);

MetricResult mae_direct(std::span<const double> predicted, std::span<const double> truth);

// Size of the "top" set: ceil(fraction * n) for n >= 100, otherwise min(10, n).
std::size_t top_k_size(std::size_t n, double fraction = 0.10);

// Indices of the k largest values; ties broken by ascending index.
std::vector<std::size_t> top_k_indices(std::span<const double> values, std::size_t k);

MetricResult precision_at_top(std::span<const double> scores, std::span<const double> accs, double fraction = 0.10);
MetricResult rho_at_top(std::span<const double> scores, std::span<const double> accs, double fraction = 0.10);

// Class-aggregated calibration error with `bins` equal-width bins per class.
MetricResult cace(const kernels::RowMatrix& probs, std::span<const std::int64_t> labels, std::size_t bins = 15);

}  // namespace odp
