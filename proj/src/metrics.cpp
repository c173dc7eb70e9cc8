#include "odp/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "odp/errors.hpp"

namespace odp {

namespace {

void require_pair(std::span<const double> a, std::span<const double> b, std::size_t min_n, const char* what) {
  if (a.size() != b.size()) throw ArityError(std::string(what) + ": input lengths differ");
  if (a.size() < min_n) {
    throw ArityError(std::string(what) + ": needs at least " + std::to_string(min_n) + " values");
  }
}

double pearson(std::span<const double> x, std::span<const double> y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) throw UndefinedMetricError("correlation undefined for a constant vector");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

template <typename T>
std::vector<T> gather(std::span<const T> v, std::span<const std::size_t> idx) {
  std::vector<T> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(v[i]);
  return out;
}

}  // namespace

std::string_view metric_name(Metric m) {
  switch (m) {
    case Metric::SpearmanRho: return "rho";
    case Metric::RSquared: return "r2";
    case Metric::MAE: return "mae";
    case Metric::PrecisionAtTop: return "precision_at_top";
    case Metric::RhoAtTop: return "rho_at_top";
    case Metric::CACE: return "cace";
  }
  return "?";
}

std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    // Positions i..j (0-based) share rank mean((i+1)..(j+1)).
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = r;
    i = j + 1;
  }
  return ranks;
}

MetricResult spearman_rho(std::span<const double> scores, std::span<const double> accs) {
  require_pair(scores, accs, 2, "spearman_rho");
  const auto rs = average_ranks(scores);
  const auto ra = average_ranks(accs);
  return {Metric::SpearmanRho, pearson(rs, ra), scores.size()};
}

MetricResult r_squared(std::span<const double> scores, std::span<const double> accs) {
  require_pair(scores, accs, 3, "r_squared");
  const double n = static_cast<double>(scores.size());
  const double mx = std::accumulate(scores.begin(), scores.end(), 0.0) / n;
  const double my = std::accumulate(accs.begin(), accs.end(), 0.0) / n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    sxx += (scores[i] - mx) * (scores[i] - mx);
    syy += (accs[i] - my) * (accs[i] - my);
    sxy += (scores[i] - mx) * (accs[i] - my);
  }
  if (sxx == 0.0) throw UndefinedMetricError("R^2 undefined: scores have zero variance");
  if (syy == 0.0) throw UndefinedMetricError("R^2 undefined: accuracies have zero variance");
  return {Metric::RSquared, std::clamp(sxy * sxy / (sxx * syy), 0.0, 1.0), scores.size()};
}

MetricResult mae_direct(std::span<const double> predicted, std::span<const double> truth) {
  require_pair(predicted, truth, 1, "mae_direct");
  double total = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) total += std::abs(predicted[i] - truth[i]);
  return {Metric::MAE, total / static_cast<double>(predicted.size()), predicted.size()};
}

std::size_t top_k_size(std::size_t n, double fraction) {
  if (n >= 100) return static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n)));
  return std::min<std::size_t>(10, n);
}

std::vector<std::size_t> top_k_indices(std::span<const double> values, std::size_t k) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
  order.resize(std::min(k, order.size()));
  return order;
}

MetricResult precision_at_top(std::span<const double> scores, std::span<const double> accs, double fraction) {
  require_pair(scores, accs, 2, "precision_at_top");
  const std::size_t k = top_k_size(scores.size(), fraction);
  auto predicted = top_k_indices(scores, k);
  auto actual = top_k_indices(accs, k);
  std::sort(predicted.begin(), predicted.end());
  std::sort(actual.begin(), actual.end());
  std::vector<std::size_t> both;
  std::set_intersection(predicted.begin(), predicted.end(), actual.begin(), actual.end(), std::back_inserter(both));
  return {Metric::PrecisionAtTop, static_cast<double>(both.size()) / static_cast<double>(k), scores.size()};
}

MetricResult rho_at_top(std::span<const double> scores, std::span<const double> accs, double fraction) {
  require_pair(scores, accs, 2, "rho_at_top");
  const auto idx = top_k_indices(scores, top_k_size(scores.size(), fraction));
  const auto s = gather(scores, idx);
  const auto a = gather(accs, idx);
  auto r = spearman_rho(s, a);
  r.metric = Metric::RhoAtTop;
  return r;
}

MetricResult cace(const kernels::RowMatrix& probs, std::span<const std::int64_t> labels, std::size_t bins) {
  const auto n = static_cast<std::size_t>(probs.rows());
  if (n == 0) throw ArityError("cace: empty input");
  if (labels.size() != n) throw ArityError("cace: labels length differs from probability rows");
  if (bins == 0) throw ArityError("cace: need at least one bin");
  const auto classes = static_cast<std::size_t>(probs.cols());

  std::vector<double> conf_sum(bins), hit_sum(bins);
  std::vector<std::size_t> count(bins);
  double total = 0.0;
  for (std::size_t c = 0; c < classes; ++c) {
    std::fill(conf_sum.begin(), conf_sum.end(), 0.0);
    std::fill(hit_sum.begin(), hit_sum.end(), 0.0);
    std::fill(count.begin(), count.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      const double p = probs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c));
      const auto b = std::min(static_cast<std::size_t>(p * static_cast<double>(bins)), bins - 1);
      conf_sum[b] += p;
      hit_sum[b] += labels[i] == static_cast<std::int64_t>(c) ? 1.0 : 0.0;
      ++count[b];
    }
    for (std::size_t b = 0; b < bins; ++b) {
      if (count[b] == 0) continue;
      const double cnt = static_cast<double>(count[b]);
      total += (cnt / static_cast<double>(n)) * std::abs(conf_sum[b] / cnt - hit_sum[b] / cnt);
    }
  }
  return {Metric::CACE, total, n};
}

}  // namespace odp
