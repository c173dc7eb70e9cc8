#include "odp/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/SVD>

#include "odp/errors.hpp"
#include "odp/kernels.hpp"
#include "odp/normal.hpp"
#include "odp/rng.hpp"

namespace odp {

namespace {

struct MethodInfo {
  Method method;
  std::string_view name;
  ScoreKind kind;
  SignConvention sign;
};

constexpr MethodInfo kMethodTable[] = {
    {Method::ATC, "atc", ScoreKind::DirectAccuracy, SignConvention::HigherIsBetter},
    {Method::DoC, "doc", ScoreKind::DirectAccuracy, SignConvention::HigherIsBetter},
    {Method::NuclearNorm, "nuclear", ScoreKind::SurrogateScore, SignConvention::HigherIsBetter},
    {Method::NI, "ni", ScoreKind::SurrogateScore, SignConvention::HigherIsBetter},
    {Method::MaNo, "mano", ScoreKind::SurrogateScore, SignConvention::HigherIsBetter},
    {Method::Dispersion, "dispersion", ScoreKind::SurrogateScore, SignConvention::HigherIsBetter},
    {Method::MDE, "mde", ScoreKind::SurrogateScore, SignConvention::LowerIsBetter},
    {Method::Agreement, "agreement", ScoreKind::DirectAccuracy, SignConvention::HigherIsBetter},
    {Method::COT, "cot", ScoreKind::DirectError, SignConvention::LowerIsBetter},
    {Method::COTT, "cott", ScoreKind::DirectError, SignConvention::LowerIsBetter},
};

const MethodInfo& info(Method m) { return kMethodTable[static_cast<std::size_t>(m)]; }

double mean(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

void require_labels(const PredictionSet& val) {
  if (!val.labels) throw CapabilityError("validation labels are required");
}

void require_same_classes(const PredictionSet& val, const PredictionSet& test) {
  if (val.num_classes() != test.num_classes()) {
    throw AssemblyError("val/test class counts differ (" + std::to_string(val.num_classes()) + " vs " +
                        std::to_string(test.num_classes()) + ")");
  }
}

std::size_t correct_count(const PredictionSet& labeled) {
  const auto pred = kernels::row_argmax(labeled.logits);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) hits += pred[i] == static_cast<std::size_t>((*labeled.labels)[i]);
  return hits;
}

std::vector<double> confidences(const PredictionSet& set, ConfidenceFn fn) {
  const auto probs = kernels::softmax(set.logits);
  return fn == ConfidenceFn::MaxConfidence ? kernels::max_confidence(probs) : kernels::negative_entropy(probs);
}

}  // namespace

std::string_view method_name(Method m) { return info(m).name; }

std::optional<Method> parse_method(std::string_view name) {
  for (const auto& row : kMethodTable) {
    if (row.name == name) return row.method;
  }
  if (name == "nuclearnorm" || name == "nuclear_norm") return Method::NuclearNorm;
  return std::nullopt;
}

ScoreKind method_kind(Method m) { return info(m).kind; }
SignConvention method_sign(Method m) { return info(m).sign; }

std::string_view kind_name(ScoreKind k) {
  switch (k) {
    case ScoreKind::DirectAccuracy: return "DirectAccuracy";
    case ScoreKind::DirectError: return "DirectError";
    case ScoreKind::SurrogateScore: return "SurrogateScore";
  }
  return "?";
}

std::string_view sign_name(SignConvention s) {
  return s == SignConvention::HigherIsBetter ? "HigherIsBetter" : "LowerIsBetter";
}

ScoreReport make_report(Method m, double value, bool degenerate) {
  return ScoreReport{m, {}, value, info(m).kind, info(m).sign, degenerate};
}

// ---------------------------------------------------------------- confidence

ScoreReport score_atc(const PredictionSet& val, const PredictionSet& test, ConfidenceFn confidence) {
  require_labels(val);
  require_same_classes(val, test);
  const std::size_t hits = correct_count(val);
  if (hits == 0) return make_report(Method::ATC, 0.0, true);

  // hits == ceil(n_va * acc_va) exactly, without going through a float.
  auto val_conf = confidences(val, confidence);
  std::nth_element(val_conf.begin(), val_conf.begin() + static_cast<std::ptrdiff_t>(hits - 1), val_conf.end(),
                   std::greater<>());
  const double threshold = val_conf[hits - 1];

  const auto test_conf = confidences(test, confidence);
  const auto above = std::count_if(test_conf.begin(), test_conf.end(), [&](double c) { return c >= threshold; });
  return make_report(Method::ATC, static_cast<double>(above) / static_cast<double>(test_conf.size()));
}

ScoreReport score_doc(const PredictionSet& val, const PredictionSet& test) {
  require_labels(val);
  require_same_classes(val, test);
  const double acc = static_cast<double>(correct_count(val)) / static_cast<double>(val.num_samples());
  const double conf_val = mean(confidences(val, ConfidenceFn::MaxConfidence));
  const double conf_test = mean(confidences(test, ConfidenceFn::MaxConfidence));
  return make_report(Method::DoC, std::clamp(acc - (conf_val - conf_test), 0.0, 1.0));
}

// ------------------------------------------------------------ matrix scores

ScoreReport score_nuclear_norm(const PredictionSet& test) {
  const auto probs = kernels::softmax(test.logits);
  const Eigen::MatrixXd dense = probs;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(dense);
  if (svd.info() != Eigen::Success) {
    throw NumericalError("SVD did not converge on softmax matrix of shape " + shape_string(test.logits.shape()));
  }
  const double n = static_cast<double>(test.num_samples());
  const double rank_cap = static_cast<double>(std::min(test.num_samples(), test.num_classes()));
  return make_report(Method::NuclearNorm, svd.singularValues().sum() / std::sqrt(n * rank_cap));
}

ScoreReport score_mano(const PredictionSet& test, int p) {
  if (p < 1) throw ValidationError("MaNo norm order must be >= 1");
  const auto probs = kernels::softmax(test.logits);
  const auto per_row = kernels::power_sum(probs, static_cast<double>(p));
  double total = 0.0;
  for (double v : per_row) total += v;
  const double cells = static_cast<double>(probs.rows()) * static_cast<double>(probs.cols());
  return make_report(Method::MaNo, std::pow(total / cells, 1.0 / p));
}

ScoreReport score_mde(const PredictionSet& test, double temperature) {
  if (!(temperature > 0.0)) throw ValidationError("MDE temperature must be positive");
  const auto lse = kernels::log_sum_exp(kernels::LogitView::of(test.logits), temperature);
  double total = 0.0;
  for (double v : lse) total += -temperature * v;
  return make_report(Method::MDE, total / static_cast<double>(lse.size()));
}

// ----------------------------------------------------------- invariance

ScoreReport score_ni(const PredictionSet& test, NiViews views) {
  if (!test.aug_logits) {
    throw CapabilityError("NI needs augmented-view logits (test_aug_logits); run the extractor with --k-augs");
  }
  const std::size_t n = test.num_samples();
  const std::size_t k_aug = test.num_views();

  std::vector<std::vector<std::size_t>> labels;
  for (std::size_t k = 0; k < k_aug; ++k) labels.push_back(kernels::row_argmax(kernels::LogitView::slice(*test.aug_logits, k)));
  if (views == NiViews::WithOriginal) labels.push_back(kernels::row_argmax(test.logits));
  const std::size_t k_total = labels.size();
  const double pairs = static_cast<double>(k_total * (k_total - 1) / 2);

  std::vector<std::size_t> freq(test.num_classes());
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    std::fill(freq.begin(), freq.end(), 0);
    for (const auto& view : labels) ++freq[view[i]];
    std::size_t agree = 0;
    for (std::size_t f : freq) agree += f * (f - 1) / 2;
    total += static_cast<double>(agree) / pairs;
  }
  return make_report(Method::NI, total / static_cast<double>(n));
}

// ----------------------------------------------------------- features

ScoreReport score_dispersion(const PredictionSet& test) {
  if (!test.features) throw CapabilityError("Dispersion needs penultimate features (test_features)");
  const auto& feats = *test.features;
  const std::size_t n = feats.dim(0);
  const std::size_t d = feats.dim(1);
  const std::size_t classes = test.num_classes();
  const auto pseudo = kernels::row_argmax(test.logits);

  std::vector<double> global(d, 0.0);
  std::vector<double> sums(classes * d, 0.0);
  std::vector<std::size_t> counts(classes, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = feats.row(i);
    double* dst = sums.data() + pseudo[i] * d;
    for (std::size_t j = 0; j < d; ++j) {
      dst[j] += row[j];
      global[j] += row[j];
    }
    ++counts[pseudo[i]];
  }
  for (double& g : global) g /= static_cast<double>(n);

  std::size_t occupied = 0;
  double total = 0.0;
  for (std::size_t c = 0; c < classes; ++c) {
    if (counts[c] == 0) continue;
    ++occupied;
    double sq = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double diff = sums[c * d + j] / static_cast<double>(counts[c]) - global[j];
      sq += diff * diff;
    }
    total += std::sqrt(sq);
  }
  if (occupied < 2) return make_report(Method::Dispersion, 0.0, true);
  return make_report(Method::Dispersion, total / static_cast<double>(occupied));
}

// ----------------------------------------------------------- agreement

std::vector<PairAgreement> pairwise_agreement(std::span<const ModelRecord> records) {
  if (records.size() < 2) throw ArityError("agreement needs at least 2 models, got " + std::to_string(records.size()));
  const std::size_t n_val = records[0].val.num_samples();
  const std::size_t n_test = records[0].test.num_samples();
  std::vector<std::vector<std::size_t>> val_pred, test_pred;
  for (const auto& r : records) {
    if (r.val.num_samples() != n_val || r.test.num_samples() != n_test) {
      throw ArityError("agreement needs every model scored on the same samples; model " + r.model_id + " differs");
    }
    val_pred.push_back(kernels::row_argmax(r.val.logits));
    test_pred.push_back(kernels::row_argmax(r.test.logits));
  }
  auto rate = [](const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
    std::size_t same = 0;
    for (std::size_t i = 0; i < a.size(); ++i) same += a[i] == b[i];
    return static_cast<double>(same) / static_cast<double>(a.size());
  };
  std::vector<PairAgreement> out;
  for (std::size_t i = 0; i < records.size(); ++i) {
    for (std::size_t j = i + 1; j < records.size(); ++j) {
      out.push_back({rate(val_pred[i], val_pred[j]), rate(test_pred[i], test_pred[j])});
    }
  }
  return out;
}

AgreementFit fit_agreement_line(std::span<const PairAgreement> pairs, double eps) {
  if (pairs.empty()) throw ArityError("agreement fit needs at least one model pair");
  AgreementFit fit;
  fit.eps = eps;
  fit.n_pairs = pairs.size();
  std::vector<double> xs, ys;
  for (const auto& p : pairs) {
    const double x = std::clamp(p.val_rate, eps, 1.0 - eps);
    const double y = std::clamp(p.test_rate, eps, 1.0 - eps);
    fit.clipped.push_back(x != p.val_rate || y != p.test_rate);
    xs.push_back(probit(x));
    ys.push_back(probit(y));
  }
  const double mx = mean(xs);
  const double my = mean(ys);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  // One pair, or no spread in x: fall back to a unit-slope line through the mean.
  if (pairs.size() == 1 || sxx <= 1e-12 * static_cast<double>(xs.size())) {
    fit.slope = 1.0;
    fit.intercept = my - mx;
  } else {
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
  }
  return fit;
}

AgreementFit fit_agreement_line(std::span<const ModelRecord> records, double eps) {
  const auto pairs = pairwise_agreement(records);
  return fit_agreement_line(pairs, eps);
}

double agreement_predict(double val_accuracy, const AgreementFit& fit) {
  const double x = std::clamp(val_accuracy, fit.eps, 1.0 - fit.eps);
  return normal_cdf(fit.slope * probit(x) + fit.intercept);
}

ScoreReport score_agreement(const ModelRecord& record, const AgreementFit& fit) {
  require_labels(record.val);
  const double acc = static_cast<double>(correct_count(record.val)) / static_cast<double>(record.val.num_samples());
  return make_report(Method::Agreement, agreement_predict(acc, fit));
}

// ----------------------------------------------------------- transport

std::vector<std::size_t> label_histogram(const PredictionSet& labeled) {
  require_labels(labeled);
  std::vector<std::size_t> hist(labeled.num_classes(), 0);
  for (auto y : labeled.labels->data()) ++hist[static_cast<std::size_t>(y)];
  return hist;
}

std::vector<std::size_t> quota_counts(std::span<const std::size_t> histogram, std::size_t m) {
  const std::size_t total = std::accumulate(histogram.begin(), histogram.end(), std::size_t{0});
  if (total == 0) throw ArityError("empty label histogram");
  std::vector<std::size_t> counts(histogram.size());
  std::vector<std::pair<std::size_t, std::size_t>> remainders;  // (numerator remainder, class)
  std::size_t assigned = 0;
  for (std::size_t k = 0; k < histogram.size(); ++k) {
    // Exact integer arithmetic: m * h_k = q * total + r.
    const std::size_t scaled = m * histogram[k];
    counts[k] = scaled / total;
    assigned += counts[k];
    remainders.emplace_back(scaled % total, k);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t i = 0; assigned < m; ++i, ++assigned) ++counts[remainders[i].second];
  return counts;
}

TransportCosts transport_to_marginal(const PredictionSet& source, std::span<const std::size_t> histogram,
                                     std::size_t max_points, std::uint64_t seed) {
  const std::size_t n = source.num_samples();
  const std::size_t classes = source.num_classes();
  if (histogram.size() != classes) throw AssemblyError("label histogram does not match class count");
  const std::size_t m = std::min(n, max_points);
  if (m == 0) throw ArityError("optimal transport needs at least one point");

  // Canonical order: lexicographic on logit rows.
  const auto& logits = source.logits;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto ra = logits.row(a);
    const auto rb = logits.row(b);
    return std::lexicographical_compare(ra.begin(), ra.end(), rb.begin(), rb.end());
  });
  if (m < n) {
    Rng rng(seed);
    for (std::size_t i = 0; i < m; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
      std::swap(order[i], order[j]);
    }
    order.resize(m);
  }

  std::vector<float> picked;
  picked.reserve(m * classes);
  for (std::size_t idx : order) {
    const auto row = logits.row(idx);
    picked.insert(picked.end(), row.begin(), row.end());
  }
  const auto probs = kernels::softmax(kernels::LogitView{picked, m, classes});
  std::vector<std::size_t> class_ids(classes);
  std::iota(class_ids.begin(), class_ids.end(), 0);
  const auto class_cost = kernels::half_l1_to_onehot(probs, class_ids);
  const auto capacity = quota_counts(histogram, m);
  auto plan = solve_class_transport(class_cost, capacity);

  TransportCosts out;
  out.costs = std::move(plan.row_cost);
  out.mean_cost = plan.total_cost / static_cast<double>(m);
  return out;
}

CotResult score_cot(const PredictionSet& val, const PredictionSet& test, std::size_t max_points, std::uint64_t seed) {
  require_same_classes(val, test);
  const auto hist = label_histogram(val);
  auto t = transport_to_marginal(test, hist, max_points, seed);
  return CotResult{make_report(Method::COT, std::clamp(t.mean_cost, 0.0, 1.0)), std::move(t.costs)};
}

CostThreshold calibrate_cost_threshold(std::span<const double> val_costs, double val_error) {
  if (val_costs.empty()) throw ArityError("threshold calibration needs at least one cost");
  std::vector<double> sorted(val_costs.begin(), val_costs.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  const double m = static_cast<double>(sorted.size());
  const double target = val_error * m;

  CostThreshold out;
  if (val_error <= 0.0) {
    out.tau = sorted.front();
    out.degenerate = true;
    return out;
  }
  const auto idx = std::min(static_cast<std::size_t>(std::floor(target)), sorted.size() - 1);
  out.tau = sorted[idx];
  const auto above = static_cast<double>(std::count_if(sorted.begin(), sorted.end(), [&](double c) { return c > out.tau; }));
  const auto equal = static_cast<double>(std::count(sorted.begin(), sorted.end(), out.tau));
  out.tie_weight = std::clamp((target - above) / equal, 0.0, 1.0);
  return out;
}

double thresholded_error(std::span<const double> costs, const CostThreshold& threshold) {
  double count = 0.0;
  for (double c : costs) {
    if (c > threshold.tau) {
      count += 1.0;
    } else if (c == threshold.tau) {
      count += threshold.tie_weight;
    }
  }
  return count / static_cast<double>(costs.size());
}

ScoreReport score_cott(const PredictionSet& val, const PredictionSet& test, std::size_t max_points,
                       std::uint64_t seed) {
  require_same_classes(val, test);
  const auto hist = label_histogram(val);
  const double val_error = 1.0 - static_cast<double>(correct_count(val)) / static_cast<double>(val.num_samples());
  const auto val_costs = transport_to_marginal(val, hist, max_points, seed);
  const auto threshold = calibrate_cost_threshold(val_costs.costs, val_error);
  const auto test_costs = transport_to_marginal(test, hist, max_points, seed);
  return make_report(Method::COTT, std::clamp(thresholded_error(test_costs.costs, threshold), 0.0, 1.0),
                     threshold.degenerate);
}

}  // namespace odp
