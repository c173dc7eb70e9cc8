#include "odp/harness.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "odp/cache.hpp"
#include "odp/errors.hpp"

namespace odp {

namespace fs = std::filesystem;

std::string method_config_string(Method method, const ScoringConfig& c) {
  std::ostringstream os;
  os.precision(17);
  os << method_name(method);
  switch (method) {
    case Method::ATC:
      os << ";conf=" << (c.atc_confidence == ConfidenceFn::MaxConfidence ? "max" : "entropy");
      break;
    case Method::NI:
      os << ";views=" << (c.ni_views == NiViews::Pairwise ? "pairwise" : "with_original");
      break;
    case Method::MaNo:
      os << ";p=" << c.mano_p;
      break;
    case Method::MDE:
      os << ";T=" << c.mde_temperature;
      break;
    case Method::Agreement:
      os << ";eps=" << c.agreement_eps;
      break;
    case Method::COT:
    case Method::COTT:
      os << ";max_points=" << c.cot_max_points << ";seed=" << c.seed;
      break;
    default:
      break;
  }
  return os.str();
}

namespace {

std::optional<std::string> missing_input(Method m, const ModelRecord& r) {
  if (m == Method::NI && !r.test.aug_logits) return "no augmented-view logits (test_aug_logits)";
  if (m == Method::Dispersion && !r.test.features) return "no test features (test_features)";
  return std::nullopt;
}

ScoreReport compute_score(Method m, const ModelRecord& r, const ScoringConfig& c, const AgreementFit* fit) {
  switch (m) {
    case Method::ATC: return score_atc(r.val, r.test, c.atc_confidence);
    case Method::DoC: return score_doc(r.val, r.test);
    case Method::NuclearNorm: return score_nuclear_norm(r.test);
    case Method::NI: return score_ni(r.test, c.ni_views);
    case Method::MaNo: return score_mano(r.test, c.mano_p);
    case Method::Dispersion: return score_dispersion(r.test);
    case Method::MDE: return score_mde(r.test, c.mde_temperature);
    case Method::Agreement: return score_agreement(r, *fit);
    case Method::COT: return score_cot(r.val, r.test, c.cot_max_points, c.seed).report;
    case Method::COTT: return score_cott(r.val, r.test, c.cot_max_points, c.seed);
  }
  throw Error("unknown method");
}

struct Slot {
  Method method;
  std::size_t model;
  std::string key;
  std::optional<ScoreReport> report;
  std::optional<std::string> skip;
};

// Shared driver. `keys` is empty when running without a cache.
MatrixResult run_core(const std::string& dataset_id, std::span<const ModelRecord> records,
                      std::span<const Method> methods, const ScoringConfig& config, ScoreCache* cache,
                      const std::vector<std::string>& model_digests, const std::string& pool_digest) {
  MatrixResult out;
  out.dataset_id = dataset_id;

  std::vector<Slot> slots;
  for (Method m : methods) {
    if (m == Method::Agreement && records.size() < 2) {
      out.skips.push_back({m, {}, "agreement needs at least 2 models"});
      continue;
    }
    for (std::size_t i = 0; i < records.size(); ++i) {
      Slot s{m, i, {}, std::nullopt, missing_input(m, records[i])};
      if (cache) {
        std::string cfg = method_config_string(m, config) + "|" + model_digests[i];
        if (m == Method::Agreement) cfg += "|" + pool_digest;
        s.key = dataset_id + "|" + records[i].model_id + "|" + std::string(method_name(m)) + "|" + hex64(fnv1a64(cfg));
      }
      slots.push_back(std::move(s));
    }
  }

  std::vector<std::size_t> pending;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    auto& s = slots[i];
    if (s.skip) continue;
    if (cache) {
      if (auto hit = cache->find(s.key)) {
        auto r = make_report(s.method, hit->value, hit->degenerate);
        r.model_id = records[s.model].model_id;
        s.report = r;
        ++out.stats.cache_hits;
        continue;
      }
    }
    pending.push_back(i);
  }

  // The agreement line is a batch fit over the whole pool; do it once, up front.
  std::optional<AgreementFit> fit;
  std::optional<std::string> fit_failure;
  if (std::any_of(pending.begin(), pending.end(), [&](std::size_t i) { return slots[i].method == Method::Agreement; })) {
    try {
      fit = fit_agreement_line(records, config.agreement_eps);
    } catch (const ArityError& e) {
      fit_failure = e.what();
    }
  }

  std::exception_ptr failure;
  const auto count = static_cast<std::ptrdiff_t>(pending.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t t = 0; t < count; ++t) {
    auto& s = slots[pending[t]];
    if (s.method == Method::Agreement && !fit) {
      s.skip = *fit_failure;
      continue;
    }
    try {
      auto r = compute_score(s.method, records[s.model], config, fit ? &*fit : nullptr);
      r.model_id = records[s.model].model_id;
      s.report = r;
    } catch (const CapabilityError& e) {
      s.skip = e.what();
    } catch (const ArityError& e) {
      s.skip = e.what();
    } catch (...) {
#pragma omp critical(odp_matrix_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);

  for (std::size_t i : pending) {
    if (slots[i].report) {
      ++out.stats.computed;
      if (cache) cache->put(slots[i].key, {slots[i].report->value, slots[i].report->degenerate});
    }
  }
  for (auto& s : slots) {
    if (s.report) {
      out.reports.push_back(*s.report);
    } else if (s.skip) {
      out.skips.push_back({s.method, records[s.model].model_id, *s.skip});
    }
  }
  return out;
}

}  // namespace

MatrixResult run_matrix(const Manifest& manifest, std::span<const Method> methods, const ScoringConfig& config,
                        const RunOptions& options) {
  const auto records = load_records(manifest);
  if (records.empty()) throw ArityError("manifest " + manifest.source.string() + " lists no models");
  if (!options.use_cache) return run_core(manifest.dataset_id, records, methods, config, nullptr, {}, {});

  std::vector<std::string> digests;
  std::uint64_t pool = fnv1a64("pool");
  for (const auto& mm : manifest.models) {
    std::uint64_t h = fnv1a64(mm.model_id);
    for (const auto* p : {&mm.val_logits, &mm.val_labels, &mm.test_logits}) h = file_digest(*p, h);
    if (mm.test_features) h = file_digest(*mm.test_features, h);
    if (mm.test_aug_logits) h = file_digest(*mm.test_aug_logits, h);
    digests.push_back(hex64(h));
    pool = fnv1a64(digests.back(), pool);
  }
  const fs::path dir = options.cache_dir.value_or(ScoreCache::default_dir(manifest.source));
  std::string stem = manifest.dataset_id;
  std::replace_if(stem.begin(), stem.end(), [](char ch) { return ch == '/' || ch == '\\' || ch == ':'; }, '_');
  ScoreCache cache(dir / (stem + ".scores.json"));
  auto result = run_core(manifest.dataset_id, records, methods, config, &cache, digests, hex64(pool));
  if (result.stats.computed > 0) cache.save();
  return result;
}

MatrixResult run_matrix(const std::string& dataset_id, std::span<const ModelRecord> records,
                        std::span<const Method> methods, const ScoringConfig& config) {
  return run_core(dataset_id, records, methods, config, nullptr, {}, {});
}

std::map<std::string, double> ground_truth_accuracies(std::span<const ModelRecord> records) {
  std::map<std::string, double> out;
  for (const auto& r : records) {
    if (!r.test.labels) throw EvaluationError("model " + r.model_id + " has no test labels; cannot evaluate");
    out[r.model_id] = argmax_accuracy(r.test);
  }
  return out;
}

// ------------------------------------------------------------- evaluation

std::optional<double> EvalRow::average_rho() const {
  double total = 0.0;
  std::size_t n = 0;
  for (const auto& [m, mm] : methods) {
    if (mm.rho) {
      total += *mm.rho;
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return total / static_cast<double>(n);
}

std::size_t EvalRow::effective_count(double threshold) const {
  std::size_t n = 0;
  for (const auto& [m, mm] : methods) n += mm.rho && *mm.rho > threshold;
  return n;
}

double accuracy_scale_value(const ScoreReport& r) {
  return r.kind == ScoreKind::DirectError ? 1.0 - r.value : r.value;
}

double oriented_value(const ScoreReport& r) {
  if (r.kind == ScoreKind::DirectError) return 1.0 - r.value;
  return r.sign_convention == SignConvention::LowerIsBetter ? -r.value : r.value;
}

namespace {

template <typename F>
std::optional<double> guarded(F&& f) {
  try {
    return f();
  } catch (const UndefinedMetricError&) {
    return std::nullopt;
  } catch (const ArityError&) {
    return std::nullopt;
  }
}

}  // namespace

EvalRow evaluate(const std::string& dataset_id, std::span<const ScoreReport> reports,
                 const std::map<std::string, double>& truth) {
  EvalRow row;
  row.dataset_id = dataset_id;
  std::map<Method, std::vector<const ScoreReport*>> by_method;
  for (const auto& r : reports) {
    if (!truth.count(r.model_id)) {
      throw EvaluationError("no ground-truth accuracy for model " + r.model_id);
    }
    by_method[r.method].push_back(&r);
  }
  for (const auto& [method, rs] : by_method) {
    std::vector<double> raw, oriented, accs;
    for (const auto* r : rs) {
      raw.push_back(accuracy_scale_value(*r));
      oriented.push_back(oriented_value(*r));
      accs.push_back(truth.at(r->model_id));
    }
    MethodMetrics mm;
    mm.n = rs.size();
    mm.rho = guarded([&] { return spearman_rho(raw, accs).value; });
    mm.r2 = guarded([&] { return r_squared(raw, accs).value; });
    if (method_kind(method) != ScoreKind::SurrogateScore) {
      mm.mae = mae_direct(raw, accs).value;
    }
    mm.precision_at_top = guarded([&] { return precision_at_top(oriented, accs).value; });
    mm.rho_at_top = guarded([&] { return rho_at_top(oriented, accs).value; });
    row.methods[method] = mm;
  }
  return row;
}

EvalRow aggregate_dg(std::span<const EvalRow> splits, const std::string& dataset_id) {
  if (splits.empty()) throw AggregationError("aggregate_dg needs at least one split");
  for (const auto& s : splits) {
    if (s.methods.size() != splits[0].methods.size() ||
        !std::equal(s.methods.begin(), s.methods.end(), splits[0].methods.begin(),
                    [](const auto& a, const auto& b) { return a.first == b.first; })) {
      throw AggregationError("split " + s.dataset_id + " has a different method set than " + splits[0].dataset_id);
    }
  }
  auto mean_of = [&](Method m, std::optional<double> MethodMetrics::*field) -> std::optional<double> {
    double total = 0.0;
    std::size_t n = 0;
    for (const auto& s : splits) {
      if (const auto& v = s.methods.at(m).*field) {
        total += *v;
        ++n;
      }
    }
    if (n == 0) return std::nullopt;
    return total / static_cast<double>(n);
  };
  EvalRow out;
  out.dataset_id = dataset_id;
  for (const auto& [m, first] : splits[0].methods) {
    MethodMetrics mm;
    for (const auto& s : splits) mm.n += s.methods.at(m).n;
    mm.rho = mean_of(m, &MethodMetrics::rho);
    mm.r2 = mean_of(m, &MethodMetrics::r2);
    mm.mae = mean_of(m, &MethodMetrics::mae);
    mm.precision_at_top = mean_of(m, &MethodMetrics::precision_at_top);
    mm.rho_at_top = mean_of(m, &MethodMetrics::rho_at_top);
    out.methods[m] = mm;
  }
  return out;
}

}  // namespace odp
