#include "odp/synth.hpp"

#include <algorithm>
#include <cmath>

#include "odp/errors.hpp"
#include "odp/rng.hpp"

namespace odp::synth {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t model, std::uint64_t stream) {
  return splitmix64(splitmix64(seed ^ splitmix64(model + 1)) + stream);
}

std::size_t other_class(Rng& rng, std::size_t label, std::size_t classes) {
  const auto pick = static_cast<std::size_t>(rng.below(classes - 1));
  return pick >= label ? pick + 1 : pick;
}

void write_logit_row(Rng& rng, std::span<float> row, std::size_t hot, double margin, double sigma, double temperature) {
  for (std::size_t c = 0; c < row.size(); ++c) {
    double v = c == hot ? margin : 0.0;
    if (sigma > 0.0) v += sigma * rng.normal();
    row[c] = static_cast<float>(v / temperature);
  }
}

TensorI64 draw_labels(Rng& rng, std::size_t n, std::size_t classes) {
  TensorI64 labels(Shape{n});
  for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<std::int64_t>(rng.below(classes));
  return labels;
}

struct SplitDraw {
  TensorF32 logits;
  std::vector<std::size_t> predicted;
  std::vector<bool> correct;
};

SplitDraw draw_split(Rng& rng, const TensorI64& labels, double accuracy, const SynthSpec& spec) {
  const std::size_t n = labels.size();
  const std::size_t classes = spec.num_classes;
  const double wrong_margin = spec.wrong_margin.value_or(spec.margin);
  SplitDraw out{TensorF32(Shape{n, classes}), std::vector<std::size_t>(n), std::vector<bool>(n)};
  for (std::size_t i = 0; i < n; ++i) {
    const auto truth = static_cast<std::size_t>(labels[i]);
    const bool hit = rng.bernoulli(accuracy);
    out.predicted[i] = hit ? truth : other_class(rng, truth, classes);
    out.correct[i] = hit;
    write_logit_row(rng, out.logits.row(i), out.predicted[i], hit ? spec.margin : wrong_margin, spec.noise_sigma,
                    spec.temperature);
  }
  return out;
}

}  // namespace

void validate(const SynthSpec& spec) {
  if (spec.n_models == 0) throw ValidationError("synth: n_models must be positive");
  if (spec.n_val == 0 || spec.n_test == 0) throw ValidationError("synth: n_val and n_test must be positive");
  if (spec.num_classes < 2) throw ValidationError("synth: need at least 2 classes");
  if (spec.accuracy_val.size() != spec.n_models || spec.accuracy_test.size() != spec.n_models) {
    throw ValidationError("synth: accuracy vectors must have n_models entries");
  }
  auto open_unit = [](double a) { return a > 0.0 && a < 1.0; };
  if (!std::all_of(spec.accuracy_val.begin(), spec.accuracy_val.end(), open_unit) ||
      !std::all_of(spec.accuracy_test.begin(), spec.accuracy_test.end(), open_unit)) {
    throw ValidationError("synth: accuracy targets must lie in (0, 1)");
  }
  if (!(spec.margin > 0.0)) throw ValidationError("synth: margin must be positive");
  if (spec.wrong_margin && !(*spec.wrong_margin >= 0.0)) throw ValidationError("synth: wrong_margin must be >= 0");
  if (!(spec.noise_sigma >= 0.0)) throw ValidationError("synth: noise_sigma must be >= 0");
  if (!(spec.temperature > 0.0)) throw ValidationError("synth: temperature must be positive");
  if (spec.k_augs == 1) throw ValidationError("synth: k_augs must be 0 or at least 2");
  auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (!prob(spec.aug_flip_prob) || (spec.wrong_flip_prob && !prob(*spec.wrong_flip_prob))) {
    throw ValidationError("synth: flip probabilities must lie in [0, 1]");
  }
}

Family generate_family(const SynthSpec& spec) {
  validate(spec);
  const std::size_t classes = spec.num_classes;

  Rng label_rng(stream_seed(spec.seed, 0, 0));
  const TensorI64 val_labels = draw_labels(label_rng, spec.n_val, classes);
  const TensorI64 test_labels = draw_labels(label_rng, spec.n_test, classes);

  std::vector<std::optional<ModelRecord>> built(spec.n_models);
  const auto count = static_cast<std::ptrdiff_t>(spec.n_models);
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t m = 0; m < count; ++m) {
    Rng val_rng(stream_seed(spec.seed, m + 1, 1));
    Rng test_rng(stream_seed(spec.seed, m + 1, 2));
    Rng feat_rng(stream_seed(spec.seed, m + 1, 3));
    Rng aug_rng(stream_seed(spec.seed, m + 1, 4));

    auto val = draw_split(val_rng, val_labels, spec.accuracy_val[m], spec);
    auto test = draw_split(test_rng, test_labels, spec.accuracy_test[m], spec);

    TensorF32 features(Shape{spec.n_test, classes});
    for (std::size_t i = 0; i < spec.n_test; ++i) {
      write_logit_row(feat_rng, features.row(i), static_cast<std::size_t>(test_labels[i]), spec.margin,
                      spec.noise_sigma, 1.0);
    }

    std::optional<TensorF32> aug;
    if (spec.k_augs > 0) {
      const double wrong_margin = spec.wrong_margin.value_or(spec.margin);
      const double wrong_flip = spec.wrong_flip_prob.value_or(spec.aug_flip_prob);
      aug.emplace(Shape{spec.k_augs, spec.n_test, classes});
      auto data = aug->data();
      for (std::size_t k = 0; k < spec.k_augs; ++k) {
        for (std::size_t i = 0; i < spec.n_test; ++i) {
          const bool hit = test.correct[i];
          std::size_t label = test.predicted[i];
          if (aug_rng.bernoulli(hit ? spec.aug_flip_prob : wrong_flip)) label = other_class(aug_rng, label, classes);
          write_logit_row(aug_rng, data.subspan((k * spec.n_test + i) * classes, classes), label,
                          hit ? spec.margin : wrong_margin, spec.noise_sigma, spec.temperature);
        }
      }
    }

    auto val_set = assemble_prediction_set(std::move(val.logits), std::nullopt, val_labels);
    auto test_set = assemble_prediction_set(std::move(test.logits), std::move(features), test_labels, std::move(aug));
    built[m] = make_model_record("synth_" + std::to_string(m), std::move(val_set), std::move(test_set), "synth");
  }

  Family family;
  for (auto& rec : built) {
    family.test_accuracy.push_back(argmax_accuracy(rec->test));
    family.models.push_back(std::move(*rec));
  }
  return family;
}

namespace {

// Binary logits whose softmax confidence in `predicted` is exactly `confidence`.
void confident_row(std::span<float> row, std::size_t predicted, double confidence) {
  const double margin = std::log(confidence / (1.0 - confidence));
  row[0] = row[1] = 0.0f;
  row[predicted] = static_cast<float>(margin);
}

struct GroupSpec {
  std::size_t size;
  double accuracy;
  double confidence;
};

// Samples for several groups, concatenated. Exactly round(accuracy * size)
// samples per group are correct, at positions chosen by the rng.
std::pair<TensorF32, TensorI64> draw_groups(Rng& rng, std::span<const GroupSpec> groups) {
  std::size_t n = 0;
  for (const auto& g : groups) n += g.size;
  TensorF32 logits(Shape{n, 2});
  TensorI64 labels(Shape{n});
  std::size_t offset = 0;
  for (const auto& g : groups) {
    const auto hits = static_cast<std::size_t>(std::llround(g.accuracy * static_cast<double>(g.size)));
    std::vector<bool> correct(g.size, false);
    std::fill(correct.begin(), correct.begin() + static_cast<std::ptrdiff_t>(hits), true);
    for (std::size_t i = g.size; i > 1; --i) {
      const auto j = static_cast<std::size_t>(rng.below(i));
      const bool tmp = correct[i - 1];
      correct[i - 1] = correct[j];
      correct[j] = tmp;
    }
    for (std::size_t i = 0; i < g.size; ++i) {
      const auto truth = static_cast<std::size_t>(rng.below(2));
      labels[offset + i] = static_cast<std::int64_t>(truth);
      confident_row(logits.row(offset + i), correct[i] ? truth : 1 - truth, g.confidence);
    }
    offset += g.size;
  }
  return {std::move(logits), std::move(labels)};
}

}  // namespace

SubpopulationCase generate_subpopulation_case(std::uint64_t seed) {
  constexpr double kMinorityAccuracy = 0.2;
  constexpr double kMinorityConfidence = 0.95;
  const std::vector<double> majority_acc = {0.86, 0.88, 0.90, 0.92, 0.94};

  SubpopulationCase out;
  out.minority_confidence = kMinorityConfidence;
  for (std::size_t m = 0; m < majority_acc.size(); ++m) {
    Rng rng(stream_seed(seed, m + 1, 7));
    // Majority group is calibrated: confidence equals accuracy.
    const GroupSpec major{0, majority_acc[m], majority_acc[m]};
    const GroupSpec minor{0, kMinorityAccuracy, kMinorityConfidence};
    auto sized = [](GroupSpec g, std::size_t n) {
      g.size = n;
      return g;
    };

    const GroupSpec val_groups[] = {sized(major, 1900), sized(minor, 100)};
    const GroupSpec maj_groups[] = {sized(major, 2000)};
    const GroupSpec min_groups[] = {sized(minor, 2000)};
    const GroupSpec bal_groups[] = {sized(major, 1000), sized(minor, 1000)};

    auto [val_logits, val_labels] = draw_groups(rng, val_groups);
    const auto val = assemble_prediction_set(std::move(val_logits), std::nullopt, std::move(val_labels));
    const std::string id = "subpop_" + std::to_string(m);

    auto add = [&](std::span<const GroupSpec> groups, std::vector<ModelRecord>& dst, std::vector<double>& accs) {
      auto [logits, labels] = draw_groups(rng, groups);
      auto test = assemble_prediction_set(std::move(logits), std::nullopt, std::move(labels));
      accs.push_back(argmax_accuracy(test));
      dst.push_back(make_model_record(id, val, std::move(test), "synth"));
    };
    add(maj_groups, out.majority, out.majority_accuracy);
    add(min_groups, out.minority, out.minority_accuracy);
    add(bal_groups, out.balanced, out.balanced_accuracy);
  }
  return out;
}

}  // namespace odp::synth
