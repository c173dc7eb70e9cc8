#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "odp/prediction_set.hpp"

namespace odp::synth {

// Label-flip generative family. Each model predicts the true label with its
// target accuracy, otherwise a uniformly drawn wrong class; its logits put
// `margin` on the predicted class plus N(0, noise_sigma) per coordinate, all
// divided by `temperature`. Models share the sample set (same true labels).
//
// wrong_margin / wrong_flip_prob, when set, apply to misclassified samples
// only. Setting wrong_margin < margin and wrong_flip_prob > aug_flip_prob
// gives a family whose confidence and view stability track correctness.
struct SynthSpec {
  std::size_t n_models = 0;
  std::size_t n_val = 0;
  std::size_t n_test = 0;
  std::size_t num_classes = 0;
  std::vector<double> accuracy_val;
  std::vector<double> accuracy_test;
  double margin = 4.0;
  double noise_sigma = 0.0;
  double temperature = 1.0;
  std::size_t k_augs = 0;
  double aug_flip_prob = 0.0;
  std::optional<double> wrong_margin;
  std::optional<double> wrong_flip_prob;
  std::uint64_t seed = 0;
};

// Throws ValidationError describing the first violated constraint.
void validate(const SynthSpec& spec);

struct Family {
  std::vector<ModelRecord> models;
  std::vector<double> test_accuracy;  // argmax accuracy on the generated test split
};

// Deterministic in spec (including seed); models are generated in parallel.
Family generate_family(const SynthSpec& spec);

// A model family evaluated on three test sets drawn from a population with a
// small group on which every model is confidently wrong. Validation follows the
// training mix (95% majority, 5% minority).
struct SubpopulationCase {
  std::vector<ModelRecord> majority;  // test split = majority group
  std::vector<ModelRecord> minority;  // test split = minority group
  std::vector<ModelRecord> balanced;  // test split = 50/50 mix
  std::vector<double> majority_accuracy;
  std::vector<double> minority_accuracy;
  std::vector<double> balanced_accuracy;
  double minority_confidence = 0.0;
};

SubpopulationCase generate_subpopulation_case(std::uint64_t seed);

}  // namespace odp::synth
