#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "odp/assignment.hpp"
#include "odp/prediction_set.hpp"

namespace odp {

enum class Method { ATC, DoC, NuclearNorm, NI, MaNo, Dispersion, MDE, Agreement, COT, COTT };
enum class ScoreKind { DirectAccuracy, DirectError, SurrogateScore };
enum class SignConvention { HigherIsBetter, LowerIsBetter };

inline constexpr Method kAllMethods[] = {Method::ATC, Method::DoC,       Method::NuclearNorm, Method::NI,
                                         Method::MaNo, Method::Dispersion, Method::MDE,        Method::Agreement,
                                         Method::COT, Method::COTT};

std::string_view method_name(Method m);
std::optional<Method> parse_method(std::string_view name);
ScoreKind method_kind(Method m);
SignConvention method_sign(Method m);
std::string_view kind_name(ScoreKind k);
std::string_view sign_name(SignConvention s);

struct ScoreReport {
  Method method{};
  std::string model_id;
  double value = 0.0;
  ScoreKind kind{};
  SignConvention sign_convention{};
  bool degenerate = false;  // set when the method hit a documented degenerate path
};

ScoreReport make_report(Method m, double value, bool degenerate = false);

enum class ConfidenceFn { MaxConfidence, NegativeEntropy };
enum class NiViews { Pairwise, WithOriginal };

struct ScoringConfig {
  ConfidenceFn atc_confidence = ConfidenceFn::MaxConfidence;
  int mano_p = 4;
  double mde_temperature = 1.0;
  double agreement_eps = 1e-4;
  std::size_t cot_max_points = 2000;
  std::uint64_t seed = 0;
  NiViews ni_views = NiViews::Pairwise;
};

// Predicted accuracy = share of test samples at least as confident as the
// threshold that reproduces validation accuracy.
ScoreReport score_atc(const PredictionSet& val, const PredictionSet& test,
                      ConfidenceFn confidence = ConfidenceFn::MaxConfidence);

// acc_va minus the drop in mean max-confidence, clamped to [0, 1].
ScoreReport score_doc(const PredictionSet& val, const PredictionSet& test);

// Nuclear norm of the softmax matrix over sqrt(n * min(n, C)).
ScoreReport score_nuclear_norm(const PredictionSet& test);

ScoreReport score_ni(const PredictionSet& test, NiViews views = NiViews::Pairwise);

ScoreReport score_mano(const PredictionSet& test, int p = 4);

ScoreReport score_dispersion(const PredictionSet& test);

// Mean free energy -T log sum_c exp(logit_c / T). Lower means more confident.
ScoreReport score_mde(const PredictionSet& test, double temperature = 1.0);

struct PairAgreement {
  double val_rate;
  double test_rate;
};

struct AgreementFit {
  double slope = 1.0;
  double intercept = 0.0;
  std::size_t n_pairs = 0;
  std::vector<bool> clipped;  // per pair: either rate was pulled into [eps, 1 - eps]
  double eps = 1e-4;
};

// Pairwise argmax agreement rate between every unordered model pair.
std::vector<PairAgreement> pairwise_agreement(std::span<const ModelRecord> records);

AgreementFit fit_agreement_line(std::span<const PairAgreement> pairs, double eps = 1e-4);
AgreementFit fit_agreement_line(std::span<const ModelRecord> records, double eps = 1e-4);

// Maps an in-distribution accuracy through the fitted probit line.
double agreement_predict(double val_accuracy, const AgreementFit& fit);
ScoreReport score_agreement(const ModelRecord& record, const AgreementFit& fit);

// Optimal transport of one split's softmax outputs onto the validation label
// marginal. Rows are put in a canonical content order before the seeded
// subsample, so the result does not depend on sample order.
struct TransportCosts {
  std::vector<double> costs;  // matched cost per transported sample
  double mean_cost = 0.0;
};

// Realizes a label histogram as exactly m one-hot targets (largest remainder,
// ties to the lower class).
std::vector<std::size_t> quota_counts(std::span<const std::size_t> histogram, std::size_t m);

std::vector<std::size_t> label_histogram(const PredictionSet& labeled);

TransportCosts transport_to_marginal(const PredictionSet& source, std::span<const std::size_t> label_histogram,
                                     std::size_t max_points, std::uint64_t seed);

struct CotResult {
  ScoreReport report;
  std::vector<double> sample_costs;
};

CotResult score_cot(const PredictionSet& val, const PredictionSet& test, std::size_t max_points, std::uint64_t seed);

// Threshold on transport cost calibrated on validation. Costs strictly above
// tau count as errors; costs equal to tau count with weight tie_weight, which
// is zero unless validation costs tie at the quantile.
struct CostThreshold {
  double tau = 0.0;
  double tie_weight = 0.0;
  bool degenerate = false;
};

CostThreshold calibrate_cost_threshold(std::span<const double> val_costs, double val_error);
double thresholded_error(std::span<const double> costs, const CostThreshold& threshold);

ScoreReport score_cott(const PredictionSet& val, const PredictionSet& test, std::size_t max_points,
                       std::uint64_t seed);

}  // namespace odp
