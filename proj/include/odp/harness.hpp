#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "odp/manifest.hpp"
#include "odp/metrics.hpp"
#include "odp/scoring.hpp"

namespace odp {

struct SkipRecord {
  Method method;
  std::string model_id;  // empty when the whole method was skipped
  std::string reason;
};

struct MatrixStats {
  std::size_t computed = 0;    // score computations actually run
  std::size_t cache_hits = 0;
};

struct MatrixResult {
  std::string dataset_id;
  std::vector<ScoreReport> reports;  // method-major, models in manifest order
  std::vector<SkipRecord> skips;
  MatrixStats stats;
};

struct RunOptions {
  bool use_cache = true;
  std::optional<std::filesystem::path> cache_dir;  // default: ScoreCache::default_dir
};

// Stable text identifying the hyperparameters a method depends on.
std::string method_config_string(Method method, const ScoringConfig& config);

// Scores every (method, model) pair. Pairs run concurrently; the cache is read
// before and written after the parallel section. Methods whose inputs are
// missing are recorded as skips rather than failing the run.
MatrixResult run_matrix(const Manifest& manifest, std::span<const Method> methods, const ScoringConfig& config,
                        const RunOptions& options = {});

// Same, over records already in memory (no cache).
MatrixResult run_matrix(const std::string& dataset_id, std::span<const ModelRecord> records,
                        std::span<const Method> methods, const ScoringConfig& config);

// Argmax accuracy on the labeled test split of every record, keyed by model id.
std::map<std::string, double> ground_truth_accuracies(std::span<const ModelRecord> records);

struct MethodMetrics {
  std::size_t n = 0;
  std::optional<double> rho;
  std::optional<double> r2;
  std::optional<double> mae;  // direct kinds only
  std::optional<double> precision_at_top;
  std::optional<double> rho_at_top;
};

struct EvalRow {
  std::string dataset_id;
  std::map<Method, MethodMetrics> methods;

  // Mean rho over methods where it is defined; nullopt when none is.
  std::optional<double> average_rho() const;
  std::size_t effective_count(double threshold = 0.7) const;
};

struct EvalTable {
  std::vector<EvalRow> rows;
};

// Value ranked against accuracy: DirectError becomes 1 - error, everything else
// is used raw (so MDE keeps its negative correlation).
double accuracy_scale_value(const ScoreReport& r);
// Higher-is-better orientation, used to pick "top" models.
double oriented_value(const ScoreReport& r);

EvalRow evaluate(const std::string& dataset_id, std::span<const ScoreReport> reports,
                 const std::map<std::string, double>& truth);

// Mean of every metric across split rows (leave-one-domain-out style); the
// result carries `dataset_id`.
EvalRow aggregate_dg(std::span<const EvalRow> splits, const std::string& dataset_id);

enum class TableFormat { Csv, Markdown };

// Datasets sorted by descending average rho (ties by dataset id), one column
// per method, then the average and the count of methods with rho > 0.7.
std::string render_leaderboard(const EvalTable& table, TableFormat format);

// ---- file formats

void write_reports_csv(const std::string& dataset_id, std::span<const ScoreReport> reports,
                       const std::filesystem::path& path);
std::vector<ScoreReport> read_reports_csv(const std::filesystem::path& path, std::string* dataset_id = nullptr);

void write_eval_csv(const EvalTable& table, const std::filesystem::path& path);
EvalTable read_eval_csv(const std::filesystem::path& path);

// (score, accuracy, model_id) triples of one method for external plotting.
void emit_scatter_data(std::span<const ScoreReport> reports, const std::map<std::string, double>& accs,
                       const std::filesystem::path& path);

struct ScatterRow {
  double score;
  double accuracy;
  std::string model_id;
};
std::vector<ScatterRow> read_scatter_csv(const std::filesystem::path& path);

std::vector<std::string> split_csv_line(const std::string& line);

}  // namespace odp
