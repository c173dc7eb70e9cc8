// odp: score, evaluate and rank out-of-distribution performance predictors.
//
//   odp synth --spec spec.json --out-dir D
//   odp score --manifest M --methods atc,doc,... --out reports.csv
//   odp eval --manifest M --reports reports.csv --out table.csv
//   odp leaderboard --tables t1.csv,t2.csv --format markdown
//
// Exit codes: 0 ok, 1 other failure, 2 validation error, 3 skipped methods under --strict.

#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "odp/errors.hpp"
#include "odp/harness.hpp"
#include "odp/synth.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitStrictSkip = 3;

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

odp::synth::SynthSpec spec_from_json(const nlohmann::json& j) {
  odp::synth::SynthSpec s;
  s.n_models = j.at("n_models").get<std::size_t>();
  s.n_val = j.at("n_val").get<std::size_t>();
  s.n_test = j.at("n_test").get<std::size_t>();
  s.num_classes = j.contains("num_classes") ? j.at("num_classes").get<std::size_t>() : j.at("C").get<std::size_t>();
  s.accuracy_val = j.at("accuracy_val").get<std::vector<double>>();
  s.accuracy_test = j.at("accuracy_test").get<std::vector<double>>();
  s.margin = j.value("margin", s.margin);
  s.noise_sigma = j.value("noise_sigma", s.noise_sigma);
  s.temperature = j.value("temperature", s.temperature);
  s.k_augs = j.value("k_augs", j.value("K_augs", s.k_augs));
  s.aug_flip_prob = j.value("aug_flip_prob", s.aug_flip_prob);
  if (j.contains("wrong_margin")) s.wrong_margin = j.at("wrong_margin").get<double>();
  if (j.contains("wrong_flip_prob")) s.wrong_flip_prob = j.at("wrong_flip_prob").get<double>();
  s.seed = j.value("seed", s.seed);
  return s;
}

int run_synth(const fs::path& spec_path, const fs::path& out_dir) {
  std::ifstream f(spec_path);
  if (!f) throw odp::LoadError("spec file not found: " + spec_path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(f);
    const auto spec = spec_from_json(j);
    const auto family = odp::synth::generate_family(spec);
    const auto manifest = odp::write_family(family, j.value("dataset_id", std::string("synth")), out_dir);
    std::cout << "wrote " << family.models.size() << " models, manifest " << manifest.string() << '\n';
  } catch (const nlohmann::json::exception& e) {
    throw odp::ValidationError(std::string("bad synth spec: ") + e.what());
  }
  return 0;
}

struct ScoreArgs {
  fs::path manifest, out;
  std::string methods = "atc,doc,nuclear,ni,mano,dispersion,mde,agreement,cot,cott";
  odp::ScoringConfig config;
  std::string atc_conf = "max";
  std::string ni_views = "pairwise";
  bool strict = false;
  bool no_cache = false;
};

int run_score(const ScoreArgs& a) {
  std::vector<odp::Method> methods;
  for (const auto& name : split_list(a.methods)) {
    auto m = odp::parse_method(name);
    if (!m) throw odp::ValidationError("unknown method: " + name);
    methods.push_back(*m);
  }
  auto config = a.config;
  config.atc_confidence = a.atc_conf == "entropy" ? odp::ConfidenceFn::NegativeEntropy : odp::ConfidenceFn::MaxConfidence;
  config.ni_views = a.ni_views == "with-original" ? odp::NiViews::WithOriginal : odp::NiViews::Pairwise;

  const auto manifest = odp::load_manifest(a.manifest);
  odp::RunOptions options;
  options.use_cache = !a.no_cache;
  const auto result = odp::run_matrix(manifest, methods, config, options);
  odp::write_reports_csv(result.dataset_id, result.reports, a.out);

  std::cerr << result.reports.size() << " reports (" << result.stats.computed << " computed, "
            << result.stats.cache_hits << " cached)\n";
  for (const auto& s : result.skips) {
    std::cerr << "skipped " << odp::method_name(s.method) << (s.model_id.empty() ? "" : " for " + s.model_id) << ": "
              << s.reason << '\n';
  }
  return a.strict && !result.skips.empty() ? kExitStrictSkip : 0;
}

int run_eval(const fs::path& manifest_path, const fs::path& reports_path, const fs::path& out,
             const std::string& scatter_dir) {
  const auto manifest = odp::load_manifest(manifest_path);
  const auto records = odp::load_records(manifest);
  const auto truth = odp::ground_truth_accuracies(records);
  std::string dataset;
  const auto reports = odp::read_reports_csv(reports_path, &dataset);
  odp::EvalTable table;
  table.rows.push_back(odp::evaluate(manifest.dataset_id, reports, truth));
  odp::write_eval_csv(table, out);

  if (!scatter_dir.empty()) {
    fs::create_directories(scatter_dir);
    std::map<odp::Method, std::vector<odp::ScoreReport>> by_method;
    for (const auto& r : reports) by_method[r.method].push_back(r);
    for (const auto& [m, rs] : by_method) {
      odp::emit_scatter_data(rs, truth, fs::path(scatter_dir) / ("scatter_" + std::string(odp::method_name(m)) + ".csv"));
    }
  }
  return 0;
}

int run_leaderboard(const std::string& tables, const std::string& format, bool aggregate, const std::string& out) {
  odp::EvalTable merged;
  std::map<std::string, std::vector<odp::EvalRow>> groups;
  std::vector<std::string> group_order;
  for (const auto& path : split_list(tables)) {
    for (auto& row : odp::read_eval_csv(path).rows) {
      if (!aggregate) {
        merged.rows.push_back(std::move(row));
        continue;
      }
      // Leave-one-domain-out splits are named "<dataset>/<held-out domain>".
      const auto group = row.dataset_id.substr(0, row.dataset_id.find('/'));
      if (!groups.count(group)) group_order.push_back(group);
      groups[group].push_back(std::move(row));
    }
  }
  for (const auto& g : group_order) merged.rows.push_back(odp::aggregate_dg(groups[g], g));

  const auto fmt = format == "csv" ? odp::TableFormat::Csv : odp::TableFormat::Markdown;
  const auto text = odp::render_leaderboard(merged, fmt);
  if (out.empty()) {
    std::cout << text;
  } else {
    std::ofstream f(out);
    if (!f) throw odp::IoError("cannot write " + out);
    f << text;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Out-of-distribution performance prediction engine"};
  app.require_subcommand(1);

  fs::path spec_path, out_dir;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic model family (ODPT files + manifest)");
  synth->add_option("--spec", spec_path, "Synthetic family spec (JSON)")->required();
  synth->add_option("--out-dir", out_dir, "Output directory")->required();

  ScoreArgs sa;
  auto* score = app.add_subcommand("score", "Run scoring methods over every model in a manifest");
  score->add_option("--manifest", sa.manifest)->required();
  score->add_option("--methods", sa.methods, "Comma-separated method names")->capture_default_str();
  score->add_option("--out", sa.out, "Reports CSV")->required();
  score->add_option("--seed", sa.config.seed)->capture_default_str();
  score->add_option("--mano-p", sa.config.mano_p)->capture_default_str()->check(CLI::PositiveNumber);
  score->add_option("--mde-temp", sa.config.mde_temperature)->capture_default_str()->check(CLI::PositiveNumber);
  score->add_option("--cot-max-points", sa.config.cot_max_points)->capture_default_str()->check(CLI::PositiveNumber);
  score->add_option("--agreement-eps", sa.config.agreement_eps)->capture_default_str();
  score->add_option("--atc-confidence", sa.atc_conf)->check(CLI::IsMember({"max", "entropy"}))->capture_default_str();
  score->add_option("--ni-views", sa.ni_views)->check(CLI::IsMember({"pairwise", "with-original"}))->capture_default_str();
  score->add_flag("--strict", sa.strict, "Exit 3 when any method is skipped");
  score->add_flag("--no-cache", sa.no_cache, "Ignore and do not update the score cache");

  fs::path em, er, eo;
  std::string scatter_dir;
  auto* eval = app.add_subcommand("eval", "Compare scores against ground-truth test accuracy");
  eval->add_option("--manifest", em)->required();
  eval->add_option("--reports", er)->required();
  eval->add_option("--out", eo)->required();
  eval->add_option("--scatter-dir", scatter_dir, "Also write per-method (score, accuracy) CSVs here");

  std::string tables, format = "markdown", lb_out;
  bool aggregate = false;
  auto* board = app.add_subcommand("leaderboard", "Render evaluation tables as a leaderboard");
  board->add_option("--tables", tables, "Comma-separated eval CSVs")->required();
  board->add_option("--format", format)->check(CLI::IsMember({"csv", "markdown"}))->capture_default_str();
  board->add_flag("--aggregate-dg", aggregate, "Average rows named <dataset>/<split> into one row per dataset");
  board->add_option("--out", lb_out, "Write to file instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    if (*synth) return run_synth(spec_path, out_dir);
    if (*score) return run_score(sa);
    if (*eval) return run_eval(em, er, eo, scatter_dir);
    if (*board) return run_leaderboard(tables, format, aggregate, lb_out);
  } catch (const odp::ValidationError& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
