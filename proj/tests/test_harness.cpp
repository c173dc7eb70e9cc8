#include <doctest.h>

#include <filesystem>
#include <bit>
#include <fstream>
#include <sstream>

#include "odp/cache.hpp"
#include "odp/errors.hpp"
#include "odp/harness.hpp"
#include "odp/synth.hpp"
#include "odp/tensor_io.hpp"

using namespace odp;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("odp_harness_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

synth::SynthSpec small_spec(std::size_t models) {
  synth::SynthSpec s;
  s.n_models = models;
  s.n_val = 300;
  s.n_test = 400;
  s.num_classes = 4;
  for (std::size_t m = 0; m < models; ++m) {
    const double a = 0.4 + 0.5 * static_cast<double>(m) / static_cast<double>(std::max<std::size_t>(models - 1, 1));
    s.accuracy_val.push_back(a);
    s.accuracy_test.push_back(a);
  }
  s.noise_sigma = 0.7;
  s.k_augs = 3;
  s.aug_flip_prob = 0.1;
  s.wrong_margin = 1.5;
  s.wrong_flip_prob = 0.5;
  s.seed = 17;
  return s;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

MethodMetrics with_rho(double rho) {
  MethodMetrics m;
  m.n = 10;
  m.rho = rho;
  return m;
}

}  // namespace

TEST_CASE("manifest load and validation") {
  const auto dir = scratch("manifest");
  const auto path = write_family(synth::generate_family(small_spec(3)), "toy", dir);
  const auto m = load_manifest(path);
  CHECK(m.dataset_id == "toy");
  CHECK(m.num_classes == 4);
  CHECK(m.models.size() == 3);
  CHECK(m.models[1].model_id == "synth_1");
  CHECK(m.models[0].test_aug_logits.has_value());

  SUBCASE("absent file is named") {
    fs::remove(m.models[2].test_logits);
    try {
      load_manifest(path);
      FAIL("expected a load error");
    } catch (const LoadError& e) {
      CHECK(std::string(e.what()).find(m.models[2].test_logits.filename().string()) != std::string::npos);
    }
  }
  SUBCASE("duplicate model id is named") {
    auto dup = m;
    dup.models[1].model_id = "synth_0";
    write_manifest(dup, dir / "dup.json");
    try {
      load_manifest(dir / "dup.json");
      FAIL("expected a load error");
    } catch (const LoadError& e) {
      CHECK(std::string(e.what()).find("duplicate model_id synth_0") != std::string::npos);
    }
  }
  SUBCASE("class count mismatch") {
    auto wrong = m;
    wrong.num_classes = 5;
    write_manifest(wrong, dir / "wrong.json");
    CHECK_THROWS_AS(load_manifest(dir / "wrong.json"), LoadError);
  }
  SUBCASE("malformed json") {
    std::ofstream(dir / "bad.json") << "{ \"dataset_id\": ";
    CHECK_THROWS_AS(load_manifest(dir / "bad.json"), LoadError);
    CHECK_THROWS_AS(load_manifest(dir / "nope.json"), LoadError);
  }
  SUBCASE("records round-trip through the files") {
    const auto recs = load_records(m);
    const auto fam = synth::generate_family(small_spec(3));
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(recs[i].test.logits == fam.models[i].test.logits);
      CHECK(*recs[i].test.aug_logits == *fam.models[i].test.aug_logits);
      CHECK(*recs[i].val.labels == *fam.models[i].val.labels);
    }
  }
}

TEST_CASE("score matrix, skips and cache") {
  const auto dir = scratch("matrix");
  const auto path = write_family(synth::generate_family(small_spec(10)), "toy", dir);
  const auto manifest = load_manifest(path);
  ScoringConfig cfg;
  cfg.cot_max_points = 300;
  RunOptions opts;
  opts.cache_dir = dir / "cache";

  const auto cold = run_matrix(manifest, kAllMethods, cfg, opts);
  CHECK(cold.reports.size() == 100);
  CHECK(cold.skips.empty());
  CHECK(cold.stats.computed == 100);
  CHECK(cold.stats.cache_hits == 0);
  CHECK(fs::exists(dir / "cache" / "toy.scores.json"));

  const auto warm = run_matrix(manifest, kAllMethods, cfg, opts);
  CHECK(warm.stats.computed == 0);
  CHECK(warm.stats.cache_hits == 100);
  REQUIRE(warm.reports.size() == cold.reports.size());
  for (std::size_t i = 0; i < cold.reports.size(); ++i) {
    CHECK(warm.reports[i].method == cold.reports[i].method);
    CHECK(warm.reports[i].model_id == cold.reports[i].model_id);
    CHECK(std::bit_cast<std::uint64_t>(warm.reports[i].value) == std::bit_cast<std::uint64_t>(cold.reports[i].value));
    CHECK(warm.reports[i].degenerate == cold.reports[i].degenerate);
  }

  SUBCASE("uncached run agrees with the cached one") {
    const auto fresh = run_matrix(manifest, kAllMethods, cfg, RunOptions{false, {}});
    for (std::size_t i = 0; i < cold.reports.size(); ++i) CHECK(fresh.reports[i].value == cold.reports[i].value);
  }
  SUBCASE("changing a hyperparameter recomputes only that method") {
    auto cfg2 = cfg;
    cfg2.mano_p = 3;
    const auto r = run_matrix(manifest, kAllMethods, cfg2, opts);
    CHECK(r.stats.computed == 10);
    CHECK(r.stats.cache_hits == 90);
  }
  SUBCASE("rewriting one model's file invalidates its entries and the pool fit") {
    auto recs = load_records(manifest);
    auto logits = recs[4].test.logits;
    logits[0] += 1.0f;
    write_tensor(logits, manifest.models[4].test_logits);
    const auto r = run_matrix(manifest, kAllMethods, cfg, opts);
    // 9 per-model methods for synth_4, plus agreement for every model.
    CHECK(r.stats.computed == 9 + 10);
  }
}

TEST_CASE("skips for missing inputs") {
  auto fam = synth::generate_family(small_spec(1));
  const Method agreement[] = {Method::Agreement, Method::DoC};
  const auto one = run_matrix("solo", fam.models, agreement, ScoringConfig{});
  CHECK(one.reports.size() == 1);
  REQUIRE(one.skips.size() == 1);
  CHECK(one.skips[0].method == Method::Agreement);
  CHECK(one.skips[0].reason.find("at least 2") != std::string::npos);

  fam.models[0].test.aug_logits.reset();
  fam.models[0].test.features.reset();
  const auto partial = run_matrix("solo", fam.models, kAllMethods, ScoringConfig{});
  CHECK(partial.reports.size() == 7);
  CHECK(partial.skips.size() == 3);
}

TEST_CASE("evaluate orientation and kinds") {
  auto fam = synth::generate_family(small_spec(10));
  const auto truth = ground_truth_accuracies(fam.models);
  ScoringConfig cfg;
  cfg.cot_max_points = 300;
  const auto result = run_matrix("toy", fam.models, kAllMethods, cfg);
  const auto row = evaluate("toy", result.reports, truth);
  CHECK(row.methods.size() == 10);
  CHECK(row.methods.at(Method::MDE).rho.value() < 0.0);
  CHECK(row.methods.at(Method::DoC).rho.value() > 0.9);
  CHECK(row.methods.at(Method::COT).rho.value() > 0.9);  // via 1 - error
  for (Method m : {Method::ATC, Method::DoC, Method::Agreement, Method::COT, Method::COTT}) {
    CHECK(row.methods.at(m).mae.has_value());
  }
  for (Method m : {Method::NuclearNorm, Method::NI, Method::MaNo, Method::Dispersion, Method::MDE}) {
    CHECK_FALSE(row.methods.at(m).mae.has_value());
  }
  // MDE's precision@top picks the lowest energies, i.e. the best models.
  CHECK(row.methods.at(Method::MDE).precision_at_top.value() == 1.0);

  fam.models[3].test.labels.reset();
  CHECK_THROWS_AS(ground_truth_accuracies(fam.models), EvaluationError);

  // Scores that are an increasing function of accuracy.
  std::vector<ScoreReport> exact;
  for (const auto& [id, acc] : truth) {
    auto r = make_report(Method::MaNo, std::exp(acc));
    r.model_id = id;
    exact.push_back(r);
  }
  CHECK(evaluate("toy", exact, truth).methods.at(Method::MaNo).rho.value() == 1.0);
}

TEST_CASE("aggregation over splits") {
  EvalRow a{"pacs/art", {{Method::ATC, with_rho(0.4)}, {Method::MDE, with_rho(-0.2)}}};
  EvalRow b{"pacs/photo", {{Method::ATC, with_rho(0.8)}, {Method::MDE, with_rho(-0.6)}}};
  const EvalRow both[] = {a, b};
  const auto agg = aggregate_dg(both, "pacs");
  CHECK(agg.methods.at(Method::ATC).rho.value() == doctest::Approx(0.6));
  CHECK(agg.methods.at(Method::MDE).rho.value() == doctest::Approx(-0.4));

  const EvalRow same[] = {a, a};
  CHECK(aggregate_dg(same, "x").methods.at(Method::ATC).rho.value() == 0.4);

  EvalRow c{"pacs/sketch", {{Method::ATC, with_rho(0.1)}, {Method::MDE, with_rho(0.3)}}};
  EvalRow d{"pacs/cartoon", {{Method::ATC, with_rho(0.5)}, {Method::MDE, with_rho(0.1)}}};
  const EvalRow four[] = {a, b, c, d};
  CHECK(aggregate_dg(four, "pacs").methods.at(Method::ATC).rho.value() == doctest::Approx(0.45));

  EvalRow other{"pacs/x", {{Method::ATC, with_rho(0.4)}}};
  const EvalRow mismatched[] = {a, other};
  CHECK_THROWS_AS(aggregate_dg(mismatched, "pacs"), AggregationError);
  CHECK_THROWS_AS(aggregate_dg(std::span<const EvalRow>{}, "pacs"), AggregationError);
}

TEST_CASE("leaderboard") {
  EvalRow r{"d1", {{Method::ATC, with_rho(0.95)}, {Method::DoC, with_rho(0.6)}, {Method::MDE, with_rho(0.71)}}};
  CHECK(r.effective_count() == 2);
  EvalRow low{"a_low", {{Method::ATC, with_rho(0.5)}, {Method::DoC, with_rho(0.5)}}};
  EvalRow high{"z_high", {{Method::ATC, with_rho(0.7)}, {Method::DoC, with_rho(0.7)}}};
  EvalRow tie{"b_tie", {{Method::ATC, with_rho(0.5)}, {Method::DoC, with_rho(0.5)}}};
  const EvalTable table{{low, tie, high}};

  const auto csv = render_leaderboard(table, TableFormat::Csv);
  std::istringstream in(csv);
  std::string header, first, second, third;
  std::getline(in, header);
  std::getline(in, first);
  std::getline(in, second);
  std::getline(in, third);
  CHECK(header == "Dataset,atc,doc,Avg.,#Effective");
  CHECK(first == "z_high,0.700,0.700,0.700,0");
  CHECK(second.rfind("a_low,", 0) == 0);
  CHECK(third.rfind("b_tie,", 0) == 0);

  const auto md = render_leaderboard(EvalTable{{r, low}}, TableFormat::Markdown);
  std::istringstream mdin(md);
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(mdin, line)) lines.push_back(line);
  REQUIRE(lines.size() == 4);
  auto pipes = [](const std::string& s) { return std::count(s.begin(), s.end(), '|'); };
  for (const auto& l : lines) {
    CHECK(l.front() == '|');
    CHECK(l.back() == '|');
    CHECK(pipes(l) == pipes(lines[0]));
  }
  CHECK(lines[1].find("---") != std::string::npos);
  CHECK(lines[2].find("| d1 |") == 0);
  CHECK(lines[2].find("| 0.950 |") != std::string::npos);
  CHECK(lines[3].find("| - |") != std::string::npos);  // a_low has no MDE column value
}

TEST_CASE("csv files round-trip") {
  const auto dir = scratch("csv");
  auto fam = synth::generate_family(small_spec(10));
  const auto truth = ground_truth_accuracies(fam.models);
  const Method methods[] = {Method::NuclearNorm, Method::DoC};
  const auto result = run_matrix("toy,quoted", fam.models, methods, ScoringConfig{});

  write_reports_csv(result.dataset_id, result.reports, dir / "reports.csv");
  std::string ds;
  const auto back = read_reports_csv(dir / "reports.csv", &ds);
  CHECK(ds == "toy,quoted");
  REQUIRE(back.size() == result.reports.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].value == result.reports[i].value);
    CHECK(back[i].model_id == result.reports[i].model_id);
    CHECK(back[i].method == result.reports[i].method);
  }

  std::vector<ScoreReport> nuclear(result.reports.begin(), result.reports.begin() + 10);
  emit_scatter_data(nuclear, truth, dir / "scatter.csv");
  const auto text = slurp(dir / "scatter.csv");
  CHECK(std::count(text.begin(), text.end(), '\n') == 11);
  const auto rows = read_scatter_csv(dir / "scatter.csv");
  REQUIRE(rows.size() == 10);
  for (std::size_t i = 0; i < 10; ++i) {
    CHECK(std::bit_cast<std::uint64_t>(rows[i].score) == std::bit_cast<std::uint64_t>(nuclear[i].value));
    CHECK(std::bit_cast<std::uint64_t>(rows[i].accuracy) == std::bit_cast<std::uint64_t>(truth.at(nuclear[i].model_id)));
    CHECK(rows[i].model_id == nuclear[i].model_id);
  }

  const EvalTable table{{evaluate(result.dataset_id, result.reports, truth)}};
  write_eval_csv(table, dir / "eval.csv");
  const auto t2 = read_eval_csv(dir / "eval.csv");
  REQUIRE(t2.rows.size() == 1);
  CHECK(t2.rows[0].dataset_id == "toy,quoted");
  CHECK(t2.rows[0].methods.at(Method::DoC).rho == table.rows[0].methods.at(Method::DoC).rho);
  CHECK(t2.rows[0].methods.at(Method::DoC).mae == table.rows[0].methods.at(Method::DoC).mae);
  CHECK_FALSE(t2.rows[0].methods.at(Method::NuclearNorm).mae.has_value());

  CHECK(split_csv_line("a,\"b,c\",\"d\"\"e\",") == std::vector<std::string>{"a", "b,c", "d\"e", ""});
}

TEST_CASE("cache file primitives") {
  const auto dir = scratch("cache");
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(hex64(0xabcULL) == "0000000000000abc");
  {
    ScoreCache c(dir / "c.json");
    c.put("k", {0.1 + 0.2, true});
    c.save();
  }
  ScoreCache c(dir / "c.json");
  const auto hit = c.find("k");
  REQUIRE(hit.has_value());
  CHECK(hit->value == 0.1 + 0.2);
  CHECK(hit->degenerate);
  CHECK_FALSE(c.find("missing").has_value());
}
