#include "odp/harness.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "odp/errors.hpp"

namespace odp {

namespace fs = std::filesystem;

namespace {

std::string exact(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fixed3(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

std::string opt_exact(const std::optional<double>& v) { return v ? exact(*v) : std::string(); }

std::optional<double> opt_parse(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return std::stod(s);
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot write " + path.string());
  return f;
}

// Reads a CSV file, checks its header, and returns the data rows.
std::vector<std::vector<std::string>> read_csv(const fs::path& path, const std::vector<std::string>& header) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot read " + path.string());
  std::string line;
  if (!std::getline(f, line) || split_csv_line(line) != header) {
    throw ValidationError("unexpected CSV header in " + path.string());
  }
  std::vector<std::vector<std::string>> rows;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    auto cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw ValidationError("row with " + std::to_string(cells.size()) + " fields in " + path.string());
    }
    rows.push_back(std::move(cells));
  }
  return rows;
}

Method method_or_throw(const std::string& name) {
  auto m = parse_method(name);
  if (!m) throw ValidationError("unknown method name: " + name);
  return *m;
}

const std::vector<std::string> kReportHeader = {"dataset_id", "model_id", "method", "kind", "sign_convention",
                                                "value", "degenerate"};
const std::vector<std::string> kEvalHeader = {"dataset_id", "method", "n", "rho", "r2", "mae",
                                              "precision_at_top", "rho_at_top"};
const std::vector<std::string> kScatterHeader = {"score", "accuracy", "model_id"};

}  // namespace

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        out.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        out.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.emplace_back();
    } else if (c != '\r') {
      out.back() += c;
    }
  }
  return out;
}

std::string render_leaderboard(const EvalTable& table, TableFormat format) {
  std::set<Method> present;
  for (const auto& row : table.rows) {
    for (const auto& [m, mm] : row.methods) present.insert(m);
  }
  std::vector<const EvalRow*> rows;
  for (const auto& row : table.rows) rows.push_back(&row);
  // Missing averages sort last.
  std::sort(rows.begin(), rows.end(), [](const EvalRow* a, const EvalRow* b) {
    const auto av = a->average_rho(), bv = b->average_rho();
    if (av.has_value() != bv.has_value()) return av.has_value();
    if (av && *av != *bv) return *av > *bv;
    return a->dataset_id < b->dataset_id;
  });

  std::vector<std::string> header = {"Dataset"};
  for (Method m : present) header.emplace_back(method_name(m));
  header.emplace_back("Avg.");
  header.emplace_back("#Effective");

  std::vector<std::vector<std::string>> body;
  for (const auto* row : rows) {
    std::vector<std::string> cells = {row->dataset_id};
    for (Method m : present) {
      auto it = row->methods.find(m);
      cells.push_back(it != row->methods.end() && it->second.rho ? fixed3(*it->second.rho) : "-");
    }
    const auto avg = row->average_rho();
    cells.push_back(avg ? fixed3(*avg) : "-");
    cells.push_back(std::to_string(row->effective_count()));
    body.push_back(std::move(cells));
  }

  std::ostringstream os;
  if (format == TableFormat::Csv) {
    for (std::size_t i = 0; i < header.size(); ++i) os << (i ? "," : "") << csv_field(header[i]);
    os << '\n';
    for (const auto& cells : body) {
      for (std::size_t i = 0; i < cells.size(); ++i) os << (i ? "," : "") << csv_field(cells[i]);
      os << '\n';
    }
    return os.str();
  }
  auto line = [&](const std::vector<std::string>& cells) {
    os << '|';
    for (const auto& c : cells) os << ' ' << c << " |";
    os << '\n';
  };
  line(header);
  os << '|';
  for (std::size_t i = 0; i < header.size(); ++i) os << (i ? " ---: |" : " --- |");
  os << '\n';
  for (const auto& cells : body) line(cells);
  return os.str();
}

void write_reports_csv(const std::string& dataset_id, std::span<const ScoreReport> reports, const fs::path& path) {
  auto f = open_out(path);
  for (std::size_t i = 0; i < kReportHeader.size(); ++i) f << (i ? "," : "") << kReportHeader[i];
  f << '\n';
  for (const auto& r : reports) {
    f << csv_field(dataset_id) << ',' << csv_field(r.model_id) << ',' << method_name(r.method) << ','
      << kind_name(r.kind) << ',' << sign_name(r.sign_convention) << ',' << exact(r.value) << ','
      << (r.degenerate ? 1 : 0) << '\n';
  }
}

std::vector<ScoreReport> read_reports_csv(const fs::path& path, std::string* dataset_id) {
  std::vector<ScoreReport> out;
  for (const auto& cells : read_csv(path, kReportHeader)) {
    if (dataset_id) {
      if (!dataset_id->empty() && *dataset_id != cells[0]) {
        throw ValidationError("reports file " + path.string() + " mixes datasets");
      }
      *dataset_id = cells[0];
    }
    auto r = make_report(method_or_throw(cells[2]), std::stod(cells[5]), cells[6] == "1");
    r.model_id = cells[1];
    out.push_back(std::move(r));
  }
  return out;
}

void write_eval_csv(const EvalTable& table, const fs::path& path) {
  auto f = open_out(path);
  for (std::size_t i = 0; i < kEvalHeader.size(); ++i) f << (i ? "," : "") << kEvalHeader[i];
  f << '\n';
  for (const auto& row : table.rows) {
    for (const auto& [m, mm] : row.methods) {
      f << csv_field(row.dataset_id) << ',' << method_name(m) << ',' << mm.n << ',' << opt_exact(mm.rho) << ','
        << opt_exact(mm.r2) << ',' << opt_exact(mm.mae) << ',' << opt_exact(mm.precision_at_top) << ','
        << opt_exact(mm.rho_at_top) << '\n';
    }
  }
}

EvalTable read_eval_csv(const fs::path& path) {
  EvalTable table;
  for (const auto& cells : read_csv(path, kEvalHeader)) {
    auto it = std::find_if(table.rows.begin(), table.rows.end(),
                           [&](const EvalRow& r) { return r.dataset_id == cells[0]; });
    if (it == table.rows.end()) {
      table.rows.push_back(EvalRow{cells[0], {}});
      it = table.rows.end() - 1;
    }
    MethodMetrics mm;
    mm.n = std::stoul(cells[2]);
    mm.rho = opt_parse(cells[3]);
    mm.r2 = opt_parse(cells[4]);
    mm.mae = opt_parse(cells[5]);
    mm.precision_at_top = opt_parse(cells[6]);
    mm.rho_at_top = opt_parse(cells[7]);
    it->methods[method_or_throw(cells[1])] = mm;
  }
  return table;
}

void emit_scatter_data(std::span<const ScoreReport> reports, const std::map<std::string, double>& accs,
                       const fs::path& path) {
  auto f = open_out(path);
  f << "score,accuracy,model_id\n";
  for (const auto& r : reports) {
    auto it = accs.find(r.model_id);
    if (it == accs.end()) throw EvaluationError("no ground-truth accuracy for model " + r.model_id);
    f << exact(r.value) << ',' << exact(it->second) << ',' << csv_field(r.model_id) << '\n';
  }
}

std::vector<ScatterRow> read_scatter_csv(const fs::path& path) {
  std::vector<ScatterRow> out;
  for (const auto& cells : read_csv(path, kScatterHeader)) {
    out.push_back({std::stod(cells[0]), std::stod(cells[1]), cells[2]});
  }
  return out;
}

}  // namespace odp
