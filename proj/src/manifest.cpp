#include "odp/manifest.hpp"

#include <fstream>
#include <set>

#include <json.hpp>

#include "odp/errors.hpp"
#include "odp/tensor_io.hpp"

namespace odp {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path raw(p);
  return raw.is_absolute() ? raw : base / raw;
}

std::string relative_to(const fs::path& base, const fs::path& p) {
  std::error_code ec;
  auto rel = fs::relative(p, base, ec);
  return (ec || rel.empty()) ? p.string() : rel.generic_string();
}

const std::string& required_string(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_string()) throw LoadError(where + ": missing string field \"" + key + "\"");
  return it->get_ref<const std::string&>();
}

std::optional<std::string> optional_string(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw LoadError(where + ": field \"" + key + "\" must be a string");
  return it->get<std::string>();
}

void check_header(const fs::path& path, odpt::DType dtype, std::size_t ndim, std::size_t classes,
                  std::size_t class_axis, const std::string& model_id) {
  if (!fs::exists(path)) throw LoadError("model " + model_id + ": file not found: " + path.string());
  const auto header = read_header(path);
  if (header.dtype != dtype || header.shape.size() != ndim) {
    throw LoadError("model " + model_id + ": unexpected dtype or rank " + shape_string(header.shape) + " in " +
                    path.string());
  }
  if (classes && header.shape[class_axis] != classes) {
    throw LoadError("model " + model_id + ": class count " + std::to_string(header.shape[class_axis]) +
                    " in " + path.string() + " but manifest says " + std::to_string(classes));
  }
}

}  // namespace

Manifest load_manifest(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw LoadError("manifest not found: " + path.string());
  json doc;
  try {
    doc = json::parse(f);
  } catch (const json::exception& e) {
    throw LoadError("manifest " + path.string() + " is not valid JSON: " + e.what());
  }
  const std::string where = "manifest " + path.string();
  if (!doc.is_object()) throw LoadError(where + ": top level must be an object");

  Manifest m;
  m.source = fs::absolute(path);
  const fs::path base = m.source.parent_path();
  m.dataset_id = required_string(doc, "dataset_id", where);
  auto classes = doc.find("num_classes");
  if (classes == doc.end() || !classes->is_number_unsigned() || classes->get<std::size_t>() < 2) {
    throw LoadError(where + ": num_classes must be an integer >= 2");
  }
  m.num_classes = classes->get<std::size_t>();
  m.shift_type = optional_string(doc, "shift_type", where);
  auto models = doc.find("models");
  if (models == doc.end() || !models->is_array()) throw LoadError(where + ": models must be an array");

  std::set<std::string> seen;
  for (const auto& entry : *models) {
    if (!entry.is_object()) throw LoadError(where + ": every model entry must be an object");
    ManifestModel mm;
    mm.model_id = required_string(entry, "model_id", where);
    if (!seen.insert(mm.model_id).second) throw LoadError(where + ": duplicate model_id " + mm.model_id);
    const std::string mwhere = where + " model " + mm.model_id;
    mm.arch_tag = optional_string(entry, "arch_tag", mwhere);
    mm.val_logits = resolve(base, required_string(entry, "val_logits", mwhere));
    mm.val_labels = resolve(base, required_string(entry, "val_labels", mwhere));
    mm.test_logits = resolve(base, required_string(entry, "test_logits", mwhere));
    if (auto p = optional_string(entry, "test_labels", mwhere)) mm.test_labels = resolve(base, *p);
    if (auto p = optional_string(entry, "test_features", mwhere)) mm.test_features = resolve(base, *p);
    if (auto p = optional_string(entry, "test_aug_logits", mwhere)) mm.test_aug_logits = resolve(base, *p);

    check_header(mm.val_logits, odpt::DType::F32, 2, m.num_classes, 1, mm.model_id);
    check_header(mm.val_labels, odpt::DType::I64, 1, 0, 0, mm.model_id);
    check_header(mm.test_logits, odpt::DType::F32, 2, m.num_classes, 1, mm.model_id);
    if (mm.test_labels) check_header(*mm.test_labels, odpt::DType::I64, 1, 0, 0, mm.model_id);
    if (mm.test_features) check_header(*mm.test_features, odpt::DType::F32, 2, 0, 0, mm.model_id);
    if (mm.test_aug_logits) check_header(*mm.test_aug_logits, odpt::DType::F32, 3, m.num_classes, 2, mm.model_id);
    m.models.push_back(std::move(mm));
  }
  return m;
}

void write_manifest(const Manifest& manifest, const fs::path& path) {
  const fs::path base = fs::absolute(path).parent_path();
  json doc;
  doc["dataset_id"] = manifest.dataset_id;
  doc["num_classes"] = manifest.num_classes;
  if (manifest.shift_type) doc["shift_type"] = *manifest.shift_type;
  doc["models"] = json::array();
  for (const auto& mm : manifest.models) {
    json e;
    e["model_id"] = mm.model_id;
    if (mm.arch_tag) e["arch_tag"] = *mm.arch_tag;
    e["val_logits"] = relative_to(base, mm.val_logits);
    e["val_labels"] = relative_to(base, mm.val_labels);
    e["test_logits"] = relative_to(base, mm.test_logits);
    if (mm.test_labels) e["test_labels"] = relative_to(base, *mm.test_labels);
    if (mm.test_features) e["test_features"] = relative_to(base, *mm.test_features);
    if (mm.test_aug_logits) e["test_aug_logits"] = relative_to(base, *mm.test_aug_logits);
    doc["models"].push_back(std::move(e));
  }
  std::ofstream f(path);
  if (!f) throw IoError("cannot write manifest: " + path.string());
  f << doc.dump(2) << '\n';
}

std::vector<ModelRecord> load_records(const Manifest& manifest) {
  std::vector<std::optional<ModelRecord>> loaded(manifest.models.size());
  std::exception_ptr failure;
  const auto count = static_cast<std::ptrdiff_t>(manifest.models.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    try {
      const auto& mm = manifest.models[i];
      auto val = assemble_prediction_set(read_f32(mm.val_logits), std::nullopt, read_i64(mm.val_labels));
      std::optional<TensorF32> feats, aug;
      std::optional<TensorI64> labels;
      if (mm.test_features) feats = read_f32(*mm.test_features);
      if (mm.test_aug_logits) aug = read_f32(*mm.test_aug_logits);
      if (mm.test_labels) labels = read_i64(*mm.test_labels);
      auto test = assemble_prediction_set(read_f32(mm.test_logits), std::move(feats), std::move(labels), std::move(aug));
      loaded[i] = make_model_record(mm.model_id, std::move(val), std::move(test), mm.arch_tag);
    } catch (...) {
#pragma omp critical(odp_load_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  std::vector<ModelRecord> out;
  out.reserve(loaded.size());
  for (auto& r : loaded) out.push_back(std::move(*r));
  return out;
}

fs::path write_family(const synth::Family& family, const std::string& dataset_id, const fs::path& dir) {
  fs::create_directories(dir);
  Manifest m;
  m.dataset_id = dataset_id;
  m.num_classes = family.models.empty() ? 0 : family.models.front().val.num_classes();
  m.shift_type = "synthetic";
  for (const auto& rec : family.models) {
    ManifestModel mm;
    mm.model_id = rec.model_id;
    mm.arch_tag = rec.arch_tag;
    auto file = [&](const char* what) { return fs::absolute(dir / (rec.model_id + "_" + what + ".odpt")); };
    mm.val_logits = file("val_logits");
    mm.val_labels = file("val_labels");
    mm.test_logits = file("test_logits");
    write_tensor(rec.val.logits, mm.val_logits);
    write_tensor(*rec.val.labels, mm.val_labels);
    write_tensor(rec.test.logits, mm.test_logits);
    if (rec.test.labels) write_tensor(*rec.test.labels, *(mm.test_labels = file("test_labels")));
    if (rec.test.features) write_tensor(*rec.test.features, *(mm.test_features = file("test_features")));
    if (rec.test.aug_logits) write_tensor(*rec.test.aug_logits, *(mm.test_aug_logits = file("test_aug_logits")));
    m.models.push_back(std::move(mm));
  }
  const auto path = dir / "manifest.json";
  write_manifest(m, path);
  return path;
}

}  // namespace odp
