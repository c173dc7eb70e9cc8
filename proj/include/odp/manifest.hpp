#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "odp/prediction_set.hpp"
#include "odp/synth.hpp"

namespace odp {

struct ManifestModel {
  std::string model_id;
  std::optional<std::string> arch_tag;
  std::filesystem::path val_logits;
  std::filesystem::path val_labels;
  std::filesystem::path test_logits;
  std::optional<std::filesystem::path> test_labels;
  std::optional<std::filesystem::path> test_features;
  std::optional<std::filesystem::path> test_aug_logits;
};

// Paths are stored resolved against the manifest's directory.
struct Manifest {
  std::string dataset_id;
  std::size_t num_classes = 0;
  std::optional<std::string> shift_type;
  std::vector<ManifestModel> models;
  std::filesystem::path source;
};

// Parses and validates: unique ids, files present, tensor headers consistent
// with num_classes. Tensor payloads are not read.
Manifest load_manifest(const std::filesystem::path& path);

// Paths are written relative to the manifest's directory when possible.
void write_manifest(const Manifest& manifest, const std::filesystem::path& path);

std::vector<ModelRecord> load_records(const Manifest& manifest);

// Writes every model of a synthetic family as ODPT files plus manifest.json in
// `dir`; returns the manifest path.
std::filesystem::path write_family(const synth::Family& family, const std::string& dataset_id,
                                   const std::filesystem::path& dir);

}  // namespace odp
