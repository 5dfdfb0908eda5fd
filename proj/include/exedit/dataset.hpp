// Copyright 2026 The exedit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "exedit/edit_capture.hpp"

// Evaluation corpus manifest. See docs/manifest.md for the schema.

namespace exedit {

inline constexpr const char* kManifestSchemaVersion = "1.0";

enum class DataSource { kIp2p, kHqEdit, kImagic, kOther };

std::string to_string(DataSource s);
DataSource parse_data_source(const std::string& s);

struct ManifestEntry {
  std::string id;
  // As written in the manifest: relative to the manifest directory, or
  // absolute.
  std::filesystem::path x_path;
  std::filesystem::path x_edit_path;
  std::filesystem::path y_path;
  std::filesystem::path y_edit_path;
  std::string edit_category;
  DataSource source = DataSource::kOther;
  std::optional<std::string> source_caption;
  std::optional<std::string> target_caption;

  bool operator==(const ManifestEntry&) const = default;
};

struct DatasetManifest {
  std::string schema_version = kManifestSchemaVersion;
  std::vector<ManifestEntry> entries;
  // Directory relative paths resolve against. Not part of the value.
  std::filesystem::path base_dir;

  std::filesystem::path resolve(const std::filesystem::path& p) const;
  const ManifestEntry* find(const std::string& id) const;

  bool operator==(const DatasetManifest& o) const {
    return schema_version == o.schema_version && entries == o.entries;
  }
};

// Throws ManifestError naming the offending entry id.
DatasetManifest load_manifest(const std::filesystem::path& path);
DatasetManifest parse_manifest(const std::string& json_text,
                               const std::filesystem::path& base_dir);
std::string manifest_to_json(const DatasetManifest& manifest);
void save_manifest(const DatasetManifest& manifest,
                   const std::filesystem::path& path);

// Reads the four images of an entry (y_edit included).
ExemplarTask load_task(const DatasetManifest& manifest,
                       const ManifestEntry& entry);

struct EntryCheck {
  std::string id;
  std::vector<std::string> errors;
  std::vector<std::string> warnings;
  bool ok() const { return errors.empty(); }
};

struct ValidationReport {
  std::vector<EntryCheck> entries;
  std::map<std::string, int> per_source;
  std::map<std::string, int> per_category;
  int failures() const;
  int warnings() const;
  std::string to_json() const;
};

// Read-only: decodes every image, checks preprocessing at the given
// resolution, warns on pixel-identical exemplars.
ValidationReport validate_dataset(const DatasetManifest& manifest,
                                  int resolution);

// Prediction images named <id>.png or <id>.jpg/.jpeg in one directory.
struct PredictionSet {
  std::map<std::string, std::filesystem::path> found;
  std::vector<std::string> missing;
};

PredictionSet find_predictions(const std::filesystem::path& dir,
                               const DatasetManifest& manifest);

}  // namespace exedit
