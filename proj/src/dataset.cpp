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

#include "exedit/dataset.hpp"

#include <json.hpp>

#include <fstream>
#include <set>
#include <sstream>

#include "exedit/image_io.hpp"

namespace exedit {

namespace fs = std::filesystem;
using nlohmann::json;
using Kind = ManifestError::Kind;

std::string to_string(DataSource s) {
  switch (s) {
    case DataSource::kIp2p: return "ip2p";
    case DataSource::kHqEdit: return "hq-edit";
    case DataSource::kImagic: return "imagic";
    case DataSource::kOther: return "other";
  }
  return "other";
}

DataSource parse_data_source(const std::string& s) {
  if (s == "ip2p") return DataSource::kIp2p;
  if (s == "hq-edit") return DataSource::kHqEdit;
  if (s == "imagic") return DataSource::kImagic;
  if (s == "other") return DataSource::kOther;
  throw ConfigError("unknown data source '" + s + "'");
}

fs::path DatasetManifest::resolve(const fs::path& p) const {
  return p.is_absolute() ? p : base_dir / p;
}

const ManifestEntry* DatasetManifest::find(const std::string& id) const {
  for (const auto& e : entries)
    if (e.id == id) return &e;
  return nullptr;
}

namespace {

const std::set<std::string> kEntryKeys = {
    "id",          "x_path",         "x_edit_path",    "y_path",
    "y_edit_path", "edit_category",  "source",         "source_caption",
    "target_caption"};

std::string required_string(const json& j, const char* key,
                            const std::string& id) {
  auto it = j.find(key);
  if (it == j.end()) {
    throw ManifestError(Kind::kSchema, id,
                        "manifest entry '" + id + "': missing " + key);
  }
  if (!it->is_string() || it->get<std::string>().empty()) {
    throw ManifestError(Kind::kSchema, id,
                        "manifest entry '" + id + "': " + key +
                            " must be a non-empty string");
  }
  return it->get<std::string>();
}

std::optional<std::string> optional_string(const json& j, const char* key,
                                           const std::string& id) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) {
    throw ManifestError(Kind::kSchema, id,
                        "manifest entry '" + id + "': " + key +
                            " must be a string");
  }
  return it->get<std::string>();
}

}  // namespace

DatasetManifest parse_manifest(const std::string& json_text,
                               const fs::path& base_dir) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ManifestError(Kind::kSchema, "", std::string("manifest: ") + e.what());
  }
  if (!doc.is_object()) {
    throw ManifestError(Kind::kSchema, "", "manifest: top level must be an object");
  }
  DatasetManifest m;
  m.base_dir = base_dir;
  auto sv = doc.find("schema_version");
  if (sv == doc.end() || !sv->is_string()) {
    throw ManifestError(Kind::kSchema, "", "manifest: missing schema_version");
  }
  m.schema_version = sv->get<std::string>();
  if (m.schema_version.substr(0, 2) != "1.") {
    throw ManifestError(Kind::kSchema, "",
                        "manifest: unsupported schema_version " +
                            m.schema_version);
  }
  auto entries = doc.find("entries");
  if (entries == doc.end() || !entries->is_array()) {
    throw ManifestError(Kind::kSchema, "", "manifest: entries must be an array");
  }

  std::set<std::string> seen;
  int index = 0;
  for (const json& j : *entries) {
    std::string label = "#" + std::to_string(index++);
    if (!j.is_object()) {
      throw ManifestError(Kind::kSchema, label,
                          "manifest entry " + label + " is not an object");
    }
    ManifestEntry e;
    e.id = required_string(j, "id", label);
    for (const auto& item : j.items()) {
      if (!kEntryKeys.count(item.key())) {
        throw ManifestError(Kind::kSchema, e.id,
                            "manifest entry '" + e.id + "': unknown key " +
                                item.key());
      }
    }
    e.x_path = required_string(j, "x_path", e.id);
    e.x_edit_path = required_string(j, "x_edit_path", e.id);
    e.y_path = required_string(j, "y_path", e.id);
    e.y_edit_path = required_string(j, "y_edit_path", e.id);
    e.edit_category = required_string(j, "edit_category", e.id);
    try {
      e.source = parse_data_source(required_string(j, "source", e.id));
    } catch (const ConfigError& err) {
      throw ManifestError(Kind::kSchema, e.id,
                          "manifest entry '" + e.id + "': " + err.what());
    }
    e.source_caption = optional_string(j, "source_caption", e.id);
    e.target_caption = optional_string(j, "target_caption", e.id);
    if (!seen.insert(e.id).second) {
      throw ManifestError(Kind::kDuplicateId, e.id,
                          "manifest: duplicate id '" + e.id + "'");
    }
    for (const fs::path* p :
         {&e.x_path, &e.x_edit_path, &e.y_path, &e.y_edit_path}) {
      if (!fs::is_regular_file(m.resolve(*p))) {
        throw ManifestError(Kind::kDanglingPath, e.id,
                            "manifest entry '" + e.id + "': " +
                                p->string() + " does not exist");
      }
    }
    m.entries.push_back(std::move(e));
  }
  return m;
}

DatasetManifest load_manifest(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ManifestError(Kind::kMissingFile, "",
                        "manifest not found: " + path.string());
  }
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_manifest(buf.str(), path.parent_path());
}

std::string manifest_to_json(const DatasetManifest& manifest) {
  json entries = json::array();
  for (const auto& e : manifest.entries) {
    json j = {{"id", e.id},
              {"x_path", e.x_path.generic_string()},
              {"x_edit_path", e.x_edit_path.generic_string()},
              {"y_path", e.y_path.generic_string()},
              {"y_edit_path", e.y_edit_path.generic_string()},
              {"edit_category", e.edit_category},
              {"source", to_string(e.source)}};
    if (e.source_caption) j["source_caption"] = *e.source_caption;
    if (e.target_caption) j["target_caption"] = *e.target_caption;
    entries.push_back(std::move(j));
  }
  json doc = {{"schema_version", manifest.schema_version},
              {"entries", std::move(entries)}};
  return doc.dump(2) + "\n";
}

void save_manifest(const DatasetManifest& manifest, const fs::path& path) {
  write_text(path, manifest_to_json(manifest));
}

ExemplarTask load_task(const DatasetManifest& manifest,
                       const ManifestEntry& entry) {
  ExemplarTask t;
  t.id = entry.id;
  t.x = read_image(manifest.resolve(entry.x_path));
  t.x_edit = read_image(manifest.resolve(entry.x_edit_path));
  t.y = read_image(manifest.resolve(entry.y_path));
  t.y_edit = read_image(manifest.resolve(entry.y_edit_path));
  return t;
}

int ValidationReport::failures() const {
  int n = 0;
  for (const auto& e : entries) n += e.ok() ? 0 : 1;
  return n;
}

int ValidationReport::warnings() const {
  int n = 0;
  for (const auto& e : entries) n += static_cast<int>(e.warnings.size());
  return n;
}

std::string ValidationReport::to_json() const {
  json j;
  j["failures"] = failures();
  j["warnings"] = warnings();
  j["per_source"] = per_source;
  j["per_category"] = per_category;
  json list = json::array();
  for (const auto& e : entries)
    list.push_back({{"id", e.id},
                    {"ok", e.ok()},
                    {"errors", e.errors},
                    {"warnings", e.warnings}});
  j["entries"] = std::move(list);
  return j.dump(2) + "\n";
}

ValidationReport validate_dataset(const DatasetManifest& manifest,
                                  int resolution) {
  ValidationReport report;
  for (const auto& entry : manifest.entries) {
    ++report.per_source[to_string(entry.source)];
    ++report.per_category[entry.edit_category];
    EntryCheck check;
    check.id = entry.id;
    const std::pair<const char*, const fs::path*> slots[] = {
        {"x", &entry.x_path},
        {"x_edit", &entry.x_edit_path},
        {"y", &entry.y_path},
        {"y_edit", &entry.y_edit_path}};
    std::map<std::string, Image8> images;
    for (const auto& [name, path] : slots) {
      try {
        images[name] = read_image(manifest.resolve(*path));
      } catch (const std::exception& e) {
        check.errors.push_back(std::string(name) + ": " + e.what());
      }
    }
    if (check.ok()) {
      if (images["x"] == images["x_edit"]) {
        check.warnings.push_back("x and x_edit are pixel-identical");
      }
      if (!images["x"].same_shape(images["x_edit"])) {
        check.warnings.push_back("x and x_edit differ in size (" +
                                 shape_string(images["x"]) + " vs " +
                                 shape_string(images["x_edit"]) + ")");
      }
      if (resolution > 0) {
        try {
          ExemplarTask t{entry.id, images["x"], images["x_edit"],
                         images["y"], images["y_edit"]};
          t = preprocess_task(std::move(t), resolution);
          for (const Image8* img : {&t.x, &t.x_edit, &t.y, &*t.y_edit}) {
            if (img->width() != resolution || img->height() != resolution) {
              check.errors.push_back("preprocessed image is " +
                                     shape_string(*img));
              break;
            }
          }
        } catch (const std::exception& e) {
          check.errors.push_back(std::string("preprocess: ") + e.what());
        }
      }
    }
    report.entries.push_back(std::move(check));
  }
  return report;
}

PredictionSet find_predictions(const fs::path& dir,
                               const DatasetManifest& manifest) {
  PredictionSet out;
  for (const auto& e : manifest.entries) {
    bool hit = false;
    for (const char* ext : {".png", ".jpg", ".jpeg"}) {
      const fs::path p = dir / (e.id + ext);
      if (fs::is_regular_file(p)) {
        out.found[e.id] = p;
        hit = true;
        break;
      }
    }
    if (!hit) out.missing.push_back(e.id);
  }
  return out;
}

}  // namespace exedit
