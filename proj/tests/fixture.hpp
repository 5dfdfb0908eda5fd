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

#include <json.hpp>

#include <filesystem>
#include <string>

#include "exedit/dataset.hpp"
#include "exedit/image_io.hpp"
#include "test_util.hpp"

namespace exedit::testing {

// Small on-disk corpus: n entries whose exemplar recolors a disc, each with
// its own target. Returns the manifest path.
inline std::filesystem::path write_fixture_corpus(
    const std::filesystem::path& dir, int n = 3, int size = 24) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "images");
  const DataSource sources[3] = {DataSource::kIp2p, DataSource::kHqEdit,
                                 DataSource::kImagic};
  const char* categories[3] = {"color", "color", "style"};
  DatasetManifest m;
  for (int i = 0; i < n; ++i) {
    const std::string id = "e" + std::to_string(i);
    const auto c = static_cast<std::uint8_t>(60 * i);
    const double pos = 0.35 + 0.1 * i;
    write_png(dir / "images" / (id + "_x.png"), disc_image(size, 200, 40, c));
    write_png(dir / "images" / (id + "_x_edit.png"),
              disc_image(size, 40, 200, c));
    write_png(dir / "images" / (id + "_y.png"),
              disc_image(size + 8, 220, 60, c, pos, 0.5));
    write_png(dir / "images" / (id + "_y_edit.png"),
              disc_image(size + 8, 60, 220, c, pos, 0.5));
    ManifestEntry e;
    e.id = id;
    e.x_path = "images/" + id + "_x.png";
    e.x_edit_path = "images/" + id + "_x_edit.png";
    e.y_path = "images/" + id + "_y.png";
    e.y_edit_path = "images/" + id + "_y_edit.png";
    e.edit_category = categories[i % 3];
    e.source = sources[i % 3];
    e.source_caption = "a red disc on a gradient";
    e.target_caption = "a green disc on a gradient";
    m.entries.push_back(e);
  }
  const fs::path path = dir / "manifest.json";
  save_manifest(m, path);
  return path;
}

// Toy-backend run config with scripted VLM answers.
inline nlohmann::json toy_config_json(int steps = 10) {
  return {
      {"seed", 0},
      {"backend", {{"kind", "toy"}, {"toy", {{"resolution", 16}}}}},
      {"vlm",
       {{"kind", "stub"},
        {"responses",
         {{"describe_edit", "The disc changes from red to green."},
          {"caption_target", "A green disc on a soft gradient background."},
          {"caption_source", "A red disc on a soft gradient background."}}}}},
      {"encoders", {{"kind", "toy"}, {"hps", 0.2}}},
      {"edit", {{"steps", steps}}},
  };
}

inline std::filesystem::path write_toy_config(const std::filesystem::path& dir,
                                              int steps = 10) {
  std::filesystem::create_directories(dir);
  const auto path = dir / "config.json";
  write_text(path, toy_config_json(steps).dump(2));
  return path;
}

}  // namespace exedit::testing
