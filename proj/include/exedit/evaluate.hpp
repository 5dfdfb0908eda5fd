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

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "exedit/clients.hpp"
#include "exedit/dataset.hpp"
#include "exedit/metrics.hpp"

namespace exedit {

enum class MetricDirection { kHigherBetter, kLowerBetter };

struct MetricInfo {
  const char* key;
  const char* name;
  MetricDirection direction;
};

// Report row order.
inline constexpr std::array<MetricInfo, 7> kReportMetrics = {{
    {"lpips", "LPIPS", MetricDirection::kLowerBetter},
    {"fid", "FID", MetricDirection::kLowerBetter},
    {"hps", "HPS", MetricDirection::kHigherBetter},
    {"ssim", "SSIM", MetricDirection::kHigherBetter},
    {"clip_score", "CLIP Score", MetricDirection::kHigherBetter},
    {"dir_similarity", "Dir. Similarity", MetricDirection::kHigherBetter},
    {"s_visual", "S-Visual", MetricDirection::kHigherBetter},
}};

// Below this many entries FID carries a warning.
inline constexpr int kFidSmallSample = 2048;

struct MetricRow {
  MetricInfo info;
  Aggregate aggregate;
  // Entries the metric could not be computed for (scorer unavailable,
  // missing caption). Any skip makes the run incomplete.
  std::vector<std::string> skipped;
  // Entries left out because the score is undefined (zero-norm direction).
  std::vector<std::string> excluded;
  std::optional<std::string> warning;
};

struct EntryScores {
  std::string id;
  std::map<std::string, std::optional<double>> values;
  std::map<std::string, std::string> flags;
  std::string source_caption;
  std::string target_caption;
  std::string caption_origin;  // provenance, manifest, vlm or none
};

struct MetricReport {
  std::vector<MetricRow> rows;
  std::vector<EntryScores> per_entry;
  std::map<std::string, std::string> models;
  nlohmann::json preprocessing;
  std::string preprocessing_checksum;
  nlohmann::json config;

  const MetricRow& row(const std::string& key) const;
  bool any_skipped() const;

  nlohmann::json to_json() const;
  // One line per metric in report order.
  std::string to_csv() const;
  std::string to_table() const;
};

struct EvaluateOptions {
  PromptTemplates templates = PromptTemplates::defaults();
  // Ask the VLM for a source caption when neither provenance nor manifest
  // has one.
  bool vlm_source_captions = true;
  nlohmann::json config;
};

// Throws MissingPredictionError listing every id without a prediction.
MetricReport evaluate(const DatasetManifest& manifest,
                      const std::filesystem::path& predictions_dir,
                      ClientBundle& clients, const EvaluateOptions& options);

}  // namespace exedit
