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
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "exedit/backend.hpp"
#include "exedit/clients.hpp"
#include "exedit/config.hpp"
#include "exedit/dataset.hpp"
#include "exedit/edit_capture.hpp"

namespace exedit {

// Wall-clock seconds per stage, in execution order.
struct StageTimings {
  std::vector<std::pair<std::string, double>> stages;
  double total_s = 0.0;

  nlohmann::json to_json() const;
};

struct EditOutcome {
  Image8 image;
  // Sidecar contents. Everything except "timings_s" is a function of the
  // inputs, the config and the seeds.
  nlohmann::json provenance;
  StageTimings timings;
  // Edited run, noisiest state first; filled when requested.
  std::vector<LatentState<double>> trajectory;
};

// Preprocesses the task to the backend resolution, then captures the edit,
// inverts y, records the source run, runs the edited pass and decodes.
// Failures are StageErrors naming the stage.
EditOutcome run_edit(const ExemplarTask& task, const RunConfig& cfg,
                     BackendHandle<double>& backend, ClientBundle& clients,
                     const PromptTemplates& templates,
                     bool keep_trajectory = false);

// Writes <name>.png, <name>.provenance.json and, when the outcome carries
// one, <name>.trajectory.json. Returns the PNG path.
std::filesystem::path write_edit_outputs(const EditOutcome& outcome,
                                         const std::filesystem::path& out_dir,
                                         const std::string& name);

// Per-step digest of a latent trajectory.
nlohmann::json trajectory_json(const std::vector<LatentState<double>>& traj);

struct BatchEntryResult {
  std::string id;
  bool ok = false;
  std::string stage;  // failing stage, empty on success
  std::string error;
  std::string output_sha256;
  double seconds = 0.0;
};

struct BatchSummary {
  std::vector<BatchEntryResult> entries;  // manifest order

  int n_ok() const;
  int n_failed() const;
  nlohmann::json to_json() const;
};

// Edits every manifest entry into out_dir as <id>.png plus sidecar and
// writes batch_summary.json. Per-entry failures are recorded, not thrown.
// Each of the `parallel` workers owns its own backend and clients; backend
// load failures throw before any entry runs.
BatchSummary run_batch(const DatasetManifest& manifest, const RunConfig& cfg,
                       const std::filesystem::path& out_dir, int parallel,
                       bool keep_trajectory = false);

}  // namespace exedit
