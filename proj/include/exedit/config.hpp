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

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>

#include "exedit/backend.hpp"
#include "exedit/clients.hpp"
#include "exedit/edit_capture.hpp"
#include "exedit/injection.hpp"
#include "exedit/toy_backend.hpp"

// Run configuration: one JSON document, schema in docs/config.md. Unknown
// keys are rejected at every level.

namespace exedit {

inline constexpr const char* kEnvVlmEndpoint = "EXEDIT_VLM_ENDPOINT";
inline constexpr const char* kEnvEncoderEndpoint = "EXEDIT_ENCODER_ENDPOINT";
inline constexpr const char* kEnvBackendEndpoint = "EXEDIT_BACKEND_ENDPOINT";

struct BackendSettings {
  std::string kind = "toy";  // toy | remote
  // toy: JSON file with the toy model's parameters. When set, parsing loads
  // it into `toy`.
  std::filesystem::path weights;
  ToyConfig toy;
  // remote
  std::string endpoint;
  double timeout_s = 600.0;
  std::string tensor_dtype = "f64";  // f64 | f32
};

struct VlmSettings {
  std::string kind = "stub";  // stub | http
  std::map<std::string, std::string> responses;  // stub, keyed by purpose
  std::string model = "stub-vlm";
  std::string endpoint;
  std::string api_key_env;
  double timeout_s = 120.0;
  RetryPolicy retry;
};

struct EncoderSettings {
  std::string kind = "toy";  // toy | http
  std::string endpoint;
  double timeout_s = 120.0;
  // toy: fixed HPS value, or none for an unavailable scorer.
  std::optional<double> hps_value;
  // http: whether the service offers an HPS scorer.
  bool hps = true;
};

struct PromptSettings {
  std::filesystem::path p1, p2, p_source;  // empty: built-in defaults
  std::string name = "v1";
  int max_caption_words = 20;
};

struct RunConfig {
  BackendSettings backend;
  VlmSettings vlm;
  EncoderSettings encoders;
  EditConfig edit;
  PromptSettings prompts;
  std::filesystem::path output_dir;
  std::uint64_t seed = 0;

  // Resolved, absolute-path JSON form recorded in provenance.
  nlohmann::json snapshot() const;
};

// Relative paths resolve against base_dir. Throws ConfigError.
RunConfig parse_config(const nlohmann::json& doc,
                       const std::filesystem::path& base_dir);
RunConfig load_config(const std::filesystem::path& path);
// Replaces endpoints from EXEDIT_*_ENDPOINT when set.
void apply_env_overrides(RunConfig& cfg);

ToyConfig load_toy_weights(const std::filesystem::path& path);

// Each call returns a fresh handle/bundle; batch workers call once each.
std::unique_ptr<BackendHandle<double>> make_backend(const RunConfig& cfg);
ClientBundle make_clients(const RunConfig& cfg);
PromptTemplates make_templates(const RunConfig& cfg);

}  // namespace exedit
