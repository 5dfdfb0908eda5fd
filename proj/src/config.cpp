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

#include "exedit/config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "exedit/http_clients.hpp"
#include "exedit/remote_backend.hpp"
#include "exedit/toy_clients.hpp"

namespace exedit {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Reads one JSON object, remembering which keys were consumed so leftovers
// can be reported.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_ + ": must be an object");
  }

  bool has(const char* key) const { return j_.contains(key); }

  template <typename T>
  void read(const char* key, T& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      out = it->get<T>();
    } catch (const json::exception&) {
      throw ConfigError(path_ + "." + key + ": wrong type");
    }
  }

  void read_path(const char* key, fs::path& out, const fs::path& base) {
    std::string s;
    read(key, s);
    if (s.empty()) return;
    out = (fs::path(s).is_absolute() ? fs::path(s) : base / s).lexically_normal();
  }

  Section child(const char* key) {
    seen_.insert(key);
    static const json kEmpty = json::object();
    auto it = j_.find(key);
    return Section(it == j_.end() ? kEmpty : *it, path_ + "." + key);
  }

  const json& raw(const char* key) {
    seen_.insert(key);
    static const json kNull;
    auto it = j_.find(key);
    return it == j_.end() ? kNull : *it;
  }

  void finish() const {
    for (const auto& item : j_.items()) {
      if (!seen_.count(item.key())) {
        throw ConfigError(path_ + ": unknown key '" + item.key() + "'");
      }
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void read_schedule(Section s, ScheduleParams& p) {
  s.read("kind", p.kind);
  s.read("train_steps", p.train_steps);
  s.read("beta_start", p.beta_start);
  s.read("beta_end", p.beta_end);
  s.finish();
}

void read_toy(Section& s, ToyConfig& t) {
  std::string predictor = to_string(t.predictor);
  s.read("predictor", predictor);
  t.predictor = parse_toy_predictor(predictor);
  s.read("seed", t.seed);
  s.read("residual_blocks", t.residual_blocks);
  s.read("attention_layers", t.attention_layers);
  s.read("hidden", t.hidden);
  s.read("context_width", t.context_width);
  s.read("resolution", t.resolution);
  s.read("linear_scale", t.linear_scale);
  s.read("context_scale", t.context_scale);
  s.read("output_scale", t.output_scale);
  read_schedule(s.child("schedule"), t.schedule);
}

json toy_json(const ToyConfig& t) {
  return {{"predictor", to_string(t.predictor)},
          {"seed", t.seed},
          {"residual_blocks", t.residual_blocks},
          {"attention_layers", t.attention_layers},
          {"hidden", t.hidden},
          {"context_width", t.context_width},
          {"resolution", t.resolution},
          {"linear_scale", t.linear_scale},
          {"context_scale", t.context_scale},
          {"output_scale", t.output_scale},
          {"schedule",
           {{"kind", t.schedule.kind},
            {"train_steps", t.schedule.train_steps},
            {"beta_start", t.schedule.beta_start},
            {"beta_end", t.schedule.beta_end}}}};
}

json read_json_file(const fs::path& path, const char* what) {
  std::ifstream in(path);
  if (!in) throw LoadError(std::string(what) + " not found: " + path.string());
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) {
    throw LoadError(std::string(what) + " is not valid JSON: " + path.string());
  }
  return j;
}

}  // namespace

ToyConfig load_toy_weights(const fs::path& path) {
  const json j = read_json_file(path, "toy weights");
  Section s(j, "weights");
  std::string format;
  s.read("format", format);
  if (format != "exedit-toy/1") {
    throw LoadError("toy weights " + path.string() +
                    ": expected format exedit-toy/1");
  }
  ToyConfig t;
  try {
    read_toy(s, t);
    s.finish();
  } catch (const ConfigError& e) {
    throw LoadError("toy weights " + path.string() + ": " + e.what());
  }
  return t;
}

RunConfig parse_config(const json& doc, const fs::path& base_dir) {
  RunConfig cfg;
  Section root(doc, "config");
  root.read("seed", cfg.seed);
  root.read_path("output_dir", cfg.output_dir, base_dir);

  {
    Section b = root.child("backend");
    b.read("kind", cfg.backend.kind);
    if (cfg.backend.kind != "toy" && cfg.backend.kind != "remote") {
      throw ConfigError("config.backend.kind: expected toy or remote");
    }
    b.read_path("weights", cfg.backend.weights, base_dir);
    Section toy = b.child("toy");
    read_toy(toy, cfg.backend.toy);
    toy.finish();
    if (cfg.backend.kind == "toy" && !cfg.backend.weights.empty()) {
      const ToyConfig loaded = load_toy_weights(cfg.backend.weights);
      // An inline toy section next to weights (as in a provenance snapshot)
      // must describe the same model.
      if (b.has("toy") && toy_json(loaded) != toy_json(cfg.backend.toy)) {
        throw ConfigError("config.backend.toy disagrees with weights file " +
                          cfg.backend.weights.string());
      }
      cfg.backend.toy = loaded;
    }
    b.read("endpoint", cfg.backend.endpoint);
    b.read("timeout_s", cfg.backend.timeout_s);
    b.read("tensor_dtype", cfg.backend.tensor_dtype);
    if (cfg.backend.tensor_dtype != "f64" && cfg.backend.tensor_dtype != "f32") {
      throw ConfigError("config.backend.tensor_dtype: expected f64 or f32");
    }
    b.finish();
  }
  {
    Section v = root.child("vlm");
    v.read("kind", cfg.vlm.kind);
    if (cfg.vlm.kind != "stub" && cfg.vlm.kind != "http") {
      throw ConfigError("config.vlm.kind: expected stub or http");
    }
    v.read("responses", cfg.vlm.responses);
    v.read("model", cfg.vlm.model);
    v.read("endpoint", cfg.vlm.endpoint);
    v.read("api_key_env", cfg.vlm.api_key_env);
    v.read("timeout_s", cfg.vlm.timeout_s);
    v.read("retry_attempts", cfg.vlm.retry.max_attempts);
    int delay_ms = static_cast<int>(cfg.vlm.retry.initial_delay.count());
    v.read("retry_delay_ms", delay_ms);
    cfg.vlm.retry.initial_delay = std::chrono::milliseconds(delay_ms);
    v.finish();
    if (cfg.vlm.retry.max_attempts < 1 || delay_ms < 0) {
      throw ConfigError("config.vlm: retry_attempts must be >= 1");
    }
  }
  {
    Section e = root.child("encoders");
    e.read("kind", cfg.encoders.kind);
    if (cfg.encoders.kind != "toy" && cfg.encoders.kind != "http") {
      throw ConfigError("config.encoders.kind: expected toy or http");
    }
    e.read("endpoint", cfg.encoders.endpoint);
    e.read("timeout_s", cfg.encoders.timeout_s);
    const json& hps = e.raw("hps");
    if (hps.is_number()) {
      cfg.encoders.hps_value = hps.get<double>();
    } else if (hps.is_boolean()) {
      cfg.encoders.hps = hps.get<bool>();
    } else if (!hps.is_null()) {
      throw ConfigError("config.encoders.hps: expected number, bool or null");
    }
    e.finish();
  }
  {
    Section e = root.child("edit");
    EditConfig& ec = cfg.edit;
    e.read("steps", ec.steps);
    e.read("guidance_scale", ec.guidance_scale);
    e.read("k_delta_tokens", ec.k_delta_tokens);
    e.read("feature_layer", ec.hook_spec.feature_layer);
    e.read("attn_first", ec.hook_spec.attn_first);
    e.read("attn_last", ec.hook_spec.attn_last);
    e.read("step_fraction", ec.hook_spec.step_fraction);
    e.read("divergence_ceiling", ec.divergence_ceiling);
    e.finish();
  }
  {
    Section p = root.child("prompts");
    fs::path dir;
    p.read_path("dir", dir, base_dir);
    if (!dir.empty()) {
      cfg.prompts.p1 = dir / "p1.txt";
      cfg.prompts.p2 = dir / "p2.txt";
      cfg.prompts.p_source = dir / "p_source.txt";
    }
    p.read_path("p1", cfg.prompts.p1, base_dir);
    p.read_path("p2", cfg.prompts.p2, base_dir);
    p.read_path("p_source", cfg.prompts.p_source, base_dir);
    p.read("name", cfg.prompts.name);
    p.read("max_caption_words", cfg.prompts.max_caption_words);
    p.finish();
  }
  root.finish();
  cfg.edit.seed = cfg.seed;
  cfg.edit.validate();
  return cfg;
}

RunConfig load_config(const fs::path& path) {
  json doc;
  {
    std::ifstream in(path);
    if (!in) throw ConfigError("config not found: " + path.string());
    doc = json::parse(in, nullptr, false);
    if (doc.is_discarded()) {
      throw ConfigError("config is not valid JSON: " + path.string());
    }
  }
  RunConfig cfg = parse_config(doc, fs::absolute(path).parent_path());
  apply_env_overrides(cfg);
  return cfg;
}

void apply_env_overrides(RunConfig& cfg) {
  if (const char* v = std::getenv(kEnvVlmEndpoint); v && *v) {
    cfg.vlm.endpoint = v;
  }
  if (const char* v = std::getenv(kEnvEncoderEndpoint); v && *v) {
    cfg.encoders.endpoint = v;
  }
  if (const char* v = std::getenv(kEnvBackendEndpoint); v && *v) {
    cfg.backend.endpoint = v;
  }
}

json RunConfig::snapshot() const {
  json backend_j = {{"kind", backend.kind}};
  if (backend.kind == "toy") {
    if (!backend.weights.empty()) backend_j["weights"] = backend.weights.string();
    backend_j["toy"] = toy_json(backend.toy);
  } else {
    backend_j["endpoint"] = backend.endpoint;
    backend_j["timeout_s"] = backend.timeout_s;
    backend_j["tensor_dtype"] = backend.tensor_dtype;
  }
  json vlm_j = {{"kind", vlm.kind}, {"model", vlm.model}};
  if (vlm.kind == "stub") {
    vlm_j["responses"] = vlm.responses;
  } else {
    vlm_j["endpoint"] = vlm.endpoint;
    vlm_j["api_key_env"] = vlm.api_key_env;
    vlm_j["timeout_s"] = vlm.timeout_s;
    vlm_j["retry_attempts"] = vlm.retry.max_attempts;
    vlm_j["retry_delay_ms"] = vlm.retry.initial_delay.count();
  }
  json enc_j = {{"kind", encoders.kind}};
  if (encoders.kind == "toy") {
    enc_j["hps"] = encoders.hps_value ? json(*encoders.hps_value) : json(nullptr);
  } else {
    enc_j["endpoint"] = encoders.endpoint;
    enc_j["timeout_s"] = encoders.timeout_s;
    enc_j["hps"] = encoders.hps;
  }
  return {
      {"seed", seed},
      {"output_dir", output_dir.string()},
      {"backend", backend_j},
      {"vlm", vlm_j},
      {"encoders", enc_j},
      {"edit",
       {{"steps", edit.steps},
        {"guidance_scale", edit.guidance_scale},
        {"k_delta_tokens", edit.k_delta_tokens},
        {"feature_layer", edit.hook_spec.feature_layer},
        {"attn_first", edit.hook_spec.attn_first},
        {"attn_last", edit.hook_spec.attn_last},
        {"step_fraction", edit.hook_spec.step_fraction},
        {"divergence_ceiling", edit.divergence_ceiling}}},
      {"prompts",
       {{"p1", prompts.p1.string()},
        {"p2", prompts.p2.string()},
        {"p_source", prompts.p_source.string()},
        {"name", prompts.name},
        {"max_caption_words", prompts.max_caption_words}}},
  };
}

std::unique_ptr<BackendHandle<double>> make_backend(const RunConfig& cfg) {
  if (cfg.backend.kind == "remote") {
    if (cfg.backend.endpoint.empty()) {
      throw ConfigError("remote backend needs an endpoint (config or " +
                        std::string(kEnvBackendEndpoint) + ")");
    }
    return std::make_unique<RemoteBackend>(cfg.backend.endpoint,
                                           cfg.backend.timeout_s,
                                           cfg.backend.tensor_dtype);
  }
  return std::make_unique<ToyBackend<double>>(cfg.backend.toy);
}

ClientBundle make_clients(const RunConfig& cfg) {
  ClientBundle b;
  if (cfg.encoders.kind == "http") {
    if (cfg.encoders.endpoint.empty()) {
      throw ConfigError("http encoders need an endpoint (config or " +
                        std::string(kEnvEncoderEndpoint) + ")");
    }
    b = make_http_model_clients(
        std::make_shared<HttpModelService>(cfg.encoders.endpoint,
                                           cfg.encoders.timeout_s),
        cfg.encoders.hps);
  } else {
    b.image_encoder = std::make_unique<ToyImageEncoder>();
    b.text_encoder =
        std::make_unique<ToyTextEncoder>(cfg.backend.toy.context_width);
    b.feature_net = std::make_unique<ToyFeatureNet>();
    b.inception = std::make_unique<ToyInceptionFeatures>();
    b.hps = std::make_unique<StubHpsClient>(cfg.encoders.hps_value);
  }

  std::unique_ptr<VlmClient> vlm;
  if (cfg.vlm.kind == "http") {
    if (cfg.vlm.endpoint.empty()) {
      throw ConfigError("http vlm needs an endpoint (config or " +
                        std::string(kEnvVlmEndpoint) + ")");
    }
    std::string key;
    if (!cfg.vlm.api_key_env.empty()) {
      if (const char* v = std::getenv(cfg.vlm.api_key_env.c_str())) key = v;
    }
    vlm = std::make_unique<HttpVlmClient>(cfg.vlm.endpoint, cfg.vlm.model, key,
                                          cfg.vlm.timeout_s);
  } else {
    vlm = std::make_unique<StubVlmClient>(cfg.vlm.responses, cfg.vlm.model);
  }
  b.vlm = std::make_unique<RetryingVlmClient>(std::move(vlm), cfg.vlm.retry);
  return b;
}

PromptTemplates make_templates(const RunConfig& cfg) {
  PromptTemplates t;
  const auto& p = cfg.prompts;
  if (p.p1.empty() && p.p2.empty() && p.p_source.empty()) {
    t = PromptTemplates::defaults();
    t.name = p.name;
    t.max_caption_words = p.max_caption_words;
  } else {
    if (p.p1.empty() || p.p2.empty() || p.p_source.empty()) {
      throw ConfigError("prompts: give all of p1, p2, p_source or a dir");
    }
    t = PromptTemplates::load(p.p1, p.p2, p.p_source, p.name,
                              p.max_caption_words);
  }
  t.validate();
  return t;
}

}  // namespace exedit
