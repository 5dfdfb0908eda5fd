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

#include "exedit/edit_capture.hpp"

#include <spdlog/sinks/stdout_color_sinks.h>

#include <set>
#include <sstream>
#include <thread>

#include "exedit/image_io.hpp"
#include "exedit/logging.hpp"

namespace exedit {

spdlog::logger& logger() {
  static std::shared_ptr<spdlog::logger> instance = [] {
    auto existing = spdlog::get("exedit");
    if (existing) return existing;
    auto l = spdlog::stderr_color_mt("exedit");
    l->set_level(spdlog::level::info);
    return l;
  }();
  return *instance;
}

namespace {

const std::set<std::string>& known_slots() {
  static const std::set<std::string> slots{"edit_description", "max_words"};
  return slots;
}

std::set<std::string> slots_in(const std::string& tmpl) {
  std::set<std::string> found;
  size_t pos = 0;
  while ((pos = tmpl.find('{', pos)) != std::string::npos) {
    const size_t end = tmpl.find('}', pos);
    if (end == std::string::npos) break;
    found.insert(tmpl.substr(pos + 1, end - pos - 1));
    pos = end + 1;
  }
  return found;
}

std::string read_text_file(const std::filesystem::path& path) {
  const Bytes bytes = read_file(path);
  return std::string(bytes.begin(), bytes.end());
}

// Shipped default templates; prompts/v1/*.txt hold the same text.
constexpr const char* kDefaultP1 =
    "The image shows two pictures side by side. The left picture is an "
    "original photo and the right picture is the same photo after an edit.\n"
    "Describe in detail every change that turns the left picture into the "
    "right one: style, colors, lighting, textures, added, removed or replaced "
    "objects, and changes of shape. Do not describe what stays the same.\n";

constexpr const char* kDefaultP2 =
    "Here is a photo. Apply the following edit to it:\n"
    "{edit_description}\n"
    "Describe the edited photo in at most {max_words} words. Answer with the "
    "description only.\n";

constexpr const char* kDefaultPSource =
    "Describe this photo in at most {max_words} words. Answer with the "
    "description only.\n";

std::string ask(VlmClient& vlm, VlmRequest request,
                const PromptTemplates& templates) {
  const std::string purpose = request.purpose;
  VlmResponse response = vlm.complete(request);
  std::string text = trim(response.text);
  logger().info("vlm {} [prompt_version={} model={}]: {}", purpose,
                templates.version(), vlm.model_id(), text);
  if (text.empty()) {
    throw CaptureError("vlm returned an empty response for " + purpose);
  }
  return text;
}

}  // namespace

ExemplarTask preprocess_task(ExemplarTask task, Eigen::Index resolution) {
  auto fit = [resolution](Image8& img, const char* name) {
    if (img.empty()) {
      throw DimensionError(std::string("task image ") + name + " is empty");
    }
    img = resize_bilinear(img, resolution, resolution);
  };
  fit(task.x, "x");
  fit(task.x_edit, "x_edit");
  fit(task.y, "y");
  if (task.y_edit) fit(*task.y_edit, "y_edit");
  return task;
}

std::string render_template(const std::string& tmpl,
                            const std::map<std::string, std::string>& slots) {
  std::string out;
  size_t pos = 0;
  while (pos < tmpl.size()) {
    const size_t open = tmpl.find('{', pos);
    if (open == std::string::npos) {
      out += tmpl.substr(pos);
      break;
    }
    const size_t close = tmpl.find('}', open);
    if (close == std::string::npos) {
      out += tmpl.substr(pos);
      break;
    }
    out += tmpl.substr(pos, open - pos);
    const std::string name = tmpl.substr(open + 1, close - open - 1);
    auto it = slots.find(name);
    if (it == slots.end()) {
      throw ConfigError("template slot {" + name + "} has no value");
    }
    out += it->second;
    pos = close + 1;
  }
  return out;
}

std::string PromptTemplates::version() const {
  return name + "@" + sha256_hex(p1 + '\x1f' + p2 + '\x1f' + p_source).substr(0, 12);
}

void PromptTemplates::validate() const {
  if (max_caption_words < 1) {
    throw ConfigError("max_caption_words must be >= 1");
  }
  for (const auto* t : {&p1, &p2, &p_source}) {
    if (trim(*t).empty()) throw ConfigError("prompt template is empty");
    for (const auto& slot : slots_in(*t)) {
      if (!known_slots().count(slot)) {
        throw ConfigError("prompt template uses unknown slot {" + slot + "}");
      }
    }
  }
  if (!slots_in(p2).count("edit_description")) {
    throw ConfigError("p2 must contain the {edit_description} slot");
  }
}

PromptTemplates PromptTemplates::defaults() {
  PromptTemplates t;
  t.p1 = kDefaultP1;
  t.p2 = kDefaultP2;
  t.p_source = kDefaultPSource;
  return t;
}

PromptTemplates PromptTemplates::load(const std::filesystem::path& p1,
                                      const std::filesystem::path& p2,
                                      const std::filesystem::path& p_source,
                                      std::string name, int max_caption_words) {
  PromptTemplates t;
  t.name = std::move(name);
  t.p1 = read_text_file(p1);
  t.p2 = read_text_file(p2);
  t.p_source = read_text_file(p_source);
  t.max_caption_words = max_caption_words;
  t.validate();
  return t;
}

std::string trim(const std::string& s) {
  const char* ws = " \t\r\n\f\v";
  const size_t b = s.find_first_not_of(ws);
  if (b == std::string::npos) return {};
  const size_t e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

int word_count(const std::string& s) {
  std::istringstream in(s);
  int n = 0;
  for (std::string w; in >> w;) ++n;
  return n;
}

CaptionResult truncate_words(const std::string& text, int max_words) {
  if (max_words < 1) throw PreconditionError("max_words must be >= 1");
  const std::string trimmed = trim(text);
  if (word_count(trimmed) <= max_words) return {trimmed, false};
  std::istringstream in(trimmed);
  std::string out;
  std::string w;
  for (int i = 0; i < max_words && in >> w; ++i) {
    if (!out.empty()) out += ' ';
    out += w;
  }
  return {out, true};
}

std::string describe_edit(const Image8& grid, const PromptTemplates& templates,
                          VlmClient& vlm) {
  VlmRequest req;
  req.purpose = "describe_edit";
  req.prompt = render_template(
      templates.p1,
      {{"max_words", std::to_string(templates.max_caption_words)}});
  req.images.push_back(encode_png(grid));
  return ask(vlm, std::move(req), templates);
}

CaptionResult caption_edited_target(const Image8& y, const std::string& g_text,
                                    const PromptTemplates& templates,
                                    VlmClient& vlm) {
  if (trim(g_text).empty()) {
    throw PreconditionError("caption_edited_target: empty edit description");
  }
  VlmRequest req;
  req.purpose = "caption_target";
  req.prompt = render_template(
      templates.p2,
      {{"edit_description", g_text},
       {"max_words", std::to_string(templates.max_caption_words)}});
  req.images.push_back(encode_png(y));
  CaptionResult out =
      truncate_words(ask(vlm, std::move(req), templates),
                     templates.max_caption_words);
  if (out.truncated) {
    logger().warn("g_caption truncated to {} words [prompt_version={}]",
                  templates.max_caption_words, templates.version());
  }
  return out;
}

CaptionResult caption_source(const Image8& y, const PromptTemplates& templates,
                             VlmClient& vlm) {
  VlmRequest req;
  req.purpose = "caption_source";
  req.prompt = render_template(
      templates.p_source,
      {{"max_words", std::to_string(templates.max_caption_words)}});
  req.images.push_back(encode_png(y));
  return truncate_words(ask(vlm, std::move(req), templates),
                        templates.max_caption_words);
}

Eigen::VectorXd compute_image_delta(const Image8& x, const Image8& x_edit,
                                    ImageEncoderClient& encoder) {
  Eigen::VectorXd ex;
  Eigen::VectorXd ex_edit;
  try {
    ex = encoder.embed_image(x);
    ex_edit = encoder.embed_image(x_edit);
  } catch (const ExternalModelError&) {
    throw;
  } catch (const std::exception& e) {
    throw ExternalModelError(encoder.model_id() + ": " + e.what());
  }
  if (ex.size() != ex_edit.size() || ex.size() == 0) {
    throw ExternalModelError(encoder.model_id() +
                             ": inconsistent embedding sizes");
  }
  Eigen::VectorXd delta = ex_edit - ex;
  if (!delta.allFinite()) {
    throw ExternalModelError(encoder.model_id() + ": non-finite embedding");
  }
  return delta;
}

RetryingVlmClient::RetryingVlmClient(std::unique_ptr<VlmClient> inner,
                                     RetryPolicy policy)
    : inner_(std::move(inner)), policy_(policy) {}

VlmResponse RetryingVlmClient::complete(const VlmRequest& request) {
  auto delay = policy_.initial_delay;
  for (int attempt = 1;; ++attempt) {
    try {
      return inner_->complete(request);
    } catch (const ServiceError& e) {
      if (!e.retriable() || attempt >= policy_.max_attempts) throw;
      logger().warn("vlm attempt {}/{} failed: {}; retrying in {} ms", attempt,
                    policy_.max_attempts, e.what(), delay.count());
      std::this_thread::sleep_for(delay);
      delay = std::chrono::milliseconds(static_cast<long long>(
          static_cast<double>(delay.count()) * policy_.multiplier));
    }
  }
}

}  // namespace exedit
