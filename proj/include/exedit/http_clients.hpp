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

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "exedit/clients.hpp"

// HTTP implementations of the model-client interfaces. Wire format in
// docs/protocol.md.

namespace exedit {

// Blocking JSON-over-HTTP client for one base URL
// (scheme://host[:port][/prefix]). Transport errors, 429 and 5xx raise
// retriable ServiceErrors; other non-2xx raise non-retriable ones.
class HttpJsonClient {
 public:
  HttpJsonClient(const std::string& base_url, double timeout_s,
                 std::map<std::string, std::string> headers = {});
  ~HttpJsonClient();
  HttpJsonClient(const HttpJsonClient&) = delete;
  HttpJsonClient& operator=(const HttpJsonClient&) = delete;

  nlohmann::json get(const std::string& path);
  nlohmann::json post(const std::string& path, const nlohmann::json& body);
  const std::string& base_url() const { return base_url_; }

 private:
  struct Impl;
  std::string base_url_;
  std::unique_ptr<Impl> impl_;
};

// OpenAI-compatible chat completions endpoint; images travel as PNG data
// URLs.
class HttpVlmClient : public VlmClient {
 public:
  HttpVlmClient(const std::string& endpoint, std::string model,
                std::string api_key, double timeout_s);
  VlmResponse complete(const VlmRequest& request) override;
  std::string model_id() const override { return model_; }

 private:
  HttpJsonClient http_;
  std::string model_;
};

// Image/text encoders, LPIPS backbone, FID extractor and HPS scorer served
// from one model service.
class HttpModelService {
 public:
  HttpModelService(const std::string& endpoint, double timeout_s);

  Eigen::VectorXd embed_image(const Image8& image);
  Eigen::VectorXd embed_text(const std::string& text);
  Eigen::MatrixXd encode_text_tokens(const std::string& text);
  std::vector<FeatureLayer> lpips_features(const Image8& image);
  Eigen::VectorXd inception_features(const Image8& image);
  HpsScore hps(const Image8& image, const std::string& prompt);
  // Model ids keyed by role, fetched once from /models.
  std::string model_id(const std::string& role);

 private:
  HttpJsonClient http_;
  std::mutex mu_;
  std::optional<nlohmann::json> models_;
};

// Adapters exposing one role of a shared HttpModelService.
ClientBundle make_http_model_clients(std::shared_ptr<HttpModelService> svc,
                                     bool with_hps);

}  // namespace exedit
