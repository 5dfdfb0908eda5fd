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

#include "exedit/http_clients.hpp"

#include <cmath>

#include "exedit/errors.hpp"
#include "exedit/image_io.hpp"
#include "exedit/wire.hpp"

// After Eigen: <resolv.h> defines a _res macro that collides with Eigen
// parameter names.
#include <httplib.h>

namespace exedit {

using nlohmann::json;

namespace {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string prefix;  // "" or "/path" without trailing slash
};

SplitUrl split_url(const std::string& url) {
  const size_t scheme = url.find("://");
  if (scheme == std::string::npos) {
    throw ConfigError("endpoint must start with http:// or https://: " + url);
  }
  const std::string s = url.substr(0, scheme);
  if (s != "http" && s != "https") {
    throw ConfigError("unsupported endpoint scheme: " + url);
  }
  const size_t slash = url.find('/', scheme + 3);
  SplitUrl out;
  if (slash == std::string::npos) {
    out.origin = url;
  } else {
    out.origin = url.substr(0, slash);
    out.prefix = url.substr(slash);
    while (!out.prefix.empty() && out.prefix.back() == '/') out.prefix.pop_back();
  }
  return out;
}

}  // namespace

struct HttpJsonClient::Impl {
  SplitUrl url;
  httplib::Client client;
  httplib::Headers headers;

  Impl(const std::string& base, double timeout_s,
       const std::map<std::string, std::string>& extra)
      : url(split_url(base)), client(url.origin) {
    const auto sec = static_cast<time_t>(timeout_s);
    const auto usec =
        static_cast<time_t>((timeout_s - static_cast<double>(sec)) * 1e6);
    client.set_connection_timeout(sec, usec);
    client.set_read_timeout(sec, usec);
    client.set_write_timeout(sec, usec);
    for (const auto& [k, v] : extra) headers.emplace(k, v);
  }

  json handle(const httplib::Result& res, const std::string& path) {
    const std::string where = url.origin + url.prefix + path;
    if (!res) {
      throw ServiceError(where + ": " + httplib::to_string(res.error()), true);
    }
    if (res->status == 429 || res->status >= 500) {
      throw ServiceError(where + ": HTTP " + std::to_string(res->status) +
                             " " + res->body.substr(0, 200),
                         true);
    }
    if (res->status < 200 || res->status >= 300) {
      throw ServiceError(where + ": HTTP " + std::to_string(res->status) +
                             " " + res->body.substr(0, 200),
                         false);
    }
    json body = json::parse(res->body, nullptr, false);
    if (body.is_discarded()) {
      throw ServiceError(where + ": response is not JSON", false);
    }
    return body;
  }
};

HttpJsonClient::HttpJsonClient(const std::string& base_url, double timeout_s,
                               std::map<std::string, std::string> headers)
    : base_url_(base_url),
      impl_(std::make_unique<Impl>(base_url, timeout_s, headers)) {}

HttpJsonClient::~HttpJsonClient() = default;

json HttpJsonClient::get(const std::string& path) {
  const std::string full = impl_->url.prefix + path;
  return impl_->handle(impl_->client.Get(full, impl_->headers), path);
}

json HttpJsonClient::post(const std::string& path, const json& body) {
  const std::string full = impl_->url.prefix + path;
  return impl_->handle(impl_->client.Post(full, impl_->headers, body.dump(),
                                          "application/json"),
                       path);
}

// ---------------------------------------------------------------- VLM

namespace {

std::map<std::string, std::string> auth_headers(const std::string& key) {
  if (key.empty()) return {};
  return {{"Authorization", "Bearer " + key}};
}

}  // namespace

HttpVlmClient::HttpVlmClient(const std::string& endpoint, std::string model,
                             std::string api_key, double timeout_s)
    : http_(endpoint, timeout_s, auth_headers(api_key)),
      model_(std::move(model)) {}

VlmResponse HttpVlmClient::complete(const VlmRequest& request) {
  json content = json::array();
  for (const Bytes& png : request.images) {
    content.push_back(
        {{"type", "image_url"},
         {"image_url",
          {{"url", "data:image/png;base64," + base64_encode(png)}}}});
  }
  content.push_back({{"type", "text"}, {"text", request.prompt}});
  const json body = {
      {"model", model_},
      {"temperature", request.decoding.temperature},
      {"max_tokens", request.decoding.max_tokens},
      {"messages", json::array({{{"role", "user"}, {"content", content}}})}};
  const json res = http_.post("/chat/completions", body);
  try {
    const json& choices = wire::field(res, "choices");
    if (!choices.is_array() || choices.empty()) {
      throw ServiceError("vlm: response has no choices", false);
    }
    const json& msg = wire::field(choices[0], "message");
    const json& text = wire::field(msg, "content");
    if (text.is_null()) return {""};
    return {text.get<std::string>()};
  } catch (const json::exception& e) {
    throw ServiceError(std::string("vlm: malformed response: ") + e.what(),
                       false);
  }
}

// ---------------------------------------------------------------- model service

HttpModelService::HttpModelService(const std::string& endpoint,
                                   double timeout_s)
    : http_(endpoint, timeout_s) {}

namespace {

template <typename Fn>
auto decoded(const char* what, Fn&& fn) {
  try {
    return fn();
  } catch (const json::exception& e) {
    throw ServiceError(std::string(what) + ": malformed response: " + e.what(),
                       false);
  }
}

}  // namespace

Eigen::VectorXd HttpModelService::embed_image(const Image8& image) {
  const json res =
      http_.post("/embed_image", {{"image", wire::encode_image(image)}});
  return wire::decode_vector(wire::field(res, "embedding"));
}

Eigen::VectorXd HttpModelService::embed_text(const std::string& text) {
  const json res = http_.post("/embed_text", {{"text", text}});
  return wire::decode_vector(wire::field(res, "embedding"));
}

Eigen::MatrixXd HttpModelService::encode_text_tokens(const std::string& text) {
  const json res = http_.post("/encode_text_tokens", {{"text", text}});
  return wire::decode_tensor(wire::field(res, "tokens"));
}

std::vector<FeatureLayer> HttpModelService::lpips_features(
    const Image8& image) {
  const json res =
      http_.post("/lpips_features", {{"image", wire::encode_image(image)}});
  const json& layers = wire::field(res, "layers");
  if (!layers.is_array()) throw ServiceError("lpips: malformed layers", false);
  std::vector<FeatureLayer> out;
  for (const json& l : layers) {
    out.push_back({wire::decode_tensor(wire::field(l, "features")),
                   wire::decode_vector(wire::field(l, "weights"))});
  }
  return out;
}

Eigen::VectorXd HttpModelService::inception_features(const Image8& image) {
  const json res = http_.post("/inception_features",
                              {{"image", wire::encode_image(image)}});
  return wire::decode_vector(wire::field(res, "features"));
}

HpsScore HttpModelService::hps(const Image8& image, const std::string& prompt) {
  const json res = http_.post(
      "/hps", {{"image", wire::encode_image(image)}, {"prompt", prompt}});
  return decoded("hps", [&] {
    return HpsScore{wire::field(res, "score").get<double>(),
                    wire::field(res, "version").get<std::string>()};
  });
}

std::string HttpModelService::model_id(const std::string& role) {
  std::lock_guard<std::mutex> lock(mu_);
  if (!models_) models_ = http_.get("/models");
  return decoded("models", [&] {
    return wire::field(*models_, role.c_str()).get<std::string>();
  });
}

namespace {

class ServiceImageEncoder : public ImageEncoderClient {
 public:
  explicit ServiceImageEncoder(std::shared_ptr<HttpModelService> s)
      : svc_(std::move(s)) {}
  Eigen::VectorXd embed_image(const Image8& image) override {
    return svc_->embed_image(image);
  }
  std::string model_id() const override {
    return svc_->model_id("image_encoder");
  }

 private:
  std::shared_ptr<HttpModelService> svc_;
};

class ServiceTextEncoder : public TextEncoderClient {
 public:
  explicit ServiceTextEncoder(std::shared_ptr<HttpModelService> s)
      : svc_(std::move(s)) {}
  Eigen::MatrixXd encode_tokens(const std::string& text) override {
    return svc_->encode_text_tokens(text);
  }
  Eigen::VectorXd embed_text(const std::string& text) override {
    return svc_->embed_text(text);
  }
  std::string model_id() const override {
    return svc_->model_id("text_encoder");
  }

 private:
  std::shared_ptr<HttpModelService> svc_;
};

class ServiceFeatureNet : public FeatureNetClient {
 public:
  explicit ServiceFeatureNet(std::shared_ptr<HttpModelService> s)
      : svc_(std::move(s)) {}
  std::vector<FeatureLayer> features(const Image8& image) override {
    return svc_->lpips_features(image);
  }
  std::string model_id() const override {
    return svc_->model_id("feature_net");
  }

 private:
  std::shared_ptr<HttpModelService> svc_;
};

class ServiceInception : public InceptionFeatureClient {
 public:
  explicit ServiceInception(std::shared_ptr<HttpModelService> s)
      : svc_(std::move(s)) {}
  Eigen::VectorXd features(const Image8& image) override {
    return svc_->inception_features(image);
  }
  std::string model_id() const override { return svc_->model_id("inception"); }

 private:
  std::shared_ptr<HttpModelService> svc_;
};

class ServiceHps : public HpsClient {
 public:
  explicit ServiceHps(std::shared_ptr<HttpModelService> s)
      : svc_(std::move(s)) {}
  HpsScore score(const Image8& image, const std::string& prompt) override {
    return svc_->hps(image, prompt);
  }

 private:
  std::shared_ptr<HttpModelService> svc_;
};

}  // namespace

ClientBundle make_http_model_clients(std::shared_ptr<HttpModelService> svc,
                                     bool with_hps) {
  ClientBundle b;
  b.image_encoder = std::make_unique<ServiceImageEncoder>(svc);
  b.text_encoder = std::make_unique<ServiceTextEncoder>(svc);
  b.feature_net = std::make_unique<ServiceFeatureNet>(svc);
  b.inception = std::make_unique<ServiceInception>(svc);
  if (with_hps) b.hps = std::make_unique<ServiceHps>(svc);
  return b;
}

}  // namespace exedit
