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

#include <Eigen/Core>

#include <chrono>
#include <memory>
#include <string>
#include <vector>

#include "exedit/image.hpp"
#include "exedit/image_io.hpp"

// Interfaces to the external models the pipeline consumes. None of them are
// implemented here beyond toy stand-ins (toy_clients.hpp) and an HTTP model
// service client (http_clients.hpp).

namespace exedit {

struct DecodingParams {
  double temperature = 0.0;
  int max_tokens = 256;
};

struct VlmRequest {
  std::string purpose;  // "describe_edit", "caption_target", "caption_source"
  std::string prompt;
  std::vector<Bytes> images;  // PNG
  DecodingParams decoding;
};

struct VlmResponse {
  std::string text;
};

class VlmClient {
 public:
  virtual ~VlmClient() = default;
  // Throws ServiceError on transport failure.
  virtual VlmResponse complete(const VlmRequest& request) = 0;
  virtual std::string model_id() const = 0;
};

class ImageEncoderClient {
 public:
  virtual ~ImageEncoderClient() = default;
  // Single global embedding per image.
  virtual Eigen::VectorXd embed_image(const Image8& image) = 0;
  virtual std::string model_id() const = 0;
};

class TextEncoderClient {
 public:
  virtual ~TextEncoderClient() = default;
  // Per-token hidden states used as cross-attention context [n_text x d_ctx].
  virtual Eigen::MatrixXd encode_tokens(const std::string& text) = 0;
  // Pooled embedding in the joint image-text space.
  virtual Eigen::VectorXd embed_text(const std::string& text) = 0;
  virtual std::string model_id() const = 0;
};

// One backbone layer: features are channels x spatial positions; weights are
// the per-channel linear calibration published with the backbone.
struct FeatureLayer {
  Eigen::MatrixXd features;
  Eigen::VectorXd weights;
};

class FeatureNetClient {
 public:
  virtual ~FeatureNetClient() = default;
  virtual std::vector<FeatureLayer> features(const Image8& image) = 0;
  virtual std::string model_id() const = 0;
};

class InceptionFeatureClient {
 public:
  virtual ~InceptionFeatureClient() = default;
  virtual Eigen::VectorXd features(const Image8& image) = 0;
  virtual std::string model_id() const = 0;
};

struct HpsScore {
  double value = 0.0;
  std::string version;
};

class HpsClient {
 public:
  virtual ~HpsClient() = default;
  // Throws ServiceError when the scorer is unavailable.
  virtual HpsScore score(const Image8& image, const std::string& prompt) = 0;
};

struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds initial_delay{500};
  double multiplier = 2.0;
};

// Retries retriable ServiceErrors with exponential backoff.
class RetryingVlmClient : public VlmClient {
 public:
  RetryingVlmClient(std::unique_ptr<VlmClient> inner, RetryPolicy policy = {});
  VlmResponse complete(const VlmRequest& request) override;
  std::string model_id() const override { return inner_->model_id(); }

 private:
  std::unique_ptr<VlmClient> inner_;
  RetryPolicy policy_;
};

// Everything one pipeline worker needs besides the backend. Each worker owns
// its own bundle.
struct ClientBundle {
  std::unique_ptr<VlmClient> vlm;
  std::unique_ptr<ImageEncoderClient> image_encoder;
  std::unique_ptr<TextEncoderClient> text_encoder;
  std::unique_ptr<FeatureNetClient> feature_net;
  std::unique_ptr<InceptionFeatureClient> inception;
  std::unique_ptr<HpsClient> hps;  // may be null
};

}  // namespace exedit
