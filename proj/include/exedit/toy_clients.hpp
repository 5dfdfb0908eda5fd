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

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "exedit/clients.hpp"

// Small deterministic stand-ins for the external models. They exist so the
// full pipeline and the metric harness run without model weights; none of
// them is meant to produce meaningful embeddings.

namespace exedit {

// Scripted VLM. Responses are keyed by request purpose.
class StubVlmClient : public VlmClient {
 public:
  explicit StubVlmClient(std::map<std::string, std::string> responses = {},
                         std::string model = "stub-vlm")
      : responses_(std::move(responses)), model_(std::move(model)) {}

  VlmResponse complete(const VlmRequest& request) override;
  std::string model_id() const override { return model_; }

  void set_response(const std::string& purpose, std::string text) {
    responses_[purpose] = std::move(text);
  }
  // The next n calls fail with a retriable ServiceError.
  void fail_next(int n) { failures_remaining_ = n; }
  const std::vector<VlmRequest>& requests() const { return requests_; }

 private:
  std::map<std::string, std::string> responses_;
  std::string model_;
  int failures_remaining_ = 0;
  std::vector<VlmRequest> requests_;
};

// Projects a 4x4 grid of mean colors through a seeded matrix.
class ToyImageEncoder : public ImageEncoderClient {
 public:
  explicit ToyImageEncoder(Eigen::Index dim = 32, std::uint64_t seed = 11);
  Eigen::VectorXd embed_image(const Image8& image) override;
  std::string model_id() const override;

 private:
  Eigen::MatrixXd projection_;
  std::uint64_t seed_;
};

// Word-hash token embeddings: BOS, one row per word, EOS, then padding, for a
// fixed context length.
class ToyTextEncoder : public TextEncoderClient {
 public:
  ToyTextEncoder(Eigen::Index context_width = 16, Eigen::Index joint_dim = 32,
                 Eigen::Index context_length = 77, std::uint64_t seed = 13);
  Eigen::MatrixXd encode_tokens(const std::string& text) override;
  Eigen::VectorXd embed_text(const std::string& text) override;
  std::string model_id() const override;

 private:
  Eigen::VectorXd word_vector(const std::string& word, Eigen::Index dim,
                              std::uint64_t salt) const;

  Eigen::Index context_width_;
  Eigen::Index joint_dim_;
  Eigen::Index context_length_;
  std::uint64_t seed_;
};

// Three-scale 1x1-conv + ReLU backbone with positive per-channel weights.
class ToyFeatureNet : public FeatureNetClient {
 public:
  explicit ToyFeatureNet(std::uint64_t seed = 17);
  std::vector<FeatureLayer> features(const Image8& image) override;
  std::string model_id() const override;

  // Scalar-loop scorer shipped with the backbone, independent of the
  // vectorized lpips() path.
  double reference_distance(const Image8& a, const Image8& b) const;

  static constexpr int kLayers = 3;
  static constexpr int kChannels = 8;

 private:
  std::vector<Eigen::MatrixXd> conv_;  // kChannels x 3 per layer
  std::vector<Eigen::VectorXd> weights_;
  std::uint64_t seed_;
};

class ToyInceptionFeatures : public InceptionFeatureClient {
 public:
  explicit ToyInceptionFeatures(Eigen::Index dim = 16, std::uint64_t seed = 19);
  Eigen::VectorXd features(const Image8& image) override;
  std::string model_id() const override;

 private:
  Eigen::MatrixXd projection_;
  std::uint64_t seed_;
};

// Returns a fixed score, or reports itself unavailable when none is set.
class StubHpsClient : public HpsClient {
 public:
  explicit StubHpsClient(std::optional<double> value,
                         std::string version = "stub-hps")
      : value_(value), version_(std::move(version)) {}
  HpsScore score(const Image8& image, const std::string& prompt) override;

 private:
  std::optional<double> value_;
  std::string version_;
};

// 4x4 block means of each channel, scaled to [-1, 1]; 48 values.
Eigen::VectorXd pooled_color_grid(const Image8& image);

Eigen::MatrixXd seeded_gaussian(Eigen::Index rows, Eigen::Index cols,
                                std::uint64_t seed, double stddev);

}  // namespace exedit
