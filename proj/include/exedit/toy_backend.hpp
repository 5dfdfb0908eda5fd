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

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "exedit/backend.hpp"
#include "exedit/toy_clients.hpp"

namespace exedit {

enum class ToyPredictor {
  kZero,    // eps = 0
  kLinear,  // eps = A z + W_ctx mean(context)
  kTiny,    // linear part plus the attention network's output
};

inline ToyPredictor parse_toy_predictor(const std::string& name);
inline const char* to_string(ToyPredictor predictor);

struct ToyConfig {
  ToyPredictor predictor = ToyPredictor::kTiny;
  std::uint64_t seed = 7;
  int residual_blocks = 12;
  int attention_layers = 12;
  int hidden = 8;
  Eigen::Index context_width = 16;
  Eigen::Index resolution = 16;
  double linear_scale = 0.1;
  double context_scale = 0.5;
  double output_scale = 0.2;
  ScheduleParams schedule;
};

// In-repo denoiser with the same hook surface as a real latent diffusion
// model. The codec is the identity on 8-bit pixels (z = (v - 128) / 128,
// three channels, one token per pixel). The network is a stack of levels;
// level i holds residual block i, self-attention block i and a
// cross-attention block over the context:
//
//   h   = W_in z + temb(t)
//   h  += 0.5 tanh(R_i h)                       residual-up i   (feature site)
//   h  += Wo_i  V_i softmax(Q_i^T K_i / sqrt d)^T   self-attention i (Q,K site)
//   h  += Woc_i Vc_i softmax(Qc_i^T Kc_i / sqrt d)^T cross-attention i
//   eps = A z + W_ctx mean_rows(context) + W_out h
//
// The zero and linear predictors still run the network so every hook site
// fires; they just drop the terms they do not include.
template <typename Scalar>
class ToyBackend : public BackendHandle<Scalar> {
 public:
  explicit ToyBackend(ToyConfig config = {}) : config_(std::move(config)) {
    if (config_.hidden < 1 || config_.context_width < 1 ||
        config_.resolution < 1 || config_.residual_blocks < 0 ||
        config_.attention_layers < 0) {
      throw ConfigError("toy backend: invalid dimensions");
    }
    const int d = config_.hidden;
    const auto dc = config_.context_width;
    const double sd = 1.0 / std::sqrt(static_cast<double>(d));
    const double sc = 1.0 / std::sqrt(static_cast<double>(dc));
    std::uint64_t next = config_.seed * 1000003ULL;
    auto param = [&](Eigen::Index r, Eigen::Index c, double stddev) {
      return seeded_gaussian(r, c, next++, stddev).cast<Scalar>().eval();
    };
    w_in_ = param(d, kChannels, 1.0 / std::sqrt(double(kChannels)));
    for (int i = 0; i < config_.residual_blocks; ++i)
      residual_.push_back(param(d, d, sd));
    for (int i = 0; i < config_.attention_layers; ++i) {
      wq_.push_back(param(d, d, sd));
      wk_.push_back(param(d, d, sd));
      wv_.push_back(param(d, d, sd));
      wo_.push_back(param(d, d, 0.5 * sd));
      wqc_.push_back(param(d, d, sd));
      wkc_.push_back(param(d, dc, sc));
      wvc_.push_back(param(d, dc, sc));
      woc_.push_back(param(d, d, 0.5 * sd));
    }
    a_lin_ = param(kChannels, kChannels,
                   config_.linear_scale / std::sqrt(double(kChannels)));
    w_ctx_ = param(kChannels, dc, config_.context_scale * sc);
    w_out_ = param(kChannels, d, config_.output_scale * sd);
  }

  static constexpr Eigen::Index kChannels = 3;

  const ToyConfig& config() const { return config_; }
  // The fixed channel-mixing matrix of the linear term.
  const Matrix<Scalar>& linear_matrix() const { return a_lin_; }

  std::string id() const override {
    return std::string("toy/") + to_string(config_.predictor) + "/s" +
           std::to_string(config_.seed) + "/r" +
           std::to_string(config_.residual_blocks) + "a" +
           std::to_string(config_.attention_layers) + "h" +
           std::to_string(config_.hidden) + "c" +
           std::to_string(config_.context_width);
  }

  LayerCatalog layer_catalog() const override {
    LayerCatalog catalog;
    const int levels =
        std::max(config_.residual_blocks, config_.attention_layers);
    int position = 0;
    for (int i = 0; i < levels; ++i) {
      if (i < config_.residual_blocks) {
        catalog.push_back({position++, LayerKind::kResidualUp, i,
                           "up." + std::to_string(i) + ".res"});
      }
      if (i < config_.attention_layers) {
        catalog.push_back({position++, LayerKind::kSelfAttention, i,
                           "up." + std::to_string(i) + ".attn1"});
      }
    }
    return catalog;
  }

  ScheduleParams schedule_params() const override { return config_.schedule; }
  Eigen::Index context_width() const override { return config_.context_width; }
  Eigen::Index resolution() const override { return config_.resolution; }
  std::uint64_t seed() const override { return config_.seed; }

  Matrix<Scalar> unconditional_context() override {
    return Matrix<Scalar>::Zero(1, config_.context_width);
  }

  LatentState<Scalar> encode_image(const Image8& image) override {
    if (image.width() != config_.resolution ||
        image.height() != config_.resolution) {
      throw DimensionError("toy encode: expected " +
                           std::to_string(config_.resolution) + "x" +
                           std::to_string(config_.resolution) + ", got " +
                           shape_string(image));
    }
    LatentState<Scalar> out;
    out.height = image.height();
    out.width = image.width();
    out.z.resize(kChannels, out.height * out.width);
    for (int c = 0; c < kChannels; ++c) {
      const auto plane = image.plane(c).template cast<Scalar>();
      for (Eigen::Index r = 0; r < out.height; ++r)
        for (Eigen::Index col = 0; col < out.width; ++col)
          out.z(c, r * out.width + col) =
              (plane(r, col) - Scalar(128)) / Scalar(128);
    }
    return out;
  }

  Image8 decode_latent(const LatentState<Scalar>& latent) override {
    if (latent.channels() != kChannels ||
        latent.z.cols() != latent.height * latent.width) {
      throw DimensionError("toy decode: latent shape mismatch");
    }
    Image<Scalar> img(latent.width, latent.height);
    for (int c = 0; c < kChannels; ++c)
      for (Eigen::Index r = 0; r < latent.height; ++r)
        for (Eigen::Index col = 0; col < latent.width; ++col)
          img(c, r, col) =
              latent.z(c, r * latent.width + col) * Scalar(128) + Scalar(128);
    return to_image8(img);
  }

  Matrix<Scalar> predict_noise(const LatentState<Scalar>& latent, int timestep,
                               const Matrix<Scalar>& context,
                               const StepHooks<Scalar>& hooks) override {
    if (latent.channels() != kChannels) {
      throw DimensionError("toy predict: expected 3 latent channels");
    }
    if (context.cols() != config_.context_width) {
      throw DimensionError("toy predict: context width " +
                           std::to_string(context.cols()) + " != " +
                           std::to_string(config_.context_width));
    }
    const Matrix<Scalar>& z = latent.z;
    Matrix<Scalar> h = w_in_ * z;
    h.colwise() += time_embedding(timestep);

    const int levels =
        std::max(config_.residual_blocks, config_.attention_layers);
    for (int i = 0; i < levels; ++i) {
      if (i < config_.residual_blocks) residual_site(i, h, hooks);
      if (i < config_.attention_layers) {
        self_attention_site(i, h, hooks);
        cross_attention(i, h, context);
      }
    }

    Matrix<Scalar> eps = Matrix<Scalar>::Zero(kChannels, z.cols());
    if (config_.predictor == ToyPredictor::kZero) return eps;
    eps.noalias() += a_lin_ * z;
    if (context.rows() > 0) {
      const Vector<Scalar> mean_ctx = context.colwise().mean().transpose();
      eps.colwise() += w_ctx_ * mean_ctx;
    }
    if (config_.predictor == ToyPredictor::kTiny) eps.noalias() += w_out_ * h;
    return eps;
  }

 private:
  Vector<Scalar> time_embedding(int t) const {
    const int d = config_.hidden;
    Vector<Scalar> e(d);
    for (int j = 0; j < d; ++j) {
      const double freq = std::pow(10000.0, -static_cast<double>(j / 2 * 2) / d);
      e(j) = static_cast<Scalar>(j % 2 == 0 ? std::sin(t * freq)
                                            : std::cos(t * freq));
    }
    return e;
  }

  static void softmax_rows(Matrix<Scalar>& logits) {
    const Vector<Scalar> row_max = logits.rowwise().maxCoeff();
    logits.colwise() -= row_max;
    logits = logits.array().exp().matrix();
    const Vector<Scalar> row_sum = logits.rowwise().sum();
    logits = row_sum.cwiseInverse().asDiagonal() * logits;
  }

  void residual_site(int i, Matrix<Scalar>& h,
                     const StepHooks<Scalar>& hooks) const {
    h += Scalar(0.5) * (residual_[i] * h).array().tanh().matrix();
    const bool active = hooks.feature_layer == i;
    bool replaced = false;
    if (active && hooks.inject && hooks.inject->feature) {
      const Matrix<Scalar>& f = *hooks.inject->feature;
      if (f.rows() != h.rows() || f.cols() != h.cols()) {
        throw InjectionShapeError(
            "feature shape mismatch at step " + std::to_string(hooks.step) +
                ", layer " + std::to_string(i),
            hooks.step, i);
      }
      h = f;
      replaced = true;
    }
    if (active && hooks.capture) hooks.capture->feature = h;
    if (hooks.tap) hooks.tap->on_feature(hooks.step, i, replaced, h);
  }

  void self_attention_site(int i, Matrix<Scalar>& h,
                           const StepHooks<Scalar>& hooks) const {
    Matrix<Scalar> q = wq_[i] * h;
    Matrix<Scalar> k = wk_[i] * h;
    Matrix<Scalar> v = wv_[i] * h;
    const bool active = hooks.attn_active(i);
    bool replaced = false;
    if (active && hooks.inject) {
      auto it = hooks.inject->qk.find(i);
      if (it != hooks.inject->qk.end()) {
        const Matrix<Scalar>& rq = *it->second.first;
        const Matrix<Scalar>& rk = *it->second.second;
        if (rq.rows() != q.rows() || rq.cols() != q.cols() ||
            rk.rows() != k.rows() || rk.cols() != k.cols()) {
          throw InjectionShapeError(
              "Q/K shape mismatch at step " + std::to_string(hooks.step) +
                  ", layer " + std::to_string(i),
              hooks.step, i);
        }
        q = rq;
        k = rk;
        replaced = true;
      }
    }
    if (active && hooks.capture) hooks.capture->attention[i] = {q, k, v};
    if (hooks.tap) hooks.tap->on_self_attention(hooks.step, i, replaced, q, k);

    using std::sqrt;
    Matrix<Scalar> logits =
        (q.transpose() * k) / sqrt(static_cast<Scalar>(config_.hidden));
    softmax_rows(logits);
    h.noalias() += wo_[i] * (v * logits.transpose());
  }

  void cross_attention(int i, Matrix<Scalar>& h,
                       const Matrix<Scalar>& context) const {
    if (context.rows() == 0) return;
    const Matrix<Scalar> q = wqc_[i] * h;
    const Matrix<Scalar> k = wkc_[i] * context.transpose();
    const Matrix<Scalar> v = wvc_[i] * context.transpose();
    using std::sqrt;
    Matrix<Scalar> logits =
        (q.transpose() * k) / sqrt(static_cast<Scalar>(config_.hidden));
    softmax_rows(logits);
    h.noalias() += woc_[i] * (v * logits.transpose());
  }

  ToyConfig config_;
  Matrix<Scalar> w_in_;
  std::vector<Matrix<Scalar>> residual_;
  std::vector<Matrix<Scalar>> wq_, wk_, wv_, wo_;
  std::vector<Matrix<Scalar>> wqc_, wkc_, wvc_, woc_;
  Matrix<Scalar> a_lin_;
  Matrix<Scalar> w_ctx_;
  Matrix<Scalar> w_out_;
};

inline ToyPredictor parse_toy_predictor(const std::string& name) {
  if (name == "zero") return ToyPredictor::kZero;
  if (name == "linear") return ToyPredictor::kLinear;
  if (name == "tiny") return ToyPredictor::kTiny;
  throw ConfigError("unknown toy predictor '" + name +
                    "' (expected zero, linear or tiny)");
}

inline const char* to_string(ToyPredictor predictor) {
  switch (predictor) {
    case ToyPredictor::kZero:
      return "zero";
    case ToyPredictor::kLinear:
      return "linear";
    case ToyPredictor::kTiny:
      return "tiny";
  }
  return "?";
}

}  // namespace exedit
