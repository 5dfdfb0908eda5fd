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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "exedit/edit_capture.hpp"
#include "exedit/errors.hpp"
#include "exedit/image.hpp"
#include "exedit/schedule.hpp"

namespace exedit {

enum class LayerKind { kResidualUp, kSelfAttention };

inline const char* to_string(LayerKind kind) {
  return kind == LayerKind::kResidualUp ? "residual-up" : "self-attention";
}

// One hookable site on the denoiser's upsampling path. position counts every
// site in execution order; kind_index counts sites of the same kind. Both are
// 0-based. Feature hooks address residual blocks by kind_index, attention
// hooks address self-attention blocks by kind_index.
struct LayerInfo {
  int position = 0;
  LayerKind kind = LayerKind::kResidualUp;
  int kind_index = 0;
  std::string name;

  friend bool operator==(const LayerInfo&, const LayerInfo&) = default;
};

using LayerCatalog = std::vector<LayerInfo>;

inline int count_kind(const LayerCatalog& catalog, LayerKind kind) {
  return static_cast<int>(std::count_if(
      catalog.begin(), catalog.end(),
      [kind](const LayerInfo& l) { return l.kind == kind; }));
}

// Latent tensor flattened to channels x (height * width), row-major spatial.
template <typename Scalar>
struct LatentState {
  Matrix<Scalar> z;
  Eigen::Index height = 0;
  Eigen::Index width = 0;
  int t_index = 0;

  Eigen::Index channels() const { return z.rows(); }
};

enum class HookMode { kRecord, kInject };

struct HookSpec {
  int feature_layer = 4;
  int attn_first = 4;
  int attn_last = 11;  // inclusive
  HookMode mode = HookMode::kRecord;
  double step_fraction = 1.0;

  std::vector<int> attn_layers() const {
    std::vector<int> out;
    for (int i = attn_first; i <= attn_last; ++i) out.push_back(i);
    return out;
  }

  // Hooks fire on sampling steps [0, ceil(step_fraction * steps)).
  int effective_steps(int steps) const {
    return static_cast<int>(std::ceil(step_fraction * steps - 1e-9));
  }

  void validate(const LayerCatalog& catalog) const {
    if (!(step_fraction > 0.0 && step_fraction <= 1.0)) {
      throw HookError("step_fraction must be in (0, 1]");
    }
    if (attn_first > attn_last) {
      throw HookError("attention layer range is empty");
    }
    const int residual = count_kind(catalog, LayerKind::kResidualUp);
    const int attention = count_kind(catalog, LayerKind::kSelfAttention);
    if (feature_layer < 0 || feature_layer >= residual) {
      throw HookError("feature layer " + std::to_string(feature_layer) +
                      " not in catalog (" + std::to_string(residual) +
                      " residual-up blocks)");
    }
    if (attn_first < 0 || attn_last >= attention) {
      throw HookError("attention layers " + std::to_string(attn_first) + ".." +
                      std::to_string(attn_last) + " not in catalog (" +
                      std::to_string(attention) + " self-attention blocks)");
    }
  }

  friend bool operator==(const HookSpec&, const HookSpec&) = default;
};

template <typename Scalar>
struct AttentionTensors {
  Matrix<Scalar> q;
  Matrix<Scalar> k;
  Matrix<Scalar> v;
};

// Tensors captured during one denoiser call.
template <typename Scalar>
struct StepCapture {
  Matrix<Scalar> feature;  // empty when the feature site did not fire
  std::map<int, AttentionTensors<Scalar>> attention;
};

// Replacement tensors for one denoiser call. Pointers refer into a record
// that outlives the call.
template <typename Scalar>
struct StepInjection {
  const Matrix<Scalar>* feature = nullptr;
  std::map<int, std::pair<const Matrix<Scalar>*, const Matrix<Scalar>*>> qk;
};

// Observes every hook site, replaced or not. In-process backends only.
template <typename Scalar>
class HookTap {
 public:
  virtual ~HookTap() = default;
  virtual void on_feature(int /*step*/, int /*layer*/, bool /*replaced*/,
                          const Matrix<Scalar>& /*h*/) {}
  virtual void on_self_attention(int /*step*/, int /*layer*/,
                                 bool /*replaced*/, const Matrix<Scalar>& /*q*/,
                                 const Matrix<Scalar>& /*k*/) {}
};

template <typename Scalar>
struct StepHooks {
  int step = -1;
  int feature_layer = -1;  // < 0: feature site inactive
  std::vector<int> attn_layers;
  StepCapture<Scalar>* capture = nullptr;
  const StepInjection<Scalar>* inject = nullptr;
  HookTap<Scalar>* tap = nullptr;

  bool attn_active(int layer) const {
    return std::find(attn_layers.begin(), attn_layers.end(), layer) !=
           attn_layers.end();
  }
};

// Handle to a latent diffusion denoiser. One run at a time per handle.
template <typename Scalar>
class BackendHandle {
 public:
  virtual ~BackendHandle() = default;

  virtual std::string id() const = 0;
  virtual LayerCatalog layer_catalog() const = 0;
  virtual ScheduleParams schedule_params() const = 0;
  virtual Eigen::Index context_width() const = 0;
  virtual Eigen::Index resolution() const = 0;
  virtual std::uint64_t seed() const { return 0; }

  virtual Matrix<Scalar> unconditional_context() = 0;
  // Throws DimensionError unless the image is resolution() x resolution().
  virtual LatentState<Scalar> encode_image(const Image8& image) = 0;
  virtual Image8 decode_latent(const LatentState<Scalar>& latent) = 0;
  virtual Matrix<Scalar> predict_noise(const LatentState<Scalar>& latent,
                                       int timestep,
                                       const Matrix<Scalar>& context,
                                       const StepHooks<Scalar>& hooks) = 0;
};

// The catalog, checked to expose both residual-up and self-attention sites.
template <typename Scalar>
LayerCatalog enumerate_layers(const BackendHandle<Scalar>& backend) {
  LayerCatalog catalog = backend.layer_catalog();
  if (count_kind(catalog, LayerKind::kResidualUp) == 0) {
    throw UnsupportedBackendError(backend.id() + ": no upsampling path");
  }
  if (count_kind(catalog, LayerKind::kSelfAttention) == 0) {
    throw UnsupportedBackendError(backend.id() +
                                  ": no self-attention layers");
  }
  return catalog;
}

}  // namespace exedit
