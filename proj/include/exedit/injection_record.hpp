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
#include <string>
#include <utility>

#include "exedit/backend.hpp"

namespace exedit {

struct RecordMetadata {
  std::string schedule_hash;
  std::string backend_id;
  int steps = 0;
  std::uint64_t seed = 0;
  HookSpec hook_spec;
};

// Tensors captured by the recording run, keyed by sampling step (0 = first,
// noisiest step) and self-attention layer index.
template <typename Scalar>
struct InjectionRecord {
  using Key = std::pair<int, int>;  // (step, layer)

  std::map<int, Matrix<Scalar>> features;
  std::map<Key, std::pair<Matrix<Scalar>, Matrix<Scalar>>> self_attn;
  // Captured alongside Q and K; never injected.
  std::map<Key, Matrix<Scalar>> v_tensors;
  RecordMetadata metadata;

  size_t feature_count() const { return features.size(); }
  size_t qk_pair_count() const { return self_attn.size(); }

  // Keys must cover exactly the steps and layers the hook spec declares.
  void check_complete() const {
    const HookSpec& spec = metadata.hook_spec;
    const int eff = spec.effective_steps(metadata.steps);
    const auto layers = spec.attn_layers();
    if (features.size() != static_cast<size_t>(eff) ||
        self_attn.size() != static_cast<size_t>(eff) * layers.size()) {
      throw HookError("record holds " + std::to_string(features.size()) +
                      " features / " + std::to_string(self_attn.size()) +
                      " Q,K pairs; expected " + std::to_string(eff) + " / " +
                      std::to_string(eff * static_cast<int>(layers.size())));
    }
    for (int s = 0; s < eff; ++s) {
      if (!features.count(s)) {
        throw HookError("record missing feature at step " + std::to_string(s));
      }
      for (int l : layers) {
        auto it = self_attn.find({s, l});
        if (it == self_attn.end()) {
          throw HookError("record missing Q,K at step " + std::to_string(s) +
                          ", layer " + std::to_string(l));
        }
        if (it->second.first.rows() != it->second.second.rows()) {
          throw HookError("record Q,K row mismatch at step " +
                          std::to_string(s) + ", layer " + std::to_string(l));
        }
      }
    }
  }

  StepInjection<Scalar> injection_for(int step) const {
    StepInjection<Scalar> inj;
    auto f = features.find(step);
    if (f == features.end()) {
      throw HookError("record has no feature for step " + std::to_string(step));
    }
    inj.feature = &f->second;
    for (int l : metadata.hook_spec.attn_layers()) {
      auto it = self_attn.find({step, l});
      if (it == self_attn.end()) {
        throw HookError("record has no Q,K for step " + std::to_string(step) +
                        ", layer " + std::to_string(l));
      }
      inj.qk[l] = {&it->second.first, &it->second.second};
    }
    return inj;
  }
};

}  // namespace exedit
