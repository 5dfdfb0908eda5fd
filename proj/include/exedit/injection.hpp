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
#include <utility>
#include <vector>

#include "exedit/ddim.hpp"
#include "exedit/edit_capture.hpp"

// Two-pass structure-preserving edit: an unconditional recording pass over
// the inverted target, then a pass conditioned on the edit embedding that
// replays the recorded residual feature and self-attention Q/K.

namespace exedit {

struct EditConfig {
  HookSpec hook_spec;
  int steps = 50;
  double guidance_scale = 7.5;
  Eigen::Index k_delta_tokens = 4;
  std::uint64_t seed = 0;
  double divergence_ceiling = kDefaultDivergenceCeiling;

  void validate() const {
    if (steps < 1 || guidance_scale <= 0.0 || k_delta_tokens < 1 ||
        divergence_ceiling <= 0.0) {
      throw ConfigError(
          "edit config: steps, guidance_scale, k_delta_tokens and "
          "divergence_ceiling must be positive");
    }
  }
};

template <typename Scalar>
struct RecordingResult {
  InjectionRecord<Scalar> record;
  LatentState<Scalar> reconstruction;
  std::vector<LatentState<Scalar>> trajectory;
};

template <typename Scalar>
RecordingResult<Scalar> record_source_run(
    const LatentState<Scalar>& y_noise, const NoiseSchedule& schedule,
    BackendHandle<Scalar>& backend, HookSpec hook_spec,
    double divergence_ceiling = kDefaultDivergenceCeiling,
    HookTap<Scalar>* tap = nullptr) {
  hook_spec.mode = HookMode::kRecord;
  SampleOptions<Scalar> opts;
  opts.hooks = &hook_spec;
  opts.tap = tap;
  opts.divergence_ceiling = divergence_ceiling;
  SampleResult<Scalar> run =
      ddim_sample<Scalar>(y_noise, schedule, nullptr, backend, opts);
  run.record->check_complete();
  return {std::move(*run.record), std::move(run.latent),
          std::move(run.trajectory)};
}

template <typename Scalar>
void check_record_matches(const InjectionRecord<Scalar>& record,
                          const NoiseSchedule& schedule,
                          const BackendHandle<Scalar>& backend,
                          const EditConfig& cfg) {
  const RecordMetadata& m = record.metadata;
  if (m.steps != cfg.steps || schedule.steps() != cfg.steps) {
    throw MetadataMismatchError(
        "record has " + std::to_string(m.steps) + " steps, edit config " +
        std::to_string(cfg.steps) + ", schedule " +
        std::to_string(schedule.steps()));
  }
  if (m.schedule_hash != schedule.hash()) {
    throw MetadataMismatchError("record schedule hash differs from schedule");
  }
  if (m.backend_id != backend.id()) {
    throw MetadataMismatchError("record made on backend '" + m.backend_id +
                                "', editing on '" + backend.id() + "'");
  }
  const HookSpec& a = m.hook_spec;
  const HookSpec& b = cfg.hook_spec;
  if (a.feature_layer != b.feature_layer || a.attn_first != b.attn_first ||
      a.attn_last != b.attn_last || a.step_fraction != b.step_fraction) {
    throw MetadataMismatchError("record hook spec differs from edit config");
  }
}

template <typename Scalar>
LatentState<Scalar> edited_run(const LatentState<Scalar>& y_noise,
                               const EditEmbedding<Scalar>& g,
                               const InjectionRecord<Scalar>& record,
                               const NoiseSchedule& schedule,
                               BackendHandle<Scalar>& backend,
                               const EditConfig& cfg,
                               HookTap<Scalar>* tap = nullptr,
                               std::vector<LatentState<Scalar>>* trajectory =
                                   nullptr) {
  cfg.validate();
  check_record_matches(record, schedule, backend, cfg);
  if (g.width() != backend.context_width()) {
    throw DimensionError("edit embedding width " + std::to_string(g.width()) +
                         " != backend context width " +
                         std::to_string(backend.context_width()));
  }
  HookSpec spec = cfg.hook_spec;
  spec.mode = HookMode::kInject;
  SampleOptions<Scalar> opts;
  opts.hooks = &spec;
  opts.record = &record;
  opts.guidance_scale = cfg.guidance_scale;
  opts.tap = tap;
  opts.divergence_ceiling = cfg.divergence_ceiling;
  SampleResult<Scalar> run =
      ddim_sample<Scalar>(y_noise, schedule, &g.combined, backend, opts);
  if (trajectory) *trajectory = std::move(run.trajectory);
  return std::move(run.latent);
}

}  // namespace exedit
