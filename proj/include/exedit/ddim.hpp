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
#include <optional>
#include <string>
#include <vector>

#include "exedit/backend.hpp"
#include "exedit/injection_record.hpp"
#include "exedit/schedule.hpp"

// Deterministic (eta = 0) DDIM inversion and sampling over a BackendHandle.

namespace exedit {

inline constexpr double kDefaultDivergenceCeiling = 1e4;

// One DDIM update between cumulative alphas a_from and a_to, shared by both
// directions:
//   x0  = (z - sqrt(1 - a_from) * eps) / sqrt(a_from)
//   out = sqrt(a_to) * x0 + sqrt(1 - a_to) * eps
template <typename Scalar>
Matrix<Scalar> ddim_step(const Matrix<Scalar>& z, double a_from, double a_to,
                         const Matrix<Scalar>& eps) {
  using std::sqrt;
  const Scalar from = static_cast<Scalar>(a_from);
  const Scalar to = static_cast<Scalar>(a_to);
  const Matrix<Scalar> x0 = (z - sqrt(Scalar(1) - from) * eps) / sqrt(from);
  return sqrt(to) * x0 + sqrt(Scalar(1) - to) * eps;
}

template <typename Scalar>
void check_latent(const Matrix<Scalar>& z, int step, double ceiling,
                  const char* where) {
  if (!z.allFinite()) {
    throw NumericDivergenceError(std::string(where) +
                                     ": non-finite latent at step " +
                                     std::to_string(step),
                                 step);
  }
  if (z.size() > 0 &&
      static_cast<double>(z.cwiseAbs().maxCoeff()) > ceiling) {
    throw NumericDivergenceError(std::string(where) +
                                     ": latent magnitude above ceiling at step " +
                                     std::to_string(step),
                                 step);
  }
}

template <typename Scalar>
struct InversionResult {
  LatentState<Scalar> noise;
  std::vector<LatentState<Scalar>> trajectory;  // steps + 1 states
};

// Maps a clean latent (t_index 0) to position steps() of the schedule.
// context == nullptr uses the backend's unconditional embedding.
template <typename Scalar>
InversionResult<Scalar> ddim_invert(
    const LatentState<Scalar>& z0, const NoiseSchedule& schedule,
    const Matrix<Scalar>* context, BackendHandle<Scalar>& backend,
    double divergence_ceiling = kDefaultDivergenceCeiling) {
  if (z0.t_index != 0) {
    throw PreconditionError("ddim_invert: latent must start at t_index 0");
  }
  check_latent(z0.z, 0, divergence_ceiling, "ddim_invert");
  const Matrix<Scalar> ctx =
      context ? *context : backend.unconditional_context();

  InversionResult<Scalar> out;
  out.trajectory.reserve(static_cast<size_t>(schedule.steps()) + 1);
  out.trajectory.push_back(z0);
  LatentState<Scalar> cur = z0;
  for (int i = 0; i < schedule.steps(); ++i) {
    StepHooks<Scalar> no_hooks;
    const Matrix<Scalar> eps =
        backend.predict_noise(cur, schedule.timestep(i), ctx, no_hooks);
    cur.z = ddim_step<Scalar>(cur.z, schedule.alpha_bar_at(i),
                              schedule.alpha_bar_at(i + 1), eps);
    cur.t_index = i + 1;
    check_latent(cur.z, i + 1, divergence_ceiling, "ddim_invert");
    out.trajectory.push_back(cur);
  }
  out.noise = cur;
  return out;
}

template <typename Scalar>
struct SampleOptions {
  // Record or inject according to hooks->mode; nullptr runs without hooks.
  const HookSpec* hooks = nullptr;
  // Required in inject mode.
  const InjectionRecord<Scalar>* record = nullptr;
  // Applied only when a context is given: eps_u + s * (eps_c - eps_u).
  double guidance_scale = 1.0;
  HookTap<Scalar>* tap = nullptr;
  double divergence_ceiling = kDefaultDivergenceCeiling;
};

template <typename Scalar>
struct SampleResult {
  LatentState<Scalar> latent;
  std::optional<InjectionRecord<Scalar>> record;
  std::vector<LatentState<Scalar>> trajectory;  // steps + 1 states
};

// Reverse recursion from position steps() down to 0. Sampling step s runs
// from schedule position steps() - s to steps() - s - 1.
template <typename Scalar>
SampleResult<Scalar> ddim_sample(const LatentState<Scalar>& zT,
                                 const NoiseSchedule& schedule,
                                 const Matrix<Scalar>* context,
                                 BackendHandle<Scalar>& backend,
                                 const SampleOptions<Scalar>& options = {}) {
  const int S = schedule.steps();
  if (zT.t_index != S) {
    throw PreconditionError("ddim_sample: latent must start at t_index " +
                            std::to_string(S));
  }
  check_latent(zT.z, 0, options.divergence_ceiling, "ddim_sample");

  const HookSpec* spec = options.hooks;
  const bool recording = spec && spec->mode == HookMode::kRecord;
  const bool injecting = spec && spec->mode == HookMode::kInject;
  if (spec) spec->validate(enumerate_layers(backend));
  if (injecting && !options.record) {
    throw HookError("inject mode needs an injection record");
  }
  const int hooked_steps = spec ? spec->effective_steps(S) : 0;
  const std::vector<int> attn_layers =
      spec ? spec->attn_layers() : std::vector<int>{};

  const Matrix<Scalar> uncond = backend.unconditional_context();
  const bool guided = context && options.guidance_scale != 1.0;
  const Matrix<Scalar>& primary = context ? *context : uncond;

  SampleResult<Scalar> out;
  if (recording) {
    out.record.emplace();
    out.record->metadata = {schedule.hash(), backend.id(), S, backend.seed(),
                            *spec};
  }
  out.trajectory.reserve(static_cast<size_t>(S) + 1);
  out.trajectory.push_back(zT);

  LatentState<Scalar> cur = zT;
  for (int s = 0; s < S; ++s) {
    const int pos = S - s;
    StepHooks<Scalar> hooks;
    hooks.step = s;
    hooks.tap = options.tap;
    StepCapture<Scalar> capture;
    StepInjection<Scalar> injection;
    if (spec && s < hooked_steps) {
      hooks.feature_layer = spec->feature_layer;
      hooks.attn_layers = attn_layers;
      if (recording) hooks.capture = &capture;
      if (injecting) {
        injection = options.record->injection_for(s);
        hooks.inject = &injection;
      }
    }

    const int t = schedule.timestep(pos);
    Matrix<Scalar> eps = backend.predict_noise(cur, t, primary, hooks);
    if (guided) {
      StepHooks<Scalar> uncond_hooks = hooks;
      uncond_hooks.capture = nullptr;
      const Matrix<Scalar> eps_u =
          backend.predict_noise(cur, t, uncond, uncond_hooks);
      eps = eps_u + static_cast<Scalar>(options.guidance_scale) * (eps - eps_u);
    }

    if (hooks.capture) {
      if (capture.feature.size() == 0) {
        throw HookError("backend did not report feature layer " +
                        std::to_string(spec->feature_layer) + " at step " +
                        std::to_string(s));
      }
      out.record->features[s] = std::move(capture.feature);
      for (int l : attn_layers) {
        auto it = capture.attention.find(l);
        if (it == capture.attention.end()) {
          throw HookError("backend did not report self-attention layer " +
                          std::to_string(l) + " at step " + std::to_string(s));
        }
        out.record->self_attn[{s, l}] = {std::move(it->second.q),
                                         std::move(it->second.k)};
        out.record->v_tensors[{s, l}] = std::move(it->second.v);
      }
    }

    cur.z = ddim_step<Scalar>(cur.z, schedule.alpha_bar_at(pos),
                              schedule.alpha_bar_at(pos - 1), eps);
    cur.t_index = pos - 1;
    check_latent(cur.z, s + 1, options.divergence_ceiling, "ddim_sample");
    out.trajectory.push_back(cur);
  }
  out.latent = cur;
  return out;
}

}  // namespace exedit
