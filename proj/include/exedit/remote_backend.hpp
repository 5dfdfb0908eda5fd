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

#include <string>

#include "exedit/backend.hpp"
#include "exedit/http_clients.hpp"

namespace exedit {

// A denoiser hosted by a model server (e.g. a pretrained latent diffusion
// UNet with hooks installed). DDIM, hook bookkeeping and injection stay
// client-side; the server evaluates one noise prediction at a time, applying
// the injections it is sent and returning what it was asked to capture.
// Hook taps are not forwarded.
class RemoteBackend : public BackendHandle<double> {
 public:
  // Fetches /info; throws LoadError when the server is unreachable.
  RemoteBackend(const std::string& endpoint, double timeout_s,
                std::string tensor_dtype = "f64");

  std::string id() const override { return id_; }
  LayerCatalog layer_catalog() const override { return catalog_; }
  ScheduleParams schedule_params() const override { return schedule_; }
  Eigen::Index context_width() const override { return context_width_; }
  Eigen::Index resolution() const override { return resolution_; }
  std::uint64_t seed() const override { return seed_; }
  Eigen::MatrixXd unconditional_context() override { return uncond_; }

  LatentState<double> encode_image(const Image8& image) override;
  Image8 decode_latent(const LatentState<double>& latent) override;
  Eigen::MatrixXd predict_noise(const LatentState<double>& latent,
                                int timestep, const Eigen::MatrixXd& context,
                                const StepHooks<double>& hooks) override;

 private:
  HttpJsonClient http_;
  std::string dtype_;
  std::string id_;
  LayerCatalog catalog_;
  ScheduleParams schedule_;
  Eigen::Index context_width_ = 0;
  Eigen::Index resolution_ = 0;
  std::uint64_t seed_ = 0;
  Eigen::MatrixXd uncond_;
};

}  // namespace exedit
