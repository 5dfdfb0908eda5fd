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

#include <string>
#include <vector>

namespace exedit {

// Training-time beta schedule as published in a model's metadata.
struct ScheduleParams {
  std::string kind = "scaled_linear";  // or "linear"
  int train_steps = 1000;
  double beta_start = 0.00085;
  double beta_end = 0.012;
};

// Cumulative alpha products over the training timesteps plus the ascending
// DDIM subsequence. The subsequence has steps()+1 entries; position 0 is the
// clean end, position steps() the noisiest.
class NoiseSchedule {
 public:
  // Throws ScheduleError unless alphas_bar is in (0, 1] and strictly
  // decreasing, and the subsequence is strictly ascending within range.
  NoiseSchedule(Eigen::VectorXd alphas_bar, std::vector<int> subsequence);

  static NoiseSchedule from_params(const ScheduleParams& params,
                                   int sampling_steps);

  int steps() const { return static_cast<int>(subsequence_.size()) - 1; }
  int train_steps() const { return static_cast<int>(alphas_bar_.size()); }
  const Eigen::VectorXd& alphas_bar() const { return alphas_bar_; }
  const std::vector<int>& subsequence() const { return subsequence_; }

  int timestep(int position) const { return subsequence_.at(position); }
  double alpha_bar_at(int position) const {
    return alphas_bar_(subsequence_.at(position));
  }

  // Digest over the subsequence and the alpha values it visits.
  const std::string& hash() const { return hash_; }

 private:
  Eigen::VectorXd alphas_bar_;
  std::vector<int> subsequence_;
  std::string hash_;
};

// round(i * (T - 1) / steps) for i = 0..steps.
std::vector<int> uniform_subsequence(int train_steps, int sampling_steps);

}  // namespace exedit
