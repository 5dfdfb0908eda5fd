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

#include "exedit/schedule.hpp"

#include <cmath>
#include <cstring>
#include <sstream>

#include "exedit/errors.hpp"
#include "exedit/image_io.hpp"

namespace exedit {

std::vector<int> uniform_subsequence(int train_steps, int sampling_steps) {
  if (sampling_steps < 1 || sampling_steps > train_steps - 1) {
    throw ScheduleError("sampling steps must be in [1, " +
                        std::to_string(train_steps - 1) + "]");
  }
  std::vector<int> seq;
  seq.reserve(static_cast<size_t>(sampling_steps) + 1);
  for (int i = 0; i <= sampling_steps; ++i) {
    seq.push_back(static_cast<int>(std::lround(
        static_cast<double>(i) * (train_steps - 1) / sampling_steps)));
  }
  return seq;
}

NoiseSchedule::NoiseSchedule(Eigen::VectorXd alphas_bar,
                             std::vector<int> subsequence)
    : alphas_bar_(std::move(alphas_bar)), subsequence_(std::move(subsequence)) {
  if (alphas_bar_.size() < 2) throw ScheduleError("schedule too short");
  for (Eigen::Index t = 0; t < alphas_bar_.size(); ++t) {
    const double a = alphas_bar_(t);
    if (!(a > 0.0 && a <= 1.0)) {
      throw ScheduleError("alpha_bar[" + std::to_string(t) +
                          "] outside (0, 1]");
    }
    if (t > 0 && !(a < alphas_bar_(t - 1))) {
      throw ScheduleError("alpha_bar not strictly decreasing at t=" +
                          std::to_string(t));
    }
  }
  if (subsequence_.size() < 2) {
    throw ScheduleError("subsequence needs at least two timesteps");
  }
  for (size_t i = 0; i < subsequence_.size(); ++i) {
    const int t = subsequence_[i];
    if (t < 0 || t >= alphas_bar_.size()) {
      throw ScheduleError("subsequence index out of range: " +
                          std::to_string(t));
    }
    if (i > 0 && t <= subsequence_[i - 1]) {
      throw ScheduleError("subsequence not strictly ascending");
    }
  }

  std::ostringstream buf;
  buf.precision(17);
  for (int t : subsequence_) buf << t << ':' << alphas_bar_(t) << ';';
  hash_ = sha256_hex(buf.str());
}

NoiseSchedule NoiseSchedule::from_params(const ScheduleParams& params,
                                         int sampling_steps) {
  const int T = params.train_steps;
  if (T < 2) throw ScheduleError("train_steps must be >= 2");
  Eigen::VectorXd betas;
  if (params.kind == "scaled_linear") {
    betas = Eigen::VectorXd::LinSpaced(T, std::sqrt(params.beta_start),
                                       std::sqrt(params.beta_end))
                .array()
                .square();
  } else if (params.kind == "linear") {
    betas = Eigen::VectorXd::LinSpaced(T, params.beta_start, params.beta_end);
  } else {
    throw ScheduleError("unknown beta schedule '" + params.kind + "'");
  }
  Eigen::VectorXd alphas_bar(T);
  double prod = 1.0;
  for (int t = 0; t < T; ++t) {
    prod *= 1.0 - betas(t);
    alphas_bar(t) = prod;
  }
  return NoiseSchedule(std::move(alphas_bar),
                       uniform_subsequence(T, sampling_steps));
}

}  // namespace exedit
