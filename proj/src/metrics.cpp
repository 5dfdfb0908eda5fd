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

#include "exedit/metrics.hpp"

#include <numeric>

#include "exedit/logging.hpp"

namespace exedit {

double clip_score(const Image8& image, const std::string& caption,
                  ImageEncoderClient& enc_img, TextEncoderClient& enc_text) {
  const Eigen::VectorXd ei = with_external_model(
      enc_img.model_id(), [&] { return enc_img.embed_image(image); });
  const Eigen::VectorXd et = with_external_model(
      enc_text.model_id(), [&] { return enc_text.embed_text(caption); });
  if (ei.size() != et.size()) {
    throw ExternalModelError("clip_score: image and text embeddings differ in "
                             "size (" + std::to_string(ei.size()) + " vs " +
                             std::to_string(et.size()) + ")");
  }
  return clip_score_from_embeddings(ei, et);
}

DirectionScore directional_similarity(const Image8& y, const Image8& y_edit_hat,
                                      const std::string& caption_src,
                                      const std::string& caption_tgt,
                                      ImageEncoderClient& enc_img,
                                      TextEncoderClient& enc_text) {
  if (trim(caption_src).empty() || trim(caption_tgt).empty()) {
    throw PreconditionError("directional_similarity: empty caption");
  }
  const Eigen::VectorXd d_img =
      with_external_model(enc_img.model_id(), [&] {
        return Eigen::VectorXd(enc_img.embed_image(y_edit_hat) -
                               enc_img.embed_image(y));
      });
  const Eigen::VectorXd d_txt =
      with_external_model(enc_text.model_id(), [&] {
        return Eigen::VectorXd(enc_text.embed_text(caption_tgt) -
                               enc_text.embed_text(caption_src));
      });
  if (d_img.size() != d_txt.size()) {
    throw ExternalModelError("directional_similarity: embedding sizes differ");
  }
  return direction_score(d_img, d_txt);
}

DirectionScore s_visual(const Image8& x, const Image8& x_edit, const Image8& y,
                        const Image8& y_edit_hat, ImageEncoderClient& enc_img) {
  const Eigen::VectorXd exemplar = compute_image_delta(x, x_edit, enc_img);
  const Eigen::VectorXd produced = compute_image_delta(y, y_edit_hat, enc_img);
  if (exemplar.size() != produced.size()) {
    throw ExternalModelError("s_visual: embedding sizes differ");
  }
  return direction_score(exemplar, produced);
}

std::optional<HpsScore> hps(const Image8& image, const std::string& prompt,
                            HpsClient* scorer) {
  if (!scorer) return std::nullopt;
  try {
    return scorer->score(image, prompt);
  } catch (const ServiceError& e) {
    logger().warn("hps scorer unavailable: {}", e.what());
    return std::nullopt;
  }
}

Aggregate aggregate(const std::vector<double>& values) {
  Aggregate a;
  a.n = static_cast<int>(values.size());
  if (values.empty()) return a;
  const double n = static_cast<double>(values.size());
  a.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : values) ss += (v - a.mean) * (v - a.mean);
  const double stddev = std::sqrt(ss / n);
  if (std::abs(a.mean) >= kCvMeanGuard) a.cv = stddev / a.mean;
  return a;
}

}  // namespace exedit
