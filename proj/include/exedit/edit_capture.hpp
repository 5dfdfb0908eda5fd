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

#include <cmath>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>

#include "exedit/clients.hpp"
#include "exedit/errors.hpp"
#include "exedit/image.hpp"

namespace exedit {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

// An exemplar pair, the image to edit, and (for evaluation only) the
// expected result.
struct ExemplarTask {
  std::string id;
  Image8 x;
  Image8 x_edit;
  Image8 y;
  std::optional<Image8> y_edit;
};

// Resizes every image of the task to resolution x resolution.
ExemplarTask preprocess_task(ExemplarTask task, Eigen::Index resolution);

// VLM prompt templates. Slots are written {name}; the known slots are
// {edit_description} (required in p2) and {max_words}.
struct PromptTemplates {
  std::string name = "v1";
  std::string p1;        // edit description over the exemplar grid
  std::string p2;        // caption of the edited target
  std::string p_source;  // caption of the unedited target
  int max_caption_words = 20;

  // name plus a digest of the three template texts.
  std::string version() const;
  void validate() const;

  static PromptTemplates defaults();
  static PromptTemplates load(const std::filesystem::path& p1,
                              const std::filesystem::path& p2,
                              const std::filesystem::path& p_source,
                              std::string name, int max_caption_words);
};

std::string render_template(const std::string& tmpl,
                            const std::map<std::string, std::string>& slots);

struct EditText {
  std::string g_text;
  std::string g_caption;
  std::string prompt_version;
  bool caption_truncated = false;
};

struct CaptionResult {
  std::string text;
  bool truncated = false;
};

std::string trim(const std::string& s);
int word_count(const std::string& s);
// Keeps the first max_words whitespace-delimited words.
CaptionResult truncate_words(const std::string& text, int max_words);

std::string describe_edit(const Image8& grid, const PromptTemplates& templates,
                          VlmClient& vlm);

CaptionResult caption_edited_target(const Image8& y, const std::string& g_text,
                                    const PromptTemplates& templates,
                                    VlmClient& vlm);

// Caption of the unedited image; the source side of directional similarity.
CaptionResult caption_source(const Image8& y, const PromptTemplates& templates,
                             VlmClient& vlm);

// E_img(x_edit) - E_img(x), before pooling.
Eigen::VectorXd compute_image_delta(const Image8& x, const Image8& x_edit,
                                    ImageEncoderClient& encoder);

// Resamples the delta to d_ctx entries by linear interpolation over its index
// axis (end points aligned) and replicates it across k rows.
template <typename Derived>
Matrix<typename Derived::Scalar> pool_to_context(
    const Eigen::MatrixBase<Derived>& delta, Eigen::Index d_ctx,
    Eigen::Index k) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index d_img = delta.size();
  if (d_img < 1 || d_ctx < 1 || k < 1) {
    throw PreconditionError("pool_to_context: d_img, d_ctx and k must be >= 1");
  }
  if (!delta.allFinite()) {
    throw NumericError("pool_to_context: non-finite delta");
  }
  Eigen::Matrix<Scalar, 1, Eigen::Dynamic> row(d_ctx);
  for (Eigen::Index j = 0; j < d_ctx; ++j) {
    const double pos =
        d_ctx == 1 ? 0.5 * static_cast<double>(d_img - 1)
                   : static_cast<double>(j * (d_img - 1)) /
                         static_cast<double>(d_ctx - 1);
    const auto i0 = static_cast<Eigen::Index>(std::floor(pos));
    const Scalar w = static_cast<Scalar>(pos - static_cast<double>(i0));
    if (i0 + 1 >= d_img || w == Scalar(0)) {
      row(j) = delta(i0);
    } else {
      row(j) = (Scalar(1) - w) * delta(i0) + w * delta(i0 + 1);
    }
  }
  return row.replicate(k, 1);
}

// g: pooled image delta tokens stacked above the encoded caption tokens.
template <typename Scalar>
struct EditEmbedding {
  Matrix<Scalar> delta_tokens;
  Matrix<Scalar> text_tokens;
  Matrix<Scalar> combined;

  Eigen::Index k() const { return delta_tokens.rows(); }
  Eigen::Index n_text() const { return text_tokens.rows(); }
  Eigen::Index width() const { return combined.cols(); }
};

template <typename Scalar>
EditEmbedding<Scalar> assemble_edit_embedding(Matrix<Scalar> delta_tokens,
                                              Matrix<Scalar> text_tokens) {
  if (delta_tokens.cols() != text_tokens.cols()) {
    throw DimensionError("edit embedding: delta width " +
                         std::to_string(delta_tokens.cols()) +
                         " != text width " +
                         std::to_string(text_tokens.cols()));
  }
  if (!delta_tokens.allFinite() || !text_tokens.allFinite()) {
    throw NumericError("edit embedding: non-finite entries");
  }
  Matrix<Scalar> combined(delta_tokens.rows() + text_tokens.rows(),
                          delta_tokens.cols());
  combined << delta_tokens, text_tokens;
  return {std::move(delta_tokens), std::move(text_tokens),
          std::move(combined)};
}

template <typename Scalar>
struct CaptureResult {
  EditText text;
  EditEmbedding<Scalar> embedding;
  std::string image_encoder_id;
  std::string text_encoder_id;
};

// Text side (VLM description and caption) plus image side (pooled embedding
// delta), concatenated into g.
template <typename Scalar>
CaptureResult<Scalar> capture_edit(const ExemplarTask& task,
                                   const PromptTemplates& templates,
                                   VlmClient& vlm, ImageEncoderClient& enc_img,
                                   TextEncoderClient& enc_text,
                                   Eigen::Index k_delta_tokens) {
  CaptureResult<Scalar> out;
  const Image8 grid = with_stage(
      "grid", [&] { return compose_exemplar_grid(task.x, task.x_edit); });
  out.text.prompt_version = templates.version();
  out.text.g_text = with_stage(
      "describe_edit", [&] { return describe_edit(grid, templates, vlm); });
  const CaptionResult caption = with_stage("caption_edited_target", [&] {
    return caption_edited_target(task.y, out.text.g_text, templates, vlm);
  });
  out.text.g_caption = caption.text;
  out.text.caption_truncated = caption.truncated;

  const Eigen::MatrixXd text_tokens = with_stage(
      "encode_text", [&] { return enc_text.encode_tokens(out.text.g_caption); });
  const Eigen::VectorXd delta = with_stage("image_delta", [&] {
    return compute_image_delta(task.x, task.x_edit, enc_img);
  });
  Matrix<Scalar> delta_tokens = with_stage("pool", [&] {
    return pool_to_context(delta.cast<Scalar>(), text_tokens.cols(),
                           k_delta_tokens);
  });
  out.embedding = with_stage("assemble", [&] {
    return assemble_edit_embedding<Scalar>(std::move(delta_tokens),
                                           text_tokens.cast<Scalar>());
  });
  out.image_encoder_id = enc_img.model_id();
  out.text_encoder_id = enc_text.model_id();
  return out;
}

}  // namespace exedit
