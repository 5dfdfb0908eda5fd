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

#include "exedit/toy_clients.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "exedit/errors.hpp"

namespace exedit {
namespace {

std::uint64_t fnv1a(const std::string& s, std::uint64_t salt) {
  std::uint64_t h = 1469598103934665603ULL ^ salt;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::vector<std::string> split_words(const std::string& text) {
  std::istringstream in(text);
  std::vector<std::string> words;
  for (std::string w; in >> w;) words.push_back(w);
  return words;
}

// Block-average downsampling by an integer factor, scaled to [-1, 1].
// Returns 3 x (h*w).
Eigen::MatrixXd downsample(const Image8& image, int factor) {
  const Eigen::Index h = std::max<Eigen::Index>(1, image.height() / factor);
  const Eigen::Index w = std::max<Eigen::Index>(1, image.width() / factor);
  const Eigen::Index fy = std::max<Eigen::Index>(1, image.height() / h);
  const Eigen::Index fx = std::max<Eigen::Index>(1, image.width() / w);
  Eigen::MatrixXd out(3, h * w);
  for (int c = 0; c < 3; ++c) {
    const auto plane = image.plane(c).cast<double>();
    for (Eigen::Index r = 0; r < h; ++r)
      for (Eigen::Index col = 0; col < w; ++col)
        out(c, r * w + col) =
            plane.block(r * fy, col * fx, fy, fx).mean() / 127.5 - 1.0;
  }
  return out;
}

}  // namespace

Eigen::MatrixXd seeded_gaussian(Eigen::Index rows, Eigen::Index cols,
                                std::uint64_t seed, double stddev) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, stddev);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = dist(rng);
  return m;
}

Eigen::VectorXd pooled_color_grid(const Image8& image) {
  if (image.width() < 4 || image.height() < 4) {
    throw DimensionError("pooled_color_grid: image smaller than 4x4");
  }
  Eigen::VectorXd v(48);
  int k = 0;
  for (int c = 0; c < 3; ++c) {
    const auto plane = image.plane(c).cast<double>();
    for (int by = 0; by < 4; ++by) {
      const Eigen::Index r0 = by * image.height() / 4;
      const Eigen::Index r1 = (by + 1) * image.height() / 4;
      for (int bx = 0; bx < 4; ++bx) {
        const Eigen::Index c0 = bx * image.width() / 4;
        const Eigen::Index c1 = (bx + 1) * image.width() / 4;
        v(k++) = plane.block(r0, c0, r1 - r0, c1 - c0).mean() / 127.5 - 1.0;
      }
    }
  }
  return v;
}

VlmResponse StubVlmClient::complete(const VlmRequest& request) {
  requests_.push_back(request);
  if (failures_remaining_ > 0) {
    --failures_remaining_;
    throw ServiceError("stub vlm: simulated transport failure", true);
  }
  auto it = responses_.find(request.purpose);
  if (it == responses_.end()) {
    throw ServiceError("stub vlm: no response scripted for '" +
                           request.purpose + "'",
                       false);
  }
  return {it->second};
}

ToyImageEncoder::ToyImageEncoder(Eigen::Index dim, std::uint64_t seed)
    : projection_(seeded_gaussian(dim, 48, seed, 1.0 / std::sqrt(48.0))),
      seed_(seed) {}

Eigen::VectorXd ToyImageEncoder::embed_image(const Image8& image) {
  return projection_ * pooled_color_grid(image);
}

std::string ToyImageEncoder::model_id() const {
  return "toy-image-encoder/d" + std::to_string(projection_.rows()) + "/s" +
         std::to_string(seed_);
}

ToyTextEncoder::ToyTextEncoder(Eigen::Index context_width,
                               Eigen::Index joint_dim,
                               Eigen::Index context_length, std::uint64_t seed)
    : context_width_(context_width),
      joint_dim_(joint_dim),
      context_length_(context_length),
      seed_(seed) {
  if (context_length_ < 2) {
    throw PreconditionError("toy text encoder: context length below 2");
  }
}

Eigen::VectorXd ToyTextEncoder::word_vector(const std::string& word,
                                            Eigen::Index dim,
                                            std::uint64_t salt) const {
  return seeded_gaussian(dim, 1, fnv1a(word, seed_ ^ salt), 1.0 / std::sqrt(
                                                                static_cast<double>(dim)));
}

Eigen::MatrixXd ToyTextEncoder::encode_tokens(const std::string& text) {
  const auto words = split_words(text);
  Eigen::MatrixXd tokens(context_length_, context_width_);
  tokens.row(0) = word_vector("<bos>", context_width_, 1).transpose();
  const Eigen::Index n_words = std::min<Eigen::Index>(
      static_cast<Eigen::Index>(words.size()), context_length_ - 2);
  for (Eigen::Index i = 0; i < n_words; ++i) {
    tokens.row(i + 1) =
        word_vector(words[static_cast<size_t>(i)], context_width_, 1)
            .transpose();
  }
  const Eigen::VectorXd eos = word_vector("<eos>", context_width_, 1);
  for (Eigen::Index i = n_words + 1; i < context_length_; ++i)
    tokens.row(i) = eos.transpose();
  return tokens;
}

Eigen::VectorXd ToyTextEncoder::embed_text(const std::string& text) {
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(joint_dim_);
  for (const auto& w : split_words(text)) sum += word_vector(w, joint_dim_, 2);
  return sum;
}

std::string ToyTextEncoder::model_id() const {
  return "toy-text-encoder/c" + std::to_string(context_width_) + "x" +
         std::to_string(context_length_) + "/s" + std::to_string(seed_);
}

ToyFeatureNet::ToyFeatureNet(std::uint64_t seed) : seed_(seed) {
  for (int l = 0; l < kLayers; ++l) {
    conv_.push_back(seeded_gaussian(kChannels, 4, seed + 100 * l, 0.8));
    weights_.push_back(
        seeded_gaussian(kChannels, 1, seed + 100 * l + 1, 1.0).cwiseAbs() /
        kChannels);
  }
}

std::vector<FeatureLayer> ToyFeatureNet::features(const Image8& image) {
  std::vector<FeatureLayer> out;
  for (int l = 0; l < kLayers; ++l) {
    const Eigen::MatrixXd px = downsample(image, 1 << l);
    const auto& conv = conv_[static_cast<size_t>(l)];
    Eigen::MatrixXd f = (conv.leftCols(3) * px).colwise() + conv.col(3);
    out.push_back({f.cwiseMax(0.0), weights_[static_cast<size_t>(l)]});
  }
  return out;
}

double ToyFeatureNet::reference_distance(const Image8& a,
                                         const Image8& b) const {
  double total = 0.0;
  for (int l = 0; l < kLayers; ++l) {
    const Eigen::MatrixXd pa = downsample(a, 1 << l);
    const Eigen::MatrixXd pb = downsample(b, 1 << l);
    const auto& conv = conv_[static_cast<size_t>(l)];
    const auto& w = weights_[static_cast<size_t>(l)];
    double layer_sum = 0.0;
    for (Eigen::Index s = 0; s < pa.cols(); ++s) {
      double fa[kChannels];
      double fb[kChannels];
      double na = 0.0;
      double nb = 0.0;
      for (int ch = 0; ch < kChannels; ++ch) {
        double va = conv(ch, 3);
        double vb = conv(ch, 3);
        for (int k = 0; k < 3; ++k) {
          va += conv(ch, k) * pa(k, s);
          vb += conv(ch, k) * pb(k, s);
        }
        fa[ch] = va > 0 ? va : 0;
        fb[ch] = vb > 0 ? vb : 0;
        na += fa[ch] * fa[ch];
        nb += fb[ch] * fb[ch];
      }
      na = std::sqrt(na) + 1e-10;
      nb = std::sqrt(nb) + 1e-10;
      for (int ch = 0; ch < kChannels; ++ch) {
        const double d = fa[ch] / na - fb[ch] / nb;
        layer_sum += w(ch) * d * d;
      }
    }
    total += layer_sum / static_cast<double>(pa.cols());
  }
  return total;
}

std::string ToyFeatureNet::model_id() const {
  return "toy-feature-net/s" + std::to_string(seed_);
}

ToyInceptionFeatures::ToyInceptionFeatures(Eigen::Index dim,
                                           std::uint64_t seed)
    : projection_(seeded_gaussian(dim, 48, seed, 2.0 / std::sqrt(48.0))),
      seed_(seed) {}

Eigen::VectorXd ToyInceptionFeatures::features(const Image8& image) {
  return (projection_ * pooled_color_grid(image)).array().tanh().matrix();
}

std::string ToyInceptionFeatures::model_id() const {
  return "toy-inception/d" + std::to_string(projection_.rows()) + "/s" +
         std::to_string(seed_);
}

HpsScore StubHpsClient::score(const Image8&, const std::string&) {
  if (!value_) throw ServiceError("hps scorer unavailable", false);
  return {*value_, version_};
}

}  // namespace exedit
