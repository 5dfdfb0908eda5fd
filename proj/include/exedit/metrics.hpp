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
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "exedit/clients.hpp"
#include "exedit/edit_capture.hpp"
#include "exedit/errors.hpp"
#include "exedit/image.hpp"

// Evaluation metrics. Kernels are templated on the accumulation scalar and
// take already-extracted features where a model is involved; the overloads
// taking clients only do the extraction.

namespace exedit {

// ---------------------------------------------------------------- SSIM

struct SsimParams {
  int window = 11;
  double sigma = 1.5;
  double dynamic_range = 255.0;
  double k1 = 0.01;
  double k2 = 0.03;
};

template <typename Scalar>
Vector<Scalar> gaussian_kernel(int size, double sigma) {
  Vector<Scalar> g(size);
  const double center = (size - 1) / 2.0;
  for (int i = 0; i < size; ++i) {
    const double d = i - center;
    g(i) = static_cast<Scalar>(std::exp(-d * d / (2.0 * sigma * sigma)));
  }
  return g / g.sum();
}

namespace detail {

// Separable valid-mode correlation with a symmetric kernel.
template <typename Scalar>
Matrix<Scalar> filter_valid(const Matrix<Scalar>& img, const Vector<Scalar>& g) {
  const Eigen::Index n = g.size();
  const Eigen::Index rows = img.rows() - n + 1;
  const Eigen::Index cols = img.cols() - n + 1;
  Matrix<Scalar> tmp = Matrix<Scalar>::Zero(img.rows(), cols);
  for (Eigen::Index k = 0; k < n; ++k)
    tmp.noalias() += g(k) * img.middleCols(k, cols);
  Matrix<Scalar> out = Matrix<Scalar>::Zero(rows, cols);
  for (Eigen::Index k = 0; k < n; ++k)
    out.noalias() += g(k) * tmp.middleRows(k, rows);
  return out;
}

}  // namespace detail

// Mean SSIM over all valid windows of the BT.601 luma planes.
template <typename Scalar = double>
Scalar ssim(const Image8& a, const Image8& b, const SsimParams& p = {}) {
  if (!a.same_shape(b)) {
    throw DimensionError("ssim: shapes differ (" + shape_string(a) + " vs " +
                         shape_string(b) + ")");
  }
  if (a.width() < p.window || a.height() < p.window) {
    throw DimensionError("ssim: image " + shape_string(a) +
                         " smaller than the window");
  }
  const Matrix<Scalar> x = luma<Scalar>(a).matrix();
  const Matrix<Scalar> y = luma<Scalar>(b).matrix();
  const Vector<Scalar> g = gaussian_kernel<Scalar>(p.window, p.sigma);
  const Matrix<Scalar> mx = detail::filter_valid<Scalar>(x, g);
  const Matrix<Scalar> my = detail::filter_valid<Scalar>(y, g);
  const Matrix<Scalar> xx = detail::filter_valid<Scalar>(
      x.cwiseProduct(x), g);
  const Matrix<Scalar> yy = detail::filter_valid<Scalar>(
      y.cwiseProduct(y), g);
  const Matrix<Scalar> xy = detail::filter_valid<Scalar>(
      x.cwiseProduct(y), g);
  const Scalar c1 = static_cast<Scalar>(std::pow(p.k1 * p.dynamic_range, 2));
  const Scalar c2 = static_cast<Scalar>(std::pow(p.k2 * p.dynamic_range, 2));

  const auto mx2 = mx.array().square();
  const auto my2 = my.array().square();
  const auto mxy = mx.array() * my.array();
  const auto sx = xx.array() - mx2;
  const auto sy = yy.array() - my2;
  const auto sxy = xy.array() - mxy;
  const auto map = ((Scalar(2) * mxy + c1) * (Scalar(2) * sxy + c2)) /
                   ((mx2 + my2 + c1) * (sx + sy + c2));
  return map.mean();
}

// ---------------------------------------------------------------- LPIPS

inline constexpr double kLpipsEps = 1e-10;

// Sum over layers of the spatial mean of the channel-weighted squared
// difference between unit-normalized feature vectors.
template <typename Scalar = double>
Scalar lpips_distance(const std::vector<FeatureLayer>& a,
                      const std::vector<FeatureLayer>& b) {
  if (a.size() != b.size()) {
    throw DimensionError("lpips: layer counts differ");
  }
  Scalar total(0);
  for (size_t l = 0; l < a.size(); ++l) {
    const Matrix<Scalar> fa = a[l].features.cast<Scalar>();
    const Matrix<Scalar> fb = b[l].features.cast<Scalar>();
    if (fa.rows() != fb.rows() || fa.cols() != fb.cols() ||
        a[l].weights.size() != fa.rows()) {
      throw DimensionError("lpips: layer " + std::to_string(l) +
                           " shapes differ");
    }
    const Scalar eps = static_cast<Scalar>(kLpipsEps);
    const Vector<Scalar> na = fa.colwise().norm().transpose();
    const Vector<Scalar> nb = fb.colwise().norm().transpose();
    const Matrix<Scalar> ua =
        fa * (na.array() + eps).inverse().matrix().asDiagonal();
    const Matrix<Scalar> ub =
        fb * (nb.array() + eps).inverse().matrix().asDiagonal();
    const Vector<Scalar> w = a[l].weights.cast<Scalar>();
    const Matrix<Scalar> diff2 = (ua - ub).array().square().matrix();
    total += (w.transpose() * diff2).mean();
  }
  return total;
}

inline double lpips(const Image8& a, const Image8& b, FeatureNetClient& net) {
  if (!a.same_shape(b)) {
    throw DimensionError("lpips: shapes differ (" + shape_string(a) + " vs " +
                         shape_string(b) + ")");
  }
  const auto fa = with_external_model("lpips", [&] { return net.features(a); });
  const auto fb = with_external_model("lpips", [&] { return net.features(b); });
  return lpips_distance<double>(fa, fb);
}

// ---------------------------------------------------------------- FID

template <typename Scalar>
struct GaussianStats {
  Vector<Scalar> mean;
  Matrix<Scalar> cov;
};

// Sample mean and unbiased covariance of the rows of an n x d feature matrix.
template <typename Scalar>
GaussianStats<Scalar> feature_stats(const Matrix<Scalar>& f) {
  if (f.rows() < 2) {
    throw PreconditionError("fid: need at least 2 feature rows, got " +
                            std::to_string(f.rows()));
  }
  if (!f.allFinite()) throw NumericError("fid: non-finite features");
  GaussianStats<Scalar> s;
  s.mean = f.colwise().mean().transpose();
  const Matrix<Scalar> centered = f.rowwise() - s.mean.transpose();
  s.cov = (centered.transpose() * centered) / Scalar(f.rows() - 1);
  return s;
}

// ||mu1 - mu2||^2 + Tr(S1 + S2) - 2 sum sqrt(max(lambda, 0)), lambda the
// eigenvalues of S1 S2 after symmetrizing both covariances.
template <typename Scalar>
Scalar frechet_distance(const GaussianStats<Scalar>& a,
                        const GaussianStats<Scalar>& b) {
  if (a.mean.size() != b.mean.size()) {
    throw DimensionError("fid: feature dims differ (" +
                         std::to_string(a.mean.size()) + " vs " +
                         std::to_string(b.mean.size()) + ")");
  }
  const Matrix<Scalar> s1 = (a.cov + a.cov.transpose()) / Scalar(2);
  const Matrix<Scalar> s2 = (b.cov + b.cov.transpose()) / Scalar(2);
  const Matrix<Scalar> prod = s1 * s2;
  Eigen::EigenSolver<Matrix<Scalar>> solver(prod, false);
  if (solver.info() != Eigen::Success) {
    throw NumericError("fid: eigendecomposition failed");
  }
  Scalar trace_sqrt(0);
  for (Eigen::Index i = 0; i < solver.eigenvalues().size(); ++i) {
    using std::sqrt;
    trace_sqrt += sqrt(std::max(solver.eigenvalues()(i).real(), Scalar(0)));
  }
  const Scalar value = (a.mean - b.mean).squaredNorm() + s1.trace() +
                       s2.trace() - Scalar(2) * trace_sqrt;
  return std::max(value, Scalar(0));
}

template <typename Scalar>
Scalar fid(const Matrix<Scalar>& real, const Matrix<Scalar>& gen) {
  if (real.cols() != gen.cols()) {
    throw DimensionError("fid: feature dims differ (" +
                         std::to_string(real.cols()) + " vs " +
                         std::to_string(gen.cols()) + ")");
  }
  return frechet_distance<Scalar>(feature_stats<Scalar>(real),
                                  feature_stats<Scalar>(gen));
}

// ---------------------------------------------------------------- CLIP-space

// Cosine, or nullopt when either vector has zero norm.
template <typename DerivedA, typename DerivedB>
std::optional<double> cosine(const Eigen::MatrixBase<DerivedA>& a,
                             const Eigen::MatrixBase<DerivedB>& b) {
  if (a.size() != b.size()) throw DimensionError("cosine: sizes differ");
  const double na = static_cast<double>(a.norm());
  const double nb = static_cast<double>(b.norm());
  if (na == 0.0 || nb == 0.0) return std::nullopt;
  const double c = static_cast<double>(a.dot(b)) / (na * nb);
  return std::clamp(c, -1.0, 1.0);
}

// 100 * max(0, cos).
inline double clip_score_from_embeddings(const Eigen::VectorXd& image,
                                         const Eigen::VectorXd& text) {
  return 100.0 * std::max(0.0, cosine(image, text).value_or(0.0));
}

double clip_score(const Image8& image, const std::string& caption,
                  ImageEncoderClient& enc_img, TextEncoderClient& enc_text);

// A cosine score between two directions; degenerate when either direction has
// zero norm, in which case value is empty.
struct DirectionScore {
  std::optional<double> value;
  bool degenerate() const { return !value.has_value(); }
};

inline DirectionScore direction_score(const Eigen::VectorXd& u,
                                      const Eigen::VectorXd& v) {
  return {cosine(u, v)};
}

DirectionScore directional_similarity(const Image8& y, const Image8& y_edit_hat,
                                      const std::string& caption_src,
                                      const std::string& caption_tgt,
                                      ImageEncoderClient& enc_img,
                                      TextEncoderClient& enc_text);

DirectionScore s_visual(const Image8& x, const Image8& x_edit, const Image8& y,
                        const Image8& y_edit_hat, ImageEncoderClient& enc_img);

// Pass-through; nullopt when the scorer is unavailable.
std::optional<HpsScore> hps(const Image8& image, const std::string& prompt,
                            HpsClient* scorer);

// ---------------------------------------------------------------- aggregation

struct Aggregate {
  double mean = 0.0;
  std::optional<double> cv;
  int n = 0;
};

inline constexpr double kCvMeanGuard = 1e-12;

// Arithmetic mean and population std / mean.
Aggregate aggregate(const std::vector<double>& values);

}  // namespace exedit
