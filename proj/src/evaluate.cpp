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

#include "exedit/evaluate.hpp"

#include <spdlog/fmt/fmt.h>

#include <fstream>
#include <sstream>

#include "exedit/image_io.hpp"
#include "exedit/logging.hpp"

namespace exedit {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const char* direction_name(MetricDirection d) {
  return d == MetricDirection::kHigherBetter ? "higher-better"
                                             : "lower-better";
}

const char* arrow(MetricDirection d) {
  return d == MetricDirection::kHigherBetter ? "↑" : "↓";
}

json optional_number(const std::optional<double>& v) {
  return v ? json(*v) : json(nullptr);
}

json preprocessing_spec(const SsimParams& p) {
  return {
      {"lpips",
       "prediction resized (bilinear) to ground-truth size; backbone "
       "features unit-normalized per position, eps 1e-10"},
      {"ssim", fmt::format("prediction resized (bilinear) to ground-truth "
                           "size; BT.601 luma; gaussian window {} sigma {}; "
                           "L {}; k1 {} k2 {}; valid windows",
                           p.window, p.sigma, p.dynamic_range, p.k1, p.k2)},
      {"fid", "extractor features of native images; unbiased covariance; "
              "symmetrized; eigenvalues clamped at 0"},
      {"clip_score", "100 * max(0, cos(image, target caption))"},
      {"dir_similarity",
       "cos(E_img(prediction) - E_img(y), E_text(target) - E_text(source))"},
      {"s_visual",
       "cos(E_img(x_edit) - E_img(x), E_img(prediction) - E_img(y))"},
      {"hps", "scorer pass-through with target caption as prompt"},
  };
}

struct Captions {
  std::optional<std::string> source;
  std::optional<std::string> target;
  std::string origin = "none";
};

std::optional<std::string> non_empty(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_string()) return std::nullopt;
  std::string s = trim(it->get<std::string>());
  if (s.empty()) return std::nullopt;
  return s;
}

Captions find_captions(const ManifestEntry& entry, const fs::path& prediction,
                       const Image8& y, VlmClient* vlm,
                       const EvaluateOptions& options) {
  Captions c;
  const fs::path sidecar =
      prediction.parent_path() / (entry.id + ".provenance.json");
  if (fs::is_regular_file(sidecar)) {
    std::ifstream in(sidecar);
    json j = json::parse(in, nullptr, false);
    if (!j.is_discarded()) {
      c.target = non_empty(j, "g_caption");
      c.source = non_empty(j, "source_caption");
      if (c.target) c.origin = "provenance";
    }
  }
  if (!c.target && entry.target_caption && !trim(*entry.target_caption).empty()) {
    c.target = trim(*entry.target_caption);
    c.origin = "manifest";
  }
  if (!c.source && entry.source_caption && !trim(*entry.source_caption).empty()) {
    c.source = trim(*entry.source_caption);
  }
  if (!c.source && vlm && options.vlm_source_captions) {
    try {
      c.source = caption_source(y, options.templates, *vlm).text;
      if (c.origin == "none") c.origin = "vlm";
    } catch (const std::exception& e) {
      logger().warn("{}: no source caption: {}", entry.id, e.what());
    }
  }
  return c;
}

}  // namespace

const MetricRow& MetricReport::row(const std::string& key) const {
  for (const auto& r : rows)
    if (key == r.info.key) return r;
  throw PreconditionError("no metric " + key);
}

bool MetricReport::any_skipped() const {
  for (const auto& r : rows)
    if (!r.skipped.empty()) return true;
  return false;
}

json MetricReport::to_json() const {
  json metrics = json::array();
  for (const auto& r : rows) {
    json m = {{"key", r.info.key},
              {"name", r.info.name},
              {"direction", direction_name(r.info.direction)},
              {"arrow", arrow(r.info.direction)},
              {"mean", r.aggregate.n > 0 ? json(r.aggregate.mean)
                                         : json(nullptr)},
              {"cv", optional_number(r.aggregate.cv)},
              {"n", r.aggregate.n},
              {"skipped", r.skipped},
              {"excluded", r.excluded}};
    if (r.warning) m["warning"] = *r.warning;
    metrics.push_back(std::move(m));
  }
  json entries = json::object();
  for (const auto& e : per_entry) {
    json values = json::object();
    for (const auto& [k, v] : e.values) values[k] = optional_number(v);
    entries[e.id] = {{"values", values},
                     {"flags", e.flags},
                     {"source_caption", e.source_caption},
                     {"target_caption", e.target_caption},
                     {"caption_origin", e.caption_origin}};
  }
  return {{"metrics", metrics},
          {"per_entry", entries},
          {"models", models},
          {"preprocessing", preprocessing},
          {"preprocessing_checksum", preprocessing_checksum},
          {"config", config}};
}

std::string MetricReport::to_csv() const {
  std::ostringstream out;
  out << "metric,direction,mean,cv,n,skipped,excluded\n";
  for (const auto& r : rows) {
    out << '"' << r.info.name << "\"," << direction_name(r.info.direction)
        << ',';
    if (r.aggregate.n > 0) out << fmt::format("{:.17g}", r.aggregate.mean);
    out << ',';
    if (r.aggregate.cv) out << fmt::format("{:.17g}", *r.aggregate.cv);
    out << ',' << r.aggregate.n << ',' << r.skipped.size() << ','
        << r.excluded.size() << '\n';
  }
  return out.str();
}

std::string MetricReport::to_table() const {
  std::ostringstream out;
  out << fmt::format("{:<18} {:>12} {:>10} {:>5}\n", "metric", "mean", "cv",
                     "n");
  for (const auto& r : rows) {
    const std::string name =
        fmt::format("{} {}", r.info.name, arrow(r.info.direction));
    const std::string mean =
        r.aggregate.n > 0 ? fmt::format("{:.4f}", r.aggregate.mean) : "-";
    const std::string cv =
        r.aggregate.cv ? fmt::format("{:.4f}", *r.aggregate.cv) : "-";
    // The arrow is one column wide but three bytes long.
    out << fmt::format("{:<20} {:>12} {:>10} {:>5}", name, mean, cv,
                       r.aggregate.n);
    if (!r.skipped.empty()) out << "  skipped " << r.skipped.size();
    if (!r.excluded.empty()) out << "  excluded " << r.excluded.size();
    if (r.warning) out << "  (" << *r.warning << ")";
    out << '\n';
  }
  return out.str();
}

MetricReport evaluate(const DatasetManifest& manifest,
                      const fs::path& predictions_dir, ClientBundle& clients,
                      const EvaluateOptions& options) {
  const PredictionSet preds = find_predictions(predictions_dir, manifest);
  if (!preds.missing.empty()) throw MissingPredictionError(preds.missing);
  if (!clients.image_encoder || !clients.text_encoder || !clients.feature_net ||
      !clients.inception) {
    throw PreconditionError("evaluate: encoder, feature and inception clients "
                            "are required");
  }

  MetricReport report;
  const SsimParams ssim_params;
  report.preprocessing = preprocessing_spec(ssim_params);
  report.preprocessing_checksum = sha256_hex(report.preprocessing.dump());
  report.config = options.config;
  report.models = {{"image_encoder", clients.image_encoder->model_id()},
                   {"text_encoder", clients.text_encoder->model_id()},
                   {"feature_net", clients.feature_net->model_id()},
                   {"inception", clients.inception->model_id()},
                   {"vlm", clients.vlm ? clients.vlm->model_id() : "none"},
                   {"hps", "none"}};

  std::map<std::string, std::vector<double>> values;
  std::map<std::string, std::vector<std::string>> skipped, excluded;
  std::vector<Eigen::VectorXd> real_feats, gen_feats;

  for (const auto& entry : manifest.entries) {
    const ExemplarTask task = load_task(manifest, entry);
    const Image8 pred = read_image(preds.found.at(entry.id));
    const Image8& gt = *task.y_edit;
    const Image8 pred_gt = pred.same_shape(gt)
                               ? pred
                               : resize_bilinear(pred, gt.width(), gt.height());

    EntryScores scores;
    scores.id = entry.id;
    auto put = [&](const char* key, std::optional<double> v) {
      scores.values[key] = v;
      if (v) values[key].push_back(*v);
    };
    auto skip = [&](const char* key, const std::string& why) {
      scores.values[key] = std::nullopt;
      scores.flags[key] = "skipped: " + why;
      skipped[key].push_back(entry.id);
    };
    auto exclude = [&](const char* key, const std::string& why) {
      scores.values[key] = std::nullopt;
      scores.flags[key] = "excluded: " + why;
      excluded[key].push_back(entry.id);
    };

    put("lpips", lpips(pred_gt, gt, *clients.feature_net));
    put("ssim", ssim<double>(pred_gt, gt, ssim_params));

    const Captions captions =
        find_captions(entry, preds.found.at(entry.id), task.y,
                      clients.vlm.get(), options);
    scores.source_caption = captions.source.value_or("");
    scores.target_caption = captions.target.value_or("");
    scores.caption_origin = captions.origin;

    if (captions.target) {
      put("clip_score", clip_score(pred, *captions.target,
                                   *clients.image_encoder,
                                   *clients.text_encoder));
    } else {
      skip("clip_score", "no target caption");
    }

    if (captions.target && captions.source) {
      const DirectionScore d = directional_similarity(
          task.y, pred, *captions.source, *captions.target,
          *clients.image_encoder, *clients.text_encoder);
      if (d.degenerate()) {
        exclude("dir_similarity", "zero-norm direction");
      } else {
        put("dir_similarity", d.value);
      }
    } else {
      skip("dir_similarity", captions.target ? "no source caption"
                                             : "no target caption");
    }

    const DirectionScore sv =
        s_visual(task.x, task.x_edit, task.y, pred, *clients.image_encoder);
    if (sv.degenerate()) {
      exclude("s_visual", "zero-norm delta");
    } else {
      put("s_visual", sv.value);
    }

    if (!captions.target) {
      skip("hps", "no target caption");
    } else if (auto h = hps(pred, *captions.target, clients.hps.get())) {
      put("hps", h->value);
      report.models["hps"] = h->version;
    } else {
      skip("hps", "scorer unavailable");
    }

    real_feats.push_back(with_external_model(
        clients.inception->model_id(),
        [&] { return clients.inception->features(gt); }));
    gen_feats.push_back(with_external_model(
        clients.inception->model_id(),
        [&] { return clients.inception->features(pred); }));
    report.per_entry.push_back(std::move(scores));
  }

  for (const MetricInfo& info : kReportMetrics) {
    MetricRow row{info, {}, skipped[info.key], excluded[info.key], {}};
    if (std::string(info.key) == "fid") {
      const auto n = static_cast<Eigen::Index>(real_feats.size());
      if (n < 2) {
        for (const auto& e : manifest.entries) row.skipped.push_back(e.id);
        row.warning = "fid needs at least 2 entries";
      } else {
        const Eigen::Index d = real_feats[0].size();
        Eigen::MatrixXd real(n, d), gen(n, d);
        for (Eigen::Index i = 0; i < n; ++i) {
          if (real_feats[i].size() != d || gen_feats[i].size() != d) {
            throw ExternalModelError("inception features differ in size");
          }
          real.row(i) = real_feats[i].transpose();
          gen.row(i) = gen_feats[i].transpose();
        }
        row.aggregate.mean = fid<double>(real, gen);
        row.aggregate.n = static_cast<int>(n);
        if (n < kFidSmallSample) {
          row.warning = fmt::format(
              "small sample: n={} is below {}; FID is biased and unstable", n,
              kFidSmallSample);
        }
      }
    } else {
      row.aggregate = aggregate(values[info.key]);
    }
    report.rows.push_back(std::move(row));
  }
  return report;
}

}  // namespace exedit
