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


#include "exedit/pipeline.hpp"

#include <atomic>
#include <chrono>
#include <mutex>
#include <thread>

#include "exedit/ddim.hpp"
#include "exedit/errors.hpp"
#include "exedit/image_io.hpp"
#include "exedit/injection.hpp"
#include "exedit/logging.hpp"

namespace exedit {

namespace fs = std::filesystem;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

template <typename Fn>
auto timed(StageTimings& t, const std::string& stage, Fn&& fn) {
  const auto start = Clock::now();
  auto result = with_stage(stage, std::forward<Fn>(fn));
  const double s = seconds_since(start);
  t.stages.emplace_back(stage, s);
  logger().info("stage {:<14} {:8.3f}s", stage, s);
  return result;
}

// sha256 over the planar RGB bytes.
std::string pixel_sha256(const Image8& img) {
  std::vector<std::uint8_t> bytes;
  bytes.reserve(static_cast<size_t>(img.width() * img.height() * 3));
  for (int c = 0; c < 3; ++c) {
    const auto& p = img.plane(c);
    bytes.insert(bytes.end(), p.data(), p.data() + p.size());
  }
  return sha256_hex(bytes);
}

json image_info(const Image8& img) {
  return {{"width", img.width()},
          {"height", img.height()},
          {"pixel_sha256", pixel_sha256(img)}};
}

std::string latent_sha256(const Eigen::MatrixXd& z) {
  const auto* p = reinterpret_cast<const std::uint8_t*>(z.data());
  return sha256_hex(std::span<const std::uint8_t>(
      p, static_cast<size_t>(z.size()) * sizeof(double)));
}

}  // namespace

json StageTimings::to_json() const {
  json j = json::object();
  for (const auto& [stage, s] : stages) j[stage] = s;
  j["total"] = total_s;
  return j;
}

json trajectory_json(const std::vector<LatentState<double>>& traj) {
  json steps = json::array();
  for (size_t i = 0; i < traj.size(); ++i) {
    steps.push_back({{"step", i},
                     {"t_index", traj[i].t_index},
                     {"rows", traj[i].z.rows()},
                     {"cols", traj[i].z.cols()},
                     {"sha256", latent_sha256(traj[i].z)}});
  }
  return steps;
}

EditOutcome run_edit(const ExemplarTask& input, const RunConfig& cfg,
                     BackendHandle<double>& backend, ClientBundle& clients,
                     const PromptTemplates& templates, bool keep_trajectory) {
  const auto start = Clock::now();
  EditOutcome out;
  StageTimings& t = out.timings;
  const EditConfig& ec = cfg.edit;

  struct Setup {
    ExemplarTask task;
    NoiseSchedule schedule;
  };
  Setup setup = timed(t, "setup", [&] {
    ec.validate();
    ec.hook_spec.validate(backend.layer_catalog());
    return Setup{preprocess_task(input, backend.resolution()),
                 NoiseSchedule::from_params(backend.schedule_params(),
                                            ec.steps)};
  });
  const ExemplarTask& task = setup.task;
  const NoiseSchedule& schedule = setup.schedule;

  CaptureResult<double> capture = timed(t, "capture", [&] {
    return capture_edit<double>(task, templates, *clients.vlm,
                                *clients.image_encoder, *clients.text_encoder,
                                ec.k_delta_tokens);
  });
  // Only evaluation needs the source caption, so a failure here is logged
  // and the edit continues.
  std::optional<CaptionResult> source = timed(t, "caption_source", [&] {
    try {
      return std::optional<CaptionResult>(
          caption_source(task.y, templates, *clients.vlm));
    } catch (const std::exception& e) {
      logger().warn("source caption unavailable: {}", e.what());
      return std::optional<CaptionResult>();
    }
  });

  const LatentState<double> z0 =
      timed(t, "encode", [&] { return backend.encode_image(task.y); });
  const LatentState<double> y_noise = timed(t, "invert", [&] {
    return ddim_invert<double>(z0, schedule, nullptr, backend,
                               ec.divergence_ceiling)
        .noise;
  });
  const RecordingResult<double> rec = timed(t, "record", [&] {
    return record_source_run<double>(y_noise, schedule, backend, ec.hook_spec,
                                     ec.divergence_ceiling);
  });
  const LatentState<double> edited = timed(t, "edit", [&] {
    return edited_run<double>(y_noise, capture.embedding, rec.record, schedule,
                              backend, ec, nullptr,
                              keep_trajectory ? &out.trajectory : nullptr);
  });
  out.image = timed(t, "decode", [&] { return backend.decode_latent(edited); });
  t.total_s = seconds_since(start);
  logger().info("stage {:<14} {:8.3f}s", "total", t.total_s);

  json inputs = {{"x", image_info(input.x)},
                 {"x_edit", image_info(input.x_edit)},
                 {"y", image_info(input.y)}};
  out.provenance = {
      {"id", input.id},
      {"g_text", capture.text.g_text},
      {"g_caption", capture.text.g_caption},
      {"caption_truncated", capture.text.caption_truncated},
      {"source_caption", source ? json(source->text) : json(nullptr)},
      {"source_caption_truncated", source ? source->truncated : false},
      {"prompt_version", capture.text.prompt_version},
      {"seeds", {{"run", cfg.seed}, {"backend", backend.seed()}}},
      {"models",
       {{"backend", backend.id()},
        {"vlm", clients.vlm->model_id()},
        {"image_encoder", capture.image_encoder_id},
        {"text_encoder", capture.text_encoder_id}}},
      {"schedule",
       {{"hash", schedule.hash()},
        {"steps", schedule.steps()},
        {"timesteps", schedule.subsequence()}}},
      {"embedding",
       {{"k_delta_tokens", capture.embedding.k()},
        {"n_text_tokens", capture.embedding.n_text()},
        {"width", capture.embedding.width()}}},
      {"record",
       {{"feature_tensors", rec.record.features.size()},
        {"qk_pairs", rec.record.qk_pair_count()}}},
      {"inputs", inputs},
      {"output",
       {{"width", out.image.width()},
        {"height", out.image.height()},
        {"png_sha256", sha256_hex(encode_png(out.image))}}},
      {"config", cfg.snapshot()},
      {"timings_s", t.to_json()},
  };
  return out;
}

fs::path write_edit_outputs(const EditOutcome& outcome, const fs::path& out_dir,
                            const std::string& name) {
  fs::create_directories(out_dir);
  const fs::path png = out_dir / (name + ".png");
  write_png(png, outcome.image);
  write_text(out_dir / (name + ".provenance.json"),
             outcome.provenance.dump(2) + "\n");
  if (!outcome.trajectory.empty()) {
    write_text(out_dir / (name + ".trajectory.json"),
               trajectory_json(outcome.trajectory).dump(2) + "\n");
  }
  return png;
}

int BatchSummary::n_ok() const {
  int n = 0;
  for (const auto& e : entries) n += e.ok ? 1 : 0;
  return n;
}

int BatchSummary::n_failed() const {
  return static_cast<int>(entries.size()) - n_ok();
}

json BatchSummary::to_json() const {
  json list = json::array();
  for (const auto& e : entries) {
    json j = {{"id", e.id}, {"ok", e.ok}, {"seconds", e.seconds}};
    if (e.ok) {
      j["output_sha256"] = e.output_sha256;
    } else {
      j["stage"] = e.stage;
      j["error"] = e.error;
    }
    list.push_back(std::move(j));
  }
  return {{"total", entries.size()},
          {"succeeded", n_ok()},
          {"failed", n_failed()},
          {"entries", std::move(list)}};
}

BatchSummary run_batch(const DatasetManifest& manifest, const RunConfig& cfg,
                       const fs::path& out_dir, int parallel,
                       bool keep_trajectory) {
  if (parallel < 1) throw ConfigError("--parallel must be >= 1");
  const size_t n = manifest.entries.size();
  const int workers =
      static_cast<int>(std::min<size_t>(static_cast<size_t>(parallel),
                                        std::max<size_t>(n, 1)));
  const PromptTemplates templates = make_templates(cfg);

  struct Worker {
    std::unique_ptr<BackendHandle<double>> backend;
    ClientBundle clients;
  };
  std::vector<Worker> pool;
  for (int i = 0; i < workers; ++i) {
    pool.push_back({make_backend(cfg), make_clients(cfg)});
  }
  fs::create_directories(out_dir);

  BatchSummary summary;
  summary.entries.resize(n);
  std::atomic<size_t> next{0};
  auto work = [&](Worker& w) {
    for (size_t i = next++; i < n; i = next++) {
      const ManifestEntry& entry = manifest.entries[i];
      BatchEntryResult& r = summary.entries[i];
      r.id = entry.id;
      const auto start = Clock::now();
      try {
        const ExemplarTask task =
            with_stage("load", [&] { return load_task(manifest, entry); });
        const EditOutcome outcome = run_edit(task, cfg, *w.backend, w.clients,
                                             templates, keep_trajectory);
        with_stage("write", [&] {
          return write_edit_outputs(outcome, out_dir, entry.id);
        });
        r.ok = true;
        r.output_sha256 = outcome.provenance["output"]["png_sha256"];
      } catch (const StageError& e) {
        r.stage = e.stage();
        r.error = e.what();
      } catch (const std::exception& e) {
        r.error = e.what();
      }
      r.seconds = seconds_since(start);
      if (r.ok) {
        logger().info("[{}] ok in {:.2f}s", entry.id, r.seconds);
      } else {
        logger().error("[{}] failed: {}", entry.id, r.error);
      }
    }
  };
  if (workers == 1) {
    work(pool[0]);
  } else {
    std::vector<std::thread> threads;
    for (auto& w : pool) threads.emplace_back(work, std::ref(w));
    for (auto& th : threads) th.join();
  }
  write_text(out_dir / "batch_summary.json", summary.to_json().dump(2) + "\n");
  return summary;
}

}  // namespace exedit
