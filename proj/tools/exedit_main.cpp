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


// exedit: exemplar-driven image editing from the command line.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage or config error,
// 3 batch finished with some failed entries.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>

#include "exedit/config.hpp"
#include "exedit/dataset.hpp"
#include "exedit/errors.hpp"
#include "exedit/evaluate.hpp"
#include "exedit/image_io.hpp"
#include "exedit/logging.hpp"
#include "exedit/pipeline.hpp"

namespace {

namespace fs = std::filesystem;
using namespace exedit;

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;
constexpr int kExitPartial = 3;

// Command-line values that override the config file.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> steps;
  std::optional<double> guidance_scale;
  std::optional<double> step_fraction;
  std::string weights;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--seed", seed, "Run seed");
    cmd->add_option("--steps", steps, "DDIM steps");
    cmd->add_option("--guidance-scale", guidance_scale,
                    "Classifier-free guidance scale");
    cmd->add_option("--step-fraction", step_fraction,
                    "Fraction of sampling steps with injection");
    cmd->add_option("--weights", weights, "Toy backend weights file");
  }

  void apply(RunConfig& cfg) const {
    if (seed) cfg.seed = *seed;
    if (steps) cfg.edit.steps = *steps;
    if (guidance_scale) cfg.edit.guidance_scale = *guidance_scale;
    if (step_fraction) cfg.edit.hook_spec.step_fraction = *step_fraction;
    if (!weights.empty()) {
      cfg.backend.weights = fs::absolute(weights);
      cfg.backend.toy = load_toy_weights(cfg.backend.weights);
    }
    cfg.edit.seed = cfg.seed;
    cfg.edit.validate();
  }
};

RunConfig config_from(const std::string& path, const Overrides& ov) {
  RunConfig cfg = path.empty() ? RunConfig{} : load_config(path);
  if (path.empty()) apply_env_overrides(cfg);
  ov.apply(cfg);
  return cfg;
}

fs::path output_dir(const std::string& flag, const RunConfig& cfg) {
  if (!flag.empty()) return flag;
  if (!cfg.output_dir.empty()) return cfg.output_dir;
  throw ConfigError("no output directory: pass --out or set output_dir");
}

void print_timings(const StageTimings& t) {
  for (const auto& [stage, s] : t.stages) {
    std::printf("  %-16s %9.3f s\n", stage.c_str(), s);
  }
  std::printf("  %-16s %9.3f s\n", "total", t.total_s);
}

struct EditArgs {
  std::vector<std::string> exemplar;
  std::string target, config, out, name = "edit";
  bool trajectory = false;
  Overrides ov;
};

int cmd_edit(const EditArgs& a) {
  const RunConfig cfg = config_from(a.config, a.ov);
  const fs::path out = output_dir(a.out, cfg);
  ExemplarTask task;
  task.id = a.name;
  task.x = read_image(a.exemplar.at(0));
  task.x_edit = read_image(a.exemplar.at(1));
  task.y = read_image(a.target);

  auto backend = make_backend(cfg);
  ClientBundle clients = make_clients(cfg);
  const EditOutcome outcome = run_edit(task, cfg, *backend, clients,
                                       make_templates(cfg), a.trajectory);
  const fs::path png = write_edit_outputs(outcome, out, a.name);
  std::printf("wrote %s\n", png.string().c_str());
  std::printf("g_text:    %s\n",
              outcome.provenance["g_text"].get<std::string>().c_str());
  std::printf("g_caption: %s\n",
              outcome.provenance["g_caption"].get<std::string>().c_str());
  print_timings(outcome.timings);
  return kExitOk;
}

struct BatchArgs {
  std::string manifest, config, out;
  int parallel = 1;
  bool trajectory = false;
  Overrides ov;
};

int cmd_batch(const BatchArgs& a) {
  const RunConfig cfg = config_from(a.config, a.ov);
  const fs::path out = output_dir(a.out, cfg);
  const DatasetManifest manifest = load_manifest(a.manifest);
  const BatchSummary s = run_batch(manifest, cfg, out, a.parallel,
                                   a.trajectory);
  for (const auto& e : s.entries) {
    if (e.ok) {
      std::printf("ok      %-24s %8.2f s\n", e.id.c_str(), e.seconds);
    } else {
      std::printf("FAILED  %-24s %s\n", e.id.c_str(), e.error.c_str());
    }
  }
  std::printf("%d/%zu succeeded; summary in %s\n", s.n_ok(), s.entries.size(),
              (out / "batch_summary.json").string().c_str());
  if (s.n_failed() == 0) return kExitOk;
  return s.n_ok() == 0 ? kExitFailure : kExitPartial;
}

struct EvaluateArgs {
  std::string manifest, predictions, out, config;
  bool allow_skips = false;
  bool no_vlm_captions = false;
};

int cmd_evaluate(const EvaluateArgs& a) {
  const RunConfig cfg = config_from(a.config, {});
  const DatasetManifest manifest = load_manifest(a.manifest);
  ClientBundle clients = make_clients(cfg);
  EvaluateOptions opts;
  opts.templates = make_templates(cfg);
  opts.vlm_source_captions = !a.no_vlm_captions;
  opts.config = cfg.snapshot();

  const MetricReport report = evaluate(manifest, a.predictions, clients, opts);
  const fs::path out(a.out);
  fs::create_directories(out);
  write_text(out / "report.json", report.to_json().dump(2) + "\n");
  write_text(out / "report.csv", report.to_csv());
  std::cout << report.to_table();
  std::printf("wrote %s and %s\n", (out / "report.json").string().c_str(),
              (out / "report.csv").string().c_str());
  if (report.any_skipped()) {
    if (a.allow_skips) {
      logger().warn("some metrics were skipped (--allow-skips)");
    } else {
      logger().error("some metrics were skipped; pass --allow-skips to accept");
      return kExitFailure;
    }
  }
  return kExitOk;
}

int cmd_catalog(const std::string& config, const Overrides& ov) {
  const RunConfig cfg = config_from(config, ov);
  auto backend = make_backend(cfg);
  std::printf("backend %s\n", backend->id().c_str());
  std::printf("%-9s %-15s %-6s %s\n", "position", "kind", "index", "name");
  for (const LayerInfo& l : backend->layer_catalog()) {
    std::printf("%-9d %-15s %-6d %s\n", l.position, to_string(l.kind),
                l.kind_index, l.name.c_str());
  }
  return kExitOk;
}

int cmd_validate(const std::string& manifest_path, int resolution) {
  const DatasetManifest manifest = load_manifest(manifest_path);
  const ValidationReport report = validate_dataset(manifest, resolution);
  std::cout << report.to_json() << "\n";
  return report.failures() == 0 ? kExitOk : kExitFailure;
}

// Maps an exception escaping a command to an exit code.
int report_failure() {
  try {
    throw;
  } catch (const MissingPredictionError& e) {
    logger().error("{}", e.what());
  } catch (const StageError& e) {
    try {
      e.rethrow_inner();
    } catch (const ConfigError& inner) {
      logger().error("config error in stage {}: {}", e.stage(), inner.what());
      return kExitUsage;
    } catch (...) {
    }
    logger().error("stage {} failed: {}", e.stage(), e.what());
  } catch (const ConfigError& e) {
    logger().error("config error: {}", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    logger().error("{}", e.what());
  }
  return kExitFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"exedit: edit images from an exemplar before/after pair"};
  app.require_subcommand(1);
  std::string log_level = "info";
  app.add_option("--log-level", log_level, "trace|debug|info|warn|error|off")
      ->check(CLI::IsMember(
          {"trace", "debug", "info", "warn", "error", "critical", "off"}));

  EditArgs edit;
  CLI::App* c_edit =
      app.add_subcommand("edit", "Apply the edit shown by x -> x_edit to y");
  c_edit->add_option("--exemplar", edit.exemplar, "Exemplar pair: x x_edit")
      ->expected(2)
      ->required()
      ->check(CLI::ExistingFile);
  c_edit->add_option("--target", edit.target, "Image to edit (y)")
      ->required()
      ->check(CLI::ExistingFile);
  c_edit->add_option("--config", edit.config, "Run config (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  c_edit->add_option("--out", edit.out, "Output directory");
  c_edit->add_option("--name", edit.name, "Output file stem")
      ->capture_default_str();
  c_edit->add_flag("--trajectory", edit.trajectory,
                   "Also write per-step latent digests");
  edit.ov.add_to(c_edit);

  BatchArgs batch;
  CLI::App* c_batch =
      app.add_subcommand("batch", "Edit every entry of a dataset manifest");
  c_batch->add_option("--manifest", batch.manifest, "Dataset manifest")
      ->required()
      ->check(CLI::ExistingFile);
  c_batch->add_option("--config", batch.config, "Run config (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  c_batch->add_option("--out", batch.out, "Output directory");
  c_batch->add_option("--parallel", batch.parallel, "Concurrent workers")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  c_batch->add_flag("--trajectory", batch.trajectory,
                    "Also write per-step latent digests");
  batch.ov.add_to(c_batch);

  EvaluateArgs ev;
  CLI::App* c_eval =
      app.add_subcommand("evaluate", "Score predictions against ground truth");
  c_eval->add_option("--manifest", ev.manifest, "Dataset manifest")
      ->required()
      ->check(CLI::ExistingFile);
  c_eval->add_option("--predictions", ev.predictions,
                     "Directory of <id>.png predictions")
      ->required()
      ->check(CLI::ExistingDirectory);
  c_eval->add_option("--out", ev.out, "Report directory")->required();
  c_eval->add_option("--config", ev.config, "Run config (JSON)")
      ->check(CLI::ExistingFile);
  c_eval->add_flag("--allow-skips", ev.allow_skips,
                   "Exit 0 even if a metric was skipped");
  c_eval->add_flag("--no-vlm-captions", ev.no_vlm_captions,
                   "Do not ask the VLM for missing source captions");

  std::string catalog_config;
  Overrides catalog_ov;
  CLI::App* c_catalog =
      app.add_subcommand("catalog", "Print the backend's hookable layers");
  c_catalog->add_option("--config", catalog_config, "Run config (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  c_catalog->add_option("--weights", catalog_ov.weights,
                        "Toy backend weights file");

  std::string validate_manifest;
  int resolution = 512;
  CLI::App* c_validate =
      app.add_subcommand("validate", "Check a dataset manifest and its images");
  c_validate->add_option("--manifest", validate_manifest, "Dataset manifest")
      ->required()
      ->check(CLI::ExistingFile);
  c_validate->add_option("--resolution", resolution,
                         "Preprocessing resolution to check")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }
  logger().set_level(spdlog::level::from_str(log_level));

  try {
    if (*c_edit) return cmd_edit(edit);
    if (*c_batch) return cmd_batch(batch);
    if (*c_eval) return cmd_evaluate(ev);
    if (*c_catalog) return cmd_catalog(catalog_config, catalog_ov);
    if (*c_validate) return cmd_validate(validate_manifest, resolution);
  } catch (...) {
    return report_failure();
  }
  return kExitUsage;
}
