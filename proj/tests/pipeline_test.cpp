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

#include <gtest/gtest.h>
#include <spdlog/sinks/ringbuffer_sink.h>

#include "exedit/errors.hpp"
#include "exedit/logging.hpp"
#include "fixture.hpp"

namespace exedit {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using testing::TempDir;

ExemplarTask fixture_task() {
  ExemplarTask t;
  t.id = "t";
  t.x = testing::disc_image(24, 200, 40, 0);
  t.x_edit = testing::disc_image(24, 40, 200, 0);
  t.y = testing::disc_image(32, 220, 60, 0, 0.4);
  return t;
}

struct Editor {
  RunConfig cfg;
  std::unique_ptr<BackendHandle<double>> backend;
  ClientBundle clients;

  explicit Editor(const json& j)
      : cfg(parse_config(j, "/")),
        backend(make_backend(cfg)),
        clients(make_clients(cfg)) {}

  EditOutcome edit(const ExemplarTask& t, bool trajectory = false) {
    return run_edit(t, cfg, *backend, clients, make_templates(cfg),
                    trajectory);
  }
};

json without_timings(json p) {
  p.erase("timings_s");
  return p;
}

TEST(RunEditTest, ProvenanceContents) {
  Editor r(testing::toy_config_json(10));
  const EditOutcome out = r.edit(fixture_task());
  EXPECT_EQ(out.image.width(), 16);
  EXPECT_EQ(out.image.height(), 16);
  const json& p = out.provenance;
  EXPECT_EQ(p["id"], "t");
  EXPECT_EQ(p["g_text"], "The disc changes from red to green.");
  EXPECT_EQ(p["g_caption"], "A green disc on a soft gradient background.");
  EXPECT_EQ(p["caption_truncated"], false);
  EXPECT_EQ(p["source_caption"], "A red disc on a soft gradient background.");
  EXPECT_EQ(p["prompt_version"], PromptTemplates::defaults().version());
  EXPECT_EQ(p["seeds"]["run"], 0);
  EXPECT_EQ(p["seeds"]["backend"], 7);
  EXPECT_EQ(p["models"]["backend"], r.backend->id());
  EXPECT_EQ(p["schedule"]["steps"], 10);
  EXPECT_EQ(p["record"]["feature_tensors"], 10);
  EXPECT_EQ(p["record"]["qk_pairs"], 80);
  EXPECT_EQ(p["embedding"]["k_delta_tokens"], 4);
  EXPECT_EQ(p["embedding"]["width"], 16);
  EXPECT_EQ(p["config"], r.cfg.snapshot());
  EXPECT_EQ(p["output"]["png_sha256"], sha256_hex(encode_png(out.image)));
  EXPECT_EQ(p["inputs"]["y"]["width"], 32);

  const std::vector<std::string> stages = {
      "setup", "capture", "caption_source", "encode",
      "invert", "record", "edit", "decode"};
  ASSERT_EQ(out.timings.stages.size(), stages.size());
  for (size_t i = 0; i < stages.size(); ++i) {
    EXPECT_EQ(out.timings.stages[i].first, stages[i]);
    EXPECT_TRUE(p["timings_s"].contains(stages[i]));
  }
  EXPECT_GT(out.timings.total_s, 0.0);
  EXPECT_TRUE(p["timings_s"].contains("total"));
}

TEST(RunEditTest, Deterministic) {
  Editor a(testing::toy_config_json(8));
  Editor b(testing::toy_config_json(8));
  const EditOutcome x = a.edit(fixture_task(), true);
  const EditOutcome y = b.edit(fixture_task(), true);
  EXPECT_EQ(encode_png(x.image), encode_png(y.image));
  EXPECT_EQ(without_timings(x.provenance), without_timings(y.provenance));
  EXPECT_EQ(trajectory_json(x.trajectory), trajectory_json(y.trajectory));
}

TEST(RunEditTest, EditChangesTheImage) {
  Editor r(testing::toy_config_json(10));
  const ExemplarTask t = fixture_task();
  const EditOutcome out = r.edit(t);
  EXPECT_FALSE(out.image == resize_bilinear(t.y, 16, 16));
}

TEST(RunEditTest, TrajectoryRunsFromNoiseToClean) {
  Editor r(testing::toy_config_json(6));
  const EditOutcome out = r.edit(fixture_task(), true);
  ASSERT_EQ(out.trajectory.size(), 7u);
  EXPECT_EQ(out.trajectory.front().t_index, 6);
  EXPECT_EQ(out.trajectory.back().t_index, 0);
  const json j = trajectory_json(out.trajectory);
  ASSERT_EQ(j.size(), 7u);
  EXPECT_EQ(j[6]["t_index"], 0);
  EXPECT_EQ(j[0]["sha256"].get<std::string>().size(), 64u);
  EXPECT_TRUE(r.edit(fixture_task(), false).trajectory.empty());
}

TEST(RunEditTest, GroundTruthNotNeeded) {
  Editor r(testing::toy_config_json(4));
  ExemplarTask t = fixture_task();
  t.y_edit.reset();
  EXPECT_NO_THROW(r.edit(t));
}

TEST(RunEditTest, FailuresNameTheStage) {
  json j = testing::toy_config_json(4);
  j["vlm"]["responses"].erase("describe_edit");
  j["vlm"]["retry_delay_ms"] = 0;
  Editor r(j);
  try {
    r.edit(fixture_task());
    FAIL() << "expected StageError";
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage(), "capture/describe_edit");
  }

  json bad_layer = testing::toy_config_json(4);
  bad_layer["edit"]["feature_layer"] = 99;
  Editor r2(bad_layer);
  try {
    r2.edit(fixture_task());
    FAIL() << "expected StageError";
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage(), "setup");
    EXPECT_THROW(e.rethrow_inner(), HookError);
  }
}

TEST(RunEditTest, MissingSourceCaptionIsRecordedAsNull) {
  json j = testing::toy_config_json(4);
  j["vlm"]["responses"].erase("caption_source");
  Editor r(j);
  const EditOutcome out = r.edit(fixture_task());
  EXPECT_TRUE(out.provenance["source_caption"].is_null());
}

TEST(RunEditTest, LogsStageTimings) {
  auto sink = std::make_shared<spdlog::sinks::ringbuffer_sink_mt>(64);
  logger().sinks().push_back(sink);
  Editor r(testing::toy_config_json(4));
  r.edit(fixture_task());
  logger().sinks().pop_back();
  std::string all;
  for (const auto& line : sink->last_formatted()) all += line;
  for (const char* stage : {"stage invert", "stage record", "stage edit",
                            "stage total"}) {
    EXPECT_NE(all.find(stage), std::string::npos) << stage;
  }
}

TEST(WriteOutputsTest, WritesPngAndSidecar) {
  TempDir dir;
  Editor r(testing::toy_config_json(4));
  const EditOutcome out = r.edit(fixture_task(), true);
  const fs::path png = write_edit_outputs(out, dir / "o", "name");
  EXPECT_EQ(png, dir / "o/name.png");
  EXPECT_EQ(read_image(png), out.image);
  const Bytes side = read_file(dir / "o/name.provenance.json");
  EXPECT_EQ(json::parse(side.begin(), side.end()), out.provenance);
  EXPECT_TRUE(fs::exists(dir / "o/name.trajectory.json"));
}

std::map<std::string, Bytes> pngs(const fs::path& dir) {
  std::map<std::string, Bytes> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() == ".png") {
      out[e.path().filename().string()] = read_file(e.path());
    }
  }
  return out;
}

TEST(RunBatchTest, SerialAndParallelAgree) {
  TempDir dir;
  const auto m = load_manifest(testing::write_fixture_corpus(dir / "data"));
  const RunConfig cfg = parse_config(testing::toy_config_json(6), "/");
  const BatchSummary serial = run_batch(m, cfg, dir / "serial", 1);
  const BatchSummary parallel = run_batch(m, cfg, dir / "parallel", 2);
  EXPECT_EQ(serial.n_ok(), 3);
  EXPECT_EQ(parallel.n_ok(), 3);
  const auto a = pngs(dir / "serial");
  EXPECT_EQ(a.size(), 3u);
  EXPECT_EQ(a, pngs(dir / "parallel"));
  for (size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(serial.entries[i].id, m.entries[i].id);
    EXPECT_EQ(serial.entries[i].output_sha256,
              parallel.entries[i].output_sha256);
  }
  const Bytes s = read_file(dir / "serial/batch_summary.json");
  const json summary = json::parse(s.begin(), s.end());
  EXPECT_EQ(summary["succeeded"], 3);
  EXPECT_EQ(summary["failed"], 0);
  EXPECT_TRUE(fs::exists(dir / "serial/e1.provenance.json"));
}

TEST(RunBatchTest, CorruptEntryIsIsolated) {
  TempDir dir;
  const auto path = testing::write_fixture_corpus(dir / "data");
  write_text(dir / "data/images/e1_x_edit.png", "garbage");
  const auto m = load_manifest(path);
  const RunConfig cfg = parse_config(testing::toy_config_json(4), "/");
  const BatchSummary s = run_batch(m, cfg, dir / "out", 2);
  EXPECT_EQ(s.n_ok(), 2);
  EXPECT_EQ(s.n_failed(), 1);
  EXPECT_FALSE(s.entries[1].ok);
  EXPECT_EQ(s.entries[1].stage, "load");
  EXPECT_EQ(pngs(dir / "out").size(), 2u);
  EXPECT_FALSE(fs::exists(dir / "out/e1.png"));
  const json j = s.to_json();
  EXPECT_EQ(j["entries"][1]["stage"], "load");
}

TEST(RunBatchTest, BackendLoadFailureThrows) {
  TempDir dir;
  const auto m = load_manifest(testing::write_fixture_corpus(dir / "data", 1));
  json j = testing::toy_config_json(4);
  j["backend"] = {{"kind", "remote"}, {"endpoint", "http://127.0.0.1:1"}};
  const RunConfig cfg = parse_config(j, "/");
  EXPECT_THROW(run_batch(m, cfg, dir / "out", 1), LoadError);
  EXPECT_THROW(run_batch(m, cfg, dir / "out", 0), ConfigError);
}

}  // namespace
}  // namespace exedit
