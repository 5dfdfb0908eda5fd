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

#include <gtest/gtest.h>
#include <spdlog/sinks/ringbuffer_sink.h>

#include <chrono>
#include <random>
#include <sstream>

#include "exedit/edit_capture.hpp"
#include "exedit/image_io.hpp"
#include "exedit/logging.hpp"
#include "exedit/toy_clients.hpp"
#include "test_util.hpp"

#ifndef EXEDIT_SOURCE_DIR
#error "EXEDIT_SOURCE_DIR must be defined"
#endif

namespace exedit {
namespace {

using exedit::testing::disc_image;
using exedit::testing::pattern_image;
using exedit::testing::random_image;
using Responses = std::map<std::string, std::string>;

std::string words(int n, const std::string& stem = "word") {
  std::string out;
  for (int i = 0; i < n; ++i) {
    if (i) out += (i % 3 == 0) ? "\n " : "  ";
    out += stem + std::to_string(i);
  }
  return out;
}

TEST(GridTest, ComposesSideBySide) {
  const Image8 x = pattern_image(512, 512, 0);
  const Image8 xe = pattern_image(512, 512, 90);
  const Image8 g = compose_exemplar_grid(x, xe);
  EXPECT_EQ(g.width(), 1032);
  EXPECT_EQ(g.height(), 512);
  for (int c = 0; c < 3; ++c) {
    EXPECT_TRUE((g.plane(c).block(0, 0, 512, 512) == x.plane(c)).all());
    EXPECT_TRUE((g.plane(c).block(0, 520, 512, 512) == xe.plane(c)).all());
    EXPECT_TRUE((g.plane(c).block(0, 512, 512, 8) == 255).all());
  }
}

TEST(GridTest, IdenticalHalvesForIdenticalExemplars) {
  const Image8 x = random_image(32, 24, 5);
  const Image8 g = compose_exemplar_grid(x, x);
  for (int c = 0; c < 3; ++c)
    EXPECT_TRUE((g.plane(c).block(0, 0, 24, 32) ==
                 g.plane(c).block(0, 40, 24, 32))
                    .all());
}

TEST(GridTest, ShapeMismatchIsDimensionError) {
  EXPECT_THROW(
      compose_exemplar_grid(pattern_image(16, 16), pattern_image(16, 12)),
      DimensionError);
}

TEST(WordsTest, TruncationProperty) {
  std::mt19937 rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = std::uniform_int_distribution<int>(0, 60)(rng);
    const int max = std::uniform_int_distribution<int>(1, 30)(rng);
    const std::string text = words(n);
    const CaptionResult r = truncate_words(text, max);
    EXPECT_EQ(word_count(r.text), std::min(n, max));
    EXPECT_EQ(r.truncated, n > max);
    if (n <= max) EXPECT_EQ(r.text, trim(text));
  }
}

TEST(TemplateTest, RendersSlots) {
  EXPECT_EQ(render_template("a {x} b {y}", {{"x", "1"}, {"y", "2"}}),
            "a 1 b 2");
  EXPECT_THROW(render_template("a {z}", {{"x", "1"}}), ConfigError);
}

TEST(TemplateTest, ValidationRejectsBadTemplates) {
  PromptTemplates t = PromptTemplates::defaults();
  EXPECT_NO_THROW(t.validate());
  t.p2 = "no slot here";
  EXPECT_THROW(t.validate(), ConfigError);
  t = PromptTemplates::defaults();
  t.p1 = "unknown {slot}";
  EXPECT_THROW(t.validate(), ConfigError);
  t = PromptTemplates::defaults();
  t.max_caption_words = 0;
  EXPECT_THROW(t.validate(), ConfigError);
}

TEST(TemplateTest, ShippedFilesMatchDefaults) {
  const std::filesystem::path dir =
      std::filesystem::path(EXEDIT_SOURCE_DIR) / "prompts" / "v1";
  const PromptTemplates loaded = PromptTemplates::load(
      dir / "p1.txt", dir / "p2.txt", dir / "p_source.txt", "v1", 20);
  const PromptTemplates def = PromptTemplates::defaults();
  EXPECT_EQ(loaded.p1, def.p1);
  EXPECT_EQ(loaded.p2, def.p2);
  EXPECT_EQ(loaded.p_source, def.p_source);
  EXPECT_EQ(loaded.version(), def.version());
}

TEST(TemplateTest, VersionTracksText) {
  PromptTemplates a = PromptTemplates::defaults();
  PromptTemplates b = a;
  b.p1 += " Be brief.";
  EXPECT_NE(a.version(), b.version());
  EXPECT_EQ(a.version().rfind("v1@", 0), 0u);
}

TEST(CaptionTest, AdversarialLongResponsesAreTruncated) {
  const Image8 y = pattern_image(16, 16);
  const auto templates = PromptTemplates::defaults();
  for (int n : {21, 35, 40, 100}) {
    StubVlmClient vlm(Responses{{"caption_target", words(n)}});
    const CaptionResult r =
        caption_edited_target(y, "make it red", templates, vlm);
    EXPECT_LE(word_count(r.text), 20);
    EXPECT_EQ(word_count(r.text), 20);
    EXPECT_TRUE(r.truncated);
  }
}

TEST(CaptionTest, ShortResponseVerbatim) {
  const std::string answer =
      "a red car parked on a quiet street under a cloudy evening sky today";
  StubVlmClient vlm(Responses{{"caption_target", "  " + answer + "\n"}});
  const CaptionResult r = caption_edited_target(
      pattern_image(16, 16), "recolor", PromptTemplates::defaults(), vlm);
  EXPECT_EQ(r.text, answer);
  EXPECT_FALSE(r.truncated);
}

TEST(CaptionTest, PromptCarriesEditDescriptionAndImage) {
  StubVlmClient vlm(Responses{{"caption_target", "a cat"}});
  caption_edited_target(pattern_image(16, 16), "turn the dog into a cat",
                        PromptTemplates::defaults(), vlm);
  ASSERT_EQ(vlm.requests().size(), 1u);
  const VlmRequest& req = vlm.requests()[0];
  EXPECT_NE(req.prompt.find("turn the dog into a cat"), std::string::npos);
  EXPECT_NE(req.prompt.find("20 words"), std::string::npos);
  ASSERT_EQ(req.images.size(), 1u);
  EXPECT_EQ(decode_image(req.images[0]), pattern_image(16, 16));
  EXPECT_EQ(req.decoding.temperature, 0.0);
}

TEST(CaptionTest, EmptyEditDescriptionIsPrecondition) {
  StubVlmClient vlm(Responses{{"caption_target", "a cat"}});
  EXPECT_THROW(caption_edited_target(pattern_image(16, 16), "  ",
                                     PromptTemplates::defaults(), vlm),
               PreconditionError);
}

TEST(DescribeTest, EmptyAnswerIsCaptureError) {
  StubVlmClient vlm(Responses{{"describe_edit", "   \n"}});
  const Image8 grid =
      compose_exemplar_grid(pattern_image(16, 16), pattern_image(16, 16, 3));
  EXPECT_THROW(describe_edit(grid, PromptTemplates::defaults(), vlm),
               CaptureError);
}

TEST(DescribeTest, SendsGridImage) {
  StubVlmClient vlm(Responses{{"describe_edit", "The sky turns orange."}});
  const Image8 grid =
      compose_exemplar_grid(pattern_image(16, 16), pattern_image(16, 16, 3));
  EXPECT_EQ(describe_edit(grid, PromptTemplates::defaults(), vlm),
            "The sky turns orange.");
  ASSERT_EQ(vlm.requests().size(), 1u);
  EXPECT_EQ(vlm.requests()[0].purpose, "describe_edit");
  EXPECT_EQ(decode_image(vlm.requests()[0].images.at(0)), grid);
}

TEST(RetryTest, RetriesTransientFailures) {
  auto stub = std::make_unique<StubVlmClient>(
      std::map<std::string, std::string>{{"describe_edit", "ok"}});
  StubVlmClient* raw = stub.get();
  raw->fail_next(2);
  RetryingVlmClient vlm(std::move(stub), {3, std::chrono::milliseconds(1), 2});
  VlmRequest req;
  req.purpose = "describe_edit";
  EXPECT_EQ(vlm.complete(req).text, "ok");
  EXPECT_EQ(raw->requests().size(), 3u);
}

TEST(RetryTest, GivesUpAfterMaxAttempts) {
  auto stub = std::make_unique<StubVlmClient>(
      std::map<std::string, std::string>{{"describe_edit", "ok"}});
  StubVlmClient* raw = stub.get();
  raw->fail_next(5);
  RetryingVlmClient vlm(std::move(stub), {3, std::chrono::milliseconds(1), 2});
  VlmRequest req;
  req.purpose = "describe_edit";
  EXPECT_THROW(vlm.complete(req), ServiceError);
  EXPECT_EQ(raw->requests().size(), 3u);
}

TEST(RetryTest, NonRetriableFailsImmediately) {
  auto stub = std::make_unique<StubVlmClient>();
  StubVlmClient* raw = stub.get();
  RetryingVlmClient vlm(std::move(stub), {3, std::chrono::milliseconds(1), 2});
  VlmRequest req;
  req.purpose = "describe_edit";
  EXPECT_THROW(vlm.complete(req), ServiceError);
  EXPECT_EQ(raw->requests().size(), 1u);
}

TEST(DeltaTest, ZeroForIdenticalExemplars) {
  ToyImageEncoder enc;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Image8 x = random_image(16, 16, seed);
    const Eigen::VectorXd d = compute_image_delta(x, x, enc);
    EXPECT_TRUE((d.array() == 0.0).all());
  }
}

TEST(DeltaTest, AntisymmetricExactly) {
  ToyImageEncoder enc;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Image8 a = random_image(16, 16, seed);
    const Image8 b = random_image(16, 16, seed + 100);
    const Eigen::VectorXd ab = compute_image_delta(a, b, enc);
    const Eigen::VectorXd ba = compute_image_delta(b, a, enc);
    EXPECT_TRUE((ab.array() == -ba.array()).all());
  }
}

TEST(PoolTest, InterpolatesLinearly) {
  Eigen::VectorXd d(2);
  d << 0.0, 1.0;
  const Eigen::MatrixXd p = pool_to_context(d, 3, 2);
  ASSERT_EQ(p.rows(), 2);
  ASSERT_EQ(p.cols(), 3);
  EXPECT_EQ(p(0, 0), 0.0);
  EXPECT_EQ(p(0, 1), 0.5);
  EXPECT_EQ(p(0, 2), 1.0);
  EXPECT_TRUE((p.row(0).array() == p.row(1).array()).all());
}

TEST(PoolTest, IdentityWhenWidthsMatch) {
  const Eigen::VectorXd d = Eigen::VectorXd::Random(17);
  const Eigen::MatrixXd p = pool_to_context(d, 17, 4);
  for (int r = 0; r < 4; ++r)
    EXPECT_TRUE((p.row(r).transpose().array() == d.array()).all());
}

TEST(PoolTest, ZeroStaysZeroAndIsLinear) {
  EXPECT_TRUE((pool_to_context(Eigen::VectorXd::Zero(32), 16, 4).array() == 0)
                  .all());
  std::mt19937 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = std::uniform_int_distribution<int>(1, 40)(rng);
    const int m = std::uniform_int_distribution<int>(1, 40)(rng);
    const Eigen::VectorXd d = Eigen::VectorXd::Random(n);
    const Eigen::MatrixXd p = pool_to_context(d, m, 1);
    const Eigen::MatrixXd q = pool_to_context(Eigen::VectorXd(-d), m, 1);
    EXPECT_TRUE((p.array() == -q.array()).all());
    EXPECT_LE(p.maxCoeff(), d.maxCoeff());
    EXPECT_GE(p.minCoeff(), d.minCoeff());
  }
}

TEST(PoolTest, RejectsBadInput) {
  EXPECT_THROW(pool_to_context(Eigen::VectorXd(), 4, 1), PreconditionError);
  EXPECT_THROW(pool_to_context(Eigen::VectorXd::Ones(3), 4, 0),
               PreconditionError);
  Eigen::VectorXd d = Eigen::VectorXd::Ones(3);
  d(1) = std::numeric_limits<double>::infinity();
  EXPECT_THROW(pool_to_context(d, 4, 1), NumericError);
}

TEST(AssembleTest, ShapeAndSliceRecovery) {
  const Eigen::MatrixXf delta = Eigen::MatrixXf::Random(4, 768);
  const Eigen::MatrixXf text = Eigen::MatrixXf::Random(77, 768);
  const auto g = assemble_edit_embedding<float>(delta, text);
  EXPECT_EQ(g.combined.rows(), 81);
  EXPECT_EQ(g.combined.cols(), 768);
  EXPECT_EQ(g.k(), 4);
  EXPECT_EQ(g.n_text(), 77);
  EXPECT_TRUE((g.combined.topRows(4).array() == delta.array()).all());
  EXPECT_TRUE((g.combined.bottomRows(77).array() == text.array()).all());
}

TEST(AssembleTest, WidthMismatchIsDimensionError) {
  EXPECT_THROW(assemble_edit_embedding<float>(Eigen::MatrixXf::Zero(4, 768),
                                              Eigen::MatrixXf::Zero(77, 1024)),
               DimensionError);
}

TEST(AssembleTest, NonFiniteIsNumericError) {
  Eigen::MatrixXd text = Eigen::MatrixXd::Zero(3, 8);
  text(1, 1) = std::nan("");
  EXPECT_THROW(
      assemble_edit_embedding<double>(Eigen::MatrixXd::Zero(2, 8), text),
      NumericError);
}

ExemplarTask fixture_task() {
  ExemplarTask t;
  t.id = "red-disc";
  t.x = disc_image(16, 40, 40, 200);
  t.x_edit = disc_image(16, 220, 30, 30);
  t.y = disc_image(16, 40, 200, 40, 0.4, 0.6);
  return t;
}

TEST(CaptureTest, AssemblesFromStubClients) {
  StubVlmClient vlm(Responses{{"describe_edit", "The disc turns red."},
                     {"caption_target", words(40, "red")}});
  ToyImageEncoder enc_img;
  ToyTextEncoder enc_text;
  const auto r = capture_edit<double>(fixture_task(),
                                      PromptTemplates::defaults(), vlm,
                                      enc_img, enc_text, 4);
  EXPECT_EQ(r.text.g_text, "The disc turns red.");
  EXPECT_EQ(word_count(r.text.g_caption), 20);
  EXPECT_TRUE(r.text.caption_truncated);
  EXPECT_EQ(r.text.prompt_version, PromptTemplates::defaults().version());
  EXPECT_EQ(r.embedding.k(), 4);
  EXPECT_EQ(r.embedding.n_text(), 77);
  EXPECT_EQ(r.embedding.width(), 16);
  EXPECT_EQ(r.embedding.combined.rows(), 81);
  const Eigen::MatrixXd text = enc_text.encode_tokens(r.text.g_caption);
  EXPECT_TRUE((r.embedding.text_tokens.array() == text.array()).all());
  ASSERT_EQ(vlm.requests().size(), 2u);
  EXPECT_EQ(vlm.requests()[1].prompt.find("The disc turns red.") ==
                std::string::npos,
            false);
}

TEST(CaptureTest, FailuresNameTheStage) {
  StubVlmClient vlm(Responses{{"describe_edit", ""}});
  ToyImageEncoder enc_img;
  ToyTextEncoder enc_text;
  try {
    capture_edit<double>(fixture_task(), PromptTemplates::defaults(), vlm,
                         enc_img, enc_text, 4);
    FAIL() << "expected StageError";
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage(), "describe_edit");
    EXPECT_THROW(e.rethrow_inner(), CaptureError);
  }
}

TEST(CaptureTest, LogsVlmResponsesWithPromptVersion) {
  auto sink = std::make_shared<spdlog::sinks::ringbuffer_sink_mt>(16);
  logger().sinks().push_back(sink);
  StubVlmClient vlm(Responses{{"describe_edit", "The disc turns red."},
                     {"caption_target", "a red disc"}});
  ToyImageEncoder enc_img;
  ToyTextEncoder enc_text;
  capture_edit<double>(fixture_task(), PromptTemplates::defaults(), vlm,
                       enc_img, enc_text, 4);
  logger().sinks().pop_back();
  std::ostringstream all;
  for (const auto& line : sink->last_formatted()) all << line;
  const std::string log = all.str();
  EXPECT_NE(log.find("The disc turns red."), std::string::npos);
  EXPECT_NE(log.find("a red disc"), std::string::npos);
  EXPECT_NE(log.find(PromptTemplates::defaults().version()),
            std::string::npos);
}

TEST(PreprocessTest, ResizesAllImages) {
  ExemplarTask t = fixture_task();
  t.y = pattern_image(40, 30);
  t.y_edit = pattern_image(40, 30);
  const ExemplarTask r = preprocess_task(t, 16);
  EXPECT_EQ(r.y.width(), 16);
  EXPECT_EQ(r.y.height(), 16);
  EXPECT_EQ(r.y_edit->width(), 16);
  EXPECT_EQ(r.x, t.x);
}

TEST(ImageTest, ResizeIdentityAndConstant) {
  const Image8 img = random_image(13, 9, 2);
  EXPECT_EQ(resize_bilinear(img, 13, 9), img);
  Image8 flat(10, 10);
  for (int c = 0; c < 3; ++c) flat.plane(c).setConstant(77);
  const Image8 r = resize_bilinear(flat, 23, 5);
  for (int c = 0; c < 3; ++c) EXPECT_TRUE((r.plane(c) == 77).all());
}

TEST(ImageIoTest, PngRoundTrip) {
  const Image8 img = random_image(21, 11, 8);
  EXPECT_EQ(decode_image(encode_png(img)), img);
}

TEST(ImageIoTest, GarbageIsDecodeError) {
  EXPECT_THROW(decode_image(Bytes{1, 2, 3, 4, 5}), ImageDecodeError);
}

TEST(ImageIoTest, Base64RoundTrip) {
  for (int n = 0; n < 20; ++n) {
    Bytes b(n);
    for (int i = 0; i < n; ++i) b[i] = static_cast<std::uint8_t>(i * 37 + 1);
    EXPECT_EQ(base64_decode(base64_encode(b)), b);
  }
  EXPECT_EQ(base64_encode(Bytes{'f', 'o', 'o', 'b'}), "Zm9vYg==");
}

TEST(ImageIoTest, Sha256KnownVector) {
  EXPECT_EQ(sha256_hex(std::string_view("abc")),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

}  // namespace
}  // namespace exedit
