/* Copyright 2026 The fovlink Authors

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "fovlink/experiments.hpp"

#include <gtest/gtest.h>

#include <chrono>
#include <thread>

#include "fovlink/error.hpp"
#include "test_support.hpp"

namespace fovlink {
namespace {

using testing::Fault;
using testing::Negative;
using testing::Positive;
using testing::Text;

ExperimentConfig Config(int runs = 1, int parallelism = 1) {
  ExperimentConfig c;
  c.runs_per_prompt = runs;
  c.parallelism = parallelism;
  return c;
}

template <typename Fn>
ErrorCode CodeOf(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::kIoError;
}

TEST(BinaryExperimentTest, ReproducesPublishedConfusionMatrix) {
  // The published column sums imply 134 negatives.
  auto f = testing::MakeBinaryFixture(126, 134, {3, 17, 42, 77, 101, 125},
                                      {0, 12, 55, 90, 133});
  auto gw = testing::MockGateway(f.script);
  auto r = RunBinaryExperiment(f.scenes, PromptId::kBin, gw, Config(),
                               testing::SyntheticImages());
  EXPECT_EQ(r.matrix, (ConfusionMatrix{120, 6, 5, 129}));
  EXPECT_NEAR(*r.stats.recall * 100, 95.24, 0.01);
  EXPECT_EQ(*r.stats.recall, 120.0 / 126.0);
  EXPECT_EQ(r.results.size(), 260u);
  EXPECT_EQ(r.n_flagged, 0u);
}

TEST(BinaryExperimentTest, FullNegativeSetReportsRawCounts) {
  auto f = testing::MakeBinaryFixture(126, 138, {3, 17, 42, 77, 101, 125},
                                      {0, 12, 55, 90, 137});
  auto r = RunBinaryExperiment(f.scenes, PromptId::kBin, testing::MockGateway(f.script),
                               Config(), testing::SyntheticImages());
  EXPECT_EQ(r.matrix, (ConfusionMatrix{120, 6, 5, 133}));
  EXPECT_EQ(r.matrix.total(), 264);
}

TEST(BinaryExperimentTest, ConstantYesPredictor) {
  auto f = testing::MakeBinaryFixture(4, 6, {}, {0, 1, 2, 3, 4, 5});
  auto gw = testing::MockGateway(f.script);
  auto r = RunBinaryExperiment(f.scenes, PromptId::kBin, gw, Config(),
                               testing::SyntheticImages());
  EXPECT_EQ(*r.stats.recall, 1.0);
  EXPECT_EQ(*r.stats.specificity, 0.0);
}

TEST(BinaryExperimentTest, UnparseableReplyOnNegativeIsFlaggedFalsePositive) {
  auto f = testing::MakeBinaryFixture(2, 3, {}, {});
  f.script.Add({"neg001", "BIN", 0}, Text("There appears to be a person crossing."));
  auto gw = testing::MockGateway(f.script);
  auto r = RunBinaryExperiment(f.scenes, PromptId::kBin, gw, Config(),
                               testing::SyntheticImages());
  EXPECT_EQ(r.matrix, (ConfusionMatrix{2, 0, 1, 2}));
  EXPECT_EQ(r.n_flagged, 1u);
  for (const auto& res : r.results) {
    EXPECT_EQ(res.flagged, res.scene_id == "neg001");
  }
}

TEST(BinaryExperimentTest, PerRunMatricesAndSortedResults) {
  auto f = testing::MakeBinaryFixture(3, 3, {}, {}, "BIN", 2);
  f.script.Add({"neg002", "BIN", 1}, Text("Yes."));
  auto gw = testing::MockGateway(f.script);
  auto r = RunBinaryExperiment(f.scenes, PromptId::kBin, gw, Config(2),
                               testing::SyntheticImages());
  ASSERT_EQ(r.per_run.size(), 2u);
  EXPECT_EQ(r.per_run[0], (ConfusionMatrix{3, 0, 0, 3}));
  EXPECT_EQ(r.per_run[1], (ConfusionMatrix{3, 0, 1, 2}));
  EXPECT_EQ(r.matrix, r.per_run[0]);
  ASSERT_EQ(r.results.size(), 12u);
  EXPECT_EQ(r.results.front().scene_id, "neg000");
  EXPECT_EQ(r.results[1].run_idx, 1);
  EXPECT_TRUE(std::is_sorted(r.results.begin(), r.results.end(),
                             [](const RunResult& a, const RunResult& b) {
                               return std::tie(a.scene_id, a.run_idx) <
                                      std::tie(b.scene_id, b.run_idx);
                             }));
}

TEST(BinaryExperimentTest, FaultsAreRecordedAndTotalFaultIsFatal) {
  auto f = testing::MakeBinaryFixture(2, 2, {}, {});
  f.script.Add({"pos000", "BIN", 0}, Fault(FaultKind::kTimeout));
  auto gw = testing::MockGateway(f.script);
  auto r = RunBinaryExperiment(f.scenes, PromptId::kBin, gw, Config(),
                               testing::SyntheticImages());
  EXPECT_EQ(r.n_faulted, 1u);
  EXPECT_EQ(r.matrix, (ConfusionMatrix{1, 0, 0, 2}));
  EXPECT_EQ(r.results.size(), 4u);

  MockScript dead;
  for (const auto* s : f.scenes.All()) dead.Add({s->scene_id, "BIN", 0}, Fault(FaultKind::kTransport));
  auto dead_gw = testing::MockGateway(dead);
  EXPECT_EQ(CodeOf([&] {
              RunBinaryExperiment(f.scenes, PromptId::kBin, dead_gw, Config(),
                                  testing::SyntheticImages());
            }),
            ErrorCode::kBackendExhausted);
}

TEST(BinaryExperimentTest, RejectsCoordinatePrompt) {
  auto f = testing::MakeBinaryFixture(1, 1, {}, {});
  auto gw = testing::MockGateway(f.script);
  EXPECT_EQ(CodeOf([&] {
              RunBinaryExperiment(f.scenes, PromptId::kP1, gw, Config(),
                                  testing::SyntheticImages());
            }),
            ErrorCode::kPrecondition);
}

SceneSet LocalizationScenes() {
  // gt areas 0.1, 0.25 and 0.08.
  SceneSet s;
  s.positives = {Positive("a", {100, 200, 300, 700}),
                 Positive("b", {0, 0, 500, 500}),
                 Positive("c", {200, 200, 600, 400})};
  s.negatives = {Negative("n")};
  return s;
}

MockScript ScriptAll(const SceneSet& scenes, const std::string& prompt, int runs,
                     const std::function<std::string(const SceneRecord&)>& reply) {
  MockScript script;
  for (const auto& p : scenes.positives) {
    for (int r = 0; r < runs; ++r) script.Add({p.scene_id, prompt, r}, Text(reply(p)));
  }
  return script;
}

TEST(LocalizationExperimentTest, EchoOracle) {
  auto scenes = LocalizationScenes();
  auto gw = testing::MockGateway(ScriptAll(scenes, "P1", 2, [](const SceneRecord& s) {
    return FormatBboxTemplate(NormalizeBBox(s.gt_boxes[0], s.width, s.height));
  }));
  auto r = RunLocalizationExperiment(scenes, PromptId::kP1, gw, Config(2),
                                     testing::SyntheticImages());
  EXPECT_EQ(r.summary.n_tests, 6u);
  EXPECT_EQ(r.summary.union_rate, 1.0);
  EXPECT_DOUBLE_EQ(*r.summary.recall_mean_overlapping, 1.0);
  EXPECT_DOUBLE_EQ(*r.summary.iou_mean_overlapping, 1.0);
}

TEST(LocalizationExperimentTest, FullFrameReplyIsPenalisedByIou) {
  auto scenes = LocalizationScenes();
  auto gw = testing::MockGateway(
      ScriptAll(scenes, "P1", 1, [](const SceneRecord&) { return "(0,0), (1,1)"; }));
  auto r = RunLocalizationExperiment(scenes, PromptId::kP1, gw, Config(),
                                     testing::SyntheticImages());
  EXPECT_EQ(r.summary.union_rate, 1.0);
  EXPECT_DOUBLE_EQ(r.summary.recall_mean_all, 1.0);
  EXPECT_NEAR(r.summary.iou_mean_all, (0.1 + 0.25 + 0.08) / 3, 1e-12);
}

TEST(LocalizationExperimentTest, TotalKindAFailure) {
  auto scenes = LocalizationScenes();
  auto gw = testing::MockGateway(ScriptAll(scenes, "P2", 1, [](const SceneRecord&) {
    return "I cannot identify any pedestrian in this image.";
  }));
  auto r = RunLocalizationExperiment(scenes, PromptId::kP2, gw, Config(),
                                     testing::SyntheticImages());
  EXPECT_EQ(r.summary.union_rate, 0.0);
  EXPECT_EQ(r.failure_counts.size(), 1u);
  EXPECT_EQ(r.failure_counts.at(FailureKind::kNoPedestrianDetected), 3u);
  EXPECT_EQ(SelectFailures(r.results).size(), 3u);
}

TEST(LocalizationExperimentTest, MultiBoxPositiveRejected) {
  auto scenes = LocalizationScenes();
  scenes.positives[0].gt_boxes.push_back({1, 1, 2, 2});
  auto gw = testing::MockGateway(MockScript{});
  EXPECT_EQ(CodeOf([&] {
              RunLocalizationExperiment(scenes, PromptId::kP1, gw, Config(),
                                        testing::SyntheticImages());
            }),
            ErrorCode::kPrecondition);
}

TEST(PromptComparisonTest, IdenticalFixturesGiveIdenticalSummaries) {
  auto scenes = LocalizationScenes();
  MockScript script;
  for (const char* p : {"P1", "P2", "P3"}) {
    for (const auto& s : scenes.positives) script.Add({s.scene_id, p, 0}, Text("(0.1,0.1), (0.4,0.6)"));
  }
  auto gw = testing::MockGateway(script);
  auto config = Config();
  config.prompt_ids = {PromptId::kP1, PromptId::kP2, PromptId::kP3};
  auto cmp = RunPromptComparison(scenes, gw, config, testing::SyntheticImages());
  ASSERT_EQ(cmp.per_prompt.size(), 3u);
  for (const auto& r : cmp.per_prompt) {
    EXPECT_EQ(r.summary.recall_mean_all, cmp.per_prompt[0].summary.recall_mean_all);
    EXPECT_EQ(r.summary.iou_mean_all, cmp.per_prompt[0].summary.iou_mean_all);
    EXPECT_EQ(r.summary.union_rate, cmp.per_prompt[0].summary.union_rate);
  }
}

TEST(PromptComparisonTest, ScriptedQualityOrdersRecall) {
  // Against gt (0.1,0.2)-(0.3,0.7): full, half and disjoint coverage.
  SceneSet scenes;
  scenes.positives = {Positive("a", {100, 200, 300, 700})};
  MockScript script;
  script.Add({"a", "P1", 0}, Text("(0.1,0.2), (0.3,0.7)"));
  script.Add({"a", "P2", 0}, Text("(0.1,0.2), (0.2,0.7)"));
  script.Add({"a", "P3", 0}, Text("(0.5,0.5), (0.6,0.6)"));
  auto config = Config();
  config.prompt_ids = {PromptId::kP1, PromptId::kP2, PromptId::kP3};
  auto cmp = RunPromptComparison(scenes, testing::MockGateway(script), config,
                                 testing::SyntheticImages());
  EXPECT_NEAR(cmp.per_prompt[0].summary.recall_mean_all, 1.0, 1e-12);
  EXPECT_NEAR(cmp.per_prompt[1].summary.recall_mean_all, 0.5, 1e-12);
  EXPECT_EQ(cmp.per_prompt[2].summary.recall_mean_all, 0.0);
}

TEST(PromptComparisonTest, EmptyPromptListIsPrecondition) {
  auto gw = testing::MockGateway(MockScript{});
  EXPECT_EQ(CodeOf([&] {
              RunPromptComparison(LocalizationScenes(), gw, Config(),
                                  testing::SyntheticImages());
            }),
            ErrorCode::kPrecondition);
}

TEST(PerImageRecallTest, MeanOverRunsWithFailuresAsZero) {
  SceneSet scenes;
  scenes.positives = {Positive("a", {100, 200, 300, 700})};
  MockScript script;
  script.Add({"a", "P1", 0}, Text("(0.1,0.2), (0.3,0.7)"));
  script.Add({"a", "P1", 1}, Text("no pedestrian"));
  auto r = RunLocalizationExperiment(scenes, PromptId::kP1, testing::MockGateway(script),
                                     Config(2), testing::SyntheticImages());
  EXPECT_NEAR(PerImageRecall(r).at("a"), 0.5, 1e-12);
}

RunResult Located(const std::string& id, int run, double x, double y, double x2, double y2) {
  RunResult r;
  r.scene_id = id;
  r.prompt_id = PromptId::kP1;
  r.run_idx = run;
  r.detection = ParsedDetection::Located(CanonicalizeBBox(x, y, x2, y2), "");
  return r;
}

TEST(ConsistencyTest, IdenticalBoxesAreConsistent) {
  auto e = AnalyzeRunConsistency({Located("a", 0, .1, .1, .5, .5),
                                  Located("a", 1, .1, .1, .5, .5),
                                  Located("a", 2, .1, .1, .5, .5)});
  ASSERT_EQ(e.size(), 1u);
  EXPECT_EQ(e[0].pairwise_iou, (std::vector<double>{1.0, 1.0, 1.0}));
  EXPECT_FALSE(e[0].flagged);
}

TEST(ConsistencyTest, MixedKindsFlagged) {
  auto fail = Located("a", 2, 0, 0, 1, 1);
  fail.detection = ParsedDetection::Failure(FailureKind::kNoPedestrianDetected, "");
  auto e = AnalyzeRunConsistency({Located("a", 0, .1, .1, .5, .5),
                                  Located("a", 1, .1, .1, .5, .5), fail});
  ASSERT_EQ(e.size(), 1u);
  EXPECT_TRUE(e[0].flagged);
  EXPECT_EQ(e[0].outcomes,
            (std::vector<std::string>{"located", "located", "NoPedestrianDetected"}));
}

TEST(ConsistencyTest, LowPairwiseIouFlagged) {
  // Full-height strips [0,.9], [.1,1] and [.365,.635]: IoUs .8, .3, .3.
  auto e = AnalyzeRunConsistency({Located("a", 0, 0.0, 0, 0.9, 1),
                                  Located("a", 1, 0.1, 0, 1.0, 1),
                                  Located("a", 2, 0.365, 0, 0.635, 1)});
  ASSERT_EQ(e.size(), 1u);
  ASSERT_EQ(e[0].pairwise_iou.size(), 3u);
  EXPECT_NEAR(e[0].pairwise_iou[0], 0.8, 1e-9);
  EXPECT_NEAR(e[0].pairwise_iou[1], 0.3, 1e-9);
  EXPECT_NEAR(e[0].pairwise_iou[2], 0.3, 1e-9);
  EXPECT_TRUE(e[0].flagged);
  auto relaxed = AnalyzeRunConsistency({Located("a", 0, 0.0, 0, 0.9, 1),
                                        Located("a", 1, 0.1, 0, 1.0, 1),
                                        Located("a", 2, 0.365, 0, 0.635, 1)},
                                       0.25);
  EXPECT_FALSE(relaxed[0].flagged);
}

TEST(ConsistencyTest, SingleRunIsInsufficient) {
  EXPECT_EQ(CodeOf([] { AnalyzeRunConsistency({Located("a", 0, 0, 0, 1, 1)}); }),
            ErrorCode::kInsufficientRuns);
}

TEST(LowlightTest, NineOfSeventeen) {
  auto f = testing::MakeLowlightFixture();
  ASSERT_EQ(f.failures.size(), 17u);
  EXPECT_NEAR(LowlightFailureShare(f.failures, f.scenes) * 100, 52.94, 0.01);
  EXPECT_EQ(LowlightFailureShare(f.failures, f.scenes), 9.0 / 17.0);
}

TEST(LowlightTest, BoundaryCases) {
  auto f = testing::MakeLowlightFixture();
  std::vector<RunResult> none(f.failures.begin() + 9, f.failures.end());
  std::vector<RunResult> all(f.failures.begin(), f.failures.begin() + 9);
  EXPECT_EQ(LowlightFailureShare(none, f.scenes), 0.0);
  EXPECT_EQ(LowlightFailureShare(all, f.scenes), 1.0);
  // Repeated failures of one scene count once.
  auto doubled = all;
  doubled.push_back(all[0]);
  doubled.back().run_idx = 1;
  EXPECT_EQ(LowlightFailureShare(doubled, f.scenes), 1.0);
  EXPECT_EQ(CodeOf([&] { LowlightFailureShare({}, f.scenes); }), ErrorCode::kEmptyFailureSet);
  auto unknown = all;
  unknown[0].scene_id = "ghost";
  EXPECT_EQ(CodeOf([&] { LowlightFailureShare(unknown, f.scenes); }),
            ErrorCode::kUnknownSceneId);
}

// Mock backend that sleeps a key-dependent time so completion order
// differs from submission order.
class JitterBackend : public VisionBackend {
 public:
  explicit JitterBackend(MockScript script) : inner_(std::move(script)) {}
  std::string id() const override { return "mock"; }
  bool simulated() const override { return true; }
  AttemptOutcome Attempt(const VisionRequest& req, const QueryParams& p,
                         int attempt) const override {
    auto h = std::hash<std::string>{}(req.key.ToString());
    std::this_thread::sleep_for(std::chrono::microseconds(h % 3000));
    return inner_.Attempt(req, p, attempt);
  }

 private:
  MockBackend inner_;
};

std::string Fingerprint(const LocalizationExperimentResult& r) {
  std::string out;
  for (std::size_t i = 0; i < r.results.size(); ++i) {
    const auto& x = r.results[i];
    out += x.scene_id + "|" + std::to_string(x.run_idx) + "|" + x.raw_text + "|" +
           std::to_string(r.samples[i].iou) + "|" + x.fault.value_or("") + "\n";
  }
  return out;
}

TEST(DeterminismTest, ParallelismDoesNotChangeResults) {
  SceneSet scenes;
  MockScript script;
  for (int i = 0; i < 40; ++i) {
    auto id = testing::Id("s", i);
    scenes.positives.push_back(Positive(id, {100, 100, static_cast<double>(400 + i), 600}));
    for (int run = 0; run < 3; ++run) {
      double x = 0.01 * ((i + run) % 20);
      script.Add({id, "P1", run},
                 i % 7 == 0 ? Fault(FaultKind::kTimeout)
                            : Text(FormatBboxTemplate(CanonicalizeBBox(x, 0.1, x + 0.3, 0.6))));
    }
  }
  auto backend = std::make_shared<JitterBackend>(script);
  Gateway gw(backend);
  auto serial = RunLocalizationExperiment(scenes, PromptId::kP1, gw, Config(3, 1),
                                          testing::SyntheticImages());
  auto parallel = RunLocalizationExperiment(scenes, PromptId::kP1, gw, Config(3, 8),
                                            testing::SyntheticImages());
  EXPECT_EQ(Fingerprint(serial), Fingerprint(parallel));
  EXPECT_EQ(serial.results.size(), 120u);
  EXPECT_EQ(serial.summary.iou_mean_all, parallel.summary.iou_mean_all);
  EXPECT_EQ(serial.summary.recall_std_all, parallel.summary.recall_std_all);
}

TEST(FileImageProviderTest, ReadsRelativeToBase) {
  testing::TempDir dir;
  testing::WriteFile(dir.path() / "images" / "a.jpg", "abc");
  auto images = FileImageProvider(dir.path());
  auto scene = Positive("a", {1, 1, 2, 2});
  EXPECT_EQ(images(scene), (ImageBytes{'a', 'b', 'c'}));
  EXPECT_EQ(CodeOf([&] { images(Positive("zz", {1, 1, 2, 2})); }), ErrorCode::kMissingFile);
}

}  // namespace
}  // namespace fovlink
