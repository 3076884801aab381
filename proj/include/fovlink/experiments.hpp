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

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "fovlink/dataset.hpp"
#include "fovlink/gateway.hpp"
#include "fovlink/perception.hpp"
#include "fovlink/stats.hpp"

namespace fovlink {

using ImageBytes = std::vector<std::uint8_t>;
using ImageProvider = std::function<ImageBytes(const SceneRecord&)>;

// Reads image_path relative to `base_dir` (absolute paths are used as is).
// Throws Error(kMissingFile) for unreadable or empty files.
ImageProvider FileImageProvider(std::filesystem::path base_dir);

struct ExperimentConfig {
  int runs_per_prompt = 3;
  std::vector<PromptId> prompt_ids;
  int parallelism = 1;
  QueryParams params;
  double consistency_iou_threshold = 0.5;

  // Throws Error(kPrecondition).
  void Validate() const;
};

struct RunResult {
  std::string scene_id;
  PromptId prompt_id = PromptId::kBin;
  int run_idx = 0;
  // Empty when the query itself failed; `fault` then names the error.
  std::optional<ParsedDetection> detection;
  std::optional<std::string> fault;
  // Binary replies that could not be read are scored positive and flagged.
  bool flagged = false;
  double latency_s = 0;
  int attempt_count = 0;
  std::string raw_text;

  bool failed() const {
    return fault.has_value() ||
           (detection && detection->kind == ParsedDetection::Kind::kFailure);
  }
  // Predicted presence for the binary task (unreadable replies count as yes).
  bool predicted_positive() const;
};

struct BinaryExperimentResult {
  PromptId prompt_id = PromptId::kBin;
  int runs = 0;
  std::vector<RunResult> results;
  // Headline matrix from run 0; per_run[i] from run i.
  ConfusionMatrix matrix;
  DetectionStats stats;
  std::vector<ConfusionMatrix> per_run;
  std::size_t n_flagged = 0;
  std::size_t n_faulted = 0;
};

struct LocalizationExperimentResult {
  PromptId prompt_id = PromptId::kP1;
  int runs = 0;
  std::vector<RunResult> results;
  // Aligned with `results`.
  std::vector<LocalizationSample> samples;
  LocalizationSummary summary;
  std::map<FailureKind, std::size_t> failure_counts;
  std::size_t n_faulted = 0;
};

struct PromptComparison {
  std::vector<LocalizationExperimentResult> per_prompt;
};

// Exp 1: one yes/no query per scene and run. Throws Error(kPrecondition) for
// a coordinate prompt and Error(kBackendExhausted) if every query faulted.
BinaryExperimentResult RunBinaryExperiment(const SceneSet& scenes,
                                           PromptId prompt_id,
                                           const Gateway& gateway,
                                           const ExperimentConfig& config,
                                           const ImageProvider& images);

// Exp 2 over the positives. Every positive must carry exactly one box.
LocalizationExperimentResult RunLocalizationExperiment(
    const SceneSet& scenes, PromptId prompt_id, const Gateway& gateway,
    const ExperimentConfig& config, const ImageProvider& images);

// Exp 3: the localization experiment once per prompt in config.prompt_ids.
PromptComparison RunPromptComparison(const SceneSet& scenes,
                                     const Gateway& gateway,
                                     const ExperimentConfig& config,
                                     const ImageProvider& images);

// Per-image mean recall over runs, failures scored 0. Keyed by scene_id.
std::map<std::string, double> PerImageRecall(
    const LocalizationExperimentResult& result);

struct ConsistencyEntry {
  std::string scene_id;
  PromptId prompt_id = PromptId::kBin;
  std::size_t n_runs = 0;
  bool binary = false;
  // One label per run: yes, no, located, a failure kind, or fault.
  std::vector<std::string> outcomes;
  // Binary only.
  std::optional<bool> verdict_agreement;
  // Localization only: IoU for every pair of located runs, in (i<j) order.
  std::vector<double> pairwise_iou;
  std::optional<double> min_iou;
  bool flagged = false;
  std::string reason;
};

// Groups results by (scene, prompt) and checks agreement across runs.
// Throws Error(kInsufficientRuns) if no group has two or more runs.
std::vector<ConsistencyEntry> AnalyzeRunConsistency(
    const std::vector<RunResult>& results, double iou_threshold = 0.5);

inline const std::set<std::string>& LowLightTags() {
  static const std::set<std::string> kTags = {tags::kDusk, tags::kSunset,
                                              tags::kShade, tags::kSolarGlare};
  return kTags;
}

std::vector<RunResult> SelectFailures(const std::vector<RunResult>& results);

// Share of distinct failed scenes tagged dusk, sunset, shade or solar_glare.
// Throws Error(kEmptyFailureSet) and Error(kUnknownSceneId).
double LowlightFailureShare(const std::vector<RunResult>& failures,
                            const SceneSet& scenes);

}  // namespace fovlink
