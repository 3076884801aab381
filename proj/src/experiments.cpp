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

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <iterator>
#include <thread>
#include <tuple>
#include <unordered_map>

#include "fovlink/error.hpp"
#include "fovlink/geometry.hpp"

namespace fovlink {

namespace {

struct Job {
  const SceneRecord* scene;
  int run_idx;
};

struct QueryOutcome {
  std::optional<RawResponse> response;
  std::string fault;
};

// Issues every job through the gateway with at most `parallelism` calls in
// flight. Outcomes come back in job order regardless of completion order.
std::vector<QueryOutcome> Dispatch(const std::vector<Job>& jobs,
                                   PromptId prompt_id, const Gateway& gateway,
                                   const ExperimentConfig& config,
                                   const ImageProvider& images) {
  std::unordered_map<std::string, ImageBytes> cache;
  for (const auto& job : jobs) {
    if (!cache.count(job.scene->scene_id)) {
      cache.emplace(job.scene->scene_id, images(*job.scene));
    }
  }
  const std::string_view prompt = GetPrompt(prompt_id).text;
  const std::string prompt_name(PromptIdName(prompt_id));

  std::vector<QueryOutcome> out(jobs.size());
  std::vector<std::exception_ptr> errors(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      const auto& job = jobs[i];
      VisionRequest request{{job.scene->scene_id, prompt_name, job.run_idx},
                            cache.at(job.scene->scene_id),
                            prompt};
      try {
        out[i].response = gateway.SendVisionQuery(request, config.params);
      } catch (const GatewayError& e) {
        out[i].fault = std::string(ErrorCodeName(e.code()));
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };

  const auto threads = static_cast<std::size_t>(std::max(1, config.parallelism));
  if (threads == 1 || jobs.size() <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < std::min(threads, jobs.size()); ++t) {
      pool.emplace_back(worker);
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

std::vector<Job> MakeJobs(const std::vector<const SceneRecord*>& scenes,
                          int runs) {
  std::vector<Job> jobs;
  for (const auto* scene : scenes) {
    for (int run = 0; run < runs; ++run) jobs.push_back({scene, run});
  }
  return jobs;
}

RunResult BaseResult(const Job& job, PromptId prompt_id, const QueryOutcome& q) {
  RunResult r;
  r.scene_id = job.scene->scene_id;
  r.prompt_id = prompt_id;
  r.run_idx = job.run_idx;
  if (q.response) {
    r.latency_s = q.response->latency_s;
    r.attempt_count = q.response->attempt_count;
    r.raw_text = q.response->text;
  } else {
    r.fault = q.fault;
  }
  return r;
}

bool ResultKeyLess(const RunResult& a, const RunResult& b) {
  return std::forward_as_tuple(a.scene_id, PromptIdName(a.prompt_id), a.run_idx) <
         std::forward_as_tuple(b.scene_id, PromptIdName(b.prompt_id), b.run_idx);
}

std::string OutcomeLabel(const RunResult& r) {
  if (r.fault) return "fault";
  const auto& d = *r.detection;
  switch (d.kind) {
    case ParsedDetection::Kind::kVerdict: return *d.verdict ? "yes" : "no";
    case ParsedDetection::Kind::kLocated: return "located";
    case ParsedDetection::Kind::kFailure:
      return std::string(FailureKindName(*d.failure_kind));
  }
  return "?";
}

// IoU between two runs' boxes; two zero-area boxes agree only if identical.
double RunPairIou(const NormalizedBBox& a, const NormalizedBBox& b) {
  if (a.area() == 0 && b.area() == 0) {
    return (a.x == b.x && a.y == b.y && a.x2 == b.x2 && a.y2 == b.y2) ? 1.0 : 0.0;
  }
  return Iou(a, b);
}

}  // namespace

ImageProvider FileImageProvider(std::filesystem::path base_dir) {
  return [base = std::move(base_dir)](const SceneRecord& scene) {
    std::filesystem::path path(scene.image_path);
    if (path.is_relative()) path = base / path;
    std::ifstream in(path, std::ios::binary);
    if (!in) {
      throw Error(ErrorCode::kMissingFile,
                  "cannot read image for scene '" + scene.scene_id + "': " +
                      path.string());
    }
    ImageBytes bytes((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
    if (bytes.empty()) {
      throw Error(ErrorCode::kMissingFile,
                  "image for scene '" + scene.scene_id + "' is empty");
    }
    return bytes;
  };
}

void ExperimentConfig::Validate() const {
  if (runs_per_prompt < 1) {
    throw Error(ErrorCode::kPrecondition, "runs_per_prompt must be >= 1");
  }
  if (parallelism < 1) {
    throw Error(ErrorCode::kPrecondition, "parallelism must be >= 1");
  }
  if (!(consistency_iou_threshold >= 0 && consistency_iou_threshold <= 1)) {
    throw Error(ErrorCode::kPrecondition, "IoU threshold must be in [0,1]");
  }
  params.Validate();
}

bool RunResult::predicted_positive() const {
  if (!detection) return false;
  if (detection->kind == ParsedDetection::Kind::kVerdict) return *detection->verdict;
  return true;
}

BinaryExperimentResult RunBinaryExperiment(const SceneSet& scenes,
                                           PromptId prompt_id,
                                           const Gateway& gateway,
                                           const ExperimentConfig& config,
                                           const ImageProvider& images) {
  config.Validate();
  if (GetPrompt(prompt_id).expected_format != ExpectedFormat::kYesNo) {
    throw Error(ErrorCode::kPrecondition,
                std::string(PromptIdName(prompt_id)) + " is not a yes/no prompt");
  }
  const auto jobs = MakeJobs(scenes.All(), config.runs_per_prompt);
  const auto outcomes = Dispatch(jobs, prompt_id, gateway, config, images);

  BinaryExperimentResult out;
  out.prompt_id = prompt_id;
  out.runs = config.runs_per_prompt;
  std::vector<SceneVerdict> labels;
  for (const auto* scene : scenes.All()) {
    labels.emplace_back(scene->scene_id, scene->has_pedestrian);
  }
  std::vector<std::vector<SceneVerdict>> predictions(config.runs_per_prompt);
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    RunResult r = BaseResult(jobs[i], prompt_id, outcomes[i]);
    if (r.fault) {
      ++out.n_faulted;
    } else {
      auto parsed = ParseBinaryResponse(r.raw_text);
      if (parsed.ok()) {
        r.detection = ParsedDetection::Verdict(*parsed.verdict, parsed.raw);
      } else {
        r.detection = ParsedDetection::Failure(ClassifyFailure(r.raw_text),
                                               parsed.raw);
        r.flagged = true;
        ++out.n_flagged;
      }
      predictions[r.run_idx].emplace_back(r.scene_id, r.predicted_positive());
    }
    out.results.push_back(std::move(r));
  }
  if (!jobs.empty() && out.n_faulted == jobs.size()) {
    throw Error(ErrorCode::kBackendExhausted, "every query faulted");
  }
  for (const auto& run : predictions) {
    out.per_run.push_back(BuildConfusionMatrix(run, labels));
  }
  out.matrix = out.per_run.empty() ? ConfusionMatrix{} : out.per_run.front();
  if (out.matrix.total() > 0) out.stats = DeriveDetectionStats(out.matrix);
  std::stable_sort(out.results.begin(), out.results.end(), ResultKeyLess);
  return out;
}

LocalizationExperimentResult RunLocalizationExperiment(
    const SceneSet& scenes, PromptId prompt_id, const Gateway& gateway,
    const ExperimentConfig& config, const ImageProvider& images) {
  config.Validate();
  if (GetPrompt(prompt_id).expected_format !=
      ExpectedFormat::kCoordinateTemplate) {
    throw Error(ErrorCode::kPrecondition, std::string(PromptIdName(prompt_id)) +
                                              " is not a coordinate prompt");
  }
  std::vector<const SceneRecord*> positives;
  std::unordered_map<std::string, NormalizedBBox> truth;
  for (const auto& scene : scenes.positives) {
    if (scene.gt_boxes.size() != 1) {
      throw Error(ErrorCode::kPrecondition,
                  "scene '" + scene.scene_id + "' must have exactly one box");
    }
    truth.emplace(scene.scene_id,
                  NormalizeBBox(scene.gt_boxes.front(), scene.width, scene.height));
    positives.push_back(&scene);
  }
  const auto jobs = MakeJobs(positives, config.runs_per_prompt);
  const auto outcomes = Dispatch(jobs, prompt_id, gateway, config, images);

  LocalizationExperimentResult out;
  out.prompt_id = prompt_id;
  out.runs = config.runs_per_prompt;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    RunResult r = BaseResult(jobs[i], prompt_id, outcomes[i]);
    LocalizationSample sample{r.scene_id, r.run_idx, false, 0.0, 0.0};
    if (r.fault) {
      ++out.n_faulted;
    } else {
      r.detection = ParseBboxResponse(r.raw_text);
      if (r.detection->box) {
        const auto& gt = truth.at(r.scene_id);
        const auto& gen = *r.detection->box;
        sample.overlap = Overlaps(gt, gen);
        sample.recall = OverlapRecall(gt, gen);
        sample.iou = Iou(gt, gen);
      } else {
        ++out.failure_counts[*r.detection->failure_kind];
      }
    }
    out.results.push_back(std::move(r));
    out.samples.push_back(sample);
  }
  if (!jobs.empty() && out.n_faulted == jobs.size()) {
    throw Error(ErrorCode::kBackendExhausted, "every query faulted");
  }

  std::vector<std::size_t> order(out.results.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) {
    return ResultKeyLess(out.results[a], out.results[b]);
  });
  std::vector<RunResult> results;
  std::vector<LocalizationSample> samples;
  for (auto i : order) {
    results.push_back(std::move(out.results[i]));
    samples.push_back(std::move(out.samples[i]));
  }
  out.results = std::move(results);
  out.samples = std::move(samples);
  if (!out.samples.empty()) out.summary = SummarizeLocalization(out.samples);
  return out;
}

PromptComparison RunPromptComparison(const SceneSet& scenes,
                                     const Gateway& gateway,
                                     const ExperimentConfig& config,
                                     const ImageProvider& images) {
  if (config.prompt_ids.empty()) {
    throw Error(ErrorCode::kPrecondition, "no prompts to compare");
  }
  for (auto id : config.prompt_ids) {
    if (GetPrompt(id).expected_format != ExpectedFormat::kCoordinateTemplate) {
      throw Error(ErrorCode::kPrecondition,
                  std::string(PromptIdName(id)) + " is not a coordinate prompt");
    }
  }
  PromptComparison out;
  for (auto id : config.prompt_ids) {
    out.per_prompt.push_back(
        RunLocalizationExperiment(scenes, id, gateway, config, images));
  }
  return out;
}

std::map<std::string, double> PerImageRecall(
    const LocalizationExperimentResult& result) {
  std::map<std::string, std::pair<double, int>> acc;
  for (const auto& s : result.samples) {
    auto& [sum, n] = acc[s.scene_id];
    sum += s.overlap ? s.recall : 0.0;
    ++n;
  }
  std::map<std::string, double> out;
  for (const auto& [id, v] : acc) out[id] = v.first / v.second;
  return out;
}

std::vector<ConsistencyEntry> AnalyzeRunConsistency(
    const std::vector<RunResult>& results, double iou_threshold) {
  std::map<std::pair<std::string, std::string>, std::vector<const RunResult*>>
      groups;
  for (const auto& r : results) {
    groups[{r.scene_id, std::string(PromptIdName(r.prompt_id))}].push_back(&r);
  }
  std::vector<ConsistencyEntry> out;
  for (auto& [key, runs] : groups) {
    if (runs.size() < 2) continue;
    std::sort(runs.begin(), runs.end(),
              [](auto* a, auto* b) { return a->run_idx < b->run_idx; });
    ConsistencyEntry e;
    e.scene_id = key.first;
    e.prompt_id = runs.front()->prompt_id;
    e.n_runs = runs.size();
    e.binary = GetPrompt(e.prompt_id).expected_format == ExpectedFormat::kYesNo;
    for (const auto* r : runs) e.outcomes.push_back(OutcomeLabel(*r));
    const bool mixed = std::adjacent_find(e.outcomes.begin(), e.outcomes.end(),
                                          std::not_equal_to<>()) !=
                       e.outcomes.end();
    if (e.binary) {
      e.verdict_agreement = !mixed;
      e.flagged = mixed;
      if (mixed) e.reason = "runs disagree on the verdict";
    } else {
      std::vector<const NormalizedBBox*> boxes;
      for (const auto* r : runs) {
        if (r->detection && r->detection->box) boxes.push_back(&*r->detection->box);
      }
      for (std::size_t i = 0; i < boxes.size(); ++i) {
        for (std::size_t j = i + 1; j < boxes.size(); ++j) {
          e.pairwise_iou.push_back(RunPairIou(*boxes[i], *boxes[j]));
        }
      }
      if (!e.pairwise_iou.empty()) {
        e.min_iou = *std::min_element(e.pairwise_iou.begin(), e.pairwise_iou.end());
      }
      if (mixed) {
        e.flagged = true;
        e.reason = "runs produced different outcome kinds";
      } else if (e.min_iou && *e.min_iou < iou_threshold) {
        e.flagged = true;
        e.reason = "pairwise IoU below threshold";
      }
    }
    out.push_back(std::move(e));
  }
  if (out.empty()) {
    throw Error(ErrorCode::kInsufficientRuns,
                "consistency needs at least two runs of one scene and prompt");
  }
  return out;
}

std::vector<RunResult> SelectFailures(const std::vector<RunResult>& results) {
  std::vector<RunResult> out;
  std::copy_if(results.begin(), results.end(), std::back_inserter(out),
               [](const RunResult& r) { return r.failed(); });
  return out;
}

double LowlightFailureShare(const std::vector<RunResult>& failures,
                            const SceneSet& scenes) {
  std::set<std::string> failed;
  for (const auto& r : failures) failed.insert(r.scene_id);
  if (failed.empty()) {
    throw Error(ErrorCode::kEmptyFailureSet, "no failures to analyse");
  }
  std::size_t low_light = 0;
  for (const auto& id : failed) {
    const auto* scene = scenes.Find(id);
    if (scene == nullptr) {
      throw Error(ErrorCode::kUnknownSceneId, "failure for unknown scene '" + id + "'");
    }
    const auto& lt = LowLightTags();
    if (std::any_of(scene->tags.begin(), scene->tags.end(),
                    [&lt](const auto& t) { return lt.count(t) != 0; })) {
      ++low_light;
    }
  }
  return static_cast<double>(low_light) / static_cast<double>(failed.size());
}

}  // namespace fovlink
