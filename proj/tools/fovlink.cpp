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

// Command-line front-end: runs the three experiments and the V2V dialogue
// against a live or mock backend, and renders reports from their outputs.

#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fovlink/dataset.hpp"
#include "fovlink/error.hpp"
#include "fovlink/experiments.hpp"
#include "fovlink/gateway.hpp"
#include "fovlink/report.hpp"
#include "fovlink/v2v.hpp"

namespace {

using namespace fovlink;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitBackend = 3;

struct BackendOptions {
  std::string backend = "mock";
  std::string fixture;
};

struct CurationOptions {
  std::vector<std::string> required_tags;
  std::size_t max_boxes = kUnlimitedBoxes;
};

int ExitCodeFor(ErrorCode code) {
  switch (code) {
    case ErrorCode::kPrecondition:
    case ErrorCode::kUnknownPromptId:
      return kExitUsage;
    case ErrorCode::kBackendExhausted:
    case ErrorCode::kTimeout:
    case ErrorCode::kRateLimitedExhausted:
    case ErrorCode::kTransportError:
    case ErrorCode::kMalformedBackendReply:
      return kExitBackend;
    default:
      return kExitData;
  }
}

std::shared_ptr<const VisionBackend> MakeBackend(const BackendOptions& opts) {
  if (opts.backend == "live") return OpenAiBackend::FromEnvironment();
  if (opts.fixture.empty()) {
    throw Error(ErrorCode::kPrecondition, "--backend mock needs --fixture");
  }
  return std::make_shared<MockBackend>(MockScript::Load(opts.fixture));
}

void AddBackendFlags(CLI::App* cmd, BackendOptions& opts) {
  cmd->add_option("--backend", opts.backend, "live or mock")
      ->check(CLI::IsMember({"live", "mock"}));
  cmd->add_option("--fixture", opts.fixture, "mock reply fixture (JSON)");
}

void AddCurationFlags(CLI::App* cmd, CurationOptions& opts) {
  cmd->add_option("--require-tags", opts.required_tags,
                  "keep positives carrying all of these tags")
      ->delimiter(',');
  cmd->add_option("--max-boxes", opts.max_boxes,
                  "keep positives with at most this many boxes");
}

SceneSet Curate(const SceneSet& scenes, const CurationOptions& opts) {
  if (opts.required_tags.empty() && opts.max_boxes == kUnlimitedBoxes) {
    return scenes;
  }
  return ApplyCurationFilter(
      scenes, {opts.required_tags.begin(), opts.required_tags.end()},
      opts.max_boxes);
}

void Report(const std::vector<std::filesystem::path>& written) {
  for (const auto& p : written) std::cout << p.string() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fovlink: LLM-mediated cooperative perception toolkit"};
  app.require_subcommand(1);

  ExperimentConfig config;
  app.add_option("--parallelism", config.parallelism, "queries in flight")
      ->check(CLI::PositiveNumber);
  app.add_option("--max-tokens", config.params.max_tokens, "reply token limit")
      ->check(CLI::PositiveNumber);
  app.add_option("--temperature", config.params.temperature, "sampling temperature")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--timeout", config.params.timeout_s, "per-attempt timeout (s)")
      ->check(CLI::PositiveNumber);
  app.add_option("--retries", config.params.max_retries, "retries per query")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--backoff", config.params.backoff_base_s, "backoff base (s)")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--model", config.params.model_name, "model name (live)");
  app.add_option("--iou-threshold", config.consistency_iou_threshold,
                 "pairwise IoU below which runs are flagged inconsistent")
      ->check(CLI::Range(0.0, 1.0));

  std::string manifest;
  std::string out_dir;
  BackendOptions backend;
  CurationOptions curation;

  auto* exp1 = app.add_subcommand("exp1", "binary pedestrian detection");
  std::string exp1_prompt = "BIN";
  exp1->add_option("--manifest", manifest, "scene manifest")->required();
  exp1->add_option("--prompt", exp1_prompt, "BIN or BIN_REFINED")
      ->check(CLI::IsMember({"BIN", "BIN_REFINED"}));
  exp1->add_option("--runs", config.runs_per_prompt, "runs per prompt")
      ->check(CLI::PositiveNumber);
  exp1->add_option("--out", out_dir, "output directory")->required();
  AddBackendFlags(exp1, backend);
  AddCurationFlags(exp1, curation);

  auto* exp2 = app.add_subcommand("exp2", "bounding-box generation");
  std::string exp2_prompt = "P1";
  exp2->add_option("--manifest", manifest, "scene manifest")->required();
  exp2->add_option("--prompt", exp2_prompt, "P1, P2 or P3")
      ->check(CLI::IsMember({"P1", "P2", "P3"}));
  exp2->add_option("--runs", config.runs_per_prompt, "runs per prompt")
      ->check(CLI::PositiveNumber);
  exp2->add_option("--out", out_dir, "output directory")->required();
  AddBackendFlags(exp2, backend);
  AddCurationFlags(exp2, curation);

  auto* exp3 = app.add_subcommand("exp3", "prompt comparison");
  std::vector<std::string> exp3_prompts = {"P1", "P2", "P3"};
  exp3->add_option("--manifest", manifest, "scene manifest")->required();
  exp3->add_option("--prompts", exp3_prompts, "comma-separated prompt ids")
      ->delimiter(',');
  exp3->add_option("--runs", config.runs_per_prompt, "runs per prompt")
      ->check(CLI::PositiveNumber);
  exp3->add_option("--out", out_dir, "output directory")->required();
  AddBackendFlags(exp3, backend);
  AddCurationFlags(exp3, curation);

  auto* v2v_cmd = app.add_subcommand("v2v", "ego/remote dialogue simulation");
  std::string scenario_path;
  long long start_ms = 0;
  v2v_cmd->add_option("--scenario", scenario_path, "scenario file")->required();
  v2v_cmd->add_option("--manifest", manifest, "overrides the scenario manifest");
  v2v_cmd->add_option("--start-ms", start_ms, "simulated clock origin (ms)");
  v2v_cmd->add_option("--out", out_dir, "output directory")->required();
  AddBackendFlags(v2v_cmd, backend);

  auto* report = app.add_subcommand("report", "render reports from results");
  std::string in_dir;
  std::string targets = "csv,records,svg";
  report->add_option("--in", in_dir, "results directory")->required();
  report->add_option("--targets", targets, "csv,records,svg");
  report->add_option("--out", out_dir, "report directory (default: --in)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*report) {
      auto bundle = LoadBundle(in_dir);
      auto result = EmitReport(bundle, ParseTargets(targets),
                               out_dir.empty() ? in_dir : out_dir);
      for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";
      Report(result.written);
      return kExitOk;
    }

    config.Validate();
    Gateway gateway(MakeBackend(backend));

    if (*v2v_cmd) {
      auto scenario = v2v::LoadScenario(scenario_path);
      std::filesystem::path manifest_path =
          !manifest.empty() ? std::filesystem::path(manifest)
                            : scenario.manifest.value_or(std::filesystem::path());
      if (manifest_path.empty()) {
        throw Error(ErrorCode::kPrecondition,
                    "scenario names no manifest; pass --manifest");
      }
      auto loaded = LoadManifestWithBase(manifest_path);
      v2v::DialogueOptions options{config.params, config.parallelism, start_ms};
      auto transcript = v2v::RunDialogue(
          scenario.ego, scenario.remotes, loaded.scenes, scenario.prompt_id,
          gateway, scenario.link, FileImageProvider(loaded.base_dir), options);
      Report(WriteBundle(MakeDialogueBundle(transcript, scenario.link, scenario),
                         out_dir));
      return kExitOk;
    }

    auto loaded = LoadManifestWithBase(manifest);
    auto scenes = Curate(loaded.scenes, curation);
    auto images = FileImageProvider(loaded.base_dir);

    if (*exp1) {
      auto result = RunBinaryExperiment(scenes, ParsePromptId(exp1_prompt),
                                        gateway, config, images);
      Report(WriteBundle(MakeBinaryBundle(result, scenes), out_dir));
    } else if (*exp2) {
      auto result = RunLocalizationExperiment(scenes, ParsePromptId(exp2_prompt),
                                              gateway, config, images);
      Report(WriteBundle(MakeLocalizationBundle("exp2", {result}, scenes,
                                                config.consistency_iou_threshold),
                         out_dir));
    } else if (*exp3) {
      config.prompt_ids.clear();
      for (const auto& p : exp3_prompts) config.prompt_ids.push_back(ParsePromptId(p));
      auto result = RunPromptComparison(scenes, gateway, config, images);
      Report(WriteBundle(MakeLocalizationBundle("exp3", result.per_prompt, scenes,
                                                config.consistency_iou_threshold),
                         out_dir));
    }
    return kExitOk;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return ExitCodeFor(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
}
