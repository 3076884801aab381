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

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fovlink/experiments.hpp"
#include "fovlink/v2v.hpp"
#include "json.hpp"

namespace fovlink {

inline constexpr std::string_view kSummarySchema = "fovlink.summary/1";
inline constexpr int kCsvSchemaVersion = 1;

// Everything one experiment (or V2V run) produced, in the form written to
// and read back from a results directory:
//   summary.json       experiment-level tables
//   results.jsonl      one record per query, with per-sample metrics
//   consistency.jsonl  cross-run agreement (multi-run experiments only)
struct ReportBundle {
  nlohmann::ordered_json summary = nlohmann::ordered_json::object();
  std::vector<nlohmann::ordered_json> records;
  std::vector<nlohmann::ordered_json> consistency;

  std::string experiment() const;
};

nlohmann::ordered_json RunResultRecord(const RunResult& result,
                                       const SceneRecord* scene,
                                       const LocalizationSample* sample);

ReportBundle MakeBinaryBundle(const BinaryExperimentResult& result,
                              const SceneSet& scenes);

// `experiment` is "exp2" or "exp3".
ReportBundle MakeLocalizationBundle(
    std::string_view experiment,
    const std::vector<LocalizationExperimentResult>& results,
    const SceneSet& scenes, double consistency_iou_threshold = 0.5);

ReportBundle MakeDialogueBundle(const v2v::DialogueTranscript& transcript,
                                const v2v::LinkModel& link,
                                const v2v::Scenario& scenario);

// Throws Error(kIoError).
std::vector<std::filesystem::path> WriteBundle(const ReportBundle& bundle,
                                               const std::filesystem::path& dir);
// Throws Error(kMissingFile) or Error(kSchemaViolation).
ReportBundle LoadBundle(const std::filesystem::path& dir);

enum class ReportTarget { kCsv, kRecords, kSvg };

// "csv,records,svg" (also accepts "structured-records" and "jsonl").
// Throws Error(kPrecondition) on an unknown name.
std::vector<ReportTarget> ParseTargets(std::string_view list);

// Long-format CSV: schema_version,section,prompt_id,metric,value,unit.
// Fractions are rendered as percentages with two decimals.
std::string RenderSummaryCsv(const ReportBundle& bundle);
std::string RenderRecords(const ReportBundle& bundle);
// Box plot of per-image recall, one box per prompt. Empty for bundles
// without localization records.
std::string RenderRecallBoxPlot(const ReportBundle& bundle);
// Share of overlapping samples per 0.1-wide IoU bucket, per prompt.
std::string RenderIouShareChart(const ReportBundle& bundle);

struct EmitResult {
  std::vector<std::filesystem::path> written;
  std::vector<std::string> warnings;
};

// Writes the requested targets into `out_dir`. Identical bundles give
// byte-identical files. Throws Error(kIoError).
EmitResult EmitReport(const ReportBundle& bundle,
                      const std::vector<ReportTarget>& targets,
                      const std::filesystem::path& out_dir);

// Quartiles by linear interpolation between order statistics.
struct BoxStats {
  double min = 0;
  double q1 = 0;
  double median = 0;
  double q3 = 0;
  double max = 0;
  double mean = 0;
  std::size_t n = 0;
};
std::optional<BoxStats> ComputeBoxStats(std::vector<double> values);

}  // namespace fovlink
