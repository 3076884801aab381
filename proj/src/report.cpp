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

#include "fovlink/report.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "fovlink/error.hpp"

namespace fovlink {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

constexpr const char* kSummaryFile = "summary.json";
constexpr const char* kResultsFile = "results.jsonl";
constexpr const char* kConsistencyFile = "consistency.jsonl";

std::string Dump(const ordered_json& v, int indent = -1) {
  return v.dump(indent, ' ', false, json::error_handler_t::replace);
}

ordered_json Optional(const std::optional<double>& v) {
  return v ? ordered_json(*v) : ordered_json(nullptr);
}

ordered_json MatrixJson(const ConfusionMatrix& cm) {
  ordered_json m;
  m["tp"] = cm.tp;
  m["fn"] = cm.fn;
  m["fp"] = cm.fp;
  m["tn"] = cm.tn;
  return m;
}

ordered_json ConsistencyRecord(const ConsistencyEntry& e) {
  ordered_json r;
  r["scene_id"] = e.scene_id;
  r["prompt_id"] = std::string(PromptIdName(e.prompt_id));
  r["n_runs"] = e.n_runs;
  r["mode"] = e.binary ? "binary" : "localization";
  r["outcomes"] = e.outcomes;
  r["verdict_agreement"] =
      e.verdict_agreement ? ordered_json(*e.verdict_agreement) : ordered_json(nullptr);
  r["pairwise_iou"] = e.pairwise_iou;
  r["min_iou"] = Optional(e.min_iou);
  r["flagged"] = e.flagged;
  r["reason"] = e.reason;
  return r;
}

std::vector<ordered_json> ConsistencyRecords(const std::vector<RunResult>& results,
                                             double threshold,
                                             std::size_t& flagged) {
  std::vector<ordered_json> out;
  flagged = 0;
  try {
    for (const auto& e : AnalyzeRunConsistency(results, threshold)) {
      if (e.flagged) ++flagged;
      out.push_back(ConsistencyRecord(e));
    }
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kInsufficientRuns) throw;
  }
  return out;
}

std::string Fixed(double v, int decimals) {
  std::array<char, 64> buf{};
  std::snprintf(buf.data(), buf.size(), "%.*f", decimals, v);
  std::string s(buf.data());
  if (s == "-0.00" || s == "-0.0000" || s == "-0.000000") s.erase(0, 1);
  return s;
}

double Number(const ordered_json& v) { return v.get<double>(); }

class CsvWriter {
 public:
  CsvWriter() {
    out_ << "schema_version,section,prompt_id,metric,value,unit\n";
  }

  void Pct(const std::string& section, const std::string& prompt,
           const std::string& metric, const ordered_json& v) {
    Row(section, prompt, metric,
        v.is_null() ? "undefined" : Fixed(Number(v) * 100.0, 2), "pct");
  }
  void Count(const std::string& section, const std::string& prompt,
             const std::string& metric, const ordered_json& v) {
    Row(section, prompt, metric, std::to_string(v.get<long long>()), "count");
  }
  void Value(const std::string& section, const std::string& prompt,
             const std::string& metric, const ordered_json& v, int decimals,
             const std::string& unit) {
    Row(section, prompt, metric,
        v.is_null() ? "undefined" : Fixed(Number(v), decimals), unit);
  }

  std::string str() const { return out_.str(); }

 private:
  void Row(const std::string& section, const std::string& prompt,
           const std::string& metric, const std::string& value,
           const std::string& unit) {
    out_ << kCsvSchemaVersion << ',' << section << ',' << prompt << ','
         << metric << ',' << value << ',' << unit << '\n';
  }

  std::ostringstream out_;
};

struct PromptSeries {
  std::string prompt_id;
  std::vector<double> per_image_recall;
  std::array<std::size_t, 10> iou_buckets{};
  std::size_t n_overlapping = 0;
};

// Localization records grouped by prompt, in order of first appearance.
std::vector<PromptSeries> CollectSeries(const ReportBundle& bundle) {
  std::vector<PromptSeries> series;
  std::map<std::string, std::map<std::string, std::pair<double, int>>> recall;
  for (const auto& r : bundle.records) {
    if (!r.contains("overlap") || r["overlap"].is_null()) continue;
    const auto prompt = r["prompt_id"].get<std::string>();
    auto it = std::find_if(series.begin(), series.end(),
                           [&](const auto& s) { return s.prompt_id == prompt; });
    if (it == series.end()) {
      series.push_back({prompt, {}, {}, 0});
      it = series.end() - 1;
    }
    const bool overlap = r["overlap"].get<bool>();
    auto& [sum, n] = recall[prompt][r["scene_id"].get<std::string>()];
    sum += overlap ? Number(r["recall"]) : 0.0;
    ++n;
    if (overlap) {
      double iou = Number(r["iou"]);
      auto bucket = std::min<std::size_t>(9, static_cast<std::size_t>(iou * 10));
      ++it->iou_buckets[bucket];
      ++it->n_overlapping;
    }
  }
  for (auto& s : series) {
    for (const auto& [scene, acc] : recall[s.prompt_id]) {
      s.per_image_recall.push_back(acc.first / acc.second);
    }
  }
  return series;
}

constexpr std::array<const char*, 10> kBucketColors = {
    "#d73027", "#f46d43", "#fdae61", "#fee08b", "#ffffbf",
    "#d9ef8b", "#a6d96a", "#66bd63", "#1a9850", "#006837"};

void WriteFile(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  out << content;
  if (!out) throw Error(ErrorCode::kIoError, "failed writing " + path.string());
}

std::string ReadFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kMissingFile, "cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::vector<ordered_json> ReadJsonLines(const std::filesystem::path& path) {
  std::vector<ordered_json> out;
  std::istringstream in(ReadFile(path));
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    try {
      out.push_back(ordered_json::parse(line));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kSchemaViolation, path.filename().string() + " line " +
                                                   std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace

std::string ReportBundle::experiment() const {
  auto it = summary.find("experiment");
  return it != summary.end() && it->is_string() ? it->get<std::string>() : "";
}

ordered_json RunResultRecord(const RunResult& result, const SceneRecord* scene,
                             const LocalizationSample* sample) {
  ordered_json r;
  r["scene_id"] = result.scene_id;
  r["prompt_id"] = std::string(PromptIdName(result.prompt_id));
  r["run_idx"] = result.run_idx;
  r["label"] = scene ? ordered_json(scene->has_pedestrian) : ordered_json(nullptr);
  const auto* d = result.detection ? &*result.detection : nullptr;
  r["kind"] = d ? std::string(DetectionKindName(d->kind)) : "fault";
  r["verdict"] = d && d->verdict ? ordered_json(*d->verdict) : ordered_json(nullptr);
  if (d && d->box) {
    r["box"] = {d->box->x, d->box->y, d->box->x2, d->box->y2};
    r["clamped"] = d->box->clamped;
    r["degenerate"] = d->box->degenerate;
  } else {
    r["box"] = nullptr;
    r["clamped"] = nullptr;
    r["degenerate"] = nullptr;
  }
  r["failure_kind"] = d && d->failure_kind
                          ? ordered_json(std::string(FailureKindName(*d->failure_kind)))
                          : ordered_json(nullptr);
  r["fault"] = result.fault ? ordered_json(*result.fault) : ordered_json(nullptr);
  r["flagged"] = result.flagged;
  if (sample) {
    r["overlap"] = sample->overlap;
    r["recall"] = sample->recall;
    r["iou"] = sample->iou;
  } else {
    r["overlap"] = nullptr;
    r["recall"] = nullptr;
    r["iou"] = nullptr;
  }
  r["attempts"] = result.attempt_count;
  r["latency_s"] = result.latency_s;
  r["raw_text"] = result.raw_text;
  return r;
}

ReportBundle MakeBinaryBundle(const BinaryExperimentResult& result,
                              const SceneSet& scenes) {
  ReportBundle b;
  auto& s = b.summary;
  s["schema"] = std::string(kSummarySchema);
  s["experiment"] = "exp1";
  s["runs_per_prompt"] = result.runs;
  s["n_positive"] = scenes.positives.size();
  s["n_negative"] = scenes.negatives.size();

  ordered_json det;
  det["prompt_id"] = std::string(PromptIdName(result.prompt_id));
  det["confusion_matrix"] = MatrixJson(result.matrix);
  ordered_json stats = ordered_json::object();
  for (const auto& [name, value] : result.stats.Named()) stats[name] = Optional(value);
  det["stats"] = std::move(stats);
  det["undefined"] = result.stats.undefined;
  auto per_run = ordered_json::array();
  for (std::size_t i = 0; i < result.per_run.size(); ++i) {
    auto m = MatrixJson(result.per_run[i]);
    ordered_json row;
    row["run_idx"] = i;
    for (auto& [k, v] : m.items()) row[k] = v;
    per_run.push_back(std::move(row));
  }
  det["per_run"] = std::move(per_run);
  det["n_flagged"] = result.n_flagged;
  det["n_faulted"] = result.n_faulted;

  std::size_t inconsistent = 0;
  b.consistency = ConsistencyRecords(result.results, 0.5, inconsistent);
  det["n_inconsistent"] = inconsistent;
  s["detection"] = ordered_json::array({det});

  for (const auto& r : result.results) {
    b.records.push_back(RunResultRecord(r, scenes.Find(r.scene_id), nullptr));
  }
  return b;
}

ReportBundle MakeLocalizationBundle(
    std::string_view experiment,
    const std::vector<LocalizationExperimentResult>& results,
    const SceneSet& scenes, double consistency_iou_threshold) {
  ReportBundle b;
  auto& s = b.summary;
  s["schema"] = std::string(kSummarySchema);
  s["experiment"] = std::string(experiment);
  s["runs_per_prompt"] = results.empty() ? 0 : results.front().runs;
  s["n_scenes"] = scenes.positives.size();

  auto table = ordered_json::array();
  std::vector<RunResult> all;
  for (const auto& res : results) {
    ordered_json row;
    const auto& sum = res.summary;
    row["prompt_id"] = std::string(PromptIdName(res.prompt_id));
    row["n_tests"] = sum.n_tests;
    row["n_overlapping"] = sum.n_overlapping;
    row["union_rate"] = sum.union_rate;
    row["recall_mean_overlapping"] = Optional(sum.recall_mean_overlapping);
    row["recall_std_overlapping"] = Optional(sum.recall_std_overlapping);
    row["recall_mean_all"] = sum.recall_mean_all;
    row["recall_std_all"] = sum.recall_std_all;
    row["iou_mean_overlapping"] = Optional(sum.iou_mean_overlapping);
    row["iou_mean_all"] = sum.iou_mean_all;
    ordered_json failures;
    for (auto kind : {FailureKind::kNoPedestrianDetected,
                      FailureKind::kPartialCoordinates,
                      FailureKind::kAmbiguousDescription}) {
      auto it = res.failure_counts.find(kind);
      failures[std::string(FailureKindName(kind))] =
          it == res.failure_counts.end() ? 0 : it->second;
    }
    row["failure_counts"] = std::move(failures);
    row["n_faulted"] = res.n_faulted;
    table.push_back(std::move(row));

    for (std::size_t i = 0; i < res.results.size(); ++i) {
      const auto& r = res.results[i];
      b.records.push_back(
          RunResultRecord(r, scenes.Find(r.scene_id), &res.samples[i]));
      all.push_back(r);
    }
  }
  s["localization"] = std::move(table);

  auto failures = SelectFailures(all);
  std::set<std::string> failed_scenes;
  for (const auto& f : failures) failed_scenes.insert(f.scene_id);
  s["n_failed_scenes"] = failed_scenes.size();
  s["lowlight_failure_share"] =
      failures.empty() ? ordered_json(nullptr)
                       : ordered_json(LowlightFailureShare(failures, scenes));
  std::size_t inconsistent = 0;
  b.consistency = ConsistencyRecords(all, consistency_iou_threshold, inconsistent);
  s["n_inconsistent"] = inconsistent;
  return b;
}

ReportBundle MakeDialogueBundle(const v2v::DialogueTranscript& transcript,
                                const v2v::LinkModel& link,
                                const v2v::Scenario& scenario) {
  ReportBundle b;
  auto& s = b.summary;
  s["schema"] = std::string(kSummarySchema);
  s["experiment"] = "v2v";
  s["prompt_id"] = std::string(PromptIdName(scenario.prompt_id));
  s["ego"] = scenario.ego.vehicle_id;
  auto remotes = ordered_json::array();
  for (const auto& r : scenario.remotes) remotes.push_back(r.vehicle_id);
  s["remotes"] = std::move(remotes);
  s["link"] = {{"rate_bps", link.rate_bps}, {"overhead", link.overhead}};
  ordered_json transport;
  transport["stream_bytes"] = transcript.stream_bytes;
  transport["stream_time_s"] = transcript.stream_time_s;
  transport["dialogue_bytes"] = transcript.dialogue_bytes;
  transport["dialogue_time_s"] = transcript.dialogue_time_s;
  transport["ratio"] =
      transcript.stream_bytes > 0
          ? ordered_json(static_cast<double>(transcript.dialogue_bytes) /
                         static_cast<double>(transcript.stream_bytes))
          : ordered_json(nullptr);
  s["transport"] = std::move(transport);
  std::size_t errors = 0;
  for (std::size_t i = 0; i < transcript.entries.size(); ++i) {
    const auto& e = transcript.entries[i];
    if (e.message.type() == v2v::MessageType::kError) ++errors;
    ordered_json r;
    r["seq"] = i;
    r["msg_type"] = std::string(v2v::MessageTypeName(e.message.type()));
    r["encoded_bytes"] = e.encoded_bytes;
    r["wire"] = v2v::EncodeMessage(e.message);
    b.records.push_back(std::move(r));
  }
  s["n_messages"] = transcript.entries.size();
  s["n_errors"] = errors;
  return b;
}

std::vector<std::filesystem::path> WriteBundle(const ReportBundle& bundle,
                                               const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIoError, "cannot create " + dir.string());
  std::vector<std::filesystem::path> written;
  WriteFile(dir / kSummaryFile, Dump(bundle.summary, 2) + "\n");
  written.push_back(dir / kSummaryFile);
  std::string lines;
  for (const auto& r : bundle.records) lines += Dump(r) + "\n";
  WriteFile(dir / kResultsFile, lines);
  written.push_back(dir / kResultsFile);
  if (!bundle.consistency.empty()) {
    std::string cons;
    for (const auto& r : bundle.consistency) cons += Dump(r) + "\n";
    WriteFile(dir / kConsistencyFile, cons);
    written.push_back(dir / kConsistencyFile);
  }
  return written;
}

ReportBundle LoadBundle(const std::filesystem::path& dir) {
  ReportBundle b;
  try {
    b.summary = ordered_json::parse(ReadFile(dir / kSummaryFile));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kSchemaViolation,
                std::string("summary.json: ") + e.what());
  }
  if (!b.summary.is_object() || !b.summary.contains("schema") ||
      b.summary["schema"] != std::string(kSummarySchema)) {
    throw Error(ErrorCode::kSchemaViolation,
                "summary.json does not declare " + std::string(kSummarySchema));
  }
  b.records = ReadJsonLines(dir / kResultsFile);
  if (std::filesystem::exists(dir / kConsistencyFile)) {
    b.consistency = ReadJsonLines(dir / kConsistencyFile);
  }
  return b;
}

std::vector<ReportTarget> ParseTargets(std::string_view list) {
  std::vector<ReportTarget> out;
  std::size_t start = 0;
  while (start <= list.size()) {
    auto end = list.find(',', start);
    if (end == std::string_view::npos) end = list.size();
    auto name = list.substr(start, end - start);
    ReportTarget t;
    if (name == "csv") t = ReportTarget::kCsv;
    else if (name == "records" || name == "structured-records" || name == "jsonl")
      t = ReportTarget::kRecords;
    else if (name == "svg") t = ReportTarget::kSvg;
    else
      throw Error(ErrorCode::kPrecondition,
                  "unknown report target '" + std::string(name) + "'");
    if (std::find(out.begin(), out.end(), t) == out.end()) out.push_back(t);
    start = end + 1;
  }
  return out;
}

std::string RenderSummaryCsv(const ReportBundle& bundle) {
  CsvWriter csv;
  if (bundle.records.empty()) return csv.str();
  const auto& s = bundle.summary;
  const auto experiment = bundle.experiment();
  if (experiment == "exp1") {
    for (const auto& det : s["detection"]) {
      const auto prompt = det["prompt_id"].get<std::string>();
      for (const char* k : {"tp", "fn", "fp", "tn"}) {
        csv.Count("detection", prompt, k, det["confusion_matrix"][k]);
      }
      for (const auto& [name, value] : det["stats"].items()) {
        csv.Pct("detection", prompt, name, value);
      }
      csv.Count("detection", prompt, "n_flagged", det["n_flagged"]);
      csv.Count("detection", prompt, "n_faulted", det["n_faulted"]);
      csv.Count("detection", prompt, "n_inconsistent", det["n_inconsistent"]);
      for (const auto& run : det["per_run"]) {
        const auto section = "detection_run_" + std::to_string(run["run_idx"].get<int>());
        for (const char* k : {"tp", "fn", "fp", "tn"}) {
          csv.Count(section, prompt, k, run[k]);
        }
      }
    }
  } else if (experiment == "exp2" || experiment == "exp3") {
    for (const auto& row : s["localization"]) {
      const auto prompt = row["prompt_id"].get<std::string>();
      csv.Count("localization", prompt, "n_tests", row["n_tests"]);
      csv.Count("localization", prompt, "n_overlapping", row["n_overlapping"]);
      for (const char* k : {"union_rate", "recall_mean_overlapping",
                            "recall_std_overlapping", "recall_mean_all",
                            "recall_std_all", "iou_mean_overlapping", "iou_mean_all"}) {
        csv.Pct("localization", prompt, k, row[k]);
      }
      for (const auto& [kind, n] : row["failure_counts"].items()) {
        csv.Count("localization", prompt, "failures_" + kind, n);
      }
      csv.Count("localization", prompt, "n_faulted", row["n_faulted"]);
    }
    csv.Count("analysis", "", "n_failed_scenes", s["n_failed_scenes"]);
    csv.Pct("analysis", "", "lowlight_failure_share", s["lowlight_failure_share"]);
    csv.Count("analysis", "", "n_inconsistent", s["n_inconsistent"]);
  } else if (experiment == "v2v") {
    const auto prompt = s["prompt_id"].get<std::string>();
    const auto& t = s["transport"];
    csv.Count("transport", prompt, "stream_bytes", t["stream_bytes"]);
    csv.Value("transport", prompt, "stream_time_s", t["stream_time_s"], 4, "s");
    csv.Count("transport", prompt, "dialogue_bytes", t["dialogue_bytes"]);
    csv.Value("transport", prompt, "dialogue_time_s", t["dialogue_time_s"], 4, "s");
    csv.Value("transport", prompt, "ratio", t["ratio"], 6, "ratio");
    csv.Count("transport", prompt, "n_messages", s["n_messages"]);
    csv.Count("transport", prompt, "n_errors", s["n_errors"]);
  }
  return csv.str();
}

std::string RenderRecords(const ReportBundle& bundle) {
  std::string out;
  for (const auto& r : bundle.records) out += Dump(r) + "\n";
  return out;
}

std::optional<BoxStats> ComputeBoxStats(std::vector<double> values) {
  if (values.empty()) return std::nullopt;
  std::sort(values.begin(), values.end());
  auto quantile = [&values](double q) {
    double pos = q * static_cast<double>(values.size() - 1);
    auto lo = static_cast<std::size_t>(std::floor(pos));
    auto hi = std::min(lo + 1, values.size() - 1);
    double frac = pos - static_cast<double>(lo);
    return values[lo] + (values[hi] - values[lo]) * frac;
  };
  BoxStats b;
  b.n = values.size();
  b.min = values.front();
  b.max = values.back();
  b.q1 = quantile(0.25);
  b.median = quantile(0.5);
  b.q3 = quantile(0.75);
  double sum = 0;
  for (double v : values) sum += v;
  b.mean = sum / static_cast<double>(values.size());
  return b;
}

std::string RenderRecallBoxPlot(const ReportBundle& bundle) {
  const auto series = CollectSeries(bundle);
  if (series.empty()) return {};
  constexpr double kWidth = 120.0;
  const double width = 80.0 + kWidth * static_cast<double>(series.size());
  constexpr double kTop = 40.0;
  constexpr double kPlotH = 300.0;
  const double height = kTop + kPlotH + 60.0;
  auto y_of = [](double v) { return Fixed(kTop + kPlotH * (1.0 - v), 2); };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << Fixed(width, 0)
      << "\" height=\"" << Fixed(height, 0) << "\" font-family=\"sans-serif\" "
      << "font-size=\"12\">\n";
  svg << "<text x=\"" << Fixed(width / 2, 2) << "\" y=\"20\" text-anchor=\"middle\">"
      << "Per-image recall distribution</text>\n";
  svg << "<line x1=\"60\" y1=\"" << y_of(0) << "\" x2=\"60\" y2=\"" << y_of(1)
      << "\" stroke=\"#000\"/>\n";
  for (int tick = 0; tick <= 10; tick += 2) {
    double v = tick / 10.0;
    svg << "<line x1=\"55\" y1=\"" << y_of(v) << "\" x2=\"60\" y2=\"" << y_of(v)
        << "\" stroke=\"#000\"/>\n";
    svg << "<text x=\"50\" y=\"" << y_of(v) << "\" text-anchor=\"end\" "
        << "dominant-baseline=\"middle\">" << tick * 10 << "%</text>\n";
  }
  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto stats = ComputeBoxStats(series[i].per_image_recall);
    const double cx = 80.0 + kWidth * (static_cast<double>(i) + 0.5);
    const double half = 30.0;
    svg << "<g data-prompt=\"" << series[i].prompt_id << "\">\n";
    if (stats) {
      svg << "<line x1=\"" << Fixed(cx, 2) << "\" y1=\"" << y_of(stats->min)
          << "\" x2=\"" << Fixed(cx, 2) << "\" y2=\"" << y_of(stats->max)
          << "\" stroke=\"#1f4e9c\"/>\n";
      svg << "<rect x=\"" << Fixed(cx - half, 2) << "\" y=\"" << y_of(stats->q3)
          << "\" width=\"" << Fixed(2 * half, 2) << "\" height=\""
          << Fixed(kPlotH * (stats->q3 - stats->q1), 2)
          << "\" fill=\"#9ecae1\" stroke=\"#1f4e9c\"/>\n";
      svg << "<line x1=\"" << Fixed(cx - half, 2) << "\" y1=\"" << y_of(stats->median)
          << "\" x2=\"" << Fixed(cx + half, 2) << "\" y2=\"" << y_of(stats->median)
          << "\" stroke=\"#08306b\" stroke-width=\"2\"/>\n";
      svg << "<text x=\"" << Fixed(cx, 2) << "\" y=\"" << Fixed(kTop + kPlotH + 36, 2)
          << "\" text-anchor=\"middle\">median " << Fixed(stats->median * 100, 2)
          << "%, n=" << stats->n << "</text>\n";
    }
    svg << "<text x=\"" << Fixed(cx, 2) << "\" y=\"" << Fixed(kTop + kPlotH + 18, 2)
        << "\" text-anchor=\"middle\">" << series[i].prompt_id << "</text>\n";
    svg << "</g>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

std::string RenderIouShareChart(const ReportBundle& bundle) {
  const auto series = CollectSeries(bundle);
  if (series.empty()) return {};
  constexpr double kLeft = 60.0;
  constexpr double kBarW = 500.0;
  constexpr double kRowH = 40.0;
  const double height = 60.0 + kRowH * static_cast<double>(series.size()) + 50.0;

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << Fixed(kLeft + kBarW + 40, 0)
      << "\" height=\"" << Fixed(height, 0) << "\" font-family=\"sans-serif\" "
      << "font-size=\"12\">\n";
  svg << "<text x=\"" << Fixed((kLeft + kBarW) / 2, 2) << "\" y=\"20\" "
      << "text-anchor=\"middle\">IoU shares over overlapping samples</text>\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& s = series[i];
    const double y = 40.0 + kRowH * static_cast<double>(i);
    svg << "<g data-prompt=\"" << s.prompt_id << "\">\n";
    svg << "<text x=\"" << Fixed(kLeft - 8, 2) << "\" y=\"" << Fixed(y + 14, 2)
        << "\" text-anchor=\"end\">" << s.prompt_id << "</text>\n";
    double x = kLeft;
    for (std::size_t b = 0; b < s.iou_buckets.size(); ++b) {
      if (s.n_overlapping == 0 || s.iou_buckets[b] == 0) continue;
      double share = static_cast<double>(s.iou_buckets[b]) /
                     static_cast<double>(s.n_overlapping);
      double w = kBarW * share;
      svg << "<rect x=\"" << Fixed(x, 2) << "\" y=\"" << Fixed(y, 2) << "\" width=\""
          << Fixed(w, 2) << "\" height=\"24\" fill=\"" << kBucketColors[b]
          << "\"><title>IoU " << b * 10 << "-" << (b + 1) * 10 << "%: "
          << Fixed(share * 100, 2) << "%</title></rect>\n";
      x += w;
    }
    if (s.n_overlapping == 0) {
      svg << "<text x=\"" << Fixed(kLeft, 2) << "\" y=\"" << Fixed(y + 14, 2)
          << "\">no overlapping samples</text>\n";
    }
    svg << "</g>\n";
  }
  const double ly = 40.0 + kRowH * static_cast<double>(series.size()) + 10.0;
  for (std::size_t b = 0; b < kBucketColors.size(); ++b) {
    const double lx = kLeft + 50.0 * static_cast<double>(b);
    svg << "<rect x=\"" << Fixed(lx, 2) << "\" y=\"" << Fixed(ly, 2)
        << "\" width=\"12\" height=\"12\" fill=\"" << kBucketColors[b] << "\"/>\n";
    svg << "<text x=\"" << Fixed(lx + 15, 2) << "\" y=\"" << Fixed(ly + 10, 2)
        << "\" font-size=\"9\">" << b * 10 << "-" << (b + 1) * 10 << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

EmitResult EmitReport(const ReportBundle& bundle,
                      const std::vector<ReportTarget>& targets,
                      const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorCode::kIoError, "cannot create " + out_dir.string());

  EmitResult out;
  const bool empty = bundle.records.empty();
  if (empty) out.warnings.push_back("EmptyResults: no records to report");
  for (auto target : targets) {
    switch (target) {
      case ReportTarget::kCsv:
        WriteFile(out_dir / "summary.csv", RenderSummaryCsv(bundle));
        out.written.push_back(out_dir / "summary.csv");
        break;
      case ReportTarget::kRecords:
        WriteFile(out_dir / "samples.jsonl", RenderRecords(bundle));
        out.written.push_back(out_dir / "samples.jsonl");
        break;
      case ReportTarget::kSvg: {
        if (empty) break;
        auto box = RenderRecallBoxPlot(bundle);
        if (!box.empty()) {
          WriteFile(out_dir / "recall_distribution.svg", box);
          out.written.push_back(out_dir / "recall_distribution.svg");
          WriteFile(out_dir / "iou_shares.svg", RenderIouShareChart(bundle));
          out.written.push_back(out_dir / "iou_shares.svg");
        }
        break;
      }
    }
  }
  return out;
}

}  // namespace fovlink
