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

#include "fovlink/stats.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>
#include <unordered_set>

#include "fovlink/error.hpp"

namespace fovlink {

namespace {

struct Moments {
  double mean = 0;
  double stddev = 0;
};

// Summed in sorted order so the result does not depend on sample order.
Moments PopulationMoments(std::vector<double> values) {
  Moments m;
  if (values.empty()) return m;
  std::sort(values.begin(), values.end());
  double sum = 0;
  for (double v : values) sum += v;
  m.mean = sum / static_cast<double>(values.size());
  double sq = 0;
  for (double v : values) sq += (v - m.mean) * (v - m.mean);
  m.stddev = std::sqrt(sq / static_cast<double>(values.size()));
  return m;
}

}  // namespace

std::vector<std::pair<std::string, std::optional<double>>> DetectionStats::Named()
    const {
  return {{"recall", recall},     {"specificity", specificity},
          {"precision", precision}, {"npv", npv},
          {"fpr", fpr},           {"fdr", fdr},
          {"fnr", fnr},           {"accuracy", accuracy},
          {"f1", f1},             {"mcc", mcc}};
}

ConfusionMatrix BuildConfusionMatrix(const std::vector<SceneVerdict>& predictions,
                                     const std::vector<SceneVerdict>& labels) {
  std::unordered_map<std::string, bool> truth;
  for (const auto& [id, label] : labels) truth.emplace(id, label);

  ConfusionMatrix cm;
  std::unordered_set<std::string> seen;
  for (const auto& [id, predicted] : predictions) {
    auto it = truth.find(id);
    if (it == truth.end()) {
      throw Error(ErrorCode::kUnknownSceneId, "no label for scene '" + id + "'");
    }
    if (!seen.insert(id).second) {
      throw Error(ErrorCode::kDuplicatePrediction,
                  "scene '" + id + "' predicted more than once");
    }
    bool actual = it->second;
    if (actual && predicted) ++cm.tp;
    else if (actual) ++cm.fn;
    else if (predicted) ++cm.fp;
    else ++cm.tn;
  }
  return cm;
}

DetectionStats DeriveDetectionStats(const ConfusionMatrix& cm) {
  if (cm.tp < 0 || cm.fn < 0 || cm.fp < 0 || cm.tn < 0) {
    throw Error(ErrorCode::kPrecondition, "confusion counts must be >= 0");
  }
  if (cm.total() == 0) {
    throw Error(ErrorCode::kPrecondition, "confusion matrix is empty");
  }
  const double tp = static_cast<double>(cm.tp);
  const double fn = static_cast<double>(cm.fn);
  const double fp = static_cast<double>(cm.fp);
  const double tn = static_cast<double>(cm.tn);

  DetectionStats s;
  auto ratio = [&s](const char* name, double num, double den) {
    std::optional<double> out;
    if (den > 0) out = num / den;
    else s.undefined.emplace_back(name);
    return out;
  };
  s.recall = ratio("recall", tp, tp + fn);
  s.specificity = ratio("specificity", tn, tn + fp);
  s.precision = ratio("precision", tp, tp + fp);
  s.npv = ratio("npv", tn, tn + fn);
  s.fpr = ratio("fpr", fp, fp + tn);
  s.fdr = ratio("fdr", fp, fp + tp);
  s.fnr = ratio("fnr", fn, fn + tp);
  s.accuracy = ratio("accuracy", tp + tn, tp + tn + fp + fn);
  if (s.precision && s.recall && (*s.precision + *s.recall) > 0) {
    s.f1 = 2 * *s.precision * *s.recall / (*s.precision + *s.recall);
  } else {
    s.undefined.emplace_back("f1");
  }
  double den = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn);
  s.mcc = ratio("mcc", tp * tn - fp * fn, std::sqrt(den));
  return s;
}

LocalizationSummary SummarizeLocalization(
    const std::vector<LocalizationSample>& samples) {
  if (samples.empty()) {
    throw Error(ErrorCode::kEmptySampleSet, "no localization samples");
  }
  std::vector<double> recall_all;
  std::vector<double> iou_all;
  std::vector<double> recall_overlap;
  std::vector<double> iou_overlap;
  for (const auto& s : samples) {
    recall_all.push_back(s.overlap ? s.recall : 0.0);
    iou_all.push_back(s.overlap ? s.iou : 0.0);
    if (s.overlap) {
      recall_overlap.push_back(s.recall);
      iou_overlap.push_back(s.iou);
    }
  }
  LocalizationSummary out;
  out.n_tests = samples.size();
  out.n_overlapping = recall_overlap.size();
  out.union_rate =
      static_cast<double>(out.n_overlapping) / static_cast<double>(out.n_tests);
  auto all = PopulationMoments(recall_all);
  out.recall_mean_all = all.mean;
  out.recall_std_all = all.stddev;
  out.iou_mean_all = PopulationMoments(iou_all).mean;
  if (!recall_overlap.empty()) {
    auto ov = PopulationMoments(recall_overlap);
    out.recall_mean_overlapping = ov.mean;
    out.recall_std_overlapping = ov.stddev;
    out.iou_mean_overlapping = PopulationMoments(iou_overlap).mean;
  }
  return out;
}

}  // namespace fovlink
