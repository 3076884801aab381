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
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace fovlink {

struct ConfusionMatrix {
  std::int64_t tp = 0;
  std::int64_t fn = 0;
  std::int64_t fp = 0;
  std::int64_t tn = 0;

  std::int64_t total() const { return tp + fn + fp + tn; }
  bool operator==(const ConfusionMatrix&) const = default;
};

// The ten detection statistics. A statistic whose denominator is zero is
// left empty and its name listed in `undefined`; it is never coerced to 0.
struct DetectionStats {
  std::optional<double> recall;
  std::optional<double> specificity;
  std::optional<double> precision;
  std::optional<double> npv;
  std::optional<double> fpr;
  std::optional<double> fdr;
  std::optional<double> fnr;
  std::optional<double> accuracy;
  std::optional<double> f1;
  std::optional<double> mcc;
  std::vector<std::string> undefined;

  // Name/value pairs in the fixed reporting order.
  std::vector<std::pair<std::string, std::optional<double>>> Named() const;
};

using SceneVerdict = std::pair<std::string, bool>;

// Joins predictions with labels by scene id. Labels without a prediction are
// not counted. Throws Error(kUnknownSceneId) for a prediction with no label
// and Error(kDuplicatePrediction) when a scene is predicted twice.
ConfusionMatrix BuildConfusionMatrix(const std::vector<SceneVerdict>& predictions,
                                     const std::vector<SceneVerdict>& labels);

// Throws Error(kPrecondition) on negative counts or an all-zero matrix.
DetectionStats DeriveDetectionStats(const ConfusionMatrix& cm);

struct LocalizationSample {
  std::string scene_id;
  int run_idx = 0;
  bool overlap = false;
  double recall = 0;
  double iou = 0;
};

// Population standard deviation throughout. The overlapping-only aggregates
// are empty when no sample overlaps.
struct LocalizationSummary {
  std::size_t n_tests = 0;
  std::size_t n_overlapping = 0;
  double union_rate = 0;
  std::optional<double> recall_mean_overlapping;
  std::optional<double> recall_std_overlapping;
  double recall_mean_all = 0;
  double recall_std_all = 0;
  std::optional<double> iou_mean_overlapping;
  double iou_mean_all = 0;
};

// Throws Error(kEmptySampleSet) on an empty list.
LocalizationSummary SummarizeLocalization(
    const std::vector<LocalizationSample>& samples);

}  // namespace fovlink
