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

#include "fovlink/dataset.hpp"

namespace fovlink {

// Axis-aligned box in the unit reference system: (0,0) is the top-left
// corner of the image and (1,1) the bottom-right. Canonical form has
// x <= x2 and y <= y2 with every component in [0,1].
struct NormalizedBBox {
  double x = 0;
  double y = 0;
  double x2 = 0;
  double y2 = 0;
  // Set when a component had to be clamped into [0,1].
  bool clamped = false;
  // Set when the box has zero area.
  bool degenerate = false;

  double width() const { return x2 - x; }
  double height() const { return y2 - y; }
  double area() const { return width() * height(); }

  bool operator==(const NormalizedBBox&) const = default;
};

// Divides each coordinate by the matching image dimension.
// Throws Error(kDimensionMismatch) if the box does not fit the image.
NormalizedBBox NormalizeBBox(const PixelBBox& box, int width, int height);

// Orders two arbitrary corners into (min,min)-(max,max) and clamps into the
// unit square. Throws Error(kNonFiniteInput) on NaN or infinity.
NormalizedBBox CanonicalizeBBox(double ax, double ay, double bx, double by);

double IntersectionArea(const NormalizedBBox& a, const NormalizedBBox& b);

// Share of the ground-truth area covered by the generated box.
// Throws Error(kDegenerateGroundTruth) when gt has zero area.
double OverlapRecall(const NormalizedBBox& gt, const NormalizedBBox& gen);

// Throws Error(kBothDegenerate) when both boxes have zero area.
double Iou(const NormalizedBBox& gt, const NormalizedBBox& gen);

// True iff the intersection has strictly positive area; touching edges do
// not count.
bool Overlaps(const NormalizedBBox& gt, const NormalizedBBox& gen);

}  // namespace fovlink
