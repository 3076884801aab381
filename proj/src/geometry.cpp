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

#include "fovlink/geometry.hpp"

#include <algorithm>
#include <cmath>

#include "fovlink/error.hpp"

namespace fovlink {

NormalizedBBox NormalizeBBox(const PixelBBox& box, int width, int height) {
  if (width <= 0 || height <= 0) {
    throw Error(ErrorCode::kDimensionMismatch, "image dimensions must be positive");
  }
  if (box.x_min < 0 || box.y_min < 0 || box.x_max > width ||
      box.y_max > height || box.x_min > box.x_max || box.y_min > box.y_max) {
    throw Error(ErrorCode::kDimensionMismatch,
                "box does not fit a " + std::to_string(width) + "x" +
                    std::to_string(height) + " image");
  }
  NormalizedBBox out{box.x_min / width, box.y_min / height,
                     box.x_max / width, box.y_max / height};
  out.degenerate = out.area() == 0;
  return out;
}

NormalizedBBox CanonicalizeBBox(double ax, double ay, double bx, double by) {
  if (!std::isfinite(ax) || !std::isfinite(ay) || !std::isfinite(bx) ||
      !std::isfinite(by)) {
    throw Error(ErrorCode::kNonFiniteInput, "corner coordinates must be finite");
  }
  bool clamped = false;
  auto unit = [&clamped](double v) {
    double c = std::clamp(v, 0.0, 1.0);
    if (c != v) clamped = true;
    return c;
  };
  NormalizedBBox out;
  out.x = unit(std::min(ax, bx));
  out.y = unit(std::min(ay, by));
  out.x2 = unit(std::max(ax, bx));
  out.y2 = unit(std::max(ay, by));
  out.clamped = clamped;
  out.degenerate = out.area() == 0;
  return out;
}

double IntersectionArea(const NormalizedBBox& a, const NormalizedBBox& b) {
  double w = std::min(a.x2, b.x2) - std::max(a.x, b.x);
  double h = std::min(a.y2, b.y2) - std::max(a.y, b.y);
  if (w <= 0 || h <= 0) return 0;
  return w * h;
}

double OverlapRecall(const NormalizedBBox& gt, const NormalizedBBox& gen) {
  double gt_area = gt.area();
  if (!(gt_area > 0)) {
    throw Error(ErrorCode::kDegenerateGroundTruth,
                "ground-truth box has zero area");
  }
  return std::min(1.0, IntersectionArea(gt, gen) / gt_area);
}

double Iou(const NormalizedBBox& gt, const NormalizedBBox& gen) {
  double gt_area = gt.area();
  double gen_area = gen.area();
  if (!(gt_area > 0) && !(gen_area > 0)) {
    throw Error(ErrorCode::kBothDegenerate, "both boxes have zero area");
  }
  double inter = IntersectionArea(gt, gen);
  // The union is never smaller than either box, also under rounding.
  double uni = std::max({gt_area + gen_area - inter, gt_area, gen_area});
  return std::clamp(inter / uni, 0.0, 1.0);
}

bool Overlaps(const NormalizedBBox& gt, const NormalizedBBox& gen) {
  return IntersectionArea(gt, gen) > 0;
}

}  // namespace fovlink
