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

#include <cstddef>
#include <filesystem>
#include <istream>
#include <limits>
#include <set>
#include <string>
#include <vector>

namespace fovlink {

// Ground-truth pedestrian box in image pixels, (0,0) at the top-left.
struct PixelBBox {
  double x_min = 0;
  double y_min = 0;
  double x_max = 0;
  double y_max = 0;

  bool operator==(const PixelBBox&) const = default;
};

// Tags of the controlled vocabulary. Lighting tags feed the low-light
// failure analysis; the layout tags drive curation.
namespace tags {
inline constexpr const char* kDusk = "dusk";
inline constexpr const char* kSunset = "sunset";
inline constexpr const char* kShade = "shade";
inline constexpr const char* kSolarGlare = "solar_glare";
inline constexpr const char* kNight = "night";
inline constexpr const char* kSinglePedestrian = "single_pedestrian";
inline constexpr const char* kCrosswalkCenter = "crosswalk_center";
}  // namespace tags

struct SceneRecord {
  std::string scene_id;
  std::string image_path;
  int width = 0;
  int height = 0;
  bool has_pedestrian = false;
  std::vector<PixelBBox> gt_boxes;
  std::set<std::string> tags;

  bool operator==(const SceneRecord&) const = default;
};

// Curated scenes split into the labelled positives and the control group.
// Immutable once built; share freely across threads.
struct SceneSet {
  std::vector<SceneRecord> positives;
  std::vector<SceneRecord> negatives;

  std::size_t size() const { return positives.size() + negatives.size(); }
  // nullptr when the id is unknown.
  const SceneRecord* Find(const std::string& scene_id) const;
  // Positives followed by negatives, in file order within each group.
  std::vector<const SceneRecord*> All() const;

  bool operator==(const SceneSet&) const = default;
};

// Directory that relative image paths of a loaded manifest resolve against.
struct LoadedManifest {
  SceneSet scenes;
  std::filesystem::path base_dir;
};

// Parses JSON-lines manifest text. All violations are collected before
// throwing a single ManifestError.
SceneSet ParseManifest(std::istream& in);

// Throws Error(kMissingFile) when the path does not exist.
SceneSet LoadManifest(const std::filesystem::path& path);
LoadedManifest LoadManifestWithBase(const std::filesystem::path& path);

inline constexpr std::size_t kUnlimitedBoxes =
    std::numeric_limits<std::size_t>::max();

// Keeps positives that carry every required tag and at most `max_boxes`
// ground-truth boxes. Negatives pass through untouched.
SceneSet ApplyCurationFilter(const SceneSet& set,
                             const std::set<std::string>& required_tags,
                             std::size_t max_boxes);

// One manifest line in canonical key order. Used by fixture generators.
std::string SerializeSceneRecord(const SceneRecord& record);

}  // namespace fovlink
