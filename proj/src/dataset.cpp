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

#include "fovlink/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <unordered_set>

#include "fovlink/error.hpp"
#include "json.hpp"

namespace fovlink {

namespace {

using nlohmann::json;

constexpr const char* kKeys[] = {"scene_id", "has_pedestrian", "width",
                                 "height",   "image_path",     "gt_boxes",
                                 "tags"};

bool IsBlank(const std::string& line) {
  return std::all_of(line.begin(), line.end(),
                     [](unsigned char c) { return std::isspace(c); });
}

class RecordParser {
 public:
  RecordParser(std::size_t line, std::vector<Violation>& out)
      : line_(line), out_(out) {}

  bool Parse(const json& obj, SceneRecord& rec) {
    if (!obj.is_object()) {
      Schema("", "record is not a mapping");
      return false;
    }
    for (const auto& [key, value] : obj.items()) {
      if (std::find_if(std::begin(kKeys), std::end(kKeys), [&](const char* k) {
            return key == k;
          }) == std::end(kKeys)) {
        Schema(key, "unknown key");
      }
    }
    for (const char* key : kKeys) {
      if (!obj.contains(key)) Schema(key, "missing key");
    }
    if (failed_) return false;

    const auto& id = obj["scene_id"];
    if (!id.is_string() || id.get<std::string>().empty()) {
      Schema("scene_id", "expected a non-empty string");
    } else {
      rec.scene_id = id.get<std::string>();
    }
    const auto& path = obj["image_path"];
    if (!path.is_string()) {
      Schema("image_path", "expected a string");
    } else {
      rec.image_path = path.get<std::string>();
    }
    rec.width = Dimension(obj["width"], "width");
    rec.height = Dimension(obj["height"], "height");
    const auto& flag = obj["has_pedestrian"];
    if (!flag.is_boolean()) {
      Schema("has_pedestrian", "expected true or false");
    } else {
      rec.has_pedestrian = flag.get<bool>();
    }
    Boxes(obj["gt_boxes"], rec);
    Tags(obj["tags"], rec);
    if (failed_) return false;

    CheckInvariants(rec);
    return !failed_;
  }

 private:
  void Schema(const std::string& field, const std::string& reason) {
    out_.push_back({ErrorCode::kSchemaViolation, line_, "", field, reason});
    failed_ = true;
  }

  void Invariant(const std::string& scene_id, const std::string& reason) {
    out_.push_back({ErrorCode::kInvariantViolation, line_, scene_id, "",
                    reason});
    failed_ = true;
  }

  int Dimension(const json& v, const char* field) {
    if (!v.is_number_integer()) {
      Schema(field, "expected an integer");
      return 0;
    }
    auto value = v.get<long long>();
    if (value > std::numeric_limits<int>::max() ||
        value < std::numeric_limits<int>::min()) {
      Schema(field, "integer out of range");
      return 0;
    }
    return static_cast<int>(value);
  }

  void Boxes(const json& v, SceneRecord& rec) {
    if (!v.is_array()) {
      Schema("gt_boxes", "expected a list of boxes");
      return;
    }
    for (const auto& box : v) {
      if (!box.is_array() || box.size() != 4 ||
          !std::all_of(box.begin(), box.end(),
                       [](const json& c) { return c.is_number(); })) {
        Schema("gt_boxes", "each box must be [x_min, y_min, x_max, y_max]");
        return;
      }
      rec.gt_boxes.push_back({box[0].get<double>(), box[1].get<double>(),
                              box[2].get<double>(), box[3].get<double>()});
    }
  }

  void Tags(const json& v, SceneRecord& rec) {
    if (!v.is_array()) {
      Schema("tags", "expected a list of strings");
      return;
    }
    for (const auto& tag : v) {
      if (!tag.is_string() || tag.get<std::string>().empty()) {
        Schema("tags", "tags must be non-empty strings");
        return;
      }
      rec.tags.insert(tag.get<std::string>());
    }
  }

  void CheckInvariants(const SceneRecord& rec) {
    if (rec.width <= 0 || rec.height <= 0) {
      Invariant(rec.scene_id, "width and height must be positive");
    }
    if (rec.has_pedestrian && rec.gt_boxes.empty()) {
      Invariant(rec.scene_id, "has_pedestrian is true but gt_boxes is empty");
    }
    if (!rec.has_pedestrian && !rec.gt_boxes.empty()) {
      Invariant(rec.scene_id, "has_pedestrian is false but gt_boxes is set");
    }
    for (std::size_t i = 0; i < rec.gt_boxes.size(); ++i) {
      const auto& b = rec.gt_boxes[i];
      const std::string which = "gt_boxes[" + std::to_string(i) + "] ";
      if (!(b.x_min < b.x_max) || !(b.y_min < b.y_max)) {
        Invariant(rec.scene_id, which + "has no positive area");
      }
      if (b.x_min < 0 || b.y_min < 0 || b.x_max > rec.width ||
          b.y_max > rec.height) {
        Invariant(rec.scene_id, which + "exceeds the image bounds");
      }
    }
  }

  std::size_t line_;
  std::vector<Violation>& out_;
  bool failed_ = false;
};

}  // namespace

const SceneRecord* SceneSet::Find(const std::string& scene_id) const {
  for (const auto* group : {&positives, &negatives}) {
    auto it = std::find_if(group->begin(), group->end(),
                           [&](const auto& r) { return r.scene_id == scene_id; });
    if (it != group->end()) return &*it;
  }
  return nullptr;
}

std::vector<const SceneRecord*> SceneSet::All() const {
  std::vector<const SceneRecord*> all;
  all.reserve(size());
  for (const auto& r : positives) all.push_back(&r);
  for (const auto& r : negatives) all.push_back(&r);
  return all;
}

SceneSet ParseManifest(std::istream& in) {
  SceneSet set;
  std::vector<Violation> violations;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (IsBlank(line)) continue;

    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::exception& e) {
      violations.push_back({ErrorCode::kSchemaViolation, line_no, "", "",
                            std::string("not a valid record: ") + e.what()});
      continue;
    }
    SceneRecord rec;
    if (!RecordParser(line_no, violations).Parse(obj, rec)) continue;
    if (!seen.insert(rec.scene_id).second) {
      violations.push_back({ErrorCode::kInvariantViolation, line_no,
                            rec.scene_id, "scene_id", "duplicate scene_id"});
      continue;
    }
    (rec.has_pedestrian ? set.positives : set.negatives)
        .push_back(std::move(rec));
  }
  if (!violations.empty()) throw ManifestError(std::move(violations));
  return set;
}

SceneSet LoadManifest(const std::filesystem::path& path) {
  return LoadManifestWithBase(path).scenes;
}

LoadedManifest LoadManifestWithBase(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!std::filesystem::is_regular_file(path) || !in) {
    throw Error(ErrorCode::kMissingFile, "cannot open manifest " +
                                             path.string());
  }
  return {ParseManifest(in), path.parent_path()};
}

SceneSet ApplyCurationFilter(const SceneSet& set,
                             const std::set<std::string>& required_tags,
                             std::size_t max_boxes) {
  SceneSet out;
  out.negatives = set.negatives;
  for (const auto& rec : set.positives) {
    bool tagged = std::includes(rec.tags.begin(), rec.tags.end(),
                                required_tags.begin(), required_tags.end());
    if (tagged && rec.gt_boxes.size() <= max_boxes) out.positives.push_back(rec);
  }
  return out;
}

std::string SerializeSceneRecord(const SceneRecord& record) {
  nlohmann::ordered_json obj;
  obj["scene_id"] = record.scene_id;
  obj["image_path"] = record.image_path;
  obj["width"] = record.width;
  obj["height"] = record.height;
  obj["has_pedestrian"] = record.has_pedestrian;
  auto boxes = nlohmann::ordered_json::array();
  for (const auto& b : record.gt_boxes) {
    boxes.push_back({b.x_min, b.y_min, b.x_max, b.y_max});
  }
  obj["gt_boxes"] = std::move(boxes);
  obj["tags"] = record.tags;
  return obj.dump();
}

}  // namespace fovlink
