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

#include "fovlink/error.hpp"

#include <sstream>

namespace fovlink {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMissingFile: return "MissingFile";
    case ErrorCode::kSchemaViolation: return "SchemaViolation";
    case ErrorCode::kInvariantViolation: return "InvariantViolation";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kNonFiniteInput: return "NonFiniteInput";
    case ErrorCode::kDegenerateGroundTruth: return "DegenerateGroundTruth";
    case ErrorCode::kBothDegenerate: return "BothDegenerate";
    case ErrorCode::kUnknownSceneId: return "UnknownSceneId";
    case ErrorCode::kDuplicatePrediction: return "DuplicatePrediction";
    case ErrorCode::kEmptySampleSet: return "EmptySampleSet";
    case ErrorCode::kPrecondition: return "Precondition";
    case ErrorCode::kTimeout: return "Timeout";
    case ErrorCode::kRateLimitedExhausted: return "RateLimitedExhausted";
    case ErrorCode::kTransportError: return "TransportError";
    case ErrorCode::kMalformedBackendReply: return "MalformedBackendReply";
    case ErrorCode::kUnscriptedKey: return "UnscriptedKey";
    case ErrorCode::kUnknownPromptId: return "UnknownPromptId";
    case ErrorCode::kInsufficientRuns: return "InsufficientRuns";
    case ErrorCode::kEmptyFailureSet: return "EmptyFailureSet";
    case ErrorCode::kBackendExhausted: return "BackendExhausted";
    case ErrorCode::kUnsupportedVersion: return "UnsupportedVersion";
    case ErrorCode::kMalformedMessage: return "MalformedMessage";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Unknown";
}

std::string Violation::ToString() const {
  std::ostringstream out;
  out << ErrorCodeName(code);
  if (line != 0) out << " line " << line;
  if (!scene_id.empty()) out << " scene '" << scene_id << "'";
  if (!field.empty()) out << " field '" << field << "'";
  out << ": " << reason;
  return out.str();
}

namespace {

ErrorCode DominantCode(const std::vector<Violation>& violations) {
  for (const auto& v : violations) {
    if (v.code == ErrorCode::kSchemaViolation) return v.code;
  }
  return violations.empty() ? ErrorCode::kSchemaViolation
                            : violations.front().code;
}

std::string Describe(const std::vector<Violation>& violations) {
  std::ostringstream out;
  out << violations.size() << " violation(s)";
  for (const auto& v : violations) out << "\n  " << v.ToString();
  return out.str();
}

}  // namespace

ManifestError::ManifestError(std::vector<Violation> violations)
    : Error(DominantCode(violations), Describe(violations)),
      violations_(std::move(violations)) {}

}  // namespace fovlink
