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

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace fovlink {

enum class ErrorCode {
  kMissingFile,
  kSchemaViolation,
  kInvariantViolation,
  kDimensionMismatch,
  kNonFiniteInput,
  kDegenerateGroundTruth,
  kBothDegenerate,
  kUnknownSceneId,
  kDuplicatePrediction,
  kEmptySampleSet,
  kPrecondition,
  kTimeout,
  kRateLimitedExhausted,
  kTransportError,
  kMalformedBackendReply,
  kUnscriptedKey,
  kUnknownPromptId,
  kInsufficientRuns,
  kEmptyFailureSet,
  kBackendExhausted,
  kUnsupportedVersion,
  kMalformedMessage,
  kIoError,
};

std::string_view ErrorCodeName(ErrorCode code);

// Base of every error raised by the library. The code is stable and is what
// tests and the CLI dispatch on; the message is for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// One problem found while validating a manifest. `line` is 1-based; 0 when
// the violation is not tied to a single line (e.g. cross-record checks).
struct Violation {
  ErrorCode code;
  std::size_t line = 0;
  std::string scene_id;
  std::string field;
  std::string reason;

  std::string ToString() const;
};

// Aggregate of every violation found in one manifest load.
class ManifestError : public Error {
 public:
  explicit ManifestError(std::vector<Violation> violations);

  const std::vector<Violation>& violations() const noexcept {
    return violations_;
  }

 private:
  std::vector<Violation> violations_;
};

}  // namespace fovlink
