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

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fovlink/geometry.hpp"

namespace fovlink {

enum class PromptId { kBin, kBinRefined, kP1, kP2, kP3 };

enum class ExpectedFormat { kYesNo, kCoordinateTemplate };

struct PromptSpec {
  PromptId id;
  std::string_view text;
  ExpectedFormat expected_format;
};

std::string_view PromptIdName(PromptId id);
// Throws Error(kUnknownPromptId).
PromptId ParsePromptId(std::string_view name);

const PromptSpec& GetPrompt(PromptId id);
// Throws Error(kUnknownPromptId).
const PromptSpec& GetPrompt(std::string_view name);
const std::vector<PromptSpec>& RegisteredPrompts();

enum class FailureKind {
  kNoPedestrianDetected,  // A
  kPartialCoordinates,    // B
  kAmbiguousDescription,  // C
};

std::string_view FailureKindName(FailureKind kind);
std::optional<FailureKind> ParseFailureKind(std::string_view name);

struct ParsedDetection {
  enum class Kind { kVerdict, kLocated, kFailure };

  Kind kind = Kind::kFailure;
  std::optional<bool> verdict;
  std::optional<NormalizedBBox> box;
  std::optional<FailureKind> failure_kind;
  std::string raw_excerpt;

  static ParsedDetection Verdict(bool value, std::string excerpt);
  static ParsedDetection Located(const NormalizedBBox& box, std::string excerpt);
  static ParsedDetection Failure(FailureKind kind, std::string excerpt);

  bool operator==(const ParsedDetection&) const = default;
};

std::string_view DetectionKindName(ParsedDetection::Kind kind);

// Outcome of reading a yes/no reply. `verdict` is empty when the first word
// is neither yes nor no; `raw` always holds the reply as received.
struct BinaryParse {
  std::optional<bool> verdict;
  std::string raw;

  bool ok() const { return verdict.has_value(); }
};

BinaryParse ParseBinaryResponse(std::string_view text);

// Takes the first two parenthesised numeric pairs found anywhere in the
// text as the corners. Falls back to ClassifyFailure otherwise.
ParsedDetection ParseBboxResponse(std::string_view text);

// Precedence: negation about people (A), then any complete or truncated
// numeric pair (B), otherwise C.
FailureKind ClassifyFailure(std::string_view text);

// Phrases that mark a reply as "no pedestrian detected", matched
// case-insensitively as substrings.
const std::vector<std::string_view>& NegationPhrases();

// Renders a box with the reply template "(X,Y), (X',Y')" using the shortest
// decimal form that parses back to the same doubles.
std::string FormatBboxTemplate(const NormalizedBBox& box);

}  // namespace fovlink
