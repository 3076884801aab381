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

#include "fovlink/perception.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <regex>

#include "fovlink/error.hpp"

namespace fovlink {

namespace {

constexpr std::string_view kBinText =
    "Is there a human pedestrian in this image? Answer only either \"yes\" or "
    "\"no\".";

constexpr std::string_view kBinRefinedText =
    "Is there a human pedestrian in this image? Answer only either \"yes\" or "
    "\"no\". It is very important for you to say 'no' if there is no "
    "pedestrian close by.";

constexpr std::string_view kP1Text =
    "Given the reference system where (0,0) is the top-left corner and (1,1) "
    "is the bottom-right corner of the image, provide the coordinates (X,Y), "
    "(X',Y') representing the precise location of a person in the image. "
    "Ensure the coordinates accurately delineate the complete area occupied "
    "by the person. Return coordinates ONLY using this template: (X,Y), "
    "(X',Y')";

constexpr std::string_view kP2Text =
    "In the image, identify the person's location using a coordinate system "
    "where (0,0) is the top-left corner and (1,1) is the bottom-right corner. "
    "Provide the coordinates (X,Y), (X',Y') that encapsulate the entire area "
    "occupied by the person. Use this format only: (X,Y), (X',Y')";

constexpr std::string_view kP3Text =
    "Using (0,0) is the top-left corner and (1,1) is the bottom-right corner, "
    "provide the coordinates (X,Y), (X',Y') of the location of a person in "
    "the image. The coordinates should contain the complete area occupied by "
    "the person. Return coordinates ONLY using the template: (X,Y), (X',Y')";

constexpr std::size_t kMaxExcerpt = 512;

// Numbers as models write them: optional sign, integer or decimal, with or
// without a leading zero.
constexpr const char* kNumber = R"([-+]?(?:\d+(?:\.\d*)?|\.\d+))";

const std::regex& PairPattern() {
  static const std::regex re(std::string(R"(\(\s*()") + kNumber +
                             R"()\s*,\s*()" + kNumber + R"()\s*\))");
  return re;
}

const std::regex& PairStartPattern() {
  static const std::regex re(std::string(R"(\(\s*)") + kNumber + R"(\s*,)");
  return re;
}

const std::regex& TrailingOpenPattern() {
  static const std::regex re(std::string(R"(\(\s*)") + kNumber + R"(\s*$)");
  return re;
}

double ToDouble(const std::string& token) {
  std::string_view s = token;
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw Error(ErrorCode::kNonFiniteInput, "unreadable number '" + token + "'");
  }
  return value;
}

std::string Excerpt(std::string_view text) {
  if (text.size() <= kMaxExcerpt) return std::string(text);
  std::size_t cut = kMaxExcerpt;
  while (cut > 0 && (static_cast<unsigned char>(text[cut]) & 0xC0) == 0x80) {
    --cut;
  }
  return std::string(text.substr(0, cut));
}

std::string Lowercase(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  // Typographic apostrophe (U+2019) becomes ASCII so "can’t" matches.
  const std::string curly = "\xE2\x80\x99";
  for (auto pos = out.find(curly); pos != std::string::npos;
       pos = out.find(curly, pos)) {
    out.replace(pos, curly.size(), "'");
  }
  return out;
}

bool IsWordChar(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) != 0;
}

bool ContainsPhrase(const std::string& haystack, std::string_view phrase) {
  for (auto pos = haystack.find(phrase); pos != std::string::npos;
       pos = haystack.find(phrase, pos + 1)) {
    bool left = pos == 0 || !IsWordChar(haystack[pos - 1]);
    auto end = pos + phrase.size();
    bool right = end == haystack.size() || !IsWordChar(haystack[end]) ||
                 // Plurals: "no pedestrians", "no persons".
                 (haystack[end] == 's' &&
                  (end + 1 == haystack.size() || !IsWordChar(haystack[end + 1])));
    if (left && right) return true;
  }
  return false;
}

}  // namespace

std::string_view PromptIdName(PromptId id) {
  switch (id) {
    case PromptId::kBin: return "BIN";
    case PromptId::kBinRefined: return "BIN_REFINED";
    case PromptId::kP1: return "P1";
    case PromptId::kP2: return "P2";
    case PromptId::kP3: return "P3";
  }
  return "?";
}

PromptId ParsePromptId(std::string_view name) {
  for (const auto& spec : RegisteredPrompts()) {
    if (PromptIdName(spec.id) == name) return spec.id;
  }
  throw Error(ErrorCode::kUnknownPromptId,
              "no prompt registered as '" + std::string(name) + "'");
}

const std::vector<PromptSpec>& RegisteredPrompts() {
  static const std::vector<PromptSpec> prompts = {
      {PromptId::kBin, kBinText, ExpectedFormat::kYesNo},
      {PromptId::kBinRefined, kBinRefinedText, ExpectedFormat::kYesNo},
      {PromptId::kP1, kP1Text, ExpectedFormat::kCoordinateTemplate},
      {PromptId::kP2, kP2Text, ExpectedFormat::kCoordinateTemplate},
      {PromptId::kP3, kP3Text, ExpectedFormat::kCoordinateTemplate},
  };
  return prompts;
}

const PromptSpec& GetPrompt(PromptId id) {
  for (const auto& spec : RegisteredPrompts()) {
    if (spec.id == id) return spec;
  }
  throw Error(ErrorCode::kUnknownPromptId, "unregistered prompt id");
}

const PromptSpec& GetPrompt(std::string_view name) {
  return GetPrompt(ParsePromptId(name));
}

std::string_view FailureKindName(FailureKind kind) {
  switch (kind) {
    case FailureKind::kNoPedestrianDetected: return "NoPedestrianDetected";
    case FailureKind::kPartialCoordinates: return "PartialCoordinates";
    case FailureKind::kAmbiguousDescription: return "AmbiguousDescription";
  }
  return "?";
}

std::optional<FailureKind> ParseFailureKind(std::string_view name) {
  for (auto kind : {FailureKind::kNoPedestrianDetected,
                    FailureKind::kPartialCoordinates,
                    FailureKind::kAmbiguousDescription}) {
    if (FailureKindName(kind) == name) return kind;
  }
  return std::nullopt;
}

std::string_view DetectionKindName(ParsedDetection::Kind kind) {
  switch (kind) {
    case ParsedDetection::Kind::kVerdict: return "verdict";
    case ParsedDetection::Kind::kLocated: return "located";
    case ParsedDetection::Kind::kFailure: return "failure";
  }
  return "?";
}

ParsedDetection ParsedDetection::Verdict(bool value, std::string excerpt) {
  ParsedDetection d;
  d.kind = Kind::kVerdict;
  d.verdict = value;
  d.raw_excerpt = std::move(excerpt);
  return d;
}

ParsedDetection ParsedDetection::Located(const NormalizedBBox& box,
                                         std::string excerpt) {
  ParsedDetection d;
  d.kind = Kind::kLocated;
  d.box = box;
  d.raw_excerpt = std::move(excerpt);
  return d;
}

ParsedDetection ParsedDetection::Failure(FailureKind kind, std::string excerpt) {
  ParsedDetection d;
  d.kind = Kind::kFailure;
  d.failure_kind = kind;
  d.raw_excerpt = std::move(excerpt);
  return d;
}

BinaryParse ParseBinaryResponse(std::string_view text) {
  BinaryParse out;
  out.raw = std::string(text);
  auto is_alpha = [](char c) {
    return std::isalpha(static_cast<unsigned char>(c)) != 0;
  };
  auto begin = std::find_if(text.begin(), text.end(), is_alpha);
  if (begin == text.end()) return out;
  auto end = std::find_if_not(begin, text.end(), is_alpha);
  std::string word = Lowercase(text.substr(begin - text.begin(), end - begin));
  if (word == "yes") out.verdict = true;
  else if (word == "no") out.verdict = false;
  return out;
}

ParsedDetection ParseBboxResponse(std::string_view text) {
  const std::string s(text);
  std::array<std::smatch, 2> pairs;
  std::size_t found = 0;
  for (auto it = std::sregex_iterator(s.begin(), s.end(), PairPattern());
       it != std::sregex_iterator() && found < 2; ++it) {
    pairs[found++] = *it;
  }
  if (found < 2) {
    return ParsedDetection::Failure(ClassifyFailure(text), Excerpt(text));
  }
  NormalizedBBox box;
  try {
    box = CanonicalizeBBox(ToDouble(pairs[0][1]), ToDouble(pairs[0][2]),
                           ToDouble(pairs[1][1]), ToDouble(pairs[1][2]));
  } catch (const Error&) {
    // Digits beyond double range.
    return ParsedDetection::Failure(ClassifyFailure(text), Excerpt(text));
  }
  auto first = static_cast<std::size_t>(pairs[0].position(0));
  auto last = static_cast<std::size_t>(pairs[1].position(0) + pairs[1].length(0));
  return ParsedDetection::Located(box, Excerpt(text.substr(first, last - first)));
}

const std::vector<std::string_view>& NegationPhrases() {
  static const std::vector<std::string_view> phrases = {
      "no pedestrian",      "no person",         "no people",
      "no human",           "no one",            "nobody",
      "not any pedestrian", "don't see",         "do not see",
      "cannot see",         "can't see",         "cannot identify",
      "can't identify",     "unable to identify", "cannot locate",
      "can't locate",       "unable to locate",  "cannot find",
      "can't find",         "unable to find",    "cannot detect",
      "can't detect",       "unable to detect",  "not visible",
      "no visible",         "not detected",      "there is no",
      "there are no",
  };
  return phrases;
}

FailureKind ClassifyFailure(std::string_view text) {
  const std::string lower = Lowercase(text);
  for (auto phrase : NegationPhrases()) {
    if (ContainsPhrase(lower, phrase)) return FailureKind::kNoPedestrianDetected;
  }
  const std::string s(text);
  if (std::regex_search(s, PairPattern()) ||
      std::regex_search(s, PairStartPattern()) ||
      std::regex_search(s, TrailingOpenPattern())) {
    return FailureKind::kPartialCoordinates;
  }
  return FailureKind::kAmbiguousDescription;
}

std::string FormatBboxTemplate(const NormalizedBBox& box) {
  auto num = [](double v) {
    std::array<char, 64> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v,
                                   std::chars_format::fixed);
    return std::string(buf.data(), ptr);
  };
  return "(" + num(box.x) + "," + num(box.y) + "), (" + num(box.x2) + "," +
         num(box.y2) + ")";
}

}  // namespace fovlink
