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

// Hand-rolled random generators and corpus loaders for property tests.

#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "fovlink/geometry.hpp"
#include "fovlink/perception.hpp"
#include "fovlink/v2v.hpp"
#include "json.hpp"
#include "test_support.hpp"

namespace fovlink::testing {

// Corners on the 1/1000 lattice, where the raster oracle is exact.
inline NormalizedBBox RandomGridBox(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> k(0, 1000);
  return CanonicalizeBBox(k(rng) / 1000.0, k(rng) / 1000.0, k(rng) / 1000.0,
                          k(rng) / 1000.0);
}

inline NormalizedBBox RandomProperGridBox(std::mt19937_64& rng) {
  for (;;) {
    auto b = RandomGridBox(rng);
    if (!b.degenerate) return b;
  }
}

// Arbitrary corners, some outside the unit square.
inline NormalizedBBox RandomRealBox(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-0.1, 1.1);
  return CanonicalizeBBox(u(rng), u(rng), u(rng), u(rng));
}

// Short UTF-8 string drawn from characters that stress JSON escaping.
inline std::string RandomText(std::mt19937_64& rng, int max_len) {
  static const std::vector<std::string> pieces = {
      "a", "b", "c", "X", "Z", "0", "9", " ", "_", "-", "/", "\"", "\\", "'",
      "\n", "\t", "{", "}", "[", "]", ":", ",", "\xC3\xA9", "\xE2\x80\x99"};
  std::uniform_int_distribution<int> len(0, max_len);
  std::uniform_int_distribution<std::size_t> pick(0, pieces.size() - 1);
  std::string s;
  for (int n = len(rng); n > 0; --n) s += pieces[pick(rng)];
  return s;
}

// A valid V2V message of a random type.
inline v2v::V2VMessage RandomMessage(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> coin(0, 1);
  std::uniform_int_distribution<int> three(0, 2);
  std::uniform_int_distribution<std::int64_t> ts(0, 4'000'000'000'000);
  std::uniform_real_distribution<double> u(0, 1);
  v2v::V2VMessage m;
  m.sender_id = RandomText(rng, 8);
  m.recipient_id = RandomText(rng, 8);
  m.correlation_id = RandomText(rng, 16);
  m.timestamp_ms = ts(rng);
  switch (three(rng)) {
    case 0: {
      const auto& prompts = RegisteredPrompts();
      std::uniform_int_distribution<std::size_t> p(0, prompts.size() - 1);
      m.payload = v2v::QueryPayload{prompts[p(rng)].id, RandomText(rng, 60)};
      break;
    }
    case 1: {
      v2v::ResponsePayload r;
      r.presence = coin(rng) == 1;
      if (coin(rng)) {
        auto b = three(rng) == 0 ? CanonicalizeBBox(0.5, 0.5, 0.5, 0.9)
                                 : CanonicalizeBBox(u(rng), u(rng), u(rng), u(rng));
        b.clamped = false;
        r.box = b;
      }
      if (coin(rng)) r.description = RandomText(rng, 40);
      if (coin(rng)) r.failure_kind = static_cast<FailureKind>(three(rng));
      m.payload = r;
      break;
    }
    default:
      m.payload = v2v::ErrorPayload{RandomText(rng, 12), RandomText(rng, 40)};
  }
  return m;
}

struct CorpusCase {
  std::string category;
  std::string reply;
  std::string expect;  // "located" or a failure kind name
  std::vector<double> box;
};

inline std::vector<CorpusCase> LoadParserCorpus() {
  std::ifstream in(FixturesDir() / "parser_corpus.jsonl");
  std::vector<CorpusCase> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto j = nlohmann::json::parse(line);
    CorpusCase c{j.at("category"), j.at("reply"), j.at("expect"), {}};
    if (j.contains("box")) c.box = j["box"].get<std::vector<double>>();
    out.push_back(std::move(c));
  }
  return out;
}

// Empty when the parser reproduces the label, otherwise a description.
inline std::string CheckCorpusCase(const CorpusCase& c) {
  auto d = ParseBboxResponse(c.reply);
  if (c.expect == "located") {
    if (d.kind != ParsedDetection::Kind::kLocated) return "not located";
    if (c.box.size() != 4) return "corpus box malformed";
    const double got[4] = {d.box->x, d.box->y, d.box->x2, d.box->y2};
    for (int i = 0; i < 4; ++i) {
      if (std::abs(got[i] - c.box[i]) > 1e-12) return "box differs";
    }
    return {};
  }
  if (d.kind != ParsedDetection::Kind::kFailure) return "expected a failure";
  if (FailureKindName(*d.failure_kind) != c.expect) {
    return "got " + std::string(FailureKindName(*d.failure_kind));
  }
  if (ClassifyFailure(c.reply) != *d.failure_kind) return "classifier disagrees";
  return {};
}

}  // namespace fovlink::testing
