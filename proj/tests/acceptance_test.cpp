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

// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on failure.

#include <sys/wait.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fovlink/dataset.hpp"
#include "fovlink/error.hpp"
#include "fovlink/experiments.hpp"
#include "fovlink/geometry.hpp"
#include "fovlink/perception.hpp"
#include "fovlink/stats.hpp"
#include "fovlink/v2v.hpp"
#include "generators.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

namespace fs = std::filesystem;
using namespace fovlink;

namespace {

// Pinned tolerances.
constexpr double kTableTol = 0.01;          // percentage points
constexpr double kTransmitTol = 0.05;       // seconds
constexpr double kRasterTol = 2e-3;         // unit-square area / ratio
constexpr double kShareTol = 0.01;          // percentage points
constexpr double kDialogueBudget = 0.05;    // fraction of one image
constexpr double kImageBytes = 218.6 * 1024;

struct Outcome {
  bool pass = true;
  std::string detail;

  void Fail(const std::string& why) {
    if (pass) detail = why;
    pass = false;
  }
};

std::string Fmt(double v, int precision = 4) {
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(precision);
  out << v;
  return out.str();
}

// Published detection figures, in percent.
struct PublishedColumn {
  const char* label;
  int tp, fn, fp, tn;
  std::vector<std::pair<std::string, double>> values;
};

const std::vector<PublishedColumn>& PublishedTable() {
  static const std::vector<PublishedColumn> kTable = {
      {"gpt-4v", 120, 6, 5, 129,
       {{"recall", 95.24}, {"specificity", 96.27}, {"precision", 96.00},
        {"npv", 95.56}, {"fpr", 3.73}, {"fdr", 4.00}, {"fnr", 4.76},
        {"accuracy", 95.77}, {"f1", 95.62}, {"mcc", 91.53}}},
      {"gpt-4o", 125, 1, 11, 127,
       {{"recall", 99.21}, {"specificity", 92.03}, {"precision", 91.91},
        {"npv", 99.22}, {"fpr", 7.97}, {"fdr", 8.09}, {"fnr", 0.79},
        {"accuracy", 95.45}, {"f1", 95.42}, {"mcc", 91.18}}},
  };
  return kTable;
}

Outcome DetectionTable() {
  Outcome o;
  for (const auto& col : PublishedTable()) {
    auto stats = DeriveDetectionStats({col.tp, col.fn, col.fp, col.tn});
    auto named = stats.Named();
    for (const auto& [metric, published] : col.values) {
      bool found = false;
      for (const auto& [name, value] : named) {
        if (name != metric) continue;
        found = true;
        if (!value) {
          o.Fail(std::string(col.label) + " " + metric + " undefined");
        } else if (std::abs(*value * 100 - published) > kTableTol) {
          o.Fail(std::string(col.label) + " " + metric + " = " + Fmt(*value * 100));
        }
      }
      if (!found) o.Fail("missing " + metric);
    }
  }
  if (o.pass) o.detail = "20 statistics within " + Fmt(kTableTol, 2) + " pp";
  return o;
}

Outcome TransmissionTimeCheck() {
  Outcome o;
  const double t = v2v::TransmissionTime(kImageBytes, {1e6, 0.1});
  if (std::abs(t - 1.98) > kTransmitTol) o.Fail("t = " + Fmt(t));
  if (o.pass) o.detail = "t = " + Fmt(t) + " s";
  return o;
}

Outcome GeometryOracle() {
  Outcome o;
  std::mt19937_64 rng(2024);
  double worst = 0;
  for (int i = 0; i < 1000; ++i) {
    auto gt = testing::RandomProperGridBox(rng);
    auto gen = testing::RandomGridBox(rng);
    auto m = testing::RasterizeMeasures({gt.x, gt.y, gt.x2, gt.y2},
                                        {gen.x, gen.y, gen.x2, gen.y2});
    const double inter = IntersectionArea(gt, gen);
    const double recall = OverlapRecall(gt, gen);
    const double iou = gen.degenerate ? 0.0 : Iou(gt, gen);
    worst = std::max({worst, std::abs(inter - m.intersection), std::abs(recall - m.recall),
                      std::abs(iou - m.iou)});
    if (iou > recall) o.Fail("IoU > recall on pair " + std::to_string(i));
  }
  for (int i = 0; i < 1000; ++i) {
    auto a = testing::RandomRealBox(rng);
    auto b = testing::RandomRealBox(rng);
    auto cells = testing::CountCellsBoth({a.x, a.y, a.x2, a.y2}, {b.x, b.y, b.x2, b.y2});
    worst = std::max(worst, std::abs(IntersectionArea(a, b) - testing::CellsToArea(cells)));
  }
  if (worst > kRasterTol) o.Fail("max deviation " + Fmt(worst, 6));
  if (o.pass) o.detail = "2000 pairs, max deviation " + Fmt(worst, 6);
  return o;
}

Outcome ParserCorpus() {
  Outcome o;
  auto corpus = testing::LoadParserCorpus();
  if (corpus.size() < 50) o.Fail("corpus has " + std::to_string(corpus.size()) + " entries");
  std::size_t agree = 0;
  for (const auto& c : corpus) {
    auto why = testing::CheckCorpusCase(c);
    if (why.empty()) {
      ++agree;
    } else {
      o.Fail("\"" + c.reply.substr(0, 40) + "\": " + why);
    }
  }
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(0, 1);
  for (int i = 0; i < 1000; ++i) {
    auto box = CanonicalizeBBox(u(rng), u(rng), u(rng), u(rng));
    auto d = ParseBboxResponse(FormatBboxTemplate(box));
    if (d.kind != ParsedDetection::Kind::kLocated || !(*d.box == box)) {
      o.Fail("round trip failed for " + FormatBboxTemplate(box));
      break;
    }
  }
  if (o.pass) {
    o.detail = std::to_string(agree) + "/" + std::to_string(corpus.size()) +
               " labels, 1000 round trips";
  }
  return o;
}

int RunCli(const std::string& args) {
  const std::string cmd = std::string("\"") + FOVLINK_CLI_PATH + "\" " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::vector<fs::path> FilesUnder(const fs::path& root) {
  std::vector<fs::path> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) out.push_back(fs::relative(e.path(), root));
  }
  std::sort(out.begin(), out.end());
  return out;
}

Outcome EndToEndDeterminism() {
  Outcome o;
  const fs::path e2e = testing::FixturesDir() / "e2e";
  const std::string manifest = "--manifest \"" + (e2e / "manifest.jsonl").string() + "\"";
  const std::string mock =
      "--backend mock --fixture \"" + (e2e / "mock.json").string() + "\" --runs 3";
  testing::TempDir tmp;
  auto run_all = [&](int parallelism, const fs::path& out) {
    const std::string global = "--parallelism " + std::to_string(parallelism) + " --backoff 0 ";
    const std::vector<std::pair<std::string, std::string>> steps = {
        {"exp1", "exp1 " + manifest + " --prompt BIN " + mock},
        {"exp2", "exp2 " + manifest + " --prompt P1 " + mock},
        {"exp3", "exp3 " + manifest + " --prompts P1,P2,P3 " + mock},
    };
    for (const auto& [name, args] : steps) {
      const auto dir = out / name;
      int rc = RunCli(global + args + " --out \"" + dir.string() + "\"");
      if (rc != 0) o.Fail(name + " exited " + std::to_string(rc));
      rc = RunCli("report --in \"" + dir.string() + "\" --out \"" + (out / (name + "_report")).string() +
                  "\" --targets csv,records,svg");
      if (rc != 0) o.Fail(name + " report exited " + std::to_string(rc));
    }
  };
  run_all(1, tmp.path() / "p1");
  run_all(8, tmp.path() / "p8");
  if (!o.pass) return o;
  auto serial = FilesUnder(tmp.path() / "p1");
  auto parallel = FilesUnder(tmp.path() / "p8");
  if (serial != parallel) {
    o.Fail("output file sets differ");
    return o;
  }
  if (serial.empty()) o.Fail("no output files");
  for (const auto& rel : serial) {
    if (testing::ReadFile(tmp.path() / "p1" / rel) != testing::ReadFile(tmp.path() / "p8" / rel)) {
      o.Fail(rel.string() + " differs");
    }
  }
  if (o.pass) o.detail = std::to_string(serial.size()) + " files byte-identical at parallelism 1 and 8";
  return o;
}

Outcome ConfusionFromFiles() {
  Outcome o;
  auto f = testing::MakeBinaryFixture(126, 138, {3, 17, 42, 77, 101, 125},
                                      {0, 12, 55, 90, 137});
  testing::TempDir tmp;
  testing::WriteManifest(tmp.path() / "manifest.jsonl", f.scenes);
  testing::WriteFile(tmp.path() / "mock.json", f.script.Serialize());
  auto scenes = LoadManifest(tmp.path() / "manifest.jsonl");
  auto script = MockScript::Load(tmp.path() / "mock.json");
  ExperimentConfig config;
  config.runs_per_prompt = 1;
  auto r = RunBinaryExperiment(scenes, PromptId::kBin, testing::MockGateway(script), config,
                               testing::SyntheticImages());
  const auto& m = r.matrix;
  const double recall = r.stats.recall.value_or(-1) * 100;
  const std::string got = "(" + std::to_string(m.tp) + "," + std::to_string(m.fn) + "," +
                          std::to_string(m.fp) + "," + std::to_string(m.tn) + "), recall " +
                          Fmt(recall, 2) + "%";
  if (m.tp != 120 || m.fn != 6 || m.fp != 5 || m.tn != 129) {
    o.Fail("expected (120,6,5,129), got " + got);
  }
  if (std::abs(recall - 95.24) > kTableTol) o.Fail("recall " + Fmt(recall));
  if (o.pass) o.detail = got;
  return o;
}

Outcome V2VProtocol() {
  Outcome o;
  std::mt19937_64 rng(99);
  for (int i = 0; i < 1000 && o.pass; ++i) {
    auto m = testing::RandomMessage(rng);
    auto bytes = v2v::EncodeMessage(m);
    if (!(v2v::DecodeMessage(bytes) == m)) o.Fail("round trip failed: " + bytes);
  }
  const fs::path e2e = testing::FixturesDir() / "e2e";
  auto scenario = v2v::LoadScenario(e2e / "scenario.json");
  auto loaded = LoadManifestWithBase(*scenario.manifest);
  auto script = MockScript::Load(e2e / "mock.json");
  auto images = FileImageProvider(loaded.base_dir);
  auto t = v2v::RunDialogue(scenario.ego, scenario.remotes, loaded.scenes, scenario.prompt_id,
                            testing::MockGateway(script), scenario.link, images);
  std::uint64_t hand = 0;
  for (const auto& e : t.entries) hand += v2v::EncodeMessage(e.message).size();
  std::vector<std::uint64_t> sizes;
  std::uint64_t image_total = 0;
  for (const auto& remote : scenario.remotes) {
    const auto* scene = loaded.scenes.Find(*remote.current_frame);
    const auto size = fs::file_size(loaded.base_dir / scene->image_path);
    sizes.push_back(size);
    image_total += size;
  }
  if (t.entries.size() != 2 * scenario.remotes.size()) o.Fail("unexpected transcript length");
  if (t.dialogue_bytes != hand) o.Fail("dialogue bytes differ from hand sum");
  if (static_cast<double>(t.dialogue_bytes) >= kDialogueBudget * kImageBytes) {
    o.Fail("dialogue uses " + std::to_string(t.dialogue_bytes) + " bytes");
  }
  auto cmp = v2v::CompareTransport(sizes, t, scenario.link);
  const double expected = static_cast<double>(hand) / static_cast<double>(image_total);
  if (!cmp.ratio || *cmp.ratio != expected) o.Fail("ratio differs from hand computation");
  if (o.pass) {
    o.detail = "1000 round trips, dialogue " + std::to_string(hand) + " B, ratio " +
               Fmt(expected);
  }
  return o;
}

Outcome LowlightShare() {
  Outcome o;
  auto f = testing::MakeLowlightFixture();
  const double share = LowlightFailureShare(f.failures, f.scenes) * 100;
  if (std::abs(share - 52.94) > kShareTol) o.Fail("share " + Fmt(share));
  if (o.pass) o.detail = "share " + Fmt(share, 2) + "%";
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"detection statistics reproduce the published table", DetectionTable},
      {"image transmission time at 1 Mbit/s", TransmissionTimeCheck},
      {"overlap measures agree with the raster oracle", GeometryOracle},
      {"reply parser agrees with the labelled corpus", ParserCorpus},
      {"end-to-end outputs independent of parallelism", EndToEndDeterminism},
      {"confusion matrix from manifest and fixture files", ConfusionFromFiles},
      {"V2V codec and dialogue byte accounting", V2VProtocol},
      {"low-light share of failed scenes", LowlightShare},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.Fail(std::string("exception: ") + e.what());
    }
    std::cout << (o.pass ? "[PASS]" : "[FAIL]") << " criterion " << i + 1 << ": "
              << criteria[i].first << " (" << o.detail << ")" << std::endl;
    if (!o.pass) ++failed;
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed"
            << std::endl;
  return failed == 0 ? 0 : 1;
}
