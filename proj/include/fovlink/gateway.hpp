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

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fovlink/error.hpp"

namespace fovlink {

// Decoding and transport knobs. The defaults lean towards deterministic
// replies; all of them can be overridden from the CLI.
struct QueryParams {
  std::string model_name = "gpt-4o";
  int max_tokens = 300;
  double temperature = 0.0;
  double timeout_s = 60.0;
  int max_retries = 3;
  double backoff_base_s = 1.0;

  // Throws Error(kPrecondition) when an invariant does not hold.
  void Validate() const;
};

// Identifies one query of an experiment; mock fixtures are keyed by it.
struct QueryKey {
  std::string scene_id;
  std::string prompt_id;
  int run_idx = 0;

  // "scene_id|prompt_id|run_idx"
  std::string ToString() const;
  auto operator<=>(const QueryKey&) const = default;
};

struct VisionRequest {
  QueryKey key;
  std::span<const std::uint8_t> image;
  std::string_view prompt;
};

enum class FaultKind { kTimeout, kRateLimit, kTransport, kMalformed };

std::string_view FaultKindName(FaultKind kind);

// Result of a single attempt against a backend.
struct AttemptOutcome {
  std::optional<std::string> text;
  std::optional<FaultKind> fault;
  bool retryable = true;
  std::string detail;

  static AttemptOutcome Reply(std::string text) {
    return {std::move(text), std::nullopt, false, ""};
  }
  static AttemptOutcome Fault(FaultKind kind, std::string detail,
                              bool retryable = true) {
    return {std::nullopt, kind, retryable, std::move(detail)};
  }
};

class VisionBackend {
 public:
  virtual ~VisionBackend() = default;

  virtual std::string id() const = 0;
  // `attempt` is 0-based within one gateway call. Must be safe to call from
  // several threads at once.
  virtual AttemptOutcome Attempt(const VisionRequest& request,
                                 const QueryParams& params,
                                 int attempt) const = 0;
  // Simulated backends report zero latency and are never slept on between
  // retries, which keeps their runs reproducible.
  virtual bool simulated() const { return false; }
};

struct AttemptRecord {
  int attempt = 0;
  std::optional<FaultKind> fault;
  std::string detail;
  double latency_s = 0;
};

struct RawResponse {
  std::string text;
  double latency_s = 0;
  int attempt_count = 0;
  std::string backend_id;
  std::vector<double> attempt_latencies_s;
};

// Raised when a query cannot produce a reply. Carries every attempt.
class GatewayError : public Error {
 public:
  GatewayError(ErrorCode code, const std::string& message,
               std::vector<AttemptRecord> transcript)
      : Error(code, message), transcript_(std::move(transcript)) {}

  const std::vector<AttemptRecord>& transcript() const noexcept {
    return transcript_;
  }

 private:
  std::vector<AttemptRecord> transcript_;
};

using Sleeper = std::function<void(double seconds)>;

// Retry loop around a backend. Shareable across threads; retry state lives
// on the stack of each call.
class Gateway {
 public:
  explicit Gateway(std::shared_ptr<const VisionBackend> backend,
                   Sleeper sleeper = nullptr);

  // Retries transport faults, timeouts and rate limits with exponential
  // backoff (backoff_base * 2^k). A well-formed reply is returned verbatim
  // on the first success.
  RawResponse SendVisionQuery(const VisionRequest& request,
                              const QueryParams& params) const;

  const VisionBackend& backend() const { return *backend_; }

 private:
  std::shared_ptr<const VisionBackend> backend_;
  Sleeper sleeper_;
};

// One scripted mock reply or fault.
struct MockEntry {
  std::optional<std::string> text;
  std::optional<FaultKind> fault;

  bool operator==(const MockEntry&) const = default;
};

// Fixture of scripted replies keyed by "scene_id|prompt_id|run_idx". Each
// key maps to a sequence consumed per attempt; the last entry repeats.
class MockScript {
 public:
  static MockScript Parse(std::string_view json_text);
  // Throws Error(kMissingFile) or Error(kSchemaViolation).
  static MockScript Load(const std::filesystem::path& path);

  void Add(const QueryKey& key, std::vector<MockEntry> entries);
  void Add(const QueryKey& key, MockEntry entry) {
    Add(key, std::vector<MockEntry>{std::move(entry)});
  }

  // Throws Error(kUnscriptedKey) when the key is absent.
  const MockEntry& Lookup(const QueryKey& key, int attempt = 0) const;
  bool Contains(const QueryKey& key) const;
  std::size_t size() const { return entries_.size(); }

  std::string Serialize() const;

 private:
  std::map<std::string, std::vector<MockEntry>> entries_;
};

inline const MockEntry& MockLookup(const MockScript& script, const QueryKey& key) {
  return script.Lookup(key);
}

class MockBackend : public VisionBackend {
 public:
  explicit MockBackend(MockScript script) : script_(std::move(script)) {}

  std::string id() const override { return "mock"; }
  AttemptOutcome Attempt(const VisionRequest& request, const QueryParams& params,
                         int attempt) const override;
  bool simulated() const override { return true; }

 private:
  MockScript script_;
};

// Body of a chat-completions request carrying the prompt and the image as a
// base64 data URI. Compact JSON, fixed key order.
std::string BuildChatRequest(std::span<const std::uint8_t> image,
                             std::string_view prompt, const QueryParams& params);

// Reads choices[0].message.content. Throws Error(kMalformedBackendReply).
std::string ParseChatReply(std::string_view body);

std::string Base64Encode(std::span<const std::uint8_t> bytes);

// HTTP backend for OpenAI-compatible chat-completions endpoints.
class OpenAiBackend : public VisionBackend {
 public:
  // `base_url` like "https://api.openai.com/v1".
  OpenAiBackend(std::string base_url, std::string api_key);

  // Reads FOVLINK_BASE_URL (default https://api.openai.com/v1) and
  // FOVLINK_API_KEY. Throws Error(kPrecondition) if the key is unset.
  static std::shared_ptr<OpenAiBackend> FromEnvironment();

  std::string id() const override { return "openai:" + base_url_; }
  AttemptOutcome Attempt(const VisionRequest& request, const QueryParams& params,
                         int attempt) const override;

 private:
  std::string base_url_;
  std::string origin_;
  std::string path_prefix_;
  std::string api_key_;
};

}  // namespace fovlink
