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

#include "fovlink/gateway.hpp"

#include <openssl/evp.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"
#include "json.hpp"

namespace fovlink {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

ErrorCode ExhaustionCode(FaultKind kind) {
  switch (kind) {
    case FaultKind::kTimeout: return ErrorCode::kTimeout;
    case FaultKind::kRateLimit: return ErrorCode::kRateLimitedExhausted;
    case FaultKind::kTransport: return ErrorCode::kTransportError;
    case FaultKind::kMalformed: return ErrorCode::kMalformedBackendReply;
  }
  return ErrorCode::kTransportError;
}

std::optional<FaultKind> FaultFromName(std::string_view name) {
  if (name == "timeout") return FaultKind::kTimeout;
  if (name == "rate_limit") return FaultKind::kRateLimit;
  if (name == "transport") return FaultKind::kTransport;
  return std::nullopt;
}

MockEntry EntryFromJson(const json& v, const std::string& key) {
  auto bad = [&key](const std::string& why) {
    return Error(ErrorCode::kSchemaViolation,
                 "mock fixture entry '" + key + "': " + why);
  };
  if (!v.is_object() || v.size() != 1) {
    throw bad("expected {\"text\": ...} or {\"fault\": ...}");
  }
  MockEntry entry;
  if (v.contains("text")) {
    if (!v["text"].is_string()) throw bad("text must be a string");
    entry.text = v["text"].get<std::string>();
  } else if (v.contains("fault")) {
    auto fault = v["fault"].is_string()
                     ? FaultFromName(v["fault"].get<std::string>())
                     : std::nullopt;
    if (!fault) throw bad("fault must be timeout, rate_limit or transport");
    entry.fault = fault;
  } else {
    throw bad("expected {\"text\": ...} or {\"fault\": ...}");
  }
  return entry;
}

}  // namespace

void QueryParams::Validate() const {
  if (max_tokens < 1) {
    throw Error(ErrorCode::kPrecondition, "max_tokens must be >= 1");
  }
  if (!(timeout_s > 0)) {
    throw Error(ErrorCode::kPrecondition, "timeout must be positive");
  }
  if (!(temperature >= 0)) {
    throw Error(ErrorCode::kPrecondition, "temperature must be >= 0");
  }
  if (max_retries < 0) {
    throw Error(ErrorCode::kPrecondition, "max_retries must be >= 0");
  }
  if (!(backoff_base_s >= 0)) {
    throw Error(ErrorCode::kPrecondition, "backoff base must be >= 0");
  }
}

std::string QueryKey::ToString() const {
  return scene_id + "|" + prompt_id + "|" + std::to_string(run_idx);
}

std::string_view FaultKindName(FaultKind kind) {
  switch (kind) {
    case FaultKind::kTimeout: return "timeout";
    case FaultKind::kRateLimit: return "rate_limit";
    case FaultKind::kTransport: return "transport";
    case FaultKind::kMalformed: return "malformed";
  }
  return "?";
}

Gateway::Gateway(std::shared_ptr<const VisionBackend> backend, Sleeper sleeper)
    : backend_(std::move(backend)), sleeper_(std::move(sleeper)) {
  if (!sleeper_) {
    sleeper_ = [](double s) {
      std::this_thread::sleep_for(std::chrono::duration<double>(s));
    };
  }
}

RawResponse Gateway::SendVisionQuery(const VisionRequest& request,
                                     const QueryParams& params) const {
  if (request.image.empty()) {
    throw Error(ErrorCode::kPrecondition, "image payload is empty");
  }
  if (request.prompt.empty()) {
    throw Error(ErrorCode::kPrecondition, "prompt is empty");
  }
  params.Validate();

  using Clock = std::chrono::steady_clock;
  const bool simulated = backend_->simulated();
  auto elapsed = [simulated](Clock::time_point since) {
    return simulated
               ? 0.0
               : std::chrono::duration<double>(Clock::now() - since).count();
  };

  std::vector<AttemptRecord> transcript;
  const auto start = Clock::now();
  const int attempts = 1 + params.max_retries;
  for (int attempt = 0; attempt < attempts; ++attempt) {
    const auto attempt_start = Clock::now();
    AttemptOutcome outcome = backend_->Attempt(request, params, attempt);
    transcript.push_back(
        {attempt, outcome.fault, outcome.detail, elapsed(attempt_start)});

    if (outcome.text) {
      RawResponse out;
      out.text = std::move(*outcome.text);
      out.latency_s = elapsed(start);
      out.attempt_count = attempt + 1;
      out.backend_id = backend_->id();
      for (const auto& rec : transcript) {
        out.attempt_latencies_s.push_back(rec.latency_s);
      }
      return out;
    }

    const FaultKind fault = outcome.fault.value_or(FaultKind::kMalformed);
    const bool last = attempt + 1 == attempts;
    if (fault == FaultKind::kMalformed || !outcome.retryable || last) {
      throw GatewayError(ExhaustionCode(fault),
                         request.key.ToString() + " failed after " +
                             std::to_string(attempt + 1) + " attempt(s): " +
                             std::string(FaultKindName(fault)) +
                             (outcome.detail.empty() ? "" : " (" + outcome.detail + ")"),
                         std::move(transcript));
    }
    if (!simulated) sleeper_(params.backoff_base_s * std::pow(2.0, attempt));
  }
  // attempts >= 1, so the loop always returns or throws.
  throw Error(ErrorCode::kPrecondition, "no attempts configured");
}

// --- mock -------------------------------------------------------------------

MockScript MockScript::Parse(std::string_view json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kSchemaViolation,
                std::string("mock fixture is not valid JSON: ") + e.what());
  }
  if (!root.is_object()) {
    throw Error(ErrorCode::kSchemaViolation, "mock fixture must be a mapping");
  }
  MockScript script;
  for (const auto& [key, value] : root.items()) {
    std::vector<MockEntry> entries;
    if (value.is_array()) {
      if (value.empty()) {
        throw Error(ErrorCode::kSchemaViolation,
                    "mock fixture entry '" + key + "' is an empty list");
      }
      for (const auto& v : value) entries.push_back(EntryFromJson(v, key));
    } else {
      entries.push_back(EntryFromJson(value, key));
    }
    script.entries_[key] = std::move(entries);
  }
  return script;
}

MockScript MockScript::Load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::kMissingFile, "cannot open mock fixture " +
                                             path.string());
  }
  std::stringstream buf;
  buf << in.rdbuf();
  return Parse(buf.str());
}

void MockScript::Add(const QueryKey& key, std::vector<MockEntry> entries) {
  entries_[key.ToString()] = std::move(entries);
}

const MockEntry& MockScript::Lookup(const QueryKey& key, int attempt) const {
  auto it = entries_.find(key.ToString());
  if (it == entries_.end()) {
    throw Error(ErrorCode::kUnscriptedKey,
                "no scripted reply for " + key.ToString());
  }
  const auto& seq = it->second;
  auto idx = std::min<std::size_t>(static_cast<std::size_t>(attempt),
                                   seq.size() - 1);
  return seq[idx];
}

bool MockScript::Contains(const QueryKey& key) const {
  return entries_.count(key.ToString()) != 0;
}

std::string MockScript::Serialize() const {
  ordered_json root = ordered_json::object();
  for (const auto& [key, seq] : entries_) {
    auto one = [](const MockEntry& e) {
      ordered_json v;
      if (e.text) v["text"] = *e.text;
      else v["fault"] = std::string(FaultKindName(e.fault.value()));
      return v;
    };
    if (seq.size() == 1) {
      root[key] = one(seq.front());
    } else {
      auto arr = ordered_json::array();
      for (const auto& e : seq) arr.push_back(one(e));
      root[key] = std::move(arr);
    }
  }
  return root.dump(2) + "\n";
}

AttemptOutcome MockBackend::Attempt(const VisionRequest& request,
                                    const QueryParams&, int attempt) const {
  const MockEntry& entry = script_.Lookup(request.key, attempt);
  if (entry.text) return AttemptOutcome::Reply(*entry.text);
  return AttemptOutcome::Fault(*entry.fault, "scripted fault");
}

// --- wire format ------------------------------------------------------------

std::string Base64Encode(std::span<const std::uint8_t> bytes) {
  if (bytes.empty()) return {};
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                          bytes.data(), static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::string BuildChatRequest(std::span<const std::uint8_t> image,
                             std::string_view prompt,
                             const QueryParams& params) {
  ordered_json text_part;
  text_part["type"] = "text";
  text_part["text"] = std::string(prompt);
  ordered_json image_part;
  image_part["type"] = "image_url";
  image_part["image_url"]["url"] =
      "data:image/jpeg;base64," + Base64Encode(image);

  ordered_json message;
  message["role"] = "user";
  message["content"] = ordered_json::array({text_part, image_part});

  ordered_json body;
  body["model"] = params.model_name;
  body["messages"] = ordered_json::array({message});
  body["max_tokens"] = params.max_tokens;
  body["temperature"] = params.temperature;
  return body.dump();
}

std::string ParseChatReply(std::string_view body) {
  try {
    auto root = json::parse(body);
    const auto& content = root.at("choices").at(0).at("message").at("content");
    if (!content.is_string()) {
      throw Error(ErrorCode::kMalformedBackendReply,
                  "message content is not a string");
    }
    return content.get<std::string>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformedBackendReply, e.what());
  }
}

OpenAiBackend::OpenAiBackend(std::string base_url, std::string api_key)
    : base_url_(std::move(base_url)), api_key_(std::move(api_key)) {
  while (!base_url_.empty() && base_url_.back() == '/') base_url_.pop_back();
  auto scheme_end = base_url_.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorCode::kPrecondition,
                "base URL needs a scheme: '" + base_url_ + "'");
  }
  auto path_start = base_url_.find('/', scheme_end + 3);
  origin_ = base_url_.substr(0, path_start);
  path_prefix_ =
      path_start == std::string::npos ? "" : base_url_.substr(path_start);
}

std::shared_ptr<OpenAiBackend> OpenAiBackend::FromEnvironment() {
  const char* key = std::getenv("FOVLINK_API_KEY");
  if (key == nullptr || *key == '\0') {
    throw Error(ErrorCode::kPrecondition, "FOVLINK_API_KEY is not set");
  }
  const char* url = std::getenv("FOVLINK_BASE_URL");
  return std::make_shared<OpenAiBackend>(
      url != nullptr && *url != '\0' ? url : "https://api.openai.com/v1", key);
}

AttemptOutcome OpenAiBackend::Attempt(const VisionRequest& request,
                                      const QueryParams& params, int) const {
  httplib::Client client(origin_);
  auto seconds = static_cast<time_t>(params.timeout_s);
  auto micros = static_cast<time_t>((params.timeout_s - seconds) * 1e6);
  client.set_connection_timeout(seconds, micros);
  client.set_read_timeout(seconds, micros);
  client.set_write_timeout(seconds, micros);
  client.set_bearer_token_auth(api_key_);

  auto res = client.Post(path_prefix_ + "/chat/completions",
                         BuildChatRequest(request.image, request.prompt, params),
                         "application/json");
  if (!res) {
    auto err = res.error();
    auto detail = httplib::to_string(err);
    if (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read) {
      return AttemptOutcome::Fault(FaultKind::kTimeout, detail);
    }
    return AttemptOutcome::Fault(FaultKind::kTransport, detail);
  }
  const int status = res->status;
  const std::string status_detail = "HTTP " + std::to_string(status);
  if (status == 429) {
    return AttemptOutcome::Fault(FaultKind::kRateLimit, status_detail);
  }
  if (status == 408 || status >= 500) {
    return AttemptOutcome::Fault(FaultKind::kTransport, status_detail);
  }
  if (status != 200) {
    return AttemptOutcome::Fault(FaultKind::kTransport,
                                 status_detail + ": " + res->body.substr(0, 200),
                                 /*retryable=*/false);
  }
  try {
    return AttemptOutcome::Reply(ParseChatReply(res->body));
  } catch (const Error& e) {
    return AttemptOutcome::Fault(FaultKind::kMalformed, e.what(), false);
  }
}

}  // namespace fovlink
