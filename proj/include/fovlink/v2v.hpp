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
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "fovlink/dataset.hpp"
#include "fovlink/experiments.hpp"
#include "fovlink/gateway.hpp"
#include "fovlink/geometry.hpp"
#include "fovlink/perception.hpp"

namespace fovlink::v2v {

inline constexpr std::string_view kProtocolVersion = "1";

enum class Role { kEgo, kRemote };

struct VehicleAgent {
  std::string vehicle_id;
  Role role = Role::kRemote;
  // The frame the vehicle's camera currently sees. Required for remotes.
  std::optional<std::string> current_frame;
};

// Link with a nominal bit rate; `overhead` is the share of that rate lost to
// framing and protocol headers.
struct LinkModel {
  double rate_bps = 1e6;
  double overhead = 0.1;
};

// Seconds to move `bytes` over the link: bytes*8 / (rate*(1-overhead)).
double TransmissionTime(double bytes, const LinkModel& link);

enum class MessageType { kQuery, kResponse, kError };

struct QueryPayload {
  PromptId prompt_id = PromptId::kBin;
  std::string prompt_text;

  bool operator==(const QueryPayload&) const = default;
};

struct ResponsePayload {
  bool presence = false;
  std::optional<NormalizedBBox> box;
  std::optional<std::string> description;
  std::optional<FailureKind> failure_kind;

  bool operator==(const ResponsePayload&) const = default;
};

struct ErrorPayload {
  std::string error_code;
  std::string detail;

  bool operator==(const ErrorPayload&) const = default;
};

using Payload = std::variant<QueryPayload, ResponsePayload, ErrorPayload>;

struct V2VMessage {
  std::string version{kProtocolVersion};
  std::string sender_id;
  std::string recipient_id;
  std::string correlation_id;
  std::int64_t timestamp_ms = 0;
  Payload payload;

  MessageType type() const {
    return static_cast<MessageType>(payload.index());
  }
  bool operator==(const V2VMessage&) const = default;
};

std::string_view MessageTypeName(MessageType type);

// Canonical UTF-8 text record: compact JSON with a fixed key order, so equal
// messages always encode to the same bytes.
std::string EncodeMessage(const V2VMessage& message);

// Throws Error(kUnsupportedVersion) or Error(kMalformedMessage).
V2VMessage DecodeMessage(std::string_view bytes);

struct TranscriptEntry {
  V2VMessage message;
  std::size_t encoded_bytes = 0;
};

struct TransportComparison {
  std::uint64_t stream_bytes = 0;
  double stream_time_s = 0;
  std::uint64_t dialogue_bytes = 0;
  double dialogue_time_s = 0;
  // dialogue_bytes / stream_bytes; empty when nothing would be streamed.
  std::optional<double> ratio;
};

struct DialogueTranscript {
  std::vector<TranscriptEntry> entries;
  std::uint64_t dialogue_bytes = 0;
  double dialogue_time_s = 0;
  std::uint64_t stream_bytes = 0;
  double stream_time_s = 0;
};

struct Scenario {
  VehicleAgent ego;
  std::vector<VehicleAgent> remotes;
  LinkModel link;
  PromptId prompt_id = PromptId::kBin;
  // Manifest named by the scenario file, resolved against its directory.
  std::optional<std::filesystem::path> manifest;
};

// Reads {"vehicles": [...], "link": {...}, "prompt_id": ..., "manifest"?}.
// Throws Error(kMissingFile) or Error(kSchemaViolation).
Scenario LoadScenario(const std::filesystem::path& path);
Scenario ParseScenario(std::string_view json_text);

struct DialogueOptions {
  QueryParams params;
  int parallelism = 1;
  std::int64_t start_time_ms = 0;
};

// One query/response round per remote, in vehicle-id order. Gateway faults
// become error messages; the exchange with other remotes continues.
// Throws Error(kUnknownSceneId) when a remote's frame is not in `scenes`.
DialogueTranscript RunDialogue(const VehicleAgent& ego,
                               const std::vector<VehicleAgent>& remotes,
                               const SceneSet& scenes, PromptId prompt_id,
                               const Gateway& gateway, const LinkModel& link,
                               const ImageProvider& images,
                               const DialogueOptions& options = {});

TransportComparison CompareTransport(const std::vector<std::uint64_t>& image_sizes,
                                     const DialogueTranscript& transcript,
                                     const LinkModel& link);

}  // namespace fovlink::v2v
