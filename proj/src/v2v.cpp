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

#include "fovlink/v2v.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <sstream>
#include <thread>

#include "fovlink/error.hpp"
#include "json.hpp"

namespace fovlink::v2v {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

constexpr std::size_t kMaxDescription = 280;

[[noreturn]] void Malformed(const std::string& field, const std::string& why) {
  throw Error(ErrorCode::kMalformedMessage, "field '" + field + "': " + why);
}

const json& Require(const json& obj, const char* field) {
  auto it = obj.find(field);
  if (it == obj.end()) Malformed(field, "missing");
  return *it;
}

std::string RequireString(const json& obj, const char* field) {
  const auto& v = Require(obj, field);
  if (!v.is_string()) Malformed(field, "expected a string");
  return v.get<std::string>();
}

void RejectUnknown(const json& obj, std::initializer_list<std::string_view> keys,
                   const std::string& where) {
  for (const auto& [key, value] : obj.items()) {
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
      Malformed(where + "." + key, "unknown field");
    }
  }
}

MessageType ParseType(const std::string& name) {
  for (auto t : {MessageType::kQuery, MessageType::kResponse, MessageType::kError}) {
    if (MessageTypeName(t) == name) return t;
  }
  Malformed("msg_type", "unknown message type '" + name + "'");
}

NormalizedBBox DecodeBox(const json& v) {
  if (!v.is_array() || v.size() != 4 ||
      !std::all_of(v.begin(), v.end(), [](const json& c) { return c.is_number(); })) {
    Malformed("payload.box", "expected [x, y, x2, y2]");
  }
  NormalizedBBox box{v[0].get<double>(), v[1].get<double>(), v[2].get<double>(),
                     v[3].get<double>()};
  auto unit = [](double c) { return c >= 0 && c <= 1; };
  if (!unit(box.x) || !unit(box.y) || !unit(box.x2) || !unit(box.y2) ||
      box.x > box.x2 || box.y > box.y2) {
    Malformed("payload.box", "not a canonical unit-square box");
  }
  box.degenerate = box.area() == 0;
  return box;
}

std::string Truncate(const std::string& text, std::size_t limit) {
  if (text.size() <= limit) return text;
  std::size_t cut = limit;
  while (cut > 0 && (static_cast<unsigned char>(text[cut]) & 0xC0) == 0x80) --cut;
  return text.substr(0, cut);
}

ResponsePayload ResponseFor(PromptId prompt_id, const std::string& reply) {
  ResponsePayload p;
  if (GetPrompt(prompt_id).expected_format == ExpectedFormat::kYesNo) {
    auto parsed = ParseBinaryResponse(reply);
    if (parsed.ok()) {
      p.presence = *parsed.verdict;
    } else {
      p.presence = true;
      p.description = Truncate(reply, kMaxDescription);
    }
    return p;
  }
  auto detection = ParseBboxResponse(reply);
  if (detection.box) {
    p.presence = true;
    p.box = NormalizedBBox{detection.box->x, detection.box->y, detection.box->x2,
                           detection.box->y2, false, detection.box->degenerate};
    return p;
  }
  p.failure_kind = detection.failure_kind;
  p.presence = *p.failure_kind != FailureKind::kNoPedestrianDetected;
  if (*p.failure_kind == FailureKind::kAmbiguousDescription) {
    p.description = Truncate(reply, kMaxDescription);
  }
  return p;
}

LinkModel ParseLink(const json& v) {
  auto bad = [](const std::string& why) {
    return Error(ErrorCode::kSchemaViolation, "scenario link: " + why);
  };
  if (!v.is_object()) throw bad("expected a mapping");
  for (const auto& [key, value] : v.items()) {
    if (key != "rate_bps" && key != "overhead") throw bad("unknown key " + key);
  }
  if (!v.contains("rate_bps") || !v["rate_bps"].is_number() ||
      !v.contains("overhead") || !v["overhead"].is_number()) {
    throw bad("rate_bps and overhead must be numbers");
  }
  LinkModel link{v["rate_bps"].get<double>(), v["overhead"].get<double>()};
  if (!(link.rate_bps > 0)) throw bad("rate_bps must be positive");
  if (!(link.overhead >= 0 && link.overhead < 1)) {
    throw bad("overhead must be in [0,1)");
  }
  return link;
}

}  // namespace

double TransmissionTime(double bytes, const LinkModel& link) {
  if (bytes <= 0) return 0.0;
  return bytes * 8.0 / (link.rate_bps * (1.0 - link.overhead));
}

std::string_view MessageTypeName(MessageType type) {
  switch (type) {
    case MessageType::kQuery: return "query";
    case MessageType::kResponse: return "response";
    case MessageType::kError: return "error";
  }
  return "?";
}

std::string EncodeMessage(const V2VMessage& message) {
  ordered_json obj;
  obj["version"] = message.version;
  obj["msg_type"] = std::string(MessageTypeName(message.type()));
  obj["sender_id"] = message.sender_id;
  obj["recipient_id"] = message.recipient_id;
  obj["correlation_id"] = message.correlation_id;
  obj["timestamp"] = message.timestamp_ms;
  ordered_json payload = ordered_json::object();
  if (const auto* q = std::get_if<QueryPayload>(&message.payload)) {
    payload["prompt_id"] = std::string(PromptIdName(q->prompt_id));
    payload["prompt"] = q->prompt_text;
  } else if (const auto* r = std::get_if<ResponsePayload>(&message.payload)) {
    payload["presence"] = r->presence;
    if (r->box) payload["box"] = {r->box->x, r->box->y, r->box->x2, r->box->y2};
    if (r->description) payload["description"] = *r->description;
    if (r->failure_kind) {
      payload["failure_kind"] = std::string(FailureKindName(*r->failure_kind));
    }
  } else {
    const auto& e = std::get<ErrorPayload>(message.payload);
    payload["error_code"] = e.error_code;
    payload["detail"] = e.detail;
  }
  obj["payload"] = std::move(payload);
  return obj.dump(-1, ' ', false, json::error_handler_t::replace);
}

V2VMessage DecodeMessage(std::string_view bytes) {
  json obj;
  try {
    obj = json::parse(bytes);
  } catch (const json::exception&) {
    Malformed("message", "not a valid record");
  }
  if (!obj.is_object()) Malformed("message", "not a mapping");

  V2VMessage m;
  m.version = RequireString(obj, "version");
  if (m.version != kProtocolVersion) {
    throw Error(ErrorCode::kUnsupportedVersion,
                "protocol version '" + m.version + "' is not supported");
  }
  RejectUnknown(obj,
                {"version", "msg_type", "sender_id", "recipient_id",
                 "correlation_id", "timestamp", "payload"},
                "message");
  const MessageType type = ParseType(RequireString(obj, "msg_type"));
  m.sender_id = RequireString(obj, "sender_id");
  m.recipient_id = RequireString(obj, "recipient_id");
  m.correlation_id = RequireString(obj, "correlation_id");
  const auto& ts = Require(obj, "timestamp");
  if (!ts.is_number_integer()) Malformed("timestamp", "expected an integer");
  m.timestamp_ms = ts.get<std::int64_t>();
  const auto& payload = Require(obj, "payload");
  if (!payload.is_object()) Malformed("payload", "expected a mapping");

  switch (type) {
    case MessageType::kQuery: {
      RejectUnknown(payload, {"prompt_id", "prompt"}, "payload");
      QueryPayload q;
      try {
        q.prompt_id = ParsePromptId(RequireString(payload, "prompt_id"));
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kUnknownPromptId) throw;
        Malformed("payload.prompt_id", "unknown prompt id");
      }
      q.prompt_text = RequireString(payload, "prompt");
      m.payload = std::move(q);
      break;
    }
    case MessageType::kResponse: {
      RejectUnknown(payload, {"presence", "box", "description", "failure_kind"},
                    "payload");
      ResponsePayload r;
      const auto& presence = Require(payload, "presence");
      if (!presence.is_boolean()) Malformed("payload.presence", "expected a boolean");
      r.presence = presence.get<bool>();
      if (payload.contains("box")) r.box = DecodeBox(payload["box"]);
      if (payload.contains("description")) {
        r.description = RequireString(payload, "description");
      }
      if (payload.contains("failure_kind")) {
        r.failure_kind = ParseFailureKind(RequireString(payload, "failure_kind"));
        if (!r.failure_kind) Malformed("payload.failure_kind", "unknown kind");
      }
      m.payload = std::move(r);
      break;
    }
    case MessageType::kError: {
      RejectUnknown(payload, {"error_code", "detail"}, "payload");
      m.payload = ErrorPayload{RequireString(payload, "error_code"),
                               RequireString(payload, "detail")};
      break;
    }
  }
  return m;
}

Scenario ParseScenario(std::string_view json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kSchemaViolation,
                std::string("scenario is not valid JSON: ") + e.what());
  }
  auto bad = [](const std::string& why) {
    return Error(ErrorCode::kSchemaViolation, "scenario: " + why);
  };
  if (!root.is_object()) throw bad("expected a mapping");
  for (const auto& [key, value] : root.items()) {
    if (key != "vehicles" && key != "link" && key != "prompt_id" &&
        key != "manifest") {
      throw bad("unknown key " + key);
    }
  }
  if (!root.contains("vehicles") || !root["vehicles"].is_array()) {
    throw bad("vehicles must be a list");
  }
  if (!root.contains("link")) throw bad("missing link");
  if (!root.contains("prompt_id") || !root["prompt_id"].is_string()) {
    throw bad("prompt_id must be a string");
  }

  Scenario s;
  s.link = ParseLink(root["link"]);
  s.prompt_id = ParsePromptId(root["prompt_id"].get<std::string>());
  if (root.contains("manifest")) {
    if (!root["manifest"].is_string()) throw bad("manifest must be a string");
    s.manifest = root["manifest"].get<std::string>();
  }
  int egos = 0;
  for (const auto& v : root["vehicles"]) {
    if (!v.is_object() || !v.contains("vehicle_id") || !v["vehicle_id"].is_string() ||
        !v.contains("role") || !v["role"].is_string()) {
      throw bad("each vehicle needs vehicle_id and role");
    }
    VehicleAgent agent;
    agent.vehicle_id = v["vehicle_id"].get<std::string>();
    const auto role = v["role"].get<std::string>();
    if (role == "ego") agent.role = Role::kEgo;
    else if (role == "remote") agent.role = Role::kRemote;
    else throw bad("role must be ego or remote");
    if (v.contains("scene_id") && !v["scene_id"].is_null()) {
      if (!v["scene_id"].is_string()) throw bad("scene_id must be a string");
      agent.current_frame = v["scene_id"].get<std::string>();
    }
    if (agent.role == Role::kEgo) {
      ++egos;
      s.ego = std::move(agent);
    } else {
      if (!agent.current_frame) {
        throw bad("remote '" + agent.vehicle_id + "' has no scene_id");
      }
      s.remotes.push_back(std::move(agent));
    }
  }
  if (egos != 1) throw bad("exactly one ego vehicle is required");
  return s;
}

Scenario LoadScenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::kMissingFile, "cannot open scenario " + path.string());
  }
  std::stringstream buf;
  buf << in.rdbuf();
  Scenario s = ParseScenario(buf.str());
  if (s.manifest && s.manifest->is_relative()) {
    s.manifest = path.parent_path() / *s.manifest;
  }
  return s;
}

DialogueTranscript RunDialogue(const VehicleAgent& ego,
                               const std::vector<VehicleAgent>& remotes,
                               const SceneSet& scenes, PromptId prompt_id,
                               const Gateway& gateway, const LinkModel& link,
                               const ImageProvider& images,
                               const DialogueOptions& options) {
  if (!(link.rate_bps > 0) || !(link.overhead >= 0 && link.overhead < 1)) {
    throw Error(ErrorCode::kPrecondition, "invalid link model");
  }
  std::vector<const VehicleAgent*> order;
  for (const auto& r : remotes) order.push_back(&r);
  std::sort(order.begin(), order.end(),
            [](auto* a, auto* b) { return a->vehicle_id < b->vehicle_id; });

  std::vector<const SceneRecord*> frames;
  std::vector<ImageBytes> pictures;
  for (const auto* remote : order) {
    if (!remote->current_frame) {
      throw Error(ErrorCode::kPrecondition,
                  "remote '" + remote->vehicle_id + "' has no current frame");
    }
    const auto* scene = scenes.Find(*remote->current_frame);
    if (scene == nullptr) {
      throw Error(ErrorCode::kUnknownSceneId,
                  "remote '" + remote->vehicle_id + "' sees unknown scene '" +
                      *remote->current_frame + "'");
    }
    frames.push_back(scene);
    pictures.push_back(images(*scene));
  }

  const auto& prompt = GetPrompt(prompt_id);
  const std::string prompt_name(PromptIdName(prompt_id));
  struct Reply {
    std::optional<std::string> text;
    std::string error_code;
    std::string detail;
  };
  std::vector<Reply> replies(order.size());
  std::vector<std::exception_ptr> errors(order.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < order.size(); i = next++) {
      VisionRequest request{{frames[i]->scene_id, prompt_name, 0}, pictures[i],
                            prompt.text};
      try {
        replies[i].text = gateway.SendVisionQuery(request, options.params).text;
      } catch (const GatewayError& e) {
        replies[i].error_code = std::string(ErrorCodeName(e.code()));
        replies[i].detail = e.what();
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const auto threads = static_cast<std::size_t>(std::max(1, options.parallelism));
  if (threads == 1 || order.size() <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < std::min(threads, order.size()); ++t) {
      pool.emplace_back(worker);
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  DialogueTranscript transcript;
  double clock_ms = static_cast<double>(options.start_time_ms);
  auto append = [&](V2VMessage m) {
    m.timestamp_ms = static_cast<std::int64_t>(std::llround(clock_ms));
    auto size = EncodeMessage(m).size();
    clock_ms += TransmissionTime(static_cast<double>(size), link) * 1000.0;
    transcript.dialogue_bytes += size;
    transcript.entries.push_back({std::move(m), size});
  };
  std::vector<std::uint64_t> image_sizes;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const auto& remote = order[i]->vehicle_id;
    const std::string cid = ego.vehicle_id + "/" + remote + "/" + std::to_string(i + 1);

    V2VMessage query;
    query.sender_id = ego.vehicle_id;
    query.recipient_id = remote;
    query.correlation_id = cid;
    query.payload = QueryPayload{prompt_id, std::string(prompt.text)};
    append(std::move(query));

    V2VMessage answer;
    answer.sender_id = remote;
    answer.recipient_id = ego.vehicle_id;
    answer.correlation_id = cid;
    if (replies[i].text) {
      answer.payload = ResponseFor(prompt_id, *replies[i].text);
    } else {
      answer.payload = ErrorPayload{replies[i].error_code, replies[i].detail};
    }
    append(std::move(answer));
    image_sizes.push_back(pictures[i].size());
  }

  auto cmp = CompareTransport(image_sizes, transcript, link);
  transcript.dialogue_time_s = cmp.dialogue_time_s;
  transcript.stream_bytes = cmp.stream_bytes;
  transcript.stream_time_s = cmp.stream_time_s;
  return transcript;
}

TransportComparison CompareTransport(const std::vector<std::uint64_t>& image_sizes,
                                     const DialogueTranscript& transcript,
                                     const LinkModel& link) {
  TransportComparison out;
  for (auto s : image_sizes) out.stream_bytes += s;
  for (const auto& e : transcript.entries) out.dialogue_bytes += e.encoded_bytes;
  out.stream_time_s = TransmissionTime(static_cast<double>(out.stream_bytes), link);
  out.dialogue_time_s =
      TransmissionTime(static_cast<double>(out.dialogue_bytes), link);
  if (out.stream_bytes > 0) {
    out.ratio = static_cast<double>(out.dialogue_bytes) /
                static_cast<double>(out.stream_bytes);
  }
  return out;
}

}  // namespace fovlink::v2v
