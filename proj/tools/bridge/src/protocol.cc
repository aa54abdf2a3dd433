#include "secmpc/bridge/protocol.h"

namespace secmpc::bridge {
namespace {

using nlohmann::json;

Vector ReadVector(const json& j, const char* field, const std::optional<std::int64_t>& id) {
  if (!j.contains(field) || !j.at(field).is_array() || j.at(field).empty()) {
    throw ProtocolError(std::string("'") + field + "' must be a non-empty number array", id);
  }
  const json& a = j.at(field);
  Vector v(a.size());
  for (size_t i = 0; i < a.size(); ++i) {
    if (!a[i].is_number()) throw ProtocolError(std::string("'") + field + "' must be a non-empty number array", id);
    v(static_cast<Eigen::Index>(i)) = a[i].get<double>();
  }
  if (!v.allFinite()) throw ProtocolError(std::string("'") + field + "' must be finite", id);
  return v;
}

json FromVector(const Vector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

}  // namespace

const char* ToString(CommandKind kind) {
  switch (kind) {
    case CommandKind::kMoveFrame:
      return "move_frame";
    case CommandKind::kHoldAgent:
      return "hold_agent";
    case CommandKind::kImpulse:
      return "impulse";
    case CommandKind::kPause:
      return "pause";
    case CommandKind::kResume:
      return "resume";
    case CommandKind::kReset:
      return "reset";
  }
  return "?";
}

Command ParseCommand(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("malformed message: ") + e.what());
  }
  if (!j.is_object()) throw ProtocolError("message must be an object");
  Command c;
  if (j.contains("id")) {
    if (!j.at("id").is_number_integer()) throw ProtocolError("'id' must be an integer");
    c.id = j.at("id").get<std::int64_t>();
  }
  if (!j.contains("v") || !j.at("v").is_string() || j.at("v").get<std::string>() != kProtocolVersion) {
    throw ProtocolError(std::string("'v' must be \"") + kProtocolVersion + "\"", c.id);
  }
  if (!j.contains("type") || !j.at("type").is_string()) throw ProtocolError("missing 'type'", c.id);
  if (j.contains("client_time")) {
    if (!j.at("client_time").is_number()) throw ProtocolError("'client_time' must be a number", c.id);
    c.client_time = j.at("client_time").get<double>();
  }
  const std::string type = j.at("type").get<std::string>();
  if (type == "move_frame") {
    c.kind = CommandKind::kMoveFrame;
    if (!j.contains("frame") || !j.at("frame").is_string()) throw ProtocolError("move_frame needs 'frame'", c.id);
    c.frame = j.at("frame").get<std::string>();
    c.position = ReadVector(j, "position", c.id);
    if (j.contains("heading")) {
      if (!j.at("heading").is_number()) throw ProtocolError("'heading' must be a number", c.id);
      c.heading = j.at("heading").get<double>();
    }
  } else if (type == "hold_agent") {
    c.kind = CommandKind::kHoldAgent;
    if (!j.contains("on") || !j.at("on").is_boolean()) throw ProtocolError("hold_agent needs boolean 'on'", c.id);
    c.on = j.at("on").get<bool>();
  } else if (type == "impulse") {
    c.kind = CommandKind::kImpulse;
    c.velocity = ReadVector(j, "velocity", c.id);
  } else if (type == "pause") {
    c.kind = CommandKind::kPause;
  } else if (type == "resume") {
    c.kind = CommandKind::kResume;
  } else if (type == "reset") {
    c.kind = CommandKind::kReset;
    if (j.contains("seed")) {
      if (!j.at("seed").is_number_unsigned()) throw ProtocolError("'seed' must be an unsigned integer", c.id);
      c.seed = j.at("seed").get<std::uint64_t>();
    }
  } else {
    throw ProtocolError("unknown message type '" + type + "'", c.id);
  }
  return c;
}

json ToJson(const Command& c) {
  json j = {{"v", kProtocolVersion}, {"type", ToString(c.kind)}};
  if (c.id) j["id"] = *c.id;
  if (c.client_time) j["client_time"] = *c.client_time;
  switch (c.kind) {
    case CommandKind::kMoveFrame:
      j["frame"] = c.frame;
      j["position"] = FromVector(c.position);
      if (c.heading) j["heading"] = *c.heading;
      break;
    case CommandKind::kHoldAgent:
      j["on"] = c.on;
      break;
    case CommandKind::kImpulse:
      j["velocity"] = FromVector(c.velocity);
      break;
    case CommandKind::kReset:
      if (c.seed) j["seed"] = *c.seed;
      break;
    default:
      break;
  }
  return j;
}

json ErrorMessage(const std::string& reason, const std::optional<std::int64_t>& id) {
  json j = {{"v", kProtocolVersion}, {"type", "error"}, {"reason", reason}};
  if (id) j["id"] = *id;
  return j;
}

}  // namespace secmpc::bridge
