#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "secmpc/common.h"

namespace secmpc::bridge {

inline constexpr const char* kProtocolVersion = "secmpc/1";

enum class CommandKind { kMoveFrame, kHoldAgent, kImpulse, kPause, kResume, kReset };

const char* ToString(CommandKind kind);

struct Command {
  CommandKind kind = CommandKind::kPause;
  std::optional<std::int64_t> id;
  std::optional<double> client_time;
  std::string frame;               // move_frame
  Vector position;                 // move_frame
  std::optional<double> heading;   // move_frame
  bool on = true;                  // hold_agent
  Vector velocity;                 // impulse
  std::optional<std::uint64_t> seed;  // reset
};

// Malformed or unsupported message. `id` is the command id when it could be
// read.
class ProtocolError : public std::runtime_error {
 public:
  ProtocolError(const std::string& reason, std::optional<std::int64_t> id = std::nullopt)
      : std::runtime_error(reason), id_(id) {}
  const std::optional<std::int64_t>& id() const { return id_; }

 private:
  std::optional<std::int64_t> id_;
};

// Throws ProtocolError.
Command ParseCommand(std::string_view text);
nlohmann::json ToJson(const Command& command);

nlohmann::json ErrorMessage(const std::string& reason, const std::optional<std::int64_t>& id);

}  // namespace secmpc::bridge
