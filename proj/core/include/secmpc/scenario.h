#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "secmpc/model.h"

namespace secmpc {

enum class PerturbationKind { kMoveFrame, kHoldAgent, kImpulseAgent, kAddObstacle, kRemoveObstacle };

const char* ToString(PerturbationKind kind);
PerturbationKind ParsePerturbationKind(std::string_view name);

struct PerturbationEvent {
  double time = 0.0;
  PerturbationKind kind = PerturbationKind::kMoveFrame;
  std::string frame;               // move_frame, add/remove_obstacle
  Vector position;                 // move_frame, add_obstacle
  std::optional<double> heading;   // move_frame
  bool on = true;                  // hold_agent
  Vector impulse;                  // impulse_agent (velocity change)
};

// Planar quasi-static pushing of one object frame by one actuated point.
struct PushModel {
  std::string pusher;        // actuated dof block
  std::string object;        // frame
  double contact_radius = 0.06;
  double heading_noise = 0.0;  // std of heading drift per sqrt(meter pushed)
  double slip_gain = 1.0;      // lateral drift per radian of heading error
  std::vector<int> lifted_phases;  // phases during which the pusher travels above the object
};

struct SimulationParams {
  std::optional<PushModel> push;
  double duration = 30.0;
  Vector initial_velocity;  // actuated; empty means rest
};

struct Scenario {
  SequenceSpec spec;
  SimulationParams sim;
  std::vector<PerturbationEvent> events;
};

// Scenario documents are JSON. See docs/scenario_format.md.
Scenario ParseScenario(const nlohmann::json& doc);
Scenario ParseScenarioText(std::string_view text);
nlohmann::json SerializeScenario(const Scenario& scenario);

// Only the controller-facing part of a document.
SequenceSpec ParseSequenceSpec(const nlohmann::json& doc);

const std::vector<std::string>& ShippedScenarioNames();
std::string ShippedScenarioText(std::string_view name);
// Accepts a shipped scenario name or a path to a JSON document.
Scenario LoadScenario(std::string_view name_or_path);

}  // namespace secmpc
