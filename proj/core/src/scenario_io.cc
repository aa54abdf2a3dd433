#include <algorithm>
#include <fstream>
#include <sstream>

#include "secmpc/scenario.h"
#include "shipped_scenarios.h"

namespace secmpc {
namespace {

using nlohmann::json;

[[noreturn]] void Fail(const std::string& where, const std::string& what) {
  throw SpecError(where + ": " + what);
}

const json& Require(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) Fail(where, std::string("missing field '") + key + "'");
  return obj.at(key);
}

double GetNumber(const json& obj, const char* key, const std::string& where) {
  const json& v = Require(obj, key, where);
  if (!v.is_number()) Fail(where, std::string("field '") + key + "' must be a number");
  return v.get<double>();
}

double GetNumberOr(const json& obj, const char* key, double fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  return GetNumber(obj, key, where);
}

std::string GetString(const json& obj, const char* key, const std::string& where) {
  const json& v = Require(obj, key, where);
  if (!v.is_string()) Fail(where, std::string("field '") + key + "' must be a string");
  return v.get<std::string>();
}

Vector ToVector(const json& v, const std::string& where) {
  if (!v.is_array()) Fail(where, "expected a number array");
  Vector out(v.size());
  for (size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number()) Fail(where, "expected a number array");
    out(static_cast<Eigen::Index>(i)) = v[i].get<double>();
  }
  return out;
}

json FromVector(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

DofKind ParseDofKind(const std::string& s, const std::string& where) {
  if (s == "actuated") return DofKind::kActuated;
  if (s == "object") return DofKind::kObject;
  if (s == "shared") return DofKind::kShared;
  Fail(where, "unknown dof kind '" + s + "' (expected actuated, object or shared)");
}

class FeatureParser {
 public:
  FeatureParser(const DofLayout& layout, const Scene& scene, int space_dim)
      : layout_(layout), scene_(scene), space_dim_(space_dim) {}

  ConstraintFeature Parse(const json& doc, const std::string& where) const {
    const std::string kind = GetString(doc, "kind", where);
    const std::string name = doc.value("name", kind);
    const std::string at = where + " feature '" + name + "'";
    std::optional<ConstraintType> type;
    if (doc.contains("type")) {
      const std::string t = GetString(doc, "type", at);
      if (t == "eq") {
        type = ConstraintType::kEquality;
      } else if (t == "ineq") {
        type = ConstraintType::kInequality;
      } else {
        Fail(at, "type must be 'eq' or 'ineq'");
      }
    }
    return ConstraintFeature(name, ParseParams(kind, doc, at), space_dim_, type);
  }

 private:
  FeatureParams ParseParams(const std::string& kind, const json& doc, const std::string& at) const {
    if (kind == "position") {
      PositionParams p;
      p.a = Point(Require(doc, "a", at), at);
      if (doc.contains("b")) p.b = Point(doc.at("b"), at);
      if (doc.contains("offset")) {
        p.offset = ToVector(doc.at("offset"), at);
        if (p.offset.size() != space_dim_) Fail(at, "offset has wrong dimension");
      }
      return p;
    }
    if (kind == "distance") {
      DistanceParams p;
      p.a = Point(Require(doc, "a", at), at);
      p.b = Point(Require(doc, "b", at), at);
      p.distance = GetNumber(doc, "distance", at);
      const std::string mode = doc.value("mode", std::string("equal"));
      if (mode == "equal") {
        p.mode = DistanceMode::kEqual;
      } else if (mode == "at_least") {
        p.mode = DistanceMode::kAtLeast;
      } else if (mode == "at_most") {
        p.mode = DistanceMode::kAtMost;
      } else {
        Fail(at, "unknown distance mode '" + mode + "'");
      }
      return p;
    }
    if (kind == "alignment") {
      AlignmentParams p;
      p.from = Point(Require(doc, "from", at), at);
      p.through = Point(Require(doc, "through", at), at);
      p.toward = Point(Require(doc, "toward", at), at);
      p.ordered = doc.value("ordered", false);
      return p;
    }
    if (kind == "opposite_contact") {
      ContactParams p;
      p.tip = Point(Require(doc, "tip", at), at);
      p.object = Point(Require(doc, "object", at), at);
      p.place = Point(Require(doc, "place", at), at);
      p.standoff = GetNumber(doc, "standoff", at);
      return p;
    }
    if (kind == "box_placement") {
      PlacementParams p;
      p.object = Point(Require(doc, "object", at), at);
      p.target = Point(Require(doc, "target", at), at);
      p.object_half = GetNumberOr(doc, "object_half", HalfSizeOf(p.object), at);
      p.target_half = GetNumberOr(doc, "target_half", HalfSizeOf(p.target), at);
      const std::string mode = doc.value("mode", std::string("beside"));
      if (mode == "beside") {
        p.mode = PlacementMode::kBeside;
      } else if (mode == "on_top") {
        p.mode = PlacementMode::kOnTop;
      } else {
        Fail(at, "unknown placement mode '" + mode + "'");
      }
      return p;
    }
    if (kind == "obstacle_clearance") {
      ClearanceParams p;
      p.point = Point(Require(doc, "point", at), at);
      p.obstacle = GetString(doc, "obstacle", at);
      CheckFrame(p.obstacle, at);
      p.margin = GetNumberOr(doc, "margin", 0.0, at);
      return p;
    }
    if (kind == "dof_velocity") {
      DofVelocityParams p;
      p.block = GetString(doc, "block", at);
      const DofBlock& b = Block(p.block, at);
      p.offset = b.offset;
      p.size = b.size;
      return p;
    }
    if (kind == "relative_velocity") {
      RelativeVelocityParams p;
      p.a = GetString(doc, "a", at);
      p.b = GetString(doc, "b", at);
      const DofBlock& a = Block(p.a, at);
      const DofBlock& b = Block(p.b, at);
      if (a.size != b.size) Fail(at, "relative_velocity blocks differ in size");
      p.offset_a = a.offset;
      p.offset_b = b.offset;
      p.size = a.size;
      return p;
    }
    Fail(at, "unknown feature kind '" + kind +
                 "' (expected position, distance, alignment, opposite_contact, box_placement, "
                 "obstacle_clearance, dof_velocity or relative_velocity)");
  }

  PointRef Point(const json& doc, const std::string& at) const {
    PointRef ref;
    if (doc.is_object() && doc.contains("frame")) {
      ref = PointRef::OfFrame(GetString(doc, "frame", at));
      CheckFrame(ref.name, at);
    } else if (doc.is_object() && doc.contains("dofs")) {
      ref = PointRef::OfDofs(GetString(doc, "dofs", at));
      const DofBlock& b = Block(ref.name, at);
      if (b.size != space_dim_) Fail(at, "dof block '" + ref.name + "' is not a point of the workspace");
      ref.offset = b.offset;
    } else {
      Fail(at, "point must name a 'frame' or 'dofs'");
    }
    if (doc.contains("plus")) {
      ref.plus = GetString(doc, "plus", at);
      const DofBlock& b = Block(ref.plus, at);
      if (b.size != space_dim_) Fail(at, "dof block '" + ref.plus + "' is not a workspace offset");
      ref.plus_offset = b.offset;
    }
    return ref;
  }

  double HalfSizeOf(const PointRef& ref) const {
    if (ref.source == PointRef::Source::kFrame) return scene_.at(ref.name).half_size;
    const DofBlock& b = layout_.block(ref.name);
    if (b.kind == DofKind::kObject) return scene_.at(b.frame).half_size;
    return 0.0;
  }

  void CheckFrame(const std::string& name, const std::string& at) const {
    if (scene_.find(name) == scene_.end()) Fail(at, "references undeclared frame '" + name + "'");
  }

  const DofBlock& Block(const std::string& name, const std::string& at) const {
    const DofBlock* b = layout_.find(name);
    if (b == nullptr) Fail(at, "references undeclared dof block '" + name + "'");
    return *b;
  }

  const DofLayout& layout_;
  const Scene& scene_;
  int space_dim_;
};

json SerializePoint(const PointRef& p) {
  json out;
  out[p.source == PointRef::Source::kFrame ? "frame" : "dofs"] = p.name;
  if (!p.plus.empty()) out["plus"] = p.plus;
  return out;
}

json SerializeFeature(const ConstraintFeature& f) {
  json out;
  out["kind"] = std::string(f.kind());
  out["name"] = f.name();
  if (f.type_override()) out["type"] = ToString(*f.type_override());
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, PositionParams>) {
          out["a"] = SerializePoint(p.a);
          if (p.b) out["b"] = SerializePoint(*p.b);
          if (p.offset.size() > 0) out["offset"] = FromVector(p.offset);
        } else if constexpr (std::is_same_v<T, DistanceParams>) {
          out["a"] = SerializePoint(p.a);
          out["b"] = SerializePoint(p.b);
          out["distance"] = p.distance;
          out["mode"] = p.mode == DistanceMode::kEqual     ? "equal"
                        : p.mode == DistanceMode::kAtLeast ? "at_least"
                                                           : "at_most";
        } else if constexpr (std::is_same_v<T, AlignmentParams>) {
          out["from"] = SerializePoint(p.from);
          out["through"] = SerializePoint(p.through);
          out["toward"] = SerializePoint(p.toward);
          out["ordered"] = p.ordered;
        } else if constexpr (std::is_same_v<T, ContactParams>) {
          out["tip"] = SerializePoint(p.tip);
          out["object"] = SerializePoint(p.object);
          out["place"] = SerializePoint(p.place);
          out["standoff"] = p.standoff;
        } else if constexpr (std::is_same_v<T, PlacementParams>) {
          out["object"] = SerializePoint(p.object);
          out["target"] = SerializePoint(p.target);
          out["object_half"] = p.object_half;
          out["target_half"] = p.target_half;
          out["mode"] = p.mode == PlacementMode::kBeside ? "beside" : "on_top";
        } else if constexpr (std::is_same_v<T, ClearanceParams>) {
          out["point"] = SerializePoint(p.point);
          out["obstacle"] = p.obstacle;
          out["margin"] = p.margin;
        } else if constexpr (std::is_same_v<T, DofVelocityParams>) {
          out["block"] = p.block;
        } else {
          out["a"] = p.a;
          out["b"] = p.b;
        }
      },
      f.params());
  return out;
}

Scene ParseFrames(const json& doc, int space_dim) {
  Scene scene;
  const json& frames = Require(doc, "frames", "scenario");
  if (!frames.is_array()) Fail("scenario", "'frames' must be a list");
  for (const auto& f : frames) {
    const std::string name = GetString(f, "name", "frame");
    const std::string at = "frame '" + name + "'";
    if (scene.count(name)) Fail(at, "declared twice");
    Frame frame;
    frame.position = ToVector(Require(f, "position", at), at);
    if (frame.position.size() != space_dim) Fail(at, "position must have space_dim entries");
    frame.heading = GetNumberOr(f, "heading", 0.0, at);
    frame.half_size = GetNumberOr(f, "half_size", 0.0, at);
    if (f.contains("half_extents")) {
      frame.half_extents = ToVector(f.at("half_extents"), at);
      if (frame.half_extents.size() != space_dim) Fail(at, "half_extents must have space_dim entries");
    }
    frame.active = f.value("active", true);
    frame.draggable = f.value("draggable", false);
    scene.emplace(name, std::move(frame));
  }
  return scene;
}

DofLayout ParseLayout(const json& doc, const Scene& scene) {
  const json& dofs = Require(doc, "dofs", "scenario");
  if (!dofs.is_array()) Fail("scenario", "'dofs' must be a list");
  std::vector<DofBlock> blocks;
  for (const auto& d : dofs) {
    DofBlock b;
    b.name = GetString(d, "name", "dof block");
    const std::string at = "dof block '" + b.name + "'";
    b.kind = ParseDofKind(GetString(d, "kind", at), at);
    b.size = static_cast<int>(GetNumber(d, "size", at));
    if (b.kind == DofKind::kObject) {
      b.frame = GetString(d, "frame", at);
      if (scene.find(b.frame) == scene.end()) Fail(at, "references undeclared frame '" + b.frame + "'");
    }
    if (d.contains("initial")) b.initial = ToVector(d.at("initial"), at);
    blocks.push_back(std::move(b));
  }
  return DofLayout(std::move(blocks));
}

std::vector<ConstraintFeature> ParseFeatureList(const json& phase, const char* key, const FeatureParser& parser,
                                                const std::string& at) {
  std::vector<ConstraintFeature> out;
  if (!phase.contains(key)) return out;
  const json& list = phase.at(key);
  if (!list.is_array()) Fail(at, std::string("'") + key + "' must be a list");
  for (const auto& f : list) out.push_back(parser.Parse(f, at + " " + key));
  return out;
}

json SerializeFeatureList(const FeatureStack& stack) {
  json out = json::array();
  for (const auto& f : stack.features()) out.push_back(SerializeFeature(f));
  return out;
}

PerturbationEvent ParseEvent(const json& e, int space_dim, int actuated_dim) {
  PerturbationEvent ev;
  const std::string at = "event";
  ev.time = GetNumber(e, "time", at);
  ev.kind = ParsePerturbationKind(GetString(e, "kind", at));
  switch (ev.kind) {
    case PerturbationKind::kMoveFrame:
      ev.frame = GetString(e, "frame", at);
      ev.position = ToVector(Require(e, "position", at), at);
      if (ev.position.size() != space_dim) Fail(at, "position has wrong dimension");
      if (e.contains("heading")) ev.heading = GetNumber(e, "heading", at);
      break;
    case PerturbationKind::kHoldAgent:
      ev.on = e.value("on", true);
      break;
    case PerturbationKind::kImpulseAgent:
      ev.impulse = ToVector(Require(e, "impulse", at), at);
      if (ev.impulse.size() != actuated_dim) Fail(at, "impulse has wrong dimension");
      break;
    case PerturbationKind::kAddObstacle:
      ev.frame = GetString(e, "frame", at);
      if (e.contains("position")) ev.position = ToVector(e.at("position"), at);
      break;
    case PerturbationKind::kRemoveObstacle:
      ev.frame = GetString(e, "frame", at);
      break;
  }
  return ev;
}

json SerializeEvent(const PerturbationEvent& ev) {
  json out;
  out["time"] = ev.time;
  out["kind"] = ToString(ev.kind);
  switch (ev.kind) {
    case PerturbationKind::kMoveFrame:
      out["frame"] = ev.frame;
      out["position"] = FromVector(ev.position);
      if (ev.heading) out["heading"] = *ev.heading;
      break;
    case PerturbationKind::kHoldAgent:
      out["on"] = ev.on;
      break;
    case PerturbationKind::kImpulseAgent:
      out["impulse"] = FromVector(ev.impulse);
      break;
    case PerturbationKind::kAddObstacle:
      out["frame"] = ev.frame;
      if (ev.position.size() > 0) out["position"] = FromVector(ev.position);
      break;
    case PerturbationKind::kRemoveObstacle:
      out["frame"] = ev.frame;
      break;
  }
  return out;
}

}  // namespace

const char* ToString(PerturbationKind kind) {
  switch (kind) {
    case PerturbationKind::kMoveFrame:
      return "move_frame";
    case PerturbationKind::kHoldAgent:
      return "hold_agent";
    case PerturbationKind::kImpulseAgent:
      return "impulse_agent";
    case PerturbationKind::kAddObstacle:
      return "add_obstacle";
    case PerturbationKind::kRemoveObstacle:
      return "remove_obstacle";
  }
  return "?";
}

PerturbationKind ParsePerturbationKind(std::string_view name) {
  if (name == "move_frame") return PerturbationKind::kMoveFrame;
  if (name == "hold_agent") return PerturbationKind::kHoldAgent;
  if (name == "impulse_agent") return PerturbationKind::kImpulseAgent;
  if (name == "add_obstacle") return PerturbationKind::kAddObstacle;
  if (name == "remove_obstacle") return PerturbationKind::kRemoveObstacle;
  throw SpecError("unknown perturbation kind '" + std::string(name) + "'");
}

SequenceSpec ParseSequenceSpec(const json& doc) {
  if (!doc.is_object()) Fail("scenario", "document must be an object");
  SequenceSpec spec;
  spec.name = doc.value("name", std::string("unnamed"));
  spec.space_dim = static_cast<int>(GetNumber(doc, "space_dim", "scenario"));
  if (spec.space_dim < 1 || spec.space_dim > 3) Fail("scenario", "space_dim must be 1, 2 or 3");
  spec.scene = ParseFrames(doc, spec.space_dim);
  spec.layout = ParseLayout(doc, spec.scene);
  spec.alpha = GetNumberOr(doc, "alpha", 1.0, "scenario");
  spec.pose_reg_weight = GetNumberOr(doc, "pose_reg_weight", 1e-2, "scenario");
  if (doc.contains("q_home")) {
    spec.q_home = ToVector(doc.at("q_home"), "q_home");
  } else {
    spec.q_home = spec.layout.InitialConfig().head(spec.layout.actuated_dim());
  }

  FeatureParser parser(spec.layout, spec.scene, spec.space_dim);
  const json& phases = Require(doc, "phases", "scenario");
  if (!phases.is_array()) Fail("scenario", "'phases' must be a list");
  for (size_t k = 0; k < phases.size(); ++k) {
    const json& ph = phases[k];
    PhaseSpec phase;
    phase.name = ph.value("name", "phase" + std::to_string(k));
    const std::string at = "phase '" + phase.name + "'";
    phase.waypoint = FeatureStack(ParseFeatureList(ph, "waypoint", parser, at));
    phase.running = FeatureStack(ParseFeatureList(ph, "running", parser, at));
    phase.coupling = FeatureStack(ParseFeatureList(ph, "coupling", parser, at));
    spec.phases.push_back(std::move(phase));
  }
  spec.Validate();
  return spec;
}

Scenario ParseScenario(const json& doc) {
  Scenario scenario;
  scenario.spec = ParseSequenceSpec(doc);
  const int nq = scenario.spec.layout.actuated_dim();
  if (doc.contains("simulation")) {
    const json& sim = doc.at("simulation");
    const std::string at = "simulation";
    scenario.sim.duration = GetNumberOr(sim, "duration", scenario.sim.duration, at);
    if (sim.contains("initial_velocity")) {
      scenario.sim.initial_velocity = ToVector(sim.at("initial_velocity"), at);
      if (scenario.sim.initial_velocity.size() != nq) Fail(at, "initial_velocity has wrong dimension");
    }
    if (sim.contains("push")) {
      const json& p = sim.at("push");
      PushModel push;
      push.pusher = GetString(p, "pusher", "push");
      push.object = GetString(p, "object", "push");
      const DofBlock& b = scenario.spec.layout.block(push.pusher);
      if (b.kind != DofKind::kActuated || b.size != scenario.spec.space_dim) {
        Fail("push", "pusher must be an actuated workspace point");
      }
      if (scenario.spec.scene.find(push.object) == scenario.spec.scene.end()) {
        Fail("push", "references undeclared frame '" + push.object + "'");
      }
      push.contact_radius = GetNumber(p, "contact_radius", "push");
      push.heading_noise = GetNumberOr(p, "heading_noise", 0.0, "push");
      push.slip_gain = GetNumberOr(p, "slip_gain", 1.0, "push");
      if (p.contains("lifted_phases")) {
        if (!p.at("lifted_phases").is_array()) Fail("push", "'lifted_phases' must be an array of phase indices");
        for (const auto& v : p.at("lifted_phases")) {
          if (!v.is_number_integer() || v.get<int>() < 0 || v.get<int>() >= scenario.spec.num_phases()) {
            Fail("push", "'lifted_phases' entries must be phase indices");
          }
          push.lifted_phases.push_back(v.get<int>());
        }
      }
      scenario.sim.push = push;
    }
    if (sim.contains("events")) {
      for (const auto& e : sim.at("events")) {
        scenario.events.push_back(ParseEvent(e, scenario.spec.space_dim, nq));
        const auto& ev = scenario.events.back();
        if (!ev.frame.empty() && scenario.spec.scene.find(ev.frame) == scenario.spec.scene.end()) {
          Fail("event", "references undeclared frame '" + ev.frame + "'");
        }
      }
      std::stable_sort(scenario.events.begin(), scenario.events.end(),
                       [](const auto& a, const auto& b) { return a.time < b.time; });
    }
  }
  return scenario;
}

Scenario ParseScenarioText(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw SpecError(std::string("scenario document is not valid JSON: ") + e.what());
  }
  return ParseScenario(doc);
}

json SerializeScenario(const Scenario& scenario) {
  const SequenceSpec& spec = scenario.spec;
  json doc;
  doc["name"] = spec.name;
  doc["space_dim"] = spec.space_dim;
  doc["alpha"] = spec.alpha;
  doc["pose_reg_weight"] = spec.pose_reg_weight;
  doc["q_home"] = FromVector(spec.q_home);
  json frames = json::array();
  for (const auto& [name, f] : spec.scene) {
    json jf;
    jf["name"] = name;
    jf["position"] = FromVector(f.position);
    jf["heading"] = f.heading;
    jf["half_size"] = f.half_size;
    if (f.half_extents.size() > 0) jf["half_extents"] = FromVector(f.half_extents);
    jf["active"] = f.active;
    jf["draggable"] = f.draggable;
    frames.push_back(jf);
  }
  doc["frames"] = frames;
  json dofs = json::array();
  for (const auto& b : spec.layout.blocks()) {
    json jb;
    jb["name"] = b.name;
    jb["kind"] = ToString(b.kind);
    jb["size"] = b.size;
    if (!b.frame.empty()) jb["frame"] = b.frame;
    if (b.initial.size() > 0) jb["initial"] = FromVector(b.initial);
    dofs.push_back(jb);
  }
  doc["dofs"] = dofs;
  json phases = json::array();
  for (const auto& ph : spec.phases) {
    json jp;
    jp["name"] = ph.name;
    jp["waypoint"] = SerializeFeatureList(ph.waypoint);
    jp["running"] = SerializeFeatureList(ph.running);
    jp["coupling"] = SerializeFeatureList(ph.coupling);
    phases.push_back(jp);
  }
  doc["phases"] = phases;
  json sim;
  sim["duration"] = scenario.sim.duration;
  if (scenario.sim.initial_velocity.size() > 0) sim["initial_velocity"] = FromVector(scenario.sim.initial_velocity);
  if (scenario.sim.push) {
    const PushModel& p = *scenario.sim.push;
    sim["push"] = {{"pusher", p.pusher},
                   {"object", p.object},
                   {"contact_radius", p.contact_radius},
                   {"heading_noise", p.heading_noise},
                   {"slip_gain", p.slip_gain},
                   {"lifted_phases", p.lifted_phases}};
  }
  json events = json::array();
  for (const auto& ev : scenario.events) events.push_back(SerializeEvent(ev));
  sim["events"] = events;
  doc["simulation"] = sim;
  return doc;
}

const std::vector<std::string>& ShippedScenarioNames() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& entry : detail::kShippedScenarios) out.emplace_back(entry.name);
    return out;
  }();
  return names;
}

std::string ShippedScenarioText(std::string_view name) {
  for (const auto& entry : detail::kShippedScenarios) {
    if (entry.name == name) return std::string(entry.text);
  }
  std::string valid;
  for (const auto& n : ShippedScenarioNames()) valid += (valid.empty() ? "" : ", ") + n;
  throw SpecError("unknown scenario '" + std::string(name) + "' (valid: " + valid + ")");
}

Scenario LoadScenario(std::string_view name_or_path) {
  for (const auto& entry : detail::kShippedScenarios) {
    if (entry.name == name_or_path) return ParseScenarioText(entry.text);
  }
  std::ifstream in{std::string(name_or_path)};
  if (!in) {
    // Produces the "unknown scenario" message with valid names.
    ShippedScenarioText(name_or_path);
  }
  std::stringstream buf;
  buf << in.rdbuf();
  return ParseScenarioText(buf.str());
}

}  // namespace secmpc
