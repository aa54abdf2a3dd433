#include "secmpc/bridge/live_session.h"

#include <algorithm>

namespace secmpc::bridge {
namespace {

using nlohmann::json;

json Vec(const Vector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

}  // namespace

LiveSession::LiveSession(Scenario scenario, LiveOptions options)
    : scenario_(std::move(scenario)), options_(std::move(options)), inbox_(options_.inbox_capacity) {
  if (options_.state_every < 1) throw SpecError("live: state_every must be >= 1");
  if (!(options_.grace >= 0.0)) throw SpecError("live: grace must be >= 0");
  sim_ = std::make_unique<Simulation>(scenario_, options_.sim);
}

int LiveSession::Connect() {
  const int id = next_client_.fetch_add(1);
  {
    std::lock_guard<std::mutex> lock(clients_mu_);
    outboxes_[id] = std::make_shared<Outbox>(options_.outbox_capacity);
  }
  std::lock_guard<std::mutex> lock(membership_mu_);
  membership_.push_back({Inbound::Kind::kConnect, id, {}});
  return id;
}

void LiveSession::Disconnect(int client) {
  {
    std::lock_guard<std::mutex> lock(clients_mu_);
    outboxes_.erase(client);
  }
  std::lock_guard<std::mutex> lock(membership_mu_);
  membership_.push_back({Inbound::Kind::kDisconnect, client, {}});
}

void LiveSession::Receive(int client, std::string text) {
  if (!inbox_.TryPush({Inbound::Kind::kMessage, client, std::move(text)})) {
    Send(client, ErrorMessage("inbox full; message dropped", std::nullopt));
  }
}

std::vector<std::string> LiveSession::Drain(int client) {
  std::shared_ptr<Outbox> box;
  {
    std::lock_guard<std::mutex> lock(clients_mu_);
    auto it = outboxes_.find(client);
    if (it == outboxes_.end()) return {};
    box = it->second;
  }
  return box->DrainAll();
}

size_t LiveSession::Dropped(int client) const {
  std::lock_guard<std::mutex> lock(clients_mu_);
  auto it = outboxes_.find(client);
  return it == outboxes_.end() ? 0 : it->second->dropped();
}

void LiveSession::Send(int client, const json& message) {
  std::shared_ptr<Outbox> box;
  {
    std::lock_guard<std::mutex> lock(clients_mu_);
    auto it = outboxes_.find(client);
    if (it == outboxes_.end()) return;
    box = it->second;
  }
  box->Push(message.dump());
}

void LiveSession::Broadcast(const json& message) {
  const std::string text = message.dump();
  std::vector<std::shared_ptr<Outbox>> boxes;
  {
    std::lock_guard<std::mutex> lock(clients_mu_);
    for (const auto& [id, box] : outboxes_) boxes.push_back(box);
  }
  for (const auto& box : boxes) box->Push(text);
}

double LiveSession::clock() const { return sim_->world().clock; }

json LiveSession::Welcome(int client) const {
  json frames = json::array();
  for (const auto& [name, f] : sim_->world().frames) frames.push_back(name);
  return {{"v", kProtocolVersion},
          {"type", "welcome"},
          {"client", client},
          {"role", commander_ == client ? "commander" : "viewer"},
          {"scenario", scenario_.spec.name},
          {"frames", frames},
          {"plant_hz", 1.0 / options_.sim.plant_dt},
          {"cycle_hz", 1.0 / (options_.sim.plant_dt * options_.sim.cycle_every)},
          {"state_hz", 1.0 / (options_.sim.plant_dt * options_.state_every)}};
}

void LiveSession::Handle(const Inbound& in, double wall) {
  switch (in.kind) {
    case Inbound::Kind::kConnect:
      clients_.push_back(in.client);
      if (!commander_) {
        commander_ = in.client;
        vacant_since_.reset();
      }
      Send(in.client, Welcome(in.client));
      break;
    case Inbound::Kind::kDisconnect:
      clients_.erase(std::remove(clients_.begin(), clients_.end(), in.client), clients_.end());
      if (commander_ == in.client) {
        commander_.reset();
        vacant_since_ = wall;
      }
      break;
    case Inbound::Kind::kMessage: {
      if (std::find(clients_.begin(), clients_.end(), in.client) == clients_.end()) return;
      Command c;
      try {
        c = ParseCommand(in.text);
      } catch (const ProtocolError& e) {
        Send(in.client, ErrorMessage(e.what(), e.id()));
        return;
      }
      if (commander_ != in.client) {
        Send(in.client, ErrorMessage("not authorized: this client is a viewer", c.id));
        return;
      }
      Apply(c, in.client);
      break;
    }
  }
}

void LiveSession::Apply(const Command& c, int client) {
  PerturbationEvent e;
  e.time = clock();
  switch (c.kind) {
    case CommandKind::kMoveFrame: {
      auto it = sim_->world().frames.find(c.frame);
      if (it == sim_->world().frames.end()) {
        Send(client, ErrorMessage("unknown frame '" + c.frame + "'", c.id));
        return;
      }
      if (it->second.position.size() != c.position.size()) {
        Send(client, ErrorMessage("position of '" + c.frame + "' needs " +
                                      std::to_string(it->second.position.size()) + " entries",
                                  c.id));
        return;
      }
      e.kind = PerturbationKind::kMoveFrame;
      e.frame = c.frame;
      e.position = c.position;
      e.heading = c.heading;
      sim_->Inject(e);
      break;
    }
    case CommandKind::kHoldAgent:
      e.kind = PerturbationKind::kHoldAgent;
      e.on = c.on;
      sim_->Inject(e);
      break;
    case CommandKind::kImpulse:
      if (c.velocity.size() != sim_->world().agent.xdot.size()) {
        Send(client, ErrorMessage("impulse needs " + std::to_string(sim_->world().agent.xdot.size()) + " entries",
                                  c.id));
        return;
      }
      e.kind = PerturbationKind::kImpulseAgent;
      e.impulse = c.velocity;
      sim_->Inject(e);
      break;
    case CommandKind::kPause:
      paused_ = true;
      break;
    case CommandKind::kResume:
      paused_ = false;
      break;
    case CommandKind::kReset:
      Restart(c.seed ? *c.seed : options_.sim.seed);
      break;
  }
  // Injected events take effect at the start of the next plant step, whose
  // clock is the step index times the plant period.
  const double applied = static_cast<double>(sim_->step_index()) * options_.sim.plant_dt;
  json ack = {{"v", kProtocolVersion}, {"type", "ack"}, {"command", ToString(c.kind)}, {"applied_clock", applied},
              {"epoch", epoch_}};
  if (c.id) ack["id"] = *c.id;
  if (c.client_time) ack["client_time"] = *c.client_time;
  Send(client, ack);
}

void LiveSession::Restart(std::uint64_t seed) {
  options_.sim.seed = seed;
  sim_ = std::make_unique<Simulation>(scenario_, options_.sim);
  ++epoch_;
  waypoints_clock_ = -1.0;
  recent_.clear();
}

void LiveSession::Tick(double wall) {
  std::vector<Inbound> members;
  {
    std::lock_guard<std::mutex> lock(membership_mu_);
    members.swap(membership_);
  }
  for (const auto& m : members) Handle(m, wall);
  for (const auto& m : inbox_.DrainAll()) Handle(m, wall);

  if (!commander_ && vacant_since_ && wall - *vacant_since_ >= options_.grace) {
    paused_ = true;
    vacant_since_.reset();
    if (!clients_.empty()) {
      commander_ = clients_.front();
      Send(*commander_, {{"v", kProtocolVersion}, {"type", "role"}, {"role", "commander"}});
    }
  }

  if (!paused_ && !sim_->finished()) {
    const auto rec = sim_->Advance();
    if (rec) {
      waypoints_clock_ = rec->clock;
      for (const auto& e : rec->events) {
        recent_.push_back({{"clock", rec->clock}, {"event", e}});
        if (recent_.size() > options_.recent_events) recent_.pop_front();
      }
    }
  }
  if (ticks_++ % options_.state_every == 0) {
    json m = StateMessage();
    m["seq"] = seq_++;
    Broadcast(m);
  }
}

json LiveSession::StateMessage() const {
  const WorldState& w = sim_->world();
  const CycleState& cs = sim_->cycle_state();
  json frames = json::object();
  for (const auto& [name, f] : w.frames) frames[name] = {{"position", Vec(f.position)}, {"heading", f.heading}};
  json reference = json::array();
  if (!cs.reference.empty()) {
    const double dt = options_.reference_window / options_.reference_samples;
    for (int i = 1; i <= options_.reference_samples; ++i) {
      reference.push_back(Vec(cs.reference.Evaluate(w.clock + i * dt).position));
    }
  }
  json knots = json::array();
  for (const auto& k : cs.horizon.knots) knots.push_back(Vec(k));
  json waypoints = json::array();
  for (const auto& q : cs.waypoints.waypoints) waypoints.push_back(Vec(q));
  json events = json::array();
  for (const auto& e : recent_) events.push_back(e);
  json m = {{"v", kProtocolVersion},
            {"type", "state"},
            {"epoch", epoch_},
            {"clock", w.clock},
            {"paused", paused_},
            {"done", sim_->finished()},
            {"completed", sim_->summary().completed},
            {"agent", {{"q", Vec(w.agent.x)}, {"qdot", Vec(w.agent.xdot)}, {"hold", w.hold}}},
            {"frames", frames},
            {"phase", cs.phase},
            {"taus", cs.timing.taus},
            {"time_to_go", cs.time_to_go()},
            {"reference", {{"dt", options_.reference_window / options_.reference_samples}, {"samples", reference}}},
            {"horizon", {{"dt", cs.horizon.dt}, {"knots", knots}}},
            {"waypoints", waypoints},
            {"waypoints_first_phase", cs.waypoints.first_phase},
            {"waypoints_clock", waypoints_clock_},
            {"events", events}};
  return m;
}

}  // namespace secmpc::bridge
