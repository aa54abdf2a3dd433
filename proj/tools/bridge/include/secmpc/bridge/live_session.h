#pragma once

#include <atomic>
#include <cstddef>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "secmpc/bridge/protocol.h"
#include "secmpc/sim.h"

namespace secmpc::bridge {

// Mutex-guarded FIFO that drops its oldest entry when full.
template <typename T>
class BoundedQueue {
 public:
  explicit BoundedQueue(size_t capacity) : capacity_(capacity == 0 ? 1 : capacity) {}

  // Returns false when an old entry had to be dropped.
  bool Push(T value) {
    std::lock_guard<std::mutex> lock(mu_);
    bool kept = true;
    if (items_.size() >= capacity_) {
      items_.pop_front();
      ++dropped_;
      kept = false;
    }
    items_.push_back(std::move(value));
    return kept;
  }

  // Rejects the value instead when full.
  bool TryPush(T value) {
    std::lock_guard<std::mutex> lock(mu_);
    if (items_.size() >= capacity_) {
      ++dropped_;
      return false;
    }
    items_.push_back(std::move(value));
    return true;
  }

  std::vector<T> DrainAll() {
    std::lock_guard<std::mutex> lock(mu_);
    std::vector<T> out(std::make_move_iterator(items_.begin()), std::make_move_iterator(items_.end()));
    items_.clear();
    return out;
  }

  size_t size() const {
    std::lock_guard<std::mutex> lock(mu_);
    return items_.size();
  }
  size_t dropped() const {
    std::lock_guard<std::mutex> lock(mu_);
    return dropped_;
  }
  size_t capacity() const { return capacity_; }

 private:
  mutable std::mutex mu_;
  std::deque<T> items_;
  size_t capacity_;
  size_t dropped_ = 0;
};

struct LiveOptions {
  SimOptions sim;
  int state_every = 5;          // plant steps per state message (20 Hz at 100 Hz)
  double grace = 5.0;           // seconds without a commander before pausing
  size_t outbox_capacity = 64;  // per client
  size_t inbox_capacity = 256;
  size_t recent_events = 16;
  int reference_samples = 20;
  double reference_window = 2.0;  // seconds of the reference sent per state
};

// The simulation side of the live bridge, without sockets. Connect,
// Disconnect, Receive and Drain may be called from any thread; Tick and the
// accessors below it belong to the simulation thread.
class LiveSession {
 public:
  LiveSession(Scenario scenario, LiveOptions options);

  int Connect();
  void Disconnect(int client);
  void Receive(int client, std::string text);
  // Outgoing messages for `client`, oldest first.
  std::vector<std::string> Drain(int client);
  size_t Dropped(int client) const;

  // One plant step at wall time `wall` (seconds, monotone): handles queued
  // connections and messages, applies commands, advances the simulation
  // unless paused, and emits state messages when due.
  void Tick(double wall);

  bool paused() const { return paused_; }
  std::optional<int> commander() const { return commander_; }
  double clock() const;
  int epoch() const { return epoch_; }
  const Simulation& simulation() const { return *sim_; }
  nlohmann::json StateMessage() const;

 private:
  struct Inbound {
    enum class Kind { kConnect, kDisconnect, kMessage } kind;
    int client;
    std::string text;
  };
  using Outbox = BoundedQueue<std::string>;

  void Send(int client, const nlohmann::json& message);
  void Broadcast(const nlohmann::json& message);
  void Handle(const Inbound& in, double wall);
  void Apply(const Command& c, int client);
  void Restart(std::uint64_t seed);
  nlohmann::json Welcome(int client) const;

  Scenario scenario_;
  LiveOptions options_;
  std::unique_ptr<Simulation> sim_;

  BoundedQueue<Inbound> inbox_;  // messages
  std::mutex membership_mu_;
  std::vector<Inbound> membership_;  // connects and disconnects, never dropped
  mutable std::mutex clients_mu_;
  std::map<int, std::shared_ptr<Outbox>> outboxes_;
  std::atomic<int> next_client_{1};

  // Simulation thread only.
  std::vector<int> clients_;  // connection order
  std::optional<int> commander_;
  std::optional<double> vacant_since_;
  bool paused_ = false;
  int epoch_ = 0;
  long ticks_ = 0;
  std::int64_t seq_ = 0;
  double waypoints_clock_ = -1.0;
  std::deque<nlohmann::json> recent_;
};

}  // namespace secmpc::bridge
