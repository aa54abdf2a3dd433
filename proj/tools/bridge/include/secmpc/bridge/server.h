#pragma once

#include <atomic>
#include <functional>
#include <memory>

#include "secmpc/bridge/live_session.h"

namespace secmpc::bridge {

// Web-socket front end for a LiveSession. Network I/O runs on the thread
// that calls Run; the session is ticked in real time on a second thread.
class Server {
 public:
  // Port 0 picks a free port.
  Server(LiveSession& session, unsigned short port);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  unsigned short port() const;
  // Blocks until Stop, SIGINT or SIGTERM.
  void Run();
  // Safe from any thread.
  void Stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Ticks `session` at its plant rate against the steady clock until `stop` is
// set. Does not try to catch up after a slow step.
void RunRealtime(LiveSession& session, double plant_dt, const std::atomic<bool>& stop);

}  // namespace secmpc::bridge
