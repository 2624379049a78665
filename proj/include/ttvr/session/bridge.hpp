#pragma once

#include "ttvr/copilot/session.hpp"

#include <atomic>
#include <functional>
#include <memory>
#include <string>

namespace ttvr::session {

struct BridgeOptions {
  std::string address = "127.0.0.1";
  unsigned short port = 0;  // 0 picks a free port
};

struct BridgeStats {
  std::uint64_t ticks = 0;
  std::uint64_t commands_received = 0;
  std::uint64_t commands_applied = 0;
  std::uint64_t commands_dropped = 0;
  std::uint64_t malformed = 0;
  std::uint64_t connections = 0;
  double last_latency_ms = 0.0;  // receipt to application of the latest applied command
  double max_latency_ms = 0.0;
};

/// WebSocket bridge between one operator console and a session. The control
/// loop ticks the session at its tick rate on its own thread once the first
/// client has connected; socket I/O runs on another. They share only the
/// command queue, a request mailbox and immutable encoded snapshots.
class Bridge {
 public:
  using SessionFactory = std::function<copilot::Session()>;

  Bridge(SessionFactory factory, BridgeOptions options = {});
  ~Bridge();
  Bridge(const Bridge&) = delete;
  Bridge& operator=(const Bridge&) = delete;

  /// Binds and starts both threads. Throws Error when the port is taken.
  void start();
  void stop();
  unsigned short port() const;
  BridgeStats stats() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace ttvr::session
