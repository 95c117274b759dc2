// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "config.hpp"

#include "tprt/runtime.hpp"

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>

namespace tprt::app {

struct ServiceOptions {
  std::string bind = "127.0.0.1:7878";  // port 0 picks a free port
  std::filesystem::path ui_dir;         // static bundle served at /, optional
  std::filesystem::path asset_dir;      // base for relative environment paths in commands
  std::size_t send_queue_limit = 8;     // per-client queued messages before frames are dropped
  int io_threads = 2;
};

// WebSocket message tags (first byte of every server -> client message).
inline constexpr std::uint8_t kFrameTag = 1;
inline constexpr std::uint8_t kStatsTag = 2;
inline constexpr std::uint8_t kErrorTag = 3;

/// HTTP + WebSocket front end for one relighter. The relighter is owned by a
/// dedicated scene thread; network threads only enqueue commands and read
/// immutable frame snapshots.
class Service {
 public:
  Service(std::unique_ptr<Relighter> relighter, ServiceOptions options);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Binds and starts serving in background threads. Throws IoError when the
  /// address cannot be bound.
  void start();
  [[nodiscard]] unsigned short port() const;
  /// Blocks until SIGINT or SIGTERM, then stops.
  void run_until_signal();
  void stop();

  struct Impl;

 private:
  std::shared_ptr<Impl> impl_;
};

/// Parses "host:port".
void split_bind_address(const std::string& bind, std::string& host, unsigned short& port);

}  // namespace tprt::app
