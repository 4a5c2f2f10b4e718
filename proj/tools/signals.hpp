#pragma once

#include <atomic>
#include <csignal>

// Shared SIGINT/SIGTERM flag for the long-running tools.
inline std::atomic<bool> g_stop{false};

inline void install_stop_handler() {
  auto handler = [](int) { g_stop = true; };
  std::signal(SIGINT, handler);
  std::signal(SIGTERM, handler);
}
