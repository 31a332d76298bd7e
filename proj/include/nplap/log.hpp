#pragma once

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <string>

// Minimal stderr logger. Verbosity is driven by the NEUMANN_PLAP_LOG
// environment variable: error, warn (default), info, debug.

namespace nplap {

enum class LogLevel : int { error = 0, warn = 1, info = 2, debug = 3 };

inline LogLevel log_threshold() {
  static const LogLevel level = [] {
    const char* env = std::getenv("NEUMANN_PLAP_LOG");
    if (!env) return LogLevel::warn;
    if (std::strcmp(env, "error") == 0) return LogLevel::error;
    if (std::strcmp(env, "warn") == 0) return LogLevel::warn;
    if (std::strcmp(env, "info") == 0) return LogLevel::info;
    if (std::strcmp(env, "debug") == 0) return LogLevel::debug;
    return LogLevel::warn;
  }();
  return level;
}

inline void log_msg(LogLevel level, const std::string& msg) {
  if (static_cast<int>(level) > static_cast<int>(log_threshold())) return;
  static const char* tag[] = {"error", "warn", "info", "debug"};
  std::fprintf(stderr, "[nplap:%s] %s\n", tag[static_cast<int>(level)], msg.c_str());
}

inline void log_error(const std::string& m) { log_msg(LogLevel::error, m); }
inline void log_warn(const std::string& m) { log_msg(LogLevel::warn, m); }
inline void log_info(const std::string& m) { log_msg(LogLevel::info, m); }
inline void log_debug(const std::string& m) { log_msg(LogLevel::debug, m); }

}  // namespace nplap
