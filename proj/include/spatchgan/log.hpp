#pragma once

#include <cstdio>
#include <string>

namespace spatchgan {

enum class LogLevel { Debug = 0, Info = 1, Warn = 2, Silent = 3 };

inline LogLevel& log_level() {
  static LogLevel level = LogLevel::Info;
  return level;
}

inline void log_msg(LogLevel lvl, const char* tag, const std::string& msg) {
  if (lvl < log_level()) return;
  std::fprintf(stderr, "[%s] %s\n", tag, msg.c_str());
  std::fflush(stderr);
}

inline void log_debug(const std::string& msg) { log_msg(LogLevel::Debug, "debug", msg); }
inline void log_info(const std::string& msg) { log_msg(LogLevel::Info, "info", msg); }
inline void log_warn(const std::string& msg) { log_msg(LogLevel::Warn, "warn", msg); }

}  // namespace spatchgan
