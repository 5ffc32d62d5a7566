#include "memce/util.hpp"

#include <cstdlib>
#include <iostream>

namespace memce {

LogLevel log_level() {
  static LogLevel level = [] {
    const char* env = std::getenv("MEMCE_LOG");
    if (env == nullptr) return LogLevel::Error;
    const std::string v(env);
    if (v == "debug") return LogLevel::Debug;
    if (v == "info") return LogLevel::Info;
    return LogLevel::Error;
  }();
  return level;
}

void log_info(const std::string& msg) {
  if (log_level() >= LogLevel::Info) std::cerr << "[memce] " << msg << "\n";
}

void log_debug(const std::string& msg) {
  if (log_level() >= LogLevel::Debug) std::cerr << "[memce:debug] " << msg << "\n";
}

}  // namespace memce
