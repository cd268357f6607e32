#include "dpmliv/log.hpp"

#include <cstdlib>
#include <iostream>
#include <mutex>

namespace dpmliv {

LogLevel log_level() {
  const char* v = std::getenv("LIV_LOG");
  if (!v) return LogLevel::Info;
  const std::string s(v);
  if (s == "quiet") return LogLevel::Quiet;
  if (s == "trace") return LogLevel::Trace;
  return LogLevel::Info;
}

void log_line(LogLevel level, const std::string& line) {
  if (level == LogLevel::Quiet || static_cast<int>(log_level()) < static_cast<int>(level)) return;
  static std::mutex mu;
  std::lock_guard lock(mu);
  std::cerr << line << '\n';
}

}  // namespace dpmliv
