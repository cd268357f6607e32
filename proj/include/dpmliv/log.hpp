#pragma once

#include <string>

namespace dpmliv {

enum class LogLevel { Quiet, Info, Trace };

/// From LIV_LOG (quiet, info, trace); unset or unrecognized means info.
LogLevel log_level();

/// Writes one line to standard error when the level is enabled. Thread safe.
void log_line(LogLevel level, const std::string& line);

}  // namespace dpmliv
