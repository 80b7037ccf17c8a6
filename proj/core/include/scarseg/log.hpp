#pragma once

#include <cstdio>
#include <string>

namespace scarseg {

enum class LogLevel { error = 0, info = 1, debug = 2 };

// Level comes from the SCARSEG_LOG environment variable (error|info|debug),
// read once on first use. Defaults to info.
LogLevel log_level();
void set_log_level(LogLevel level);

bool log_enabled(LogLevel level);
void log_line(LogLevel level, const std::string& msg);

inline void log_error(const std::string& msg) { log_line(LogLevel::error, msg); }
inline void log_info(const std::string& msg) { log_line(LogLevel::info, msg); }
inline void log_debug(const std::string& msg) { log_line(LogLevel::debug, msg); }

}  // namespace scarseg
