#include "scarseg/log.hpp"

#include <cstdlib>
#include <cstring>
#include <mutex>

namespace scarseg {

namespace {

LogLevel g_level = LogLevel::info;
std::once_flag g_env_once;
std::mutex g_write_mutex;

void init_from_env() {
    const char* env = std::getenv("SCARSEG_LOG");
    if (!env) return;
    if (std::strcmp(env, "error") == 0) g_level = LogLevel::error;
    else if (std::strcmp(env, "info") == 0) g_level = LogLevel::info;
    else if (std::strcmp(env, "debug") == 0) g_level = LogLevel::debug;
}

const char* level_tag(LogLevel level) {
    switch (level) {
        case LogLevel::error: return "error";
        case LogLevel::info: return "info";
        case LogLevel::debug: return "debug";
    }
    return "?";
}

}  // namespace

LogLevel log_level() {
    std::call_once(g_env_once, init_from_env);
    return g_level;
}

void set_log_level(LogLevel level) {
    std::call_once(g_env_once, init_from_env);
    g_level = level;
}

bool log_enabled(LogLevel level) {
    return static_cast<int>(level) <= static_cast<int>(log_level());
}

void log_line(LogLevel level, const std::string& msg) {
    if (!log_enabled(level)) return;
    std::lock_guard<std::mutex> lock(g_write_mutex);
    std::fprintf(stderr, "[%s] %s\n", level_tag(level), msg.c_str());
}

}  // namespace scarseg
