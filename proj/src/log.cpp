#include "skeltree/log.hpp"

#include <atomic>
#include <cstdio>

namespace skeltree {

namespace {
std::atomic<int> g_level{static_cast<int>(LogLevel::Warn)};

const char* level_tag(LogLevel lvl) {
    switch (lvl) {
        case LogLevel::Error: return "error";
        case LogLevel::Warn: return "warn";
        case LogLevel::Info: return "info";
        case LogLevel::Debug: return "debug";
    }
    return "?";
}
}  // namespace

LogLevel log_level() { return static_cast<LogLevel>(g_level.load()); }

void set_log_level(LogLevel lvl) { g_level.store(static_cast<int>(lvl)); }

bool set_log_level(const std::string& name) {
    if (name == "error") set_log_level(LogLevel::Error);
    else if (name == "warn") set_log_level(LogLevel::Warn);
    else if (name == "info") set_log_level(LogLevel::Info);
    else if (name == "debug") set_log_level(LogLevel::Debug);
    else return false;
    return true;
}

void log_msg(LogLevel lvl, const std::string& msg) {
    if (static_cast<int>(lvl) > g_level.load()) return;
    std::fprintf(stderr, "[%s] %s\n", level_tag(lvl), msg.c_str());
}

}  // namespace skeltree
