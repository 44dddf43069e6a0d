#pragma once

/// Minimal stderr logger gated by the DCGRID_LOG environment variable.
/// Levels: off, error, warn (default), info, debug.

#include <cstdio>
#include <cstdlib>
#include <string>

namespace dcgrid::log {

enum class Level : int { Off = 0, Error = 1, Warn = 2, Info = 3, Debug = 4 };

inline Level level_from_env() {
    const char* raw = std::getenv("DCGRID_LOG");
    if (raw == nullptr) return Level::Warn;
    const std::string v(raw);
    if (v == "off") return Level::Off;
    if (v == "error") return Level::Error;
    if (v == "warn") return Level::Warn;
    if (v == "info") return Level::Info;
    if (v == "debug") return Level::Debug;
    return Level::Warn;
}

inline Level threshold() {
    static const Level lvl = level_from_env();
    return lvl;
}

inline void emit(Level lvl, const char* tag, const std::string& msg) {
    if (static_cast<int>(lvl) <= static_cast<int>(threshold())) {
        std::fprintf(stderr, "[dcgrid:%s] %s\n", tag, msg.c_str());
    }
}

inline void error(const std::string& msg) { emit(Level::Error, "error", msg); }
inline void warn(const std::string& msg) { emit(Level::Warn, "warn", msg); }
inline void info(const std::string& msg) { emit(Level::Info, "info", msg); }
inline void debug(const std::string& msg) { emit(Level::Debug, "debug", msg); }

} // namespace dcgrid::log
