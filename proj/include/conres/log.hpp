#pragma once

// Minimal stderr logging. Verbosity comes from CONRES_LOG
// (error | warn | info | debug); the default is warn.

#include <cstdlib>
#include <iostream>
#include <mutex>
#include <string>
#include <string_view>

namespace conres::log {

enum class Level { error = 0, warn = 1, info = 2, debug = 3 };

inline Level parse_level(std::string_view s) {
  if (s == "error") return Level::error;
  if (s == "info") return Level::info;
  if (s == "debug") return Level::debug;
  return Level::warn;
}

inline Level& threshold() {
  static Level level = [] {
    const char* env = std::getenv("CONRES_LOG");
    return env ? parse_level(env) : Level::warn;
  }();
  return level;
}

inline void write(Level l, std::string_view msg) {
  static std::mutex mu;
  if (l > threshold()) return;
  static constexpr std::string_view names[] = {"error", "warn", "info", "debug"};
  std::lock_guard lock(mu);
  std::cerr << "conres: " << names[static_cast<int>(l)] << ": " << msg << '\n';
}

inline void error(std::string_view m) { write(Level::error, m); }
inline void warn(std::string_view m) { write(Level::warn, m); }
inline void info(std::string_view m) { write(Level::info, m); }
inline void debug(std::string_view m) { write(Level::debug, m); }

}  // namespace conres::log
