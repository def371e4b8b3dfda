#include "log.hpp"

#include <cstdio>
#include <cstdlib>
#include <cstring>

namespace ccfr::log {

namespace {

Level parse_env() {
  const char* v = std::getenv("CCFR_LOG");
  if (v == nullptr) return Level::info;
  if (std::strcmp(v, "debug") == 0) return Level::debug;
  if (std::strcmp(v, "info") == 0) return Level::info;
  if (std::strcmp(v, "warn") == 0) return Level::warn;
  if (std::strcmp(v, "error") == 0) return Level::error;
  return Level::info;
}

const char* name(Level level) {
  switch (level) {
    case Level::debug: return "debug";
    case Level::info: return "info";
    case Level::warn: return "warn";
    case Level::error: return "error";
  }
  return "?";
}

}  // namespace

Level threshold() {
  static const Level t = parse_env();
  return t;
}

void write(Level level, const std::string& msg) {
  if (level < threshold()) return;
  std::fprintf(stderr, "[ccfr] %s: %s\n", name(level), msg.c_str());
}

}  // namespace ccfr::log
