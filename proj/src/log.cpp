#include "log.hpp"

#include <cstdlib>

#include <spdlog/sinks/stdout_color_sinks.h>

namespace auvloc::log {

std::shared_ptr<spdlog::logger> get() {
  static const std::shared_ptr<spdlog::logger> logger = [] {
    auto l = spdlog::stderr_color_mt("auvloc");
    l->set_pattern("[%l] %v");
    auto level = spdlog::level::warn;
    if (const char* env = std::getenv("AUVLOC_LOG")) {
      level = spdlog::level::from_str(env);
    }
    l->set_level(level);
    return l;
  }();
  return logger;
}

}  // namespace auvloc::log
