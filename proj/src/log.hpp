#pragma once

#include <memory>

#include <spdlog/spdlog.h>

namespace auvloc::log {

// stderr logger; level from AUVLOC_LOG (trace|debug|info|warn|error|off),
// default warn.
std::shared_ptr<spdlog::logger> get();

}  // namespace auvloc::log
