#pragma once

#include <spdlog/logger.h>

#include <memory>

namespace ttnmf {

/// Library-wide diagnostic logger writing to standard error.
///
/// The level is read once from the TTNMF_LOG environment variable
/// (error, warn, info, debug); the default is warn.
spdlog::logger& logger();

}  // namespace ttnmf
