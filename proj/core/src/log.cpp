#include "ttnmf/log.hpp"

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <string_view>

namespace ttnmf {
namespace {

spdlog::level::level_enum level_from_env() {
  const char* raw = std::getenv("TTNMF_LOG");
  if (raw == nullptr) return spdlog::level::warn;
  const std::string_view v{raw};
  if (v == "error") return spdlog::level::err;
  if (v == "warn") return spdlog::level::warn;
  if (v == "info") return spdlog::level::info;
  if (v == "debug") return spdlog::level::debug;
  return spdlog::level::warn;
}

std::shared_ptr<spdlog::logger> make_logger() {
  auto log = spdlog::stderr_color_mt("ttnmf");
  log->set_pattern("[%l] %v");
  log->set_level(level_from_env());
  return log;
}

}  // namespace

spdlog::logger& logger() {
  static std::shared_ptr<spdlog::logger> instance = make_logger();
  return *instance;
}

}  // namespace ttnmf
