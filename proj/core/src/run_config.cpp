#include "ttnmf/run_config.hpp"

#include "ttnmf/csv_io.hpp"
#include "ttnmf/errors.hpp"

#include <fmt/format.h>

namespace ttnmf {

Profile parse_profile(const std::string& text) {
  if (text == "none") return Profile::none;
  if (text == "internet2") return Profile::internet2;
  if (text == "geant") return Profile::geant;
  throw ConfigError(fmt::format("unknown profile '{}'", text));
}

void RunConfig::require_inputs(bool routing_needed, bool traffic_needed) const {
  auto check = [](const std::filesystem::path& p, const char* what) {
    if (p.empty()) throw ConfigError(fmt::format("missing required {} path", what));
    if (!std::filesystem::exists(p))
      throw ConfigError(fmt::format("{} file '{}' does not exist", what, p.string()));
  };
  if (routing_needed) check(routing, "routing");
  if (traffic_needed) check(traffic, "traffic");
  if (mask) check(*mask, "mask");
}

void apply_profile(Profile profile, TrainConfig& train, Eigen::Index& train_t) {
  switch (profile) {
    case Profile::none:
      return;
    case Profile::internet2:
      train.rank = 20;
      train.lags = internet2_lags();
      train.beta_h = 0.2;
      train.beta_a = 0.2;
      train_t = 2016;
      return;
    case Profile::geant:
      train.rank = 20;
      train.lags = geant_lags();
      train.beta_h = 0.1;
      train.beta_a = 0.1;
      train_t = 1344;
      return;
  }
}

std::string canonical_string(const TrainConfig& c) {
  return fmt::format(
      "rank={};lags={};beta_h={};beta_a={};q_max={};delta={};w={},{},{};h={},{},{};"
      "omega={},{},{};missing={};restart={};fill={},{}",
      c.rank, c.lags.to_string(), format_double(c.beta_h), format_double(c.beta_a), c.q_max,
      format_double(c.delta), c.w_limits.max_iterations, format_double(c.w_limits.delta),
      format_double(c.w_limits.step_safety), c.h_limits.max_iterations,
      format_double(c.h_limits.delta), format_double(c.h_limits.step_safety),
      c.omega_limits.max_iterations, format_double(c.omega_limits.delta),
      format_double(c.omega_limits.step_safety), to_string(c.missing_mode), to_string(c.restart_test),
      c.fill_max_iterations, format_double(c.fill_delta));
}

std::uint64_t config_hash(const TrainConfig& config) { return fnv1a(canonical_string(config)); }

}  // namespace ttnmf
