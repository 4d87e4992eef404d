#pragma once

#include "ttnmf/estimator.hpp"
#include "ttnmf/trainer.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

namespace ttnmf {

enum class Profile { none, internet2, geant };

Profile parse_profile(const std::string& text);

/// Everything one CLI invocation needs. Flags and config-file keys fill it;
/// a profile only supplies defaults for values the user did not set.
struct RunConfig {
  std::filesystem::path routing;
  std::filesystem::path traffic;
  std::optional<std::filesystem::path> mask;
  std::filesystem::path model;
  std::filesystem::path output_dir = ".";
  TrainConfig train;
  EstimatorConfig estimate;
  /// Train on columns [0, train_t) only; 0 = use every column.
  Eigen::Index train_t = 0;

  /// Throws ConfigError if a referenced input path is missing.
  void require_inputs(bool routing_needed, bool traffic_needed) const;
};

/// Defaults of the two public backbone datasets: rank 20, the shipped lag
/// set and betas 0.2 (Internet2) or 0.1 (GEANT). Training lengths are 2016
/// and 1344 slots respectively.
void apply_profile(Profile profile, TrainConfig& train, Eigen::Index& train_t);

/// Stable textual form of a training configuration and its 64-bit hash.
std::string canonical_string(const TrainConfig& config);
std::uint64_t config_hash(const TrainConfig& config);

}  // namespace ttnmf
