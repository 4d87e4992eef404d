#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace ttnmf {

/// Strictly increasing set of positive lags used by the latent AR models.
/// An empty set is allowed and disables the temporal regularizer.
class LagSet {
 public:
  LagSet() = default;
  /// Sorts and validates; throws ConfigError on a non-positive or repeated lag.
  explicit LagSet(std::vector<int> lags);

  /// Parses a comma-separated list such as "1,2,12".
  static LagSet parse(std::string_view text);

  const std::vector<int>& lags() const noexcept { return lags_; }
  std::size_t size() const noexcept { return lags_.size(); }
  bool empty() const noexcept { return lags_.empty(); }
  /// Largest lag, 0 for the empty set.
  int max_lag() const noexcept { return lags_.empty() ? 0 : lags_.back(); }
  int operator[](std::size_t i) const { return lags_[i]; }

  std::string to_string() const;

  /// Throws ConfigError unless max_lag() < timestamps.
  void require_fits(long timestamps) const;

  friend bool operator==(const LagSet&, const LagSet&) = default;

 private:
  std::vector<int> lags_;
};

/// Lag sets shipped for the two public backbone datasets.
LagSet internet2_lags();
LagSet geant_lags();

}  // namespace ttnmf
