#include "ttnmf/lag_set.hpp"

#include "ttnmf/errors.hpp"

#include <fmt/format.h>
#include <fmt/ranges.h>

#include <algorithm>
#include <charconv>

namespace ttnmf {

LagSet::LagSet(std::vector<int> lags) : lags_(std::move(lags)) {
  std::sort(lags_.begin(), lags_.end());
  for (std::size_t i = 0; i < lags_.size(); ++i) {
    if (lags_[i] < 1) throw ConfigError(fmt::format("lag {} is not a positive integer", lags_[i]));
    if (i > 0 && lags_[i] == lags_[i - 1])
      throw ConfigError(fmt::format("lag {} is repeated", lags_[i]));
  }
}

LagSet LagSet::parse(std::string_view text) {
  std::vector<int> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = std::min(text.find(',', pos), text.size());
    std::string_view token = text.substr(pos, comma - pos);
    while (!token.empty() && token.front() == ' ') token.remove_prefix(1);
    while (!token.empty() && token.back() == ' ') token.remove_suffix(1);
    if (!token.empty()) {
      int value = 0;
      const auto [end, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
      if (ec != std::errc{} || end != token.data() + token.size())
        throw ConfigError(fmt::format("lag '{}' is not an integer", token));
      out.push_back(value);
    } else if (comma < text.size()) {
      throw ConfigError(fmt::format("empty entry in lag list '{}'", text));
    }
    pos = comma + 1;
  }
  return LagSet(std::move(out));
}

std::string LagSet::to_string() const { return fmt::format("{}", fmt::join(lags_, ",")); }

void LagSet::require_fits(long timestamps) const {
  if (max_lag() >= timestamps)
    throw ConfigError(fmt::format("largest lag {} must be smaller than the number of timestamps {}",
                                  max_lag(), timestamps));
}

LagSet internet2_lags() { return LagSet({1, 2, 3, 12, 24, 96, 102, 108, 288}); }
LagSet geant_lags() { return LagSet({1, 4, 8, 32, 34, 36, 96}); }

}  // namespace ttnmf
