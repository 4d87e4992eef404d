#pragma once

#include "ttnmf/factor_core.hpp"
#include "ttnmf/net_model.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>

namespace ttnmf {

/// A trained model with everything needed to estimate from link flows.
///
/// On disk: a text header of "key value" lines closed by "end", followed by
/// W, H, Omega and the routing matrix, each as little-endian u64 rows, u64
/// cols and rows*cols little-endian IEEE-754 doubles in row-major order.
struct ModelArchive {
  static constexpr int kFormatVersion = 1;

  FactorModel model;
  RoutingMatrix routing;
  RegularizationWeights weights;
  std::uint64_t config_hash = 0;
  std::uint64_t traffic_checksum = 0;
  std::uint64_t routing_checksum = 0;
};

void write_archive(std::ostream& out, const ModelArchive& archive);
ModelArchive read_archive(std::istream& in);

void save_archive(const std::filesystem::path& path, const ModelArchive& archive);
/// Throws ParseError on a malformed or unsupported file.
ModelArchive load_archive(const std::filesystem::path& path);

}  // namespace ttnmf
