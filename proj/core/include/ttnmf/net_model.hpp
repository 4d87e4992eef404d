#pragma once

#include "ttnmf/lag_set.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <utility>

namespace ttnmf {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Binary m x n incidence of OD paths onto links: entry (i, j) is 1 iff the
/// path of OD pair j uses link i.
class RoutingMatrix {
 public:
  RoutingMatrix() = default;
  /// Throws ParseError if any entry is not exactly 0 or 1. All-zero columns
  /// only produce a warning.
  explicit RoutingMatrix(Matrix entries);

  const Matrix& entries() const noexcept { return entries_; }
  Eigen::Index links() const noexcept { return entries_.rows(); }
  Eigen::Index od_pairs() const noexcept { return entries_.cols(); }
  /// Number of links each OD pair traverses.
  Vector path_lengths() const { return entries_.colwise().sum().transpose(); }

 private:
  Matrix entries_;
};

/// n x T nonnegative OD flows, optionally with a binary observation mask
/// (1 = observed). Unobserved entries are not validated.
class TrafficMatrix {
 public:
  TrafficMatrix() = default;
  explicit TrafficMatrix(Matrix entries, std::optional<Matrix> mask = std::nullopt);

  const Matrix& entries() const noexcept { return entries_; }
  const std::optional<Matrix>& mask() const noexcept { return mask_; }
  Eigen::Index od_pairs() const noexcept { return entries_.rows(); }
  Eigen::Index timestamps() const noexcept { return entries_.cols(); }

 private:
  Matrix entries_;
  std::optional<Matrix> mask_;
};

/// m x T nonnegative link loads.
class LinkFlowMatrix {
 public:
  LinkFlowMatrix() = default;
  explicit LinkFlowMatrix(Matrix entries);

  const Matrix& entries() const noexcept { return entries_; }
  Eigen::Index links() const noexcept { return entries_.rows(); }
  Eigen::Index timestamps() const noexcept { return entries_.cols(); }

 private:
  Matrix entries_;
};

struct SyntheticScenario {
  RoutingMatrix routing;
  TrafficMatrix traffic;
  int planted_rank = 0;
  LagSet planted_lags;
  double noise_level = 0.0;
  std::uint64_t seed = 0;
  // Ground-truth factors, kept for diagnostics and tests.
  Matrix w_true;
  Matrix h_true;
};

/// Knobs of the synthetic generator that are not part of the scenario
/// identity. Defaults are what the CLI and tests use.
struct SynthOptions {
  double edge_probability = 0.5;
  /// Sum of the planted AR weights of each latent row; < 1 keeps rows stable.
  double ar_mass = 0.85;
  /// Relative innovation scale of the planted AR processes.
  double innovation = 0.25;
  /// Off-support leakage bound for W_true entries.
  double leakage = 0.05;
  /// Fraction of entries left unobserved in the generated mask (0 = no mask).
  double missing_fraction = 0.0;
};

/// Y = A X. Throws ShapeError when A's column count differs from X's rows.
LinkFlowMatrix compute_link_flows(const RoutingMatrix& routing, const TrafficMatrix& traffic);

/// Builds a seeded planted scenario: Erdos-Renyi router graph (retried until
/// connected), hop-count shortest-path routing with lowest-index tie-break,
/// one ingress and one egress link per router, OD pairs = ordered pairs of
/// distinct routers, AR-generated latent rows and near-disjoint W_true.
SyntheticScenario generate_synthetic(int n_routers, int planted_rank, int timestamps,
                                     const LagSet& planted_lags, double noise_level,
                                     std::uint64_t seed, const SynthOptions& options = {});

/// Contiguous prefix/suffix split at column train_t.
std::pair<TrafficMatrix, TrafficMatrix> split_train_test(const TrafficMatrix& traffic,
                                                         Eigen::Index train_t);

}  // namespace ttnmf
