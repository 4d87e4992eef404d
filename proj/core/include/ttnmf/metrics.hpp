#pragma once

#include "ttnmf/net_model.hpp"

#include <utility>
#include <vector>

namespace ttnmf {

/// Per-flow (SRE) or per-timestamp (TRE) relative errors. Entries whose
/// reference norm is zero are undefined: their value is stored as NaN and
/// their index listed in undefined_indices.
struct ErrorVector {
  Vector values;
  std::vector<Eigen::Index> undefined_indices;

  /// Values at defined indices, in index order.
  std::vector<double> defined() const;
};

struct SummaryStats {
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
  double median = 0.0;
  /// Population standard deviation.
  double std = 0.0;
  std::size_t count = 0;
  std::size_t excluded = 0;
};

/// SRE(i) = ||Xhat(i,:) - X(i,:)|| / ||X(i,:)||.
ErrorVector sre(const Matrix& x_true, const Matrix& x_est);
/// TRE(t) = ||Xhat(:,t) - X(:,t)|| / ||X(:,t)||.
ErrorVector tre(const Matrix& x_true, const Matrix& x_est);

/// Throws UsageError when no value is defined.
SummaryStats summary_stats(const ErrorVector& errors);

/// Empirical CDF over the defined values: distinct values ascending with
/// the fraction of values <= each one.
std::vector<std::pair<double, double>> cdf_points(const ErrorVector& errors);

}  // namespace ttnmf
