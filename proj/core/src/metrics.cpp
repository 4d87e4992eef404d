#include "ttnmf/metrics.hpp"

#include "ttnmf/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace ttnmf {

std::vector<double> ErrorVector::defined() const {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(values.size()));
  for (Eigen::Index i = 0; i < values.size(); ++i)
    if (!std::isnan(values(i))) out.push_back(values(i));
  return out;
}

namespace {

void require_same_shape(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ShapeError(fmt::format("true matrix is {}x{} but the estimate is {}x{}", a.rows(),
                                 a.cols(), b.rows(), b.cols()));
}

ErrorVector ratio_of_norms(const Vector& diff_sq, const Vector& ref_sq) {
  ErrorVector out;
  out.values.resize(ref_sq.size());
  for (Eigen::Index i = 0; i < ref_sq.size(); ++i) {
    if (ref_sq(i) == 0.0) {
      out.values(i) = std::numeric_limits<double>::quiet_NaN();
      out.undefined_indices.push_back(i);
    } else {
      out.values(i) = std::sqrt(diff_sq(i)) / std::sqrt(ref_sq(i));
    }
  }
  return out;
}

}  // namespace

ErrorVector sre(const Matrix& x_true, const Matrix& x_est) {
  require_same_shape(x_true, x_est);
  return ratio_of_norms((x_est - x_true).rowwise().squaredNorm(), x_true.rowwise().squaredNorm());
}

ErrorVector tre(const Matrix& x_true, const Matrix& x_est) {
  require_same_shape(x_true, x_est);
  return ratio_of_norms((x_est - x_true).colwise().squaredNorm().transpose(),
                        x_true.colwise().squaredNorm().transpose());
}

SummaryStats summary_stats(const ErrorVector& errors) {
  std::vector<double> v = errors.defined();
  if (v.empty()) throw UsageError("no defined error values to summarize");
  std::sort(v.begin(), v.end());
  SummaryStats s;
  s.count = v.size();
  s.excluded = errors.undefined_indices.size();
  s.min = v.front();
  s.max = v.back();
  s.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  const std::size_t mid = v.size() / 2;
  s.median = v.size() % 2 == 1 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
  double ss = 0.0;
  for (double x : v) ss += (x - s.mean) * (x - s.mean);
  s.std = std::sqrt(ss / static_cast<double>(v.size()));
  return s;
}

std::vector<std::pair<double, double>> cdf_points(const ErrorVector& errors) {
  std::vector<double> v = errors.defined();
  if (v.empty()) throw UsageError("no defined error values for a CDF");
  std::sort(v.begin(), v.end());
  std::vector<std::pair<double, double>> out;
  const auto total = static_cast<double>(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i + 1 < v.size() && v[i + 1] == v[i]) continue;
    out.emplace_back(v[i], static_cast<double>(i + 1) / total);
  }
  return out;
}

}  // namespace ttnmf
