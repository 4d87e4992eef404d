#include "ttnmf/factor_core.hpp"

#include "ttnmf/errors.hpp"
#include "ttnmf/spectral.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <utility>

namespace ttnmf {

namespace {

void require_nonnegative(const Matrix& m, const char* name) {
  if ((m.array() < 0.0).any() || !m.allFinite())
    throw ConfigError(fmt::format("{} must be finite and entry-wise nonnegative", name));
}

}  // namespace

FactorModel::FactorModel(Matrix w, Matrix h, Matrix omega, LagSet lags,
                         const RoutingMatrix& routing)
    : w_(std::move(w)), h_(std::move(h)), omega_(std::move(omega)), lags_(std::move(lags)) {
  if (h_.rows() != w_.cols())
    throw ShapeError(fmt::format("W is {}x{} but H has {} rows", w_.rows(), w_.cols(), h_.rows()));
  if (omega_.rows() != w_.cols() || omega_.cols() != static_cast<Eigen::Index>(lags_.size()))
    throw ShapeError(fmt::format("Omega is {}x{}, expected {}x{}", omega_.rows(), omega_.cols(),
                                 w_.cols(), lags_.size()));
  if (routing.od_pairs() != w_.rows())
    throw ShapeError(fmt::format("routing has {} OD pairs but W has {} rows", routing.od_pairs(),
                                 w_.rows()));
  require_nonnegative(w_, "W");
  require_nonnegative(h_, "H");
  require_nonnegative(omega_, "Omega");
  compact_ = routing.entries() * w_;
}

void FactorModel::set_w(Matrix w, const RoutingMatrix& routing) {
  if (w.rows() != w_.rows() || w.cols() != w_.cols()) throw ShapeError("W update changes shape");
  w_ = std::move(w);
  compact_ = routing.entries() * w_;
}

void FactorModel::set_h(Matrix h) {
  if (h.rows() != h_.rows()) throw ShapeError("H update changes rank");
  h_ = std::move(h);
}

void FactorModel::set_omega(Matrix omega) {
  if (omega.rows() != omega_.rows() || omega.cols() != omega_.cols())
    throw ShapeError("Omega update changes shape");
  omega_ = std::move(omega);
}

// ---------------------------------------------------------------------------
// TemporalGraph

TemporalGraph::TemporalGraph(Eigen::Index timestamps, std::vector<int> offsets,
                             std::vector<Vector> bands, Vector degree_correction)
    : size_(timestamps),
      offsets_(std::move(offsets)),
      bands_(std::move(bands)),
      degree_(std::move(degree_correction)) {
  lap_diag_ = Vector::Zero(size_);
  for (std::size_t j = 0; j < offsets_.size(); ++j) {
    const Eigen::Index d = offsets_[j];
    const Vector& b = bands_[j];
    for (Eigen::Index t = 0; t < b.size(); ++t) {
      lap_diag_(t) += b(t);
      if (d > 0) lap_diag_(t + d) += b(t);
    }
  }
}

double TemporalGraph::weight(Eigen::Index t1, Eigen::Index t2) const {
  const Eigen::Index lo = std::min(t1, t2);
  const int d = static_cast<int>(std::abs(t2 - t1));
  const auto it = std::lower_bound(offsets_.begin(), offsets_.end(), d);
  if (it == offsets_.end() || *it != d) return 0.0;
  return bands_[static_cast<std::size_t>(it - offsets_.begin())](lo);
}

double TemporalGraph::laplacian(Eigen::Index t1, Eigen::Index t2) const {
  return t1 == t2 ? lap_diag_(t1) : -weight(t1, t2);
}

Vector TemporalGraph::apply_laplacian(const Eigen::Ref<const Vector>& h) const {
  Vector out = lap_diag_.cwiseProduct(h);
  for (std::size_t j = 0; j < offsets_.size(); ++j) {
    const Eigen::Index d = offsets_[j];
    if (d == 0) continue;
    const Vector& b = bands_[j];
    const Eigen::Index len = b.size();
    out.head(len).array() -= b.array() * h.segment(d, len).array();
    out.segment(d, len).array() -= b.array() * h.head(len).array();
  }
  return out;
}

Vector TemporalGraph::penalty_gradient(const Eigen::Ref<const Vector>& h) const {
  Vector g = 2.0 * apply_laplacian(h) + degree_.cwiseProduct(h);
  if (!offsets_.empty() && offsets_.front() == 0) g -= 2.0 * bands_.front().cwiseProduct(h);
  return g;
}

double TemporalGraph::penalty(const Eigen::Ref<const Vector>& h) const {
  // 0.5 * sum over ordered pairs counts each unordered pair twice.
  double value = 0.5 * degree_.dot(h.cwiseProduct(h));
  for (std::size_t j = 0; j < offsets_.size(); ++j) {
    const Eigen::Index d = offsets_[j];
    if (d == 0) continue;
    const Vector& b = bands_[j];
    const Eigen::Index len = b.size();
    value += (b.array() * (h.head(len) - h.segment(d, len)).array().square()).sum();
  }
  return value;
}

double TemporalGraph::laplacian_norm() const {
  if (size_ == 0) return 0.0;
  Vector row_abs = lap_diag_.cwiseAbs();
  for (std::size_t j = 0; j < offsets_.size(); ++j) {
    const Eigen::Index d = offsets_[j];
    if (d == 0) continue;
    const Vector& b = bands_[j];
    row_abs.head(b.size()) += b.cwiseAbs();
    row_abs.segment(d, b.size()) += b.cwiseAbs();
  }
  const double gershgorin = row_abs.maxCoeff();
  if (gershgorin == 0.0) return 0.0;
  return power_iteration_norm([this](const Vector& v) { return apply_laplacian(v); }, size_, 200,
                              1e-10, gershgorin);
}

double TemporalGraph::degree_norm() const {
  return size_ == 0 ? 0.0 : degree_.cwiseAbs().maxCoeff();
}

double TemporalGraph::hessian_norm() const {
  if (size_ == 0) return 0.0;
  Vector diag = 2.0 * lap_diag_ + degree_;
  if (!offsets_.empty() && offsets_.front() == 0) diag -= 2.0 * bands_.front();
  Vector row_abs = diag.cwiseAbs();
  for (std::size_t j = 0; j < offsets_.size(); ++j) {
    const Eigen::Index d = offsets_[j];
    if (d == 0) continue;
    const Vector& b = bands_[j];
    row_abs.head(b.size()) += 2.0 * b.cwiseAbs();
    row_abs.segment(d, b.size()) += 2.0 * b.cwiseAbs();
  }
  const double gershgorin = row_abs.maxCoeff();
  if (gershgorin == 0.0) return 0.0;
  return power_iteration_norm([this](const Vector& v) { return penalty_gradient(v); }, size_, 200,
                              1e-10, gershgorin);
}

Matrix TemporalGraph::dense_weights() const {
  Matrix s = Matrix::Zero(size_, size_);
  for (std::size_t j = 0; j < offsets_.size(); ++j) {
    const Eigen::Index d = offsets_[j];
    const Vector& b = bands_[j];
    for (Eigen::Index t = 0; t < b.size(); ++t) {
      s(t, t + d) = b(t);
      s(t + d, t) = b(t);
    }
  }
  return s;
}

Matrix TemporalGraph::dense_laplacian() const {
  Matrix lap = -dense_weights();
  lap.diagonal() = lap_diag_;
  return lap;
}

// ---------------------------------------------------------------------------

Matrix build_lag_design_matrix(const Matrix& h, Eigen::Index row, const LagSet& lags) {
  const Eigen::Index t_count = h.cols();
  lags.require_fits(t_count);
  const Eigen::Index max_lag = lags.max_lag();
  Matrix design = Matrix::Zero(static_cast<Eigen::Index>(lags.size()), t_count);
  const Eigen::Index len = t_count - max_lag;
  for (std::size_t q = 0; q < lags.size(); ++q) {
    design.row(static_cast<Eigen::Index>(q)).tail(len) =
        h.row(row).segment(max_lag - lags[q], len);
  }
  return design;
}

TemporalGraph build_temporal_graph(const Eigen::Ref<const Vector>& omega_row, const LagSet& lags,
                                   Eigen::Index timestamps) {
  if (omega_row.size() != static_cast<Eigen::Index>(lags.size()))
    throw ShapeError("AR weight row length differs from the lag count");
  if (lags.empty()) return TemporalGraph(timestamps, {}, {}, Vector::Zero(timestamps));
  lags.require_fits(timestamps);

  // Lags of L u {0} with their coefficients; the lag-0 coefficient is -1.
  std::vector<std::pair<int, double>> terms{{0, -1.0}};
  double coef_sum = -1.0;
  for (std::size_t j = 0; j < lags.size(); ++j) {
    terms.emplace_back(lags[j], omega_row(static_cast<Eigen::Index>(j)));
    coef_sum += omega_row(static_cast<Eigen::Index>(j));
  }
  const Eigen::Index max_lag = lags.max_lag();
  const Eigen::Index last = timestamps - 1;

  std::vector<int> offsets;
  for (const auto& [l1, c1] : terms)
    for (const auto& [l2, c2] : terms)
      if (l1 >= l2) offsets.push_back(l1 - l2);
  std::sort(offsets.begin(), offsets.end());
  offsets.erase(std::unique(offsets.begin(), offsets.end()), offsets.end());

  // S(t, t+d) = -1/2 sum over lag pairs (l, l - d) of c_l c_{l-d}, counted
  // once per anchor t + l that lies in the AR window [max_lag, T).
  std::vector<Vector> bands;
  bands.reserve(offsets.size());
  for (int d : offsets) {
    Vector band = Vector::Zero(timestamps - d);
    for (const auto& [l1, c1] : terms)
      for (const auto& [l2, c2] : terms) {
        if (l1 - l2 != d) continue;
        const double w = -0.5 * c1 * c2;
        const Eigen::Index lo = std::max<Eigen::Index>(0, max_lag - l1);
        const Eigen::Index hi = std::min<Eigen::Index>(band.size() - 1, last - l1);
        for (Eigen::Index t = lo; t <= hi; ++t) band(t) += w;
      }
    bands.push_back(std::move(band));
  }

  Vector degree = Vector::Zero(timestamps);
  for (const auto& [l, c] : terms) {
    const Eigen::Index lo = std::max<Eigen::Index>(0, max_lag - l);
    const Eigen::Index hi = last - l;
    for (Eigen::Index t = lo; t <= hi; ++t) degree(t) += c;
  }
  degree *= coef_sum;
  return TemporalGraph(timestamps, std::move(offsets), std::move(bands), std::move(degree));
}

Vector ar_residuals(const Eigen::Ref<const Vector>& h_row,
                    const Eigen::Ref<const Vector>& omega_row, const LagSet& lags) {
  if (lags.empty()) return Vector();
  const Eigen::Index t_count = h_row.size();
  lags.require_fits(t_count);
  const Eigen::Index max_lag = lags.max_lag();
  const Eigen::Index len = t_count - max_lag;
  Vector r = h_row.tail(len);
  for (std::size_t q = 0; q < lags.size(); ++q)
    r -= omega_row(static_cast<Eigen::Index>(q)) * h_row.segment(max_lag - lags[q], len);
  return r;
}

double temporal_penalty_value(const Matrix& h, const Matrix& omega, const LagSet& lags,
                              PenaltyForm form) {
  if (omega.rows() != h.rows() || omega.cols() != static_cast<Eigen::Index>(lags.size()))
    throw ShapeError(fmt::format("Omega is {}x{} but H has {} rows and there are {} lags",
                                 omega.rows(), omega.cols(), h.rows(), lags.size()));
  if (lags.empty()) return 0.0;
  double total = 0.0;
  for (Eigen::Index p = 0; p < h.rows(); ++p) {
    const Vector hp = h.row(p).transpose();
    const Vector wp = omega.row(p).transpose();
    switch (form) {
      case PenaltyForm::residual:
        total += 0.5 * ar_residuals(hp, wp, lags).squaredNorm();
        break;
      case PenaltyForm::laplacian:
        total += build_temporal_graph(wp, lags, h.cols()).penalty(hp);
        break;
      default:
        throw UsageError("unknown temporal penalty form");
    }
  }
  return total;
}

double ortho_penalty_value(const Matrix& compact_routing) {
  const Eigen::Index k = compact_routing.cols();
  return (compact_routing.transpose() * compact_routing - Matrix::Identity(k, k)).squaredNorm();
}

double objective_value(const Matrix& x, const FactorModel& model,
                       const RegularizationWeights& weights, const RoutingMatrix& routing) {
  if (x.rows() != model.od_pairs() || x.cols() != model.timestamps())
    throw ShapeError(fmt::format("X is {}x{} but the model is {}x{}", x.rows(), x.cols(),
                                 model.od_pairs(), model.timestamps()));
  if (routing.od_pairs() != model.od_pairs())
    throw ShapeError("routing and model disagree on the OD-pair count");
  double value = (x - model.w() * model.h()).squaredNorm();
  if (weights.lambda_h != 0.0)
    value += weights.lambda_h *
             temporal_penalty_value(model.h(), model.omega(), model.lags(), PenaltyForm::residual);
  if (weights.lambda_a != 0.0)
    value += weights.lambda_a * ortho_penalty_value(routing.entries() * model.w());
  return value;
}

}  // namespace ttnmf
