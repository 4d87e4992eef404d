#pragma once

#include "ttnmf/lag_set.hpp"
#include "ttnmf/net_model.hpp"

#include <Eigen/Dense>

#include <vector>

namespace ttnmf {

/// Learned factorization X ~ W H with per-row AR weights Omega, plus the
/// cached compact routing matrix A W.
class FactorModel {
 public:
  FactorModel() = default;
  /// Throws ShapeError on inconsistent shapes and ConfigError on negative
  /// entries.
  FactorModel(Matrix w, Matrix h, Matrix omega, LagSet lags, const RoutingMatrix& routing);

  const Matrix& w() const noexcept { return w_; }
  const Matrix& h() const noexcept { return h_; }
  const Matrix& omega() const noexcept { return omega_; }
  const LagSet& lags() const noexcept { return lags_; }
  /// A W, refreshed by every set_w().
  const Matrix& compact_routing() const noexcept { return compact_; }

  Eigen::Index rank() const noexcept { return w_.cols(); }
  Eigen::Index od_pairs() const noexcept { return w_.rows(); }
  Eigen::Index timestamps() const noexcept { return h_.cols(); }

  void set_w(Matrix w, const RoutingMatrix& routing);
  void set_h(Matrix h);
  void set_omega(Matrix omega);

 private:
  Matrix w_;
  Matrix h_;
  Matrix omega_;
  LagSet lags_;
  Matrix compact_;
};

struct RegularizationWeights {
  double lambda_h = 0.0;
  double lambda_a = 0.0;
  double beta_h = 0.0;
  double beta_a = 0.0;
};

/// Signed weighted graph over the timestamps of one latent row, induced by
/// its AR weights (with the lag-0 weight fixed at -1).
///
/// Storage is banded: S(t, t+d) is kept only for the displacements d >= 0 at
/// which some pair of lags in L u {0} differs by d. S is symmetric.
class TemporalGraph {
 public:
  TemporalGraph() = default;
  TemporalGraph(Eigen::Index timestamps, std::vector<int> offsets, std::vector<Vector> bands,
                Vector degree_correction);

  Eigen::Index timestamps() const noexcept { return size_; }
  /// Displacements d >= 0 with a stored band, ascending.
  const std::vector<int>& offsets() const noexcept { return offsets_; }
  /// band(j)(t) = S(t, t + offsets()[j]) for t in [0, T - offsets()[j]).
  const Vector& band(std::size_t j) const { return bands_[j]; }

  double weight(Eigen::Index t1, Eigen::Index t2) const;
  /// Diagonal correction D(t, t).
  const Vector& degree_correction() const noexcept { return degree_; }
  /// Laplacian entry: sum_t3 S(t1, t3) on the diagonal, -S(t1, t2) elsewhere.
  double laplacian(Eigen::Index t1, Eigen::Index t2) const;
  const Vector& laplacian_diagonal() const noexcept { return lap_diag_; }

  /// h * Lap as a row vector (Lap is symmetric).
  Vector apply_laplacian(const Eigen::Ref<const Vector>& h) const;
  /// Gradient of the row penalty with respect to h: h (Lap + Lap^T) - 2 h diag(S) + h D.
  Vector penalty_gradient(const Eigen::Ref<const Vector>& h) const;
  /// Value of the row penalty in Laplacian form.
  double penalty(const Eigen::Ref<const Vector>& h) const;

  /// Spectral norm of Lap, of D, and of the penalty Hessian
  /// 2 Lap - 2 diag(S) + D.
  double laplacian_norm() const;
  double degree_norm() const;
  double hessian_norm() const;

  /// Dense copies, for tests and small diagnostics only.
  Matrix dense_weights() const;
  Matrix dense_laplacian() const;

 private:
  Eigen::Index size_ = 0;
  std::vector<int> offsets_;
  std::vector<Vector> bands_;
  Vector degree_;
  Vector lap_diag_;
};

enum class PenaltyForm { laplacian, residual };

/// |L| x T matrix whose row q holds H(p, t - L_q) for t >= max lag and zero
/// elsewhere (0-based columns). Throws ConfigError when max lag >= T.
Matrix build_lag_design_matrix(const Matrix& h, Eigen::Index row, const LagSet& lags);

/// Temporal graph of one latent row given its AR weights.
TemporalGraph build_temporal_graph(const Eigen::Ref<const Vector>& omega_row, const LagSet& lags,
                                   Eigen::Index timestamps);

/// AR residuals H(p,t) - sum_l Omega(p,l) H(p,t-l) for t >= max lag.
Vector ar_residuals(const Eigen::Ref<const Vector>& h_row,
                    const Eigen::Ref<const Vector>& omega_row, const LagSet& lags);

/// Sum over rows of the temporal penalty. The residual form is
/// 0.5 * sum_p sum_{t >= L} residual^2 and is the authoritative one.
double temporal_penalty_value(const Matrix& h, const Matrix& omega, const LagSet& lags,
                              PenaltyForm form);

/// ||C^T C - I||_F^2.
double ortho_penalty_value(const Matrix& compact_routing);

/// ||X - W H||_F^2 + lambda_h * T(H, Omega) + lambda_A * I(A W).
double objective_value(const Matrix& x, const FactorModel& model,
                       const RegularizationWeights& weights, const RoutingMatrix& routing);

}  // namespace ttnmf
