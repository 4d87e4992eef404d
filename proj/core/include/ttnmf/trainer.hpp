#pragma once

#include "ttnmf/errors.hpp"
#include "ttnmf/factor_core.hpp"
#include "ttnmf/lag_set.hpp"
#include "ttnmf/net_model.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace ttnmf {

enum class Block { w, h, omega };
enum class MissingMode { none, weighted_fill, em_mask };

/// Quantity a block update must not increase for a step to be accepted:
/// the block's share of the full objective, or the data fit ||X - W H||^2
/// alone. The fit test keeps the outer trace monotone but rejects most
/// regularizer-driven steps.
enum class RestartTest { objective, fit };

std::string to_string(MissingMode mode);
MissingMode parse_missing_mode(const std::string& text);
std::string to_string(RestartTest test);
RestartTest parse_restart_test(const std::string& text);

/// Iteration budget and early-stop threshold of one block update. The loop
/// stops once an accepted step improves the block error by less than
/// delta times the error on entry.
struct BlockLimits {
  int max_iterations = 10;
  double delta = 1e-3;
  /// Multiplies the Lipschitz constant; > 1 shortens steps.
  double step_safety = 1.0;
  RestartTest restart_test = RestartTest::objective;
};

struct TrainConfig {
  Eigen::Index rank = 20;
  LagSet lags;
  double beta_h = 0.2;
  double beta_a = 0.2;
  int q_max = 50;
  double delta = 1e-9;
  BlockLimits w_limits{10, 1e-3, 1.0};
  BlockLimits h_limits{10, 1e-3, 1.0};
  BlockLimits omega_limits{10, 1e-5, 1.0};
  MissingMode missing_mode = MissingMode::none;
  /// Applied to the W and H blocks (Omega's error is its objective share).
  RestartTest restart_test = RestartTest::objective;
  /// Outer iterations and relative stop threshold of the weighted fill.
  int fill_max_iterations = 300;
  double fill_delta = 1e-12;

  /// Throws ConfigError on invalid values for an n x T training matrix.
  void validate(Eigen::Index n, Eigen::Index t) const;
};

struct TrainReport {
  /// e(0), e(1), ...: data-fit error after each outer iteration (masked
  /// error in em_mask mode).
  std::vector<double> objective_trace;
  /// Full regularized objective after each outer iteration, with the
  /// penalty weights fixed at training start.
  std::vector<double> full_objective_trace;
  /// Milliseconds since the start of training at each trace entry.
  std::vector<double> wall_ms;
  /// Iterations spent in each block, one entry per outer iteration
  /// (Omega: summed over rows).
  std::vector<int> w_iterations;
  std::vector<int> h_iterations;
  std::vector<int> omega_iterations;
  RegularizationWeights weights;
  double wall_time_s = 0.0;
};

/// Raised when an iterate stops being finite; carries the last finite model.
class TrainingDiverged : public NumericalError {
 public:
  TrainingDiverged(const std::string& what, FactorModel last_finite)
      : NumericalError(what), last_finite_(std::move(last_finite)) {}
  const FactorModel& last_finite() const noexcept { return last_finite_; }

 private:
  FactorModel last_finite_;
};

/// lambda_h = beta_h ||X - W0 H0||^2 / sum_p ||h_p - w_p design_p||^2 and
/// lambda_A = beta_A ||X - W0 H0||^2 / ||C0^T C0 - I||_F^2 with C0 = A W0.
/// A denominator below 1e-15 times the numerator yields 0 and a warning.
RegularizationWeights tune_penalties(const Matrix& x, const Matrix& w0, const Matrix& h0,
                                     const Matrix& omega0, const LagSet& lags, double beta_h,
                                     double beta_a, const RoutingMatrix& routing);

/// Gradient of the full objective with respect to one block, the others
/// held fixed.
Matrix block_gradient(Block block, const Matrix& x, const FactorModel& model,
                      const RegularizationWeights& weights, const RoutingMatrix& routing);

/// Step-size denominator of a block.
///   W: 2 ||H H^T|| plus a local bound on the orthogonality curvature,
///   H: 2 ||W^T W|| + lambda_h max_p ||penalty Hessian of row p||,
///   Omega: max_p ||design_p design_p^T||.
/// A zero norm yields 1.
double block_lipschitz(Block block, const FactorModel& model, const RegularizationWeights& weights,
                       const RoutingMatrix& routing);

/// ||design_p design_p^T||, or 1 when the design is zero.
double lag_row_lipschitz(const Matrix& h, Eigen::Index row, const LagSet& lags);

/// Outcome of one restarted accelerated projected-gradient run.
struct DescentResult {
  Matrix point;
  double initial_error = 0.0;
  double final_error = 0.0;
  int iterations = 0;
  int restarts = 0;
};

/// Smooth block subproblem as seen by the accelerated solver.
struct DescentProblem {
  std::function<Matrix(const Matrix&)> gradient;
  std::function<double(const Matrix&)> error;
  double lipschitz = 1.0;
  /// Absolute early-stop threshold; when negative, delta times the initial
  /// error is used.
  double stop_threshold = -1.0;
};

/// (1 + sqrt(4 alpha^2 + 1)) / 2.
double next_momentum(double alpha);

/// Restarted Nesterov projected gradient on the nonnegative orthant.
///
/// Momentum follows alpha <- (1 + sqrt(4 alpha^2 + 1)) / 2 with the
/// extrapolation C = B + ((alpha_prev - 1) / alpha)(B - B_prev). A step
/// that increases the error is rejected and momentum is dropped; if a plain
/// projected step from the last accepted point also fails, the run ends. The
/// returned error is therefore never above the initial one.
DescentResult accelerated_projected_descent(const Matrix& start, const DescentProblem& problem,
                                            const BlockLimits& limits);

/// One FastGradientUpdate call on a block; returns the updated block.
Matrix fast_gradient_update(Block block, const Matrix& x, const FactorModel& model,
                            const RegularizationWeights& weights, const RoutingMatrix& routing,
                            const BlockLimits& limits, int* iterations = nullptr);

/// Alternating W, H, Omega training from the SVD seed.
std::pair<FactorModel, TrainReport> train(const TrafficMatrix& traffic,
                                          const RoutingMatrix& routing,
                                          const TrainConfig& config);

/// Replaces unobserved entries with a weighted rank-k factorization fitted
/// to the observed ones. Rows or columns without observations are filled
/// with zeros.
Matrix fill_missing_weighted(const Matrix& x, const Matrix& mask, Eigen::Index rank,
                             int max_iterations = 300, double delta = 1e-12);

/// M o X + (1 - M) o (W H).
Matrix em_mask_step(const Matrix& x, const Matrix& mask, const Matrix& w_prev,
                    const Matrix& h_prev);

}  // namespace ttnmf
