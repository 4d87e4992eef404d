#include "ttnmf/trainer.hpp"

#include "ttnmf/init.hpp"
#include "ttnmf/log.hpp"
#include "ttnmf/spectral.hpp"

#include <fmt/format.h>

#include <chrono>
#include <cmath>

namespace ttnmf {

std::string to_string(MissingMode mode) {
  switch (mode) {
    case MissingMode::none:
      return "none";
    case MissingMode::weighted_fill:
      return "weighted_fill";
    case MissingMode::em_mask:
      return "em_mask";
  }
  return "none";
}

std::string to_string(RestartTest test) {
  return test == RestartTest::fit ? "fit" : "objective";
}

RestartTest parse_restart_test(const std::string& text) {
  if (text == "objective") return RestartTest::objective;
  if (text == "fit") return RestartTest::fit;
  throw ConfigError(fmt::format("unknown restart test '{}'", text));
}

MissingMode parse_missing_mode(const std::string& text) {
  if (text == "none") return MissingMode::none;
  if (text == "weighted_fill") return MissingMode::weighted_fill;
  if (text == "em_mask") return MissingMode::em_mask;
  throw ConfigError(fmt::format("unknown missing mode '{}'", text));
}

void TrainConfig::validate(Eigen::Index n, Eigen::Index t) const {
  if (rank < 1) throw ConfigError(fmt::format("rank must be at least 1, got {}", rank));
  if (rank > std::min(n, t))
    throw ConfigError(fmt::format("rank {} exceeds min(n, T) = {}", rank, std::min(n, t)));
  if (!lags.empty()) lags.require_fits(t);
  // Zero betas switch a regularizer off (ablation runs).
  if (!(beta_h >= 0.0 && beta_h <= 1.0)) throw ConfigError("beta_h must lie in [0, 1]");
  if (!(beta_a >= 0.0 && beta_a <= 1.0)) throw ConfigError("beta_A must lie in [0, 1]");
  if (q_max < 1) throw ConfigError("q_max must be at least 1");
  if (!(delta > 0.0)) throw ConfigError("delta must be positive");
  for (const BlockLimits* b : {&w_limits, &h_limits, &omega_limits}) {
    if (b->max_iterations < 1) throw ConfigError("block iteration limits must be at least 1");
    if (!(b->delta > 0.0)) throw ConfigError("block thresholds must be positive");
    if (!(b->step_safety > 0.0)) throw ConfigError("step safety factor must be positive");
  }
  if (fill_max_iterations < 1) throw ConfigError("fill iterations must be at least 1");
}

namespace {

double lag_fit_error(const Matrix& h, const Matrix& omega, const LagSet& lags) {
  // Sum over rows of ||h_p - w_p design_p||^2, over the full row.
  if (lags.empty()) return 0.0;
  const Eigen::Index max_lag = lags.max_lag();
  double total = 0.0;
  for (Eigen::Index p = 0; p < h.rows(); ++p) {
    total += h.row(p).head(max_lag).squaredNorm();
    total += ar_residuals(h.row(p).transpose(), omega.row(p).transpose(), lags).squaredNorm();
  }
  return total;
}

double routing_norm_squared(const RoutingMatrix& routing) {
  const Matrix& a = routing.entries();
  const double frob = a.squaredNorm();
  if (frob == 0.0) return 0.0;
  return power_iteration_norm(
      [&a](const Vector& v) -> Vector { return a.transpose() * (a * v); }, a.cols(), 300, 1e-12,
      frob);
}

std::vector<TemporalGraph> build_graphs(const FactorModel& model) {
  std::vector<TemporalGraph> graphs;
  if (model.lags().empty()) return graphs;
  graphs.reserve(static_cast<std::size_t>(model.rank()));
  for (Eigen::Index p = 0; p < model.rank(); ++p)
    graphs.push_back(
        build_temporal_graph(model.omega().row(p).transpose(), model.lags(), model.timestamps()));
  return graphs;
}

Matrix temporal_gradient(const Matrix& h, const std::vector<TemporalGraph>& graphs) {
  Matrix g = Matrix::Zero(h.rows(), h.cols());
  for (std::size_t p = 0; p < graphs.size(); ++p) {
    const auto row = static_cast<Eigen::Index>(p);
    g.row(row) = graphs[p].penalty_gradient(h.row(row).transpose()).transpose();
  }
  return g;
}

Matrix ortho_gradient(const Matrix& a, const Matrix& w) {
  const Matrix c = a * w;
  const Eigen::Index k = w.cols();
  return 4.0 * (a.transpose() * c) * (c.transpose() * c - Matrix::Identity(k, k));
}

double ortho_curvature(const Matrix& compact, double a_norm_sq) {
  // Second directional derivative of ||C^T C - I||^2 is bounded by
  // (8 ||C||^2 + 4 ||C^T C - I||) ||E||^2; chain through C = A W.
  const Eigen::Index k = compact.cols();
  const Matrix gram = compact.transpose() * compact;
  const double c_sq = symmetric_spectral_norm(gram);
  const double g = symmetric_spectral_norm(gram - Matrix::Identity(k, k));
  return a_norm_sq * (8.0 * c_sq + 4.0 * g);
}

double max_graph_hessian(const std::vector<TemporalGraph>& graphs) {
  double best = 0.0;
  for (const auto& g : graphs) best = std::max(best, g.hessian_norm());
  return best;
}

double guard(double value) { return value > 0.0 ? value : 1.0; }

void check_finite(const Matrix& m, const char* block, int outer, const FactorModel& last) {
  if (!m.allFinite())
    throw TrainingDiverged(
        fmt::format("non-finite {} iterate at outer iteration {}", block, outer), last);
}

}  // namespace

RegularizationWeights tune_penalties(const Matrix& x, const Matrix& w0, const Matrix& h0,
                                     const Matrix& omega0, const LagSet& lags, double beta_h,
                                     double beta_a, const RoutingMatrix& routing) {
  RegularizationWeights out;
  out.beta_h = beta_h;
  out.beta_a = beta_a;
  const double fit = (x - w0 * h0).squaredNorm();

  const double den_h = lag_fit_error(h0, omega0, lags);
  if (lags.empty() || beta_h == 0.0) {
    out.lambda_h = 0.0;
  } else if (den_h < 1e-15 * fit || den_h == 0.0) {
    logger().warn("initial AR fit is exact; temporal penalty weight set to 0");
    out.lambda_h = 0.0;
  } else {
    out.lambda_h = beta_h * fit / den_h;
  }

  const Matrix c0 = routing.entries() * w0;
  const double den_a = ortho_penalty_value(c0);
  if (beta_a == 0.0) {
    out.lambda_a = 0.0;
  } else if (den_a < 1e-15 * fit || den_a == 0.0) {
    logger().warn("initial compact routing is orthonormal; orthogonality weight set to 0");
    out.lambda_a = 0.0;
  } else {
    out.lambda_a = beta_a * fit / den_a;
  }
  return out;
}

Matrix block_gradient(Block block, const Matrix& x, const FactorModel& model,
                      const RegularizationWeights& weights, const RoutingMatrix& routing) {
  const Matrix& w = model.w();
  const Matrix& h = model.h();
  switch (block) {
    case Block::w: {
      Matrix g = 2.0 * (w * (h * h.transpose()) - x * h.transpose());
      if (weights.lambda_a != 0.0) g += weights.lambda_a * ortho_gradient(routing.entries(), w);
      return g;
    }
    case Block::h: {
      Matrix g = 2.0 * ((w.transpose() * w) * h - w.transpose() * x);
      if (weights.lambda_h != 0.0) g += weights.lambda_h * temporal_gradient(h, build_graphs(model));
      return g;
    }
    case Block::omega: {
      Matrix g = Matrix::Zero(model.omega().rows(), model.omega().cols());
      if (model.lags().empty() || weights.lambda_h == 0.0) return g;
      for (Eigen::Index p = 0; p < model.rank(); ++p) {
        const Matrix design = build_lag_design_matrix(h, p, model.lags());
        g.row(p) = weights.lambda_h * (model.omega().row(p) * design * design.transpose() -
                                       h.row(p) * design.transpose());
      }
      return g;
    }
  }
  throw UsageError("unknown block");
}

double lag_row_lipschitz(const Matrix& h, Eigen::Index row, const LagSet& lags) {
  if (lags.empty()) return 1.0;
  const Matrix design = build_lag_design_matrix(h, row, lags);
  return guard(symmetric_spectral_norm(design * design.transpose()));
}

double block_lipschitz(Block block, const FactorModel& model, const RegularizationWeights& weights,
                       const RoutingMatrix& routing) {
  switch (block) {
    case Block::w: {
      double l = 2.0 * symmetric_spectral_norm(model.h() * model.h().transpose());
      if (weights.lambda_a != 0.0)
        l += weights.lambda_a * ortho_curvature(model.compact_routing(), routing_norm_squared(routing));
      return guard(l);
    }
    case Block::h: {
      double l = 2.0 * symmetric_spectral_norm(model.w().transpose() * model.w());
      if (weights.lambda_h != 0.0) l += weights.lambda_h * max_graph_hessian(build_graphs(model));
      return guard(l);
    }
    case Block::omega: {
      double l = 0.0;
      for (Eigen::Index p = 0; p < model.rank(); ++p)
        l = std::max(l, lag_row_lipschitz(model.h(), p, model.lags()));
      return guard(l);
    }
  }
  throw UsageError("unknown block");
}

double next_momentum(double alpha) { return 0.5 * (1.0 + std::sqrt(4.0 * alpha * alpha + 1.0)); }

DescentResult accelerated_projected_descent(const Matrix& start, const DescentProblem& problem,
                                            const BlockLimits& limits) {
  const double step = 1.0 / (problem.lipschitz * limits.step_safety);
  DescentResult out;
  Matrix current = start;  // last accepted iterate
  Matrix extrapolated = start;
  bool plain = true;  // extrapolated == current
  double alpha = 1.0;
  double alpha_prev = 1.0;
  double e_prev = problem.error(start);
  out.initial_error = e_prev;
  const double eps_min =
      problem.stop_threshold >= 0.0 ? problem.stop_threshold : limits.delta * e_prev;

  for (int q = 1; q <= limits.max_iterations; ++q) {
    out.iterations = q;
    alpha = next_momentum(alpha);
    Matrix next = (extrapolated - step * problem.gradient(extrapolated)).cwiseMax(0.0);
    const double e = problem.error(next);
    const double eps = e_prev - e;
    if (!(eps >= 0.0)) {
      // Error went up (or is NaN): drop momentum and retry from the last
      // accepted point; a failed plain step ends the run.
      if (plain) break;
      ++out.restarts;
      extrapolated = current;
      plain = true;
      alpha = 1.0;
      alpha_prev = 1.0;
      continue;
    }
    extrapolated = next + ((alpha_prev - 1.0) / alpha) * (next - current);
    plain = alpha_prev == 1.0;
    current = std::move(next);
    alpha_prev = alpha;
    e_prev = e;
    if (eps < eps_min) break;
  }
  out.point = std::move(current);
  out.final_error = e_prev;
  return out;
}

Matrix fast_gradient_update(Block block, const Matrix& x, const FactorModel& model,
                            const RegularizationWeights& weights, const RoutingMatrix& routing,
                            const BlockLimits& limits, int* iterations) {
  const Matrix& w = model.w();
  const Matrix& h = model.h();
  const Matrix& a = routing.entries();
  switch (block) {
    case Block::w: {
      const Matrix hht = h * h.transpose();
      const Matrix xht = x * h.transpose();
      const double lambda_a = weights.lambda_a;
      DescentProblem problem;
      problem.gradient = [&](const Matrix& wc) -> Matrix {
        Matrix g = 2.0 * (wc * hht - xht);
        if (lambda_a != 0.0) g += lambda_a * ortho_gradient(a, wc);
        return g;
      };
      const bool with_penalty = limits.restart_test == RestartTest::objective && lambda_a != 0.0;
      problem.error = [&](const Matrix& wc) {
        double e = (x - wc * h).squaredNorm();
        if (with_penalty) e += lambda_a * ortho_penalty_value(a * wc);
        return e;
      };
      problem.lipschitz = block_lipschitz(Block::w, model, weights, routing);
      DescentResult r = accelerated_projected_descent(w, problem, limits);
      if (iterations) *iterations = r.iterations;
      return std::move(r.point);
    }
    case Block::h: {
      const Matrix wtw = w.transpose() * w;
      const Matrix wtx = w.transpose() * x;
      const double lambda_h = weights.lambda_h;
      const std::vector<TemporalGraph> graphs =
          lambda_h != 0.0 ? build_graphs(model) : std::vector<TemporalGraph>{};
      DescentProblem problem;
      problem.gradient = [&](const Matrix& hc) -> Matrix {
        Matrix g = 2.0 * (wtw * hc - wtx);
        if (lambda_h != 0.0) g += lambda_h * temporal_gradient(hc, graphs);
        return g;
      };
      const bool with_penalty = limits.restart_test == RestartTest::objective && lambda_h != 0.0;
      problem.error = [&](const Matrix& hc) {
        double e = (x - w * hc).squaredNorm();
        if (with_penalty)
          for (std::size_t p = 0; p < graphs.size(); ++p)
            e += lambda_h * graphs[p].penalty(hc.row(static_cast<Eigen::Index>(p)).transpose());
        return e;
      };
      double l = 2.0 * symmetric_spectral_norm(wtw);
      if (lambda_h != 0.0) l += lambda_h * max_graph_hessian(graphs);
      problem.lipschitz = guard(l);
      DescentResult r = accelerated_projected_descent(h, problem, limits);
      if (iterations) *iterations = r.iterations;
      return std::move(r.point);
    }
    case Block::omega: {
      Matrix omega = model.omega();
      int total = 0;
      if (!model.lags().empty()) {
        for (Eigen::Index p = 0; p < model.rank(); ++p) {
          const Matrix design = build_lag_design_matrix(h, p, model.lags());
          const Matrix gram = design * design.transpose();
          const double l = symmetric_spectral_norm(gram);
          if (l == 0.0) continue;  // zero latent row: nothing to fit
          const Matrix target = h.row(p) * design.transpose();
          const Matrix hp = h.row(p);
          DescentProblem problem;
          problem.gradient = [&](const Matrix& wc) -> Matrix { return wc * gram - target; };
          problem.error = [&](const Matrix& wc) { return (hp - wc * design).squaredNorm(); };
          problem.lipschitz = l;
          DescentResult r = accelerated_projected_descent(omega.row(p), problem, limits);
          omega.row(p) = r.point;
          total += r.iterations;
        }
      }
      if (iterations) *iterations = total;
      return omega;
    }
  }
  throw UsageError("unknown block");
}

Matrix em_mask_step(const Matrix& x, const Matrix& mask, const Matrix& w_prev,
                    const Matrix& h_prev) {
  if (mask.rows() != x.rows() || mask.cols() != x.cols())
    throw ShapeError("mask and data shapes differ");
  if (w_prev.rows() != x.rows() || h_prev.cols() != x.cols() || w_prev.cols() != h_prev.rows())
    throw ShapeError("factor shapes do not match the data");
  const Matrix wh = w_prev * h_prev;
  return (mask.array() * x.array() + (1.0 - mask.array()) * wh.array()).matrix();
}

namespace {

Matrix mean_filled(const Matrix& x, const Matrix& mask) {
  Matrix out = x;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double count = mask.row(i).sum();
    const double mean =
        count > 0.0 ? (mask.row(i).array() * x.row(i).array()).sum() / count : 0.0;
    for (Eigen::Index t = 0; t < x.cols(); ++t)
      if (mask(i, t) == 0.0) out(i, t) = mean;
  }
  return out;
}

}  // namespace

Matrix fill_missing_weighted(const Matrix& x, const Matrix& mask, Eigen::Index rank,
                             int max_iterations, double delta) {
  if (mask.rows() != x.rows() || mask.cols() != x.cols())
    throw ShapeError("mask and data shapes differ");
  if ((mask.array() == 1.0).all()) return x;

  const Matrix seed = mean_filled(x, mask);
  auto [w, h] = init_factors_svd(seed, rank);
  const Matrix mx = mask.cwiseProduct(x);
  auto masked_error = [&](const Matrix& wc, const Matrix& hc) {
    return (mask.array() * (x - wc * hc).array()).matrix().squaredNorm();
  };

  const BlockLimits inner{10, 1e-6, 1.0};
  double e_prev = masked_error(w, h);
  const double eps_min = delta * e_prev;
  for (int q = 0; q < max_iterations; ++q) {
    {
      DescentProblem problem;
      problem.gradient = [&](const Matrix& wc) -> Matrix {
        return 2.0 * ((mask.array() * (wc * h).array()).matrix() - mx) * h.transpose();
      };
      problem.error = [&](const Matrix& wc) { return masked_error(wc, h); };
      problem.lipschitz = guard(2.0 * symmetric_spectral_norm(h * h.transpose()));
      w = accelerated_projected_descent(w, problem, inner).point;
    }
    {
      DescentProblem problem;
      problem.gradient = [&](const Matrix& hc) -> Matrix {
        return 2.0 * w.transpose() * ((mask.array() * (w * hc).array()).matrix() - mx);
      };
      problem.error = [&](const Matrix& hc) { return masked_error(w, hc); };
      problem.lipschitz = guard(2.0 * symmetric_spectral_norm(w.transpose() * w));
      h = accelerated_projected_descent(h, problem, inner).point;
    }
    if (!w.allFinite() || !h.allFinite()) throw NumericalError("weighted fill diverged");
    const double e = masked_error(w, h);
    const double eps = e_prev - e;
    e_prev = e;
    if (eps < eps_min) break;
  }

  Matrix filled = em_mask_step(x, mask, w, h).cwiseMax(0.0);
  Eigen::Index empty_rows = 0;
  Eigen::Index empty_cols = 0;
  for (Eigen::Index i = 0; i < mask.rows(); ++i)
    if (mask.row(i).sum() == 0.0) {
      filled.row(i).setZero();
      ++empty_rows;
    }
  for (Eigen::Index t = 0; t < mask.cols(); ++t)
    if (mask.col(t).sum() == 0.0) {
      filled.col(t).setZero();
      ++empty_cols;
    }
  if (empty_rows + empty_cols > 0)
    logger().warn("weighted fill: {} row(s) and {} column(s) without observations set to 0",
                  empty_rows, empty_cols);
  return filled;
}

std::pair<FactorModel, TrainReport> train(const TrafficMatrix& traffic,
                                          const RoutingMatrix& routing,
                                          const TrainConfig& config) {
  const auto clock_start = std::chrono::steady_clock::now();
  auto elapsed_ms = [&] {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                     clock_start)
        .count();
  };

  const Eigen::Index n = traffic.od_pairs();
  const Eigen::Index t = traffic.timestamps();
  config.validate(n, t);
  if (routing.od_pairs() != n)
    throw ShapeError(fmt::format("routing has {} OD pairs but traffic has {} rows",
                                 routing.od_pairs(), n));

  const bool has_gaps = traffic.mask() && (traffic.mask()->array() == 0.0).any();
  const Matrix ones = Matrix::Ones(n, t);
  const Matrix& mask = traffic.mask() ? *traffic.mask() : ones;
  Matrix x = traffic.entries();
  bool use_em = false;
  if (has_gaps) {
    switch (config.missing_mode) {
      case MissingMode::none:
        logger().warn("traffic has unobserved entries but missing mode is none; using raw values");
        break;
      case MissingMode::weighted_fill:
        x = fill_missing_weighted(x, mask, config.rank, config.fill_max_iterations,
                                  config.fill_delta);
        break;
      case MissingMode::em_mask:
        x = mean_filled(x, mask);
        use_em = true;
        break;
    }
  }
  if (!x.allFinite() || (x.array() < 0.0).any())
    throw ParseError("training data must be finite and nonnegative");

  auto [w0, h0] = init_factors_svd(x, config.rank);
  Matrix omega0 = init_lag_weights(h0, config.lags);
  TrainReport report;
  report.weights = tune_penalties(x, w0, h0, omega0, config.lags, config.beta_h, config.beta_a,
                                  routing);
  logger().info("penalties: lambda_h = {:.6g}, lambda_A = {:.6g}", report.weights.lambda_h,
                report.weights.lambda_a);

  FactorModel model(std::move(w0), std::move(h0), std::move(omega0), config.lags, routing);
  auto fit_error = [&](const Matrix& data) {
    if (use_em)
      return (mask.array() * (data - model.w() * model.h()).array()).matrix().squaredNorm();
    return (data - model.w() * model.h()).squaredNorm();
  };

  double e_prev = fit_error(use_em ? traffic.entries() : x);
  report.objective_trace.push_back(e_prev);
  report.full_objective_trace.push_back(objective_value(x, model, report.weights, routing));
  report.wall_ms.push_back(elapsed_ms());
  const double eps_min = config.delta * e_prev;
  BlockLimits w_limits = config.w_limits;
  BlockLimits h_limits = config.h_limits;
  w_limits.restart_test = config.restart_test;
  h_limits.restart_test = config.restart_test;

  for (int q = 1; q <= config.q_max; ++q) {
    const Matrix xq = use_em ? em_mask_step(traffic.entries(), mask, model.w(), model.h()) : x;
    int iw = 0;
    int ih = 0;
    int io = 0;

    Matrix w = fast_gradient_update(Block::w, xq, model, report.weights, routing,
                                    w_limits, &iw);
    check_finite(w, "W", q, model);
    model.set_w(std::move(w), routing);

    Matrix h = fast_gradient_update(Block::h, xq, model, report.weights, routing,
                                    h_limits, &ih);
    check_finite(h, "H", q, model);
    model.set_h(std::move(h));

    Matrix omega = fast_gradient_update(Block::omega, xq, model, report.weights, routing,
                                        config.omega_limits, &io);
    check_finite(omega, "Omega", q, model);
    model.set_omega(std::move(omega));

    report.w_iterations.push_back(iw);
    report.h_iterations.push_back(ih);
    report.omega_iterations.push_back(io);

    const double e = fit_error(use_em ? traffic.entries() : x);
    report.objective_trace.push_back(e);
    report.full_objective_trace.push_back(objective_value(xq, model, report.weights, routing));
    report.wall_ms.push_back(elapsed_ms());
    const double eps = e_prev - e;
    e_prev = e;
    logger().debug("iteration {}: e = {:.10g}", q, e);
    if (!(eps < 0.0 || eps >= eps_min)) break;
  }

  report.wall_time_s = elapsed_ms() / 1000.0;
  return {std::move(model), std::move(report)};
}

}  // namespace ttnmf
