#include "ttnmf/estimator.hpp"

#include "ttnmf/errors.hpp"
#include "ttnmf/log.hpp"
#include "ttnmf/spectral.hpp"
#include "ttnmf/trainer.hpp"

#include <fmt/format.h>

namespace ttnmf {

namespace {
constexpr double kLoadFloor = 1e-12;
}

void EstimatorConfig::validate() const {
  if (q_max_gd < 1 || r_max_em < 0) throw ConfigError("estimator iteration limits must be positive");
  if (!(delta_gd > 0.0) || !(delta_em > 0.0))
    throw ConfigError("estimator thresholds must be positive");
}

Vector estimate_latent(const Eigen::Ref<const Vector>& y, const FactorModel& model,
                       const EstimatorConfig& config) {
  const Matrix& c = model.compact_routing();
  if (y.size() != c.rows())
    throw ShapeError(fmt::format("link-flow vector has {} entries but the model has {} links",
                                 y.size(), c.rows()));
  const Eigen::Index k = c.cols();
  if (c.squaredNorm() == 0.0) {
    logger().warn("compact routing matrix is zero; latent estimate set to 0");
    return Vector::Zero(k);
  }
  if (y.squaredNorm() == 0.0) return Vector::Zero(k);

  const Vector seed = (c.transpose() * y).cwiseMax(0.0);
  const Matrix gram = c.transpose() * c;
  const Vector cty = c.transpose() * y;

  DescentProblem problem;
  problem.gradient = [&](const Matrix& h) -> Matrix { return 2.0 * (gram * h - cty); };
  problem.error = [&](const Matrix& h) { return (y - c * h).squaredNorm(); };
  problem.lipschitz = 2.0 * symmetric_spectral_norm(gram);
  problem.stop_threshold = config.delta_gd * y.squaredNorm();
  const BlockLimits limits{config.q_max_gd, config.delta_gd, 1.0};
  return accelerated_projected_descent(seed, problem, limits).point;
}

Vector refine_em(const Eigen::Ref<const Vector>& x0, const Eigen::Ref<const Vector>& y,
                 const RoutingMatrix& routing, const EstimatorConfig& config) {
  const Matrix& a = routing.entries();
  if (x0.size() != a.cols() || y.size() != a.rows())
    throw ShapeError(fmt::format("EM expects {} OD flows and {} link loads, got {} and {}",
                                 a.cols(), a.rows(), x0.size(), y.size()));
  const Vector colsum = a.colwise().sum().transpose();
  const double threshold = config.delta_em * x0.squaredNorm();

  Vector x = x0.cwiseMax(0.0);
  Vector next(x.size());
  Vector ratio(a.rows());
  bool warned = false;
  for (int r = 1; r <= config.r_max_em; ++r) {
    const Vector load = a * x;
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      if (y(i) == 0.0) {
        ratio(i) = 0.0;
      } else if (load(i) > 0.0) {
        ratio(i) = y(i) / load(i);
      } else {
        if (!warned) {
          logger().info("EM: link {} carries load {} but the estimate routes nothing on it", i + 1,
                        y(i));
          warned = true;
        }
        ratio(i) = y(i) / kLoadFloor;
      }
    }
    const Vector back = a.transpose() * ratio;
    for (Eigen::Index j = 0; j < x.size(); ++j)
      next(j) = colsum(j) > 0.0 ? x(j) * back(j) / colsum(j) : x(j);
    const double change = (next - x).squaredNorm();
    x.swap(next);
    if (change < threshold || change == 0.0) break;
  }
  return x;
}

Vector estimate_od_flow(const Eigen::Ref<const Vector>& y, const FactorModel& model,
                        const RoutingMatrix& routing, const EstimatorConfig& config) {
  if (routing.od_pairs() != model.od_pairs() || routing.links() != model.compact_routing().rows())
    throw ShapeError("routing matrix does not match the model");
  const Vector h = estimate_latent(y, model, config);
  const Vector x0 = (model.w() * h).cwiseMax(0.0);
  return refine_em(x0, y, routing, config);
}

Matrix estimate_window(const LinkFlowMatrix& links, const FactorModel& model,
                       const RoutingMatrix& routing, const EstimatorConfig& config) {
  if (links.links() != routing.links())
    throw ShapeError(fmt::format("link-flow matrix has {} links but the routing matrix has {}",
                                 links.links(), routing.links()));
  Matrix out(model.od_pairs(), links.timestamps());
  for (Eigen::Index t = 0; t < links.timestamps(); ++t)
    out.col(t) = estimate_od_flow(links.entries().col(t), model, routing, config);
  return out;
}

}  // namespace ttnmf
