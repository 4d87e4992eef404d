#pragma once

#include "ttnmf/factor_core.hpp"
#include "ttnmf/net_model.hpp"

namespace ttnmf {

struct EstimatorConfig {
  int q_max_gd = 200;
  int r_max_em = 200;
  double delta_gd = 1e-3;
  double delta_em = 1e-9;

  void validate() const;
};

/// Latent flow for one link-flow vector: seed C^T y, then restarted
/// projected Nesterov steps on ||y - C h||^2 with C = A W. The result is
/// never worse than the seed.
Vector estimate_latent(const Eigen::Ref<const Vector>& y, const FactorModel& model,
                       const EstimatorConfig& config);

/// Vardi EM refinement of an OD-flow vector against observed link loads.
Vector refine_em(const Eigen::Ref<const Vector>& x0, const Eigen::Ref<const Vector>& y,
                 const RoutingMatrix& routing, const EstimatorConfig& config);

/// Full per-timestamp pipeline: latent estimate, W h, then EM.
Vector estimate_od_flow(const Eigen::Ref<const Vector>& y, const FactorModel& model,
                        const RoutingMatrix& routing, const EstimatorConfig& config);

/// Column-by-column estimate over a link-flow window (m x T) -> n x T.
Matrix estimate_window(const LinkFlowMatrix& links, const FactorModel& model,
                       const RoutingMatrix& routing, const EstimatorConfig& config);

}  // namespace ttnmf
