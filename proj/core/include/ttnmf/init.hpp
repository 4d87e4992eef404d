#pragma once

#include "ttnmf/lag_set.hpp"
#include "ttnmf/net_model.hpp"

#include <utility>

namespace ttnmf {

/// Deterministic SVD-based nonnegative seeding of W (n x k) and H (k x T).
///
/// The leading singular pair contributes |u1| sqrt(s1) and |v1| sqrt(s1).
/// Every further pair is split into positive and negative parts and the part
/// pair with the larger norm product is kept, scaled by sqrt(s * norm
/// product). A final scalar correction makes ||X - W H||_F <= ||X||_F hold.
/// Singular vector signs are fixed so that the largest-magnitude entry of
/// each left vector is positive.
std::pair<Matrix, Matrix> init_factors_svd(const Matrix& x, Eigen::Index rank);

/// Projected least-squares AR fit of each latent row against its own lagged
/// copies: Omega0(p, :) = max(0, h_p * pinv(design_p)).
Matrix init_lag_weights(const Matrix& h, const LagSet& lags);

}  // namespace ttnmf
