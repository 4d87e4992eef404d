#include "ttnmf/init.hpp"

#include "ttnmf/errors.hpp"
#include "ttnmf/factor_core.hpp"
#include "ttnmf/spectral.hpp"

#include <fmt/format.h>

#include <cmath>

namespace ttnmf {

std::pair<Matrix, Matrix> init_factors_svd(const Matrix& x, Eigen::Index rank) {
  const Eigen::Index n = x.rows();
  const Eigen::Index t = x.cols();
  if (rank < 1 || rank > std::min(n, t))
    throw ConfigError(fmt::format("rank {} must lie in [1, {}]", rank, std::min(n, t)));
  if ((x.array() < 0.0).any()) throw ConfigError("initialization requires a nonnegative matrix");

  Matrix w = Matrix::Zero(n, rank);
  Matrix h = Matrix::Zero(rank, t);
  if (x.squaredNorm() == 0.0) return {w, h};

  Eigen::BDCSVD<Matrix> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& s = svd.singularValues();
  for (Eigen::Index j = 0; j < rank; ++j) {
    if (s(j) <= 0.0) break;
    Vector u = svd.matrixU().col(j);
    Vector v = svd.matrixV().col(j);
    Eigen::Index arg = 0;
    u.cwiseAbs().maxCoeff(&arg);
    if (u(arg) < 0.0) {
      u = -u;
      v = -v;
    }
    if (j == 0) {
      w.col(0) = u.cwiseAbs() * std::sqrt(s(0));
      h.row(0) = v.cwiseAbs().transpose() * std::sqrt(s(0));
      continue;
    }
    const Vector up = u.cwiseMax(0.0);
    const Vector un = (-u).cwiseMax(0.0);
    const Vector vp = v.cwiseMax(0.0);
    const Vector vn = (-v).cwiseMax(0.0);
    const double pos = up.norm() * vp.norm();
    const double neg = un.norm() * vn.norm();
    const bool take_pos = pos >= neg;
    const double mass = take_pos ? pos : neg;
    if (mass == 0.0) continue;
    const Vector& uu = take_pos ? up : un;
    const Vector& vv = take_pos ? vp : vn;
    const double scale = std::sqrt(s(j) * mass);
    w.col(j) = scale * uu / uu.norm();
    h.row(j) = scale * vv.transpose() / vv.norm();
  }

  // Optimal scalar rescaling of the product: never worse than W = H = 0.
  const Matrix wh = w * h;
  const double denom = wh.squaredNorm();
  if (denom > 0.0) {
    const double alpha = (x.array() * wh.array()).sum() / denom;
    const double root = std::sqrt(std::max(alpha, 0.0));
    w *= root;
    h *= root;
  }
  return {w, h};
}

Matrix init_lag_weights(const Matrix& h, const LagSet& lags) {
  Matrix omega = Matrix::Zero(h.rows(), static_cast<Eigen::Index>(lags.size()));
  if (lags.empty()) return omega;
  lags.require_fits(h.cols());
  for (Eigen::Index p = 0; p < h.rows(); ++p) {
    if (h.row(p).squaredNorm() == 0.0) continue;
    const Matrix design = build_lag_design_matrix(h, p, lags);
    omega.row(p) = row_least_squares(design, h.row(p).transpose()).cwiseMax(0.0).transpose();
  }
  return omega;
}

}  // namespace ttnmf
