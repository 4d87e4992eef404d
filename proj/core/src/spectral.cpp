#include "ttnmf/spectral.hpp"

#include <algorithm>
#include <cmath>

namespace ttnmf {

double symmetric_spectral_norm(const Eigen::MatrixXd& sym) {
  if (sym.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().cwiseAbs().maxCoeff();
}

double power_iteration_norm(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& apply,
                            Eigen::Index dim, int max_iterations, double tolerance,
                            double upper_bound) {
  if (dim == 0) return 0.0;
  // Deterministic, non-symmetric start so that no eigenvector is orthogonal
  // to it by construction.
  Eigen::VectorXd v(dim);
  for (Eigen::Index i = 0; i < dim; ++i) v(i) = 1.0 + 0.37 * std::sin(1.0 + static_cast<double>(i));
  v.normalize();

  double estimate = 0.0;
  for (int it = 0; it < max_iterations; ++it) {
    // Iterate with the square of the operator: convergence to the largest
    // magnitude is then monotone even with eigenvalues of both signs.
    Eigen::VectorXd w = apply(apply(v));
    const double norm = w.norm();
    if (norm == 0.0) return 0.0;
    const double next = std::sqrt(norm);
    v = w / norm;
    if (std::abs(next - estimate) <= tolerance * next) {
      estimate = next;
      break;
    }
    estimate = next;
  }
  // Power iteration approaches from below; inflate slightly.
  estimate *= 1.01;
  if (upper_bound > 0.0) estimate = std::min(estimate, upper_bound);
  return estimate;
}

Eigen::VectorXd row_least_squares(const Eigen::MatrixXd& design,
                                  const Eigen::Ref<const Eigen::VectorXd>& target,
                                  double rcond) {
  // x * D = y  <=>  D^T x^T = y^T
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(design.transpose(),
                                        Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  Eigen::VectorXd x = Eigen::VectorXd::Zero(design.rows());
  if (s.size() == 0 || s(0) == 0.0) return x;
  const double cutoff = rcond * s(0);
  const Eigen::VectorXd uty = svd.matrixU().transpose() * target;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > cutoff) x += svd.matrixV().col(i) * (uty(i) / s(i));
  }
  return x;
}

}  // namespace ttnmf
