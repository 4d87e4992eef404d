#pragma once

#include <Eigen/Dense>

#include <functional>

namespace ttnmf {

/// Largest eigenvalue magnitude of a small symmetric matrix (exact, via a
/// self-adjoint eigensolver).
double symmetric_spectral_norm(const Eigen::MatrixXd& sym);

/// Power-iteration estimate of the spectral norm of a symmetric operator
/// given only through its matrix-vector product. The start vector is fixed,
/// so the result is deterministic. An upper bound, when known (e.g. a
/// Gershgorin bound), caps the estimate after a safety inflation.
double power_iteration_norm(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& apply,
                            Eigen::Index dim, int max_iterations = 200,
                            double tolerance = 1e-10, double upper_bound = -1.0);

/// Minimum-norm least-squares solution of x * design = target for a row
/// vector x, with singular values below rcond * sigma_max treated as zero.
Eigen::VectorXd row_least_squares(const Eigen::MatrixXd& design,
                                  const Eigen::Ref<const Eigen::VectorXd>& target,
                                  double rcond = 1e-12);

}  // namespace ttnmf
