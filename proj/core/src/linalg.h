#pragma once

// Internal numerics shared by AU inversion. Eigen stays out of public headers.

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "ocular/geometry.h"

namespace ocular::detail {

struct RigidTransform {
  Mat3 rotation = Mat3::identity();
  Vec3 translation;
};

/// Least-squares rotation + translation taking `source` onto `target`
/// (orthogonal Procrustes with reflection correction).
RigidTransform kabsch(std::span<const Vec3> source, std::span<const Vec3> target);

struct NnlsResult {
  Eigen::VectorXd x;
  bool converged = true;
};

/// Lawson-Hanson active-set solver for min ||A x - b|| subject to x >= 0.
NnlsResult nnls(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, int max_iterations = 0);

}  // namespace ocular::detail
