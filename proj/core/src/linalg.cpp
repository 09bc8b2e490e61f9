#include "linalg.h"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>

namespace ocular::detail {

RigidTransform kabsch(std::span<const Vec3> source, std::span<const Vec3> target) {
  if (source.size() != target.size() || source.empty()) {
    throw std::invalid_argument("kabsch: point sets must be non-empty and equal in size");
  }
  const auto n = static_cast<Eigen::Index>(source.size());
  Eigen::Matrix3Xd p(3, n), q(3, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& s = source[static_cast<std::size_t>(i)];
    const auto& t = target[static_cast<std::size_t>(i)];
    p.col(i) << s.x, s.y, s.z;
    q.col(i) << t.x, t.y, t.z;
  }
  const Eigen::Vector3d pc = p.rowwise().mean();
  const Eigen::Vector3d qc = q.rowwise().mean();
  const Eigen::Matrix3d h = (p.colwise() - pc) * (q.colwise() - qc).transpose();

  Eigen::JacobiSVD<Eigen::Matrix3d> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d d = Eigen::Matrix3d::Identity();
  if ((svd.matrixV() * svd.matrixU().transpose()).determinant() < 0.0) d(2, 2) = -1.0;
  const Eigen::Matrix3d r = svd.matrixV() * d * svd.matrixU().transpose();
  const Eigen::Vector3d t = qc - r * pc;

  RigidTransform out;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) out.rotation(i, j) = r(i, j);
  out.translation = {t.x(), t.y(), t.z()};
  return out;
}

NnlsResult nnls(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, int max_iterations) {
  const Eigen::Index n = a.cols();
  if (max_iterations <= 0) max_iterations = static_cast<int>(3 * n + 10);

  NnlsResult res;
  res.x = Eigen::VectorXd::Zero(n);
  std::vector<bool> passive(static_cast<std::size_t>(n), false);
  const double tol = 1e-12 * std::max<double>(1.0, a.cwiseAbs().maxCoeff()) *
                     std::max<double>(1.0, b.cwiseAbs().maxCoeff());

  auto solve_passive = [&](Eigen::VectorXd& z) {
    std::vector<Eigen::Index> idx;
    for (Eigen::Index j = 0; j < n; ++j)
      if (passive[static_cast<std::size_t>(j)]) idx.push_back(j);
    z = Eigen::VectorXd::Zero(n);
    if (idx.empty()) return;
    Eigen::MatrixXd ap(a.rows(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) ap.col(static_cast<Eigen::Index>(k)) = a.col(idx[k]);
    const Eigen::VectorXd zp = ap.colPivHouseholderQr().solve(b);
    for (std::size_t k = 0; k < idx.size(); ++k) z(idx[k]) = zp(static_cast<Eigen::Index>(k));
  };

  int outer = 0;
  while (true) {
    const Eigen::VectorXd w = a.transpose() * (b - a * res.x);
    Eigen::Index best = -1;
    double best_w = tol;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (!passive[static_cast<std::size_t>(j)] && w(j) > best_w) {
        best_w = w(j);
        best = j;
      }
    }
    if (best < 0) break;
    if (++outer > max_iterations) {
      res.converged = false;
      break;
    }
    passive[static_cast<std::size_t>(best)] = true;

    Eigen::VectorXd z;
    while (true) {
      solve_passive(z);
      bool feasible = true;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (passive[static_cast<std::size_t>(j)] && z(j) <= 0.0) feasible = false;
      }
      if (feasible) break;
      // Step toward z until the first passive variable hits zero.
      double alpha = std::numeric_limits<double>::infinity();
      for (Eigen::Index j = 0; j < n; ++j) {
        if (passive[static_cast<std::size_t>(j)] && z(j) <= 0.0) {
          const double denom = res.x(j) - z(j);
          if (denom > 0.0) alpha = std::min(alpha, res.x(j) / denom);
        }
      }
      if (!std::isfinite(alpha)) alpha = 0.0;
      res.x += alpha * (z - res.x);
      for (Eigen::Index j = 0; j < n; ++j) {
        if (passive[static_cast<std::size_t>(j)] && res.x(j) <= 1e-15) {
          passive[static_cast<std::size_t>(j)] = false;
          res.x(j) = 0.0;
        }
      }
    }
    res.x = z;
  }
  return res;
}

}  // namespace ocular::detail
