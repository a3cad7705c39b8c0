#pragma once

#include <Eigen/Core>

namespace fragavg {

/// Euclidean projection onto {w : w ≥ 0, Σ w = 1} (sort-and-threshold).
Eigen::VectorXd project_to_simplex(const Eigen::VectorXd& v);

/// Simplex KKT residual for gradient g at feasible w: the smallest ε such that
/// some μ satisfies g_k ≥ μ − ε for all k and |g_k − μ| ≤ ε whenever
/// w_k > active_threshold. Equals (max_{active} g − min_all g) / 2.
double simplex_kkt_residual(const Eigen::VectorXd& grad, const Eigen::VectorXd& w, double active_threshold = 1e-10);

}  // namespace fragavg
