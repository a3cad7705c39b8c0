#pragma once

#include <cstdint>
#include <vector>

#include "fragavg/dataset.hpp"
#include "fragavg/family.hpp"

namespace fragavg {

/// min_β  −ℓ(β)/n + λ Σ_g √|g| ‖β_g‖₂ over a GLM log-likelihood ℓ.
/// Columns not listed in any group (e.g. the intercept) are unpenalized.
struct GroupLassoProblem {
    MatrixXd X;
    VectorXd y;
    ExponentialFamily family = ExponentialFamily::binomial();
    std::vector<std::vector<Index>> groups;

    std::vector<Index> unpenalized() const;
};

struct GroupLassoOptions {
    int max_iter = 5000;
    double tol = 1e-7;    // prox-gradient mapping max-norm at convergence
};

struct GroupLassoSolution {
    VectorXd beta;
    double objective = 0.0;
    int iterations = 0;
    bool converged = false;
};

double group_lasso_loss(const GroupLassoProblem& prob, const VectorXd& beta);
VectorXd group_lasso_loss_gradient(const GroupLassoProblem& prob, const VectorXd& beta);
double group_lasso_objective(const GroupLassoProblem& prob, const VectorXd& beta, double lambda);

/// Block soft-thresholding of every group at level step·λ·√|g|.
VectorXd group_soft_threshold(const GroupLassoProblem& prob, const VectorXd& v, double threshold);

/// Accelerated proximal gradient (FISTA) with backtracking and adaptive restart.
GroupLassoSolution solve_group_lasso(const GroupLassoProblem& prob, double lambda, const GroupLassoOptions& opts = {},
                                     const VectorXd* warm_start = nullptr);

/// Smallest λ at which every group is zero: max_g ‖∇_g loss(β_0)‖ / √|g| with
/// β_0 the unpenalized-columns-only fit.
double group_lasso_lambda_max(const GroupLassoProblem& prob);

/// `count` geometric points from lambda_max down to lambda_max·ratio.
std::vector<double> geometric_lambda_grid(double lambda_max, int count = 50, double ratio = 1e-3);

/// Fold label 0..folds-1 per row, stratified by response value and
/// deterministic in the seed.
std::vector<int> stratified_folds(const VectorXd& y, int folds, std::uint64_t seed);

struct GroupLassoCvResult {
    std::vector<double> lambdas;
    std::vector<double> cv_deviance;   // summed held-out deviance per λ
    std::size_t best = 0;
    GroupLassoSolution solution;       // full-data fit at lambdas[best]
    std::vector<std::size_t> selected_groups;
};

GroupLassoCvResult cross_validate_group_lasso(const GroupLassoProblem& prob, int folds, std::uint64_t seed,
                                              int grid_size = 50, double grid_ratio = 1e-3,
                                              const GroupLassoOptions& opts = {});

}  // namespace fragavg
