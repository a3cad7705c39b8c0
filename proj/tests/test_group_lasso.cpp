#include <doctest.h>

#include <cmath>
#include <random>

#include "fragavg/glm.hpp"
#include "fragavg/group_lasso.hpp"
#include "oracles.hpp"

using namespace fragavg;

namespace {

GroupLassoProblem two_group_problem(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    GroupLassoProblem prob;
    prob.X.resize(60, 5);
    prob.y.resize(60);
    for (Index i = 0; i < 60; ++i) {
        prob.X(i, 0) = 1.0;
        for (Index j = 1; j < 5; ++j) prob.X(i, j) = z(rng);
        prob.y(i) = u(rng) < logistic(0.2 + 0.8 * prob.X(i, 1) - 0.5 * prob.X(i, 2) + 0.1 * prob.X(i, 3)) ? 1 : 0;
    }
    prob.groups = {{1, 2}, {3, 4}};
    return prob;
}

}  // namespace

TEST_CASE("group lasso extremes") {
    const auto prob = two_group_problem(41);
    const double lmax = group_lasso_lambda_max(prob);
    CHECK(lmax > 0.0);
    const auto at_max = solve_group_lasso(prob, lmax * 1.0001);
    for (Index j = 1; j < 5; ++j) CHECK(at_max.beta(j) == 0.0);

    GroupLassoOptions tight;
    tight.tol = 1e-10;
    tight.max_iter = 100000;
    const auto free = solve_group_lasso(prob, 0.0, tight);
    const GlmFit mle = fit_glm(prob.X, prob.y, prob.family);
    CHECK((free.beta - mle.beta).lpNorm<Eigen::Infinity>() < 1e-5);

    const auto grid = geometric_lambda_grid(2.0, 50, 1e-3);
    CHECK(grid.size() == 50);
    CHECK(grid.front() == 2.0);
    CHECK(grid.back() == doctest::Approx(2e-3));
}

TEST_CASE("group lasso agrees with block coordinate descent and satisfies KKT") {
    const auto prob = two_group_problem(42);
    const double lmax = group_lasso_lambda_max(prob);
    GroupLassoOptions tight;
    tight.tol = 1e-10;
    tight.max_iter = 100000;
    for (double frac : {0.05, 0.3, 0.7}) {
        const double lambda = frac * lmax;
        const auto sol = solve_group_lasso(prob, lambda, tight);
        CHECK(sol.converged);
        const VectorXd ref = oracle::group_lasso_block_descent(prob.X, prob.y, prob.groups, lambda);
        const double a = oracle::group_lasso_objective(prob.X, prob.y, prob.groups, lambda, sol.beta);
        const double b = oracle::group_lasso_objective(prob.X, prob.y, prob.groups, lambda, ref);
        CHECK(a <= b + 1e-6);
        CHECK(std::abs(a - group_lasso_objective(prob, sol.beta, lambda)) < 1e-12);

        const VectorXd grad = group_lasso_loss_gradient(prob, sol.beta);
        CHECK(std::abs(grad(0)) < 1e-6);
        for (const auto& g : prob.groups) {
            VectorXd gg(static_cast<Index>(g.size())), bg(static_cast<Index>(g.size()));
            for (std::size_t c = 0; c < g.size(); ++c) {
                gg(static_cast<Index>(c)) = grad(g[c]);
                bg(static_cast<Index>(c)) = sol.beta(g[c]);
            }
            const double scale = lambda * std::sqrt(static_cast<double>(g.size()));
            if (bg.norm() == 0.0) {
                CHECK(gg.norm() <= scale + 1e-6);
            } else {
                CHECK((gg + scale * bg / bg.norm()).norm() <= 1e-6);
            }
        }
    }
}

TEST_CASE("stratified folds") {
    VectorXd y(23);
    for (Index i = 0; i < 23; ++i) y(i) = i % 3 == 0 ? 1 : 0;
    const auto f = stratified_folds(y, 5, 7);
    CHECK(f == stratified_folds(y, 5, 7));
    for (int k = 0; k < 5; ++k) {
        int ones = 0, total = 0;
        for (Index i = 0; i < 23; ++i) {
            if (f[static_cast<std::size_t>(i)] != k) continue;
            ++total;
            ones += y(i) > 0.5;
        }
        CHECK(total >= 4);
        CHECK(ones >= 1);
    }
}

TEST_CASE("cross validation selects a grid point") {
    const auto prob = two_group_problem(43);
    const auto cv = cross_validate_group_lasso(prob, 5, 3);
    CHECK(cv.lambdas.size() == 50);
    CHECK(cv.best < cv.lambdas.size());
    CHECK(cv.cv_deviance[cv.best] == *std::min_element(cv.cv_deviance.begin(), cv.cv_deviance.end()));
    const auto again = cross_validate_group_lasso(prob, 5, 3);
    CHECK(again.best == cv.best);
    CHECK(again.selected_groups == cv.selected_groups);
}
