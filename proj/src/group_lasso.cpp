#include "fragavg/group_lasso.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>

#include "fragavg/error.hpp"
#include "fragavg/glm.hpp"

namespace fragavg {

std::vector<Index> GroupLassoProblem::unpenalized() const {
    std::vector<bool> grouped(static_cast<std::size_t>(X.cols()), false);
    for (const auto& g : groups) {
        for (Index j : g) grouped[static_cast<std::size_t>(j)] = true;
    }
    std::vector<Index> free;
    for (Index j = 0; j < X.cols(); ++j) {
        if (!grouped[static_cast<std::size_t>(j)]) free.push_back(j);
    }
    return free;
}

double group_lasso_loss(const GroupLassoProblem& prob, const VectorXd& beta) {
    return -loglik(prob.family, prob.X * beta, prob.y) / static_cast<double>(prob.X.rows());
}

VectorXd group_lasso_loss_gradient(const GroupLassoProblem& prob, const VectorXd& beta) {
    return -score(prob.X, prob.y, beta, prob.family) / static_cast<double>(prob.X.rows());
}

double group_lasso_objective(const GroupLassoProblem& prob, const VectorXd& beta, double lambda) {
    double pen = 0.0;
    for (const auto& g : prob.groups) {
        double sq = 0.0;
        for (Index j : g) sq += beta(j) * beta(j);
        pen += std::sqrt(static_cast<double>(g.size())) * std::sqrt(sq);
    }
    return group_lasso_loss(prob, beta) + lambda * pen;
}

VectorXd group_soft_threshold(const GroupLassoProblem& prob, const VectorXd& v, double threshold) {
    VectorXd out = v;
    for (const auto& g : prob.groups) {
        double sq = 0.0;
        for (Index j : g) sq += v(j) * v(j);
        const double norm = std::sqrt(sq);
        const double level = threshold * std::sqrt(static_cast<double>(g.size()));
        const double shrink = norm > level ? 1.0 - level / norm : 0.0;
        for (Index j : g) out(j) = shrink * v(j);
    }
    return out;
}

GroupLassoSolution solve_group_lasso(const GroupLassoProblem& prob, double lambda, const GroupLassoOptions& opts,
                                     const VectorXd* warm_start) {
    const Index p = prob.X.cols();
    VectorXd beta = warm_start ? *warm_start : VectorXd::Zero(p);
    VectorXd z = beta;
    double momentum = 1.0;
    // Lipschitz estimate of the loss gradient, refined by backtracking.
    double L = std::max(1e-8, prob.X.colwise().squaredNorm().maxCoeff() / static_cast<double>(prob.X.rows()) * 0.25);

    GroupLassoSolution sol;
    double obj = group_lasso_objective(prob, beta, lambda);
    for (int it = 1; it <= opts.max_iter; ++it) {
        const double fz = group_lasso_loss(prob, z);
        const VectorXd gz = group_lasso_loss_gradient(prob, z);
        VectorXd next;
        for (;;) {
            next = group_soft_threshold(prob, z - gz / L, lambda / L);
            const VectorXd d = next - z;
            const double bound = fz + gz.dot(d) + 0.5 * L * d.squaredNorm();
            if (group_lasso_loss(prob, next) <= bound + 1e-15 * std::abs(bound)) break;
            L *= 2.0;
        }
        const double next_obj = group_lasso_objective(prob, next, lambda);

        // Convergence on the prox-gradient mapping at the new point.
        const VectorXd g_next = group_lasso_loss_gradient(prob, next);
        const VectorXd mapped = group_soft_threshold(prob, next - g_next / L, lambda / L);
        const double map_norm = (L * (next - mapped)).lpNorm<Eigen::Infinity>();

        // Increases at rounding level are accepted; otherwise a restart from
        // the optimum would loop forever.
        if (next_obj > obj + 1e-14 * (1.0 + std::abs(obj))) {
            // Adaptive restart: drop momentum and retry from the current iterate.
            z = beta;
            momentum = 1.0;
            sol.iterations = it;
            continue;
        }
        const double m_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
        z = next + ((momentum - 1.0) / m_next) * (next - beta);
        momentum = m_next;
        beta = std::move(next);
        obj = next_obj;
        sol.iterations = it;
        if (map_norm <= opts.tol) {
            sol.converged = true;
            break;
        }
        L = std::max(1e-8, L * 0.9);
    }
    sol.beta = std::move(beta);
    sol.objective = obj;
    return sol;
}

double group_lasso_lambda_max(const GroupLassoProblem& prob) {
    const auto free = prob.unpenalized();
    VectorXd beta0 = VectorXd::Zero(prob.X.cols());
    if (!free.empty()) {
        MatrixXd Xf(prob.X.rows(), static_cast<Index>(free.size()));
        for (std::size_t c = 0; c < free.size(); ++c) Xf.col(static_cast<Index>(c)) = prob.X.col(free[c]);
        const GlmFit fit = fit_glm(Xf, prob.y, prob.family);
        for (std::size_t c = 0; c < free.size(); ++c) beta0(free[c]) = fit.beta(static_cast<Index>(c));
    }
    const VectorXd grad = group_lasso_loss_gradient(prob, beta0);
    double lmax = 0.0;
    for (const auto& g : prob.groups) {
        double sq = 0.0;
        for (Index j : g) sq += grad(j) * grad(j);
        lmax = std::max(lmax, std::sqrt(sq) / std::sqrt(static_cast<double>(g.size())));
    }
    return lmax;
}

std::vector<double> geometric_lambda_grid(double lambda_max, int count, double ratio) {
    std::vector<double> grid;
    if (count <= 1) return {lambda_max};
    for (int i = 0; i < count; ++i) {
        grid.push_back(lambda_max * std::pow(ratio, static_cast<double>(i) / static_cast<double>(count - 1)));
    }
    return grid;
}

std::vector<int> stratified_folds(const VectorXd& y, int folds, std::uint64_t seed) {
    if (folds < 2) throw InputError("cross-validation needs at least 2 folds");
    std::mt19937_64 rng(seed);
    std::map<double, std::vector<Index>> strata;
    for (Index i = 0; i < y.size(); ++i) strata[y(i)].push_back(i);
    // Rows ordered by response (shuffled within ties) and dealt round-robin:
    // binary classes are balanced across folds, continuous y spreads its range.
    std::vector<Index> order;
    for (auto& [value, rows] : strata) {
        std::shuffle(rows.begin(), rows.end(), rng);
        order.insert(order.end(), rows.begin(), rows.end());
    }
    std::vector<int> label(static_cast<std::size_t>(y.size()));
    for (std::size_t r = 0; r < order.size(); ++r) label[static_cast<std::size_t>(order[r])] = static_cast<int>(r % static_cast<std::size_t>(folds));
    return label;
}

namespace {

GroupLassoProblem subset(const GroupLassoProblem& prob, const std::vector<Index>& rows) {
    GroupLassoProblem out;
    out.family = prob.family;
    out.groups = prob.groups;
    out.X.resize(static_cast<Index>(rows.size()), prob.X.cols());
    out.y.resize(static_cast<Index>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        out.X.row(static_cast<Index>(r)) = prob.X.row(rows[r]);
        out.y(static_cast<Index>(r)) = prob.y(rows[r]);
    }
    return out;
}

}  // namespace

GroupLassoCvResult cross_validate_group_lasso(const GroupLassoProblem& prob, int folds, std::uint64_t seed,
                                              int grid_size, double grid_ratio, const GroupLassoOptions& opts) {
    if (prob.X.rows() < folds) throw InputError("too few complete cases for the requested number of folds");
    GroupLassoCvResult res;
    res.lambdas = geometric_lambda_grid(group_lasso_lambda_max(prob), grid_size, grid_ratio);
    res.cv_deviance.assign(res.lambdas.size(), 0.0);

    const auto label = stratified_folds(prob.y, folds, seed);
    for (int f = 0; f < folds; ++f) {
        std::vector<Index> train, test;
        for (Index i = 0; i < prob.X.rows(); ++i) (label[static_cast<std::size_t>(i)] == f ? test : train).push_back(i);
        const auto tr = subset(prob, train);
        const auto te = subset(prob, test);
        VectorXd warm = VectorXd::Zero(prob.X.cols());
        for (std::size_t l = 0; l < res.lambdas.size(); ++l) {
            auto sol = solve_group_lasso(tr, res.lambdas[l], opts, &warm);
            warm = sol.beta;
            const VectorXd theta = te.X * sol.beta;
            double dev = 0.0;
            for (Index i = 0; i < theta.size(); ++i) {
                dev += te.family.saturated(te.y(i)) - (te.y(i) * theta(i) - te.family.cumulant(theta(i)));
            }
            res.cv_deviance[l] += 2.0 / te.family.phi() * dev;
        }
    }
    res.best = static_cast<std::size_t>(std::min_element(res.cv_deviance.begin(), res.cv_deviance.end()) -
                                        res.cv_deviance.begin());

    // Full-data path up to the chosen λ, warm-started.
    VectorXd warm = VectorXd::Zero(prob.X.cols());
    for (std::size_t l = 0; l <= res.best; ++l) {
        res.solution = solve_group_lasso(prob, res.lambdas[l], opts, &warm);
        warm = res.solution.beta;
    }
    for (std::size_t g = 0; g < prob.groups.size(); ++g) {
        bool nonzero = false;
        for (Index j : prob.groups[g]) nonzero = nonzero || res.solution.beta(j) != 0.0;
        if (nonzero) res.selected_groups.push_back(g);
    }
    return res;
}

}  // namespace fragavg
