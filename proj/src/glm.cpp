#include "fragavg/glm.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Dense>

#include "fragavg/error.hpp"

namespace fragavg {
namespace {

double penalized_objective(const MatrixXd& X, const VectorXd& y, const VectorXd& beta,
                           const ExponentialFamily& family, double ridge) {
    const double ll = loglik(family, X * beta, y);
    return ridge > 0.0 ? ll - 0.5 * ridge * beta.squaredNorm() : ll;
}

// Ascent tolerance: loglik sums carry roundoff of order eps·n·|term|.
double ascent_slack(double obj) { return 1e-12 * (1.0 + std::abs(obj)); }

void check_rank(const MatrixXd& X, double rank_tol) {
    Eigen::ColPivHouseholderQR<MatrixXd> qr(X);
    qr.setThreshold(rank_tol);
    const Index rank = qr.rank();
    if (rank >= X.cols()) return;
    std::vector<Index> dropped;
    const auto& perm = qr.colsPermutation().indices();
    for (Index r = rank; r < X.cols(); ++r) dropped.push_back(perm(r));
    std::sort(dropped.begin(), dropped.end());
    std::ostringstream msg;
    msg << "rank-deficient design: rank " << rank << " < " << X.cols() << " columns (" << X.rows()
        << " rows); dependent columns:";
    for (Index j : dropped) msg << ' ' << j;
    throw RankDeficientError(msg.str(), std::move(dropped));
}

}  // namespace

double loglik(const ExponentialFamily& family, const VectorXd& theta, const VectorXd& y) {
    if (theta.size() != y.size()) throw InputError("loglik: theta and y differ in length");
    double s = 0.0;
    for (Index i = 0; i < theta.size(); ++i) {
        if (!std::isfinite(theta(i))) throw NumericalError("loglik: non-finite linear predictor");
        s += y(i) * theta(i) - family.cumulant(theta(i));
    }
    return s / family.phi();
}

VectorXd score(const MatrixXd& X, const VectorXd& y, const VectorXd& beta, const ExponentialFamily& family) {
    const VectorXd eta = X * beta;
    VectorXd resid(eta.size());
    for (Index i = 0; i < eta.size(); ++i) resid(i) = y(i) - family.mean(eta(i));
    return X.transpose() * resid / family.phi();
}

GlmFit fit_glm(const MatrixXd& X, const VectorXd& y, const ExponentialFamily& family, const FitOptions& opts) {
    if (X.rows() != y.size()) throw InputError("fit_glm: design rows and response length differ");
    if (X.cols() == 0) throw InputError("fit_glm: design has no columns");
    for (Index i = 0; i < y.size(); ++i) {
        if (!family.valid_response(y(i))) {
            throw InputError("fit_glm: response value outside the " + family.name() + " support");
        }
    }
    check_rank(X, opts.rank_tol);

    const Index p = X.cols();
    GlmFit fit;
    fit.beta = VectorXd::Zero(p);
    double ridge = 0.0;
    double obj = penalized_objective(X, y, fit.beta, family, ridge);

    for (int iter = 0;; ++iter) {
        const VectorXd eta = X * fit.beta;
        VectorXd resid(eta.size()), weight(eta.size());
        for (Index i = 0; i < eta.size(); ++i) {
            resid(i) = y(i) - family.mean(eta(i));
            weight(i) = family.variance(eta(i)) / family.phi();
        }
        VectorXd grad = X.transpose() * resid / family.phi();
        if (ridge > 0.0) grad -= ridge * fit.beta;
        fit.grad_norm = grad.lpNorm<Eigen::Infinity>();
        fit.iterations = iter;

        MatrixXd info = X.transpose() * weight.asDiagonal() * X;
        if (ridge > 0.0) info.diagonal().array() += ridge;
        const VectorXd delta = info.ldlt().solve(grad);

        if (fit.grad_norm <= opts.grad_tol) {
            // A vanishing score with an O(1) Newton step means the likelihood
            // still increases towards infinity: treat it as divergence.
            const bool escaping = delta.allFinite() &&
                                  delta.lpNorm<Eigen::Infinity>() > 1e-3 * (1.0 + fit.beta.lpNorm<Eigen::Infinity>());
            if (ridge == 0.0 && escaping) {
                fit.separation_guard = true;
                ridge = opts.ridge;
                obj = penalized_objective(X, y, fit.beta, family, ridge);
                continue;
            }
            fit.converged = !fit.separation_guard;
            break;
        }
        if (iter >= opts.max_iter) break;
        if (!delta.allFinite()) break;

        double step = 1.0;
        VectorXd candidate = fit.beta + delta;
        double cand_obj = penalized_objective(X, y, candidate, family, ridge);
        if (opts.step_halving) {
            int halvings = 0;
            while (!(std::isfinite(cand_obj) && cand_obj >= obj - ascent_slack(obj)) && halvings < 60) {
                step *= 0.5;
                candidate = fit.beta + step * delta;
                cand_obj = penalized_objective(X, y, candidate, family, ridge);
                ++halvings;
            }
            if (halvings == 60) break;  // no ascent direction left at working precision
        } else if (!std::isfinite(cand_obj)) {
            break;
        }
        fit.beta = std::move(candidate);
        obj = cand_obj;
        fit.loglik_trace.push_back(obj);

        if (!fit.separation_guard && fit.beta.norm() > opts.divergence_norm) {
            fit.separation_guard = true;
            ridge = opts.ridge;
            obj = penalized_objective(X, y, fit.beta, family, ridge);
        }
    }
    fit.loglik = loglik(family, X * fit.beta, y);
    return fit;
}

MatrixXd design_matrix(const FragmentaryDataset& data, const std::vector<Index>& rows,
                       const std::vector<Index>& cols) {
    MatrixXd X(static_cast<Index>(rows.size()), static_cast<Index>(cols.size()));
    for (std::size_t c = 0; c < cols.size(); ++c) {
        for (std::size_t r = 0; r < rows.size(); ++r) {
            if (!data.mask(rows[r], cols[c])) {
                throw InputError("design_matrix: requested cell is unobserved (subject " +
                                 std::to_string(rows[r] + 1) + ", column " + std::to_string(cols[c] + 1) + ")");
            }
            X(static_cast<Index>(r), static_cast<Index>(c)) = data.x(rows[r], cols[c]);
        }
    }
    return X;
}

VectorXd gather(const VectorXd& v, const std::vector<Index>& rows) {
    VectorXd out(static_cast<Index>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) out(static_cast<Index>(r)) = v(rows[r]);
    return out;
}

CandidateModel fit_candidate(const FragmentaryDataset& data, const PatternIndex& index, Index k,
                             const ExponentialFamily& family, const FitOptions& opts) {
    if (k < 0 || k >= index.K()) throw InputError("fit_candidate: pattern id out of range");
    const auto& pattern = index.pattern(k);
    const auto& rows = index.s_set(k);
    const MatrixXd X = design_matrix(data, rows, pattern.indices);
    const VectorXd y = gather(data.y, rows);

    GlmFit fit;
    try {
        fit = fit_glm(X, y, family, opts);
    } catch (const RankDeficientError& e) {
        std::vector<Index> cols;
        std::ostringstream msg;
        msg << "candidate " << k + 1 << " (p_k=" << pattern.size() << ", n_k=" << rows.size()
            << ") rejected: rank-deficient design; dependent columns:";
        for (Index c : e.columns()) {
            const Index j = pattern.indices[static_cast<std::size_t>(c)];
            cols.push_back(j);
            msg << ' ' << (data.column_names.empty() ? std::to_string(j + 1) : data.column_names[static_cast<std::size_t>(j)]);
        }
        throw RankDeficientError(msg.str(), std::move(cols));
    }

    CandidateModel m;
    m.pattern = pattern;
    m.beta = std::move(fit.beta);
    m.n_k = static_cast<Index>(rows.size());
    m.p_k = pattern.size();
    m.loglik = fit.loglik;
    m.converged = fit.converged;
    m.iterations = fit.iterations;
    m.separation_guard = fit.separation_guard;
    return m;
}

double linear_predictor(const CandidateModel& model, const PartialVector& x) {
    double s = 0.0;
    for (std::size_t r = 0; r < model.pattern.indices.size(); ++r) {
        const Index j = model.pattern.indices[r];
        if (j >= x.size() || !x.observed(j)) {
            throw InputError("linear_predictor: covariate " + std::to_string(j + 1) + " required by the model is unobserved");
        }
        s += x.values(j) * model.beta(static_cast<Index>(r));
    }
    return s;
}

double linear_predictor(const CandidateModel& model, const VectorXd& x_full) {
    return linear_predictor(model, PartialVector::full(x_full));
}

VectorXd embed(const CandidateModel& model, Index p) {
    VectorXd out = VectorXd::Zero(p);
    for (std::size_t r = 0; r < model.pattern.indices.size(); ++r) {
        out(model.pattern.indices[r]) = model.beta(static_cast<Index>(r));
    }
    return out;
}

}  // namespace fragavg
