#include "fragavg/averaging.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Dense>

#include "fragavg/error.hpp"
#include "fragavg/simplex.hpp"

namespace fragavg {
namespace {

constexpr double kProbFloor = 1e-12;

double clamp_probability(double p, std::size_t& clamped) {
    if (p < kProbFloor) {
        ++clamped;
        return kProbFloor;
    }
    if (p > 1.0 - kProbFloor) {
        ++clamped;
        return 1.0 - kProbFloor;
    }
    return p;
}

void check_weights(const CriterionContext& ctx, const VectorXd& w) {
    if (w.size() != ctx.K()) throw InputError("weight vector length does not match the number of candidates");
}

// Newton step on the face {w_j = 0, j ∉ A; Σ_A w = 1}, using the null space of
// the sum constraint. Returns a zero vector when no descent step is available.
VectorXd face_newton_direction(const CriterionContext& ctx, const VectorXd& w, const VectorXd& grad) {
    std::vector<Index> active;
    for (Index k = 0; k < w.size(); ++k) {
        if (w(k) > 0.0) active.push_back(k);
    }
    const auto m = static_cast<Index>(active.size());
    VectorXd dir = VectorXd::Zero(w.size());
    if (m < 2) return dir;

    const MatrixXd H = criterion_hessian(ctx, w);
    MatrixXd HA(m, m);
    VectorXd gA(m);
    for (Index a = 0; a < m; ++a) {
        gA(a) = grad(active[static_cast<std::size_t>(a)]);
        for (Index b = 0; b < m; ++b) HA(a, b) = H(active[static_cast<std::size_t>(a)], active[static_cast<std::size_t>(b)]);
    }
    // Z: columns e_a − e_m span {d : Σ d = 0}.
    MatrixXd Z = MatrixXd::Zero(m, m - 1);
    for (Index a = 0; a < m - 1; ++a) {
        Z(a, a) = 1.0;
        Z(m - 1, a) = -1.0;
    }
    MatrixXd reduced = Z.transpose() * HA * Z;
    const double scale = std::max(reduced.diagonal().cwiseAbs().maxCoeff(), 1e-300);
    reduced.diagonal().array() += 1e-12 * scale;
    const VectorXd r = reduced.ldlt().solve(-(Z.transpose() * gA));
    const VectorXd dA = Z * r;
    if (!dA.allFinite() || gA.dot(dA) >= 0.0) return dir;
    for (Index a = 0; a < m; ++a) dir(active[static_cast<std::size_t>(a)]) = dA(a);
    return dir;
}

}  // namespace

WeightVector::WeightVector(VectorXd w) : w_(std::move(w)) {
    if (w_.size() == 0) throw InputError("weight vector is empty");
    for (Index k = 0; k < w_.size(); ++k) {
        if (!std::isfinite(w_(k)) || w_(k) < -1e-12) throw InputError("weights must be finite and non-negative");
        if (w_(k) < 0.0) w_(k) = 0.0;
    }
    const double s = w_.sum();
    if (!(s > 0.0)) throw InputError("weights sum to zero");
    w_ /= s;
}

WeightVector WeightVector::uniform(Index K) { return WeightVector(VectorXd::Constant(K, 1.0 / static_cast<double>(K))); }

WeightVector WeightVector::vertex(Index K, Index k) {
    VectorXd w = VectorXd::Zero(K);
    w(k) = 1.0;
    return WeightVector(std::move(w));
}

CriterionContext make_criterion_context(const FragmentaryDataset& data, const std::vector<Index>& rows,
                                        const std::vector<CandidateModel>& candidates,
                                        const ExponentialFamily& family) {
    CriterionContext ctx;
    ctx.family = family;
    ctx.y = gather(data.y, rows);
    ctx.theta.resize(static_cast<Index>(rows.size()), static_cast<Index>(candidates.size()));
    ctx.sizes.resize(static_cast<Index>(candidates.size()));
    for (std::size_t k = 0; k < candidates.size(); ++k) {
        const auto& c = candidates[k];
        const MatrixXd X = design_matrix(data, rows, c.pattern.indices);
        ctx.theta.col(static_cast<Index>(k)) = X * c.beta;
        ctx.sizes(static_cast<Index>(k)) = static_cast<double>(c.p_k);
    }
    if (!ctx.theta.allFinite()) throw NumericalError("candidate linear predictors are not finite on the weighting sample");
    return ctx;
}

double criterion(const CriterionContext& ctx, const VectorXd& w, double lambda_n) {
    check_weights(ctx, w);
    const VectorXd theta = ctx.theta * w;
    double s = 0.0;
    for (Index i = 0; i < theta.size(); ++i) s += ctx.family.cumulant(theta(i)) - ctx.y(i) * theta(i);
    const double value = 2.0 / ctx.family.phi() * s + lambda_n * ctx.sizes.dot(w);
    if (!std::isfinite(value)) throw NumericalError("weight criterion is not finite");
    return value;
}

double criterion(const CriterionContext& ctx, const WeightVector& w, double lambda_n) {
    return criterion(ctx, w.values(), lambda_n);
}

VectorXd criterion_gradient(const CriterionContext& ctx, const VectorXd& w, double lambda_n) {
    check_weights(ctx, w);
    const VectorXd theta = ctx.theta * w;
    VectorXd resid(theta.size());
    for (Index i = 0; i < theta.size(); ++i) resid(i) = ctx.family.mean(theta(i)) - ctx.y(i);
    VectorXd g = 2.0 / ctx.family.phi() * (ctx.theta.transpose() * resid) + lambda_n * ctx.sizes;
    if (!g.allFinite()) throw NumericalError("weight criterion gradient is not finite");
    return g;
}

VectorXd criterion_gradient(const CriterionContext& ctx, const WeightVector& w, double lambda_n) {
    return criterion_gradient(ctx, w.values(), lambda_n);
}

MatrixXd criterion_hessian(const CriterionContext& ctx, const VectorXd& w) {
    check_weights(ctx, w);
    const VectorXd theta = ctx.theta * w;
    VectorXd v(theta.size());
    for (Index i = 0; i < theta.size(); ++i) v(i) = ctx.family.variance(theta(i));
    return 2.0 / ctx.family.phi() * (ctx.theta.transpose() * v.asDiagonal() * ctx.theta);
}

double criterion_logistic_form(const CriterionContext& ctx, const VectorXd& w, double lambda_n) {
    if (ctx.family.kind() != FamilyKind::binomial_logit) {
        throw InputError("the logistic closed form applies to the binomial family only");
    }
    check_weights(ctx, w);
    const VectorXd theta = ctx.theta * w;
    std::size_t clamped = 0;
    double s = 0.0;
    for (Index i = 0; i < theta.size(); ++i) {
        const double p = clamp_probability(1.0 / (1.0 + std::exp(-theta(i))), clamped);
        s += ctx.y(i) * std::log(p) + (1.0 - ctx.y(i)) * std::log(1.0 - p);
    }
    return -2.0 * s + lambda_n * ctx.sizes.dot(w);
}

WeightFit optimize_weights(const CriterionContext& ctx, double lambda_n, const OptOptions& opts) {
    const Index K = ctx.K();
    if (K < 1) throw InputError("no candidate models to average");
    if (lambda_n < 0.0) throw InputError("lambda_n must be non-negative");

    VectorXd w = VectorXd::Constant(K, 1.0 / static_cast<double>(K));
    double f = criterion(ctx, w, lambda_n);
    VectorXd g = criterion_gradient(ctx, w, lambda_n);

    WeightFit out;
    if (K == 1) {
        out.weights = WeightVector(w);
        out.value = f;
        out.converged = true;
        return out;
    }

    const double trace = criterion_hessian(ctx, w).trace();
    double step = trace > 0.0 ? 1.0 / trace : 1.0;
    double kkt = simplex_kkt_residual(g, w);

    // Armijo, or, once f changes only at rounding level, a smaller KKT residual.
    const auto accept = [&](double f_trial, double decrease, const VectorXd& g_trial, const VectorXd& w_trial) {
        if (f_trial <= f + opts.armijo_c * decrease) return true;
        if (f_trial - f > 1e-13 * (1.0 + std::abs(f))) return false;
        return simplex_kkt_residual(g_trial, w_trial) < kkt;
    };

    int it = 0;
    for (; it < opts.max_iter; ++it) {
        kkt = simplex_kkt_residual(g, w);
        out.kkt_residual = kkt;
        if (kkt <= opts.kkt_tol) {
            out.converged = true;
            break;
        }
        bool progressed = false;

        // Projected gradient step, backtracking along the projection arc.
        double t = step;
        for (int ls = 0; ls < 80; ++ls) {
            const VectorXd w_new = project_to_simplex(w - t * g);
            const VectorXd d = w_new - w;
            if (d.lpNorm<Eigen::Infinity>() == 0.0) break;
            const double f_new = criterion(ctx, w_new, lambda_n);
            VectorXd g_new = criterion_gradient(ctx, w_new, lambda_n);
            if (accept(f_new, g.dot(d), g_new, w_new)) {
                const double sy = d.dot(g_new - g);
                step = std::clamp(sy > 0.0 ? d.squaredNorm() / sy : 2.0 * t, 1e-12, 1e12);
                w = w_new;
                f = f_new;
                g = std::move(g_new);
                kkt = simplex_kkt_residual(g, w);
                progressed = true;
                break;
            }
            t *= 0.5;
        }

        if (opts.newton_polish) {
            const VectorXd dir = face_newton_direction(ctx, w, g);
            if (dir.lpNorm<Eigen::Infinity>() > 0.0) {
                double alpha = 1.0;
                Index blocking = -1;
                for (Index k = 0; k < K; ++k) {
                    if (dir(k) < 0.0 && -w(k) / dir(k) < alpha) {
                        alpha = -w(k) / dir(k);
                        blocking = k;
                    }
                }
                const double slope = g.dot(dir);
                for (int ls = 0; ls < 40 && alpha > 0.0; ++ls) {
                    VectorXd trial = w + alpha * dir;
                    if (blocking >= 0 && ls == 0) trial(blocking) = 0.0;
                    trial = trial.cwiseMax(0.0);
                    trial /= trial.sum();
                    const double f_trial = criterion(ctx, trial, lambda_n);
                    VectorXd g_trial = criterion_gradient(ctx, trial, lambda_n);
                    if (accept(f_trial, alpha * slope, g_trial, trial)) {
                        w = std::move(trial);
                        f = f_trial;
                        g = std::move(g_trial);
                        progressed = true;
                        break;
                    }
                    alpha *= 0.5;
                }
            }
        }
        if (!progressed) break;  // stalled at working precision
    }
    out.iterations = it;
    out.kkt_residual = simplex_kkt_residual(g, w);
    out.converged = out.kkt_residual <= opts.kkt_tol;
    out.weights = WeightVector(w);
    out.value = criterion(ctx, out.weights, lambda_n);
    return out;
}

double lambda_default(LambdaMode mode, Index n1) {
    if (n1 < 1) throw InputError("lambda_default: n_1 must be at least 1");
    return mode == LambdaMode::opt1 ? 2.0 : std::log(static_cast<double>(n1));
}

LambdaSpec LambdaSpec::parse(const std::string& text) {
    if (text == "2" || text == "opt1" || text == "aic") return {Kind::two, 2.0};
    if (text == "log-n1" || text == "opt2" || text == "bic") return {Kind::log_n1, 0.0};
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used != text.size() || !(v >= 0.0) || !std::isfinite(v)) throw std::invalid_argument(text);
        return {Kind::fixed, v};
    } catch (const std::exception&) {
        throw InputError("--lambda must be 2, log-n1 or a non-negative number, got '" + text + "'");
    }
}

LambdaSpec LambdaSpec::from_mode(LambdaMode mode) {
    return mode == LambdaMode::opt1 ? LambdaSpec{Kind::two, 2.0} : LambdaSpec{Kind::log_n1, 0.0};
}

double LambdaSpec::resolve(Index n1) const {
    switch (kind) {
        case Kind::two: return lambda_default(LambdaMode::opt1, n1);
        case Kind::log_n1: return lambda_default(LambdaMode::opt2, n1);
        case Kind::fixed: return value;
    }
    return value;
}

std::string LambdaSpec::to_string() const {
    switch (kind) {
        case Kind::two: return "2";
        case Kind::log_n1: return "log-n1";
        case Kind::fixed: {
            std::ostringstream s;
            s.precision(17);
            s << value;
            return s.str();
        }
    }
    return "2";
}

VectorXd combine_betas(const std::vector<CandidateModel>& candidates, const WeightVector& weights, Index p) {
    if (static_cast<Index>(candidates.size()) != weights.size()) {
        throw InputError("combine_betas: weights and candidates differ in length");
    }
    VectorXd beta = VectorXd::Zero(p);
    for (std::size_t k = 0; k < candidates.size(); ++k) {
        const auto& c = candidates[k];
        for (std::size_t r = 0; r < c.pattern.indices.size(); ++r) {
            beta(c.pattern.indices[r]) += weights[static_cast<Index>(k)] * c.beta(static_cast<Index>(r));
        }
    }
    return beta;
}

AveragedModel fit_averaged(const FragmentaryDataset& data, const ExponentialFamily& family,
                           const AveragingOptions& opts) {
    return fit_averaged(data, build_pattern_index(data, opts.order), family, opts);
}

CandidateUniverse fit_candidate_universe(const FragmentaryDataset& data, const PatternIndex& index,
                                         const ExponentialFamily& family, const FitOptions& opts) {
    CandidateUniverse u;
    for (Index k = 1; k < index.K(); ++k) {
        if (index.pattern(k).size() > index.pattern(u.lead).size()) u.lead = k;
    }
    const Pattern& lead = index.pattern(u.lead);
    if (!index.has_full_pattern()) {
        u.warnings.push_back("no subject observes every covariate; weights are selected on S of the largest pattern (" +
                             std::to_string(index.s_set(u.lead).size()) + " subjects)");
    }
    for (Index k = 0; k < index.K(); ++k) {
        if (k == u.lead || index.pattern(k).subset_of(lead)) {
            u.pattern_ids.push_back(k);
        } else {
            u.warnings.push_back("pattern " + std::to_string(k + 1) +
                                 " is not contained in the weighting pattern and was left out");
        }
    }
    for (Index k : u.pattern_ids) u.candidates.push_back(fit_candidate(data, index, k, family, opts));
    for (const auto& c : u.candidates) {
        if (c.separation_guard) {
            u.warnings.push_back("candidate with pattern id " + std::to_string(c.pattern.id) +
                                 " diverged; ridge guard applied");
        } else if (!c.converged) {
            u.warnings.push_back("candidate with pattern id " + std::to_string(c.pattern.id) + " did not converge");
        }
    }
    return u;
}

AveragedModel fit_averaged(const FragmentaryDataset& data, const PatternIndex& index,
                           const ExponentialFamily& family, const AveragingOptions& opts) {
    AveragedModel model;
    model.family = family;
    model.column_names = data.column_names;
    model.n = data.n();
    model.patterns_total = index.K();

    CandidateUniverse universe = fit_candidate_universe(data, index, family, opts.fit);
    model.weighting_pattern = index.pattern(universe.lead);
    const auto& weight_rows = index.s_set(universe.lead);
    model.weighting_sample_size = static_cast<Index>(weight_rows.size());
    model.candidates = std::move(universe.candidates);
    model.warnings = std::move(universe.warnings);

    const CriterionContext ctx = make_criterion_context(data, weight_rows, model.candidates, family);
    model.lambda_n = opts.lambda.resolve(model.weighting_sample_size);
    const WeightFit wfit = optimize_weights(ctx, model.lambda_n, opts.opt);
    model.weights = wfit.weights;
    model.criterion_value = wfit.value;
    model.kkt_residual = wfit.kkt_residual;
    model.optimizer_iterations = wfit.iterations;
    model.optimizer_converged = wfit.converged;
    if (!wfit.converged) model.warnings.push_back("weight optimizer stopped before reaching the KKT tolerance");
    model.beta_combined = combine_betas(model.candidates, model.weights, data.p());
    return model;
}

Prediction predict(const AveragedModel& model, const PartialVector& x) {
    if (x.size() != model.p()) throw InputError("predict: query has the wrong number of covariates");
    double theta = 0.0;
    for (Index j : model.weighting_pattern.indices) {
        if (!x.observed(j)) {
            const std::string name = j < static_cast<Index>(model.column_names.size())
                                         ? model.column_names[static_cast<std::size_t>(j)]
                                         : std::to_string(j + 1);
            throw InputError("predict: required covariate '" + name + "' is unobserved");
        }
        theta += x.values(j) * model.beta_combined(j);
    }
    return {theta, model.family.mean(theta)};
}

Prediction predict(const AveragedModel& model, const VectorXd& x_full) {
    return predict(model, PartialVector::full(x_full));
}

PatternPrediction predict_for_pattern(const FragmentaryDataset& data, const ExponentialFamily& family,
                                      const PartialVector& x_star, const AveragingOptions& opts) {
    if (x_star.size() != data.p()) throw InputError("predict_for_pattern: query has the wrong number of covariates");
    Pattern target{x_star.observed_indices(), 0};
    if (target.indices.empty()) throw InputError("predict_for_pattern: query observes no covariates");

    const FragmentaryDataset restricted = restrict_to(data, target);
    if (restricted.n() == 0) throw NumericalError("no training subject observes any covariate of the query pattern");

    PatternPrediction out;
    out.query_pattern = target;
    out.model = fit_averaged(restricted, family, opts);
    out.candidates = static_cast<Index>(out.model.candidates.size());

    VectorXd xr(target.size());
    for (Index r = 0; r < target.size(); ++r) xr(r) = x_star.values(target.indices[static_cast<std::size_t>(r)]);
    out.prediction = predict(out.model, PartialVector::full(xr));
    return out;
}

KlLoss kl_loss_logistic(const VectorXd& p_hat, const VectorXd& mu) {
    if (p_hat.size() != mu.size()) throw InputError("kl_loss: vectors differ in length");
    KlLoss out;
    out.n = p_hat.size();
    for (Index i = 0; i < p_hat.size(); ++i) {
        const double m = mu(i);
        if (!(m >= 0.0 && m <= 1.0)) throw InputError("kl_loss: true probability outside [0, 1]");
        const double p = clamp_probability(p_hat(i), out.clamped);
        double term = 0.0;
        if (m > 0.0) term += m * std::log(m / p);
        if (m < 1.0) term += (1.0 - m) * std::log((1.0 - m) / (1.0 - p));
        out.total += 2.0 * term;
    }
    return out;
}

KlLoss kl_loss(const VectorXd& theta_hat, const VectorXd& theta_true, const ExponentialFamily& family) {
    if (theta_hat.size() != theta_true.size()) throw InputError("kl_loss: vectors differ in length");
    if (family.kind() == FamilyKind::binomial_logit) {
        VectorXd p_hat(theta_hat.size()), mu(theta_true.size());
        for (Index i = 0; i < theta_hat.size(); ++i) {
            p_hat(i) = logistic(theta_hat(i));
            mu(i) = logistic(theta_true(i));
        }
        return kl_loss_logistic(p_hat, mu);
    }
    KlLoss out;
    out.n = theta_hat.size();
    for (Index i = 0; i < theta_hat.size(); ++i) {
        const double t0 = theta_true(i);
        const double t1 = theta_hat(i);
        out.total += family.cumulant(t1) - family.cumulant(t0) - family.mean(t0) * (t1 - t0);
    }
    out.total *= 2.0 / family.phi();
    return out;
}

double deviance(const VectorXd& theta_hat, const VectorXd& y, const ExponentialFamily& family) {
    if (theta_hat.size() != y.size()) throw InputError("deviance: vectors differ in length");
    double s = 0.0;
    for (Index i = 0; i < y.size(); ++i) {
        s += family.saturated(y(i)) - (y(i) * theta_hat(i) - family.cumulant(theta_hat(i)));
    }
    return 2.0 / family.phi() * s;
}

}  // namespace fragavg
