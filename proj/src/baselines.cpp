#include "fragavg/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "fragavg/error.hpp"

namespace fragavg {
namespace {

PatternIndex require_complete_cases(const FragmentaryDataset& data) {
    auto index = build_pattern_index(data);
    if (!index.has_full_pattern()) {
        throw NumericalError("no subject observes every covariate, so there is no complete-case sample");
    }
    return index;
}

}  // namespace

std::string to_string(Method m) {
    switch (m) {
        case Method::opt1: return "opt1";
        case Method::opt2: return "opt2";
        case Method::cc: return "cc";
        case Method::saic: return "saic";
        case Method::sbic: return "sbic";
        case Method::imp1: return "imp1";
        case Method::imp2: return "imp2";
        case Method::glasso: return "glasso";
    }
    return "unknown";
}

const std::vector<Method>& all_methods() {
    static const std::vector<Method> all{Method::opt1, Method::opt2, Method::cc,   Method::saic,
                                         Method::sbic, Method::imp1, Method::imp2, Method::glasso};
    return all;
}

Method parse_method(const std::string& name) {
    for (Method m : all_methods()) {
        if (to_string(m) == name) return m;
    }
    throw InputError("unknown method '" + name + "'");
}

std::vector<Method> parse_method_list(const std::string& list) {
    if (list == "all") return all_methods();
    std::vector<Method> out;
    std::stringstream ss(list);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        const Method m = parse_method(item);
        if (std::find(out.begin(), out.end(), m) == out.end()) out.push_back(m);
    }
    if (out.empty()) throw InputError("empty method list");
    return out;
}

double predict_theta(const BaselineResult& result, const PartialVector& x) {
    if (x.size() != result.beta_effective.size()) throw InputError("query has the wrong number of covariates");
    double theta = 0.0;
    if (result.zero_fill) {
        for (Index j = 0; j < x.size(); ++j) {
            if (x.observed(j)) theta += x.values(j) * result.beta_effective(j);
        }
        return theta;
    }
    for (Index j : result.required_columns) {
        if (!x.observed(j)) {
            throw InputError(to_string(result.method) + ": query lacks required covariate " + std::to_string(j + 1));
        }
        theta += x.values(j) * result.beta_effective(j);
    }
    return theta;
}

BaselineResult fit_cc(const FragmentaryDataset& data, const ExponentialFamily& family, const FitOptions& opts) {
    const auto index = require_complete_cases(data);
    BaselineResult r;
    r.method = Method::cc;
    r.candidates.push_back(fit_candidate(data, index, 0, family, opts));
    r.beta_effective = embed(r.candidates.front(), data.p());
    r.required_columns = index.pattern(0).indices;
    r.diagnostics["n_cc"] = static_cast<double>(index.s_set(0).size());
    return r;
}

VectorXd smoothed_ic_weights(const VectorXd& ic) {
    if (ic.size() == 0) throw InputError("no information criteria to smooth");
    double best = std::numeric_limits<double>::infinity();
    for (Index k = 0; k < ic.size(); ++k) {
        if (std::isfinite(ic(k))) best = std::min(best, ic(k));
    }
    if (!std::isfinite(best)) throw NumericalError("every information criterion is infinite");
    VectorXd w(ic.size());
    for (Index k = 0; k < ic.size(); ++k) w(k) = std::isfinite(ic(k)) ? std::exp(-0.5 * (ic(k) - best)) : 0.0;
    return w / w.sum();
}

BaselineResult fit_smoothed_ic(const FragmentaryDataset& data, const ExponentialFamily& family, IcFlavor flavor,
                               IcSample sample, const FitOptions& opts) {
    const auto index = build_pattern_index(data);
    auto universe = fit_candidate_universe(data, index, family, opts);
    const auto& rows = index.s_set(universe.lead);
    const auto n1 = static_cast<Index>(rows.size());
    const CriterionContext ctx = make_criterion_context(data, rows, universe.candidates, family);

    VectorXd ic(ctx.K());
    for (Index k = 0; k < ctx.K(); ++k) {
        const auto& c = universe.candidates[static_cast<std::size_t>(k)];
        double ll = 0.0;
        double n_eff = 0.0;
        if (sample == IcSample::complete_cases) {
            ll = loglik(family, ctx.theta.col(k), ctx.y);
            n_eff = static_cast<double>(n1);
        } else {
            ll = c.loglik;
            n_eff = static_cast<double>(c.n_k);
        }
        const double pen = flavor == IcFlavor::aic ? 2.0 : std::log(n_eff);
        ic(k) = -2.0 * ll + pen * static_cast<double>(c.p_k);
    }

    BaselineResult r;
    r.method = flavor == IcFlavor::aic ? Method::saic : Method::sbic;
    WeightVector w(smoothed_ic_weights(ic));
    r.beta_effective = combine_betas(universe.candidates, w, data.p());
    r.weights = std::move(w);
    r.candidates = std::move(universe.candidates);
    r.required_columns = index.pattern(universe.lead).indices;
    r.notes = std::move(universe.warnings);
    r.diagnostics["n_weighting"] = static_cast<double>(n1);
    return r;
}

BaselineResult fit_imp(const FragmentaryDataset& data, const ExponentialFamily& family, LambdaMode mode,
                       const FitOptions& fit, const OptOptions& opt) {
    const auto index = build_pattern_index(data);
    MatrixXd filled = MatrixXd::Zero(data.n(), data.p());
    for (Index j = 0; j < data.p(); ++j) {
        for (Index i = 0; i < data.n(); ++i) {
            if (data.mask(i, j)) filled(i, j) = data.x(i, j);
        }
    }

    BaselineResult r;
    r.method = mode == LambdaMode::opt1 ? Method::imp1 : Method::imp2;
    r.zero_fill = true;
    CriterionContext ctx;
    ctx.family = family;
    ctx.y = data.y;
    ctx.theta.resize(data.n(), index.K());
    ctx.sizes.resize(index.K());
    for (Index k = 0; k < index.K(); ++k) {
        const auto& pat = index.pattern(k);
        MatrixXd X(data.n(), pat.size());
        for (Index c = 0; c < pat.size(); ++c) X.col(c) = filled.col(pat.indices[static_cast<std::size_t>(c)]);
        GlmFit g;
        try {
            g = fit_glm(X, data.y, family, fit);
        } catch (const RankDeficientError& e) {
            throw RankDeficientError("zero-imputed candidate " + std::to_string(k + 1) + " rejected: " + e.what(),
                                     e.columns());
        }
        CandidateModel c;
        c.pattern = pat;
        c.n_k = data.n();
        c.p_k = pat.size();
        c.loglik = g.loglik;
        c.converged = g.converged;
        c.iterations = g.iterations;
        c.separation_guard = g.separation_guard;
        ctx.theta.col(k) = X * g.beta;
        ctx.sizes(k) = static_cast<double>(pat.size());
        c.beta = std::move(g.beta);
        r.candidates.push_back(std::move(c));
    }
    const double lambda = lambda_default(mode, data.n());
    const WeightFit wfit = optimize_weights(ctx, lambda, opt);
    r.beta_effective = combine_betas(r.candidates, wfit.weights, data.p());
    r.weights = wfit.weights;
    r.diagnostics["lambda"] = lambda;
    r.diagnostics["criterion"] = wfit.value;
    r.diagnostics["kkt_residual"] = wfit.kkt_residual;
    return r;
}

BaselineResult fit_glasso(const FragmentaryDataset& data, const ExponentialFamily& family,
                          const std::vector<ColumnGroup>& groups, int cv_folds, std::uint64_t seed,
                          const FitOptions& fit, const GroupLassoOptions& solver) {
    const auto index = require_complete_cases(data);
    std::set<Index> seen;
    GroupLassoProblem prob;
    prob.family = family;
    for (const auto& g : groups) {
        if (g.columns.empty()) continue;
        for (Index j : g.columns) {
            if (j < 0 || j >= data.p()) throw InputError("group '" + g.name + "' refers to a column outside the data");
            if (!seen.insert(j).second) throw InputError("column " + std::to_string(j + 1) + " appears in two groups");
        }
        prob.groups.push_back(g.columns);
    }
    if (prob.groups.empty()) throw InputError("group lasso needs at least one covariate group");

    const auto& cc_rows = index.s_set(0);
    prob.X = design_matrix(data, cc_rows, index.pattern(0).indices);
    prob.y = gather(data.y, cc_rows);
    const auto cv = cross_validate_group_lasso(prob, cv_folds, seed, 50, 1e-3, solver);

    std::vector<Index> selected = prob.unpenalized();
    for (std::size_t g : cv.selected_groups) {
        selected.insert(selected.end(), prob.groups[g].begin(), prob.groups[g].end());
    }
    std::sort(selected.begin(), selected.end());

    BaselineResult r;
    r.method = Method::glasso;
    r.beta_effective = VectorXd::Zero(data.p());
    r.required_columns = selected;
    r.diagnostics["lambda"] = cv.lambdas[cv.best];
    r.diagnostics["groups_selected"] = static_cast<double>(cv.selected_groups.size());
    if (cv.selected_groups.empty()) r.notes.push_back("no group selected; intercept-only refit");
    if (selected.empty()) {
        r.notes.push_back("nothing to refit; linear predictor fixed at 0");
        return r;
    }

    std::vector<Index> rows;
    for (Index i = 0; i < data.n(); ++i) {
        if (std::all_of(selected.begin(), selected.end(), [&](Index j) { return data.mask(i, j); })) rows.push_back(i);
    }
    const MatrixXd X = design_matrix(data, rows, selected);
    const GlmFit g = fit_glm(X, gather(data.y, rows), family, fit);
    for (std::size_t c = 0; c < selected.size(); ++c) r.beta_effective(selected[c]) = g.beta(static_cast<Index>(c));
    CandidateModel refit;
    refit.pattern = Pattern{selected, 0};
    refit.beta = g.beta;
    refit.n_k = static_cast<Index>(rows.size());
    refit.p_k = static_cast<Index>(selected.size());
    refit.loglik = g.loglik;
    refit.converged = g.converged;
    refit.iterations = g.iterations;
    refit.separation_guard = g.separation_guard;
    r.candidates.push_back(std::move(refit));
    r.diagnostics["n_refit"] = static_cast<double>(rows.size());
    return r;
}

BaselineResult fit_opt(const FragmentaryDataset& data, const ExponentialFamily& family, LambdaMode mode,
                       const AveragingOptions& opts) {
    AveragingOptions o = opts;
    o.lambda = LambdaSpec::from_mode(mode);
    AveragedModel m = fit_averaged(data, family, o);
    BaselineResult r;
    r.method = mode == LambdaMode::opt1 ? Method::opt1 : Method::opt2;
    r.beta_effective = m.beta_combined;
    r.weights = m.weights;
    r.candidates = std::move(m.candidates);
    r.required_columns = m.weighting_pattern.indices;
    r.notes = std::move(m.warnings);
    r.diagnostics["lambda"] = m.lambda_n;
    r.diagnostics["criterion"] = m.criterion_value;
    r.diagnostics["kkt_residual"] = m.kkt_residual;
    r.diagnostics["n_weighting"] = static_cast<double>(m.weighting_sample_size);
    return r;
}

BaselineResult fit_method(Method method, const FragmentaryDataset& data, const ExponentialFamily& family,
                          const MethodOptions& opts) {
    switch (method) {
        case Method::opt1: return fit_opt(data, family, LambdaMode::opt1, opts.averaging);
        case Method::opt2: return fit_opt(data, family, LambdaMode::opt2, opts.averaging);
        case Method::cc: return fit_cc(data, family, opts.averaging.fit);
        case Method::saic: return fit_smoothed_ic(data, family, IcFlavor::aic, opts.ic_sample, opts.averaging.fit);
        case Method::sbic: return fit_smoothed_ic(data, family, IcFlavor::bic, opts.ic_sample, opts.averaging.fit);
        case Method::imp1: return fit_imp(data, family, LambdaMode::opt1, opts.averaging.fit, opts.averaging.opt);
        case Method::imp2: return fit_imp(data, family, LambdaMode::opt2, opts.averaging.fit, opts.averaging.opt);
        case Method::glasso:
            return fit_glasso(data, family, opts.groups, opts.cv_folds, opts.seed, opts.averaging.fit, opts.solver);
    }
    throw InputError("unknown method");
}

std::vector<ColumnGroup> remap_groups(const std::vector<ColumnGroup>& groups, const Pattern& target) {
    std::vector<ColumnGroup> out;
    for (const auto& g : groups) {
        ColumnGroup ng{g.name, {}};
        for (Index j : g.columns) {
            const auto it = std::lower_bound(target.indices.begin(), target.indices.end(), j);
            if (it != target.indices.end() && *it == j) ng.columns.push_back(static_cast<Index>(it - target.indices.begin()));
        }
        if (!ng.columns.empty()) out.push_back(std::move(ng));
    }
    return out;
}

}  // namespace fragavg
