#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fragavg/averaging.hpp"
#include "fragavg/group_lasso.hpp"

namespace fragavg {

/// Proposed method (opt1/opt2) and the comparators.
enum class Method { opt1, opt2, cc, saic, sbic, imp1, imp2, glasso };

std::string to_string(Method m);
Method parse_method(const std::string& name);
/// Comma-separated list; "all" expands to every method.
std::vector<Method> parse_method_list(const std::string& list);
const std::vector<Method>& all_methods();

struct BaselineResult {
    Method method = Method::opt1;
    VectorXd beta_effective;                // over the dataset's p columns
    std::optional<WeightVector> weights;    // present for opt*, saic, sbic, imp*
    std::vector<CandidateModel> candidates;
    std::vector<Index> required_columns;    // covariates a query must observe
    bool zero_fill = false;                 // IMP: unobserved query cells count as 0
    std::map<std::string, double> diagnostics;
    std::vector<std::string> notes;
};

/// Linear predictor of a fitted method at query x.
double predict_theta(const BaselineResult& result, const PartialVector& x);

/// GLM on the complete cases with every covariate (candidate M_1).
BaselineResult fit_cc(const FragmentaryDataset& data, const ExponentialFamily& family, const FitOptions& opts = {});

enum class IcFlavor { aic, bic };
/// own: each candidate's maximized likelihood on its own S_k, BIC with log n_k.
/// complete_cases: every candidate's log-likelihood evaluated on S_1, BIC with log n_1.
enum class IcSample { complete_cases, own };

/// w_k = exp(−IC_k/2) / Σ_l exp(−IC_l/2), shifted by min IC for stability.
VectorXd smoothed_ic_weights(const VectorXd& ic);

BaselineResult fit_smoothed_ic(const FragmentaryDataset& data, const ExponentialFamily& family, IcFlavor flavor,
                               IcSample sample = IcSample::own, const FitOptions& opts = {});

/// Zero-imputation averaging: unobserved cells set to 0, every pattern's
/// covariate subset fitted on all n subjects, weights by 𝒢 on all n subjects
/// with λ = 2 (opt1) or log n (opt2).
BaselineResult fit_imp(const FragmentaryDataset& data, const ExponentialFamily& family, LambdaMode mode,
                       const FitOptions& fit = {}, const OptOptions& opt = {});

/// Group-lasso selection on the complete cases (λ by cross-validated deviance
/// over a geometric grid), then an unpenalized refit on every subject that
/// observes all selected covariates. Ungrouped columns are always kept.
BaselineResult fit_glasso(const FragmentaryDataset& data, const ExponentialFamily& family,
                          const std::vector<ColumnGroup>& groups, int cv_folds = 5, std::uint64_t seed = 0,
                          const FitOptions& fit = {}, const GroupLassoOptions& solver = {});

/// The proposed method wrapped as a BaselineResult.
BaselineResult fit_opt(const FragmentaryDataset& data, const ExponentialFamily& family, LambdaMode mode,
                       const AveragingOptions& opts = {});

struct MethodOptions {
    AveragingOptions averaging;
    IcSample ic_sample = IcSample::own;
    std::vector<ColumnGroup> groups;    // required for glasso
    int cv_folds = 5;
    std::uint64_t seed = 0;
    GroupLassoOptions solver;
};

BaselineResult fit_method(Method method, const FragmentaryDataset& data, const ExponentialFamily& family,
                          const MethodOptions& opts);

/// Groups re-expressed in the column positions of restrict_to(data, target);
/// columns outside the target are dropped and emptied groups removed.
std::vector<ColumnGroup> remap_groups(const std::vector<ColumnGroup>& groups, const Pattern& target);

}  // namespace fragavg
