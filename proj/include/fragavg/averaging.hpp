#pragma once

#include <string>
#include <vector>

#include "fragavg/dataset.hpp"
#include "fragavg/family.hpp"
#include "fragavg/glm.hpp"
#include "fragavg/patterns.hpp"

namespace fragavg {

/// A point of the unit simplex. Tiny negative entries from floating-point
/// arithmetic (> -1e-12) are clipped; the vector is renormalized to sum 1.
class WeightVector {
public:
    explicit WeightVector(VectorXd w);
    static WeightVector uniform(Index K);
    static WeightVector vertex(Index K, Index k);

    const VectorXd& values() const { return w_; }
    Index size() const { return w_.size(); }
    double operator[](Index k) const { return w_(k); }

private:
    VectorXd w_;
};

/// Per-candidate linear predictors on the weighting sample. Column k is
/// X_1 Π_k^T β̂_(k), so θ{β̂(w)} = theta · w.
struct CriterionContext {
    MatrixXd theta;   // n_1 × K
    VectorXd y;       // n_1
    VectorXd sizes;   // p_k
    ExponentialFamily family = ExponentialFamily::binomial();

    Index K() const { return theta.cols(); }
    Index n() const { return theta.rows(); }
};

/// Builds the context from candidate models evaluated on the given rows.
CriterionContext make_criterion_context(const FragmentaryDataset& data, const std::vector<Index>& rows,
                                        const std::vector<CandidateModel>& candidates,
                                        const ExponentialFamily& family);

/// 𝒢(w) = 2φ^{-1}{Σ b(θ_i(w)) − Σ y_i θ_i(w)} + λ Σ w_k p_k.
double criterion(const CriterionContext& ctx, const VectorXd& w, double lambda_n);
double criterion(const CriterionContext& ctx, const WeightVector& w, double lambda_n);

/// ∂𝒢/∂w_k = 2φ^{-1} Σ_i (b'(θ_i(w)) − y_i) theta(i, k) + λ p_k.
VectorXd criterion_gradient(const CriterionContext& ctx, const VectorXd& w, double lambda_n);
VectorXd criterion_gradient(const CriterionContext& ctx, const WeightVector& w, double lambda_n);

/// 2φ^{-1} Θ^T diag(b''(θ(w))) Θ; the penalty is linear and does not contribute.
MatrixXd criterion_hessian(const CriterionContext& ctx, const VectorXd& w);

/// Binomial-only closed form −2 Σ[y log p̂ + (1−y) log(1−p̂)] + λ Σ w_k p_k
/// with p̂ clamped to [1e-12, 1 − 1e-12].
double criterion_logistic_form(const CriterionContext& ctx, const VectorXd& w, double lambda_n);

struct OptOptions {
    int max_iter = 5000;
    double kkt_tol = 1e-7;
    double armijo_c = 1e-4;
    bool newton_polish = true;
};

struct WeightFit {
    WeightVector weights = WeightVector::uniform(1);
    double value = 0.0;
    double kkt_residual = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Minimizes 𝒢 over the simplex by projected gradient descent (Armijo
/// backtracking along the projection arc, Barzilai-Borwein trial steps)
/// started from uniform weights, with a Newton refinement on the current
/// support face. 𝒢 is convex in w, so the KKT point found is a global
/// minimum; on flat optima the point reached from the uniform start is
/// returned. Non-convergence returns the best iterate with converged = false.
WeightFit optimize_weights(const CriterionContext& ctx, double lambda_n, const OptOptions& opts = {});

enum class LambdaMode { opt1, opt2 };

/// opt1 → 2, opt2 → log(n_1).
double lambda_default(LambdaMode mode, Index n1);

/// λ_n choice as given on the command line: "2", "log-n1" or a number.
struct LambdaSpec {
    enum class Kind { two, log_n1, fixed } kind = Kind::two;
    double value = 2.0;

    static LambdaSpec parse(const std::string& text);
    static LambdaSpec from_mode(LambdaMode mode);
    double resolve(Index n1) const;
    std::string to_string() const;
};

struct AveragingOptions {
    FitOptions fit;
    OptOptions opt;
    LambdaSpec lambda;
    PatternOrder order = PatternOrder::by_size;
};

/// Candidates, selected weights and the combined coefficient vector
/// β̂(w) = Σ_k w_k Π_k^T β̂_(k) over the dataset's p columns.
struct AveragedModel {
    ExponentialFamily family = ExponentialFamily::binomial();
    std::vector<std::string> column_names;
    std::vector<CandidateModel> candidates;
    WeightVector weights = WeightVector::uniform(1);
    VectorXd beta_combined;
    double lambda_n = 0.0;
    double criterion_value = 0.0;
    Pattern weighting_pattern;      // Δ_1; S of this pattern is the weighting sample
    Index weighting_sample_size = 0;
    Index n = 0;
    Index patterns_total = 0;       // K of the pattern index before universe filtering
    double kkt_residual = 0.0;
    int optimizer_iterations = 0;
    bool optimizer_converged = false;
    std::vector<std::string> warnings;

    Index p() const { return beta_combined.size(); }
};

/// The candidate list used for weighting: every pattern contained in the
/// weighting pattern Δ_1 (the pattern with most covariates), each fitted on S_k.
struct CandidateUniverse {
    Index lead = 0;                      // pattern position of Δ_1 in the index
    std::vector<Index> pattern_ids;      // pattern positions, ascending
    std::vector<CandidateModel> candidates;
    std::vector<std::string> warnings;
};

CandidateUniverse fit_candidate_universe(const FragmentaryDataset& data, const PatternIndex& index,
                                         const ExponentialFamily& family, const FitOptions& opts = {});

/// Σ_k w_k Π_k^T β̂_(k).
VectorXd combine_betas(const std::vector<CandidateModel>& candidates, const WeightVector& weights, Index p);

/// Fits every candidate, selects weights on S_1 and combines. Candidates
/// whose pattern is not contained in Δ_1 are dropped with a warning (they
/// cannot be evaluated on the weighting sample).
AveragedModel fit_averaged(const FragmentaryDataset& data, const ExponentialFamily& family,
                           const AveragingOptions& opts = {});
AveragedModel fit_averaged(const FragmentaryDataset& data, const PatternIndex& index,
                           const ExponentialFamily& family, const AveragingOptions& opts = {});

struct Prediction {
    double theta = 0.0;
    double mean = 0.0;
};

/// θ̂* = x*^T β̂(ŵ), mean = b'(θ̂*). Requires x observed on Δ_1.
Prediction predict(const AveragedModel& model, const PartialVector& x);
Prediction predict(const AveragedModel& model, const VectorXd& x_full);

struct PatternPrediction {
    Prediction prediction;
    Pattern query_pattern;   // D*
    Index candidates = 0;    // size of the rebuilt candidate universe
    AveragedModel model;     // the restricted model that produced the prediction
};

/// Prediction for a query observing only D*: drop the covariates outside D*,
/// rebuild and refit the candidate universe on the restricted data, reselect
/// weights and predict. For D* = D this is the unrestricted pipeline.
PatternPrediction predict_for_pattern(const FragmentaryDataset& data, const ExponentialFamily& family,
                                      const PartialVector& x_star, const AveragingOptions& opts = {});

struct KlLoss {
    double total = 0.0;
    Index n = 0;
    std::size_t clamped = 0;  // fitted probabilities pushed into [1e-12, 1 − 1e-12]

    double per_observation() const { return n > 0 ? total / static_cast<double>(n) : 0.0; }
};

/// Twice the summed KL divergence from the true distribution (θ_0) to the
/// fitted one (θ̂): 2φ^{-1} Σ[b(θ̂) − b(θ_0) − b'(θ_0)(θ̂ − θ_0)]. Binomial
/// inputs are routed through the probability form with clamping.
KlLoss kl_loss(const VectorXd& theta_hat, const VectorXd& theta_true, const ExponentialFamily& family);

/// 2 Σ[μ log(μ/p̂) + (1−μ) log((1−μ)/(1−p̂))], μ ∈ [0, 1] with 0 log 0 = 0.
KlLoss kl_loss_logistic(const VectorXd& p_hat, const VectorXd& mu);

/// 2φ^{-1} Σ[sup_θ{yθ − b(θ)} − (y θ̂ − b(θ̂))]: the KL loss against observed
/// responses, used when true means are unknown.
double deviance(const VectorXd& theta_hat, const VectorXd& y, const ExponentialFamily& family);

}  // namespace fragavg
