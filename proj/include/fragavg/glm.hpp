#pragma once

#include <vector>

#include "fragavg/dataset.hpp"
#include "fragavg/family.hpp"
#include "fragavg/patterns.hpp"

namespace fragavg {

struct FitOptions {
    int max_iter = 100;
    double grad_tol = 1e-8;         // max-norm of the score at convergence
    double ridge = 1e-8;            // added once ‖β‖ exceeds divergence_norm or the score vanishes under a large Newton step
    double divergence_norm = 1e4;
    double rank_tol = 1e-10;        // relative pivot threshold of the QR rank check
    bool step_halving = true;
};

/// Result of maximum-likelihood IRLS on a plain design matrix.
struct GlmFit {
    VectorXd beta;
    double loglik = 0.0;
    double grad_norm = 0.0;
    int iterations = 0;
    bool converged = false;
    bool separation_guard = false;   // ridge was switched on because β diverged
    std::vector<double> loglik_trace; // objective after each accepted step
};

/// Fisher scoring (Newton for canonical links) with step-halving on the
/// log-likelihood. Throws RankDeficientError (listing the dropped pivot
/// columns) when X fails the rank check, InputError for responses outside the
/// family's support. Non-convergence is reported, not thrown.
GlmFit fit_glm(const MatrixXd& X, const VectorXd& y, const ExponentialFamily& family, const FitOptions& opts = {});

/// Σ_i (y_i θ_i − b(θ_i)) / φ. The c(y, φ) term is omitted, so values differ
/// from full log-densities by a β-independent constant.
double loglik(const ExponentialFamily& family, const VectorXd& theta, const VectorXd& y);

/// X^T (y − b'(Xβ)) / φ
VectorXd score(const MatrixXd& X, const VectorXd& y, const VectorXd& beta, const ExponentialFamily& family);

/// Fitted candidate model M_k: pattern Δ_k fitted on S_k.
struct CandidateModel {
    Pattern pattern;
    VectorXd beta;
    Index n_k = 0;
    Index p_k = 0;
    double loglik = 0.0;
    bool converged = false;
    int iterations = 0;
    bool separation_guard = false;
};

/// Design submatrix X(rows, cols) read only through observed cells.
MatrixXd design_matrix(const FragmentaryDataset& data, const std::vector<Index>& rows, const std::vector<Index>& cols);
VectorXd gather(const VectorXd& v, const std::vector<Index>& rows);

/// Fits M_k (0-based k) on {(y_i, x_ij): i ∈ S_k, j ∈ Δ_k}.
CandidateModel fit_candidate(const FragmentaryDataset& data, const PatternIndex& index, Index k,
                             const ExponentialFamily& family, const FitOptions& opts = {});

/// x_k^T β̂_(k) with x_k = Π_k x. Throws InputError if any Δ_k entry of x is unobserved.
double linear_predictor(const CandidateModel& model, const PartialVector& x);
double linear_predictor(const CandidateModel& model, const VectorXd& x_full);

/// β̂ embedded into a p-vector: Π_k^T β̂_(k).
VectorXd embed(const CandidateModel& model, Index p);

}  // namespace fragavg
