#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fragavg/baselines.hpp"
#include "fragavg/dataset.hpp"

namespace fragavg {

enum class BetaCase { decay, flat, rise };

std::string to_string(BetaCase c);
BetaCase parse_beta_case(const std::string& name);

/// decay 0.4·(1, 1/2, …, 1/p); flat 0.1·(1, …, 1); rise 0.2·(1/p, …, 1/2, 1).
VectorXd true_beta(BetaCase c, Index p);

struct SimConfig {
    Index n = 400;
    Index p = 14;       // generating covariates including the intercept; the last one is withheld
    BetaCase beta_case = BetaCase::decay;
    double rho = 0.3;
    int reps = 50;
    std::uint64_t seed = 1;
    std::vector<Method> methods = all_methods();
    int threads = 0;    // 0: hardware concurrency
    IcSample ic_sample = IcSample::own;

    /// Throws InputError unless n ≥ p, (p − 2) is a positive multiple of 4,
    /// 0 ≤ rho < 1 and reps ≥ 1.
    void validate() const;
};

struct Replication {
    FragmentaryDataset data;   // p − 1 columns: the last generating covariate is dropped
    VectorXd theta_true;       // Σ_j β_j x_ij over all p generating covariates
    VectorXd p_true;
    int regenerations = 0;     // draws discarded because n_1 < p − 1
};

/// Draws replication `rep`. Each draw uses std::mt19937_64 seeded by
/// seed_seq(seed, rep, substream); a draw with fewer complete cases than data
/// columns is discarded and the next substream used.
Replication generate_replication(const SimConfig& cfg, int rep);

/// `subjects` draws of the non-intercept covariates (mean 1, variance 1,
/// pairwise covariance rho) through the same one-factor sampler as the study.
MatrixXd sample_covariates(Index subjects, Index dims, double rho, std::uint64_t seed);

/// Availability blocks of the data columns: (p − 2)/4 groups of 4 following the intercept.
std::vector<ColumnGroup> availability_groups(Index p);

/// Per-observation KL loss (divided by n_1) of the method's fitted
/// probabilities against the true ones on the complete cases.
double evaluate_method(const BaselineResult& fitted, const Replication& rep);

struct MethodSummary {
    double median = 0.0;
    double q1 = 0.0;
    double q3 = 0.0;
    int failures = 0;
};

struct SimResult {
    std::vector<Method> methods;
    MatrixXd per_rep_kl;                 // reps × methods; NaN marks a failed fit
    VectorXd cc_fraction;                // per rep
    std::vector<int> regenerations;      // per rep
    std::vector<MethodSummary> summary;  // per method, NaN entries excluded
    std::vector<std::string> failures;   // "rep r, method: message"
};

/// Replications run on worker threads and are merged by index, so the result
/// depends only on cfg.
SimResult run_study(const SimConfig& cfg);

/// Type-7 sample quantile of the finite entries; NaN when none are finite.
double quantile(std::vector<double> values, double prob);

/// Fraction of subjects observing all three availability blocks under the
/// simulation mechanism, from `subjects` independent draws.
double sample_cc_fraction(double rho, Index subjects, std::uint64_t seed, Index p = 14);

/// KL(ŵ) / min_w KL(w) on the complete cases of one replication, with ŵ the
/// λ-penalized weight choice and the minimum taken over the whole simplex.
struct OptimalityRatio {
    double kl_selected = 0.0;
    double kl_best = 0.0;
    double ratio = 0.0;
};
OptimalityRatio optimality_ratio(const Replication& rep, LambdaMode mode = LambdaMode::opt1);

/// Synthetic dataset with four covariate sources (CSF with 3 columns, then
/// PET, MRI and GENE with `block` columns each) after an intercept, laid out
/// in the eight availability patterns of the ADNI2 baseline sample
/// (409, 368, 40, 105, 86, 53, 53, 56 subjects). Responses are logistic in
/// the covariates.
struct AdniFixture {
    FragmentaryDataset data;
    std::vector<ColumnGroup> groups;   // CSF, PET, MRI, GENE
};
AdniFixture adni_shaped_fixture(std::uint64_t seed, Index block = 3);

}  // namespace fragavg
