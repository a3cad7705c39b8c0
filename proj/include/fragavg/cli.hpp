#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "fragavg/averaging.hpp"
#include "fragavg/baselines.hpp"
#include "fragavg/patterns.hpp"

namespace fragavg {

/// Runs `fragavg <subcommand> ...` with args excluding the program name.
/// Returns 0 on success, 1 on numerical failure, 2 on input errors.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Pattern table with one row per pattern: an availability mark per column,
/// 1-based T_k and S_k, n_k, p_k, and the weight when a model is given.
std::string pattern_report(const FragmentaryDataset& data, const PatternIndex& index,
                           const AveragedModel* model = nullptr);

/// Training rows for a random train/test split. With `by_pattern` the
/// fraction is applied within each pattern's T_k (rounded, at least one row
/// kept for training). Result is sorted.
std::vector<Index> split_training_rows(const PatternIndex& index, double fraction, bool by_pattern,
                                       std::uint64_t seed);

/// Fitted linear predictors of a method for query rows. Rows whose covariates
/// do not cover what the full fit needs are predicted by refitting the method
/// on the training data restricted to the row's observed columns.
struct MethodPredictions {
    VectorXd theta;                  // NaN where no prediction was possible
    std::vector<std::string> rule;   // "direct", "restricted" or "failed"
    std::vector<std::string> notes;
};
MethodPredictions predict_with_method(Method method, const FragmentaryDataset& train, const ExponentialFamily& family,
                                      const MethodOptions& opts, const std::vector<PartialVector>& queries);

}  // namespace fragavg
