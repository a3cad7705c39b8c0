#pragma once

#include <vector>

#include "fragavg/dataset.hpp"

namespace fragavg {

/// Pearson correlation of column j with y over the subjects observing j.
/// NaN when fewer than two such subjects exist or either side is constant.
double pairwise_correlation(const FragmentaryDataset& data, Index j);

struct ScreenResult {
    std::vector<Index> kept;          // ascending column positions
    std::vector<double> correlation;  // per column; NaN for ungrouped columns
};

/// Keeps the `keep` columns with largest |correlation| in every group (ties by
/// column position) and every column outside the groups. Throws InputError for
/// a group none of whose columns is observed alongside the response.
ScreenResult screen_columns(const FragmentaryDataset& data, const std::vector<ColumnGroup>& groups, Index keep);

}  // namespace fragavg
