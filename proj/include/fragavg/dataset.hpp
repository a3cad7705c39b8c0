#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace fragavg {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using BoolMatrix = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;
using BoolVector = Eigen::Array<bool, Eigen::Dynamic, 1>;

/// Response plus covariates where each subject observes only a subset of the
/// columns. Cells with mask == false carry no information and must not be read.
struct FragmentaryDataset {
    VectorXd y;
    MatrixXd x;
    BoolMatrix mask;
    std::vector<std::string> column_names;

    Index n() const { return x.rows(); }
    Index p() const { return x.cols(); }

    /// Sorted column indices observed for subject i (D_i).
    std::vector<Index> observed_columns(Index i) const;

    /// Throws InputError if dimensions disagree, y has non-finite entries,
    /// an observed cell is non-finite, or a subject observes nothing.
    void validate() const;
};

/// Validates and returns the dataset. When built with FRAGAVG_POISON_MISSING
/// the unobserved cells are overwritten with a signaling NaN so that any read
/// through the mask shows up in results.
FragmentaryDataset make_dataset(VectorXd y, MatrixXd x, BoolMatrix mask,
                                std::vector<std::string> column_names = {});

/// Same rows, subset of columns (in the given order). Rows are not dropped.
FragmentaryDataset select_columns(const FragmentaryDataset& data, const std::vector<Index>& columns);

/// Subset of rows, all columns.
FragmentaryDataset select_rows(const FragmentaryDataset& data, const std::vector<Index>& rows);

/// Adds an always-observed column of ones at position 0.
FragmentaryDataset with_intercept(const FragmentaryDataset& data, const std::string& name = "(Intercept)");

/// Mask-aware equality: same shape, names, y, mask, and observed cells.
bool same_observed_content(const FragmentaryDataset& a, const FragmentaryDataset& b);

/// A single covariate vector with possibly unavailable entries (a query x*).
struct PartialVector {
    VectorXd values;
    BoolVector observed;

    static PartialVector full(const VectorXd& v);
    Index size() const { return values.size(); }
    std::vector<Index> observed_indices() const;
};

/// Row i of a dataset as a partial vector.
PartialVector row_of(const FragmentaryDataset& data, Index i);

/// Named set of columns, e.g. one data source in block-missing data.
struct ColumnGroup {
    std::string name;
    std::vector<Index> columns;
};

}  // namespace fragavg
