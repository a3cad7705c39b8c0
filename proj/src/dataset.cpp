#include "fragavg/dataset.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "fragavg/error.hpp"

namespace fragavg {

std::vector<Index> FragmentaryDataset::observed_columns(Index i) const {
    std::vector<Index> cols;
    for (Index j = 0; j < p(); ++j) {
        if (mask(i, j)) cols.push_back(j);
    }
    return cols;
}

void FragmentaryDataset::validate() const {
    if (x.rows() != mask.rows() || x.cols() != mask.cols()) {
        throw InputError("covariate matrix and mask have different dimensions");
    }
    if (y.size() != x.rows()) {
        throw InputError("response length does not match the number of subjects");
    }
    if (!column_names.empty() && static_cast<Index>(column_names.size()) != x.cols()) {
        throw InputError("column name count does not match the number of covariates");
    }
    for (Index i = 0; i < n(); ++i) {
        if (!std::isfinite(y(i))) {
            std::ostringstream msg;
            msg << "subject " << i + 1 << " has a missing or non-finite response";
            throw InputError(msg.str());
        }
        bool any = false;
        for (Index j = 0; j < p(); ++j) {
            if (!mask(i, j)) continue;
            any = true;
            if (!std::isfinite(x(i, j))) {
                std::ostringstream msg;
                msg << "subject " << i + 1 << ", column " << j + 1 << " is observed but not finite";
                throw InputError(msg.str());
            }
        }
        if (!any) {
            std::ostringstream msg;
            msg << "subject " << i + 1 << " has no observed covariates";
            throw InputError(msg.str());
        }
    }
}

FragmentaryDataset make_dataset(VectorXd y, MatrixXd x, BoolMatrix mask,
                                std::vector<std::string> column_names) {
    FragmentaryDataset data{std::move(y), std::move(x), std::move(mask), std::move(column_names)};
    if (data.column_names.empty()) {
        for (Index j = 0; j < data.x.cols(); ++j) data.column_names.push_back("X" + std::to_string(j + 1));
    }
    data.validate();
#ifdef FRAGAVG_POISON_MISSING
    const double poison = std::numeric_limits<double>::signaling_NaN();
    for (Index j = 0; j < data.p(); ++j) {
        for (Index i = 0; i < data.n(); ++i) {
            if (!data.mask(i, j)) data.x(i, j) = poison;
        }
    }
#endif
    return data;
}

FragmentaryDataset select_columns(const FragmentaryDataset& data, const std::vector<Index>& columns) {
    MatrixXd x(data.n(), static_cast<Index>(columns.size()));
    BoolMatrix mask(data.n(), static_cast<Index>(columns.size()));
    std::vector<std::string> names;
    for (std::size_t c = 0; c < columns.size(); ++c) {
        const Index j = columns[c];
        if (j < 0 || j >= data.p()) throw InputError("column index out of range");
        x.col(static_cast<Index>(c)) = data.x.col(j);
        mask.col(static_cast<Index>(c)) = data.mask.col(j);
        names.push_back(data.column_names[static_cast<std::size_t>(j)]);
    }
    // No re-validation: callers may intentionally produce rows with nothing observed.
    return FragmentaryDataset{data.y, std::move(x), std::move(mask), std::move(names)};
}

FragmentaryDataset select_rows(const FragmentaryDataset& data, const std::vector<Index>& rows) {
    const auto m = static_cast<Index>(rows.size());
    FragmentaryDataset out{VectorXd(m), MatrixXd(m, data.p()), BoolMatrix(m, data.p()), data.column_names};
    for (Index r = 0; r < m; ++r) {
        const Index i = rows[static_cast<std::size_t>(r)];
        out.y(r) = data.y(i);
        out.x.row(r) = data.x.row(i);
        out.mask.row(r) = data.mask.row(i);
    }
    return out;
}

FragmentaryDataset with_intercept(const FragmentaryDataset& data, const std::string& name) {
    FragmentaryDataset out{data.y, MatrixXd(data.n(), data.p() + 1), BoolMatrix(data.n(), data.p() + 1), {}};
    out.x.col(0).setOnes();
    out.mask.col(0).setConstant(true);
    out.x.rightCols(data.p()) = data.x;
    out.mask.rightCols(data.p()) = data.mask;
    out.column_names.push_back(name);
    out.column_names.insert(out.column_names.end(), data.column_names.begin(), data.column_names.end());
    return out;
}

bool same_observed_content(const FragmentaryDataset& a, const FragmentaryDataset& b) {
    if (a.n() != b.n() || a.p() != b.p()) return false;
    if (a.column_names != b.column_names) return false;
    if (a.y != b.y) return false;
    if ((a.mask != b.mask).any()) return false;
    for (Index i = 0; i < a.n(); ++i) {
        for (Index j = 0; j < a.p(); ++j) {
            if (a.mask(i, j) && a.x(i, j) != b.x(i, j)) return false;
        }
    }
    return true;
}

PartialVector PartialVector::full(const VectorXd& v) {
    return PartialVector{v, BoolVector::Constant(v.size(), true)};
}

std::vector<Index> PartialVector::observed_indices() const {
    std::vector<Index> idx;
    for (Index j = 0; j < size(); ++j) {
        if (observed(j)) idx.push_back(j);
    }
    return idx;
}

PartialVector row_of(const FragmentaryDataset& data, Index i) {
    return PartialVector{data.x.row(i).transpose(), data.mask.row(i).transpose()};
}

}  // namespace fragavg
