#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "fragavg/dataset.hpp"

namespace fragavg {

struct CsvOptions {
    std::string response;            // required for datasets; optional for query files
    std::string na_marker = "NA";    // empty cells are always missing
    bool add_intercept = true;       // prepend an always-observed "(Intercept)" column
};

/// Raw parsed table: header plus numeric cells, nullopt for missing.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::optional<double>>> rows;
};

/// Parses a header row and numeric cells. Throws InputError naming the
/// offending line for ragged rows or unparseable values.
CsvTable parse_csv(std::istream& in, const std::string& na_marker);
CsvTable read_csv_table(const std::string& path, const std::string& na_marker);

/// Builds a fragmentary dataset: the response column must be fully observed.
FragmentaryDataset dataset_from_table(const CsvTable& table, const CsvOptions& opts);
FragmentaryDataset read_dataset_csv(const std::string& path, const CsvOptions& opts);

/// Query rows aligned to the given covariate names. The intercept column, if
/// named in `columns` but absent from the file, is filled with ones.
struct QueryTable {
    std::vector<PartialVector> rows;
    std::optional<VectorXd> y;  // present when the response column is in the file
};
QueryTable query_from_table(const CsvTable& table, const std::vector<std::string>& columns,
                            const std::string& response, const std::string& intercept_name = "(Intercept)");

/// Writes response + covariates; unobserved cells are written as na_marker.
void write_dataset_csv(std::ostream& out, const FragmentaryDataset& data, const std::string& response_name,
                       const std::string& na_marker);

/// Reads {"groups": {"name": ["col", ...], ...}} (object order preserved) and
/// resolves names against the dataset columns.
std::vector<ColumnGroup> read_groups_json(const std::string& path, const std::vector<std::string>& column_names);
std::vector<ColumnGroup> parse_groups_json(std::istream& in, const std::vector<std::string>& column_names);

}  // namespace fragavg
