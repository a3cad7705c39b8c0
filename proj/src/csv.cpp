#include "fragavg/csv.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "fragavg/error.hpp"

namespace fragavg {
namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

// RFC 4180-ish: double quotes delimit fields, "" is an escaped quote.
std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t k = 0; k < line.size(); ++k) {
        const char c = line[k];
        if (quoted) {
            if (c == '"') {
                if (k + 1 < line.size() && line[k + 1] == '"') {
                    cur.push_back('"');
                    ++k;
                } else {
                    quoted = false;
                }
            } else {
                cur.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(trim(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    fields.push_back(trim(cur));
    return fields;
}

std::optional<double> parse_cell(const std::string& cell, const std::string& na_marker, std::size_t line,
                                 std::size_t col) {
    if (cell.empty() || cell == na_marker) return std::nullopt;
    double v = 0.0;
    const char* begin = cell.data();
    const char* end = begin + cell.size();
    if (*begin == '+') ++begin;
    auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc() || ptr != end) {
        std::ostringstream msg;
        msg << "line " << line << ", column " << col + 1 << ": cannot parse '" << cell << "' as a number";
        throw InputError(msg.str());
    }
    return v;
}

std::ifstream open_or_throw(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open file: " + path);
    return in;
}

Index find_column(const std::vector<std::string>& header, const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    return it == header.end() ? -1 : static_cast<Index>(it - header.begin());
}

}  // namespace

CsvTable parse_csv(std::istream& in, const std::string& na_marker) {
    CsvTable table;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line_no == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
        if (trim(line).empty()) continue;
        auto fields = split_line(line);
        if (table.header.empty()) {
            table.header = std::move(fields);
            continue;
        }
        if (fields.size() != table.header.size()) {
            std::ostringstream msg;
            msg << "line " << line_no << ": expected " << table.header.size() << " fields, found " << fields.size();
            throw InputError(msg.str());
        }
        std::vector<std::optional<double>> row(fields.size());
        for (std::size_t c = 0; c < fields.size(); ++c) row[c] = parse_cell(fields[c], na_marker, line_no, c);
        table.rows.push_back(std::move(row));
    }
    if (table.header.empty()) throw InputError("empty CSV input");
    return table;
}

CsvTable read_csv_table(const std::string& path, const std::string& na_marker) {
    auto in = open_or_throw(path);
    return parse_csv(in, na_marker);
}

FragmentaryDataset dataset_from_table(const CsvTable& table, const CsvOptions& opts) {
    if (opts.response.empty()) throw InputError("a response column must be named");
    const Index resp = find_column(table.header, opts.response);
    if (resp < 0) throw InputError("response column '" + opts.response + "' not found in header");
    if (table.rows.empty()) throw InputError("dataset has no rows");

    const auto n = static_cast<Index>(table.rows.size());
    const auto p = static_cast<Index>(table.header.size()) - 1;
    VectorXd y(n);
    MatrixXd x = MatrixXd::Zero(n, p);
    BoolMatrix mask = BoolMatrix::Constant(n, p, false);
    std::vector<std::string> names;
    for (Index c = 0; c < static_cast<Index>(table.header.size()); ++c) {
        if (c != resp) names.push_back(table.header[static_cast<std::size_t>(c)]);
    }
    for (Index i = 0; i < n; ++i) {
        const auto& row = table.rows[static_cast<std::size_t>(i)];
        const auto& yv = row[static_cast<std::size_t>(resp)];
        if (!yv) {
            std::ostringstream msg;
            msg << "data row " << i + 1 << ": response is missing";
            throw InputError(msg.str());
        }
        y(i) = *yv;
        Index j = 0;
        for (Index c = 0; c < static_cast<Index>(row.size()); ++c) {
            if (c == resp) continue;
            if (const auto& v = row[static_cast<std::size_t>(c)]) {
                x(i, j) = *v;
                mask(i, j) = true;
            }
            ++j;
        }
    }
    FragmentaryDataset data{std::move(y), std::move(x), std::move(mask), std::move(names)};
    if (opts.add_intercept) data = with_intercept(data);
    return make_dataset(std::move(data.y), std::move(data.x), std::move(data.mask), std::move(data.column_names));
}

FragmentaryDataset read_dataset_csv(const std::string& path, const CsvOptions& opts) {
    return dataset_from_table(read_csv_table(path, opts.na_marker), opts);
}

QueryTable query_from_table(const CsvTable& table, const std::vector<std::string>& columns,
                            const std::string& response, const std::string& intercept_name) {
    std::vector<Index> source(columns.size(), -1);
    for (std::size_t c = 0; c < columns.size(); ++c) {
        source[c] = find_column(table.header, columns[c]);
        if (source[c] < 0 && columns[c] != intercept_name) {
            throw InputError("query file lacks column '" + columns[c] + "'");
        }
    }
    QueryTable q;
    const Index resp = response.empty() ? -1 : find_column(table.header, response);
    if (resp >= 0) q.y = VectorXd(static_cast<Index>(table.rows.size()));
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        PartialVector v{VectorXd::Zero(static_cast<Index>(columns.size())),
                        BoolVector::Constant(static_cast<Index>(columns.size()), false)};
        for (std::size_t c = 0; c < columns.size(); ++c) {
            const auto j = static_cast<Index>(c);
            if (source[c] < 0) {
                v.values(j) = 1.0;
                v.observed(j) = true;
            } else if (const auto& cell = row[static_cast<std::size_t>(source[c])]) {
                v.values(j) = *cell;
                v.observed(j) = true;
            }
        }
        if (resp >= 0) {
            const auto& cell = row[static_cast<std::size_t>(resp)];
            (*q.y)(static_cast<Index>(r)) = cell ? *cell : std::numeric_limits<double>::quiet_NaN();
        }
        q.rows.push_back(std::move(v));
    }
    return q;
}

void write_dataset_csv(std::ostream& out, const FragmentaryDataset& data, const std::string& response_name,
                       const std::string& na_marker) {
    out << response_name;
    for (const auto& name : data.column_names) out << ',' << name;
    out << '\n';
    out.precision(17);
    for (Index i = 0; i < data.n(); ++i) {
        out << data.y(i);
        for (Index j = 0; j < data.p(); ++j) {
            out << ',';
            if (data.mask(i, j)) {
                out << data.x(i, j);
            } else {
                out << na_marker;
            }
        }
        out << '\n';
    }
}

std::vector<ColumnGroup> parse_groups_json(std::istream& in, const std::vector<std::string>& column_names) {
    nlohmann::ordered_json doc;
    try {
        doc = nlohmann::ordered_json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("groups sidecar is not valid JSON: ") + e.what());
    }
    if (!doc.contains("groups") || !doc["groups"].is_object()) {
        throw InputError("groups sidecar must contain an object field \"groups\"");
    }
    std::vector<ColumnGroup> groups;
    for (const auto& [name, cols] : doc["groups"].items()) {
        ColumnGroup g{name, {}};
        for (const auto& c : cols) {
            const Index j = find_column(column_names, c.get<std::string>());
            if (j < 0) throw InputError("group '" + name + "' names unknown column '" + c.get<std::string>() + "'");
            g.columns.push_back(j);
        }
        groups.push_back(std::move(g));
    }
    return groups;
}

std::vector<ColumnGroup> read_groups_json(const std::string& path, const std::vector<std::string>& column_names) {
    auto in = open_or_throw(path);
    return parse_groups_json(in, column_names);
}

}  // namespace fragavg
