#include "fragavg/patterns.hpp"

#include <algorithm>
#include <map>
#include <numeric>

#include "fragavg/error.hpp"

namespace fragavg {

bool Pattern::contains(Index j) const { return std::binary_search(indices.begin(), indices.end(), j); }

bool Pattern::subset_of(const Pattern& other) const {
    return std::includes(other.indices.begin(), other.indices.end(), indices.begin(), indices.end());
}

PatternIndex::PatternIndex(std::vector<Pattern> patterns, std::vector<std::vector<Index>> t_sets,
                           std::vector<std::vector<Index>> s_sets, std::vector<int> subject_pattern, Index p)
    : patterns_(std::move(patterns)),
      t_sets_(std::move(t_sets)),
      s_sets_(std::move(s_sets)),
      subject_pattern_(std::move(subject_pattern)),
      p_(p) {
    for (const auto& pat : patterns_) {
        MatrixXd proj = MatrixXd::Zero(pat.size(), p_);
        for (Index r = 0; r < pat.size(); ++r) proj(r, pat.indices[static_cast<std::size_t>(r)]) = 1.0;
        projections_.push_back(std::move(proj));
    }
    for (const auto& t : t_sets_) permutation_.insert(permutation_.end(), t.begin(), t.end());
}

PatternIndex build_pattern_index(const FragmentaryDataset& data, PatternOrder order) {
    if (data.n() == 0) throw InputError("cannot index an empty dataset");
    if (data.p() == 0) throw InputError("dataset has no covariates");

    // Distinct D_i in order of first appearance.
    std::map<std::vector<Index>, int> seen;
    std::vector<std::vector<Index>> distinct;
    std::vector<int> raw_of_subject(static_cast<std::size_t>(data.n()));
    for (Index i = 0; i < data.n(); ++i) {
        auto cols = data.observed_columns(i);
        if (cols.empty()) {
            throw InputError("subject " + std::to_string(i + 1) + " has no observed covariates");
        }
        auto [it, inserted] = seen.try_emplace(cols, static_cast<int>(distinct.size()));
        if (inserted) distinct.push_back(std::move(cols));
        raw_of_subject[static_cast<std::size_t>(i)] = it->second;
    }

    std::vector<int> order_of(distinct.size());
    std::iota(order_of.begin(), order_of.end(), 0);
    if (order == PatternOrder::by_size) {
        std::sort(order_of.begin(), order_of.end(), [&](int a, int b) {
            const auto& da = distinct[static_cast<std::size_t>(a)];
            const auto& db = distinct[static_cast<std::size_t>(b)];
            if (da.size() != db.size()) return da.size() > db.size();
            return da < db;
        });
    } else {
        // Stable: move the full pattern (if any) to the front.
        std::stable_partition(order_of.begin(), order_of.end(), [&](int a) {
            return static_cast<Index>(distinct[static_cast<std::size_t>(a)].size()) == data.p();
        });
    }

    std::vector<int> position_of_raw(distinct.size());
    std::vector<Pattern> patterns;
    for (std::size_t k = 0; k < order_of.size(); ++k) {
        position_of_raw[static_cast<std::size_t>(order_of[k])] = static_cast<int>(k);
        patterns.push_back(Pattern{distinct[static_cast<std::size_t>(order_of[k])], static_cast<int>(k) + 1});
    }

    const auto K = patterns.size();
    std::vector<std::vector<Index>> t_sets(K), s_sets(K);
    std::vector<int> subject_pattern(static_cast<std::size_t>(data.n()));
    for (Index i = 0; i < data.n(); ++i) {
        const int k = position_of_raw[static_cast<std::size_t>(raw_of_subject[static_cast<std::size_t>(i)])];
        subject_pattern[static_cast<std::size_t>(i)] = k;
        t_sets[static_cast<std::size_t>(k)].push_back(i);
    }
    for (std::size_t k = 0; k < K; ++k) {
        const auto& idx = patterns[k].indices;
        for (Index i = 0; i < data.n(); ++i) {
            const bool covers = std::all_of(idx.begin(), idx.end(), [&](Index j) { return data.mask(i, j); });
            if (covers) s_sets[k].push_back(i);
        }
    }
    return PatternIndex(std::move(patterns), std::move(t_sets), std::move(s_sets), std::move(subject_pattern),
                        data.p());
}

FragmentaryDataset restrict_to(const FragmentaryDataset& data, const Pattern& target) {
    if (target.indices.empty()) throw InputError("restriction target pattern is empty");
    for (Index j : target.indices) {
        if (j < 0 || j >= data.p()) throw InputError("restriction target names a column outside the dataset");
    }
    auto cols = select_columns(data, target.indices);
    std::vector<Index> keep;
    for (Index i = 0; i < cols.n(); ++i) {
        if (cols.mask.row(i).any()) keep.push_back(i);
    }
    if (static_cast<Index>(keep.size()) == cols.n()) return cols;
    return select_rows(cols, keep);
}

double cc_fraction(const PatternIndex& index, Index n) {
    if (n <= 0 || index.K() == 0) return 0.0;
    return static_cast<double>(index.s_set(0).size()) / static_cast<double>(n);
}

Pattern full_pattern(Index p) {
    Pattern pat;
    pat.id = 1;
    for (Index j = 0; j < p; ++j) pat.indices.push_back(j);
    return pat;
}

}  // namespace fragavg
