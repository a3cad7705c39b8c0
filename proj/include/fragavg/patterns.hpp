#pragma once

#include <vector>

#include "fragavg/dataset.hpp"

namespace fragavg {

/// A response pattern: the sorted set of covariate columns a group of
/// subjects observes.
struct Pattern {
    std::vector<Index> indices;
    int id = 0;  // 1-based position in its PatternIndex

    Index size() const { return static_cast<Index>(indices.size()); }
    bool contains(Index j) const;
    /// this ⊆ other
    bool subset_of(const Pattern& other) const;
    bool operator==(const Pattern& other) const { return indices == other.indices; }
};

enum class PatternOrder {
    /// Most covariates first, ties broken lexicographically by index set.
    by_size,
    /// Full pattern first (if present), then order of first appearance in the data.
    first_appearance,
};

/// Decomposition of a fragmentary dataset into its K response patterns.
///
/// t_sets(k) holds subjects whose pattern is exactly patterns(k); s_sets(k)
/// holds subjects observing every covariate of patterns(k). Subject indices are
/// 0-based rows of the source dataset, ascending within each set.
class PatternIndex {
public:
    PatternIndex(std::vector<Pattern> patterns, std::vector<std::vector<Index>> t_sets,
                 std::vector<std::vector<Index>> s_sets, std::vector<int> subject_pattern, Index p);

    Index K() const { return static_cast<Index>(patterns_.size()); }
    Index n() const { return static_cast<Index>(subject_pattern_.size()); }
    Index p() const { return p_; }

    const std::vector<Pattern>& patterns() const { return patterns_; }
    const Pattern& pattern(Index k) const { return patterns_[static_cast<std::size_t>(k)]; }
    const std::vector<Index>& t_set(Index k) const { return t_sets_[static_cast<std::size_t>(k)]; }
    const std::vector<Index>& s_set(Index k) const { return s_sets_[static_cast<std::size_t>(k)]; }
    const std::vector<std::vector<Index>>& t_sets() const { return t_sets_; }
    const std::vector<std::vector<Index>>& s_sets() const { return s_sets_; }

    /// 0/1 selection matrix of size p_k × p.
    const MatrixXd& projection(Index k) const { return projections_[static_cast<std::size_t>(k)]; }

    /// 0-based pattern position of each subject.
    int pattern_of(Index i) const { return subject_pattern_[static_cast<std::size_t>(i)]; }

    /// Subjects listed pattern by pattern (T_1, T_2, ...): the rearrangement
    /// that makes each T_k contiguous. Ingestion order is never changed.
    const std::vector<Index>& permutation() const { return permutation_; }

    /// True when the first pattern contains every covariate (S_1 = CC sample).
    bool has_full_pattern() const { return !patterns_.empty() && patterns_.front().size() == p_; }

private:
    std::vector<Pattern> patterns_;
    std::vector<std::vector<Index>> t_sets_;
    std::vector<std::vector<Index>> s_sets_;
    std::vector<MatrixXd> projections_;
    std::vector<int> subject_pattern_;
    std::vector<Index> permutation_;
    Index p_;
};

/// Throws InputError for an empty dataset or a subject with no observed covariate.
PatternIndex build_pattern_index(const FragmentaryDataset& data, PatternOrder order = PatternOrder::by_size);

/// Keeps only the target's columns (in target order) and drops subjects left
/// with nothing observed.
FragmentaryDataset restrict_to(const FragmentaryDataset& data, const Pattern& target);

/// |S_1| / n.
double cc_fraction(const PatternIndex& index, Index n);

/// Pattern covering every column 0..p-1.
Pattern full_pattern(Index p);

}  // namespace fragavg
