#include <doctest.h>

#include <random>
#include <set>

#include "fragavg/error.hpp"
#include "fragavg/patterns.hpp"
#include "generators.hpp"
#include "oracles.hpp"

using namespace fragavg;

namespace {

std::vector<Index> one_based(const std::vector<Index>& v) {
    std::vector<Index> out;
    for (Index i : v) out.push_back(i + 1);
    return out;
}

void check_against_oracle(const FragmentaryDataset& data, const PatternIndex& index) {
    const auto expected = oracle::brute_force_patterns(data.mask);
    REQUIRE(static_cast<std::size_t>(index.K()) == expected.size());
    for (Index k = 0; k < index.K(); ++k) {
        const auto it = expected.find(index.pattern(k).indices);
        REQUIRE(it != expected.end());
        CHECK(index.t_set(k) == it->second.t);
        CHECK(index.s_set(k) == it->second.s);
        CHECK(index.pattern(k).id == k + 1);
    }
}

}  // namespace

TEST_CASE("toy layout reproduces the documented subject sets") {
    const auto data = gen::toy_dataset();
    SUBCASE("first-appearance order keeps the documented labels") {
        const auto index = build_pattern_index(data, PatternOrder::first_appearance);
        REQUIRE(index.K() == 7);
        CHECK(one_based(index.t_set(0)) == std::vector<Index>{1, 2});
        CHECK(one_based(index.s_set(0)) == std::vector<Index>{1, 2});
        CHECK(one_based(index.t_set(1)) == std::vector<Index>{3});
        CHECK(one_based(index.s_set(1)) == std::vector<Index>{1, 2, 3, 4});
        CHECK(one_based(index.t_set(6)) == std::vector<Index>{9, 10});
        CHECK(one_based(index.s_set(6)) == std::vector<Index>{1, 2, 4, 9, 10});
    }
    SUBCASE("size order has the same pattern/set pairs") {
        const auto index = build_pattern_index(data);
        REQUIRE(index.K() == 7);
        CHECK(index.has_full_pattern());
        CHECK(index.t_set(0) == index.s_set(0));
        check_against_oracle(data, index);
        for (Index k = 1; k < index.K(); ++k) CHECK(index.pattern(k - 1).size() >= index.pattern(k).size());
    }
}

TEST_CASE("size order breaks ties lexicographically") {
    BoolMatrix mask(3, 3);
    mask << false, true, true,   //
        true, false, true,       //
        true, true, false;
    const auto data = make_dataset(VectorXd::Zero(3), MatrixXd::Zero(3, 3), mask);
    const auto index = build_pattern_index(data);
    CHECK(index.pattern(0).indices == std::vector<Index>{0, 1});
    CHECK(index.pattern(1).indices == std::vector<Index>{0, 2});
    CHECK(index.pattern(2).indices == std::vector<Index>{1, 2});
}

TEST_CASE("fully observed data has one pattern") {
    std::mt19937_64 rng(3);
    const auto data = gen::random_masked(rng, 12, 4, 1.0);
    const auto index = build_pattern_index(data);
    REQUIRE(index.K() == 1);
    CHECK(index.t_set(0).size() == 12);
    CHECK(index.s_set(0).size() == 12);
    CHECK(cc_fraction(index, data.n()) == 1.0);
}

TEST_CASE("random masks match the brute-force oracle and the structural invariants") {
    std::mt19937_64 rng(11);
    for (int rep = 0; rep < 100; ++rep) {
        const auto data = gen::random_masked(rng, 30, 6, 0.55);
        const auto index = build_pattern_index(data);
        check_against_oracle(data, index);

        std::vector<int> seen(static_cast<std::size_t>(data.n()), 0);
        for (const auto& t : index.t_sets()) {
            for (Index i : t) ++seen[static_cast<std::size_t>(i)];
        }
        CHECK(std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; }));

        const VectorXd v = VectorXd::Random(data.p());
        for (Index k = 0; k < index.K(); ++k) {
            const VectorXd projected = index.projection(k) * v;
            const auto& idx = index.pattern(k).indices;
            REQUIRE(projected.size() == static_cast<Index>(idx.size()));
            for (std::size_t c = 0; c < idx.size(); ++c) CHECK(projected(static_cast<Index>(c)) == v(idx[c]));
            for (Index l = 0; l < index.K(); ++l) {
                if (!index.pattern(k).subset_of(index.pattern(l))) continue;
                const auto& sk = index.s_set(k);
                for (Index i : index.s_set(l)) CHECK(std::binary_search(sk.begin(), sk.end(), i));
            }
        }
        const auto perm = index.permutation();
        CHECK(std::set<Index>(perm.begin(), perm.end()).size() == static_cast<std::size_t>(data.n()));
    }
}

TEST_CASE("restriction") {
    const auto data = gen::toy_dataset();
    SUBCASE("to the first column leaves one pattern with every subject") {
        const auto sub = restrict_to(data, Pattern{{0}, 0});
        const auto index = build_pattern_index(sub);
        CHECK(index.K() == 1);
        CHECK(index.t_set(0).size() == 10);
    }
    SUBCASE("to every column is the identity") {
        CHECK(same_observed_content(restrict_to(data, full_pattern(data.p())), data));
    }
    SUBCASE("rebuilt patterns lie inside the target") {
        std::mt19937_64 rng(5);
        for (int rep = 0; rep < 20; ++rep) {
            const auto d = gen::random_masked(rng, 25, 6, 0.5);
            const Pattern target{{1, 3, 4}, 0};
            const auto sub = restrict_to(d, target);
            CHECK(sub.p() == 3);
            const auto index = build_pattern_index(sub);
            for (const auto& pat : index.patterns()) CHECK(pat.subset_of(full_pattern(3)));
            for (Index i = 0; i < sub.n(); ++i) CHECK(sub.mask.row(i).any());
        }
    }
    SUBCASE("errors") {
        CHECK_THROWS_AS(restrict_to(data, Pattern{{}, 0}), InputError);
        CHECK_THROWS_AS(restrict_to(data, Pattern{{0, 99}, 0}), InputError);
    }
}

TEST_CASE("dataset validation") {
    BoolMatrix mask = BoolMatrix::Constant(2, 2, true);
    mask(1, 0) = mask(1, 1) = false;
    CHECK_THROWS_AS(make_dataset(VectorXd::Zero(2), MatrixXd::Zero(2, 2), mask), InputError);
    CHECK_THROWS_AS(make_dataset(VectorXd::Zero(3), MatrixXd::Zero(2, 2), BoolMatrix::Constant(2, 2, true)),
                    InputError);
    VectorXd y = VectorXd::Zero(2);
    y(0) = NAN;
    CHECK_THROWS_AS(make_dataset(y, MatrixXd::Zero(2, 2), BoolMatrix::Constant(2, 2, true)), InputError);
    FragmentaryDataset empty;
    CHECK_THROWS_AS(build_pattern_index(empty), InputError);
}
