#include <doctest.h>

#include <cmath>
#include <random>

#include "fragavg/baselines.hpp"
#include "fragavg/error.hpp"
#include "generators.hpp"
#include "oracles.hpp"

using namespace fragavg;

TEST_CASE("smoothed information-criterion weights") {
    VectorXd ic(3);
    ic << 10, 12, 14;
    const VectorXd w = smoothed_ic_weights(ic);
    CHECK(w(0) == doctest::Approx(0.6652).epsilon(1e-4));
    CHECK(w(1) == doctest::Approx(0.2447).epsilon(1e-4));
    CHECK(w(2) == doctest::Approx(0.0900).epsilon(1e-3));
    CHECK((smoothed_ic_weights((ic.array() + 1e4).matrix()) - w).norm() < 1e-15);
    CHECK(smoothed_ic_weights(VectorXd::Constant(2, 7.0))(0) == 0.5);
    CHECK(smoothed_ic_weights(VectorXd::Constant(1, 3.0))(0) == 1.0);
    CHECK_THROWS_AS(smoothed_ic_weights(VectorXd::Constant(2, INFINITY)), NumericalError);
}

TEST_CASE("baseline fits on block-missing logistic data") {
    std::mt19937_64 rng(31);
    const auto data = gen::block_logistic(rng, 300, 3, 2, 0.35, 40);
    const auto bin = ExponentialFamily::binomial();
    const auto index = build_pattern_index(data);

    SUBCASE("complete-case fit is candidate one") {
        const auto cc = fit_cc(data, bin);
        const auto m1 = fit_candidate(data, index, 0, bin);
        CHECK((cc.beta_effective - embed(m1, data.p())).norm() == 0.0);
        CHECK(!cc.weights);
    }
    SUBCASE("smoothed IC weights lie on the simplex") {
        for (auto sample : {IcSample::own, IcSample::complete_cases}) {
            for (auto flavor : {IcFlavor::aic, IcFlavor::bic}) {
                const auto r = fit_smoothed_ic(data, bin, flavor, sample);
                REQUIRE(r.weights);
                CHECK(r.weights->values().minCoeff() >= 0.0);
                CHECK(r.weights->values().sum() == doctest::Approx(1.0).epsilon(1e-12));
                CHECK(r.weights->size() == index.K());
            }
        }
    }
    SUBCASE("every method predicts a complete case") {
        MethodOptions mo;
        mo.groups = {{"a", {1, 2}}, {"b", {3, 4}}, {"c", {5, 6}}};
        const auto x = row_of(data, index.s_set(0).front());
        for (Method m : all_methods()) {
            const auto r = fit_method(m, data, bin, mo);
            CHECK(r.method == m);
            CHECK(std::isfinite(predict_theta(r, x)));
            const bool weighted = m != Method::cc && m != Method::glasso;
            CHECK(static_cast<bool>(r.weights) == weighted);
        }
    }
}

TEST_CASE("zero imputation") {
    std::mt19937_64 rng(32);
    const auto bin = ExponentialFamily::binomial();
    SUBCASE("no missing cells gives the proposed method") {
        auto data = gen::block_logistic(rng, 120, 2, 2, 0.0, 120);
        const auto imp = fit_imp(data, bin, LambdaMode::opt1);
        const auto opt = fit_opt(data, bin, LambdaMode::opt1);
        CHECK((imp.weights->values() - opt.weights->values()).lpNorm<Eigen::Infinity>() <= 1e-10);
        CHECK((imp.beta_effective - opt.beta_effective).lpNorm<Eigen::Infinity>() <= 1e-10);
    }
    SUBCASE("candidates are GLMs on the zero-filled design") {
        std::normal_distribution<double> z;
        std::uniform_real_distribution<double> u(0.0, 1.0);
        const Index n = 80;
        MatrixXd x(n, 2);
        BoolMatrix mask = BoolMatrix::Constant(n, 2, true);
        VectorXd y(n);
        for (Index i = 0; i < n; ++i) {
            x(i, 0) = 1;
            x(i, 1) = z(rng);
            mask(i, 1) = i % 2 == 0;
            y(i) = u(rng) < logistic(0.3 + x(i, 1)) ? 1 : 0;
        }
        const auto data = make_dataset(y, x, mask);
        const auto imp = fit_imp(data, bin, LambdaMode::opt2);
        MatrixXd zeroed = x;
        for (Index i = 0; i < n; ++i) {
            if (!mask(i, 1)) zeroed(i, 1) = 0;
        }
        const GlmFit direct = fit_glm(zeroed, y, bin);
        const auto& full = imp.candidates.front();
        REQUIRE(full.p_k == 2);
        CHECK((full.beta - direct.beta).lpNorm<Eigen::Infinity>() <= 1e-12);
        CHECK(imp.diagnostics.at("lambda") == doctest::Approx(std::log(80.0)));
        PartialVector q{VectorXd::Constant(2, 1.0), BoolVector::Constant(2, true)};
        q.observed(1) = false;
        CHECK(predict_theta(imp, q) == doctest::Approx(imp.beta_effective(0)));
    }
    SUBCASE("single pattern is one zero-filled GLM") {
        auto data = gen::block_logistic(rng, 60, 1, 2, 0.0, 60);
        const auto imp = fit_imp(data, bin, LambdaMode::opt1);
        CHECK(imp.weights->size() == 1);
        CHECK((imp.beta_effective - fit_glm(data.x, data.y, bin).beta).norm() < 1e-12);
    }
}

TEST_CASE("complete-case fit on the toy layout is rank deficient") {
    const auto data = gen::toy_dataset();
    CHECK_THROWS_AS(fit_cc(data, ExponentialFamily::gaussian()), RankDeficientError);
}

TEST_CASE("group lasso baseline") {
    std::mt19937_64 rng(33);
    const auto bin = ExponentialFamily::binomial();
    const auto data = gen::block_logistic(rng, 300, 3, 2, 0.35, 60);
    const std::vector<ColumnGroup> groups{{"a", {1, 2}}, {"b", {3, 4}}, {"c", {5, 6}}};
    const auto r = fit_glasso(data, bin, groups, 5, 99);
    CHECK(r.required_columns.front() == 0);
    for (Index j = 0; j < data.p(); ++j) {
        const bool used = std::find(r.required_columns.begin(), r.required_columns.end(), j) != r.required_columns.end();
        if (!used) CHECK(r.beta_effective(j) == 0.0);
    }
    CHECK(fit_glasso(data, bin, groups, 5, 99).beta_effective == r.beta_effective);
    CHECK_THROWS_AS(fit_glasso(data, bin, {}, 5, 1), InputError);
    CHECK_THROWS_AS(fit_glasso(data, bin, {{"a", {1, 2}}, {"b", {2, 3}}}, 5, 1), InputError);

    const auto remapped = remap_groups(groups, Pattern{{0, 3, 4, 5}, 0});
    REQUIRE(remapped.size() == 2);
    CHECK(remapped[0].columns == std::vector<Index>{1, 2});
    CHECK(remapped[1].columns == std::vector<Index>{3});
}

TEST_CASE("method names") {
    CHECK(parse_method_list("opt1,cc,opt1").size() == 2);
    CHECK(parse_method_list("all").size() == 8);
    CHECK_THROWS_AS(parse_method("lasso"), InputError);
    for (Method m : all_methods()) CHECK(parse_method(to_string(m)) == m);
}
