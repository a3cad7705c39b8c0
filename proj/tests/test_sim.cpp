#include <doctest.h>

#include <cmath>

#include "fragavg/patterns.hpp"
#include "fragavg/sim.hpp"
#include "oracles.hpp"

using namespace fragavg;

TEST_CASE("coefficient cases") {
    const VectorXd d = true_beta(BetaCase::decay, 14);
    CHECK(d(0) == doctest::Approx(0.4));
    CHECK(d(13) == doctest::Approx(0.4 / 14));
    CHECK(true_beta(BetaCase::flat, 14).isConstant(0.1));
    const VectorXd r = true_beta(BetaCase::rise, 14);
    CHECK(r(0) == doctest::Approx(0.2 / 14));
    CHECK(r(13) == doctest::Approx(0.2));
    CHECK_THROWS(parse_beta_case("steep"));
}

TEST_CASE("replication design") {
    SimConfig cfg;
    cfg.n = 400;
    cfg.rho = 0.6;
    cfg.seed = 5;
    for (int rep = 0; rep < 5; ++rep) {
        const auto r = generate_replication(cfg, rep);
        REQUIRE(r.data.p() == 13);
        const auto index = build_pattern_index(r.data);
        CHECK(index.K() == 8);
        CHECK(index.has_full_pattern());
        for (Index i = 0; i < r.data.n(); ++i) {
            CHECK(r.data.mask(i, 0));
            for (Index s = 0; s < 3; ++s) {
                const Index lead = 1 + 4 * s;
                const bool seen = r.data.mask(i, lead);
                if (seen) CHECK(r.data.x(i, lead) < 1.0);
                for (Index c = 1; c < 4; ++c) CHECK(r.data.mask(i, lead + c) == seen);
            }
            CHECK(r.p_true(i) == doctest::Approx(logistic(r.theta_true(i))).epsilon(1e-15));
        }
        CHECK(oracle::bernoulli_kl2(r.p_true, r.p_true) == 0.0);
    }
    const auto a = generate_replication(cfg, 3);
    const auto b = generate_replication(cfg, 3);
    CHECK(same_observed_content(a.data, b.data));
    CHECK(!same_observed_content(a.data, generate_replication(cfg, 4).data));
}

TEST_CASE("equicorrelated covariates") {
    const MatrixXd x = sample_covariates(100000, 13, 0.6, 17);
    const VectorXd mean = x.colwise().mean();
    const MatrixXd centered = x.rowwise() - mean.transpose();
    const MatrixXd cov = centered.transpose() * centered / static_cast<double>(x.rows() - 1);
    for (Index a = 0; a < 13; ++a) {
        CHECK(std::abs(mean(a) - 1.0) < 0.02);
        for (Index b = 0; b < 13; ++b) CHECK(std::abs(cov(a, b) - (a == b ? 1.0 : 0.6)) < 0.02);
    }
    CHECK(sample_cc_fraction(0.0, 200000, 3) == doctest::Approx(0.125).epsilon(0.06));
    const double expected = 0.125 + 3.0 / (4.0 * M_PI) * std::asin(0.6);
    CHECK(sample_cc_fraction(0.6, 200000, 3) == doctest::Approx(expected).epsilon(0.03));
}

TEST_CASE("study aggregation") {
    SimConfig cfg;
    cfg.n = 400;
    cfg.rho = 0.3;
    cfg.reps = 3;
    cfg.seed = 9;
    cfg.methods = {Method::opt1, Method::cc};
    const auto a = run_study(cfg);
    cfg.threads = 2;
    const auto b = run_study(cfg);
    CHECK(a.per_rep_kl.rows() == 3);
    CHECK((a.per_rep_kl.array() == b.per_rep_kl.array()).all());
    CHECK((a.per_rep_kl.array() >= 0.0).all());
    CHECK((a.cc_fraction.array() >= 0.0).all());
    CHECK((a.cc_fraction.array() <= 1.0).all());

    cfg.reps = 1;
    const auto one = run_study(cfg);
    CHECK(one.summary[0].median == one.per_rep_kl(0, 0));
    CHECK(one.summary[0].q1 == one.per_rep_kl(0, 0));
}

TEST_CASE("quantiles follow the linear-interpolation rule") {
    CHECK(quantile({1, 2, 3, 4}, 0.5) == 2.5);
    CHECK(quantile({1, 2, 3, 4}, 0.25) == 1.75);
    CHECK(quantile({4, NAN, 1}, 0.5) == 2.5);
    CHECK(std::isnan(quantile({NAN}, 0.5)));
}

TEST_CASE("evaluation metric") {
    SimConfig cfg;
    cfg.seed = 4;
    const auto rep = generate_replication(cfg, 0);
    BaselineResult truth;
    truth.beta_effective = true_beta(cfg.beta_case, 14).head(13);
    truth.required_columns.resize(13);
    for (Index j = 0; j < 13; ++j) truth.required_columns[static_cast<std::size_t>(j)] = j;

    BaselineResult half;
    half.beta_effective = VectorXd::Zero(13);
    half.required_columns = {0};
    std::vector<Index> rows;
    for (Index i = 0; i < rep.data.n(); ++i) {
        if (rep.data.mask.row(i).all()) rows.push_back(i);
    }
    const VectorXd mu = gather(rep.p_true, rows);
    const double expected = oracle::bernoulli_kl2(VectorXd::Constant(mu.size(), 0.5), mu) / static_cast<double>(rows.size());
    CHECK(evaluate_method(half, rep) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(evaluate_method(truth, rep) > 0.0);
}

TEST_CASE("ADNI-shaped fixture") {
    const auto fx = adni_shaped_fixture(3);
    CHECK(fx.data.n() == 1170);
    CHECK(fx.data.p() == 13);
    const auto index = build_pattern_index(fx.data);
    REQUIRE(index.K() == 8);
    std::vector<std::size_t> sizes;
    for (const auto& t : index.t_sets()) sizes.push_back(t.size());
    std::sort(sizes.begin(), sizes.end());
    CHECK(sizes == std::vector<std::size_t>{40, 53, 53, 56, 86, 105, 368, 409});

    std::vector<Index> target{0};
    for (std::size_t g = 1; g < fx.groups.size(); ++g) {
        target.insert(target.end(), fx.groups[g].columns.begin(), fx.groups[g].columns.end());
    }
    const auto sub = restrict_to(fx.data, Pattern{target, 0});
    CHECK(build_pattern_index(sub).K() == 5);
    const auto pp = predict_for_pattern(fx.data, ExponentialFamily::binomial(), row_of(fx.data, 500));
    CHECK(pp.candidates >= 1);
}

TEST_CASE("optimality ratio is at least one") {
    SimConfig cfg;
    cfg.seed = 2;
    const auto r = optimality_ratio(generate_replication(cfg, 0));
    CHECK(r.ratio >= 1.0);
    CHECK(r.kl_best > 0.0);
}
