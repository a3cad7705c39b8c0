#include <doctest.h>

#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "fragavg/error.hpp"
#include "fragavg/glm.hpp"
#include "generators.hpp"
#include "oracles.hpp"

using namespace fragavg;

TEST_CASE("family derivatives agree with central differences") {
    for (const auto& fam : {ExponentialFamily::binomial(), ExponentialFamily::gaussian(), ExponentialFamily::poisson()}) {
        for (double t = -6.0; t <= 6.0; t += 0.25) {
            const double h = 1e-5;
            const double db = (fam.cumulant(t + h) - fam.cumulant(t - h)) / (2 * h);
            const double dm = (fam.mean(t + h) - fam.mean(t - h)) / (2 * h);
            CHECK(db == doctest::Approx(fam.mean(t)).epsilon(1e-6));
            CHECK(dm == doctest::Approx(fam.variance(t)).epsilon(1e-6));
            CHECK(fam.variance(t) >= 0.0);
        }
    }
    const auto bin = ExponentialFamily::binomial();
    CHECK(bin.phi() == 1.0);
    CHECK(bin.cumulant(0.3) == doctest::Approx(std::log1p(std::exp(0.3))));
    CHECK(std::isfinite(bin.cumulant(800.0)));
    CHECK(bin.cumulant(800.0) == doctest::Approx(800.0));
    CHECK(ExponentialFamily::from_name("gaussian").kind() == FamilyKind::gaussian_identity);
    CHECK_THROWS_AS(ExponentialFamily::from_name("gamma"), InputError);
}

TEST_CASE("log-likelihood values") {
    const auto bin = ExponentialFamily::binomial();
    CHECK(loglik(bin, VectorXd::Zero(1), VectorXd::Ones(1)) == doctest::Approx(-std::log(2.0)));
    VectorXd y(2);
    y << 1, 0;
    CHECK(loglik(bin, VectorXd::Zero(2), y) == doctest::Approx(-2 * std::log(2.0)));
    std::mt19937_64 rng(2);
    const auto pr = oracle::random_logistic(rng, 15, 3);
    const VectorXd beta = VectorXd::Random(3);
    CHECK(loglik(bin, pr.X * beta, pr.y) == doctest::Approx(oracle::logistic_loglik(pr.X, pr.y, beta)).epsilon(1e-12));
    VectorXd bad = VectorXd::Zero(2);
    bad(1) = INFINITY;
    CHECK_THROWS_AS(loglik(bin, bad, y), NumericalError);
}

TEST_CASE("gaussian IRLS equals least squares") {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> z;
    for (int rep = 0; rep < 5; ++rep) {
        MatrixXd X(30, 4);
        VectorXd y(30);
        for (Index i = 0; i < 30; ++i) {
            X(i, 0) = 1;
            for (Index j = 1; j < 4; ++j) X(i, j) = z(rng);
            y(i) = z(rng);
        }
        const VectorXd ols = (X.transpose() * X).ldlt().solve(X.transpose() * y);
        const GlmFit fit = fit_glm(X, y, ExponentialFamily::gaussian());
        CHECK(fit.converged);
        CHECK((fit.beta - ols).lpNorm<Eigen::Infinity>() < 1e-8);
    }
}

TEST_CASE("logistic IRLS matches the coordinate-ascent oracle") {
    std::mt19937_64 rng(8);
    int tested = 0;
    while (tested < 10) {
        const auto pr = oracle::random_logistic(rng, 40, 2);
        if (oracle::obviously_separable(pr)) continue;
        const GlmFit fit = fit_glm(pr.X, pr.y, ExponentialFamily::binomial());
        const VectorXd ref = oracle::logistic_mle_coordinate(pr.X, pr.y);
        CHECK(fit.converged);
        CHECK((fit.beta - ref).lpNorm<Eigen::Infinity>() < 1e-6);
        const VectorXd s = score(pr.X, pr.y, fit.beta, ExponentialFamily::binomial());
        CHECK(s.lpNorm<Eigen::Infinity>() <= 1e-6 * 40);
        ++tested;
    }
}

TEST_CASE("score matches finite differences of the log-likelihood") {
    std::mt19937_64 rng(9);
    const auto fam = ExponentialFamily::poisson();
    std::normal_distribution<double> z;
    MatrixXd X(20, 3);
    VectorXd y(20);
    for (Index i = 0; i < 20; ++i) {
        X(i, 0) = 1;
        X(i, 1) = z(rng);
        X(i, 2) = z(rng);
        y(i) = static_cast<double>(i % 4);
    }
    for (int rep = 0; rep < 5; ++rep) {
        const VectorXd beta = 0.3 * VectorXd::Random(3);
        const VectorXd s = score(X, y, beta, fam);
        for (Index j = 0; j < 3; ++j) {
            VectorXd e = VectorXd::Zero(3);
            e(j) = 1e-6;
            const double fd = (loglik(fam, X * (beta + e), y) - loglik(fam, X * (beta - e), y)) / 2e-6;
            CHECK(fd == doctest::Approx(s(j)).epsilon(1e-5));
        }
    }
}

TEST_CASE("IRLS is monotone and handles degenerate inputs") {
    std::mt19937_64 rng(10);
    const auto pr = oracle::random_logistic(rng, 60, 3);
    const GlmFit fit = fit_glm(pr.X, pr.y, ExponentialFamily::binomial());
    for (std::size_t t = 1; t < fit.loglik_trace.size(); ++t) {
        CHECK(fit.loglik_trace[t] >= fit.loglik_trace[t - 1] - 1e-12 * (1 + std::abs(fit.loglik_trace[t - 1])));
    }

    SUBCASE("response at b'(0) gives zero coefficients") {
        const VectorXd y = VectorXd::Constant(6, 0.0);
        const GlmFit g = fit_glm(MatrixXd::Ones(6, 1), y, ExponentialFamily::gaussian());
        CHECK(std::abs(g.beta(0)) < 1e-12);
        VectorXd yb(4);
        yb << 1, 0, 1, 0;
        CHECK(std::abs(fit_glm(MatrixXd::Ones(4, 1), yb, ExponentialFamily::binomial()).beta(0)) < 1e-12);
    }
    SUBCASE("rank deficiency names the column") {
        MatrixXd X(5, 3);
        X << 1, 1, 2, 1, 2, 4, 1, 3, 6, 1, 4, 8, 1, 5, 10;
        try {
            fit_glm(X, VectorXd::LinSpaced(5, 0, 1), ExponentialFamily::gaussian());
            FAIL("expected a rank error");
        } catch (const RankDeficientError& e) {
            REQUIRE(e.columns().size() == 1);
        }
    }
    SUBCASE("separation triggers the guard") {
        MatrixXd X(6, 2);
        X << 1, -3, 1, -2, 1, -1, 1, 1, 1, 2, 1, 3;
        VectorXd y(6);
        y << 0, 0, 0, 1, 1, 1;
        const GlmFit g = fit_glm(X, y, ExponentialFamily::binomial());
        CHECK(g.separation_guard);
        CHECK(!g.converged);
        CHECK(g.beta.allFinite());
    }
    SUBCASE("invalid responses are rejected") {
        CHECK_THROWS_AS(fit_glm(MatrixXd::Ones(3, 1), VectorXd::Constant(3, 2.0), ExponentialFamily::binomial()),
                        InputError);
    }
}

TEST_CASE("gaussian nesting never lowers the maximized likelihood") {
    std::mt19937_64 rng(12);
    std::normal_distribution<double> z;
    MatrixXd X(25, 4);
    VectorXd y(25);
    for (Index i = 0; i < 25; ++i) {
        X(i, 0) = 1;
        for (Index j = 1; j < 4; ++j) X(i, j) = z(rng);
        y(i) = z(rng);
    }
    double prev = -INFINITY;
    for (Index c = 1; c <= 4; ++c) {
        const double ll = fit_glm(X.leftCols(c), y, ExponentialFamily::gaussian()).loglik;
        CHECK(ll >= prev - 1e-10);
        prev = ll;
    }
}

TEST_CASE("candidate fits and linear predictors") {
    std::mt19937_64 rng(13);
    const auto data = gen::block_logistic(rng, 200, 2, 2, 0.4, 30);
    const auto index = build_pattern_index(data);
    for (Index k = 0; k < index.K(); ++k) {
        const auto c = fit_candidate(data, index, k, ExponentialFamily::binomial());
        CHECK(c.p_k == index.pattern(k).size());
        CHECK(c.n_k == static_cast<Index>(index.s_set(k).size()));
        const MatrixXd X = design_matrix(data, index.s_set(k), index.pattern(k).indices);
        const GlmFit direct = fit_glm(X, gather(data.y, index.s_set(k)), ExponentialFamily::binomial());
        CHECK((c.beta - direct.beta).norm() == 0.0);
        for (Index i : index.s_set(k)) {
            double loop = 0.0;
            for (std::size_t t = 0; t < c.pattern.indices.size(); ++t) {
                loop += data.x(i, c.pattern.indices[t]) * c.beta(static_cast<Index>(t));
            }
            CHECK(linear_predictor(c, row_of(data, i)) == doctest::Approx(loop).epsilon(1e-14));
        }
    }

    CandidateModel m;
    m.pattern = Pattern{{0, 2}, 1};
    m.beta = VectorXd(2);
    m.beta << 1, -2;
    m.p_k = 2;
    VectorXd x(3);
    x << 2, 9, 0.5;
    CHECK(linear_predictor(m, x) == doctest::Approx(1.0));
    m.beta.setZero();
    CHECK(linear_predictor(m, x) == 0.0);
    PartialVector partial = PartialVector::full(x);
    partial.observed(2) = false;
    CHECK_THROWS_AS(linear_predictor(m, partial), InputError);
    const VectorXd e = embed(m, 3);
    CHECK(e.size() == 3);
}
