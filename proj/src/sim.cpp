#include "fragavg/sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <random>
#include <thread>

#include "fragavg/error.hpp"
#include "fragavg/family.hpp"

namespace fragavg {
namespace {

std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream, std::uint64_t substream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                      static_cast<std::uint32_t>(substream), static_cast<std::uint32_t>(substream >> 32)};
    return std::mt19937_64(seq);
}

/// One-factor equicorrelated normals with mean 1 and unit variance.
void draw_covariates(std::mt19937_64& rng, double rho, Eigen::Ref<VectorXd> out) {
    std::normal_distribution<double> z;
    const double common = std::sqrt(rho) * z(rng);
    const double own = std::sqrt(1.0 - rho);
    for (Index j = 0; j < out.size(); ++j) out(j) = 1.0 + common + own * z(rng);
}

std::vector<Index> complete_rows(const FragmentaryDataset& data) {
    std::vector<Index> rows;
    for (Index i = 0; i < data.n(); ++i) {
        if (data.mask.row(i).all()) rows.push_back(i);
    }
    return rows;
}

}  // namespace

std::string to_string(BetaCase c) {
    switch (c) {
        case BetaCase::decay: return "decay";
        case BetaCase::flat: return "flat";
        case BetaCase::rise: return "rise";
    }
    return "unknown";
}

BetaCase parse_beta_case(const std::string& name) {
    if (name == "decay") return BetaCase::decay;
    if (name == "flat") return BetaCase::flat;
    if (name == "rise") return BetaCase::rise;
    throw InputError("unknown beta case '" + name + "' (expected decay, flat or rise)");
}

VectorXd true_beta(BetaCase c, Index p) {
    VectorXd beta(p);
    for (Index j = 0; j < p; ++j) {
        switch (c) {
            case BetaCase::decay: beta(j) = 0.4 / static_cast<double>(j + 1); break;
            case BetaCase::flat: beta(j) = 0.1; break;
            case BetaCase::rise: beta(j) = 0.2 / static_cast<double>(p - j); break;
        }
    }
    return beta;
}

void SimConfig::validate() const {
    if (p < 6 || (p - 2) % 4 != 0) throw InputError("p must be 2 plus a positive multiple of 4");
    if (n < p) throw InputError("n must be at least p");
    if (!(rho >= 0.0 && rho < 1.0)) throw InputError("rho must lie in [0, 1)");
    if (reps < 1) throw InputError("reps must be at least 1");
    if (methods.empty()) throw InputError("no methods selected");
}

std::vector<ColumnGroup> availability_groups(Index p) {
    std::vector<ColumnGroup> groups;
    for (Index s = 0; 4 * s + 4 < p; ++s) {
        ColumnGroup g{"G" + std::to_string(s + 1), {}};
        for (Index c = 0; c < 4; ++c) g.columns.push_back(1 + 4 * s + c);
        groups.push_back(std::move(g));
    }
    return groups;
}

Replication generate_replication(const SimConfig& cfg, int rep) {
    cfg.validate();
    const VectorXd beta = true_beta(cfg.beta_case, cfg.p);
    const Index pd = cfg.p - 1;
    const Index blocks = (cfg.p - 2) / 4;
    std::vector<std::string> names;
    for (Index j = 0; j < pd; ++j) names.push_back("X" + std::to_string(j + 1));

    for (std::uint64_t sub = 0;; ++sub) {
        auto rng = make_engine(cfg.seed, static_cast<std::uint64_t>(rep), sub);
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        MatrixXd x(cfg.n, cfg.p);
        VectorXd y(cfg.n);
        BoolMatrix mask = BoolMatrix::Constant(cfg.n, pd, true);
        Replication out;
        out.theta_true.resize(cfg.n);
        out.p_true.resize(cfg.n);
        Index complete = 0;
        for (Index i = 0; i < cfg.n; ++i) {
            x(i, 0) = 1.0;
            VectorXd row(cfg.p - 1);
            draw_covariates(rng, cfg.rho, row);
            x.row(i).tail(cfg.p - 1) = row.transpose();
            const double theta = x.row(i).dot(beta);
            out.theta_true(i) = theta;
            out.p_true(i) = logistic(theta);
            y(i) = unif(rng) < out.p_true(i) ? 1.0 : 0.0;
            bool all = true;
            for (Index s = 0; s < blocks; ++s) {
                const bool seen = x(i, 1 + 4 * s) < 1.0;
                for (Index c = 0; c < 4; ++c) mask(i, 1 + 4 * s + c) = seen;
                all = all && seen;
            }
            if (all) ++complete;
        }
        if (complete < pd) continue;
        out.data = make_dataset(std::move(y), x.leftCols(pd), std::move(mask), names);
        out.regenerations = static_cast<int>(sub);
        return out;
    }
}

double evaluate_method(const BaselineResult& fitted, const Replication& rep) {
    const auto rows = complete_rows(rep.data);
    VectorXd p_hat(static_cast<Index>(rows.size()));
    VectorXd mu(p_hat.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto idx = static_cast<Index>(r);
        p_hat(idx) = logistic(predict_theta(fitted, row_of(rep.data, rows[r])));
        mu(idx) = rep.p_true(rows[r]);
    }
    return kl_loss_logistic(p_hat, mu).per_observation();
}

double quantile(std::vector<double> values, double prob) {
    values.erase(std::remove_if(values.begin(), values.end(), [](double v) { return !std::isfinite(v); }),
                 values.end());
    if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(values.begin(), values.end());
    const double h = prob * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

SimResult run_study(const SimConfig& cfg) {
    cfg.validate();
    const auto M = static_cast<Index>(cfg.methods.size());
    SimResult res;
    res.methods = cfg.methods;
    res.per_rep_kl = MatrixXd::Constant(cfg.reps, M, std::numeric_limits<double>::quiet_NaN());
    res.cc_fraction = VectorXd::Zero(cfg.reps);
    res.regenerations.assign(static_cast<std::size_t>(cfg.reps), 0);
    std::vector<std::vector<std::string>> rep_failures(static_cast<std::size_t>(cfg.reps));

    const auto groups = availability_groups(cfg.p - 1);
    const auto family = ExponentialFamily::binomial();

    auto run_one = [&](int r) {
        const Replication rep = generate_replication(cfg, r);
        res.cc_fraction(r) = static_cast<double>(complete_rows(rep.data).size()) / static_cast<double>(cfg.n);
        res.regenerations[static_cast<std::size_t>(r)] = rep.regenerations;
        MethodOptions mo;
        mo.groups = groups;
        mo.ic_sample = cfg.ic_sample;
        mo.seed = make_engine(cfg.seed, static_cast<std::uint64_t>(r), 0xCF)();
        for (Index m = 0; m < M; ++m) {
            const Method method = cfg.methods[static_cast<std::size_t>(m)];
            try {
                res.per_rep_kl(r, m) = evaluate_method(fit_method(method, rep.data, family, mo), rep);
            } catch (const std::exception& e) {
                rep_failures[static_cast<std::size_t>(r)].push_back("rep " + std::to_string(r) + ", " +
                                                                    to_string(method) + ": " + e.what());
            }
        }
    };

    unsigned workers = cfg.threads > 0 ? static_cast<unsigned>(cfg.threads) : std::thread::hardware_concurrency();
    workers = std::clamp(workers, 1u, static_cast<unsigned>(cfg.reps));
    std::atomic<int> next{0};
    auto worker = [&] {
        for (int r = next++; r < cfg.reps; r = next++) run_one(r);
    };
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < workers; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    for (auto& f : rep_failures) res.failures.insert(res.failures.end(), f.begin(), f.end());
    for (Index m = 0; m < M; ++m) {
        std::vector<double> col(res.per_rep_kl.col(m).data(), res.per_rep_kl.col(m).data() + cfg.reps);
        MethodSummary s;
        s.median = quantile(col, 0.5);
        s.q1 = quantile(col, 0.25);
        s.q3 = quantile(col, 0.75);
        s.failures = static_cast<int>(std::count_if(col.begin(), col.end(), [](double v) { return std::isnan(v); }));
        res.summary.push_back(s);
    }
    return res;
}

MatrixXd sample_covariates(Index subjects, Index dims, double rho, std::uint64_t seed) {
    if (!(rho >= 0.0 && rho < 1.0)) throw InputError("rho must lie in [0, 1)");
    auto rng = make_engine(seed, 0, 0);
    MatrixXd out(dims, subjects);
    for (Index i = 0; i < subjects; ++i) draw_covariates(rng, rho, out.col(i));
    return out.transpose();
}

double sample_cc_fraction(double rho, Index subjects, std::uint64_t seed, Index p) {
    SimConfig cfg;
    cfg.p = p;
    cfg.rho = rho;
    cfg.n = std::max(subjects, p);
    cfg.validate();
    if (subjects < 1) throw InputError("subjects must be positive");
    auto rng = make_engine(seed, 0, 0);
    const Index blocks = (p - 2) / 4;
    VectorXd row(p - 1);
    Index complete = 0;
    for (Index i = 0; i < subjects; ++i) {
        draw_covariates(rng, rho, row);
        bool all = true;
        for (Index s = 0; s < blocks; ++s) all = all && row(4 * s) < 1.0;
        if (all) ++complete;
    }
    return static_cast<double>(complete) / static_cast<double>(subjects);
}

OptimalityRatio optimality_ratio(const Replication& rep, LambdaMode mode) {
    const auto family = ExponentialFamily::binomial();
    const auto index = build_pattern_index(rep.data);
    const auto universe = fit_candidate_universe(rep.data, index, family);
    const auto& rows = index.s_set(universe.lead);
    CriterionContext ctx = make_criterion_context(rep.data, rows, universe.candidates, family);
    const WeightFit chosen = optimize_weights(ctx, lambda_default(mode, ctx.n()));

    VectorXd mu(ctx.n());
    for (Index r = 0; r < ctx.n(); ++r) mu(r) = rep.p_true(rows[static_cast<std::size_t>(r)]);
    auto kl_at = [&](const WeightVector& w) {
        const VectorXd theta = ctx.theta * w.values();
        return kl_loss_logistic(theta.unaryExpr([](double t) { return logistic(t); }), mu).total;
    };
    // With y replaced by μ and λ = 0, 𝒢 differs from the KL loss by a w-free constant.
    CriterionContext oracle = ctx;
    oracle.y = mu;
    OptOptions tight;
    tight.kkt_tol = 1e-10;
    const WeightFit best = optimize_weights(oracle, 0.0, tight);

    OptimalityRatio out;
    out.kl_selected = kl_at(chosen.weights);
    out.kl_best = std::min(kl_at(best.weights), out.kl_selected);
    out.ratio = out.kl_best > 0.0 ? out.kl_selected / out.kl_best : 1.0;
    return out;
}

AdniFixture adni_shaped_fixture(std::uint64_t seed, Index block) {
    if (block < 1) throw InputError("block size must be positive");
    struct Layout {
        bool csf, pet, mri, gene;
        Index count;
    };
    const Layout layout[] = {{true, true, true, true, 409},  {true, true, true, false, 368},
                             {true, true, false, true, 40},  {false, true, true, true, 105},
                             {false, true, false, true, 86}, {false, true, true, false, 53},
                             {false, false, false, true, 53}, {false, false, true, false, 56}};
    Index n = 0;
    for (const auto& l : layout) n += l.count;
    const Index p = 1 + 3 + 3 * block;

    AdniFixture fx;
    std::vector<std::string> names{"(Intercept)", "CSF_ABETA", "CSF_TAU", "CSF_PTAU"};
    fx.groups.push_back({"CSF", {1, 2, 3}});
    for (const char* src : {"PET", "MRI", "GENE"}) {
        ColumnGroup g{src, {}};
        for (Index j = 0; j < block; ++j) {
            g.columns.push_back(static_cast<Index>(names.size()));
            names.push_back(std::string(src) + "_" + std::to_string(j + 1));
        }
        fx.groups.push_back(std::move(g));
    }

    auto rng = make_engine(seed, 0xAD, 0);
    std::normal_distribution<double> z;
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    VectorXd beta(p);
    beta(0) = 0.2;
    for (Index j = 1; j < p; ++j) beta(j) = (j % 2 == 0 ? -0.6 : 0.6) / std::sqrt(static_cast<double>(j));

    MatrixXd x(n, p);
    BoolMatrix mask(n, p);
    VectorXd y(n);
    Index i = 0;
    for (const auto& l : layout) {
        for (Index c = 0; c < l.count; ++c, ++i) {
            x(i, 0) = 1.0;
            VectorXd row(p - 1);
            draw_covariates(rng, 0.3, row);
            x.row(i).tail(p - 1) = (row.array() - 1.0).matrix().transpose();
            y(i) = unif(rng) < logistic(x.row(i).dot(beta)) ? 1.0 : 0.0;
            const bool avail[] = {l.csf, l.pet, l.mri, l.gene};
            mask(i, 0) = true;
            for (std::size_t g = 0; g < fx.groups.size(); ++g) {
                for (Index j : fx.groups[g].columns) mask(i, j) = avail[g];
            }
        }
    }
    fx.data = make_dataset(std::move(y), std::move(x), std::move(mask), names);
    return fx;
}

}  // namespace fragavg
