#include "fragavg/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <sstream>

#include <CLI11.hpp>

#include "fragavg/csv.hpp"
#include "fragavg/error.hpp"
#include "fragavg/screen.hpp"
#include "fragavg/serialize.hpp"
#include "fragavg/sim.hpp"

namespace fragavg {
namespace {

namespace fs = std::filesystem;

constexpr const char* kIntercept = "(Intercept)";

std::string set_string(const std::vector<Index>& rows) {
    std::string s = "{";
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (r) s += ',';
        s += std::to_string(rows[r] + 1);
    }
    return s + "}";
}

std::string fmt(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

bool covers(const PartialVector& x, const std::vector<Index>& cols) {
    return std::all_of(cols.begin(), cols.end(), [&](Index j) { return x.observed(j); });
}

PartialVector restrict_query(const PartialVector& x, const std::vector<Index>& cols) {
    PartialVector r{VectorXd(static_cast<Index>(cols.size())), BoolVector::Constant(static_cast<Index>(cols.size()), true)};
    for (std::size_t c = 0; c < cols.size(); ++c) r.values(static_cast<Index>(c)) = x.values(cols[c]);
    return r;
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write '" + path.string() + "'");
    return out;
}

struct Globals {
    std::uint64_t seed = 0;
    std::string family = "binomial";
    double phi = 1.0;
    std::string na_marker = "NA";
    std::string out = ".";
};

struct DataArgs {
    std::string data;
    std::string response = "y";
    bool no_intercept = false;
};

struct FitArgs {
    std::string lambda = "2";
    int max_iter = 100;
    double grad_tol = 1e-8;
    double ridge = 1e-8;
    std::string order = "by-size";
};

void add_data_flags(CLI::App* cmd, DataArgs& d, bool intercept_flag) {
    cmd->add_option("--data", d.data, "Input CSV")->required()->check(CLI::ExistingFile);
    cmd->add_option("--response", d.response, "Response column")->capture_default_str();
    if (intercept_flag) cmd->add_flag("--no-intercept", d.no_intercept, "Do not prepend an intercept column");
}

void add_fit_flags(CLI::App* cmd, FitArgs& f) {
    cmd->add_option("--lambda", f.lambda, "Penalty: 2, log-n1 or a number")->capture_default_str();
    cmd->add_option("--max-iter", f.max_iter, "IRLS iteration limit")->capture_default_str();
    cmd->add_option("--grad-tol", f.grad_tol, "IRLS score tolerance")->capture_default_str();
    cmd->add_option("--ridge", f.ridge, "Ridge added by the divergence guard")->capture_default_str();
    cmd->add_option("--pattern-order", f.order, "by-size or first-appearance")->capture_default_str();
}

AveragingOptions averaging_options(const FitArgs& f) {
    AveragingOptions o;
    o.lambda = LambdaSpec::parse(f.lambda);
    o.fit.max_iter = f.max_iter;
    o.fit.grad_tol = f.grad_tol;
    o.fit.ridge = f.ridge;
    o.order = parse_pattern_order(f.order);
    return o;
}

IcSample parse_ic_sample(const std::string& name) {
    if (name == "complete-cases") return IcSample::complete_cases;
    if (name == "own") return IcSample::own;
    throw InputError("unknown IC sample '" + name + "' (expected complete-cases or own)");
}

ExponentialFamily family_of(const Globals& g) { return ExponentialFamily::from_name(g.family, g.phi); }

FragmentaryDataset load_data(const DataArgs& d, const Globals& g, bool intercept) {
    return read_dataset_csv(d.data, CsvOptions{d.response, g.na_marker, intercept});
}

void write_config(const fs::path& dir, const std::string& command, const std::vector<std::string>& args,
                  const Globals& g, Json extra) {
    Json j{{"command", command}, {"args", args}, {"seed", g.seed}, {"family", g.family},
           {"phi", g.phi},       {"na_marker", g.na_marker}};
    for (auto& [k, v] : extra.items()) j[k] = v;
    write_json((dir / "config.json").string(), j);
}

// ---- fit ------------------------------------------------------------------

int cmd_fit(const std::vector<std::string>& args, const Globals& g, const DataArgs& d, const FitArgs& f,
            std::ostream& out) {
    const fs::path dir(g.out);
    const auto family = family_of(g);
    const auto opts = averaging_options(f);
    const bool intercept = !d.no_intercept;
    write_config(dir, "fit", args, g,
                 Json{{"data", fs::absolute(d.data).string()}, {"response", d.response}, {"intercept", intercept},
                      {"lambda", opts.lambda.to_string()}, {"max_iter", f.max_iter}, {"grad_tol", f.grad_tol},
                      {"ridge", f.ridge}, {"pattern_order", f.order}});

    const auto data = load_data(d, g, intercept);
    const auto index = build_pattern_index(data, opts.order);
    {
        auto rep = open_out(dir / "report.txt");
        rep << pattern_report(data, index);
    }
    const AveragedModel model = fit_averaged(data, index, family, opts);
    TrainingInfo info{fs::absolute(d.data).string(), d.response, g.na_marker, intercept, opts, g.seed};
    write_json((dir / "model.json").string(), model_to_json(model, info));
    {
        auto rep = open_out(dir / "report.txt");
        rep << pattern_report(data, index, &model);
    }
    out << "fitted " << model.candidates.size() << " candidate models; lambda = " << model.lambda_n
        << "; criterion = " << model.criterion_value << '\n';
    return 0;
}

// ---- predict --------------------------------------------------------------

int cmd_predict(const std::vector<std::string>& args, const Globals& g, const std::string& model_path,
                const std::string& query_path, std::ostream& out) {
    const fs::path dir(g.out);
    write_config(dir, "predict", args, g,
                 Json{{"model", fs::absolute(model_path).string()}, {"data", fs::absolute(query_path).string()}});
    const StoredModel stored = read_model(model_path);
    const auto& model = stored.model;
    const auto table = read_csv_table(query_path, g.na_marker);
    const auto query = query_from_table(table, model.column_names, stored.training.response,
                                        stored.training.intercept ? kIntercept : "");

    std::optional<FragmentaryDataset> train;
    std::map<std::vector<Index>, AveragedModel> restricted;
    auto po = open_out(dir / "predictions.csv");
    po << "row,theta,mean,rule\n";
    Index n_restricted = 0;
    for (std::size_t r = 0; r < query.rows.size(); ++r) {
        const auto& x = query.rows[r];
        Prediction pred;
        std::string rule = "full";
        if (covers(x, model.weighting_pattern.indices)) {
            pred = predict(model, x);
        } else {
            const auto cols = x.observed_indices();
            if (cols.empty()) throw InputError("query row " + std::to_string(r + 1) + " observes no covariate");
            auto it = restricted.find(cols);
            if (it == restricted.end()) {
                if (!train) {
                    train = read_dataset_csv(stored.training.data_path,
                                             CsvOptions{stored.training.response, stored.training.na_marker,
                                                        stored.training.intercept});
                }
                const auto sub = restrict_to(*train, Pattern{cols, 0});
                it = restricted.emplace(cols, fit_averaged(sub, model.family, stored.training.options)).first;
            }
            pred = predict(it->second, restrict_query(x, cols));
            rule = "restricted:" + set_string(cols);
            ++n_restricted;
        }
        po << r + 1 << ',' << fmt(pred.theta) << ',' << fmt(pred.mean) << ',' << '"' << rule << '"' << '\n';
    }
    out << "predicted " << query.rows.size() << " rows (" << n_restricted << " by restricted refit)\n";
    return 0;
}

// ---- compare --------------------------------------------------------------

struct CompareArgs {
    std::string methods = "all";
    std::string groups;
    std::string test;
    double split = 0.75;
    bool stratify = false;
    int folds = 5;
    std::string ic_sample = "own";
};

int cmd_compare(const std::vector<std::string>& args, const Globals& g, const DataArgs& d, const FitArgs& f,
                const CompareArgs& c, std::ostream& out) {
    const fs::path dir(g.out);
    const auto family = family_of(g);
    const bool intercept = !d.no_intercept;
    write_config(dir, "compare", args, g,
                 Json{{"data", fs::absolute(d.data).string()}, {"response", d.response}, {"intercept", intercept},
                      {"methods", c.methods}, {"groups", c.groups.empty() ? "" : fs::absolute(c.groups).string()},
                      {"test", c.test.empty() ? "" : fs::absolute(c.test).string()}, {"split", c.split},
                      {"stratify_pattern", c.stratify}, {"cv_folds", c.folds}, {"ic_sample", c.ic_sample}, {"lambda", f.lambda},
                      {"max_iter", f.max_iter}, {"grad_tol", f.grad_tol}, {"ridge", f.ridge},
                      {"pattern_order", f.order}});

    const auto methods = parse_method_list(c.methods);
    const auto data = load_data(d, g, intercept);
    MethodOptions mo;
    mo.averaging = averaging_options(f);
    mo.cv_folds = c.folds;
    mo.ic_sample = parse_ic_sample(c.ic_sample);
    mo.seed = g.seed;
    if (!c.groups.empty()) mo.groups = read_groups_json(c.groups, data.column_names);
    if (std::find(methods.begin(), methods.end(), Method::glasso) != methods.end() && mo.groups.empty()) {
        throw InputError("glasso needs --groups");
    }

    FragmentaryDataset train;
    std::vector<PartialVector> queries;
    VectorXd y_test;
    std::vector<Index> test_ids;
    if (!c.test.empty()) {
        train = data;
        const auto q = query_from_table(read_csv_table(c.test, g.na_marker), data.column_names, d.response,
                                        intercept ? kIntercept : "");
        if (!q.y || !q.y->allFinite()) throw InputError("test file needs a fully observed response column");
        queries = q.rows;
        y_test = *q.y;
        for (std::size_t r = 0; r < queries.size(); ++r) test_ids.push_back(static_cast<Index>(r));
    } else {
        if (!(c.split > 0.0 && c.split < 1.0)) throw InputError("--split must lie in (0, 1)");
        const auto index = build_pattern_index(data);
        const auto rows = split_training_rows(index, c.split, c.stratify, g.seed);
        std::vector<bool> in_train(static_cast<std::size_t>(data.n()), false);
        for (Index i : rows) in_train[static_cast<std::size_t>(i)] = true;
        train = select_rows(data, rows);
        for (Index i = 0; i < data.n(); ++i) {
            if (!in_train[static_cast<std::size_t>(i)]) {
                test_ids.push_back(i);
                queries.push_back(row_of(data, i));
            }
        }
        if (queries.empty()) throw InputError("split leaves no test rows");
        y_test = gather(data.y, test_ids);
    }

    auto summary = open_out(dir / "kl_summary.csv");
    summary << "method,n_test,n_predicted,deviance,deviance_per_obs,restricted_rows\n";
    for (Method m : methods) {
        const auto preds = predict_with_method(m, train, family, mo, queries);
        auto po = open_out(dir / ("predictions_" + to_string(m) + ".csv"));
        po << "row,y,theta,mean,rule\n";
        std::vector<Index> ok;
        Index restricted = 0;
        for (std::size_t r = 0; r < queries.size(); ++r) {
            const auto i = static_cast<Index>(r);
            const double th = preds.theta(i);
            po << test_ids[r] + 1 << ',' << fmt(y_test(i)) << ',';
            if (std::isfinite(th)) {
                po << fmt(th) << ',' << fmt(family.mean(th));
                ok.push_back(i);
            } else {
                po << "NA,NA";
            }
            po << ',' << preds.rule[r] << '\n';
            if (preds.rule[r] == "restricted") ++restricted;
        }
        const double dev = ok.empty() ? std::numeric_limits<double>::quiet_NaN()
                                      : deviance(gather(preds.theta, ok), gather(y_test, ok), family);
        summary << to_string(m) << ',' << queries.size() << ',' << ok.size() << ',' << fmt(dev) << ','
                << fmt(ok.empty() ? dev : dev / static_cast<double>(ok.size())) << ',' << restricted << '\n';
        out << to_string(m) << ": deviance/obs = " << (ok.empty() ? dev : dev / static_cast<double>(ok.size()))
            << " over " << ok.size() << " of " << queries.size() << " rows\n";
        for (const auto& note : preds.notes) out << "  " << to_string(m) << ": " << note << '\n';
    }
    return 0;
}

// ---- simulate -------------------------------------------------------------

struct SimulateArgs {
    Index n = 400;
    Index p = 14;
    double rho = 0.3;
    std::string beta_case = "decay";
    int reps = 50;
    std::string methods = "all";
    int threads = 0;
    std::string ic_sample = "own";
};

int cmd_simulate(const std::vector<std::string>& args, const Globals& g, const SimulateArgs& s, std::ostream& out,
                 std::ostream& err) {
    const fs::path dir(g.out);
    write_config(dir, "simulate", args, g,
                 Json{{"n", s.n}, {"p", s.p}, {"rho", s.rho}, {"beta_case", s.beta_case}, {"reps", s.reps},
                      {"methods", s.methods}, {"threads", s.threads},
                      {"ic_sample", s.ic_sample}});
    if (g.family != "binomial") throw InputError("the simulation design is logistic; use --family binomial");
    SimConfig cfg;
    cfg.n = s.n;
    cfg.p = s.p;
    cfg.rho = s.rho;
    cfg.beta_case = parse_beta_case(s.beta_case);
    cfg.reps = s.reps;
    cfg.seed = g.seed;
    cfg.methods = parse_method_list(s.methods);
    cfg.threads = s.threads;
    cfg.ic_sample = parse_ic_sample(s.ic_sample);
    const SimResult res = run_study(cfg);

    auto kl = open_out(dir / "kl_per_rep.csv");
    kl << "rep,cc_fraction,regenerations";
    for (Method m : res.methods) kl << ',' << to_string(m);
    kl << '\n';
    for (int r = 0; r < cfg.reps; ++r) {
        kl << r + 1 << ',' << fmt(res.cc_fraction(r)) << ',' << res.regenerations[static_cast<std::size_t>(r)];
        for (Index m = 0; m < res.per_rep_kl.cols(); ++m) {
            const double v = res.per_rep_kl(r, m);
            kl << ',' << (std::isnan(v) ? std::string("NA") : fmt(v));
        }
        kl << '\n';
    }
    auto sm = open_out(dir / "summary.csv");
    sm << "method,median,q1,q3,failures\n";
    for (std::size_t m = 0; m < res.methods.size(); ++m) {
        const auto& s2 = res.summary[m];
        sm << to_string(res.methods[m]) << ',' << fmt(s2.median) << ',' << fmt(s2.q1) << ',' << fmt(s2.q3) << ','
           << s2.failures << '\n';
        out << std::left << std::setw(8) << to_string(res.methods[m]) << " median KL/n1 = " << s2.median
            << "  [" << s2.q1 << ", " << s2.q3 << "]\n";
    }
    for (const auto& f : res.failures) err << "warning: " << f << '\n';
    return 0;
}

// ---- screen ---------------------------------------------------------------

int cmd_screen(const std::vector<std::string>& args, const Globals& g, const DataArgs& d, const std::string& groups,
               Index keep, std::ostream& out) {
    const fs::path dir(g.out);
    write_config(dir, "screen", args, g,
                 Json{{"data", fs::absolute(d.data).string()}, {"response", d.response},
                      {"groups", fs::absolute(groups).string()}, {"keep", keep}});
    const auto data = read_dataset_csv(d.data, CsvOptions{d.response, g.na_marker, false});
    const auto gs = read_groups_json(groups, data.column_names);
    const auto res = screen_columns(data, gs, keep);
    auto csv = open_out(dir / "screened.csv");
    write_dataset_csv(csv, select_columns(data, res.kept), d.response, g.na_marker);
    out << "kept " << res.kept.size() << " of " << data.p() << " columns\n";
    return 0;
}

}  // namespace

std::string pattern_report(const FragmentaryDataset& data, const PatternIndex& index, const AveragedModel* model) {
    std::ostringstream os;
    os << "Response patterns: K = " << index.K() << " (n = " << index.n() << ", p = " << index.p() << ")\n\n";
    std::vector<std::size_t> width;
    os << std::left << std::setw(4) << "k";
    for (const auto& name : data.column_names) {
        width.push_back(std::max<std::size_t>(name.size(), 1) + 1);
        os << std::setw(static_cast<int>(width.back())) << name;
    }
    os << "| " << std::setw(6) << "|T_k|" << std::setw(6) << "n_k" << std::setw(6) << "p_k";
    if (model) os << std::setw(12) << "weight";
    os << "T_k ; S_k\n";

    std::map<std::vector<Index>, double> weight_of;
    if (model) {
        for (std::size_t k = 0; k < model->candidates.size(); ++k) {
            weight_of[model->candidates[k].pattern.indices] = model->weights[static_cast<Index>(k)];
        }
    }
    for (Index k = 0; k < index.K(); ++k) {
        const auto& pat = index.pattern(k);
        os << std::setw(4) << k + 1;
        for (Index j = 0; j < index.p(); ++j) {
            os << std::setw(static_cast<int>(width[static_cast<std::size_t>(j)])) << (pat.contains(j) ? "*" : "");
        }
        os << "| " << std::setw(6) << index.t_set(k).size() << std::setw(6) << index.s_set(k).size() << std::setw(6)
           << pat.size();
        if (model) {
            const auto it = weight_of.find(pat.indices);
            std::ostringstream w;
            if (it == weight_of.end()) {
                w << "-";
            } else {
                w << std::fixed << std::setprecision(6) << it->second;
            }
            os << std::setw(12) << w.str();
        }
        os << set_string(index.t_set(k)) << " ; " << set_string(index.s_set(k)) << '\n';
    }
    if (model) {
        os << "\nlambda = " << model->lambda_n << ", criterion = " << std::setprecision(12) << model->criterion_value
           << ", weighting sample n_1 = " << model->weighting_sample_size << '\n';
        os << "optimizer: " << model->optimizer_iterations << " iterations, KKT residual " << model->kkt_residual
           << (model->optimizer_converged ? "" : " (not converged)") << '\n';
        os << "\nCombined coefficients:\n";
        for (Index j = 0; j < model->p(); ++j) {
            os << "  " << std::setw(20) << model->column_names[static_cast<std::size_t>(j)] << std::setprecision(10)
               << model->beta_combined(j) << '\n';
        }
        for (const auto& w : model->warnings) os << "warning: " << w << '\n';
    }
    return os.str();
}

std::vector<Index> split_training_rows(const PatternIndex& index, double fraction, bool by_pattern,
                                       std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<Index> rows;
    auto take = [&](std::vector<Index> pool) {
        std::shuffle(pool.begin(), pool.end(), rng);
        auto m = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(pool.size())));
        m = std::clamp<std::size_t>(m, 1, pool.size());
        rows.insert(rows.end(), pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(m));
    };
    if (by_pattern) {
        for (const auto& t : index.t_sets()) take(t);
    } else {
        std::vector<Index> all(static_cast<std::size_t>(index.n()));
        for (Index i = 0; i < index.n(); ++i) all[static_cast<std::size_t>(i)] = i;
        take(all);
    }
    std::sort(rows.begin(), rows.end());
    return rows;
}

MethodPredictions predict_with_method(Method method, const FragmentaryDataset& train, const ExponentialFamily& family,
                                      const MethodOptions& opts, const std::vector<PartialVector>& queries) {
    MethodPredictions out;
    out.theta = VectorXd::Constant(static_cast<Index>(queries.size()), std::numeric_limits<double>::quiet_NaN());
    out.rule.assign(queries.size(), "failed");

    std::optional<BaselineResult> full;
    try {
        full = fit_method(method, train, family, opts);
        for (const auto& n : full->notes) out.notes.push_back(n);
    } catch (const std::exception& e) {
        out.notes.push_back(std::string("fit on all columns failed: ") + e.what());
    }

    std::map<std::vector<Index>, std::optional<BaselineResult>> restricted;
    for (std::size_t r = 0; r < queries.size(); ++r) {
        const auto& x = queries[r];
        const auto i = static_cast<Index>(r);
        if (full && (full->zero_fill || covers(x, full->required_columns))) {
            out.theta(i) = predict_theta(*full, x);
            out.rule[r] = "direct";
            continue;
        }
        const auto cols = x.observed_indices();
        if (cols.empty() || static_cast<Index>(cols.size()) == train.p()) continue;
        auto it = restricted.find(cols);
        if (it == restricted.end()) {
            std::optional<BaselineResult> fit;
            try {
                const Pattern target{cols, 0};
                MethodOptions sub = opts;
                sub.groups = remap_groups(opts.groups, target);
                fit = fit_method(method, restrict_to(train, target), family, sub);
            } catch (const std::exception& e) {
                out.notes.push_back("refit on columns " + set_string(cols) + " failed: " + e.what());
            }
            it = restricted.emplace(cols, std::move(fit)).first;
        }
        if (!it->second) continue;
        out.theta(i) = predict_theta(*it->second, restrict_query(x, cols));
        out.rule[r] = "restricted";
    }
    return out;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Model averaging for GLMs on fragmentary data", "fragavg"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    app.add_option("--seed", g.seed, "Random seed")->capture_default_str();
    app.add_option("--family", g.family, "binomial, gaussian or poisson")->capture_default_str();
    app.add_option("--phi", g.phi, "Known dispersion (gaussian only)")->capture_default_str();
    app.add_option("--na-marker", g.na_marker, "Missing-cell marker in CSV input")->capture_default_str();
    app.add_option("--out", g.out, "Output directory")->capture_default_str();

    DataArgs fit_data, cmp_data, scr_data;
    FitArgs fit_args, cmp_fit;
    auto* fit = app.add_subcommand("fit", "Fit the averaged model");
    add_data_flags(fit, fit_data, true);
    add_fit_flags(fit, fit_args);

    std::string model_path, query_path;
    auto* pred = app.add_subcommand("predict", "Predict from a fitted model");
    pred->add_option("--model", model_path, "model.json from fit")->required()->check(CLI::ExistingFile);
    pred->add_option("--data", query_path, "Query CSV")->required()->check(CLI::ExistingFile);

    CompareArgs cmp_args;
    auto* cmp = app.add_subcommand("compare", "Compare methods on held-out data");
    add_data_flags(cmp, cmp_data, true);
    add_fit_flags(cmp, cmp_fit);
    cmp->add_option("--methods", cmp_args.methods, "Comma-separated methods or all")->capture_default_str();
    cmp->add_option("--groups", cmp_args.groups, "Column groups JSON")->check(CLI::ExistingFile);
    cmp->add_option("--test", cmp_args.test, "Test CSV (otherwise split the data)")->check(CLI::ExistingFile);
    cmp->add_option("--split", cmp_args.split, "Training fraction")->capture_default_str();
    cmp->add_flag("--stratify-pattern", cmp_args.stratify, "Split within each response pattern");
    cmp->add_option("--cv-folds", cmp_args.folds, "Group-lasso CV folds")->capture_default_str();
    cmp->add_option("--ic-sample", cmp_args.ic_sample, "SAIC/SBIC likelihood sample: complete-cases or own")
        ->capture_default_str();

    SimulateArgs sim_args;
    auto* sim = app.add_subcommand("simulate", "Run the Monte Carlo comparison");
    sim->add_option("--n", sim_args.n, "Subjects per replication")->capture_default_str();
    sim->add_option("--p", sim_args.p, "Generating covariates including the intercept")->capture_default_str();
    sim->add_option("--rho", sim_args.rho, "Equicorrelation")->capture_default_str();
    sim->add_option("--beta-case", sim_args.beta_case, "decay, flat or rise")->capture_default_str();
    sim->add_option("--reps", sim_args.reps, "Replications")->capture_default_str();
    sim->add_option("--methods", sim_args.methods, "Comma-separated methods or all")->capture_default_str();
    sim->add_option("--threads", sim_args.threads, "Worker threads (0: all cores)")->capture_default_str();
    sim->add_option("--ic-sample", sim_args.ic_sample, "SAIC/SBIC likelihood sample: complete-cases or own")
        ->capture_default_str();

    std::string scr_groups;
    Index keep = 10;
    auto* scr = app.add_subcommand("screen", "Marginal-correlation screening within groups");
    add_data_flags(scr, scr_data, false);
    scr->add_option("--groups", scr_groups, "Column groups JSON")->required()->check(CLI::ExistingFile);
    scr->add_option("--keep", keep, "Columns kept per group")->capture_default_str();

    std::string command;
    auto report = [&](const std::string& kind, const std::string& msg, int code) {
        err << error_json(kind, msg, code).dump() << '\n';
        if (!command.empty()) {
            std::ofstream f(fs::path(g.out) / "error.json");
            if (f) f << error_json(kind, msg, code).dump(2) << '\n';
        }
        return code;
    };

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp& e) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        return report("usage", e.what(), 2);
    }

    command = app.get_subcommands().front()->get_name();
    try {
        fs::create_directories(g.out);
        family_of(g);
        if (command == "fit") return cmd_fit(args, g, fit_data, fit_args, out);
        if (command == "predict") return cmd_predict(args, g, model_path, query_path, out);
        if (command == "compare") return cmd_compare(args, g, cmp_data, cmp_fit, cmp_args, out);
        if (command == "simulate") return cmd_simulate(args, g, sim_args, out, err);
        return cmd_screen(args, g, scr_data, scr_groups, keep, out);
    } catch (const InputError& e) {
        return report("input", e.what(), 2);
    } catch (const RankDeficientError& e) {
        return report("rank_deficient", e.what(), 1);
    } catch (const NumericalError& e) {
        return report("numerical", e.what(), 1);
    } catch (const fs::filesystem_error& e) {
        return report("input", e.what(), 2);
    } catch (const std::exception& e) {
        return report("internal", e.what(), 1);
    }
}

}  // namespace fragavg
