#include "fragavg/serialize.hpp"

#include <fstream>

#include "fragavg/error.hpp"

namespace fragavg {
namespace {

Json vector_json(const VectorXd& v) {
    Json a = Json::array();
    for (Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

VectorXd vector_from(const Json& a) {
    VectorXd v(static_cast<Index>(a.size()));
    for (std::size_t i = 0; i < a.size(); ++i) v(static_cast<Index>(i)) = a[i].get<double>();
    return v;
}

}  // namespace

std::string to_string(PatternOrder order) {
    return order == PatternOrder::by_size ? "by-size" : "first-appearance";
}

PatternOrder parse_pattern_order(const std::string& name) {
    if (name == "by-size") return PatternOrder::by_size;
    if (name == "first-appearance") return PatternOrder::first_appearance;
    throw InputError("unknown pattern order '" + name + "' (expected by-size or first-appearance)");
}

Json fit_options_to_json(const FitOptions& fit) {
    return Json{{"max_iter", fit.max_iter},
                {"grad_tol", fit.grad_tol},
                {"ridge", fit.ridge},
                {"divergence_norm", fit.divergence_norm},
                {"rank_tol", fit.rank_tol},
                {"step_halving", fit.step_halving}};
}

FitOptions fit_options_from_json(const Json& j) {
    FitOptions f;
    f.max_iter = j.at("max_iter").get<int>();
    f.grad_tol = j.at("grad_tol").get<double>();
    f.ridge = j.at("ridge").get<double>();
    f.divergence_norm = j.at("divergence_norm").get<double>();
    f.rank_tol = j.at("rank_tol").get<double>();
    f.step_halving = j.at("step_halving").get<bool>();
    return f;
}

Json model_to_json(const AveragedModel& model, const TrainingInfo& training) {
    Json cands = Json::array();
    for (std::size_t k = 0; k < model.candidates.size(); ++k) {
        const auto& c = model.candidates[k];
        cands.push_back({{"pattern_id", c.pattern.id},
                         {"columns", c.pattern.indices},
                         {"beta", vector_json(c.beta)},
                         {"weight", model.weights[static_cast<Index>(k)]},
                         {"n_k", c.n_k},
                         {"p_k", c.p_k},
                         {"loglik", c.loglik},
                         {"converged", c.converged},
                         {"iterations", c.iterations},
                         {"separation_guard", c.separation_guard}});
    }
    return Json{
        {"family", model.family.name()},
        {"phi", model.family.phi()},
        {"columns", model.column_names},
        {"lambda", model.lambda_n},
        {"lambda_spec", training.options.lambda.to_string()},
        {"weights", vector_json(model.weights.values())},
        {"beta_combined", vector_json(model.beta_combined)},
        {"criterion_value", model.criterion_value},
        {"weighting_pattern", model.weighting_pattern.indices},
        {"candidates", cands},
        {"diagnostics",
         {{"n", model.n},
          {"n_weighting", model.weighting_sample_size},
          {"patterns_total", model.patterns_total},
          {"kkt_residual", model.kkt_residual},
          {"optimizer_iterations", model.optimizer_iterations},
          {"optimizer_converged", model.optimizer_converged},
          {"warnings", model.warnings}}},
        {"training",
         {{"data", training.data_path},
          {"response", training.response},
          {"na_marker", training.na_marker},
          {"intercept", training.intercept},
          {"pattern_order", to_string(training.options.order)},
          {"fit", fit_options_to_json(training.options.fit)},
          {"seed", training.seed}}},
    };
}

StoredModel model_from_json(const Json& j) {
    try {
        StoredModel s;
        auto& m = s.model;
        m.family = ExponentialFamily::from_name(j.at("family").get<std::string>(), j.at("phi").get<double>());
        m.column_names = j.at("columns").get<std::vector<std::string>>();
        m.lambda_n = j.at("lambda").get<double>();
        m.weights = WeightVector(vector_from(j.at("weights")));
        m.beta_combined = vector_from(j.at("beta_combined"));
        m.criterion_value = j.at("criterion_value").get<double>();
        m.weighting_pattern = Pattern{j.at("weighting_pattern").get<std::vector<Index>>(), 1};
        for (const auto& c : j.at("candidates")) {
            CandidateModel cm;
            cm.pattern = Pattern{c.at("columns").get<std::vector<Index>>(), c.at("pattern_id").get<int>()};
            cm.beta = vector_from(c.at("beta"));
            cm.n_k = c.at("n_k").get<Index>();
            cm.p_k = c.at("p_k").get<Index>();
            cm.loglik = c.at("loglik").get<double>();
            cm.converged = c.at("converged").get<bool>();
            cm.iterations = c.at("iterations").get<int>();
            cm.separation_guard = c.at("separation_guard").get<bool>();
            m.candidates.push_back(std::move(cm));
        }
        const auto& d = j.at("diagnostics");
        m.n = d.at("n").get<Index>();
        m.weighting_sample_size = d.at("n_weighting").get<Index>();
        m.patterns_total = d.at("patterns_total").get<Index>();
        m.kkt_residual = d.at("kkt_residual").get<double>();
        m.optimizer_iterations = d.at("optimizer_iterations").get<int>();
        m.optimizer_converged = d.at("optimizer_converged").get<bool>();
        m.warnings = d.at("warnings").get<std::vector<std::string>>();

        const auto& t = j.at("training");
        s.training.data_path = t.at("data").get<std::string>();
        s.training.response = t.at("response").get<std::string>();
        s.training.na_marker = t.at("na_marker").get<std::string>();
        s.training.intercept = t.at("intercept").get<bool>();
        s.training.options.order = parse_pattern_order(t.at("pattern_order").get<std::string>());
        s.training.options.fit = fit_options_from_json(t.at("fit"));
        s.training.options.lambda = LambdaSpec::parse(j.at("lambda_spec").get<std::string>());
        s.training.seed = t.at("seed").get<std::uint64_t>();

        const auto p = static_cast<Index>(m.column_names.size());
        if (m.beta_combined.size() != p) throw InputError("model: beta_combined length differs from columns");
        if (m.weights.size() != static_cast<Index>(m.candidates.size())) {
            throw InputError("model: one weight per candidate expected");
        }
        for (const auto& c : m.candidates) {
            if (c.beta.size() != c.pattern.size()) throw InputError("model: candidate beta length differs from pattern");
            for (Index col : c.pattern.indices) {
                if (col < 0 || col >= p) throw InputError("model: candidate column out of range");
            }
        }
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("model: ") + e.what());
    }
}

StoredModel read_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open model file '" + path + "'");
    try {
        return model_from_json(Json::parse(in));
    } catch (const nlohmann::json::parse_error& e) {
        throw InputError("model file '" + path + "': " + e.what());
    }
}

void write_json(const std::string& path, const Json& j) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write '" + path + "'");
    out << j.dump(2) << '\n';
}

Json error_json(const std::string& kind, const std::string& message, int exit_code) {
    return Json{{"error", {{"kind", kind}, {"message", message}, {"exit_code", exit_code}}}};
}

}  // namespace fragavg
