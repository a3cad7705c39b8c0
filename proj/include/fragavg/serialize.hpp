#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "fragavg/averaging.hpp"

namespace fragavg {

using Json = nlohmann::ordered_json;

/// How a model was trained; enough to refit it on a restricted column set.
struct TrainingInfo {
    std::string data_path;
    std::string response;
    std::string na_marker = "NA";
    bool intercept = true;
    AveragingOptions options;
    std::uint64_t seed = 0;
};

struct StoredModel {
    AveragedModel model;
    TrainingInfo training;
};

std::string to_string(PatternOrder order);
PatternOrder parse_pattern_order(const std::string& name);

Json fit_options_to_json(const FitOptions& fit);
FitOptions fit_options_from_json(const Json& j);

/// Column indices in the JSON are 0-based positions in `columns`.
Json model_to_json(const AveragedModel& model, const TrainingInfo& training);
/// Throws InputError on a missing field or inconsistent sizes.
StoredModel model_from_json(const Json& j);

StoredModel read_model(const std::string& path);
void write_json(const std::string& path, const Json& j);

/// {"error": {"kind": ..., "message": ..., "exit_code": ...}}
Json error_json(const std::string& kind, const std::string& message, int exit_code);

}  // namespace fragavg
