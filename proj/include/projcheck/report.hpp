#pragma once

#include "projcheck/inference.hpp"
#include "projcheck/model_spec.hpp"
#include "projcheck/projectivity.hpp"

#include <json.hpp>

#include <string>
#include <string_view>

namespace projcheck {

inline constexpr std::string_view kToolVersion = "1.0.0";

nlohmann::json to_json(const SiteSpaceFamily& family, const Witness& witness);
nlohmann::json to_json(const SiteSpaceFamily& family, const ProjectivityReport& report);
nlohmann::json to_json(const MLEResult& result);
nlohmann::json to_json(const ScalingProfile& profile);
nlohmann::json to_json(const RateFunctionEval& eval);
nlohmann::json to_json(const StatDistribution& dist);
/// Summary of an experiment: per variant and size, median error and failure counts.
nlohmann::json experiment_summary(const ExperimentTable& table);
nlohmann::json error_json(const Error& error);

struct RunReport {
    std::string command;
    std::string inputs_digest;  // SHA-256 of the spec bytes
    double wall_seconds = 0.0;
    nlohmann::json payload;

    nlohmann::json to_json() const;
};

} // namespace projcheck
