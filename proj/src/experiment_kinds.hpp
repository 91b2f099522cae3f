#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "levycalc/experiment.hpp"

namespace levycalc::detail {

/// Throws ConfigError when a kind-specific parameter is missing or unresolvable.
void validate_params(const std::string& kind, const nlohmann::json& params, const ExperimentConfig& config);

void run_kind(const ExperimentConfig& config, const RunOptions& options, RunReport& report);

}  // namespace levycalc::detail
