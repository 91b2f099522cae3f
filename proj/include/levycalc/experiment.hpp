#pragma once

// Experiment configs, presets and the orchestrator that turns a config into
// assertion records, CSV and a summary.

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "levycalc/canonical_path.hpp"
#include "levycalc/levy_model.hpp"

namespace levycalc {

/// A validated experiment definition. The JSON document is the source of
/// truth; typed views are rebuilt from it on demand.
class ExperimentConfig {
public:
    /// Throws ConfigError on unknown kinds, unresolvable catalog ids or bad numbers.
    static ExperimentConfig from_json(const nlohmann::json& document);
    static ExperimentConfig from_file(const std::string& path);

    const nlohmann::json& document() const { return doc_; }
    /// Canonical serialization: sorted keys, shortest round-trip doubles.
    std::string canonical() const { return doc_.dump(); }
    /// SHA-256 of canonical(), lowercase hex.
    std::string hash() const;

    std::string name() const { return doc_.at("name").get<std::string>(); }
    std::string kind() const { return doc_.at("kind").get<std::string>(); }
    std::uint64_t seed() const { return doc_.at("ensemble").at("seed").get<std::uint64_t>(); }
    std::size_t paths() const { return doc_.at("ensemble").at("paths").get<std::size_t>(); }
    const nlohmann::json& params() const { return doc_.at("params"); }

    LevyModel model() const;
    ShellPartition partition() const;
    TimeGrid grid() const;
    PathEnsemble ensemble() const;

    ExperimentConfig with_seed(std::uint64_t seed) const;
    ExperimentConfig with_paths(std::size_t paths) const;

private:
    explicit ExperimentConfig(nlohmann::json doc) : doc_(std::move(doc)) {}
    nlohmann::json doc_;
};

const std::vector<std::string>& experiment_kinds();
const std::vector<std::string>& preset_names();
/// Throws ConfigError for an unknown name.
ExperimentConfig preset(const std::string& name);

/// Info marks descriptive rows that carry no assertion.
enum class Status { Pass, Warn, Fail, Info };
const char* to_string(Status s);

struct AssertionRecord {
    std::string experiment;
    std::string term;
    std::string statistic;
    double value = 0.0;
    double std_error = 0.0;
    double target = 0.0;
    double tolerance = 0.0;
    Status status = Status::Pass;
    std::string provenance;  // how the tolerance was formed
};

struct RunReport {
    std::string config_hash;
    nlohmann::json config;
    std::vector<AssertionRecord> records;
    std::vector<std::string> warnings;
    std::vector<std::pair<std::string, double>> timings;  // seconds per phase
    std::vector<std::pair<std::string, std::string>> artifacts;  // extra files: name, content

    Status overall() const;
    /// 0 pass or warn, 1 any failure.
    int exit_code() const { return overall() == Status::Fail ? 1 : 0; }
    /// The CSV artifact; deterministic for a given config.
    std::string csv() const;
    std::string summary() const;
};

struct RunOptions {
    unsigned workers = 1;
};

RunReport run(const ExperimentConfig& config, const RunOptions& options = {});

/// Writes <dir>/<name>.csv, <dir>/<name>.summary.txt and <dir>/<name>.config.json.
void write_artifacts(const RunReport& report, const std::string& name, const std::string& dir);

}  // namespace levycalc
