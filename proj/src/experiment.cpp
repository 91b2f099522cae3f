#include "levycalc/experiment.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "levycalc/errors.hpp"
#include "experiment_kinds.hpp"

namespace levycalc {

using json = nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& what) { throw ConfigError(what); }

const json& field(const json& obj, const std::string& key) {
    if (!obj.is_object() || !obj.contains(key)) bad("missing field '" + key + "'");
    return obj.at(key);
}

double number(const json& obj, const std::string& key) {
    const json& v = field(obj, key);
    if (!v.is_number()) bad("field '" + key + "' must be a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) bad("field '" + key + "' must be finite");
    return x;
}

double positive(const json& obj, const std::string& key) {
    const double x = number(obj, key);
    if (!(x > 0.0)) bad("field '" + key + "' must be positive");
    return x;
}

std::int64_t positive_integer(const json& obj, const std::string& key) {
    const json& v = field(obj, key);
    if (!v.is_number_integer() || v.get<std::int64_t>() <= 0) bad("field '" + key + "' must be a positive integer");
    return v.get<std::int64_t>();
}

std::string text(const json& obj, const std::string& key) {
    const json& v = field(obj, key);
    if (!v.is_string()) bad("field '" + key + "' must be a string");
    return v.get<std::string>();
}

LevyMeasure parse_nu(const json& nu) {
    const std::string type = text(nu, "type");
    if (type == "none") return LevyMeasure::none();
    if (type == "atoms") {
        const json& list = field(nu, "atoms");
        if (!list.is_array()) bad("nu.atoms must be an array of [location, mass]");
        std::vector<Atom> atoms;
        for (const auto& a : list) {
            if (!a.is_array() || a.size() != 2 || !a[0].is_number() || !a[1].is_number())
                bad("nu.atoms entries must be [location, mass]");
            atoms.push_back({a[0].get<double>(), a[1].get<double>()});
        }
        return LevyMeasure::atoms(std::move(atoms));
    }
    if (type == "two_sided_exponential")
        return LevyMeasure::two_sided_exponential(positive(nu, "c"), positive(nu, "scale"), number(nu, "inner"),
                                                  positive(nu, "outer"));
    if (type == "power_law")
        return LevyMeasure::power_law(positive(nu, "c"), positive(nu, "alpha"), positive(nu, "outer"));
    bad("unknown nu type '" + type + "'");
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const json& document) {
    if (!document.is_object()) bad("config must be a JSON object");
    ExperimentConfig config(document);
    text(document, "name");
    const std::string kind = text(document, "kind");
    const auto& kinds = experiment_kinds();
    if (std::find(kinds.begin(), kinds.end(), kind) == kinds.end()) bad("unknown experiment kind '" + kind + "'");
    const json& ens = field(document, "ensemble");
    positive_integer(ens, "paths");
    const json& seed = field(ens, "seed");
    if (!seed.is_number_integer() || (!seed.is_number_unsigned() && seed.get<std::int64_t>() < 0))
        bad("field 'seed' must be a non-negative integer");
    if (!field(document, "params").is_object()) bad("field 'params' must be an object");
    try {
        config.model();
        config.partition();
        config.grid();
        detail::validate_params(kind, config.params(), config);
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        bad(e.what());
    }
    return config;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) bad("cannot open config file " + path);
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        bad(std::string("config parse error: ") + e.what());
    }
    return from_json(doc);
}

std::string ExperimentConfig::hash() const {
    const std::string text = canonical();
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int length = 0;
    EVP_Digest(text.data(), text.size(), digest, &length, EVP_sha256(), nullptr);
    std::string hex;
    char buf[3];
    for (unsigned int i = 0; i < length; ++i) {
        std::snprintf(buf, sizeof buf, "%02x", digest[i]);
        hex += buf;
    }
    return hex;
}

LevyModel ExperimentConfig::model() const {
    const json& m = field(doc_, "model");
    return LevyModel(number(m, "gamma"), number(m, "sigma"), parse_nu(field(m, "nu")), positive(m, "horizon"));
}

ShellPartition ExperimentConfig::partition() const {
    const json& p = field(doc_, "partition");
    const double ratio = positive(p, "ratio");
    if (ratio >= 1.0) bad("partition ratio must lie in (0, 1)");
    return shell_partition(model(), static_cast<int>(positive_integer(p, "depth")), ratio);
}

TimeGrid ExperimentConfig::grid() const {
    return TimeGrid::uniform(model().horizon(), static_cast<int>(positive_integer(field(doc_, "grid"), "cells")));
}

PathEnsemble ExperimentConfig::ensemble() const { return PathEnsemble(model(), partition(), grid(), seed(), paths()); }

ExperimentConfig ExperimentConfig::with_seed(std::uint64_t seed) const {
    json doc = doc_;
    doc["ensemble"]["seed"] = seed;
    return from_json(doc);
}

ExperimentConfig ExperimentConfig::with_paths(std::size_t paths) const {
    json doc = doc_;
    doc["ensemble"]["paths"] = paths;
    return from_json(doc);
}

const std::vector<std::string>& experiment_kinds() {
    static const std::vector<std::string> kinds{
        "sample-paths",  "verify-duality", "verify-isometry",    "bridge-check",    "verify-ito",
        "verify-ito-fv", "energy-check",   "epsilon-study",      "verify-psi-algebra", "verify-gradient"};
    return kinds;
}

namespace {

json two_atom_model_json() {
    return {{"gamma", 0.1},
            {"sigma", 1.0},
            {"horizon", 1.0},
            {"nu", {{"type", "atoms"}, {"atoms", {{1.5, 0.5}, {0.5, 1.0}, {-0.5, 1.0}}}}}};
}

json base(const std::string& name, const std::string& kind, json model, int depth, int cells, std::size_t paths,
          json params) {
    return {{"name", name},
            {"kind", kind},
            {"model", std::move(model)},
            {"partition", {{"ratio", 0.5}, {"depth", depth}}},
            {"grid", {{"cells", cells}}},
            {"ensemble", {{"paths", paths}, {"seed", 20240601}}},
            {"params", std::move(params)}};
}

constexpr std::size_t kPaths = 100000;
constexpr int kCells = 512;

json preset_document(const std::string& name) {
    const json brownian_only = {{"gamma", 0.0}, {"sigma", 1.0}, {"horizon", 1.0}, {"nu", {{"type", "none"}}}};
    if (name == "isometry-catalog")
        return base(name, "verify-isometry", two_atom_model_json(), 3, kCells, kPaths, {{"catalog", "standard"}});
    if (name == "duality-grid")
        return base(name, "verify-duality", two_atom_model_json(), 3, kCells, kPaths, {{"catalog", "standard"}});
    if (name == "psi-algebra")
        return base(name, "verify-psi-algebra", two_atom_model_json(), 3, kCells, 1000,
                    {{"draws", 1000}, {"ulps", 4}});
    if (name == "gradient-check")
        return base(name, "verify-gradient", two_atom_model_json(), 3, kCells, 200,
                    {{"times_per_path", 8}, {"relative_tolerance", 1e-6}});
    if (name == "skorohod-energy")
        return base(name, "energy-check", two_atom_model_json(), 3, kCells, kPaths,
                    {{"t", 1.0}, {"closed_form_tolerance", 1e-12}});
    if (name == "bridge-two-atom")
        return base(name, "bridge-check", two_atom_model_json(), 3, kCells, kPaths,
                    {{"fields", {"constant", "cos-time", "sin-X", "sin-WT"}}, {"t", 1.0}});
    if (name == "adapted-ito-bm")
        return base(name, "verify-ito", brownian_only, 3, kCells, kPaths,
                    {{"spec", "brownian"},
                     {"test_function", "square"},
                     {"t", 1.0},
                     {"refinement", {128, 256, 512, 1024}},
                     {"order_range", {0.35, 0.65}},
                     {"rms_ratio_max", 0.01}});
    if (name == "anticipating-wt")
        return base(name, "verify-ito",
                    {{"gamma", 0.0},
                     {"sigma", 1.0},
                     {"horizon", 1.0},
                     {"nu", {{"type", "atoms"}, {"atoms", {{0.5, 1.0}, {-0.5, 1.0}}}}}},
                    3, kCells, kPaths,
                    {{"spec", "terminal-brownian"}, {"test_function", "sine"}, {"t", 1.0}, {"d_minus", "analytic"}});
    if (name == "fv-pure-jump")
        return base(name, "verify-ito-fv",
                    {{"gamma", 0.0},
                     {"sigma", 0.0},
                     {"horizon", 1.0},
                     {"nu",
                      {{"type", "atoms"}, {"atoms", {{1.5, 0.5}, {0.5, 1.0}, {-0.25, 2.0}, {0.25, 3.0}}}}}},
                    4, kCells, kPaths, {{"spec", "small-jump-unit"}, {"test_function", "sine"}, {"t", 1.0}});
    if (name == "epsilon-two-atoms")
        return base(name, "epsilon-study",
                    {{"gamma", 0.0},
                     {"sigma", 1.0},
                     {"horizon", 1.0},
                     {"nu", {{"type", "atoms"}, {"atoms", {{0.5, 1.0}, {0.05, 20.0}}}}}},
                    6, kCells, kPaths,
                    {{"spec", "small-jump-unit"}, {"schedule", {0.8, 0.4, 0.2, 0.1, 0.04}}, {"t", 1.0}});
    if (name == "sample-basic")
        return base(name, "sample-paths", two_atom_model_json(), 3, kCells, 10000, {{"dump", 3}});
    bad("unknown preset '" + name + "'");
}

}  // namespace

const std::vector<std::string>& preset_names() {
    static const std::vector<std::string> names{
        "isometry-catalog", "duality-grid",   "psi-algebra",  "gradient-check",    "skorohod-energy",
        "bridge-two-atom",  "adapted-ito-bm", "fv-pure-jump", "anticipating-wt", "epsilon-two-atoms",
        "sample-basic"};
    return names;
}

ExperimentConfig preset(const std::string& name) { return ExperimentConfig::from_json(preset_document(name)); }

const char* to_string(Status s) {
    switch (s) {
        case Status::Pass: return "pass";
        case Status::Warn: return "warn";
        case Status::Fail: return "fail";
        case Status::Info: return "info";
    }
    return "?";
}

Status RunReport::overall() const {
    Status s = Status::Pass;
    for (const auto& r : records) {
        if (r.status == Status::Fail) return Status::Fail;
        if (r.status == Status::Warn) s = Status::Warn;
    }
    return s;
}

namespace {

std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

}  // namespace

std::string RunReport::csv() const {
    std::ostringstream os;
    os << "# config_sha256=" << config_hash << "\n";
    os << "experiment,term,statistic,value,std_error,target,tolerance,status\n";
    for (const auto& r : records)
        os << csv_field(r.experiment) << ',' << csv_field(r.term) << ',' << csv_field(r.statistic) << ','
           << format_double(r.value) << ',' << format_double(r.std_error) << ',' << format_double(r.target) << ','
           << format_double(r.tolerance) << ',' << to_string(r.status) << "\n";
    return os.str();
}

std::string RunReport::summary() const {
    std::ostringstream os;
    const std::string name = config.value("name", std::string("?"));
    os << "experiment " << name << " (" << config.value("kind", std::string("?")) << ")\n";
    os << "config sha256 " << config_hash << "\n";
    os << "overall " << to_string(overall()) << "\n\n";
    for (const auto& r : records) {
        if (r.status == Status::Info) continue;
        char line[512];
        std::snprintf(line, sizeof line, "[%s] %s %s = %.6g (se %.3g) target %.6g tol %.3g  %s\n",
                      to_string(r.status), r.term.c_str(), r.statistic.c_str(), r.value, r.std_error, r.target,
                      r.tolerance, r.provenance.c_str());
        os << line;
    }
    if (!warnings.empty()) {
        os << "\nwarnings:\n";
        for (const auto& w : warnings) os << "  " << w << "\n";
    }
    os << "\ntimings:\n";
    for (const auto& [phase, seconds] : timings) {
        char line[128];
        std::snprintf(line, sizeof line, "  %-24s %.3f s\n", phase.c_str(), seconds);
        os << line;
    }
    return os.str();
}

RunReport run(const ExperimentConfig& config, const RunOptions& options) {
    RunReport report;
    report.config = config.document();
    report.config_hash = config.hash();
    const auto start = std::chrono::steady_clock::now();
    detail::run_kind(config, options, report);
    report.timings.emplace_back("total", std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
    return report;
}

void write_artifacts(const RunReport& report, const std::string& name, const std::string& dir) {
    std::filesystem::create_directories(dir);
    const std::filesystem::path base(dir);
    std::ofstream(base / (name + ".csv"), std::ios::binary) << report.csv();
    std::ofstream(base / (name + ".summary.txt")) << report.summary();
    std::ofstream(base / (name + ".config.json")) << report.config.dump(2) << "\n";
    for (const auto& [file, content] : report.artifacts) std::ofstream(base / file, std::ios::binary) << content;
}

}  // namespace levycalc
