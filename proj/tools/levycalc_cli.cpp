#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "levycalc/ensemble.hpp"
#include "levycalc/errors.hpp"
#include "levycalc/experiment.hpp"

namespace {

struct Flags {
    std::string config;
    std::string preset;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> paths;
    std::string out = "results";
    unsigned workers = levycalc::default_workers();
    bool quiet = false;
};

int execute(const std::string& kind, const Flags& flags) {
    using namespace levycalc;
    if (flags.config.empty() == flags.preset.empty())
        throw ConfigError("exactly one of --config or --preset is required");
    ExperimentConfig config = flags.preset.empty() ? ExperimentConfig::from_file(flags.config) : preset(flags.preset);
    if (config.kind() != kind)
        throw ConfigError("config '" + config.name() + "' is of kind " + config.kind() + ", not " + kind);
    if (flags.seed) config = config.with_seed(*flags.seed);
    if (flags.paths) config = config.with_paths(*flags.paths);
    const RunReport report = run(config, RunOptions{flags.workers});
    write_artifacts(report, config.name(), flags.out);
    if (!flags.quiet) std::cout << report.summary();
    return report.exit_code();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"levycalc: Malliavin calculus experiments on the canonical Levy space"};
    app.require_subcommand(1);
    Flags flags;
    std::string chosen;

    auto* list = app.add_subcommand("presets", "List the shipped presets");
    for (const auto& kind : levycalc::experiment_kinds()) {
        auto* sub = app.add_subcommand(kind, "Run a " + kind + " experiment");
        sub->add_option("--config", flags.config, "Experiment config (JSON)")->check(CLI::ExistingFile);
        sub->add_option("--preset", flags.preset, "Shipped preset name");
        sub->add_option("--seed", flags.seed, "Override the ensemble seed");
        sub->add_option("--paths", flags.paths, "Override the ensemble size")->check(CLI::PositiveNumber);
        sub->add_option("--out", flags.out, "Output directory")->capture_default_str();
        sub->add_option("--workers", flags.workers, "Worker threads")->check(CLI::PositiveNumber);
        sub->add_flag("--quiet", flags.quiet, "Do not print the summary");
        sub->callback([&chosen, kind] { chosen = kind; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    if (list->parsed()) {
        for (const auto& name : levycalc::preset_names())
            std::cout << name << "\t" << levycalc::preset(name).kind() << "\n";
        return 0;
    }
    try {
        return execute(chosen, flags);
    } catch (const levycalc::ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
