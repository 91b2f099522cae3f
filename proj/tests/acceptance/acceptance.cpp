// Runs every shipped preset and prints one verdict line per acceptance criterion.
//
// Exit status is 0 when every criterion matches its recorded verdict.
// Criterion 7 is a recorded failure; its line still prints FAIL.

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "levycalc/experiment.hpp"

using namespace levycalc;
using json = nlohmann::json;

namespace {

// Pinned acceptance tolerances. Presets must carry exactly these values.
constexpr double kSeMultiplier = 3.0;
constexpr double kPsiUlps = 4.0;
constexpr int kPsiDraws = 1000;
constexpr double kGradientRelative = 1e-6;
constexpr double kClosedFormRelative = 1e-12;
constexpr double kOrderLo = 0.35, kOrderHi = 0.65;
constexpr double kRmsRatioMax = 0.01;
constexpr std::size_t kDefaultPaths = 100000;
constexpr int kDefaultCells = 512;
constexpr int kMinDualityPairs = 12;
constexpr std::size_t kReproPaths = 2000;

const std::set<int> kRecordedFailures{7};

struct Verdict {
    bool pass = true;
    std::string detail;
};

struct Criterion {
    int id;
    std::string title;
    std::string preset;
    std::function<Verdict(const ExperimentConfig&, const RunReport&)> extra;
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

const AssertionRecord* find(const RunReport& r, const std::string& term, const std::string& statistic,
                            bool info = false) {
    for (const auto& rec : r.records)
        if ((rec.status == Status::Info) == info && rec.term == term && rec.statistic == statistic) return &rec;
    return nullptr;
}

Verdict no_failures(const RunReport& report) {
    Verdict v;
    int checks = 0;
    for (const auto& r : report.records) {
        if (r.status == Status::Info) continue;
        ++checks;
        if (r.status == Status::Fail) {
            v.pass = false;
            v.detail += r.term + " " + r.statistic + fmt(" = %.4g (target %.4g, tol %.3g); ", r.value, r.target,
                                                         r.tolerance);
        }
    }
    if (checks == 0) {
        v.pass = false;
        v.detail = "no assertions recorded";
    }
    if (v.pass) v.detail = std::to_string(checks) + " checks";
    return v;
}

Verdict require(bool ok, const std::string& what) { return {ok, ok ? "" : what}; }

Verdict param_equals(const ExperimentConfig& c, const char* key, double pinned) {
    const auto& p = c.params();
    const bool ok = p.contains(key) && p.at(key).get<double>() == pinned;
    return require(ok, std::string("preset parameter ") + key + " differs from the pinned value");
}

Verdict se_multiplier(const RunReport& report) {
    for (const auto& r : report.records)
        if (r.provenance.rfind("3 SE", 0) == 0 && r.std_error > 0.0 && r.tolerance + 1e-15 < kSeMultiplier * r.std_error)
            return {false, r.term + " tolerance below 3 SE"};
    return {};
}

std::vector<Criterion> criteria() {
    return {
        {1, "isometry and orthogonality of multiple integrals", "isometry-catalog",
         [](const ExperimentConfig&, const RunReport& r) { return se_multiplier(r); }},
        {2, "duality E[delta(u)F] = E[int u DF dmu]", "duality-grid",
         [](const ExperimentConfig&, const RunReport& r) {
             int pairs = 0;
             for (const auto& rec : r.records) pairs += rec.term.rfind("duality(", 0) == 0;
             Verdict v = require(pairs >= kMinDualityPairs, "fewer than 12 (u, F) pairs");
             if (v.pass) v = se_multiplier(r);
             if (v.pass) v.detail = std::to_string(pairs) + " pairs";
             return v;
         }},
        {3, "psi product rule, exact algebra", "psi-algebra",
         [](const ExperimentConfig& c, const RunReport& r) {
             Verdict v = param_equals(c, "ulps", kPsiUlps);
             if (v.pass) v = param_equals(c, "draws", kPsiDraws);
             if (const auto* rec = find(r, "psi_product_rule", "max_ulps"); v.pass && rec)
                 v.detail = fmt("worst %.3g ulp", rec->value);
             return v;
         }},
        {4, "analytic vs finite-difference D, zero beyond the adapted horizon", "gradient-check",
         [](const ExperimentConfig& c, const RunReport&) {
             return param_equals(c, "relative_tolerance", kGradientRelative);
         }},
        {5, "closed-form Skorohod integral, second moment and energy bound", "skorohod-energy",
         [](const ExperimentConfig& c, const RunReport& r) {
             Verdict v = param_equals(c, "closed_form_tolerance", kClosedFormRelative);
             if (v.pass) v = se_multiplier(r);
             if (const auto* rec = find(r, "delta(W_T 1_[0,t])", "second_moment"); v.pass && rec)
                 v.detail = fmt("E delta^2 = %.4f vs %.4f", rec->value, rec->target);
             return v;
         }},
        {6, "pathwise to Skorohod bridge on a two-atom measure", "bridge-two-atom",
         [](const ExperimentConfig&, const RunReport& r) { return se_multiplier(r); }},
        {7, "adapted Ito reduction, refinement order and RMS ratio", "adapted-ito-bm",
         [](const ExperimentConfig& c, const RunReport& r) {
             const auto range = c.params().at("order_range").get<std::vector<double>>();
             Verdict v = require(range == std::vector<double>{kOrderLo, kOrderHi}, "order range differs");
             if (v.pass) v = param_equals(c, "rms_ratio_max", kRmsRatioMax);
             if (v.pass) v = require(c.params().at("refinement") == json{128, 256, 512, 1024}, "refinement grids differ");
             double previous = 1e300;
             for (int m : {128, 256, 512, 1024}) {
                 const auto* row = find(r, "refinement(M=" + std::to_string(m) + ")", "rms_residual", true);
                 if (v.pass) v = require(row && row->value < previous, "RMS residual does not decrease");
                 if (row) previous = row->value;
             }
             const auto* order = find(r, "refinement", "empirical_order");
             const auto* ratio = find(r, "refinement(M=1024)", "rms_residual_over_rms_lhs");
             if (v.pass && order && ratio)
                 v.detail = fmt("order %.3f in [0.35, 0.65]; RMS ratio %.4f vs max %.2f", order->value, ratio->value,
                                kRmsRatioMax);
             return v;
         }},
        {8, "finite-variation form within the pathwise quadrature bound", "fv-pure-jump",
         [](const ExperimentConfig&, const RunReport& r) {
             const auto* rec = find(r, "residual", "fraction_within_pathwise_bound");
             return require(rec && rec->value == 1.0 && rec->tolerance == 0.0, "not every path within its bound");
         }},
        {9, "anticipating Ito formula with u = W_T", "anticipating-wt",
         [](const ExperimentConfig& c, const RunReport& r) {
             Verdict v = se_multiplier(r);
             if (v.pass) v = require(c.params().at("d_minus") == "analytic", "D^-Y not analytic");
             if (const auto* rec = find(r, "residual", "mean"); v.pass && rec)
                 v.detail = fmt("mean residual %.3g, tol %.3g", rec->value, rec->tolerance);
             return v;
         }},
        {10, "epsilon-truncation gap table", "epsilon-two-atoms",
         [](const ExperimentConfig&, const RunReport& r) {
             bool exact = false;
             for (const auto& rec : r.records) exact |= rec.statistic == "l2_gap_exact_zero";
             Verdict v = require(exact, "no schedule entry below the smallest atom");
             if (v.pass) v = se_multiplier(r);
             return v;
         }},
    };
}

Verdict reproducibility() {
    Verdict v;
    for (const auto& name : preset_names()) {
        const auto config = preset(name);
        const auto reduced = config.with_paths(std::min(config.paths(), kReproPaths));
        const std::string a = run(reduced, {1}).csv();
        const std::string b = run(reduced, {1}).csv();
        const std::string c = run(reduced, {3}).csv();
        if (a != b || a != c) {
            v.pass = false;
            v.detail += name + " ";
        }
    }
    if (v.pass) v.detail = std::to_string(preset_names().size()) + " presets, 1 and 3 workers";
    else v.detail = "CSV differs: " + v.detail;
    return v;
}

bool standard_shape(const ExperimentConfig& c, bool monte_carlo) {
    return (!monte_carlo || c.paths() == kDefaultPaths) && c.grid().cells() == kDefaultCells &&
           c.model().horizon() == 1.0;
}

}  // namespace

int main(int argc, char** argv) {
    std::optional<std::size_t> paths;
    std::set<int> only;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--paths") == 0 && i + 1 < argc) paths = std::strtoull(argv[++i], nullptr, 10);
        else if (std::strcmp(argv[i], "--only") == 0 && i + 1 < argc) only.insert(std::atoi(argv[++i]));
        else {
            std::fprintf(stderr, "usage: %s [--paths N] [--only K]...\n", argv[0]);
            return 2;
        }
    }
    const unsigned workers = std::max(1u, std::thread::hardware_concurrency());
    int unexpected = 0;
    auto report_line = [&](int id, const std::string& title, const Verdict& v) {
        const bool recorded = kRecordedFailures.count(id) > 0;
        std::printf("criterion %2d %s  %s  [%s]%s\n", id, v.pass ? "PASS" : "FAIL", title.c_str(), v.detail.c_str(),
                    recorded ? (v.pass ? " (recorded as failing; now passes)" : " (recorded failure)") : "");
        std::fflush(stdout);
        if (!v.pass && !recorded) ++unexpected;
    };
    for (const auto& c : criteria()) {
        if (!only.empty() && !only.count(c.id)) continue;
        ExperimentConfig config = preset(c.preset);
        if (paths) config = config.with_paths(*paths);
        const RunReport report = run(config, {workers});
        Verdict v = no_failures(report);
        const Verdict extra = c.extra(config, report);
        const bool monte_carlo = c.id != 3 && c.id != 4;
        if (!standard_shape(config, monte_carlo && !paths))
            v = {false, "preset differs from N = 1e5, M = 512, T = 1"};
        if (!extra.pass) v = {false, v.pass ? extra.detail : extra.detail + "; " + v.detail};
        else if (!extra.detail.empty()) v.detail = v.pass ? extra.detail : extra.detail + "; " + v.detail;
        report_line(c.id, c.title, v);
    }
    if (only.empty() || only.count(11)) report_line(11, "bit-identical CSV across runs and worker counts", reproducibility());
    return unexpected == 0 ? 0 : 1;
}
