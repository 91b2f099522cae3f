#include "experiment_kinds.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

#include "levycalc/anticipating.hpp"
#include "levycalc/chaos.hpp"
#include "levycalc/ensemble.hpp"
#include "levycalc/errors.hpp"
#include "levycalc/ito.hpp"
#include "levycalc/rng.hpp"

namespace levycalc::detail {

using json = nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& what) { throw ConfigError(what); }

constexpr double kUlp = std::numeric_limits<double>::epsilon();

// ---------------------------------------------------------------- catalogs

YSpec resolve_spec(const std::string& id, double horizon) {
    if (id == "brownian") return y_catalog::brownian();
    if (id == "small-jump-unit") return y_catalog::small_jump_unit();
    if (id == "terminal-brownian") return y_catalog::terminal_brownian(horizon);
    if (id == "terminal-sine") return y_catalog::terminal_sine(horizon);
    if (id == "adapted-mix") return y_catalog::adapted_mix();
    bad("unknown Y spec id '" + id + "'");
}

TestFunction resolve_test_function(const std::string& id) {
    if (id == "square") return test_functions::square();
    if (id == "sine") return test_functions::sine();
    if (id == "cosine") return test_functions::cosine();
    if (id == "trig-mix-2") return test_functions::trig_mix(2);
    bad("unknown test function id '" + id + "'");
}

DMinusMode resolve_d_minus(const std::string& id) {
    if (id == "analytic") return DMinusMode::Analytic;
    if (id == "numeric") return DMinusMode::Numeric;
    if (id == "adapted-zero") return DMinusMode::AdaptedZero;
    bad("unknown d_minus mode '" + id + "'");
}

SimpleRandomField::Term term(RandomFunctional f, Shape h) { return {std::move(f), std::move(h), std::nullopt}; }

SimpleRandomField field_of(RandomFunctional f, Shape h) { return SimpleRandomField({term(std::move(f), std::move(h))}); }

ValueSet small_positive() { return ValueSet::interval(0.0, 1.0, false, true); }
ValueSet small_negative() { return ValueSet::interval(-1.0, 0.0, true, false); }
ValueSet big_jumps() { return ValueSet::abs_range(1.0, kInf); }

struct NamedKernel {
    std::string name;
    ElementaryKernel kernel;
};

std::vector<NamedKernel> kernel_catalog(double horizon) {
    const ProductRegion a{{0.0, horizon / 2}, ValueSet::zero()}, b{{horizon / 2, horizon}, ValueSet::zero()},
        c{{0.0, horizon}, small_positive()}, d{{0.0, horizon}, small_negative()}, e{{0.0, horizon}, big_jumps()};
    return {{"f1", ElementaryKernel(1, {a, c, e}, {{{0}, 1.0}, {{1}, -0.5}, {{2}, 2.0}})},
            {"g1", ElementaryKernel(1, {b, d}, {{{0}, 1.0}, {{1}, 1.5}})},
            {"f2", ElementaryKernel(2, {a, c, d}, {{{0, 1}, 1.0}, {{1, 2}, -1.0}, {{2, 0}, 0.5}})},
            {"g2", ElementaryKernel(2, {b, e}, {{{0, 1}, 1.0}})},
            {"f3", ElementaryKernel(3, {a, b, c}, {{{0, 1, 2}, 1.0}})}};
}

const std::vector<std::pair<int, int>> kKernelPairs{{0, 0}, {0, 1}, {1, 1}, {2, 2}, {2, 3},
                                                    {3, 3}, {4, 4}, {0, 2}, {2, 4}, {1, 4}};

struct NamedField {
    std::string name;
    SimpleRandomField u;
};

std::vector<NamedField> duality_fields(double horizon) {
    const double t = horizon;
    return {{"constant", field_of(catalog::constant(1.0), Shape::box({0.0, t / 2}, ValueSet::everything()))},
            {"W_T", field_of(catalog::brownian_at(t), Shape::box({0.0, t}, ValueSet::zero()))},
            {"sin_W_half", field_of(catalog::sin_brownian(t / 2), Shape::box({t / 4, t}, ValueSet::zero()))},
            {"jump_sum_T", field_of(catalog::jump_sum(t), Shape::box({0.0, t}, ValueSet::nonzero()))},
            {"cos_W_T_small", field_of(catalog::cos_brownian(t), Shape::box({0.0, t}, small_positive()))}};
}

struct NamedFunctional {
    std::string name;
    RandomFunctional f;
};

std::vector<NamedFunctional> duality_functionals(const LevyModel& model, const ShellPartition& part) {
    const double t = model.horizon();
    return {{"W_T", catalog::brownian_at(t)},
            {"jump_sum_sq_T", catalog::jump_sum_sq(t)},
            {"cos_X_T", catalog::cos_of_X(1.0, t, model, part)}};
}

std::vector<NamedFunctional> gradient_functionals(const LevyModel& model, const ShellPartition& part) {
    const double t = model.horizon();
    return {{"W_half", catalog::brownian_at(t / 2)},
            {"sin_W_T", catalog::sin_brownian(t)},
            {"trig_mix_jump", catalog::cylindrical(heads::trig_mix(2), {t / 4, 3 * t / 4}, catalog::jump_sum(t))},
            {"product3", catalog::cylindrical(heads::product(3), {t / 4, t / 2, t})},
            {"cos_X_half", catalog::cos_of_X(1.0, t / 2, model, part)},
            {"cos_W_half_count", catalog::product(catalog::cos_brownian(t / 2), catalog::jump_count(t))}};
}

/// Draw from the functional catalog with Brownian times on grid nodes.
RandomFunctional random_functional(Philox4x32& rng, const LevyModel& model, const ShellPartition& part, int cells) {
    auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * rng.uniform_open(); };
    auto integer = [&](int lo, int hi) { return lo + static_cast<int>(rng() % static_cast<std::uint32_t>(hi - lo + 1)); };
    const double t = model.horizon();
    auto node = [&] { return t * integer(1, cells) / cells; };
    switch (integer(0, 9)) {
        case 0: return catalog::constant(uniform(-2.0, 2.0));
        case 1: return catalog::brownian_at(node());
        case 2: return catalog::sin_brownian(node());
        case 3: {
            const double a = node(), b = node();
            return catalog::cylindrical(heads::trig_mix(2), {a, b}, catalog::jump_sum(uniform(0.1, 1.0) * t));
        }
        case 4: return catalog::jump_sum(uniform(0.1, 1.0) * t);
        case 5: return catalog::jump_sum_sq(uniform(0.1, 1.0) * t);
        case 6: return catalog::mollified_jump_sum(uniform(0.5, 3.0), uniform(0.1, 1.0) * t);
        case 7: return catalog::cos_of_X(uniform(0.5, 2.0), node(), model, part);
        case 8: return catalog::product(catalog::cos_brownian(node()), catalog::jump_count(uniform(0.1, 1.0) * t));
        default: {
            const double a = node(), b = node(), c = node();
            return catalog::cylindrical(heads::product(3), {a, b, c});
        }
    }
}

std::vector<LeftLimitField> bridge_fields(const std::vector<std::string>& ids, const LevyModel& model,
                                          const ShellPartition& part) {
    const double horizon = model.horizon();
    std::vector<LeftLimitField> out;
    for (const auto& id : ids) {
        if (id == "constant") {
            out.push_back({id, [](const CanonicalPath&, double, double) { return 2.0; }, {}, true, 0.0, 0.0});
        } else if (id == "cos-time") {
            out.push_back({id, [](const CanonicalPath&, double s, double) { return std::cos(s); }, {}, true, 1.0, 0.0});
        } else if (id == "sin-X") {
            out.push_back({id,
                           [model, part](const CanonicalPath& p, double s, double) {
                               return std::sin(evaluate_X_left(p, model, part, s));
                           },
                           {}, true, 0.0, 1.0});
        } else if (id == "sin-WT") {
            out.push_back({id,
                           [horizon](const CanonicalPath& p, double s, double) {
                               return std::sin(p.brownian_at(horizon)) * (1.0 + s);
                           },
                           [](const CanonicalPath&, double, double) { return 0.0; }, false, 1.0, 0.0});
        } else {
            bad("unknown bridge field id '" + id + "'");
        }
    }
    return out;
}

std::vector<NamedField> energy_fields(double t, double horizon) {
    return {{"W_T", field_of(catalog::brownian_at(horizon), Shape::box({0.0, t}, ValueSet::zero()))},
            {"sin_W_half", field_of(catalog::sin_brownian(horizon / 2), Shape::box({horizon / 4, t}, ValueSet::zero()))},
            {"jump_sum_T", field_of(catalog::jump_sum(horizon), Shape::box({0.0, t}, ValueSet::nonzero()))},
            {"constant", field_of(catalog::constant(1.0), Shape::box({0.0, t / 2}, ValueSet::everything()))}};
}

// ---------------------------------------------------------------- recording

class Recorder {
public:
    Recorder(RunReport& report, std::string experiment) : report_(report), experiment_(std::move(experiment)) {}

    void info(const std::string& term, const std::string& statistic, double value, double se = 0.0) {
        report_.records.push_back({experiment_, term, statistic, value, se, 0.0, 0.0, Status::Info, ""});
    }

    /// |value - target| <= tolerance.
    void check(const std::string& term, const std::string& statistic, double value, double se, double target,
               double tolerance, const std::string& provenance, Status on_failure = Status::Fail) {
        const bool ok = std::abs(value - target) <= tolerance;
        report_.records.push_back({experiment_, term, statistic, value, se, target, tolerance,
                                   ok ? Status::Pass : on_failure, provenance});
    }

    /// value <= target + tolerance.
    void check_at_most(const std::string& term, const std::string& statistic, double value, double se,
                       double target, double tolerance, const std::string& provenance) {
        const bool ok = value <= target + tolerance;
        report_.records.push_back({experiment_, term, statistic, value, se, target, tolerance,
                                   ok ? Status::Pass : Status::Fail, provenance});
    }

    void warning(const std::string& w) { report_.warnings.push_back(experiment_ + ": " + w); }

    template <class Body>
    void timed(const std::string& phase, Body&& body) {
        const auto start = std::chrono::steady_clock::now();
        body();
        report_.timings.emplace_back(phase,
                                     std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
    }

    RunReport& report() { return report_; }

private:
    RunReport& report_;
    std::string experiment_;
};

std::string format_number(double x) {
    std::ostringstream os;
    os << x;
    return os.str();
}

// ---------------------------------------------------------------- kinds

void run_sample_paths(const ExperimentConfig& config, const RunOptions& opt, Recorder& rec) {
    const auto ens = config.ensemble();
    const LevyModel& model = ens.model();
    const double T = model.horizon();
    if (model.sigma() == 0.0 && model.nu().is_empty())
        rec.warning("trivial model: sigma = 0 and nu empty, every path is the deterministic line gamma t");
    std::vector<double> x(ens.size()), jumps(ens.size());
    rec.timed("sample", [&] {
        parallel_for(ens.size(), opt.workers, [&](std::size_t n) {
            const auto path = ens.path(n);
            x[n] = evaluate_X(path, model, ens.partition(), T);
            jumps[n] = static_cast<double>(path.jumps().size());
        });
    });
    const auto cells = jump_cells(model, ens.partition(), ValueSet::nonzero());
    double rate = 0.0, m2 = 0.0;
    for (const auto& c : cells) {
        rate += c.mass;
        m2 += c.m2;
    }
    const double mean_target = T * (model.gamma() + model.nu().signed_moment(big_jumps()));
    const double var_target = T * (model.sigma() * model.sigma() + m2);
    const SampleStats sx = sample_stats(x);
    rec.check("X_T", "mean", sx.mean, sx.std_error, mean_target, 4.0 * sx.std_error + 1e-12 * (1.0 + std::abs(mean_target)),
              "4 SE (Monte Carlo)");
    std::vector<double> sq(x.size());
    for (std::size_t n = 0; n < x.size(); ++n) sq[n] = (x[n] - mean_target) * (x[n] - mean_target);
    const SampleStats sv = sample_stats(sq);
    rec.check("X_T", "variance", sv.mean, sv.std_error, var_target, 4.0 * sv.std_error + 1e-12 * (1.0 + var_target),
              "4 SE (Monte Carlo)");
    const SampleStats sj = sample_stats(jumps);
    rec.info("jump_count", "mean", sj.mean, sj.std_error);
    rec.info("jump_count", "expected", T * rate);
    const auto dump = config.params().value("dump", 0);
    std::string lines;
    for (std::size_t n = 0; n < std::min<std::size_t>(static_cast<std::size_t>(dump), ens.size()); ++n)
        lines += dump_path(ens.path(n), n) + "\n";
    if (dump > 0) rec.report().artifacts.emplace_back(config.name() + ".paths.jsonl", lines);
}

void run_isometry(const ExperimentConfig& config, const RunOptions& opt, Recorder& rec) {
    const auto ens = config.ensemble();
    const auto kernels = kernel_catalog(ens.model().horizon());
    std::vector<std::vector<double>> values(kernels.size(), std::vector<double>(ens.size()));
    rec.timed("integrals", [&] {
        parallel_for(ens.size(), opt.workers, [&](std::size_t n) {
            const auto path = ens.path(n);
            for (std::size_t k = 0; k < kernels.size(); ++k)
                values[k][n] = multiple_integral(path, ens.model(), ens.partition(), kernels[k].kernel);
        });
    });
    for (const auto& [i, j] : kKernelPairs) {
        std::vector<double> prod(ens.size());
        for (std::size_t n = 0; n < ens.size(); ++n) prod[n] = values[i][n] * values[j][n];
        const SampleStats s = sample_stats(prod);
        const double target = isometry_analytic(ens.model(), ens.partition(), kernels[i].kernel, kernels[j].kernel);
        const std::string name = "I" + std::to_string(kernels[i].kernel.order()) + "(" + kernels[i].name + ")*I" +
                                 std::to_string(kernels[j].kernel.order()) + "(" + kernels[j].name + ")";
        rec.check(name, "mean", s.mean, s.std_error, target, 3.0 * s.std_error, "3 SE (Monte Carlo)");
    }
}

void run_duality(const ExperimentConfig& config, const RunOptions& opt, Recorder& rec) {
    const auto ens = config.ensemble();
    const LevyModel& model = ens.model();
    const ShellPartition& part = ens.partition();
    const double T = model.horizon();
    const auto fields = duality_fields(T);
    const auto functionals = duality_functionals(model, part);
    const std::size_t nu = fields.size(), nf = functionals.size();
    std::vector<std::vector<double>> delta(nu, std::vector<double>(ens.size()));
    std::vector<std::vector<double>> diff(nu * nf, std::vector<double>(ens.size()));
    std::vector<double> remainder(ens.size(), 0.0);
    rec.timed("duality", [&] {
        parallel_for(ens.size(), opt.workers, [&](std::size_t n) {
            const auto path = ens.path(n);
            std::vector<double> fvals(nf);
            for (std::size_t j = 0; j < nf; ++j) fvals[j] = functionals[j].f(path);
            for (std::size_t i = 0; i < nu; ++i) {
                const auto r = skorohod_simple(fields[i].u, path, model, part, T);
                delta[i][n] = r.value;
                remainder[n] = std::max(remainder[n], std::abs(r.remainder));
                for (std::size_t j = 0; j < nf; ++j) {
                    double pairing = 0.0;
                    for (const auto& t : fields[i].u.terms())
                        pairing += t.F(path) * integrate_against_D(functionals[j].f, path, model, part, t.h, T);
                    diff[i * nf + j][n] = r.value * fvals[j] - pairing;
                }
            }
        });
    });
    if (*std::max_element(remainder.begin(), remainder.end()) != 0.0)
        rec.warning("factorization depth cap reached; remainder reported per path is nonzero");
    for (std::size_t i = 0; i < nu; ++i) {
        const SampleStats s = sample_stats(delta[i]);
        rec.check("E[delta(" + fields[i].name + ")]", "mean", s.mean, s.std_error, 0.0, 3.0 * s.std_error,
                  "3 SE (Monte Carlo)");
        for (std::size_t j = 0; j < nf; ++j) {
            const SampleStats d = sample_stats(diff[i * nf + j]);
            rec.check("duality(" + fields[i].name + ";" + functionals[j].name + ")", "mean_difference", d.mean,
                      d.std_error, 0.0, 3.0 * d.std_error, "3 SE of paired differences (Monte Carlo)");
        }
    }
}

void run_psi_algebra(const ExperimentConfig& config, const RunOptions&, Recorder& rec) {
    const auto ens = config.ensemble();
    const int draws = config.params().at("draws").get<int>();
    const double ulps = config.params().at("ulps").get<double>();
    Philox4x32 rng(config.seed(), 0x5151);
    double worst = 0.0;
    int violations = 0;
    rec.timed("draws", [&] {
        for (int d = 0; d < draws; ++d) {
            const auto f = random_functional(rng, ens.model(), ens.partition(), ens.grid().cells());
            const auto g = random_functional(rng, ens.model(), ens.partition(), ens.grid().cells());
            const auto path = ens.path(static_cast<std::size_t>(d) % ens.size());
            const double t = ens.model().horizon() * (0.01 + 0.99 * rng.uniform_open());
            const double x = ((rng() & 1u) ? 1.0 : -1.0) * (0.05 + 1.95 * rng.uniform_open());
            const auto sides = psi_product_check(f, g, path, t, x);
            const double err = std::abs(sides.lhs - sides.rhs);
            const double ratio = err == 0.0 ? 0.0 : err / (kUlp * sides.scale);
            worst = std::max(worst, ratio);
            if (err > ulps * kUlp * sides.scale) ++violations;
        }
    });
    rec.check_at_most("psi_product_rule", "max_ulps", worst, 0.0, 0.0, ulps, "floating-point rounding (exact algebra)");
    rec.check("psi_product_rule", "violations", violations, 0.0, 0.0, 0.0, "exact count");
}

void run_gradient(const ExperimentConfig& config, const RunOptions&, Recorder& rec) {
    const auto ens = config.ensemble();
    const LevyModel& model = ens.model();
    const double T = model.horizon();
    const int per_path = config.params().at("times_per_path").get<int>();
    const double tol = config.params().at("relative_tolerance").get<double>();
    const auto functionals = gradient_functionals(model, ens.partition());
    const auto cells = jump_cells(model, ens.partition(), ValueSet::nonzero());
    Philox4x32 rng(config.seed(), 0x6767);
    rec.timed("gradients", [&] {
        for (const auto& [name, f] : functionals) {
            double worst = 0.0;
            int adapted_nonzero = 0, adapted_checked = 0;
            for (std::size_t n = 0; n < ens.size(); ++n) {
                const auto path = ens.path(n);
                for (int j = 0; j < per_path; ++j) {
                    const int k = static_cast<int>(rng() % static_cast<std::uint32_t>(ens.grid().cells()));
                    const double t = 0.5 * (ens.grid()[k] + ens.grid()[k + 1]);
                    const double a = brownian_derivative(f, path, t);
                    const double fd = brownian_derivative(f, path, t, FiniteDifference{});
                    worst = std::max(worst, std::abs(a - fd) / std::max(1.0, std::abs(a)));
                    if (f.adapted_up_to() && *f.adapted_up_to() < T) {
                        const double tau = *f.adapted_up_to();
                        const double s = tau + (T - tau) * rng.uniform_open();
                        const double x = cells.empty() ? 0.5 : cells[rng() % cells.size()].rep;
                        ++adapted_checked;
                        if (brownian_derivative(f, path, s) != 0.0 || psi(f, path, s, x) != 0.0) ++adapted_nonzero;
                    }
                }
            }
            rec.check_at_most("D_W(" + name + ")", "max_relative_fd_error", worst, 0.0, 0.0, tol,
                              "finite-difference truncation");
            if (adapted_checked > 0)
                rec.check("D_beyond_horizon(" + name + ")", "nonzero_count", adapted_nonzero, 0.0, 0.0, 0.0,
                          "exact (adapted functional)");
        }
    });
}

void run_energy(const ExperimentConfig& config, const RunOptions& opt, Recorder& rec) {
    const auto ens = config.ensemble();
    const LevyModel& model = ens.model();
    const double T = model.horizon(), sigma = model.sigma();
    const double t = config.params().at("t").get<double>();
    const double tol = config.params().at("closed_form_tolerance").get<double>();
    const auto u = field_of(catalog::brownian_at(T), Shape::box({0.0, t}, ValueSet::zero()));
    std::vector<double> err(ens.size()), sq(ens.size());
    rec.timed("closed_form", [&] {
        parallel_for(ens.size(), opt.workers, [&](std::size_t n) {
            const auto path = ens.path(n);
            const double d = skorohod_simple(u, path, model, ens.partition(), t).value;
            const double closed = sigma * (path.brownian_at(T) * path.brownian_at(t) - t);
            err[n] = std::abs(d - closed) / (1.0 + std::abs(closed));
            sq[n] = d * d;
        });
    });
    rec.check_at_most("delta(W_T 1_[0,t])", "max_relative_error_vs_closed_form",
                      *std::max_element(err.begin(), err.end()), 0.0, 0.0, tol, "algebraic identity, rounding only");
    const SampleStats s = sample_stats(sq);
    const double target = sigma * sigma * (t * T + t * t);
    rec.check("delta(W_T 1_[0,t])", "second_moment", s.mean, s.std_error, target, 3.0 * s.std_error,
              "3 SE (Monte Carlo)");
    rec.timed("energy_bound", [&] {
        for (const auto& [name, field] : energy_fields(t, T)) {
            const auto e = energy_bound_check(field, ens, opt.workers);
            rec.info("delta(" + name + ")", "second_moment", e.delta_sq, e.delta_sq_se);
            rec.info("delta(" + name + ")", "energy_bound", e.bound, e.bound_se);
            rec.check_at_most("energy(" + name + ")", "negative_margin", -e.margin, e.margin_se, 0.0,
                              3.0 * e.margin_se, "3 SE of paired margin (Monte Carlo)");
        }
    });
}

void run_bridge(const ExperimentConfig& config, const RunOptions& opt, Recorder& rec) {
    const auto ens = config.ensemble();
    const double t = config.params().at("t").get<double>();
    std::vector<std::string> ids = config.params().at("fields").get<std::vector<std::string>>();
    rec.timed("bridge", [&] {
        for (const auto& u : bridge_fields(ids, ens.model(), ens.partition())) {
            const auto r = pathwise_skorohod_bridge(u, ens, ValueSet::nonzero(), t, opt.workers);
            for (const auto& w : r.warnings) rec.warning(w);
            rec.info("bridge(" + u.name + ")", "mean_lhs", r.mean_lhs, r.lhs_se);
            rec.info("bridge(" + u.name + ")", "mean_residual", r.mean_residual, r.residual_se);
            rec.info("bridge(" + u.name + ")", "quadrature_bound", r.quadrature_bound);
            rec.check_at_most("bridge(" + u.name + ")", "mean_abs_residual", r.mean_abs_residual, r.abs_residual_se,
                              0.0, 3.0 * r.abs_residual_se + r.quadrature_bound, "3 SE + quadrature bound");
        }
    });
}

double ledger_epsilon(const ExperimentConfig& config) {
    return config.model().nu().is_empty() ? 1.0 : config.partition().floor();
}

void record_ledger(const ItoLedger& ledger, Recorder& rec, const std::string& prefix) {
    for (std::size_t c = 0; c < ledger.columns.size(); ++c)
        rec.info(prefix + ledger.columns[c], "mean", ledger.stats[c].mean, ledger.stats[c].std_error);
    rec.info(prefix + "residual", "rms", ledger.rms_residual);
    rec.info(prefix + "lhs", "rms", ledger.rms_lhs);
    for (const auto& w : ledger.warnings) rec.warning(w);
    if (ledger.hypotheses.empirical_mode)
        rec.check("hypotheses", "empirical_mode", 1.0, 0.0, 0.0, 0.0, "coefficient bounds not verified",
                  Status::Warn);
}

void run_ito(const ExperimentConfig& config, const RunOptions& opt, Recorder& rec) {
    const auto ens = config.ensemble();
    const json& p = config.params();
    const double T = ens.model().horizon(), t = p.at("t").get<double>();
    const YSpec spec = resolve_spec(p.at("spec").get<std::string>(), T);
    const TestFunction f = resolve_test_function(p.at("test_function").get<std::string>());
    LedgerOptions lo;
    lo.workers = opt.workers;
    if (p.contains("d_minus")) lo.d_minus_mode = resolve_d_minus(p.at("d_minus").get<std::string>());
    const double eps = ledger_epsilon(config);
    ItoLedger ledger;
    rec.timed("ledger", [&] { ledger = ito_ledger_general(spec, f, ens, eps, t, lo); });
    record_ledger(ledger, rec, "");
    const SampleStats& r = ledger.stat("residual");
    const double grid_tol = T / ens.grid().cells();
    rec.check("residual", "mean", r.mean, r.std_error, 0.0, 3.0 * r.std_error + grid_tol, "3 SE + T/M grid tolerance");
    if (!p.contains("refinement")) return;
    const auto cells = p.at("refinement").get<std::vector<int>>();
    RefinementStudy study;
    rec.timed("refinement", [&] {
        study = ito_refinement_study(spec, f, ens.model(), ens.partition(), config.seed(), ens.size(), cells, t, lo);
    });
    for (const auto& row : study.rows) {
        const std::string name = "refinement(M=" + std::to_string(row.cells) + ")";
        rec.info(name, "rms_residual", row.rms_residual);
        rec.info(name, "rms_lhs", row.rms_lhs);
        rec.info(name, "mean_residual", row.mean_residual, row.residual_se);
    }
    if (p.contains("order_range")) {
        const auto range = p.at("order_range").get<std::vector<double>>();
        const double mid = 0.5 * (range[0] + range[1]), half = 0.5 * (range[1] - range[0]);
        rec.check("refinement", "empirical_order", study.order, 0.0, mid, half, "fixed acceptance range");
    }
    if (p.contains("rms_ratio_max")) {
        const auto& finest = study.rows.back();
        rec.check_at_most("refinement(M=" + std::to_string(finest.cells) + ")", "rms_residual_over_rms_lhs",
                          finest.rms_residual / finest.rms_lhs, 0.0, 0.0, p.at("rms_ratio_max").get<double>(),
                          "fixed acceptance ratio");
    }
}

void run_ito_fv(const ExperimentConfig& config, const RunOptions& opt, Recorder& rec) {
    const auto ens = config.ensemble();
    const json& p = config.params();
    const double T = ens.model().horizon(), t = p.at("t").get<double>();
    const YSpec spec = resolve_spec(p.at("spec").get<std::string>(), T);
    const TestFunction f = resolve_test_function(p.at("test_function").get<std::string>());
    LedgerOptions lo;
    lo.workers = opt.workers;
    const double eps = ledger_epsilon(config);
    ItoLedger fv, general;
    rec.timed("ledger_fv", [&] { fv = ito_ledger_finite_variation(spec, f, ens, eps, t, lo); });
    rec.timed("ledger_general", [&] { general = ito_ledger_general(spec, f, ens, eps, t, lo); });
    record_ledger(fv, rec, "");
    const auto& res = fv.values("residual");
    if (fv.quadrature_bound.empty()) {
        rec.warning("no pathwise quadrature bound for this spec; per-path check skipped");
    } else {
        std::size_t within = 0;
        double worst = 0.0;
        for (std::size_t n = 0; n < res.size(); ++n) {
            if (std::abs(res[n]) <= fv.quadrature_bound[n]) ++within;
            if (fv.quadrature_bound[n] > 0.0) worst = std::max(worst, std::abs(res[n]) / fv.quadrature_bound[n]);
        }
        rec.info("residual", "max_ratio_to_bound", worst);
        rec.check("residual", "fraction_within_pathwise_bound", static_cast<double>(within) / res.size(), 0.0, 1.0,
                  0.0, "pathwise quadrature bound, every path");
    }
    double gap = 0.0, scale = 0.0;
    for (std::size_t n = 0; n < res.size(); ++n) {
        gap = std::max(gap, std::abs(fv.values("rhs")[n] - general.values("rhs")[n]));
        scale = std::max(scale, std::abs(fv.values("lhs")[n]));
    }
    rec.check_at_most("general_vs_finite_variation", "max_abs_rhs_difference", gap, 0.0, 0.0, 1e-9 * (1.0 + scale),
                      "rounding, 1e-9 relative");
}

void run_epsilon(const ExperimentConfig& config, const RunOptions& opt, Recorder& rec) {
    const auto ens = config.ensemble();
    const json& p = config.params();
    const double t = p.at("t").get<double>();
    const YSpec spec = resolve_spec(p.at("spec").get<std::string>(), ens.model().horizon());
    const auto schedule = p.at("schedule").get<std::vector<double>>();
    std::vector<EpsilonRow> rows;
    rec.timed("epsilon_study", [&] { rows = epsilon_convergence_study(spec, ens, schedule, t, opt.workers); });
    double smallest = kInf;
    if (ens.model().nu().is_discrete())
        for (const auto& a : ens.model().nu().atom_list()) smallest = std::min(smallest, std::abs(a.location));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        const std::string name = "eps=" + format_number(r.epsilon);
        rec.info(name, "l2_gap", r.gap, r.gap_se);
        if (i > 0)
            rec.check_at_most(name, "gap_increase", r.step, r.step_se, 0.0, 3.0 * r.step_se,
                              "3 SE of paired step (Monte Carlo)");
        if (r.epsilon < smallest)
            rec.check(name, "l2_gap_exact_zero", r.gap, r.gap_se, 0.0, 0.0, "exact (all atoms retained)");
    }
}

// ---------------------------------------------------------------- validation

void need_string(const json& p, const char* key) {
    if (!p.contains(key) || !p.at(key).is_string()) bad(std::string("params.") + key + " must be a string");
}

double need_number(const json& p, const char* key) {
    if (!p.contains(key) || !p.at(key).is_number()) bad(std::string("params.") + key + " must be a number");
    return p.at(key).get<double>();
}

void need_time(const json& p, const ExperimentConfig& config) {
    const double t = need_number(p, "t");
    if (!(t > 0.0 && t <= config.model().horizon())) bad("params.t must lie in (0, T]");
    if (!config.grid().node_of(t)) bad("params.t must be a grid node");
}

void check_ito_params(const json& p, const ExperimentConfig& config) {
    need_string(p, "spec");
    need_string(p, "test_function");
    need_time(p, config);
    const YSpec spec = resolve_spec(p.at("spec").get<std::string>(), config.model().horizon());
    const TestFunction f = resolve_test_function(p.at("test_function").get<std::string>());
    if (f.dim != static_cast<int>(spec.components.size()))
        bad("test function dimension does not match the Y spec");
    if (p.contains("d_minus")) {
        need_string(p, "d_minus");
        resolve_d_minus(p.at("d_minus").get<std::string>());
    }
    if (p.contains("refinement")) {
        const auto& r = p.at("refinement");
        if (!r.is_array() || r.size() < 2) bad("params.refinement must list at least two grids");
        for (const auto& m : r)
            if (!m.is_number_integer() || m.get<int>() <= 0) bad("params.refinement entries must be positive integers");
    }
    if (p.contains("order_range")) {
        const auto& r = p.at("order_range");
        if (!r.is_array() || r.size() != 2 || !r[0].is_number() || !r[1].is_number() ||
            r[0].get<double>() > r[1].get<double>())
            bad("params.order_range must be [lo, hi]");
    }
    if (p.contains("rms_ratio_max") && !(need_number(p, "rms_ratio_max") > 0.0))
        bad("params.rms_ratio_max must be positive");
}

}  // namespace

void validate_params(const std::string& kind, const json& p, const ExperimentConfig& config) {
    const LevyModel model = config.model();
    if (kind == "sample-paths") {
        if (p.contains("dump") && (!p.at("dump").is_number_integer() || p.at("dump").get<int>() < 0))
            bad("params.dump must be a non-negative integer");
    } else if (kind == "verify-isometry" || kind == "verify-duality") {
        need_string(p, "catalog");
        if (p.at("catalog") != "standard") bad("unknown catalog '" + p.at("catalog").get<std::string>() + "'");
    } else if (kind == "verify-psi-algebra") {
        if (!p.contains("draws") || !p.at("draws").is_number_integer() || p.at("draws").get<int>() <= 0)
            bad("params.draws must be a positive integer");
        if (!(need_number(p, "ulps") > 0.0)) bad("params.ulps must be positive");
    } else if (kind == "verify-gradient") {
        if (!p.contains("times_per_path") || !p.at("times_per_path").is_number_integer() ||
            p.at("times_per_path").get<int>() <= 0)
            bad("params.times_per_path must be a positive integer");
        if (!(need_number(p, "relative_tolerance") > 0.0)) bad("params.relative_tolerance must be positive");
    } else if (kind == "energy-check") {
        need_time(p, config);
        if (!(need_number(p, "closed_form_tolerance") > 0.0)) bad("params.closed_form_tolerance must be positive");
    } else if (kind == "bridge-check") {
        need_time(p, config);
        if (!p.contains("fields") || !p.at("fields").is_array() || p.at("fields").empty())
            bad("params.fields must be a non-empty array");
        for (const auto& id : p.at("fields"))
            if (!id.is_string()) bad("params.fields entries must be strings");
        bridge_fields(p.at("fields").get<std::vector<std::string>>(), model, config.partition());
    } else if (kind == "verify-ito") {
        check_ito_params(p, config);
    } else if (kind == "verify-ito-fv") {
        check_ito_params(p, config);
        const MomentResult first = nu_moment(model, ValueSet::nonzero(), 1);
        if (!first.finite || !std::isfinite(first.value))
            bad("verify-ito-fv needs a finite first absolute moment of nu");
    } else if (kind == "epsilon-study") {
        need_string(p, "spec");
        need_time(p, config);
        resolve_spec(p.at("spec").get<std::string>(), model.horizon());
        if (!p.contains("schedule") || !p.at("schedule").is_array() || p.at("schedule").empty())
            bad("params.schedule must be a non-empty array");
        const double floor = model.nu().is_empty() ? 0.0 : config.partition().floor();
        double previous = kInf;
        for (const auto& e : p.at("schedule")) {
            if (!e.is_number()) bad("params.schedule entries must be numbers");
            const double eps = e.get<double>();
            if (!(eps > 0.0 && eps <= 1.0) || eps < floor) bad("params.schedule entries must lie in [floor, 1]");
            if (!(eps < previous)) bad("params.schedule must be strictly decreasing");
            previous = eps;
        }
    }
}

void run_kind(const ExperimentConfig& config, const RunOptions& options, RunReport& report) {
    Recorder rec(report, config.name());
    const std::string kind = config.kind();
    if (kind == "sample-paths") return run_sample_paths(config, options, rec);
    if (kind == "verify-isometry") return run_isometry(config, options, rec);
    if (kind == "verify-duality") return run_duality(config, options, rec);
    if (kind == "verify-psi-algebra") return run_psi_algebra(config, options, rec);
    if (kind == "verify-gradient") return run_gradient(config, options, rec);
    if (kind == "energy-check") return run_energy(config, options, rec);
    if (kind == "bridge-check") return run_bridge(config, options, rec);
    if (kind == "verify-ito") return run_ito(config, options, rec);
    if (kind == "verify-ito-fv") return run_ito_fv(config, options, rec);
    if (kind == "epsilon-study") return run_epsilon(config, options, rec);
    bad("unknown experiment kind '" + kind + "'");
}

}  // namespace levycalc::detail
