#include "levycalc/ito.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>

#include "levycalc/errors.hpp"

namespace levycalc {

namespace test_functions {

TestFunction square() {
    SmoothHead h{"square", [](std::span<const double> y) { return y[0] * y[0]; },
                 [](std::span<const double> y, int) { return 2.0 * y[0]; },
                 [](std::span<const double>, int, int) { return 2.0; }, std::nullopt};
    return {std::move(h), 1, 2.0, false};
}

TestFunction sine() { return {heads::sine(), 1, 1.0, true}; }

TestFunction cosine() { return {heads::cosine(), 1, 1.0, true}; }

TestFunction trig_mix(int dim) {
    if (dim < 1) throw InvalidArgument("trig_mix: dimension must be positive");
    return {heads::trig_mix(dim), dim, 1.0, true};
}

}  // namespace test_functions

namespace {

constexpr TimeInterval kAlways{0.0, kInf};

SimpleRandomField::Term term(RandomFunctional f, Shape h) { return {std::move(f), std::move(h), std::nullopt}; }

SimpleRandomField constant_field(double c, ValueSet values, TimeInterval time = kAlways) {
    return SimpleRandomField({term(catalog::constant(c), Shape::box(time, std::move(values)))});
}

SimpleRandomField restrict_values(const SimpleRandomField& field, const ValueSet& values) {
    std::vector<SimpleRandomField::Term> terms;
    for (const auto& t : field.terms()) {
        Shape h = t.h.restricted(kAlways, values);
        if (h.values.empty()) continue;
        terms.push_back(term(t.F, std::move(h)));
    }
    return SimpleRandomField(std::move(terms));
}

std::vector<double> coefficient_values(const SimpleRandomField& field, const CanonicalPath& path) {
    std::vector<double> v(field.terms().size());
    for (std::size_t j = 0; j < v.size(); ++j) v[j] = field.terms()[j].F(path);
    return v;
}

double field_value(const SimpleRandomField& field, const std::vector<double>& fv, double t, double x) {
    double s = 0.0;
    for (std::size_t j = 0; j < fv.size(); ++j)
        if (fv[j] != 0.0) s += fv[j] * field.terms()[j].h(t, x);
    return s;
}

/// int_{box cap (0, t]} p for a shape.
double time_integral(const Shape& h, double t) {
    const TimeInterval box = intersect(h.time, TimeInterval{0.0, t});
    return box.length() > 0.0 ? h.p_integral(box.a, box.b) : 0.0;
}

bool all_gradients(const SimpleRandomField& field) {
    return std::all_of(field.terms().begin(), field.terms().end(),
                       [](const auto& t) { return t.F.has_gradient(); });
}

/// s -> D^W_s F as a functional of the path, with its own gradient when F has a Hessian.
RandomFunctional derivative_functional(const RandomFunctional& f, double s) {
    RandomFunctional::Spec spec;
    spec.name = "D_" + f.name();
    spec.eval = [f, s](const CanonicalPath& p) { return brownian_derivative(f, p, s); };
    if (f.brownian_blind()) {
        spec.brownian_blind = true;
        spec.jump_blind = true;
    } else if (f.has_hessian()) {
        spec.gradient = [f, s](const CanonicalPath& p, double t) { return f.hessian(p, t, s); };
    }
    spec.adapted_up_to = f.adapted_up_to();
    spec.breakpoints = f.breakpoints();
    spec.breakpoints.push_back(s);
    spec.jump_blind = spec.jump_blind || f.jump_blind();
    spec.jump_degree = spec.jump_blind ? std::optional<int>(0) : f.jump_degree();
    spec.left_limit_safe = f.left_limit_safe();
    return RandomFunctional(std::move(spec));
}

}  // namespace

namespace y_catalog {

YSpec brownian() {
    YComponent c;
    c.name = "W";
    c.y0 = catalog::constant(0.0);
    c.u = constant_field(1.0, ValueSet::zero());
    c.diffusion_closed_form = [](const CanonicalPath& p, double t) { return p.brownian_at(t); };
    c.diffusion_closed_gradient = [](const CanonicalPath&, double t, double s) { return s <= t ? 1.0 : 0.0; };
    c.d_minus_hook = [](const CanonicalPath&, double) { return 0.0; };
    return {"brownian", {std::move(c)}, true, 10.0};
}

YSpec small_jump_unit() {
    YComponent c;
    c.name = "small_jumps";
    c.y0 = catalog::constant(0.0);
    c.v_small = constant_field(1.0, ValueSet::nonzero());
    return {"small-jump-unit", {std::move(c)}, true, 10.0};
}

YSpec terminal_brownian(double horizon) {
    YComponent c;
    c.name = "int_W_T_dW";
    c.y0 = catalog::constant(0.0);
    c.u = SimpleRandomField({term(catalog::brownian_at(horizon), Shape::box(kAlways, ValueSet::zero()))});
    c.diffusion_closed_form = [horizon](const CanonicalPath& p, double t) {
        return p.brownian_at(horizon) * p.brownian_at(t) - t;
    };
    c.diffusion_closed_gradient = [horizon](const CanonicalPath& p, double t, double s) {
        return p.brownian_at(t) + (s <= t ? p.brownian_at(horizon) : 0.0);
    };
    c.d_minus_hook = [](const CanonicalPath& p, double s) { return p.brownian_at(s); };
    return {"terminal-brownian", {std::move(c)}, false, std::nullopt};
}

YSpec terminal_sine(double horizon) {
    YComponent c;
    c.name = "int_sin_W_T_dW";
    c.y0 = catalog::constant(0.0);
    c.u = SimpleRandomField({term(catalog::sin_brownian(horizon), Shape::box(kAlways, ValueSet::zero()))});
    c.diffusion_closed_form = [horizon](const CanonicalPath& p, double t) {
        const double w = p.brownian_at(horizon);
        return std::sin(w) * p.brownian_at(t) - t * std::cos(w);
    };
    c.diffusion_closed_gradient = [horizon](const CanonicalPath& p, double t, double s) {
        const double w = p.brownian_at(horizon);
        return std::cos(w) * p.brownian_at(t) + (s <= t ? std::sin(w) : 0.0) + t * std::sin(w);
    };
    c.d_minus_hook = [horizon](const CanonicalPath& p, double s) {
        const double w = p.brownian_at(horizon);
        return std::cos(w) * p.brownian_at(s) + s * std::sin(w);
    };
    return {"terminal-sine", {std::move(c)}, false, horizon};
}

YSpec adapted_mix() {
    YComponent a;
    a.name = "switched_diffusion";
    a.y0 = catalog::constant(0.5);
    a.u = SimpleRandomField({term(catalog::constant(1.0), Shape::box({0.0, 0.5}, ValueSet::zero())),
                             term(catalog::cos_brownian(0.5), Shape::box({0.5, kInf}, ValueSet::zero()))});
    a.drift = constant_field(0.3, ValueSet::zero());
    YComponent b;
    b.name = "jumps";
    b.y0 = catalog::constant(0.0);
    b.v_small = constant_field(0.5, ValueSet::nonzero());
    b.v_big = SimpleRandomField({term(catalog::sin_brownian(0.25), Shape::box({0.25, kInf}, ValueSet::nonzero()))});
    return {"adapted-mix", {std::move(a), std::move(b)}, true, 10.0};
}

}  // namespace y_catalog

YProcess::YProcess(YSpec spec, LevyModel model, ShellPartition partition, double epsilon)
    : spec_(std::move(spec)), model_(std::move(model)), partition_(std::move(partition)), epsilon_(epsilon) {
    if (spec_.components.empty()) throw InvalidArgument("YProcess: spec has no components");
    if (!(epsilon > 0.0 && epsilon <= 1.0)) throw InvalidArgument("YProcess: epsilon must lie in (0, 1]");
    if (!model_.nu().is_empty() && epsilon < partition_.floor())
        throw InvalidArgument("YProcess: epsilon below the truncation floor");
    small_gate_ = ValueSet::abs_range(epsilon, 1.0, true);
    big_gate_ = ValueSet::abs_range(1.0, kInf);
    small_cells_ = jump_cells(model_, partition_, small_gate_);
    gradient_available_ = true;
    for (const auto& c : spec_.components) {
        if (!c.y0.valid()) throw InvalidArgument("YProcess: component " + c.name + " has no initial value");
        Prepared p{restrict_values(c.u, ValueSet::zero()), restrict_values(c.drift, ValueSet::zero()),
                   restrict_values(c.v_big, big_gate_), restrict_values(c.v_small, small_gate_), {}};
        for (const auto& t : p.v_small.terms()) {
            double m1 = 0.0;
            for (const auto& cell : jump_cells(model_, partition_, t.h.values)) m1 += cell.m1;
            p.small_m1.push_back(m1);
        }
        if (!p.u_slice.terms().empty() && model_.sigma() == 0.0 && !c.diffusion_closed_form)
            throw InvalidArgument("YProcess: diffusion coefficient given but sigma = 0");
        const bool u_blind = std::all_of(p.u_slice.terms().begin(), p.u_slice.terms().end(),
                                         [](const auto& t) { return t.F.brownian_blind(); });
        const bool u_ok = p.u_slice.terms().empty() || static_cast<bool>(c.diffusion_closed_gradient) || u_blind;
        gradient_available_ = gradient_available_ && u_ok && c.y0.has_gradient() && all_gradients(p.u_slice) &&
                              all_gradients(p.drift_slice) && all_gradients(p.v_big) && all_gradients(p.v_small);
        prepared_.push_back(std::move(p));
    }
}

double YProcess::diffusion(const YComponent& c, const Prepared& p, const CanonicalPath& path, double t) const {
    if (c.diffusion_closed_form) return c.diffusion_closed_form(path, t);
    if (p.u_slice.terms().empty()) return 0.0;
    return skorohod_simple(p.u_slice, path, model_, partition_, t).value / model_.sigma();
}

std::vector<double> YProcess::at(const CanonicalPath& path, double t, bool left) const {
    std::vector<double> y(prepared_.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
        const YComponent& c = spec_.components[i];
        const Prepared& p = prepared_[i];
        double v = c.y0(path) + diffusion(c, p, path, t);
        const auto fd = coefficient_values(p.drift_slice, path);
        for (std::size_t j = 0; j < fd.size(); ++j) v += fd[j] * time_integral(p.drift_slice.terms()[j].h, t);
        const auto fb = coefficient_values(p.v_big, path);
        const auto fs = coefficient_values(p.v_small, path);
        for (const auto& jump : path.jumps()) {
            if (jump.time > t || (left && jump.time == t)) break;
            if (big_gate_.contains(jump.size)) v += field_value(p.v_big, fb, jump.time, jump.size) * jump.size;
            if (small_gate_.contains(jump.size))
                v += field_value(p.v_small, fs, jump.time, jump.size) * jump.size;
        }
        for (std::size_t j = 0; j < fs.size(); ++j)
            v -= fs[j] * p.small_m1[j] * time_integral(p.v_small.terms()[j].h, t);
        y[i] = v;
    }
    return y;
}

std::vector<std::vector<double>> YProcess::on_grid(const CanonicalPath& path, int last_node) const {
    const TimeGrid& grid = path.grid();
    if (last_node < 0 || last_node > grid.cells()) throw InvalidArgument("YProcess::on_grid: node out of range");
    std::vector<std::vector<double>> out(last_node + 1, std::vector<double>(prepared_.size()));
    for (std::size_t i = 0; i < prepared_.size(); ++i) {
        const YComponent& c = spec_.components[i];
        const Prepared& p = prepared_[i];
        const double y0 = c.y0(path);
        // Diffusion part: closed form per node, or the factorized integral accumulated cell by cell.
        std::vector<double> diff(last_node + 1, 0.0);
        if (c.diffusion_closed_form) {
            for (int k = 0; k <= last_node; ++k) diff[k] = c.diffusion_closed_form(path, grid[k]);
        } else if (!p.u_slice.terms().empty()) {
            for (const auto& term : p.u_slice.terms()) {
                const double f = term.F(path);
                double acc = 0.0;
                for (int k = 0; k < last_node; ++k) {
                    const Shape cell = term.h.restricted({grid[k], grid[k + 1]}, ValueSet::everything());
                    if (cell.time.length() > 0.0)
                        acc += f * first_chaos_integral(path, model_, partition_, cell, grid.horizon()) -
                               integrate_against_D(term.F, path, model_, partition_, cell, grid.horizon());
                    diff[k + 1] += acc / model_.sigma();
                }
            }
        }
        const auto fd = coefficient_values(p.drift_slice, path);
        const auto fb = coefficient_values(p.v_big, path);
        const auto fs = coefficient_values(p.v_small, path);
        double jumps = 0.0;
        auto it = path.jumps().begin();
        for (int k = 0; k <= last_node; ++k) {
            const double t = grid[k];
            for (; it != path.jumps().end() && it->time <= t; ++it) {
                if (big_gate_.contains(it->size)) jumps += field_value(p.v_big, fb, it->time, it->size) * it->size;
                if (small_gate_.contains(it->size))
                    jumps += field_value(p.v_small, fs, it->time, it->size) * it->size;
            }
            double v = y0 + diff[k] + jumps;
            for (std::size_t j = 0; j < fd.size(); ++j) v += fd[j] * time_integral(p.drift_slice.terms()[j].h, t);
            for (std::size_t j = 0; j < fs.size(); ++j)
                v -= fs[j] * p.small_m1[j] * time_integral(p.v_small.terms()[j].h, t);
            out[k][i] = v;
        }
    }
    return out;
}

std::optional<std::vector<double>> YProcess::brownian_gradient(const CanonicalPath& path, double t, double s) const {
    if (!gradient_available_) return std::nullopt;
    std::vector<double> g(prepared_.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        const YComponent& c = spec_.components[i];
        const Prepared& p = prepared_[i];
        double v = c.y0.gradient(path, s);
        if (c.diffusion_closed_gradient) {
            v += c.diffusion_closed_gradient(path, t, s);
        } else if (s <= t) {
            v += field_value(p.u_slice, coefficient_values(p.u_slice, path), s, 0.0);
        }
        for (const auto& term : p.drift_slice.terms()) v += term.F.gradient(path, s) * time_integral(term.h, t);
        std::vector<double> gb, gs;
        for (const auto& term : p.v_big.terms()) gb.push_back(term.F.gradient(path, s));
        for (const auto& term : p.v_small.terms()) gs.push_back(term.F.gradient(path, s));
        for (const auto& jump : path.jumps()) {
            if (jump.time > t) break;
            if (big_gate_.contains(jump.size)) v += field_value(p.v_big, gb, jump.time, jump.size) * jump.size;
            if (small_gate_.contains(jump.size)) v += field_value(p.v_small, gs, jump.time, jump.size) * jump.size;
        }
        for (std::size_t j = 0; j < gs.size(); ++j)
            v -= gs[j] * p.small_m1[j] * time_integral(p.v_small.terms()[j].h, t);
        g[i] = v;
    }
    return g;
}

YProcess::Snapshot YProcess::snapshot(const CanonicalPath& path) const {
    Snapshot s;
    for (const auto& p : prepared_) {
        s.u.push_back(coefficient_values(p.u_slice, path));
        s.drift.push_back(coefficient_values(p.drift_slice, path));
        s.big.push_back(coefficient_values(p.v_big, path));
        s.small.push_back(coefficient_values(p.v_small, path));
    }
    return s;
}

void YProcess::u_at(const Snapshot& s, double t, std::span<double> out) const {
    for (std::size_t i = 0; i < prepared_.size(); ++i) out[i] = field_value(prepared_[i].u_slice, s.u[i], t, 0.0);
}

void YProcess::drift_at(const Snapshot& s, double t, std::span<double> out) const {
    for (std::size_t i = 0; i < prepared_.size(); ++i)
        out[i] = field_value(prepared_[i].drift_slice, s.drift[i], t, 0.0);
}

void YProcess::v_at(const Snapshot& s, double t, double x, std::span<double> out) const {
    const bool big = big_gate_.contains(x);
    for (std::size_t i = 0; i < prepared_.size(); ++i)
        out[i] = big ? field_value(prepared_[i].v_big, s.big[i], t, x)
                     : field_value(prepared_[i].v_small, s.small[i], t, x);
}

std::vector<double> YProcess::u_at(const Snapshot& s, double t) const {
    std::vector<double> u(prepared_.size());
    u_at(s, t, u);
    return u;
}

std::vector<double> YProcess::drift_at(const Snapshot& s, double t) const {
    std::vector<double> d(prepared_.size());
    drift_at(s, t, d);
    return d;
}

std::vector<double> YProcess::v_at(const Snapshot& s, double t, double x) const {
    std::vector<double> v(prepared_.size());
    v_at(s, t, x, v);
    return v;
}

std::vector<double> YProcess::u_gradient(const CanonicalPath& path, double t, double s) const {
    std::vector<double> g(prepared_.size(), 0.0);
    for (std::size_t i = 0; i < g.size(); ++i)
        for (const auto& term : prepared_[i].u_slice.terms())
            if (const double h = term.h(t, 0.0); h != 0.0) g[i] += term.F.gradient(path, s) * h;
    return g;
}

bool YProcess::has_diffusion() const {
    return std::any_of(prepared_.begin(), prepared_.end(), [](const auto& p) { return !p.u_slice.terms().empty(); });
}

bool YProcess::has_small_jumps() const {
    return std::any_of(prepared_.begin(), prepared_.end(), [](const auto& p) { return !p.v_small.terms().empty(); });
}

bool YProcess::box_shapes() const {
    auto boxes = [](const SimpleRandomField& f) {
        return std::all_of(f.terms().begin(), f.terms().end(), [](const auto& t) { return t.h.is_box(); });
    };
    return std::all_of(prepared_.begin(), prepared_.end(), [&](const auto& p) {
        return boxes(p.u_slice) && boxes(p.drift_slice) && boxes(p.v_big) && boxes(p.v_small);
    });
}

std::vector<double> YProcess::d_minus(const CanonicalPath& path, double s, DMinusMode mode) const {
    const std::size_t n = prepared_.size();
    if (mode == DMinusMode::AdaptedZero) {
        if (!spec_.adapted) throw UnsupportedOperation("d_minus_Y: spec " + spec_.name + " is not adapted");
        return std::vector<double>(n, 0.0);
    }
    if (mode == DMinusMode::Numeric) {
        // Finite difference of Y_r, r the grid node at or below s, in the increments of the cell after r.
        const TimeGrid& grid = path.grid();
        int m = grid.node_of(s) ? *grid.node_of(s) : grid.cell_of(s);
        m = std::min(m, grid.cells() - 1);
        const double r = grid[m], direction = 0.5 * (grid[m] + grid[m + 1]);
        std::vector<double> out(n);
        for (std::size_t i = 0; i < n; ++i) {
            RandomFunctional::Spec f;
            f.name = "Y_r";
            f.eval = [this, r, i](const CanonicalPath& p) { return at(p, r)[i]; };
            out[i] = brownian_derivative(RandomFunctional(std::move(f)), path, direction, FiniteDifference{});
        }
        return out;
    }
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const YComponent& c = spec_.components[i];
        const Prepared& p = prepared_[i];
        if (c.d_minus_hook) {
            out[i] = c.d_minus_hook(path, s);
            continue;
        }
        // D_s of each part of Y restricted to times before s, Brownian convention.
        double v = brownian_derivative(c.y0, path, s);
        if (!p.u_slice.terms().empty()) {
            std::vector<SimpleRandomField::Term> terms;
            for (const auto& t : p.u_slice.terms()) terms.push_back(term(derivative_functional(t.F, s), t.h));
            v += skorohod_simple(SimpleRandomField(std::move(terms)), path, model_, partition_, s).value /
                 model_.sigma();
        }
        for (const auto& t : p.drift_slice.terms()) v += brownian_derivative(t.F, path, s) * time_integral(t.h, s);
        std::vector<double> db, ds;
        for (const auto& t : p.v_big.terms()) db.push_back(brownian_derivative(t.F, path, s));
        for (const auto& t : p.v_small.terms()) ds.push_back(brownian_derivative(t.F, path, s));
        for (const auto& jump : path.jumps()) {
            if (jump.time >= s) break;
            if (big_gate_.contains(jump.size)) v += field_value(p.v_big, db, jump.time, jump.size) * jump.size;
            if (small_gate_.contains(jump.size)) v += field_value(p.v_small, ds, jump.time, jump.size) * jump.size;
        }
        for (std::size_t j = 0; j < ds.size(); ++j)
            v -= ds[j] * p.small_m1[j] * time_integral(p.v_small.terms()[j].h, s);
        out[i] = v;
    }
    return out;
}

std::vector<double> build_Y_epsilon(const YSpec& spec, const CanonicalPath& path, const LevyModel& model,
                                    const ShellPartition& partition, double epsilon, double t) {
    return YProcess(spec, model, partition, epsilon).at(path, t);
}

std::vector<double> d_minus_Y(const YSpec& spec, const CanonicalPath& path, const LevyModel& model,
                              const ShellPartition& partition, double s, DMinusMode mode) {
    const double eps = model.nu().is_empty() ? 1.0 : partition.floor();
    return YProcess(spec, model, partition, eps).d_minus(path, s, mode);
}

HypothesisReport check_hypotheses(const YSpec& spec, const PathEnsemble& ensemble, std::size_t sample) {
    HypothesisReport r;
    if (!spec.bound) {
        r.empirical_mode = true;
        r.warnings.push_back(spec.name + ": no bound tag M; running in empirical mode");
        return r;
    }
    const double m = *spec.bound;
    const double eps = ensemble.model().nu().is_empty() ? 1.0 : ensemble.partition().floor();
    const YProcess y(spec, ensemble.model(), ensemble.partition(), eps);
    const TimeGrid& grid = ensemble.grid();
    const auto cells = jump_cells(ensemble.model(), ensemble.partition(), ValueSet::nonzero());
    for (std::size_t n = 0; n < std::min(sample, ensemble.size()); ++n) {
        const auto path = ensemble.path(n);
        std::vector<double> u2(y.dim(), 0.0), d2(y.dim(), 0.0);
        double vmax = 0.0;
        for (int k = 0; k < grid.cells(); ++k) {
            const double mid = 0.5 * (grid[k] + grid[k + 1]);
            const auto u = y.u_at(path, mid);
            const auto d = y.drift_at(path, mid);
            for (int i = 0; i < y.dim(); ++i) {
                u2[i] += u[i] * u[i] * grid.spacing(k);
                d2[i] += d[i] * d[i] * grid.spacing(k);
            }
            for (const auto& c : cells)
                for (double v : y.v_at(path, mid, c.rep)) vmax = std::max(vmax, std::abs(v));
        }
        for (int i = 0; i < y.dim(); ++i)
            if (u2[i] > m || d2[i] > m) r.empirical_mode = true;
        if (vmax >= m) r.empirical_mode = true;
    }
    if (r.empirical_mode) r.warnings.push_back(spec.name + ": sampled coefficients exceed the bound tag M");
    return r;
}

namespace {

bool in_cell(const JumpCell& c, double x) { return c.is_atom() ? x == c.lo : (x > c.lo && x <= c.hi); }

struct PathTerms {
    double lhs = 0.0;
    double delta_diffusion = 0.0;
    double jump_pathwise = 0.0;  // sum of dF(Y_{s-}) dY minus the left-point compensator
    double jump_dminus = 0.0;    // int int D^- of dF(Y) v dmu, via shifted paths
    double quadratic = 0.0;
    double drift = 0.0;
    double dminus_y = 0.0;
    double small = 0.0;
    double big = 0.0;
    double jump_sum = 0.0;
    double compensator = 0.0;
    double delta_cells = 0.0;
    double bound = 0.0;
};

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

void gradient_into(const TestFunction& f, std::span<const double> y, std::vector<double>& out) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = f.head.partial(y, static_cast<int>(i));
}

std::vector<double> gradient_of(const TestFunction& f, std::span<const double> y) {
    std::vector<double> g(y.size());
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = f.head.partial(y, static_cast<int>(i));
    return g;
}

/// delta(G 1_{(t0,t1] x {0}}) / sigma with G = sum_i d_iF(Y_{t0}) u_i(mid).
double cell_skorohod(const YProcess& Y, const TestFunction& f, const CanonicalPath& path, double t0, double t1) {
    const double mid = 0.5 * (t0 + t1);
    RandomFunctional::Spec g;
    g.name = "ito_cell";
    g.eval = [&Y, &f, t0, mid](const CanonicalPath& p) {
        const auto y = Y.at(p, t0);
        return dot(gradient_of(f, y), Y.u_at(p, mid));
    };
    if (Y.has_brownian_gradient()) {
        g.gradient = [&Y, &f, t0, mid](const CanonicalPath& p, double s) {
            const auto y = Y.at(p, t0);
            const auto dy = *Y.brownian_gradient(p, t0, s);
            const auto u = Y.u_at(p, mid);
            const auto du = Y.u_gradient(p, mid, s);
            double v = 0.0;
            for (std::size_t i = 0; i < y.size(); ++i) {
                double di = 0.0;
                for (std::size_t j = 0; j < y.size(); ++j)
                    di += f.head.second_partial(y, static_cast<int>(i), static_cast<int>(j)) * dy[j];
                v += di * u[i] + f.head.partial(y, static_cast<int>(i)) * du[i];
            }
            return v;
        };
    }
    const SimpleRandomField field({term(RandomFunctional(std::move(g)), Shape::box({t0, t1}, ValueSet::zero()))});
    return skorohod_simple(field, path, Y.model(), Y.partition(), path.grid().horizon()).value / Y.model().sigma();
}

/// Same value as cell_skorohod when Y has an exact gradient: D^W G is constant on the cell.
double cell_skorohod_direct(const YProcess& Y, const TestFunction& f, const CanonicalPath& path,
                            const YProcess::Snapshot& snap, const std::vector<double>& y, double t0, double t1) {
    const double mid = 0.5 * (t0 + t1);
    const auto u = Y.u_at(snap, mid);
    const auto dy = *Y.brownian_gradient(path, t0, mid);
    const auto du = Y.u_gradient(path, mid, mid);
    double g = 0.0, dg = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double fi = f.head.partial(y, static_cast<int>(i));
        double di = 0.0;
        for (std::size_t j = 0; j < y.size(); ++j)
            di += f.head.second_partial(y, static_cast<int>(i), static_cast<int>(j)) * dy[j];
        g += fi * u[i];
        dg += di * u[i] + fi * du[i];
    }
    return g * (path.brownian_at(t1) - path.brownian_at(t0)) - dg * (t1 - t0);
}

PathTerms evaluate_path(const YProcess& Y, const TestFunction& f, const CanonicalPath& path, int last,
                        DMinusMode mode, bool want_bound) {
    const int n = Y.dim();
    const TimeGrid& grid = path.grid();
    const bool adapted = Y.spec().adapted;
    const bool diffusion = Y.has_diffusion();
    const auto& cells = Y.small_cells();
    const auto nodes = Y.on_grid(path, last);
    const auto snap = Y.snapshot(path);
    const auto w = path.brownian();
    std::vector<double> grad(n), u(n), sig(n), vcell(n);
    const double t = grid[last];
    const double L = f.second_bound.value_or(0.0);
    PathTerms r;
    r.lhs = f.head.value(nodes[last]) - f.head.value(nodes[0]);

    std::vector<std::vector<double>> w_cell(Y.has_small_jumps() ? last : 0, std::vector<double>(cells.size(), 0.0));
    std::vector<double> kap(n);
    std::vector<std::vector<double>> kappa(last), beta(last), sig_cell(last);
    for (int k = 0; k < last; ++k) {
        const double t0 = grid[k], t1 = grid[k + 1], dt = t1 - t0, mid = 0.5 * (t0 + t1);
        const auto& y = nodes[k];
        gradient_into(f, y, grad);
        Y.drift_at(snap, mid, sig);
        r.drift += dot(grad, sig) * dt;
        if (diffusion) {
            Y.u_at(snap, mid, u);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) r.quadratic += 0.5 * f.head.second_partial(y, i, j) * u[i] * u[j] * dt;
            if (adapted)
                r.delta_diffusion += dot(grad, u) * (w[k + 1] - w[k]);
            else if (Y.has_brownian_gradient())
                r.delta_diffusion += cell_skorohod_direct(Y, f, path, snap, y, t0, t1);
            else
                r.delta_diffusion += cell_skorohod(Y, f, path, t0, t1);
            if (mode != DMinusMode::AdaptedZero) {
                const auto d = Y.d_minus(path, t0, mode);
                for (int i = 0; i < n; ++i)
                    for (int j = 0; j < n; ++j) r.dminus_y += f.head.second_partial(y, i, j) * d[j] * u[i] * dt;
            }
        }
        std::fill(kap.begin(), kap.end(), 0.0);
        if (Y.has_small_jumps()) {
            for (std::size_t c = 0; c < cells.size(); ++c) {
                Y.v_at(snap, mid, cells[c].rep, vcell);
                for (int i = 0; i < n; ++i) kap[i] += vcell[i] * cells[c].m1;
                const double wc = dot(grad, vcell);
                w_cell[k][c] = wc;
                r.jump_pathwise -= wc * cells[c].m1 * dt;
                r.compensator -= wc * cells[c].m1 * dt;
                r.delta_cells -= wc * cells[c].m1 * dt;
                if (!adapted) {
                    const auto shifted = add_jump(path, mid, cells[c].rep, &Y.partition());
                    const double ws = dot(gradient_of(f, Y.at(shifted, t0)), Y.v_at(shifted, mid, cells[c].rep));
                    const double dw = (ws - wc) / cells[c].rep;
                    r.jump_dminus += dw * cells[c].m2 * dt;
                    r.delta_cells -= dw * cells[c].m2 * dt;
                }
            }
        }
        if (want_bound) {
            kappa[k] = kap;
            beta[k].resize(n);
            for (int i = 0; i < n; ++i) beta[k][i] = sig[i] - kap[i];
            sig_cell[k] = sig;
        }
    }

    std::vector<std::vector<double>> jump_abs(want_bound ? last : 0, std::vector<double>(n, 0.0));
    for (const auto& jump : path.jumps()) {
        if (jump.time > t) break;
        const bool big = Y.big_gate().contains(jump.size);
        if (!big && !Y.small_gate().contains(jump.size)) continue;
        const auto yl = Y.at(path, jump.time, true);
        const auto v = Y.v_at(snap, jump.time, jump.size);
        std::vector<double> yn(yl);
        for (int i = 0; i < n; ++i) yn[i] += v[i] * jump.size;
        const double diff = f.head.value(yn) - f.head.value(yl);
        r.jump_sum += diff;
        if (big) {
            r.big += diff;
        } else {
            const double lin = dot(gradient_of(f, yl), v) * jump.size;
            r.small += diff - lin;
            r.jump_pathwise += lin;
        }
        const int k = grid.cell_of(jump.time);
        if (!big && !w_cell.empty())
            for (std::size_t c = 0; c < cells.size(); ++c)
                if (in_cell(cells[c], jump.size)) r.delta_cells += w_cell[k][c] * jump.size;
        if (want_bound)
            for (int i = 0; i < n; ++i) jump_abs[k][i] += std::abs(v[i] * jump.size);
    }

    if (want_bound) {
        for (int k = 0; k < last; ++k) {
            const double dt = grid.spacing(k);
            double inner = 0.0;
            for (int j = 0; j < n; ++j) inner += std::abs(beta[k][j]) * dt * dt / 2.0 + dt * jump_abs[k][j];
            for (int i = 0; i < n; ++i) r.bound += (std::abs(kappa[k][i]) + std::abs(sig_cell[k][i])) * L * inner;
        }
    }
    return r;
}

const std::vector<std::string> kGeneralTerms{"delta_diffusion", "delta_jump",    "quadratic", "drift",
                                             "dminus_diffusion", "dminus_jump", "small_jumps", "big_jumps"};
const std::vector<std::string> kFiniteVariationTerms{"delta_diffusion", "drift",         "compensator",
                                                     "quadratic",       "dminus_diffusion", "jump_sum"};

std::vector<double> term_values(const PathTerms& p, LedgerForm form) {
    if (form == LedgerForm::General)
        return {p.delta_diffusion, p.jump_pathwise - p.jump_dminus, p.quadratic, p.drift, p.dminus_y,
                p.jump_dminus,     p.small,                          p.big};
    return {p.delta_diffusion, p.drift, p.compensator, p.quadratic, p.dminus_y, p.jump_sum};
}

ItoLedger run_ledger(LedgerForm form, const YSpec& spec, const TestFunction& f, const PathEnsemble& ensemble,
                     double epsilon, double t, const LedgerOptions& options) {
    const TimeGrid& grid = ensemble.grid();
    const auto node = grid.node_of(t);
    if (!node) throw InvalidArgument("ito ledger: t must be a grid node");
    if (f.dim != static_cast<int>(spec.components.size()))
        throw InvalidArgument("ito ledger: test function dimension does not match the Y dimension");
    const YProcess Y(spec, ensemble.model(), ensemble.partition(), epsilon);
    const DMinusMode mode = options.d_minus_mode.value_or(spec.adapted ? DMinusMode::AdaptedZero : DMinusMode::Analytic);

    ItoLedger out;
    out.spec = spec.name;
    out.test_function = f.head.name;
    out.form = form;
    out.t = t;
    out.epsilon = epsilon;
    const bool want_bound = form == LedgerForm::FiniteVariation && !Y.has_diffusion() && Y.box_shapes() &&
                            f.second_bound.has_value();
    const auto& terms = ledger_terms(form);
    out.columns = {"lhs"};
    out.columns.insert(out.columns.end(), terms.begin(), terms.end());
    out.columns.insert(out.columns.end(), {"rhs", "residual"});
    if (form == LedgerForm::General) out.columns.push_back("jump_delta_cells");
    const std::size_t paths = ensemble.size();
    out.samples.assign(out.columns.size(), std::vector<double>(paths, 0.0));
    if (want_bound) out.quadrature_bound.assign(paths, 0.0);

    parallel_for(paths, options.workers, [&](std::size_t n) {
        const auto path = ensemble.path(n);
        const PathTerms p = evaluate_path(Y, f, path, *node, mode, want_bound);
        const auto values = term_values(p, form);
        double rhs = 0.0;
        for (double v : values) rhs += v;
        std::size_t col = 0;
        out.samples[col++][n] = p.lhs;
        for (double v : values) out.samples[col++][n] = v;
        out.samples[col++][n] = rhs;
        out.samples[col++][n] = p.lhs - rhs;
        if (form == LedgerForm::General) out.samples[col][n] = p.delta_cells;
        if (want_bound) {
            double scale = std::abs(p.lhs);
            for (double v : values) scale += std::abs(v);
            out.quadrature_bound[n] = p.bound + 1e-12 * (1.0 + scale);
        }
    });

    for (const auto& col : out.samples) out.stats.push_back(sample_stats(col));
    double rr = 0.0, rl = 0.0;
    for (std::size_t n = 0; n < paths; ++n) {
        rr += out.values("residual")[n] * out.values("residual")[n];
        rl += out.values("lhs")[n] * out.values("lhs")[n];
    }
    out.rms_residual = std::sqrt(rr / static_cast<double>(std::max<std::size_t>(paths, 1)));
    out.rms_lhs = std::sqrt(rl / static_cast<double>(std::max<std::size_t>(paths, 1)));
    out.hypotheses = check_hypotheses(spec, ensemble);
    out.warnings = out.hypotheses.warnings;
    if (!f.bounded) {
        out.hypotheses.empirical_mode = true;
        out.warnings.push_back(f.head.name + ": test function not bounded; empirical mode");
    }
    return out;
}

}  // namespace

std::size_t ItoLedger::column(const std::string& name) const {
    const auto it = std::find(columns.begin(), columns.end(), name);
    if (it == columns.end()) throw InvalidArgument("ItoLedger: no column " + name);
    return static_cast<std::size_t>(it - columns.begin());
}

const std::vector<std::string>& ledger_terms(LedgerForm form) {
    return form == LedgerForm::General ? kGeneralTerms : kFiniteVariationTerms;
}

ItoLedger ito_ledger_general(const YSpec& spec, const TestFunction& f, const PathEnsemble& ensemble, double epsilon,
                             double t, const LedgerOptions& options) {
    return run_ledger(LedgerForm::General, spec, f, ensemble, epsilon, t, options);
}

ItoLedger ito_ledger_finite_variation(const YSpec& spec, const TestFunction& f, const PathEnsemble& ensemble,
                                      double epsilon, double t, const LedgerOptions& options) {
    const MomentResult first = nu_moment(ensemble.model(), ValueSet::nonzero(), 1);
    if (!first.finite || !std::isfinite(first.value))
        throw UnsupportedOperation("finite-variation ledger refused: nu has no finite first absolute moment");
    return run_ledger(LedgerForm::FiniteVariation, spec, f, ensemble, epsilon, t, options);
}

std::vector<EpsilonRow> epsilon_convergence_study(const YSpec& spec, const PathEnsemble& ensemble,
                                                  const std::vector<double>& schedule, double t, unsigned workers) {
    if (schedule.empty()) throw InvalidArgument("epsilon study: empty schedule");
    if (!std::is_sorted(schedule.rbegin(), schedule.rend()))
        throw InvalidArgument("epsilon study: schedule must be decreasing");
    const double floor = ensemble.model().nu().is_empty() ? schedule.back() : ensemble.partition().floor();
    const YProcess reference(spec, ensemble.model(), ensemble.partition(), floor);
    std::vector<YProcess> processes;
    for (double eps : schedule) processes.emplace_back(spec, ensemble.model(), ensemble.partition(), eps);
    const std::size_t paths = ensemble.size();
    std::vector<std::vector<double>> gaps(schedule.size(), std::vector<double>(paths, 0.0));
    parallel_for(paths, workers, [&](std::size_t n) {
        const auto path = ensemble.path(n);
        const auto ref = reference.at(path, t);
        for (std::size_t e = 0; e < processes.size(); ++e) {
            const auto y = processes[e].at(path, t);
            double g = 0.0;
            for (std::size_t i = 0; i < y.size(); ++i) g += (y[i] - ref[i]) * (y[i] - ref[i]);
            gaps[e][n] = g;
        }
    });
    std::vector<EpsilonRow> rows;
    for (std::size_t e = 0; e < schedule.size(); ++e) {
        EpsilonRow row;
        row.epsilon = schedule[e];
        const SampleStats s = sample_stats(gaps[e]);
        row.gap = s.mean;
        row.gap_se = s.std_error;
        row.exact_zero = std::all_of(gaps[e].begin(), gaps[e].end(), [](double g) { return g == 0.0; });
        if (e > 0) {
            std::vector<double> d(paths);
            for (std::size_t n = 0; n < paths; ++n) d[n] = gaps[e][n] - gaps[e - 1][n];
            const SampleStats ds = sample_stats(d);
            row.step = ds.mean;
            row.step_se = ds.std_error;
            row.monotone = row.step <= 3.0 * row.step_se;
        }
        rows.push_back(row);
    }
    return rows;
}

RefinementStudy ito_refinement_study(const YSpec& spec, const TestFunction& f, const LevyModel& model,
                                     const ShellPartition& partition, std::uint64_t seed, std::size_t paths,
                                     const std::vector<int>& cells, double t, const LedgerOptions& options) {
    if (cells.size() < 2) throw InvalidArgument("refinement study: need at least two grids");
    const double eps = model.nu().is_empty() ? 1.0 : partition.floor();
    RefinementStudy study;
    std::vector<double> lx, ly;
    for (int m : cells) {
        const PathEnsemble ensemble(model, partition, TimeGrid::uniform(model.horizon(), m), seed, paths);
        const ItoLedger ledger = ito_ledger_general(spec, f, ensemble, eps, t, options);
        const SampleStats& res = ledger.stat("residual");
        study.rows.push_back({m, ledger.rms_residual, ledger.rms_lhs, res.mean, res.std_error});
        lx.push_back(std::log(model.horizon() / m));
        ly.push_back(std::log(ledger.rms_residual));
    }
    const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / static_cast<double>(lx.size());
    const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / static_cast<double>(ly.size());
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sxy += (lx[i] - mx) * (ly[i] - my);
        sxx += (lx[i] - mx) * (lx[i] - mx);
    }
    study.order = sxy / sxx;
    return study;
}

}  // namespace levycalc
