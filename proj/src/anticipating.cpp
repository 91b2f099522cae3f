#include "levycalc/anticipating.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "levycalc/ensemble.hpp"
#include "levycalc/errors.hpp"

namespace levycalc {

namespace {

constexpr std::array<double, 5> kGaussNodes{0.0, -0.5384693101056831, 0.5384693101056831, -0.9061798459386640,
                                            0.9061798459386640};
constexpr std::array<double, 5> kGaussWeights{0.5688888888888889, 0.4786286704993665, 0.4786286704993665,
                                              0.2369268850561891, 0.2369268850561891};

template <class F>
double gauss5(double a, double b, F&& f) {
    const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
    double s = 0.0;
    for (std::size_t i = 0; i < kGaussNodes.size(); ++i) s += kGaussWeights[i] * f(mid + half * kGaussNodes[i]);
    return s * half;
}

/// Sorted edges of [a, b] refined by the given cut points.
std::vector<double> edges_between(double a, double b, const std::vector<double>& cuts) {
    std::vector<double> e{a, b};
    for (double c : cuts)
        if (c > a && c < b) e.push_back(c);
    std::sort(e.begin(), e.end());
    e.erase(std::unique(e.begin(), e.end()), e.end());
    return e;
}

std::vector<double> grid_nodes(const TimeGrid& grid) {
    const auto t = grid.times();
    return {t.begin(), t.end()};
}

bool vanishes_after(const RandomFunctional& f, double a) {
    return f.adapted_up_to() && *f.adapted_up_to() <= a;
}

TimeInterval up_to(const TimeInterval& time, double t, double horizon) {
    return intersect(time, TimeInterval{0.0, std::min(t, horizon)});
}

ValueSet cell_values(const JumpCell& c) {
    return c.is_atom() ? ValueSet::point(c.lo) : ValueSet::interval(c.lo, c.hi);
}

/// F(omega with a jump x at s) - F(omega), with the metadata it inherits.
RandomFunctional shifted_difference(const RandomFunctional& f, double s, double x, const ShellPartition* partition) {
    RandomFunctional::Spec spec;
    spec.name = f.name() + "_shift";
    spec.eval = [f, s, x, partition](const CanonicalPath& p) { return f(add_jump(p, s, x, partition)) - f(p); };
    if (f.brownian_blind()) {
        spec.brownian_blind = true;
    } else if (f.has_gradient()) {
        spec.gradient = [f, s, x, partition](const CanonicalPath& p, double t) {
            return f.gradient(add_jump(p, s, x, partition), t) - f.gradient(p, t);
        };
        if (f.has_hessian())
            spec.hessian = [f, s, x, partition](const CanonicalPath& p, double r, double t) {
                return f.hessian(add_jump(p, s, x, partition), r, t) - f.hessian(p, r, t);
            };
    }
    spec.adapted_up_to = f.adapted_up_to();
    if (f.bound()) spec.bound = 2.0 * *f.bound();
    spec.breakpoints = f.breakpoints();
    spec.left_limit_safe = f.left_limit_safe();
    if (f.jump_degree()) spec.jump_degree = std::max(0, *f.jump_degree() - 1);
    return RandomFunctional(std::move(spec));
}

struct Factorizer {
    const CanonicalPath& path;
    const LevyModel& model;
    const ShellPartition& partition;
    int cap;
    SkorohodResult& out;

    // delta(G h) for h supported in (0, t]; returns the value, adds the remainder.
    double level(const RandomFunctional& g, const Shape& h, int depth) {
        out.depth_reached = std::max(out.depth_reached, depth);
        const double horizon = path.horizon();
        const double g0 = g(path);
        double value = g0 * first_chaos_integral(path, model, partition, h, horizon) -
                       integrate_against_D(g, path, model, partition, h, horizon);
        const ValueSet jumps = h.values.without_zero();
        if (g.jump_blind() || !jumps.has_nonzero() || h.time.length() <= 0.0) return value;
        const auto cells = jump_cells(model, partition, jumps);
        const auto edges = edges_between(h.time.a, h.time.b, g.breakpoints());
        for (std::size_t e = 0; e + 1 < edges.size(); ++e) {
            if (vanishes_after(g, edges[e])) continue;
            const TimeInterval piece{edges[e], edges[e + 1]};
            const double mid = 0.5 * (piece.a + piece.b);
            for (const auto& c : cells) {
                const Shape hc = h.restricted(piece, cell_values(c));
                if (depth + 1 > cap) {
                    const double gc = g(add_jump(path, mid, c.right(), &partition)) - g0;
                    out.remainder -= gc * first_chaos_integral(path, model, partition, hc, horizon);
                    continue;
                }
                value -= level(shifted_difference(g, mid, c.right(), &partition), hc, depth + 1);
            }
        }
        return value;
    }
};

ChaosField chaos_field(const SimpleRandomField& u, double t, double horizon) {
    ChaosField field;
    for (const auto& term : u.terms()) {
        if (!term.chaos) throw UnsupportedOperation("skorohod_simple: term without a chaos expansion");
        if (!term.h.is_box()) throw UnsupportedOperation("skorohod_simple: chaos route needs constant-in-time shapes");
        const ProductRegion z{up_to(term.h.time, t, horizon), term.h.values};
        const double c = term.h.poly.front();
        field.terms.push_back({z, c, ElementaryKernel::constant(term.chaos->constant())});
        for (const auto& k : term.chaos->kernels()) field.terms.push_back({z, c, k});
    }
    return field;
}

double second_derivative(const RandomFunctional& f, const CanonicalPath& path, double r, double x, double s,
                         double y, double sigma, const ShellPartition& partition) {
    if (x != 0.0 && y != 0.0) {
        if (f.jump_blind() || (f.jump_degree() && *f.jump_degree() < 2)) return 0.0;
        const auto px = add_jump(path, r, x, &partition);
        const auto py = add_jump(path, s, y, &partition);
        const auto pxy = add_jump(px, s, y, &partition);
        return (f(pxy) - f(px) - f(py) + f(path)) / (x * y);
    }
    if (x == 0.0 && y == 0.0) {
        if (f.brownian_blind()) return 0.0;
        if (!f.has_hessian()) throw UnsupportedOperation(f.name() + ": seminorm needs an exact second derivative");
        return f.hessian(path, r, s) / (sigma * sigma);
    }
    if (f.jump_blind() || f.brownian_blind()) return 0.0;
    const double tw = x == 0.0 ? r : s;  // Brownian slot
    const double tj = x == 0.0 ? s : r;
    const double z = x == 0.0 ? y : x;
    const auto shifted = add_jump(path, tj, z, &partition);
    return (brownian_derivative(f, shifted, tw) - brownian_derivative(f, path, tw)) / (sigma * z);
}

double length_before(const TimeInterval& piece, double t) {
    return std::clamp(t - piece.a, 0.0, piece.length());
}

}  // namespace

double Shape::p(double t) const {
    double v = 0.0;
    for (auto it = poly.rbegin(); it != poly.rend(); ++it) v = v * t + *it;
    return v;
}

double Shape::p_integral(double a, double b) const {
    double s = 0.0, pa = a, pb = b;
    for (std::size_t k = 0; k < poly.size(); ++k) {
        s += poly[k] * (pb - pa) / static_cast<double>(k + 1);
        pa *= a;
        pb *= b;
    }
    return s;
}

Shape Shape::restricted(TimeInterval t, ValueSet v) const {
    return {intersect(time, t), values.intersect(v), poly};
}

bool Shape::is_box() const {
    return std::all_of(poly.begin() + std::min<std::size_t>(1, poly.size()), poly.end(),
                       [](double c) { return c == 0.0; });
}

SimpleRandomField::SimpleRandomField(std::vector<Term> terms, DMinusHook d_minus)
    : terms_(std::move(terms)), d_minus_(std::move(d_minus)) {
    for (const auto& t : terms_) {
        if (!t.F.valid()) throw InvalidArgument("SimpleRandomField: term without a functional");
        if (t.h.poly.empty()) throw InvalidArgument("SimpleRandomField: empty polynomial");
    }
}

double SimpleRandomField::operator()(const CanonicalPath& path, double t, double x) const {
    double v = 0.0;
    for (const auto& term : terms_) {
        const double h = term.h(t, x);
        if (h != 0.0) v += term.F(path) * h;
    }
    return v;
}

double first_chaos_integral(const CanonicalPath& path, const LevyModel& model, const ShellPartition& partition,
                            const Shape& h, double t) {
    const TimeInterval box = up_to(h.time, t, path.horizon());
    if (box.length() <= 0.0) return 0.0;
    double total = 0.0;
    if (h.values.has_zero() && model.sigma() != 0.0) {
        const TimeGrid& grid = path.grid();
        const auto w = path.brownian();
        for (int k = grid.cell_of(box.a); k < grid.cells() && grid[k] < box.b; ++k) {
            const double lo = std::max(grid[k], box.a), hi = std::min(grid[k + 1], box.b);
            if (hi <= lo) continue;
            total += model.sigma() * (w[k + 1] - w[k]) / grid.spacing(k) * h.p_integral(lo, hi);
        }
    }
    const ValueSet jumps = h.values.without_zero();
    if (jumps.has_nonzero()) {
        for (const auto& j : path.jumps())
            if (box.contains(j.time) && jumps.contains(j.size)) total += h.p(j.time) * j.size;
        double drift = 0.0;
        for (const auto& c : jump_cells(model, partition, jumps)) drift += c.m1;
        total -= drift * h.p_integral(box.a, box.b);
    }
    return total;
}

double integrate_against_D(const RandomFunctional& F, const CanonicalPath& path, const LevyModel& model,
                           const ShellPartition& partition, const Shape& h, double t) {
    const TimeInterval box = up_to(h.time, t, path.horizon());
    if (box.length() <= 0.0) return 0.0;
    const bool diffusion = h.values.has_zero() && model.sigma() != 0.0 && !F.brownian_blind();
    const ValueSet jump_values = h.values.without_zero();
    const auto cells = F.jump_blind() ? std::vector<JumpCell>{} : jump_cells(model, partition, jump_values);
    std::vector<double> cuts = F.breakpoints();
    if (diffusion && !F.has_gradient()) {
        const auto nodes = grid_nodes(path.grid());
        cuts.insert(cuts.end(), nodes.begin(), nodes.end());
    }
    const auto edges = edges_between(box.a, box.b, cuts);
    double total = 0.0;
    for (std::size_t e = 0; e + 1 < edges.size(); ++e) {
        if (vanishes_after(F, edges[e])) continue;
        const double mid = 0.5 * (edges[e] + edges[e + 1]);
        const double w = h.p_integral(edges[e], edges[e + 1]);
        if (diffusion) total += model.sigma() * brownian_derivative(F, path, mid) * w;
        for (const auto& c : cells) total += psi(F, path, mid, c.rep) * c.m2 * w;
    }
    return total;
}

SkorohodResult skorohod_simple(const SimpleRandomField& u, const CanonicalPath& path, const LevyModel& model,
                               const ShellPartition& partition, double t, const SkorohodOptions& options) {
    if (options.depth_cap < 0) throw InvalidArgument("skorohod_simple: negative depth cap");
    SkorohodResult out;
    const bool factor = options.strategy != SkorohodStrategy::Chaos;
    const bool chaos = options.strategy != SkorohodStrategy::Factorization;
    if (factor) {
        Factorizer engine{path, model, partition, options.depth_cap, out};
        for (const auto& term : u.terms()) {
            const Shape h = term.h.restricted(up_to(term.h.time, t, path.horizon()), ValueSet::everything());
            out.value += engine.level(term.F, h, 0);
        }
    }
    if (chaos) {
        try {
            out.chaos_value = skorohod_chaos(path, model, partition, chaos_field(u, t, path.horizon()));
        } catch (const UnsupportedOperation& e) {
            if (!factor) throw;
            out.warnings.push_back(std::string("chaos route unavailable: ") + e.what());
        }
    }
    if (!factor) {
        out.value = *out.chaos_value;
    } else if (out.chaos_value) {
        out.difference = out.value - *out.chaos_value;
        if (std::abs(*out.difference) > options.agreement_tolerance * (1.0 + std::abs(*out.chaos_value)))
            out.warnings.push_back("factorization and chaos routes disagree");
    }
    if (out.remainder != 0.0) out.warnings.push_back("recursion truncated at the depth cap");
    return out;
}

DMinusResult d_minus(const SimpleRandomField& u, const CanonicalPath& path, const LevyModel& model, double s,
                     double y, DMinusMode mode, double offset) {
    DMinusResult out;
    switch (mode) {
    case DMinusMode::Analytic:
        if (!u.d_minus_hook()) throw UnsupportedOperation("d_minus: field has no analytic D^- hook");
        out.value = u.d_minus_hook()(path, s, y);
        return out;
    case DMinusMode::AdaptedZero:
        for (const auto& term : u.terms())
            if (!vanishes_after(term.F, term.h.time.a))
                throw UnsupportedOperation("d_minus: " + term.F.name() + " is not adapted to its shape");
        return out;
    case DMinusMode::Numeric:
        break;
    }
    const double base = offset > 0.0 ? offset : path.grid().spacing(path.grid().cell_of(s));
    std::vector<double> dF(u.terms().size());
    for (std::size_t j = 0; j < dF.size(); ++j) dF[j] = malliavin_D(u.terms()[j].F, path, s, y, model.sigma());
    for (double delta : {base, base / 2.0, base / 4.0}) {
        double v = 0.0;
        for (std::size_t j = 0; j < dF.size(); ++j) v += dF[j] * u.terms()[j].h(s - delta, y);
        out.offsets.push_back(delta);
        out.sweep.push_back(v);
    }
    out.value = out.sweep.back();
    return out;
}

SeminormSample seminorm_sample(const SimpleRandomField& u, const CanonicalPath& path, const LevyModel& model,
                               const ShellPartition& partition) {
    const double horizon = path.horizon();
    const double sigma = model.sigma();
    const auto& terms = u.terms();
    const std::size_t nt = terms.size();

    std::vector<double> cuts;
    bool need_grid = false;
    for (const auto& term : terms) {
        cuts.insert(cuts.end(), term.F.breakpoints().begin(), term.F.breakpoints().end());
        cuts.push_back(term.h.time.a);
        cuts.push_back(term.h.time.b);
        need_grid = need_grid || (sigma != 0.0 && !term.F.has_gradient());
    }
    if (need_grid) {
        const auto nodes = grid_nodes(path.grid());
        cuts.insert(cuts.end(), nodes.begin(), nodes.end());
    }
    const auto edges = edges_between(0.0, horizon, cuts);
    std::vector<TimeInterval> pieces;
    for (std::size_t e = 0; e + 1 < edges.size(); ++e) pieces.push_back({edges[e], edges[e + 1]});

    struct Slot {
        double x;
        double weight;  // mu mass per unit time
    };
    std::vector<Slot> slots;
    if (sigma != 0.0) slots.push_back({0.0, sigma * sigma});
    for (const auto& c : jump_cells(model, partition, ValueSet::nonzero())) slots.push_back({c.rep, c.m2});

    // Integral over piece q of (sum_j a_j h_j(t, x))^2 m(t) dt.
    auto quad = [&](const TimeInterval& q, double x, const double* a, auto&& m) {
        return gauss5(q.a, q.b, [&](double t) {
            double v = 0.0;
            for (std::size_t j = 0; j < nt; ++j)
                if (a[j] != 0.0) v += a[j] * terms[j].h(t, x);
            return v * v * m(t);
        });
    };
    auto active = [&](const TimeInterval& q, const Slot& z) {
        for (const auto& term : terms)
            if (intersect(term.h.time, q).length() > 0.0 && term.h.values.contains(z.x)) return true;
        return false;
    };
    std::vector<std::pair<std::size_t, std::size_t>> targets;  // (piece, slot) where u can be nonzero
    for (std::size_t q = 0; q < pieces.size(); ++q)
        for (std::size_t z = 0; z < slots.size(); ++z)
            if (active(pieces[q], slots[z])) targets.push_back({q, z});

    SeminormSample out;
    std::vector<double> a(nt);
    for (std::size_t j = 0; j < nt; ++j) a[j] = terms[j].F(path);
    for (auto [q, z] : targets)
        out.l2 += slots[z].weight * quad(pieces[q], slots[z].x, a.data(), [](double) { return 1.0; });

    // First derivatives per (piece, slot).
    const std::size_t cells = pieces.size() * slots.size();
    std::vector<double> d1(cells * nt, 0.0);
    for (std::size_t p = 0; p < pieces.size(); ++p)
        for (std::size_t y = 0; y < slots.size(); ++y)
            for (std::size_t j = 0; j < nt; ++j) {
                const auto& f = terms[j].F;
                if (vanishes_after(f, pieces[p].a)) continue;
                const double mid = 0.5 * (pieces[p].a + pieces[p].b);
                d1[(p * slots.size() + y) * nt + j] = malliavin_D(f, path, mid, slots[y].x, sigma);
            }
    for (std::size_t p = 0; p < pieces.size(); ++p)
        for (std::size_t y = 0; y < slots.size(); ++y) {
            const double* dy = &d1[(p * slots.size() + y) * nt];
            if (std::all_of(dy, dy + nt, [](double v) { return v == 0.0; })) continue;
            const TimeInterval sp = pieces[p];
            auto m = [&](double t) { return sp.length() - length_before(sp, t); };
            for (auto [q, z] : targets)
                out.delta1 += slots[y].weight * slots[z].weight * quad(pieces[q], slots[z].x, dy, m);
        }

    for (std::size_t pr = 0; pr < pieces.size(); ++pr)
        for (std::size_t x = 0; x < slots.size(); ++x)
            for (std::size_t ps = 0; ps < pieces.size(); ++ps)
                for (std::size_t y = 0; y < slots.size(); ++y) {
                    const TimeInterval rp = pieces[pr], sp = pieces[ps];
                    const double rm = 0.5 * (rp.a + rp.b), sm = 0.5 * (sp.a + sp.b);
                    bool any = false;
                    for (std::size_t j = 0; j < nt; ++j) {
                        const auto& f = terms[j].F;
                        a[j] = 0.0;
                        if (vanishes_after(f, rp.a) || vanishes_after(f, sp.a)) continue;
                        a[j] = second_derivative(f, path, rm, slots[x].x, sm, slots[y].x, sigma, partition);
                        any = any || a[j] != 0.0;
                    }
                    if (!any) continue;
                    auto m = [&](double t) {
                        return rp.length() * sp.length() - length_before(rp, t) * length_before(sp, t);
                    };
                    const double w = slots[x].weight * slots[y].weight;
                    for (auto [q, z] : targets) out.delta2 += w * slots[z].weight * quad(pieces[q], slots[z].x, a.data(), m);
                }
    return out;
}

SeminormReport seminorms(const SimpleRandomField& u, const PathEnsemble& ensemble, unsigned workers) {
    const std::size_t n = ensemble.size();
    std::vector<double> l2(n), d1(n), d2(n), n12(n), nf(n);
    parallel_for(n, workers, [&](std::size_t i) {
        const auto s = seminorm_sample(u, ensemble.path(i), ensemble.model(), ensemble.partition());
        l2[i] = s.l2;
        d1[i] = s.delta1;
        d2[i] = s.delta2;
        n12[i] = s.l2 + s.delta1;
        nf[i] = s.l2 + s.delta1 + s.delta2;
    });
    SeminormReport r;
    auto fill = [](const std::vector<double>& xs, double& mean, double& se) {
        const auto st = sample_stats(xs);
        mean = st.mean;
        se = st.std_error;
    };
    fill(l2, r.l2, r.l2_se);
    fill(d1, r.delta1, r.delta1_se);
    fill(d2, r.delta2, r.delta2_se);
    fill(n12, r.norm_12f, r.norm_12f_se);
    fill(nf, r.norm_f, r.norm_f_se);
    return r;
}

EnergyBoundCheck energy_bound_check(const SimpleRandomField& u, const PathEnsemble& ensemble, unsigned workers) {
    const std::size_t n = ensemble.size();
    std::vector<double> dsq(n), bound(n), margin(n);
    const double horizon = ensemble.grid().horizon();
    parallel_for(n, workers, [&](std::size_t i) {
        const auto path = ensemble.path(i);
        const double d = skorohod_simple(u, path, ensemble.model(), ensemble.partition(), horizon).value;
        const auto s = seminorm_sample(u, path, ensemble.model(), ensemble.partition());
        dsq[i] = d * d;
        bound[i] = 2.0 * (s.l2 + s.delta1 + s.delta2);
        margin[i] = bound[i] - dsq[i];
    });
    EnergyBoundCheck r;
    const auto a = sample_stats(dsq), b = sample_stats(bound), m = sample_stats(margin);
    r.delta_sq = a.mean;
    r.delta_sq_se = a.std_error;
    r.bound = b.mean;
    r.bound_se = b.std_error;
    r.margin = m.mean;
    r.margin_se = m.std_error;
    r.holds = r.margin >= -3.0 * r.margin_se;
    return r;
}

BridgeSample bridge_sample(const LeftLimitField& u, const CanonicalPath& path, const LevyModel& model,
                           const ShellPartition& partition, const ValueSet& region, double t) {
    BridgeSample out;
    const ValueSet jumps = region.without_zero();
    out.lhs = pathwise_jtilde_integral(path, model, partition, u.value, jumps, t).value;
    const auto cells = jump_cells(model, partition, jumps);
    const TimeGrid& grid = path.grid();
    for (int k = 0; k < grid.cells() && grid[k] < t; ++k) {
        const double s0 = grid[k], s1 = std::min(grid[k + 1], t);
        const double len = s1 - s0, mid = 0.5 * (s0 + s1);
        for (const auto& c : cells) {
            const double xc = c.right();
            const double U = u.value(path, s0, xc);
            double m = -c.m1 * len;
            for (const auto& j : path.jumps()) {
                if (j.time > s1) break;
                if (j.time > s0 && (c.is_atom() ? j.size == c.lo : (j.size > c.lo && j.size <= c.hi)))
                    m += j.size;
            }
            out.delta_cells += U * m;
            if (u.adapted) continue;
            const auto shifted = add_jump(path, mid, c.rep, &partition);
            const double dU = (u.value(shifted, s0, xc) - U) / c.rep;
            out.delta_cells -= dU * c.m2 * len;
            // D^- at (mid, y): the shifted field read strictly before the added jump.
            const double dm = u.d_minus ? u.d_minus(path, mid, c.rep)
                                        : (u.value(shifted, s0, c.rep) - u.value(path, s0, c.rep)) / c.rep;
            out.dminus_term += dm * c.m2 * len;
        }
    }
    out.residual = out.lhs - out.delta_cells - out.dminus_term;
    return out;
}

double bridge_quadrature_bound(const LeftLimitField& u, const LevyModel& model, const ShellPartition& partition,
                               const ValueSet& region, double t, double spacing) {
    double abs_first = 0.0;
    for (const auto& c : jump_cells(model, partition, region.without_zero())) abs_first += std::abs(c.rep) * c.mass;
    double second = 0.0, mean_rate = model.gamma();
    for (const auto& s : partition.retained()) {
        for (const auto& c : s.cells) second += c.m2;
        if (s.index == 1) mean_rate += s.drift;
    }
    const double sigma = model.sigma();
    const double path_move = std::sqrt(spacing * (sigma * sigma + second) + mean_rate * mean_rate * spacing * spacing);
    return t * abs_first * (u.lipschitz_time * spacing + u.lipschitz_path * path_move);
}

BridgeReport pathwise_skorohod_bridge(const LeftLimitField& u, const PathEnsemble& ensemble, const ValueSet& region,
                                      double t, unsigned workers) {
    if (!u.value) throw InvalidArgument("pathwise_skorohod_bridge: field has no value function");
    const std::size_t n = ensemble.size();
    std::vector<double> res(n), absres(n), lhs(n);
    parallel_for(n, workers, [&](std::size_t i) {
        const auto s = bridge_sample(u, ensemble.path(i), ensemble.model(), ensemble.partition(), region, t);
        res[i] = s.residual;
        absres[i] = std::abs(s.residual);
        lhs[i] = s.lhs;
    });
    BridgeReport r;
    const auto a = sample_stats(res), b = sample_stats(absres), c = sample_stats(lhs);
    r.mean_residual = a.mean;
    r.residual_se = a.std_error;
    r.mean_abs_residual = b.mean;
    r.abs_residual_se = b.std_error;
    r.mean_lhs = c.mean;
    r.lhs_se = c.std_error;
    r.quadrature_bound = bridge_quadrature_bound(u, ensemble.model(), ensemble.partition(), region, t,
                                                 ensemble.grid().max_spacing());
    r.holds = r.mean_abs_residual <= 3.0 * r.abs_residual_se + r.quadrature_bound;
    if (untruncated_second_moment(ensemble.model(), ensemble.partition(), region.without_zero()) > 0.0)
        r.warnings.push_back("region overlaps nu-mass below the truncation floor");
    return r;
}

}  // namespace levycalc
