#include "levycalc/functionals.hpp"

#include <algorithm>
#include <cmath>

#include "levycalc/errors.hpp"

namespace levycalc {

RandomFunctional::RandomFunctional(Spec spec) {
    if (!spec.eval) throw InvalidArgument("RandomFunctional: evaluation function missing");
    if (spec.jump_blind) spec.jump_degree = 0;
    if (spec.jump_degree && *spec.jump_degree == 0) spec.jump_blind = true;
    std::sort(spec.breakpoints.begin(), spec.breakpoints.end());
    spec.breakpoints.erase(std::unique(spec.breakpoints.begin(), spec.breakpoints.end()), spec.breakpoints.end());
    impl_ = std::make_shared<const Spec>(std::move(spec));
}

double RandomFunctional::gradient(const CanonicalPath& path, double t) const {
    if (impl_->brownian_blind) return 0.0;
    if (!impl_->gradient) throw UnsupportedOperation(impl_->name + ": no analytic Brownian gradient");
    return impl_->gradient(path, t);
}

double RandomFunctional::hessian(const CanonicalPath& path, double r, double t) const {
    if (impl_->brownian_blind) return 0.0;
    if (!impl_->hessian) throw UnsupportedOperation(impl_->name + ": no analytic second Brownian derivative");
    return impl_->hessian(path, r, t);
}

namespace heads {

SmoothHead identity() {
    return {"id", [](std::span<const double> w) { return w[0]; },
            [](std::span<const double>, int) { return 1.0; }, [](std::span<const double>, int, int) { return 0.0; },
            std::nullopt};
}

SmoothHead sine() {
    return {"sin", [](std::span<const double> w) { return std::sin(w[0]); },
            [](std::span<const double> w, int) { return std::cos(w[0]); },
            [](std::span<const double> w, int, int) { return -std::sin(w[0]); }, 1.0};
}

SmoothHead cosine() {
    return {"cos", [](std::span<const double> w) { return std::cos(w[0]); },
            [](std::span<const double> w, int) { return -std::sin(w[0]); },
            [](std::span<const double> w, int, int) { return -std::cos(w[0]); }, 1.0};
}

SmoothHead linear(std::vector<double> c) {
    auto coeff = std::make_shared<const std::vector<double>>(std::move(c));
    return {"linear",
            [coeff](std::span<const double> w) {
                double s = 0.0;
                for (std::size_t i = 0; i < coeff->size(); ++i) s += (*coeff)[i] * w[i];
                return s;
            },
            [coeff](std::span<const double>, int i) { return (*coeff)[i]; },
            [](std::span<const double>, int, int) { return 0.0; }, std::nullopt};
}

SmoothHead product(int arity) {
    auto prod_except = [arity](std::span<const double> w, int skip_a, int skip_b) {
        double p = 1.0;
        for (int k = 0; k < arity; ++k)
            if (k != skip_a && k != skip_b) p *= w[k];
        return p;
    };
    return {"product", [prod_except](std::span<const double> w) { return prod_except(w, -1, -1); },
            [prod_except](std::span<const double> w, int i) { return prod_except(w, i, -1); },
            [prod_except](std::span<const double> w, int i, int j) { return i == j ? 0.0 : prod_except(w, i, j); },
            std::nullopt};
}

SmoothHead trig_mix(int arity) {
    // prod_k g_k(w_k) with g_k = sin for even k and cos for odd k.
    auto g = [](int k, double x, int order) {
        const double s = std::sin(x), c = std::cos(x);
        if (k % 2 == 0) return order == 0 ? s : order == 1 ? c : -s;
        return order == 0 ? c : order == 1 ? -s : -c;
    };
    auto eval = [arity, g](std::span<const double> w, int i, int j) {
        double p = 1.0;
        for (int k = 0; k < arity; ++k) {
            const int order = (k == i) + (k == j);
            p *= g(k, w[k], order);
        }
        return p;
    };
    return {"trig_mix", [eval](std::span<const double> w) { return eval(w, -1, -1); },
            [eval](std::span<const double> w, int i) { return eval(w, i, -1); },
            [eval](std::span<const double> w, int i, int j) { return eval(w, i, j); }, 1.0};
}

}  // namespace heads

namespace catalog {

namespace {

std::vector<double> merged(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> out = a;
    out.insert(out.end(), b.begin(), b.end());
    return out;
}

std::optional<double> max_horizon(const std::optional<double>& a, const std::optional<double>& b) {
    if (!a || !b) return std::nullopt;
    return std::max(*a, *b);
}

double sum_jumps_to(const CanonicalPath& path, double tau) {
    double s = 0.0;
    for (const auto& j : path.jumps()) {
        if (j.time > tau) break;
        s += j.size;
    }
    return s;
}

}  // namespace

RandomFunctional constant(double c) {
    RandomFunctional::Spec s;
    s.name = "constant";
    s.eval = [c](const CanonicalPath&) { return c; };
    s.adapted_up_to = 0.0;
    s.bound = std::abs(c);
    s.jump_blind = true;
    s.brownian_blind = true;
    return RandomFunctional(std::move(s));
}

RandomFunctional brownian_at(double tau) {
    auto f = cylindrical(heads::identity(), {tau});
    auto spec = f.spec();
    spec.name = "W";
    return RandomFunctional(std::move(spec));
}

RandomFunctional sin_brownian(double tau) {
    auto spec = cylindrical(heads::sine(), {tau}).spec();
    spec.name = "sin_W";
    return RandomFunctional(std::move(spec));
}

RandomFunctional cos_brownian(double tau) {
    auto spec = cylindrical(heads::cosine(), {tau}).spec();
    spec.name = "cos_W";
    return RandomFunctional(std::move(spec));
}

RandomFunctional cylindrical(SmoothHead head, std::vector<double> times, std::optional<RandomFunctional> z) {
    if (times.empty()) throw InvalidArgument("cylindrical: need at least one Brownian time");
    if (!head.value || !head.partial || !head.second_partial)
        throw InvalidArgument("cylindrical: head must supply first and second partial derivatives");
    if (z && !z->brownian_blind()) throw InvalidArgument("cylindrical: jump factor must not depend on W");
    auto h = std::make_shared<const SmoothHead>(std::move(head));
    auto ts = std::make_shared<const std::vector<double>>(times);
    auto args = [ts](const CanonicalPath& p) {
        std::vector<double> w(ts->size());
        for (std::size_t i = 0; i < ts->size(); ++i) w[i] = p.brownian_at((*ts)[i]);
        return w;
    };
    auto zval = [z](const CanonicalPath& p) { return z ? (*z)(p) : 1.0; };

    RandomFunctional::Spec s;
    s.name = "cylindrical_" + h->name;
    s.eval = [h, args, zval](const CanonicalPath& p) { return h->value(args(p)) * zval(p); };
    s.gradient = [h, ts, args, zval](const CanonicalPath& p, double t) {
        const auto w = args(p);
        double g = 0.0;
        for (std::size_t i = 0; i < ts->size(); ++i)
            if (t <= (*ts)[i]) g += h->partial(w, static_cast<int>(i));
        return g * zval(p);
    };
    s.hessian = [h, ts, args, zval](const CanonicalPath& p, double r, double t) {
        const auto w = args(p);
        double g = 0.0;
        for (std::size_t i = 0; i < ts->size(); ++i) {
            if (r > (*ts)[i]) continue;
            for (std::size_t j = 0; j < ts->size(); ++j)
                if (t <= (*ts)[j]) g += h->second_partial(w, static_cast<int>(i), static_cast<int>(j));
        }
        return g * zval(p);
    };
    const double last = *std::max_element(times.begin(), times.end());
    s.adapted_up_to = z ? max_horizon(last, z->adapted_up_to()) : std::optional<double>(last);
    if (h->bound && (!z || z->bound())) s.bound = *h->bound * (z ? *z->bound() : 1.0);
    s.breakpoints = z ? merged(times, z->breakpoints()) : times;
    s.jump_blind = !z || z->jump_blind();
    s.jump_degree = z ? z->jump_degree() : std::optional<int>(0);
    s.left_limit_safe = !z || z->left_limit_safe();
    return RandomFunctional(std::move(s));
}

RandomFunctional jump_sum(double tau) {
    RandomFunctional::Spec s;
    s.name = "jump_sum";
    s.jump_degree = 1;
    s.eval = [tau](const CanonicalPath& p) { return sum_jumps_to(p, tau); };
    s.adapted_up_to = tau;
    s.breakpoints = {tau};
    s.brownian_blind = true;
    return RandomFunctional(std::move(s));
}

RandomFunctional jump_sum_sq(double tau) {
    RandomFunctional::Spec s;
    s.name = "jump_sum_sq";
    s.jump_degree = 2;
    s.eval = [tau](const CanonicalPath& p) {
        const double v = sum_jumps_to(p, tau);
        return v * v;
    };
    s.adapted_up_to = tau;
    s.breakpoints = {tau};
    s.brownian_blind = true;
    return RandomFunctional(std::move(s));
}

RandomFunctional jump_count(double tau, double threshold) {
    RandomFunctional::Spec s;
    s.name = "jump_count";
    s.jump_degree = 1;
    s.eval = [tau, threshold](const CanonicalPath& p) {
        double n = 0.0;
        for (const auto& j : p.jumps()) {
            if (j.time > tau) break;
            if (std::abs(j.size) > threshold) n += 1.0;
        }
        return n;
    };
    s.adapted_up_to = tau;
    s.breakpoints = {tau};
    s.brownian_blind = true;
    return RandomFunctional(std::move(s));
}

RandomFunctional mollified_jump_sum(double n, double tau) {
    if (!(n > 0.0)) throw InvalidArgument("mollified_jump_sum: n must be positive");
    RandomFunctional::Spec s;
    s.name = "mollified_jump_sum";
    s.eval = [n, tau](const CanonicalPath& p) {
        double v = 0.0;
        for (const auto& j : p.jumps()) {
            if (j.time > tau) break;
            const double y = j.size / n;
            v += j.size * std::exp(-y * y);
        }
        return v;
    };
    s.adapted_up_to = tau;
    s.breakpoints = {tau};
    s.brownian_blind = true;
    return RandomFunctional(std::move(s));
}

RandomFunctional smooth_of_X(std::string name, std::function<double(double)> g, std::function<double(double)> g1,
                             std::function<double(double)> g2, double tau, LevyModel model, ShellPartition partition,
                             std::optional<double> bound) {
    auto ctx = std::make_shared<const std::pair<LevyModel, ShellPartition>>(std::move(model), std::move(partition));
    auto x_of = [ctx, tau](const CanonicalPath& p) { return evaluate_X(p, ctx->first, ctx->second, tau); };
    const double sigma = ctx->first.sigma();
    RandomFunctional::Spec s;
    s.name = std::move(name);
    s.eval = [g, x_of](const CanonicalPath& p) { return g(x_of(p)); };
    s.gradient = [g1, x_of, sigma, tau](const CanonicalPath& p, double t) {
        return t <= tau ? sigma * g1(x_of(p)) : 0.0;
    };
    s.hessian = [g2, x_of, sigma, tau](const CanonicalPath& p, double r, double t) {
        return (r <= tau && t <= tau) ? sigma * sigma * g2(x_of(p)) : 0.0;
    };
    s.adapted_up_to = tau;
    s.bound = bound;
    s.breakpoints = {tau};
    s.brownian_blind = sigma == 0.0;
    return RandomFunctional(std::move(s));
}

RandomFunctional cos_of_X(double theta, double tau, LevyModel model, ShellPartition partition) {
    return smooth_of_X(
        "cos_X", [theta](double x) { return std::cos(theta * x); },
        [theta](double x) { return -theta * std::sin(theta * x); },
        [theta](double x) { return -theta * theta * std::cos(theta * x); }, tau, std::move(model),
        std::move(partition), 1.0);
}

RandomFunctional linear_combination(double a, const RandomFunctional& f, double b, const RandomFunctional& g) {
    RandomFunctional::Spec s;
    s.name = "lincomb(" + f.name() + "," + g.name() + ")";
    s.eval = [a, b, f, g](const CanonicalPath& p) { return a * f(p) + b * g(p); };
    if (f.has_gradient() && g.has_gradient())
        s.gradient = [a, b, f, g](const CanonicalPath& p, double t) {
            return a * f.gradient(p, t) + b * g.gradient(p, t);
        };
    if (f.has_hessian() && g.has_hessian())
        s.hessian = [a, b, f, g](const CanonicalPath& p, double r, double t) {
            return a * f.hessian(p, r, t) + b * g.hessian(p, r, t);
        };
    s.adapted_up_to = max_horizon(f.adapted_up_to(), g.adapted_up_to());
    if (f.bound() && g.bound()) s.bound = std::abs(a) * *f.bound() + std::abs(b) * *g.bound();
    s.breakpoints = merged(f.breakpoints(), g.breakpoints());
    s.left_limit_safe = f.left_limit_safe() && g.left_limit_safe();
    s.jump_blind = f.jump_blind() && g.jump_blind();
    s.brownian_blind = f.brownian_blind() && g.brownian_blind();
    if (f.jump_degree() && g.jump_degree()) s.jump_degree = std::max(*f.jump_degree(), *g.jump_degree());
    return RandomFunctional(std::move(s));
}

RandomFunctional product(const RandomFunctional& f, const RandomFunctional& g) {
    RandomFunctional::Spec s;
    s.name = "product(" + f.name() + "," + g.name() + ")";
    s.eval = [f, g](const CanonicalPath& p) { return f(p) * g(p); };
    if (f.has_gradient() && g.has_gradient())
        s.gradient = [f, g](const CanonicalPath& p, double t) {
            return f.gradient(p, t) * g(p) + f(p) * g.gradient(p, t);
        };
    if (f.has_hessian() && g.has_hessian())
        s.hessian = [f, g](const CanonicalPath& p, double r, double t) {
            return f.hessian(p, r, t) * g(p) + f.gradient(p, t) * g.gradient(p, r) +
                   f.gradient(p, r) * g.gradient(p, t) + f(p) * g.hessian(p, r, t);
        };
    s.adapted_up_to = max_horizon(f.adapted_up_to(), g.adapted_up_to());
    if (f.bound() && g.bound()) s.bound = *f.bound() * *g.bound();
    s.breakpoints = merged(f.breakpoints(), g.breakpoints());
    s.left_limit_safe = f.left_limit_safe() && g.left_limit_safe();
    s.jump_blind = f.jump_blind() && g.jump_blind();
    s.brownian_blind = f.brownian_blind() && g.brownian_blind();
    if (f.jump_degree() && g.jump_degree()) s.jump_degree = *f.jump_degree() + *g.jump_degree();
    return RandomFunctional(std::move(s));
}

RandomFunctional scale(double a, const RandomFunctional& f) { return linear_combination(a, f, 0.0, constant(0.0)); }

}  // namespace catalog

namespace {

void check_jump_point(const CanonicalPath& path, double t, double x) {
    if (x == 0.0) throw InvalidArgument("psi: undefined at x = 0");
    if (!(t > 0.0 && t <= path.horizon())) throw InvalidArgument("psi: t must lie in (0, T]");
}

}  // namespace

double psi(const RandomFunctional& f, const CanonicalPath& path, double t, double x) {
    check_jump_point(path, t, x);
    if (f.jump_blind()) return 0.0;
    return (f(add_jump(path, t, x)) - f(path)) / x;
}

double brownian_derivative(const RandomFunctional& f, const CanonicalPath& path, double t,
                           std::optional<FiniteDifference> fd) {
    if (t < 0.0 || t > path.horizon()) throw InvalidArgument("brownian_derivative: t outside [0, T]");
    if (!fd) {
        if (f.has_gradient()) return f.gradient(path, t);
        fd = FiniteDifference{};
    }
    const auto w = path.brownian();
    double h = fd->h;
    if (h == 0.0) {
        double wmax = 0.0;
        for (double v : w) wmax = std::max(wmax, std::abs(v));
        h = 1e-5 * (1.0 + wmax);
    }
    if (!(h > 0.0) || !std::isfinite(h)) throw InvalidArgument("brownian_derivative: step must be positive");
    const int k = path.grid().cell_of(t);
    std::vector<double> up(w.begin(), w.end()), down(w.begin(), w.end());
    for (std::size_t j = static_cast<std::size_t>(k) + 1; j < up.size(); ++j) {
        up[j] += h;
        down[j] -= h;
    }
    return (f(path.with_brownian(std::move(up))) - f(path.with_brownian(std::move(down)))) / (2.0 * h);
}

double malliavin_D(const RandomFunctional& f, const CanonicalPath& path, double t, double x, double sigma) {
    if (x != 0.0) return psi(f, path, t, x);
    if (!(sigma > 0.0)) throw InvalidArgument("malliavin_D: the x = 0 slice needs sigma > 0");
    return brownian_derivative(f, path, t) / sigma;
}

ProductRuleSides psi_product_check(const RandomFunctional& f, const RandomFunctional& g, const CanonicalPath& path,
                                   double t, double x) {
    check_jump_point(path, t, x);
    const CanonicalPath shifted = add_jump(path, t, x);
    const double fz = f(shifted), f0 = f(path), gz = g(shifted), g0 = g(path);
    const double psi_f = (fz - f0) / x;
    const double psi_g = (gz - g0) / x;
    ProductRuleSides out;
    out.lhs = (fz * gz - f0 * g0) / x;
    out.rhs = psi_f * g0 + f0 * psi_g + (fz - f0) * psi_g;
    out.scale = (std::abs(fz) + std::abs(f0)) * (std::abs(gz) + std::abs(g0)) / std::abs(x);
    return out;
}

double left_limit_eval(const RandomFunctional& f, const CanonicalPath& path, double s) {
    if (!f.left_limit_safe()) throw UnsupportedOperation(f.name() + ": left limits are not available");
    return f(mask_jumps_at(path, s));
}

}  // namespace levycalc
