#pragma once

// Random variables F(omega) on the canonical space together with the
// metadata the calculus needs: an optional exact Brownian gradient t -> D^W_t F
// (and its second derivative), adaptedness, a bound, and the times where
// t -> D_{t,x} F can change value.

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "levycalc/canonical_path.hpp"

namespace levycalc {

class RandomFunctional {
public:
    using Eval = std::function<double(const CanonicalPath&)>;
    using Gradient = std::function<double(const CanonicalPath&, double t)>;
    using Hessian = std::function<double(const CanonicalPath&, double r, double t)>;

    struct Spec {
        std::string name;
        Eval eval;
        Gradient gradient;                     // D^W_t F, if known exactly
        Hessian hessian;                       // D^W_r D^W_t F, if known exactly
        std::optional<double> adapted_up_to;   // F depends on the path on [0, tau] only
        std::optional<double> bound;           // |F| <= bound
        std::vector<double> breakpoints;       // t -> D_{t,x}F is constant between these
        bool left_limit_safe = true;
        bool jump_blind = false;               // Psi F == 0
        bool brownian_blind = false;           // D^W F == 0
        std::optional<int> jump_degree;        // Psi applied more than this many times gives 0
    };

    RandomFunctional() = default;
    explicit RandomFunctional(Spec spec);

    double operator()(const CanonicalPath& path) const { return impl_->eval(path); }

    const std::string& name() const { return impl_->name; }
    bool has_gradient() const { return static_cast<bool>(impl_->gradient) || impl_->brownian_blind; }
    bool has_hessian() const { return static_cast<bool>(impl_->hessian) || impl_->brownian_blind; }
    /// Exact D^W_t F; throws UnsupportedOperation without an analytic gradient.
    double gradient(const CanonicalPath& path, double t) const;
    double hessian(const CanonicalPath& path, double r, double t) const;
    const std::optional<double>& adapted_up_to() const { return impl_->adapted_up_to; }
    const std::optional<double>& bound() const { return impl_->bound; }
    const std::vector<double>& breakpoints() const { return impl_->breakpoints; }
    bool left_limit_safe() const { return impl_->left_limit_safe; }
    bool jump_blind() const { return impl_->jump_blind; }
    bool brownian_blind() const { return impl_->brownian_blind; }
    const std::optional<int>& jump_degree() const { return impl_->jump_degree; }
    const Spec& spec() const { return *impl_; }
    bool valid() const { return static_cast<bool>(impl_); }

private:
    std::shared_ptr<const Spec> impl_;
};

/// Smooth function of n real arguments with all first and second partials.
struct SmoothHead {
    std::string name;
    std::function<double(std::span<const double>)> value;
    std::function<double(std::span<const double>, int i)> partial;
    std::function<double(std::span<const double>, int i, int j)> second_partial;
    std::optional<double> bound;
};

namespace heads {
SmoothHead identity();
SmoothHead sine();
SmoothHead cosine();
/// sum_i c_i x_i.
SmoothHead linear(std::vector<double> coefficients);
/// prod_i x_i.
SmoothHead product(int arity);
/// sin(x_1) cos(x_2) ... alternating; bounded test head of any arity.
SmoothHead trig_mix(int arity);
}  // namespace heads

namespace catalog {
RandomFunctional constant(double c);
/// W(tau).
RandomFunctional brownian_at(double tau);
RandomFunctional sin_brownian(double tau);
RandomFunctional cos_brownian(double tau);
/// f(W(t_1), ..., W(t_n)) Z with Z a functional of the jumps only.
RandomFunctional cylindrical(SmoothHead head, std::vector<double> times,
                             std::optional<RandomFunctional> jump_factor = std::nullopt);
/// Sum of jump sizes up to tau.
RandomFunctional jump_sum(double tau);
/// (jump sum up to tau)^2.
RandomFunctional jump_sum_sq(double tau);
/// Number of jumps up to tau with |x| > threshold.
RandomFunctional jump_count(double tau, double threshold = 0.0);
/// sum over jumps up to tau of rho_n(x) = x exp(-(x/n)^2).
RandomFunctional mollified_jump_sum(double n, double tau);
/// g(X_tau) for smooth g with derivatives g1, g2.
RandomFunctional smooth_of_X(std::string name, std::function<double(double)> g, std::function<double(double)> g1,
                             std::function<double(double)> g2, double tau, LevyModel model,
                             ShellPartition partition, std::optional<double> bound = std::nullopt);
/// cos(theta X_tau), bounded by 1.
RandomFunctional cos_of_X(double theta, double tau, LevyModel model, ShellPartition partition);

RandomFunctional linear_combination(double a, const RandomFunctional& f, double b, const RandomFunctional& g);
RandomFunctional product(const RandomFunctional& f, const RandomFunctional& g);
RandomFunctional scale(double a, const RandomFunctional& f);
}  // namespace catalog

/// (F(omega_{t,x}) - F(omega)) / x.
double psi(const RandomFunctional& f, const CanonicalPath& path, double t, double x);

struct FiniteDifference {
    double h = 0.0;  // 0 selects 1e-5 (1 + max |W|)
};

/// D^W_t F. Analytic when the functional carries a gradient, else (or when
/// `fd` is given) a central difference that shifts every Brownian increment
/// of the grid cell containing t, i.e. the direction whose derivative is
/// 1 / dt on that cell.
double brownian_derivative(const RandomFunctional& f, const CanonicalPath& path, double t,
                           std::optional<FiniteDifference> fd = std::nullopt);

/// D_{t,x}F = sigma^{-1} D^W_t F on x = 0 and Psi_{t,x}F on x != 0.
double malliavin_D(const RandomFunctional& f, const CanonicalPath& path, double t, double x, double sigma);

struct ProductRuleSides {
    double lhs = 0.0;  // Psi(FG)
    double rhs = 0.0;  // (Psi F) G + F Psi G + (F(omega_z) - F) Psi G
    double scale = 0.0;  // magnitude against which rounding is measured
};

ProductRuleSides psi_product_check(const RandomFunctional& f, const RandomFunctional& g, const CanonicalPath& path,
                                   double t, double x);

/// F evaluated with every jump at exactly time s removed.
double left_limit_eval(const RandomFunctional& f, const CanonicalPath& path, double s);

}  // namespace levycalc
