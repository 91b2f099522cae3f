#pragma once

// Skorohod integrals of simple anticipating fields u = sum_j F_j h_j, the
// left-limit derivative D^-u, Sobolev-type seminorms and the pathwise
// bridge between the compensated-jump integral and delta.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "levycalc/canonical_path.hpp"
#include "levycalc/chaos.hpp"
#include "levycalc/functionals.hpp"

namespace levycalc {

/// h(t, x) = p(t) 1_{(a,b]}(t) 1_A(x) with p a polynomial in t.
struct Shape {
    TimeInterval time;
    ValueSet values;
    std::vector<double> poly{1.0};  // p(t) = sum_k poly[k] t^k

    static Shape box(TimeInterval time, ValueSet values, double c = 1.0) { return {time, std::move(values), {c}}; }

    double p(double t) const;
    /// int_a^b p(t) dt.
    double p_integral(double a, double b) const;
    double operator()(double t, double x) const { return time.contains(t) && values.contains(x) ? p(t) : 0.0; }
    Shape restricted(TimeInterval t, ValueSet v) const;
    bool is_box() const;
};

class SimpleRandomField {
public:
    struct Term {
        RandomFunctional F;
        Shape h;
        std::optional<ChaosExpansion> chaos;  // F as a finite chaos expansion, if known
    };
    /// Exact D^-_{s,y} u, when the caller knows it.
    using DMinusHook = std::function<double(const CanonicalPath&, double s, double y)>;

    SimpleRandomField() = default;
    explicit SimpleRandomField(std::vector<Term> terms, DMinusHook d_minus = {});

    const std::vector<Term>& terms() const { return terms_; }
    const DMinusHook& d_minus_hook() const { return d_minus_; }
    double operator()(const CanonicalPath& path, double t, double x) const;

private:
    std::vector<Term> terms_;
    DMinusHook d_minus_;
};

/// I_1(h 1_{[0,t]}) with the Brownian part integrated exactly against the
/// piecewise-linear W.
double first_chaos_integral(const CanonicalPath& path, const LevyModel& model, const ShellPartition& partition,
                            const Shape& h, double t);

/// int_{[0,t] x R} h(s, y) D_{s,y}F mu(ds, dy).
double integrate_against_D(const RandomFunctional& F, const CanonicalPath& path, const LevyModel& model,
                           const ShellPartition& partition, const Shape& h, double t);

enum class SkorohodStrategy { Factorization, Chaos, Both };

struct SkorohodOptions {
    SkorohodStrategy strategy = SkorohodStrategy::Factorization;
    int depth_cap = 2;
    double agreement_tolerance = 1e-8;
};

struct SkorohodResult {
    double value = 0.0;
    double remainder = 0.0;  // leading part of the first omitted recursion level
    int depth_reached = 0;
    std::optional<double> chaos_value;
    std::optional<double> difference;  // factorization minus chaos
    std::vector<std::string> warnings;
};

/// delta(u 1_{[0,t]}). Factorization uses
///   delta(F h) = F I_1(h) - delta(h x D F) - int h D F dmu
/// and recurses on the middle term with the jump frozen per (time piece,
/// jump cell), down to depth_cap levels.
SkorohodResult skorohod_simple(const SimpleRandomField& u, const CanonicalPath& path, const LevyModel& model,
                               const ShellPartition& partition, double t, const SkorohodOptions& options = {});

enum class DMinusMode { Analytic, AdaptedZero, Numeric };

struct DMinusResult {
    double value = 0.0;
    std::vector<double> offsets;  // Numeric: the Delta values used
    std::vector<double> sweep;    // D_{s,y} u(s - Delta, y) per offset
};

/// D^-_{s,y} u = lim_{r -> s-} D_{s,y} u(r, y).
DMinusResult d_minus(const SimpleRandomField& u, const CanonicalPath& path, const LevyModel& model, double s,
                     double y, DMinusMode mode, double offset = 0.0);

struct SeminormSample {
    double l2 = 0.0;      // int u^2 dmu
    double delta1 = 0.0;  // int_{s >= t} (D_{s,y} u(t,x))^2
    double delta2 = 0.0;  // int_{r or s >= t} (D_{r,x} D_{s,y} u(t,z))^2
};

SeminormSample seminorm_sample(const SimpleRandomField& u, const CanonicalPath& path, const LevyModel& model,
                               const ShellPartition& partition);

struct SeminormReport {
    double l2 = 0.0, l2_se = 0.0;
    double delta1 = 0.0, delta1_se = 0.0;
    double delta2 = 0.0, delta2_se = 0.0;
    double norm_12f = 0.0, norm_12f_se = 0.0;  // l2 + delta1
    double norm_f = 0.0, norm_f_se = 0.0;      // l2 + delta1 + delta2
};

SeminormReport seminorms(const SimpleRandomField& u, const PathEnsemble& ensemble, unsigned workers = 1);

struct EnergyBoundCheck {
    double delta_sq = 0.0, delta_sq_se = 0.0;  // E[delta(u)^2]
    double bound = 0.0, bound_se = 0.0;        // 2 ||u||_F^2
    double margin = 0.0, margin_se = 0.0;      // paired bound - delta^2
    bool holds = false;                        // margin >= -3 margin_se
};

EnergyBoundCheck energy_bound_check(const SimpleRandomField& u, const PathEnsemble& ensemble, unsigned workers = 1);

/// u(s-, y) as a function of the path, for the pathwise side of the bridge.
struct LeftLimitField {
    std::string name;
    JumpField value;
    JumpField d_minus;          // D^-_{s,y} u(s-, y); empty means numeric
    bool adapted = false;       // D_{s,y} u(r, .) = 0 for r < s
    double lipschitz_time = 0.0;  // |u(s,y) - u(r,y)| <= L |s - r| |y|^0
    double lipschitz_path = 0.0;  // |u(s,y) - u(r,y)| <= L |X_s - X_r|
};

struct BridgeSample {
    double lhs = 0.0;          // pathwise int u(s-, y) Jtilde(ds, dy)
    double delta_cells = 0.0;  // sum_c [U_c M(c) - int_c D U_c dmu]
    double dminus_term = 0.0;  // int int D^- u dmu
    double residual = 0.0;
};

BridgeSample bridge_sample(const LeftLimitField& u, const CanonicalPath& path, const LevyModel& model,
                           const ShellPartition& partition, const ValueSet& region, double t);

struct BridgeReport {
    double mean_residual = 0.0, residual_se = 0.0;
    double mean_abs_residual = 0.0, abs_residual_se = 0.0;
    double mean_lhs = 0.0, lhs_se = 0.0;
    double quadrature_bound = 0.0;
    bool holds = false;  // mean |residual| <= 3 SE + quadrature bound
    std::vector<std::string> warnings;
};

/// A priori bound on E|residual| from the left-point time discretization.
double bridge_quadrature_bound(const LeftLimitField& u, const LevyModel& model, const ShellPartition& partition,
                               const ValueSet& region, double t, double spacing);

BridgeReport pathwise_skorohod_bridge(const LeftLimitField& u, const PathEnsemble& ensemble, const ValueSet& region,
                                      double t, unsigned workers = 1);

}  // namespace levycalc
