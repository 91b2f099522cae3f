#pragma once

// Levy triplet, Levy measure, shell partition of the nonzero reals and the
// control measure mu = sigma^2 dt (x = 0 slice) + x^2 dt dnu(x) (x != 0).

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace levycalc {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Real interval with independently open/closed endpoints.
struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    bool lo_closed = false;
    bool hi_closed = true;

    bool contains(double x) const;
    bool empty() const;
    double length() const { return empty() ? 0.0 : hi - lo; }
};

Interval intersect(const Interval& a, const Interval& b);

/// A set of jump sizes: an optional x = 0 slice plus a finite union of
/// intervals of nonzero values. The point 0 is only ever represented by the
/// flag, never by an interval.
class ValueSet {
public:
    ValueSet() = default;

    static ValueSet zero();
    static ValueSet point(double x);
    static ValueSet interval(double lo, double hi, bool lo_closed = false, bool hi_closed = true);
    /// {a < |x| <= b}; b may be infinite.
    static ValueSet abs_range(double a, double b, bool b_closed = true);
    static ValueSet nonzero();
    static ValueSet everything();

    ValueSet unite(const ValueSet& other) const;
    ValueSet intersect(const ValueSet& other) const;
    ValueSet without_zero() const;

    bool has_zero() const { return zero_; }
    bool has_nonzero() const;
    bool empty() const { return !zero_ && !has_nonzero(); }
    bool contains(double x) const;
    bool intersects(const ValueSet& other) const;
    bool operator==(const ValueSet& other) const;
    const std::vector<Interval>& parts() const { return parts_; }

private:
    bool zero_ = false;
    std::vector<Interval> parts_;
};

/// Half-open time interval (a, b].
struct TimeInterval {
    double a = 0.0;
    double b = 0.0;

    double length() const { return b > a ? b - a : 0.0; }
    bool contains(double t) const { return a < t && t <= b; }
    bool operator==(const TimeInterval&) const = default;
};

TimeInterval intersect(const TimeInterval& s, const TimeInterval& t);

/// Product region E = (a, b] x V in [0,T] x R.
struct ProductRegion {
    TimeInterval time;
    ValueSet values;

    bool contains(double t, double x) const { return time.contains(t) && values.contains(x); }
    bool operator==(const ProductRegion& other) const {
        return time == other.time && values == other.values;
    }
};

bool disjoint(const ProductRegion& e, const ProductRegion& f);
ProductRegion intersect(const ProductRegion& e, const ProductRegion& f);

struct Atom {
    double location;
    double mass;
};

/// Absolutely continuous Levy measure given by a density on a finite union
/// of intervals that stay away from, or integrably vanish at, the origin.
struct DensitySpec {
    std::string name;
    std::function<double(double)> density;
    std::vector<Interval> support;
    int resolution = 2000;  // midpoint panels per unit support length scale
};

/// Result of a numerically checked integral; `finite` is false when the
/// quadrature does not settle as the resolution is refined.
struct MomentResult {
    double value = 0.0;
    bool finite = true;
    int resolution = 0;
};

/// One quadrature cell of nu: an atom (lo == hi) or a midpoint panel.
/// Moments are nu-integrals over the cell of 1, x and x^2.
struct JumpCell {
    double lo = 0.0;
    double hi = 0.0;
    double rep = 0.0;
    double mass = 0.0;
    double m1 = 0.0;
    double m2 = 0.0;
    int shell = 0;

    bool is_atom() const { return lo == hi; }
    /// Right x-endpoint, the representative used by frozen-derivative cells.
    double right() const { return hi; }
};

class LevyMeasure {
public:
    LevyMeasure() = default;

    static LevyMeasure none();
    static LevyMeasure atoms(std::vector<Atom> atoms);
    static LevyMeasure density(DensitySpec spec);
    /// c * exp(-|x| / scale) on inner < |x| <= outer.
    static LevyMeasure two_sided_exponential(double c, double scale, double inner, double outer,
                                             int resolution = 2000);
    /// c * |x|^(-1-alpha) on 0 < |x| <= outer (infinite activity).
    static LevyMeasure power_law(double c, double alpha, double outer, int resolution = 4000);

    bool is_discrete() const { return std::holds_alternative<std::vector<Atom>>(spec_); }
    bool is_empty() const;
    const std::vector<Atom>& atom_list() const;
    const DensitySpec& density_spec() const;

    /// Integral of |x|^p over `region` (x = 0 excluded); p in {0, 1, 2}.
    MomentResult abs_moment(const ValueSet& region, int p) const;
    /// Signed first moment: integral of x over `region`.
    double signed_moment(const ValueSet& region) const;
    /// Quadrature cells of nu restricted to `region` with `floor < |x|`.
    std::vector<JumpCell> cells(const ValueSet& region, double floor = 0.0) const;

private:
    std::variant<std::monostate, std::vector<Atom>, DensitySpec> spec_;
};

/// Levy triplet (gamma, sigma^2, nu) on the horizon [0, T].
class LevyModel {
public:
    LevyModel(double gamma, double sigma, LevyMeasure nu, double horizon);

    double gamma() const { return gamma_; }
    double sigma() const { return sigma_; }
    const LevyMeasure& nu() const { return nu_; }
    double horizon() const { return horizon_; }
    /// Resolution at which the second-moment check was verified (0 for atoms).
    int second_moment_resolution() const { return second_moment_resolution_; }

private:
    double gamma_;
    double sigma_;
    LevyMeasure nu_;
    double horizon_;
    int second_moment_resolution_ = 0;
};

struct Shell {
    int index = 0;          // 1-based, matching S_1 = {|x| > 1}
    double lower = 0.0;     // S_k = {lower < |x| <= upper}
    double upper = kInf;
    double intensity = 0.0; // lambda_k = nu(S_k)
    double drift = 0.0;     // integral of x over S_k
    std::vector<JumpCell> cells;  // jump law Q_k = cell masses / intensity

    ValueSet values() const { return ValueSet::abs_range(lower, upper, upper != kInf); }
};

/// Shells S_1 = {|x| > eps_1 = 1}, S_k = {eps_k < |x| <= eps_{k-1}} with
/// eps_k = ratio^(k-1). Only shells with positive nu-mass are retained.
class ShellPartition {
public:
    ShellPartition() = default;
    ShellPartition(std::vector<double> epsilons, std::vector<Shell> retained)
        : epsilons_(std::move(epsilons)), retained_(std::move(retained)) {}

    const std::vector<double>& epsilons() const { return epsilons_; }
    const std::vector<Shell>& retained() const { return retained_; }
    bool empty() const { return retained_.empty(); }
    int depth() const { return static_cast<int>(epsilons_.size()); }
    /// Truncation floor eps_K: no sampled jump has |x| <= floor.
    double floor() const { return epsilons_.empty() ? 1.0 : epsilons_.back(); }
    /// Shell index containing x, or 0 when |x| lies below the floor.
    int shell_of(double x) const;
    double total_intensity() const;

private:
    std::vector<double> epsilons_;
    std::vector<Shell> retained_;
};

ShellPartition shell_partition(const LevyModel& model, int depth, double ratio = 0.5);

/// Quadrature cells of nu over `region` restricted to the retained shells.
std::vector<JumpCell> jump_cells(const LevyModel& model, const ShellPartition& partition,
                                 const ValueSet& region);

/// Control measure of E, using the full Levy measure.
double mu_measure(const LevyModel& model, const ProductRegion& region);
/// Control measure of E restricted to what the truncated partition simulates.
double mu_measure(const LevyModel& model, const ShellPartition& partition,
                  const ProductRegion& region);

/// Integral of |x|^p dnu over `region`.
MomentResult nu_moment(const LevyModel& model, const ValueSet& region, int p);

/// nu-second moment of region at or below the truncation floor (mass the
/// simulation never sees).
double untruncated_second_moment(const LevyModel& model, const ShellPartition& partition,
                                 const ValueSet& region);

}  // namespace levycalc
