#include "levycalc/levy_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "levycalc/errors.hpp"

namespace levycalc {

bool Interval::contains(double x) const {
    const bool above = lo_closed ? x >= lo : x > lo;
    const bool below = hi_closed ? x <= hi : x < hi;
    return above && below;
}

bool Interval::empty() const {
    if (lo > hi) return true;
    if (lo == hi) return !(lo_closed && hi_closed);
    return false;
}

Interval intersect(const Interval& a, const Interval& b) {
    Interval r;
    if (a.lo > b.lo) {
        r.lo = a.lo;
        r.lo_closed = a.lo_closed;
    } else if (b.lo > a.lo) {
        r.lo = b.lo;
        r.lo_closed = b.lo_closed;
    } else {
        r.lo = a.lo;
        r.lo_closed = a.lo_closed && b.lo_closed;
    }
    if (a.hi < b.hi) {
        r.hi = a.hi;
        r.hi_closed = a.hi_closed;
    } else if (b.hi < a.hi) {
        r.hi = b.hi;
        r.hi_closed = b.hi_closed;
    } else {
        r.hi = a.hi;
        r.hi_closed = a.hi_closed && b.hi_closed;
    }
    return r;
}

namespace {

// Sort and merge overlapping or touching intervals so that integrals over a
// ValueSet never count a point twice.
std::vector<Interval> normalize(std::vector<Interval> parts) {
    std::erase_if(parts, [](const Interval& i) { return i.empty(); });
    std::sort(parts.begin(), parts.end(), [](const Interval& a, const Interval& b) {
        if (a.lo != b.lo) return a.lo < b.lo;
        return a.lo_closed && !b.lo_closed;
    });
    std::vector<Interval> merged;
    for (const auto& p : parts) {
        if (!merged.empty()) {
            Interval& last = merged.back();
            const bool overlaps = p.lo < last.hi || (p.lo == last.hi && (p.lo_closed || last.hi_closed));
            if (overlaps) {
                if (p.hi > last.hi) {
                    last.hi = p.hi;
                    last.hi_closed = p.hi_closed;
                } else if (p.hi == last.hi) {
                    last.hi_closed = last.hi_closed || p.hi_closed;
                }
                continue;
            }
        }
        merged.push_back(p);
    }
    return merged;
}

}  // namespace

ValueSet ValueSet::zero() {
    ValueSet v;
    v.zero_ = true;
    return v;
}

ValueSet ValueSet::point(double x) {
    if (x == 0.0) return zero();
    return interval(x, x, true, true);
}

ValueSet ValueSet::interval(double lo, double hi, bool lo_closed, bool hi_closed) {
    ValueSet v;
    v.parts_ = normalize({Interval{lo, hi, lo_closed, hi_closed}});
    return v;
}

ValueSet ValueSet::abs_range(double a, double b, bool b_closed) {
    if (a < 0.0) throw InvalidArgument("abs_range: lower bound must be non-negative");
    ValueSet v;
    const bool closed = b_closed && std::isfinite(b);
    v.parts_ = normalize({Interval{-b, -a, closed, false}, Interval{a, b, false, closed}});
    return v;
}

ValueSet ValueSet::nonzero() { return interval(-kInf, kInf, false, false); }

ValueSet ValueSet::everything() {
    ValueSet v = nonzero();
    v.zero_ = true;
    return v;
}

ValueSet ValueSet::unite(const ValueSet& other) const {
    ValueSet v;
    v.zero_ = zero_ || other.zero_;
    auto parts = parts_;
    parts.insert(parts.end(), other.parts_.begin(), other.parts_.end());
    v.parts_ = normalize(std::move(parts));
    return v;
}

ValueSet ValueSet::intersect(const ValueSet& other) const {
    ValueSet v;
    v.zero_ = zero_ && other.zero_;
    std::vector<Interval> parts;
    for (const auto& a : parts_)
        for (const auto& b : other.parts_) parts.push_back(levycalc::intersect(a, b));
    v.parts_ = normalize(std::move(parts));
    return v;
}

ValueSet ValueSet::without_zero() const {
    ValueSet v = *this;
    v.zero_ = false;
    return v;
}

bool ValueSet::has_nonzero() const {
    // An interval that is exactly the point 0 carries no nonzero value.
    return std::any_of(parts_.begin(), parts_.end(), [](const Interval& i) {
        return !(i.lo == 0.0 && i.hi == 0.0);
    });
}

bool ValueSet::contains(double x) const {
    if (x == 0.0) return zero_;
    return std::any_of(parts_.begin(), parts_.end(), [x](const Interval& i) { return i.contains(x); });
}

bool ValueSet::intersects(const ValueSet& other) const {
    if (zero_ && other.zero_) return true;
    for (const auto& a : parts_)
        for (const auto& b : other.parts_) {
            const Interval c = levycalc::intersect(a, b);
            if (!c.empty() && !(c.lo == 0.0 && c.hi == 0.0)) return true;
        }
    return false;
}

bool ValueSet::operator==(const ValueSet& other) const {
    if (zero_ != other.zero_ || parts_.size() != other.parts_.size()) return false;
    for (std::size_t i = 0; i < parts_.size(); ++i) {
        const auto& a = parts_[i];
        const auto& b = other.parts_[i];
        if (a.lo != b.lo || a.hi != b.hi || a.lo_closed != b.lo_closed || a.hi_closed != b.hi_closed)
            return false;
    }
    return true;
}

TimeInterval intersect(const TimeInterval& s, const TimeInterval& t) {
    TimeInterval r{std::max(s.a, t.a), std::min(s.b, t.b)};
    if (r.b < r.a) r.b = r.a;
    return r;
}

bool disjoint(const ProductRegion& e, const ProductRegion& f) {
    if (intersect(e.time, f.time).length() <= 0.0) return true;
    return !e.values.intersects(f.values);
}

ProductRegion intersect(const ProductRegion& e, const ProductRegion& f) {
    return ProductRegion{intersect(e.time, f.time), e.values.intersect(f.values)};
}

// ---------------------------------------------------------------------------

LevyMeasure LevyMeasure::none() { return LevyMeasure{}; }

LevyMeasure LevyMeasure::atoms(std::vector<Atom> atoms) {
    for (const auto& a : atoms) {
        if (a.location == 0.0) throw InvalidArgument("Levy measure: atom at 0 is not allowed");
        if (!(a.mass > 0.0) || !std::isfinite(a.mass))
            throw InvalidArgument("Levy measure: atom mass must be positive and finite");
        if (!std::isfinite(a.location)) throw InvalidArgument("Levy measure: atom location must be finite");
    }
    LevyMeasure m;
    if (!atoms.empty()) m.spec_ = std::move(atoms);
    return m;
}

LevyMeasure LevyMeasure::density(DensitySpec spec) {
    if (!spec.density) throw InvalidArgument("Levy measure: density function missing");
    if (spec.resolution <= 0) throw InvalidArgument("Levy measure: quadrature resolution must be positive");
    for (const auto& s : spec.support) {
        if (s.contains(0.0)) throw InvalidArgument("Levy measure: density support must exclude 0");
    }
    LevyMeasure m;
    m.spec_ = std::move(spec);
    return m;
}

LevyMeasure LevyMeasure::two_sided_exponential(double c, double scale, double inner, double outer,
                                               int resolution) {
    if (!(c > 0.0) || !(scale > 0.0) || !(inner > 0.0) || !(outer > inner))
        throw InvalidArgument("two_sided_exponential: need c, scale > 0 and 0 < inner < outer");
    DensitySpec spec;
    spec.name = "two_sided_exponential";
    spec.density = [c, scale](double x) { return c * std::exp(-std::abs(x) / scale); };
    spec.support = {Interval{-outer, -inner, true, false}, Interval{inner, outer, false, true}};
    spec.resolution = resolution;
    return density(std::move(spec));
}

LevyMeasure LevyMeasure::power_law(double c, double alpha, double outer, int resolution) {
    if (!(c > 0.0) || !(alpha > 0.0) || !(outer > 0.0))
        throw InvalidArgument("power_law: need c, alpha, outer > 0");
    DensitySpec spec;
    spec.name = "power_law";
    spec.density = [c, alpha](double x) { return c * std::pow(std::abs(x), -1.0 - alpha); };
    spec.support = {Interval{-outer, 0.0, true, false}, Interval{0.0, outer, false, true}};
    spec.resolution = resolution;
    return density(std::move(spec));
}

bool LevyMeasure::is_empty() const { return std::holds_alternative<std::monostate>(spec_); }

const std::vector<Atom>& LevyMeasure::atom_list() const {
    static const std::vector<Atom> kEmpty;
    if (const auto* a = std::get_if<std::vector<Atom>>(&spec_)) return *a;
    return kEmpty;
}

const DensitySpec& LevyMeasure::density_spec() const {
    if (const auto* d = std::get_if<DensitySpec>(&spec_)) return *d;
    throw UnsupportedOperation("Levy measure is not a density");
}

namespace {

double support_length(const DensitySpec& spec) {
    double total = 0.0;
    for (const auto& s : spec.support) total += s.length();
    return total;
}

// Midpoint panels of the density on region ∩ support ∩ {|x| > floor}.
std::vector<JumpCell> density_cells(const DensitySpec& spec, const ValueSet& region, double floor,
                                    int resolution) {
    const ValueSet gate = ValueSet::abs_range(floor, kInf, false);
    const ValueSet clipped = region.without_zero().intersect(gate);
    const double total = support_length(spec);
    std::vector<JumpCell> cells;
    for (const auto& s : spec.support) {
        for (const auto& r : clipped.parts()) {
            const Interval piece = intersect(s, r);
            if (piece.empty() || piece.length() <= 0.0) continue;
            const int panels =
                std::max(4, static_cast<int>(std::ceil(resolution * piece.length() / total)));
            const double w = piece.length() / panels;
            for (int i = 0; i < panels; ++i) {
                JumpCell c;
                c.lo = piece.lo + i * w;
                c.hi = (i + 1 == panels) ? piece.hi : piece.lo + (i + 1) * w;
                c.rep = 0.5 * (c.lo + c.hi);
                c.mass = spec.density(c.rep) * (c.hi - c.lo);
                c.m1 = c.rep * c.mass;
                c.m2 = c.rep * c.rep * c.mass;
                cells.push_back(c);
            }
        }
    }
    return cells;
}

double cell_moment(const std::vector<JumpCell>& cells, int p) {
    double sum = 0.0;
    for (const auto& c : cells) {
        switch (p) {
            case 0: sum += c.mass; break;
            case 1: sum += std::abs(c.m1); break;
            default: sum += c.m2; break;
        }
    }
    return sum;
}

}  // namespace

MomentResult LevyMeasure::abs_moment(const ValueSet& region, int p) const {
    if (p < 0 || p > 2) throw InvalidArgument("abs_moment: p must be 0, 1 or 2");
    MomentResult out;
    if (const auto* atoms = std::get_if<std::vector<Atom>>(&spec_)) {
        for (const auto& a : *atoms)
            if (region.contains(a.location)) out.value += std::pow(std::abs(a.location), p) * a.mass;
        return out;
    }
    if (const auto* spec = std::get_if<DensitySpec>(&spec_)) {
        const double coarse = cell_moment(density_cells(*spec, region, 0.0, spec->resolution), p);
        const double fine = cell_moment(density_cells(*spec, region, 0.0, 2 * spec->resolution), p);
        out.value = fine;
        out.resolution = 2 * spec->resolution;
        const double diff = std::abs(fine - coarse);
        out.finite = std::isfinite(fine) && (diff <= 1e-2 * std::abs(fine) || diff <= 1e-12);
        return out;
    }
    return out;
}

double LevyMeasure::signed_moment(const ValueSet& region) const {
    double sum = 0.0;
    for (const auto& c : cells(region)) sum += c.m1;
    return sum;
}

std::vector<JumpCell> LevyMeasure::cells(const ValueSet& region, double floor) const {
    std::vector<JumpCell> out;
    if (const auto* atoms = std::get_if<std::vector<Atom>>(&spec_)) {
        for (const auto& a : *atoms) {
            if (!region.contains(a.location) || std::abs(a.location) <= floor) continue;
            JumpCell c;
            c.lo = c.hi = c.rep = a.location;
            c.mass = a.mass;
            c.m1 = a.location * a.mass;
            c.m2 = a.location * a.location * a.mass;
            out.push_back(c);
        }
    } else if (const auto* spec = std::get_if<DensitySpec>(&spec_)) {
        out = density_cells(*spec, region, floor, spec->resolution);
    }
    return out;
}

LevyModel::LevyModel(double gamma, double sigma, LevyMeasure nu, double horizon)
    : gamma_(gamma), sigma_(sigma), nu_(std::move(nu)), horizon_(horizon) {
    if (!(horizon_ > 0.0) || !std::isfinite(horizon_)) throw InvalidArgument("LevyModel: horizon T must be > 0");
    if (!(sigma_ >= 0.0) || !std::isfinite(sigma_)) throw InvalidArgument("LevyModel: sigma must be >= 0");
    if (!std::isfinite(gamma_)) throw InvalidArgument("LevyModel: gamma must be finite");
    const MomentResult second = nu_.abs_moment(ValueSet::nonzero(), 2);
    if (!second.finite || !std::isfinite(second.value)) {
        std::ostringstream os;
        os << "LevyModel: second moment of nu not finite at resolution " << second.resolution;
        throw InvalidArgument(os.str());
    }
    second_moment_resolution_ = second.resolution;
}

int ShellPartition::shell_of(double x) const {
    const double a = std::abs(x);
    if (epsilons_.empty()) return a > 1.0 ? 1 : 0;
    if (a > epsilons_.front()) return 1;
    for (std::size_t k = 1; k < epsilons_.size(); ++k)
        if (a > epsilons_[k]) return static_cast<int>(k) + 1;
    return 0;
}

double ShellPartition::total_intensity() const {
    double sum = 0.0;
    for (const auto& s : retained_) sum += s.intensity;
    return sum;
}

ShellPartition shell_partition(const LevyModel& model, int depth, double ratio) {
    if (depth < 1) throw InvalidArgument("shell_partition: depth K must be >= 1");
    if (!(ratio > 0.0 && ratio < 1.0)) throw InvalidArgument("shell_partition: ratio must lie in (0, 1)");
    std::vector<double> eps(depth);
    for (int k = 0; k < depth; ++k) eps[k] = std::pow(ratio, k);
    std::vector<Shell> retained;
    for (int k = 1; k <= depth; ++k) {
        Shell s;
        s.index = k;
        s.lower = eps[k - 1];
        s.upper = (k == 1) ? kInf : eps[k - 2];
        const ValueSet values = s.values();
        s.cells = model.nu().cells(values);
        for (auto& c : s.cells) {
            c.shell = k;
            s.intensity += c.mass;
            s.drift += c.m1;
        }
        if (s.intensity > 0.0) retained.push_back(std::move(s));
    }
    return ShellPartition(std::move(eps), std::move(retained));
}

std::vector<JumpCell> jump_cells(const LevyModel& model, const ShellPartition& partition,
                                 const ValueSet& region) {
    std::vector<JumpCell> out;
    if (!region.has_nonzero()) return out;
    for (const auto& shell : partition.retained()) {
        auto cells = model.nu().cells(region.intersect(shell.values()));
        for (auto& c : cells) {
            c.shell = shell.index;
            out.push_back(c);
        }
    }
    return out;
}

double mu_measure(const LevyModel& model, const ProductRegion& region) {
    const double len = region.time.length();
    if (len <= 0.0) return 0.0;
    double total = 0.0;
    if (region.values.has_zero()) total += model.sigma() * model.sigma() * len;
    if (region.values.has_nonzero()) total += len * model.nu().abs_moment(region.values.without_zero(), 2).value;
    return total;
}

double mu_measure(const LevyModel& model, const ShellPartition& partition, const ProductRegion& region) {
    const double len = region.time.length();
    if (len <= 0.0) return 0.0;
    double total = 0.0;
    if (region.values.has_zero()) total += model.sigma() * model.sigma() * len;
    for (const auto& c : jump_cells(model, partition, region.values)) total += len * c.m2;
    return total;
}

MomentResult nu_moment(const LevyModel& model, const ValueSet& region, int p) {
    return model.nu().abs_moment(region.without_zero(), p);
}

double untruncated_second_moment(const LevyModel& model, const ShellPartition& partition,
                                 const ValueSet& region) {
    const ValueSet below = region.without_zero().intersect(ValueSet::abs_range(0.0, partition.floor(), true));
    return model.nu().abs_moment(below, 2).value;
}

}  // namespace levycalc
