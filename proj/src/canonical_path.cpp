#include "levycalc/canonical_path.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <nlohmann/json.hpp>

#include "levycalc/errors.hpp"
#include "levycalc/rng.hpp"

namespace levycalc {

TimeGrid::TimeGrid(std::vector<double> times) {
    if (times.size() < 2) throw InvalidArgument("TimeGrid: need at least two nodes");
    if (times.front() != 0.0) throw InvalidArgument("TimeGrid: first node must be 0");
    for (std::size_t i = 1; i < times.size(); ++i)
        if (!(times[i] > times[i - 1])) throw InvalidArgument("TimeGrid: nodes must be strictly increasing");
    times_ = std::make_shared<const std::vector<double>>(std::move(times));
}

TimeGrid TimeGrid::uniform(double horizon, int cells) {
    if (cells < 1) throw InvalidArgument("TimeGrid: need at least one cell");
    if (!(horizon > 0.0)) throw InvalidArgument("TimeGrid: horizon must be positive");
    std::vector<double> t(cells + 1);
    for (int i = 0; i <= cells; ++i) t[i] = horizon * static_cast<double>(i) / cells;
    t.back() = horizon;
    return TimeGrid(std::move(t));
}

double TimeGrid::max_spacing() const {
    double m = 0.0;
    for (int k = 0; k < cells(); ++k) m = std::max(m, spacing(k));
    return m;
}

int TimeGrid::cell_of(double t) const {
    const auto& v = *times_;
    if (t <= v.front()) return 0;
    if (t >= v.back()) return cells() - 1;
    auto it = std::lower_bound(v.begin(), v.end(), t);  // first node >= t
    return static_cast<int>(it - v.begin()) - 1;
}

std::optional<int> TimeGrid::node_of(double t) const {
    const auto& v = *times_;
    auto it = std::lower_bound(v.begin(), v.end(), t);
    if (it != v.end() && *it == t) return static_cast<int>(it - v.begin());
    return std::nullopt;
}

namespace {

void validate_jumps(std::vector<Jump>& jumps, double horizon) {
    std::sort(jumps.begin(), jumps.end(), [](const Jump& a, const Jump& b) { return a.time < b.time; });
    for (std::size_t i = 0; i < jumps.size(); ++i) {
        const auto& j = jumps[i];
        if (j.size == 0.0) throw InvalidArgument("CanonicalPath: jump of size 0");
        if (!(j.time > 0.0 && j.time <= horizon)) throw InvalidArgument("CanonicalPath: jump time outside (0, T]");
        if (i > 0 && jumps[i - 1].time == j.time) throw InvalidArgument("CanonicalPath: tied jump times");
    }
}

}  // namespace

CanonicalPath::CanonicalPath(TimeGrid grid, std::vector<double> brownian, std::vector<Jump> jumps)
    : CanonicalPath(std::move(grid), std::make_shared<const std::vector<double>>(std::move(brownian)),
                    std::move(jumps)) {}

CanonicalPath::CanonicalPath(TimeGrid grid, std::shared_ptr<const std::vector<double>> brownian,
                             std::vector<Jump> jumps)
    : grid_(std::move(grid)), brownian_(std::move(brownian)), jumps_(std::move(jumps)) {
    if (brownian_->size() != grid_.size()) throw InvalidArgument("CanonicalPath: Brownian array does not match grid");
    if ((*brownian_)[0] != 0.0) throw InvalidArgument("CanonicalPath: W(0) must be 0");
    validate_jumps(jumps_, grid_.horizon());
}

double CanonicalPath::brownian_at(double t) const {
    const auto& w = *brownian_;
    if (t <= 0.0) return w.front();
    if (t >= grid_.horizon()) return w.back();
    const int k = grid_.cell_of(t);
    const double t0 = grid_[k];
    const double t1 = grid_[k + 1];
    if (t == t1) return w[k + 1];
    const double lambda = (t - t0) / (t1 - t0);
    return w[k] + lambda * (w[k + 1] - w[k]);
}

CanonicalPath CanonicalPath::with_brownian(std::vector<double> brownian) const {
    return CanonicalPath(grid_, std::make_shared<const std::vector<double>>(std::move(brownian)), jumps_);
}

CanonicalPath CanonicalPath::with_jumps(std::vector<Jump> jumps) const {
    return CanonicalPath(grid_, brownian_, std::move(jumps));
}

bool CanonicalPath::operator==(const CanonicalPath& other) const {
    return grid_ == other.grid_ && *brownian_ == *other.brownian_ && jumps_ == other.jumps_;
}

CanonicalPath add_jump(const CanonicalPath& path, double t, double x, const ShellPartition* partition) {
    if (x == 0.0) throw InvalidArgument("add_jump: jump size must be nonzero");
    if (!(t > 0.0 && t <= path.horizon())) throw InvalidArgument("add_jump: time must lie in (0, T]");
    const auto& jumps = path.jumps();
    auto collides = [&](double s) {
        return std::binary_search(jumps.begin(), jumps.end(), Jump{s, 0.0, 0},
                                  [](const Jump& a, const Jump& b) { return a.time < b.time; });
    };
    while (collides(t)) {
        t = std::nextafter(t, 0.0);
        if (!(t > 0.0)) throw InvalidArgument("add_jump: no free time left below the requested one");
    }
    int shell = 0;
    if (partition) {
        shell = partition->shell_of(x);
    } else {
        shell = std::abs(x) > 1.0 ? 1 : 2;
    }
    std::vector<Jump> out;
    out.reserve(jumps.size() + 1);
    auto pos = std::upper_bound(jumps.begin(), jumps.end(), t,
                                [](double s, const Jump& j) { return s < j.time; });
    out.insert(out.end(), jumps.begin(), pos);
    out.push_back(Jump{t, x, shell});
    out.insert(out.end(), pos, jumps.end());
    return path.with_jumps(std::move(out));
}

CanonicalPath remove_jump(const CanonicalPath& path, double t, double x) {
    std::vector<Jump> out = path.jumps();
    auto it = std::find_if(out.begin(), out.end(), [&](const Jump& j) { return j.time == t && j.size == x; });
    if (it == out.end()) throw InvalidArgument("remove_jump: no such jump");
    out.erase(it);
    return path.with_jumps(std::move(out));
}

CanonicalPath mask_jumps_at(const CanonicalPath& path, double s) {
    const auto& jumps = path.jumps();
    if (std::none_of(jumps.begin(), jumps.end(), [s](const Jump& j) { return j.time == s; })) return path;
    std::vector<Jump> out;
    out.reserve(jumps.size());
    for (const auto& j : jumps)
        if (j.time != s) out.push_back(j);
    return path.with_jumps(std::move(out));
}

CanonicalPath sample_path(const LevyModel& model, const ShellPartition& partition, const TimeGrid& grid,
                          std::uint64_t seed, std::uint64_t index) {
    Philox4x32 rng(seed, index);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> w(grid.size(), 0.0);
    if (model.sigma() > 0.0) {
        for (int k = 0; k < grid.cells(); ++k) w[k + 1] = w[k] + std::sqrt(grid.spacing(k)) * normal(rng);
    }
    const double horizon = grid.horizon();
    std::vector<Jump> jumps;
    auto taken = [&jumps](double t) {
        return std::any_of(jumps.begin(), jumps.end(), [t](const Jump& j) { return j.time == t; });
    };
    for (const auto& shell : partition.retained()) {
        std::poisson_distribution<long> count_law(shell.intensity * horizon);
        const long count = count_law(rng);
        for (long n = 0; n < count; ++n) {
            double t = horizon * rng.uniform_open();
            while (taken(t)) t = horizon * rng.uniform_open();
            double u = rng.uniform_open() * shell.intensity;
            std::size_t c = 0;
            while (c + 1 < shell.cells.size() && u > shell.cells[c].mass) {
                u -= shell.cells[c].mass;
                ++c;
            }
            const JumpCell& cell = shell.cells[c];
            double x = cell.lo;
            if (!cell.is_atom()) x = cell.lo + rng.uniform_open() * (cell.hi - cell.lo);
            jumps.push_back(Jump{t, x, shell.index});
        }
    }
    return CanonicalPath(grid, std::move(w), std::move(jumps));
}

namespace {

double compensated_drift(const ShellPartition& partition) {
    double drift = 0.0;
    for (const auto& s : partition.retained())
        if (s.index >= 2) drift += s.drift;
    return drift;
}

double x_value(const CanonicalPath& path, const LevyModel& model, const ShellPartition& partition, double t,
               bool left) {
    if (t < 0.0 || t > path.horizon()) throw InvalidArgument("evaluate_X: t outside [0, T]");
    double jumps = 0.0;
    for (const auto& j : path.jumps()) {
        if (j.time > t || (left && j.time == t)) break;
        jumps += j.size;
    }
    return model.gamma() * t + model.sigma() * path.brownian_at(t) + jumps - t * compensated_drift(partition);
}

}  // namespace

double evaluate_X(const CanonicalPath& path, const LevyModel& model, const ShellPartition& partition, double t) {
    return x_value(path, model, partition, t, false);
}

double evaluate_X_left(const CanonicalPath& path, const LevyModel& model, const ShellPartition& partition,
                       double t) {
    return x_value(path, model, partition, t, true);
}

std::vector<double> jump_times_above(const CanonicalPath& path, double eps, double up_to) {
    if (!(eps > 0.0)) throw InvalidArgument("jump_times_above: eps must be positive");
    std::vector<double> times{0.0};
    for (const auto& j : path.jumps())
        if (j.time <= up_to && std::abs(j.size) > eps) times.push_back(j.time);
    return times;
}

PathwiseIntegral pathwise_jtilde_integral(const CanonicalPath& path, const LevyModel& model,
                                          const ShellPartition& partition, const JumpField& v,
                                          const ValueSet& region, double t) {
    PathwiseIntegral out;
    const ValueSet jumps_region = region.without_zero();
    for (const auto& j : path.jumps()) {
        if (j.time > t) break;
        if (jumps_region.contains(j.size)) out.jump_sum += v(path, j.time, j.size) * j.size;
    }
    const auto cells = jump_cells(model, partition, jumps_region);
    const TimeGrid& grid = path.grid();
    for (int k = 0; k < grid.cells() && grid[k] < t; ++k) {
        const double len = std::min(grid[k + 1], t) - grid[k];
        double inner = 0.0;
        for (const auto& c : cells) inner += v(path, grid[k], c.rep) * c.m1;
        out.compensator += inner * len;
    }
    out.value = out.jump_sum - out.compensator;
    if (untruncated_second_moment(model, partition, jumps_region) > 0.0)
        out.warnings.push_back("region overlaps nu-mass below the truncation floor");
    return out;
}

std::string dump_path(const CanonicalPath& path, std::uint64_t index) {
    nlohmann::json record;
    record["index"] = index;
    const auto times = path.grid().times();
    record["grid"] = std::vector<double>(times.begin(), times.end());
    const auto w = path.brownian();
    record["brownian"] = std::vector<double>(w.begin(), w.end());
    nlohmann::json jumps = nlohmann::json::array();
    for (const auto& j : path.jumps()) jumps.push_back({j.time, j.size, j.shell});
    record["jumps"] = std::move(jumps);
    return record.dump();
}

}  // namespace levycalc
