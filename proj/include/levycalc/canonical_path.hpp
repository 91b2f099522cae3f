#pragma once

// One outcome omega of the canonical Levy space: a Brownian path on a fixed
// time grid and a finite, time-sorted list of jumps tagged with their shell.

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "levycalc/levy_model.hpp"

namespace levycalc {

/// Strictly increasing times 0 = t_0 < ... < t_M = T, shared between paths.
class TimeGrid {
public:
    TimeGrid() = default;
    explicit TimeGrid(std::vector<double> times);
    static TimeGrid uniform(double horizon, int cells);

    std::size_t size() const { return times_->size(); }
    int cells() const { return static_cast<int>(times_->size()) - 1; }
    double operator[](std::size_t i) const { return (*times_)[i]; }
    double horizon() const { return times_->back(); }
    double spacing(int cell) const { return (*times_)[cell + 1] - (*times_)[cell]; }
    double max_spacing() const;
    std::span<const double> times() const { return *times_; }
    /// Cell k with t_k < t <= t_{k+1}; t = 0 maps to cell 0.
    int cell_of(double t) const;
    /// Index of the node equal to t, if any.
    std::optional<int> node_of(double t) const;
    bool operator==(const TimeGrid& other) const { return times_ == other.times_ || *times_ == *other.times_; }

private:
    std::shared_ptr<const std::vector<double>> times_;
};

struct Jump {
    double time;
    double size;
    int shell;

    bool operator==(const Jump&) const = default;
};

class CanonicalPath {
public:
    CanonicalPath(TimeGrid grid, std::vector<double> brownian, std::vector<Jump> jumps);
    CanonicalPath(TimeGrid grid, std::shared_ptr<const std::vector<double>> brownian, std::vector<Jump> jumps);

    const TimeGrid& grid() const { return grid_; }
    double horizon() const { return grid_.horizon(); }
    std::span<const double> brownian() const { return *brownian_; }
    const std::vector<Jump>& jumps() const { return jumps_; }

    /// W(t); off-grid times use linear interpolation between nodes.
    double brownian_at(double t) const;
    /// Same jumps, different Brownian node values.
    CanonicalPath with_brownian(std::vector<double> brownian) const;
    /// Same Brownian part, different jump list (sorted and validated).
    CanonicalPath with_jumps(std::vector<Jump> jumps) const;

    bool operator==(const CanonicalPath& other) const;

private:
    TimeGrid grid_;
    std::shared_ptr<const std::vector<double>> brownian_;
    std::vector<Jump> jumps_;
};

/// omega -> omega_z: insert the jump (t, x). A time collision is resolved by
/// stepping t down one ulp at a time until it is free.
CanonicalPath add_jump(const CanonicalPath& path, double t, double x, const ShellPartition* partition = nullptr);
/// Remove the jump at exactly (t, x); throws if absent.
CanonicalPath remove_jump(const CanonicalPath& path, double t, double x);
/// Path with every jump at exactly time s removed (the realization of s-).
CanonicalPath mask_jumps_at(const CanonicalPath& path, double s);

/// Sample the path with index `index` from the stream keyed by `seed`.
CanonicalPath sample_path(const LevyModel& model, const ShellPartition& partition, const TimeGrid& grid,
                          std::uint64_t seed, std::uint64_t index);

/// Lazily generated ensemble; (seed, index) determines each path.
class PathEnsemble {
public:
    PathEnsemble(LevyModel model, ShellPartition partition, TimeGrid grid, std::uint64_t seed, std::size_t count)
        : model_(std::move(model)), partition_(std::move(partition)), grid_(std::move(grid)), seed_(seed),
          count_(count) {}

    const LevyModel& model() const { return model_; }
    const ShellPartition& partition() const { return partition_; }
    const TimeGrid& grid() const { return grid_; }
    std::uint64_t seed() const { return seed_; }
    std::size_t size() const { return count_; }
    CanonicalPath path(std::size_t index) const { return sample_path(model_, partition_, grid_, seed_, index); }

private:
    LevyModel model_;
    ShellPartition partition_;
    TimeGrid grid_;
    std::uint64_t seed_;
    std::size_t count_;
};

/// X_t = gamma t + sigma W(t) + big jumps + compensated retained small shells.
double evaluate_X(const CanonicalPath& path, const LevyModel& model, const ShellPartition& partition, double t);
/// X_{t-}: jumps at exactly t excluded.
double evaluate_X_left(const CanonicalPath& path, const LevyModel& model, const ShellPartition& partition,
                       double t);

/// [0, T_1^eps, T_2^eps, ...]: times of jumps with |x| > eps up to t.
std::vector<double> jump_times_above(const CanonicalPath& path, double eps, double up_to);

/// Field evaluated at left limits: v(path, s, x) stands for v(s-, x).
using JumpField = std::function<double(const CanonicalPath&, double s, double x)>;

struct PathwiseIntegral {
    double jump_sum = 0.0;    // sum of v(s-, dX) dX over jumps in the region
    double compensator = 0.0; // left-point quadrature of the dt dnu integral
    double value = 0.0;       // jump_sum - compensator
    std::vector<std::string> warnings;
};

/// Pathwise integral of v(s-, x) x against the compensated jump measure over
/// (0, t] x region.
PathwiseIntegral pathwise_jtilde_integral(const CanonicalPath& path, const LevyModel& model,
                                          const ShellPartition& partition, const JumpField& v,
                                          const ValueSet& region, double t);

/// Line-delimited JSON record of one path; `%.17g` doubles, bit-reproducible.
std::string dump_path(const CanonicalPath& path, std::uint64_t index);

}  // namespace levycalc
