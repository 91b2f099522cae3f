#pragma once

// The process Y driven by W and the jump measure through simple coefficient
// fields, the left derivative D^-Y, and per-path ledgers of both forms of
// the anticipating Ito formula.

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "levycalc/anticipating.hpp"
#include "levycalc/ensemble.hpp"
#include "levycalc/functionals.hpp"

namespace levycalc {

/// F on R^n with analytic first and second partials.
struct TestFunction {
    SmoothHead head;
    int dim = 1;
    std::optional<double> second_bound;  // sup |d_i d_j F|; drives the quadrature bound
    bool bounded = false;                // F and its partials bounded
};

namespace test_functions {
TestFunction square();
TestFunction sine();
TestFunction cosine();
/// sin(y_1) cos(y_2) ... alternating.
TestFunction trig_mix(int dim);
}  // namespace test_functions

struct YComponent {
    std::string name;
    RandomFunctional y0;
    SimpleRandomField u;        // read on x = 0
    SimpleRandomField drift;    // read on x = 0
    SimpleRandomField v_big;    // read on |x| > 1
    SimpleRandomField v_small;  // read on 0 < |x| <= 1
    /// int_0^t u dW (Skorohod), when known in closed form.
    std::function<double(const CanonicalPath&, double t)> diffusion_closed_form;
    /// D^W_s of the closed form above.
    std::function<double(const CanonicalPath&, double t, double s)> diffusion_closed_gradient;
    /// D^-Y(s, 0), when known in closed form.
    std::function<double(const CanonicalPath&, double s)> d_minus_hook;
};

struct YSpec {
    std::string name;
    std::vector<YComponent> components;
    bool adapted = false;         // every coefficient is adapted to its own time
    std::optional<double> bound;  // the constant M of the coefficient hypotheses
};

namespace y_catalog {
/// Y = W (u = 1).
YSpec brownian();
/// Y_t = sum of jumps v x over (eps, 1] compensated, with v = 1 on {0 < |x| <= 1}.
YSpec small_jump_unit();
/// Y_t = int_0^t W_T dW = W_T W_t - t.
YSpec terminal_brownian(double horizon);
/// Y_t = int_0^t sin(W_T) dW = sin(W_T) W_t - t cos(W_T).
YSpec terminal_sine(double horizon);
/// Y = (W, compensated small jumps, big jumps): a two-component adapted mix.
YSpec adapted_mix();
}  // namespace y_catalog

struct HypothesisReport {
    bool empirical_mode = false;
    std::vector<std::string> warnings;
};

/// Checks the bound tags on sampled paths; any violation or missing tag
/// switches the run to empirical mode.
HypothesisReport check_hypotheses(const YSpec& spec, const PathEnsemble& ensemble, std::size_t sample = 32);

/// Y^eps evaluated pathwise; construction precomputes the gated jump cells.
class YProcess {
public:
    YProcess(YSpec spec, LevyModel model, ShellPartition partition, double epsilon);

    const YSpec& spec() const { return spec_; }
    const LevyModel& model() const { return model_; }
    const ShellPartition& partition() const { return partition_; }
    double epsilon() const { return epsilon_; }
    int dim() const { return static_cast<int>(spec_.components.size()); }

    /// Y_t, or Y_{t-} when `left`.
    std::vector<double> at(const CanonicalPath& path, double t, bool left = false) const;
    /// Y at grid nodes 0..last_node, indexed [node][component].
    std::vector<std::vector<double>> on_grid(const CanonicalPath& path, int last_node) const;
    /// D^W_s Y_t when every part has an exact Brownian gradient.
    std::optional<std::vector<double>> brownian_gradient(const CanonicalPath& path, double t, double s) const;
    bool has_brownian_gradient() const { return gradient_available_; }

    /// D^-Y(s, 0) per component, Brownian convention.
    std::vector<double> d_minus(const CanonicalPath& path, double s, DMinusMode mode) const;

    /// F_j(path) for every coefficient term, [component][term].
    struct Snapshot {
        std::vector<std::vector<double>> u, drift, big, small;
    };
    Snapshot snapshot(const CanonicalPath& path) const;

    // Coefficient values u_i(t), sigma_i(t), v_i(t, x) for the given path.
    std::vector<double> u_at(const CanonicalPath& path, double t) const { return u_at(snapshot(path), t); }
    std::vector<double> drift_at(const CanonicalPath& path, double t) const { return drift_at(snapshot(path), t); }
    std::vector<double> v_at(const CanonicalPath& path, double t, double x) const {
        return v_at(snapshot(path), t, x);
    }
    std::vector<double> u_at(const Snapshot& s, double t) const;
    std::vector<double> drift_at(const Snapshot& s, double t) const;
    std::vector<double> v_at(const Snapshot& s, double t, double x) const;
    // Allocation-free forms; `out` has dim() entries.
    void u_at(const Snapshot& s, double t, std::span<double> out) const;
    void drift_at(const Snapshot& s, double t, std::span<double> out) const;
    void v_at(const Snapshot& s, double t, double x, std::span<double> out) const;
    /// D^W_s u_i(t); requires has_brownian_gradient().
    std::vector<double> u_gradient(const CanonicalPath& path, double t, double s) const;
    bool has_diffusion() const;
    bool has_small_jumps() const;
    /// Every coefficient shape is a box (constant in time).
    bool box_shapes() const;

    /// Jump cells of the gate {eps < |x| <= 1}.
    const std::vector<JumpCell>& small_cells() const { return small_cells_; }
    const ValueSet& small_gate() const { return small_gate_; }
    const ValueSet& big_gate() const { return big_gate_; }

private:
    struct Prepared {
        SimpleRandomField u_slice;
        SimpleRandomField drift_slice;
        SimpleRandomField v_big;
        SimpleRandomField v_small;
        std::vector<double> small_m1;  // per v_small term: sum of m1 over gated cells of its shape
    };

    double diffusion(const YComponent& c, const Prepared& p, const CanonicalPath& path, double t) const;

    YSpec spec_;
    LevyModel model_;
    ShellPartition partition_;
    double epsilon_;
    ValueSet small_gate_;
    ValueSet big_gate_;
    std::vector<JumpCell> small_cells_;
    std::vector<Prepared> prepared_;
    bool gradient_available_ = false;
};

/// Y^eps_t for every component.
std::vector<double> build_Y_epsilon(const YSpec& spec, const CanonicalPath& path, const LevyModel& model,
                                    const ShellPartition& partition, double epsilon, double t);

std::vector<double> d_minus_Y(const YSpec& spec, const CanonicalPath& path, const LevyModel& model,
                              const ShellPartition& partition, double s, DMinusMode mode);

enum class LedgerForm { General, FiniteVariation };

struct ItoLedger {
    std::string spec;
    std::string test_function;
    LedgerForm form = LedgerForm::General;
    double t = 0.0;
    double epsilon = 0.0;
    std::vector<std::string> columns;             // lhs, RHS terms, rhs, residual, cross-checks
    std::vector<std::vector<double>> samples;     // [column][path]
    std::vector<SampleStats> stats;               // per column
    std::vector<double> quadrature_bound;         // per path; finite-variation pure-jump specs only
    double rms_residual = 0.0;
    double rms_lhs = 0.0;
    HypothesisReport hypotheses;
    std::vector<std::string> warnings;

    std::size_t column(const std::string& name) const;
    const std::vector<double>& values(const std::string& name) const { return samples[column(name)]; }
    const SampleStats& stat(const std::string& name) const { return stats[column(name)]; }
};

/// Names of the RHS terms, in summation order.
const std::vector<std::string>& ledger_terms(LedgerForm form);

struct LedgerOptions {
    std::optional<DMinusMode> d_minus_mode;  // default: adapted-zero for adapted specs, else analytic
    unsigned workers = 1;
};

/// t must be a grid node. Lebesgue terms use left-point quadrature on the grid.
ItoLedger ito_ledger_general(const YSpec& spec, const TestFunction& f, const PathEnsemble& ensemble, double epsilon,
                             double t, const LedgerOptions& options = {});

/// Requires a finite first absolute moment of nu; refuses otherwise.
ItoLedger ito_ledger_finite_variation(const YSpec& spec, const TestFunction& f, const PathEnsemble& ensemble,
                                      double epsilon, double t, const LedgerOptions& options = {});

struct EpsilonRow {
    double epsilon = 0.0;
    double gap = 0.0;          // E sum_i (Y^eps_t - Y^floor_t)^2
    double gap_se = 0.0;
    bool exact_zero = false;   // every sampled gap is exactly 0
    double step = 0.0;         // paired change from the previous row
    double step_se = 0.0;
    bool monotone = true;      // step <= 3 step_se
};

std::vector<EpsilonRow> epsilon_convergence_study(const YSpec& spec, const PathEnsemble& ensemble,
                                                  const std::vector<double>& schedule, double t,
                                                  unsigned workers = 1);

struct RefinementRow {
    int cells = 0;
    double rms_residual = 0.0;
    double rms_lhs = 0.0;
    double mean_residual = 0.0;
    double residual_se = 0.0;
};

struct RefinementStudy {
    std::vector<RefinementRow> rows;
    double order = 0.0;  // least-squares slope of log RMS residual against log grid spacing
};

RefinementStudy ito_refinement_study(const YSpec& spec, const TestFunction& f, const LevyModel& model,
                                     const ShellPartition& partition, std::uint64_t seed, std::size_t paths,
                                     const std::vector<int>& cells, double t, const LedgerOptions& options = {});

}  // namespace levycalc
