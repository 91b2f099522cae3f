#pragma once

// Hand-rolled generators for property tests: models, paths, jump points and
// catalog functionals drawn from a Philox stream.

#include <cmath>
#include <vector>

#include "levycalc/canonical_path.hpp"
#include "levycalc/functionals.hpp"
#include "levycalc/rng.hpp"

namespace levycalc::testing {

class Gen {
public:
    explicit Gen(std::uint64_t seed) : rng_(seed, 0xC0FFEE) {}

    double uniform(double lo, double hi) { return lo + (hi - lo) * rng_.uniform_open(); }
    int integer(int lo, int hi) { return lo + static_cast<int>(rng_() % static_cast<std::uint32_t>(hi - lo + 1)); }
    double sign() { return (rng_() & 1u) ? 1.0 : -1.0; }
    Philox4x32& rng() { return rng_; }

    LevyModel model() {
        std::vector<Atom> atoms{{sign() * uniform(1.1, 2.0), uniform(0.5, 2.0)},
                                {sign() * uniform(0.2, 0.9), uniform(0.5, 3.0)}};
        return LevyModel(uniform(-0.5, 0.5), uniform(0.3, 1.5), LevyMeasure::atoms(std::move(atoms)), 1.0);
    }

    /// Nonzero jump size with |x| in [0.05, 2].
    double jump_size() { return sign() * uniform(0.05, 2.0); }

    /// Catalog functional with Brownian times on the grid nodes of a uniform 1/cells grid.
    RandomFunctional functional(const LevyModel& model, const ShellPartition& part, int cells) {
        auto node = [&] { return static_cast<double>(integer(1, cells)) / cells; };
        switch (integer(0, 9)) {
            case 0: return catalog::constant(uniform(-2.0, 2.0));
            case 1: return catalog::brownian_at(node());
            case 2: return catalog::sin_brownian(node());
            case 3: {
                double a = node(), b = node();
                return catalog::cylindrical(heads::trig_mix(2), {a, b}, catalog::jump_sum(uniform(0.1, 1.0)));
            }
            case 4: return catalog::jump_sum(uniform(0.1, 1.0));
            case 5: return catalog::jump_sum_sq(uniform(0.1, 1.0));
            case 6: return catalog::mollified_jump_sum(uniform(0.5, 3.0), uniform(0.1, 1.0));
            case 7: return catalog::cos_of_X(uniform(0.5, 2.0), node(), model, part);
            case 8: return catalog::product(catalog::cos_brownian(node()), catalog::jump_count(uniform(0.1, 1.0)));
            default:
                return catalog::cylindrical(heads::product(3), {node(), node(), node()});
        }
    }

private:
    Philox4x32 rng_;
};

}  // namespace levycalc::testing
