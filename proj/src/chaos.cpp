#include "levycalc/chaos.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "levycalc/ensemble.hpp"
#include "levycalc/errors.hpp"

namespace levycalc {

namespace {

TimeInterval clip(const TimeInterval& time, double horizon) {
    return {std::max(time.a, 0.0), std::min(time.b, horizon)};
}

bool on_diffusion_slice(const ProductRegion& region, double t) {
    return region.values.has_zero() && region.time.contains(t);
}

std::vector<double> region_values(const CanonicalPath& path, const LevyModel& model,
                                  const ShellPartition& partition, const std::vector<ProductRegion>& regions) {
    std::vector<double> m(regions.size());
    for (std::size_t i = 0; i < regions.size(); ++i) m[i] = M_of_set(path, model, partition, regions[i]).value;
    return m;
}

constexpr int kMaxOrder = 5;

}  // namespace

MeasureValue M_of_set(const CanonicalPath& path, const LevyModel& model, const ShellPartition& partition,
                      const ProductRegion& region) {
    MeasureValue out;
    const TimeInterval time = clip(region.time, path.horizon());
    if (time.length() <= 0.0) return out;
    if (region.values.has_zero() && model.sigma() != 0.0)
        out.value += model.sigma() * (path.brownian_at(time.b) - path.brownian_at(time.a));
    const ValueSet jumps = region.values.without_zero();
    if (!jumps.has_nonzero()) return out;
    double jump_sum = 0.0;
    for (const auto& j : path.jumps())
        if (time.contains(j.time) && jumps.contains(j.size)) jump_sum += j.size;
    double drift = 0.0;
    for (const auto& c : jump_cells(model, partition, jumps)) drift += c.m1;
    out.value += jump_sum - time.length() * drift;
    if (untruncated_second_moment(model, partition, jumps) > 0.0)
        out.warnings.push_back("region overlaps nu-mass below the truncation floor");
    return out;
}

double quadratic_variation(const CanonicalPath& path, const LevyModel& model, const ProductRegion& region) {
    const TimeInterval time = clip(region.time, path.horizon());
    double qv = region.values.has_zero() ? model.sigma() * model.sigma() * time.length() : 0.0;
    for (const auto& j : path.jumps())
        if (time.contains(j.time) && region.values.contains(j.size)) qv += j.size * j.size;
    return qv;
}

ElementaryKernel ElementaryKernel::constant(double c) {
    ElementaryKernel k;
    k.constant_ = c;
    return k;
}

ElementaryKernel::ElementaryKernel(int order, std::vector<ProductRegion> regions, std::vector<Term> terms)
    : order_(order), regions_(std::move(regions)) {
    if (order < 1 || order > kMaxOrder) throw InvalidArgument("ElementaryKernel: order must lie in 1..5");
    for (std::size_t i = 0; i < regions_.size(); ++i)
        for (std::size_t j = i + 1; j < regions_.size(); ++j)
            if (!disjoint(regions_[i], regions_[j]))
                throw InvalidArgument("ElementaryKernel: regions must be pairwise disjoint");
    for (auto& term : terms) {
        if (static_cast<int>(term.indices.size()) != order)
            throw InvalidArgument("ElementaryKernel: index tuple length differs from the order");
        for (int idx : term.indices)
            if (idx < 0 || idx >= static_cast<int>(regions_.size()))
                throw InvalidArgument("ElementaryKernel: region index out of range");
        auto sorted = term.indices;
        std::sort(sorted.begin(), sorted.end());
        const bool repeated = std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end();
        if (repeated) {
            if (term.coefficient != 0.0)
                throw InvalidArgument("ElementaryKernel: coefficient must vanish on repeated indices");
            continue;
        }
        if (term.coefficient != 0.0) terms_.push_back(std::move(term));
    }
}

ElementaryKernel symmetrize(const ElementaryKernel& kernel) {
    const int n = kernel.order();
    if (n == 0) return kernel;
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    double factorial = 1.0;
    for (int i = 2; i <= n; ++i) factorial *= i;
    std::map<std::vector<int>, double> merged;
    do {
        for (const auto& term : kernel.terms()) {
            std::vector<int> idx(n);
            for (int s = 0; s < n; ++s) idx[s] = term.indices[perm[s]];
            merged[idx] += term.coefficient / factorial;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    std::vector<ElementaryKernel::Term> terms;
    terms.reserve(merged.size());
    for (auto& [idx, c] : merged) terms.push_back({idx, c});
    return ElementaryKernel(n, kernel.regions(), std::move(terms));
}

double multiple_integral(const CanonicalPath& path, const LevyModel& model, const ShellPartition& partition,
                         const ElementaryKernel& kernel) {
    if (kernel.order() == 0) return kernel.constant_value();
    const auto m = region_values(path, model, partition, kernel.regions());
    double total = 0.0;
    for (const auto& term : kernel.terms()) {
        double p = term.coefficient;
        for (int idx : term.indices) p *= m[idx];
        total += p;
    }
    return total;
}

double isometry_analytic(const LevyModel& model, const ShellPartition& partition, const ElementaryKernel& f,
                         const ElementaryKernel& g) {
    if (f.order() != g.order()) return 0.0;
    const int n = f.order();
    if (n == 0) return f.constant_value() * g.constant_value();
    // n! <f~, g~> = sum over permutations pi of <f, g o pi>.
    std::vector<std::vector<double>> overlap(f.regions().size(), std::vector<double>(g.regions().size()));
    for (std::size_t i = 0; i < f.regions().size(); ++i)
        for (std::size_t j = 0; j < g.regions().size(); ++j)
            overlap[i][j] = mu_measure(model, partition, intersect(f.regions()[i], g.regions()[j]));
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    double total = 0.0;
    do {
        for (const auto& a : f.terms())
            for (const auto& b : g.terms()) {
                double p = a.coefficient * b.coefficient;
                for (int s = 0; s < n && p != 0.0; ++s) p *= overlap[a.indices[s]][b.indices[perm[s]]];
                total += p;
            }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return total;
}

IsometryCheck isometry_check(const PathEnsemble& ensemble, const ElementaryKernel& f, const ElementaryKernel& g,
                             unsigned workers) {
    std::vector<double> samples(ensemble.size());
    parallel_for(ensemble.size(), workers, [&](std::size_t i) {
        const auto path = ensemble.path(i);
        samples[i] = multiple_integral(path, ensemble.model(), ensemble.partition(), f) *
                     multiple_integral(path, ensemble.model(), ensemble.partition(), g);
    });
    const auto stats = sample_stats(samples);
    return {stats.mean, stats.std_error, isometry_analytic(ensemble.model(), ensemble.partition(), f, g)};
}

ChaosExpansion::ChaosExpansion(double constant, std::vector<ElementaryKernel> kernels)
    : constant_(constant), kernels_(std::move(kernels)) {
    for (const auto& k : kernels_)
        if (k.order() == 0) throw InvalidArgument("ChaosExpansion: order-0 part goes into the constant");
}

double ChaosExpansion::operator()(const CanonicalPath& path, const LevyModel& model,
                                  const ShellPartition& partition) const {
    double v = constant_;
    for (const auto& k : kernels_) v += multiple_integral(path, model, partition, k);
    return v;
}

RandomFunctional ChaosExpansion::functional(const LevyModel& model, const ShellPartition& partition,
                                            std::string name) const {
    struct Context {
        ChaosExpansion expansion;
        LevyModel model;
        ShellPartition partition;
    };
    auto ctx = std::make_shared<const Context>(Context{*this, model, partition});
    const double sigma = model.sigma();

    // Product rule over the factors M(A_{i_1}) ... M(A_{i_n}); D^W_t M(A) = sigma on the diffusion slice.
    auto derivative = [ctx, sigma](const CanonicalPath& p, double r, double t, int order) {
        double total = 0.0;
        for (const auto& k : ctx->expansion.kernels()) {
            const auto m = region_values(p, ctx->model, ctx->partition, k.regions());
            for (const auto& term : k.terms()) {
                const int n = static_cast<int>(term.indices.size());
                for (int a = 0; a < n; ++a) {
                    if (!on_diffusion_slice(k.regions()[term.indices[a]], t)) continue;
                    if (order == 1) {
                        double prod = term.coefficient * sigma;
                        for (int c = 0; c < n; ++c)
                            if (c != a) prod *= m[term.indices[c]];
                        total += prod;
                        continue;
                    }
                    for (int b = 0; b < n; ++b) {
                        if (b == a || !on_diffusion_slice(k.regions()[term.indices[b]], r)) continue;
                        double prod = term.coefficient * sigma * sigma;
                        for (int c = 0; c < n; ++c)
                            if (c != a && c != b) prod *= m[term.indices[c]];
                        total += prod;
                    }
                }
            }
        }
        return total;
    };

    RandomFunctional::Spec s;
    s.name = std::move(name);
    s.eval = [ctx](const CanonicalPath& p) { return ctx->expansion(p, ctx->model, ctx->partition); };
    s.gradient = [derivative](const CanonicalPath& p, double t) { return derivative(p, 0.0, t, 1); };
    s.hessian = [derivative](const CanonicalPath& p, double r, double t) { return derivative(p, r, t, 2); };
    double last = 0.0;
    bool has_diffusion = false, has_jumps = false;
    for (const auto& k : kernels_)
        for (const auto& region : k.regions()) {
            last = std::max(last, region.time.b);
            s.breakpoints.push_back(region.time.a);
            s.breakpoints.push_back(region.time.b);
            has_diffusion = has_diffusion || region.values.has_zero();
            has_jumps = has_jumps || region.values.has_nonzero();
        }
    s.adapted_up_to = std::min(last, model.horizon());
    if (kernels_.empty()) s.bound = std::abs(constant_);
    s.jump_blind = !has_jumps;
    if (has_jumps) {
        int degree = 0;
        for (const auto& k : kernels_) degree = std::max(degree, k.order());
        s.jump_degree = degree;
    }
    s.brownian_blind = !has_diffusion || sigma == 0.0;
    return RandomFunctional(std::move(s));
}

double skorohod_chaos(const CanonicalPath& path, const LevyModel& model, const ShellPartition& partition,
                      const ChaosField& field) {
    double total = 0.0;
    for (const auto& term : field.terms) {
        const ElementaryKernel& k = term.kernel;
        if (k.order() == 0) {
            total += term.coefficient * k.constant_value() *
                     M_of_set(path, model, partition, term.z_region).value;
            continue;
        }
        if (k.order() > 4) throw UnsupportedOperation("skorohod_chaos: kernel order above 4");
        int diagonal = -1;
        for (std::size_t i = 0; i < k.regions().size(); ++i) {
            if (k.regions()[i] == term.z_region) {
                diagonal = static_cast<int>(i);
            } else if (!disjoint(k.regions()[i], term.z_region)) {
                throw UnsupportedOperation("skorohod_chaos: z-region partially overlaps a kernel region");
            }
        }
        if (diagonal < 0) {
            std::vector<ProductRegion> regions{term.z_region};
            regions.insert(regions.end(), k.regions().begin(), k.regions().end());
            std::vector<ElementaryKernel::Term> terms;
            for (const auto& t : k.terms()) {
                std::vector<int> idx{0};
                for (int i : t.indices) idx.push_back(i + 1);
                terms.push_back({std::move(idx), term.coefficient * t.coefficient});
            }
            const ElementaryKernel lifted(k.order() + 1, std::move(regions), std::move(terms));
            total += multiple_integral(path, model, partition, symmetrize(lifted));
            continue;
        }
        // I_{n+1} of 1_E x 1_E x (disjoint rest) = I_2(1_{E x E}) times the rest.
        const auto m = region_values(path, model, partition, k.regions());
        const double me = m[diagonal];
        const double i2 = me * me - quadratic_variation(path, model, term.z_region);
        for (const auto& t : k.terms()) {
            double p = term.coefficient * t.coefficient;
            bool hit = false;
            for (int idx : t.indices) {
                if (idx == diagonal) {
                    p *= i2;
                    hit = true;
                } else {
                    p *= m[idx];
                }
            }
            if (!hit) p *= me;
            total += p;
        }
    }
    return total;
}

}  // namespace levycalc
