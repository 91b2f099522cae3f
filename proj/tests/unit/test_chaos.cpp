#include <gtest/gtest.h>

#include <cmath>

#include "generators.hpp"
#include "levycalc/chaos.hpp"
#include "levycalc/ensemble.hpp"
#include "levycalc/errors.hpp"

using namespace levycalc;
using levycalc::testing::Gen;

namespace {

ProductRegion region(double a, double b, ValueSet v) { return {{a, b}, std::move(v)}; }

LevyModel duality_model() {
    return LevyModel(0.1, 1.0, LevyMeasure::atoms({{1.5, 0.5}, {0.5, 1.0}, {-0.5, 1.0}}), 1.0);
}

ElementaryKernel indicator(std::vector<ProductRegion> regions) {
    const int n = static_cast<int>(regions.size());
    std::vector<int> idx(n);
    for (int i = 0; i < n; ++i) idx[i] = i;
    return ElementaryKernel(n, std::move(regions), {{idx, 1.0}});
}

// Independent oracle for the duality left side with u = 1_E G: G times
// sum over the x = 0 slice and the atoms of E of the piecewise-constant
// time integral of D_{t,x}F, integrated by midpoints between breakpoints.
double dual_pairing(const RandomFunctional& f, const CanonicalPath& path, const LevyModel& model,
                    const ProductRegion& e) {
    std::vector<double> cuts{e.time.a, e.time.b};
    for (double b : f.breakpoints())
        if (b > e.time.a && b < e.time.b) cuts.push_back(b);
    for (int k = 0; k <= 16; ++k)
        if (k / 16.0 > e.time.a && k / 16.0 < e.time.b) cuts.push_back(k / 16.0);
    std::sort(cuts.begin(), cuts.end());
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const double len = cuts[i + 1] - cuts[i];
        if (len <= 0.0) continue;
        const double mid = 0.5 * (cuts[i] + cuts[i + 1]);
        if (e.values.has_zero()) total += model.sigma() * model.sigma() * len * malliavin_D(f, path, mid, 0.0, model.sigma());
        for (const auto& a : model.nu().atom_list())
            if (e.values.contains(a.location))
                total += a.location * a.location * a.mass * len * malliavin_D(f, path, mid, a.location, model.sigma());
    }
    return total;
}

}  // namespace

TEST(MOfSet, DiffusionSliceIsBrownianIncrement) {
    auto model = LevyModel(0.0, 0.7, LevyMeasure::atoms({{1.5, 2.0}}), 1.0);
    auto part = shell_partition(model, 2);
    auto p = sample_path(model, part, TimeGrid::uniform(1.0, 8), 1, 0);
    EXPECT_EQ(M_of_set(p, model, part, region(0.25, 0.75, ValueSet::zero())).value,
              0.7 * (p.brownian()[6] - p.brownian()[2]));
}

TEST(MOfSet, CompensatedAtom) {
    auto model = LevyModel(0.0, 0.0, LevyMeasure::atoms({{1.5, 2.0}}), 1.0);
    auto part = shell_partition(model, 1);
    PathEnsemble ens(model, part, TimeGrid::uniform(1.0, 4), 2, 20000);
    std::vector<double> xs(ens.size());
    const auto e = region(0.0, 1.0, ValueSet::point(1.5));
    for (std::size_t i = 0; i < ens.size(); ++i) {
        const auto p = ens.path(i);
        xs[i] = M_of_set(p, model, part, e).value;
        EXPECT_DOUBLE_EQ(xs[i], 1.5 * static_cast<double>(p.jumps().size()) - 3.0);
    }
    auto s = sample_stats(xs);
    EXPECT_LT(std::abs(s.mean), 3.0 * s.std_error);
}

TEST(MOfSet, EmptyRegion) {
    auto model = duality_model();
    auto part = shell_partition(model, 3);
    auto p = sample_path(model, part, TimeGrid::uniform(1.0, 8), 3, 0);
    EXPECT_EQ(M_of_set(p, model, part, region(0.5, 0.5, ValueSet::everything())).value, 0.0);
    EXPECT_EQ(M_of_set(p, model, part, region(0.0, 1.0, ValueSet{})).value, 0.0);
}

TEST(MOfSet, WarnsBelowTruncation) {
    auto model = LevyModel(0.0, 0.0, LevyMeasure::atoms({{0.01, 2.0}}), 1.0);
    auto part = shell_partition(model, 2);
    auto p = sample_path(model, part, TimeGrid::uniform(1.0, 8), 3, 0);
    EXPECT_FALSE(M_of_set(p, model, part, region(0.0, 1.0, ValueSet::nonzero())).warnings.empty());
}

TEST(Kernel, RejectsOverlapAndRepeats) {
    auto e = region(0.0, 0.5, ValueSet::zero());
    auto f = region(0.25, 1.0, ValueSet::everything());
    EXPECT_THROW(ElementaryKernel(2, {e, f}, {{{0, 1}, 1.0}}), InvalidArgument);
    auto g = region(0.5, 1.0, ValueSet::zero());
    EXPECT_THROW(ElementaryKernel(2, {e, g}, {{{0, 0}, 1.0}}), InvalidArgument);
    EXPECT_NO_THROW(ElementaryKernel(2, {e, g}, {{{0, 0}, 0.0}, {{0, 1}, 1.0}}));
    EXPECT_THROW(ElementaryKernel(2, {e, g}, {{{0}, 1.0}}), InvalidArgument);
}

TEST(MultipleIntegral, DefiningCases) {
    auto model = duality_model();
    auto part = shell_partition(model, 3);
    auto p = sample_path(model, part, TimeGrid::uniform(1.0, 8), 4, 0);
    auto e = region(0.0, 0.5, ValueSet::zero().unite(ValueSet::point(1.5)));
    auto f = region(0.5, 1.0, ValueSet::nonzero());
    const double me = M_of_set(p, model, part, e).value, mf = M_of_set(p, model, part, f).value;
    EXPECT_EQ(multiple_integral(p, model, part, indicator({e})), me);
    EXPECT_EQ(multiple_integral(p, model, part, indicator({e, f})), me * mf);
    EXPECT_EQ(multiple_integral(p, model, part, ElementaryKernel::constant(2.5)), 2.5);
}

TEST(MultipleIntegral, SymmetrizationPreservesValue) {
    auto model = duality_model();
    auto part = shell_partition(model, 3);
    std::vector<ProductRegion> regions{region(0.0, 0.25, ValueSet::everything()), region(0.25, 0.5, ValueSet::zero()),
                                       region(0.5, 1.0, ValueSet::point(0.5)), region(0.5, 1.0, ValueSet::point(1.5))};
    ElementaryKernel k(3, regions, {{{0, 1, 2}, 1.0}, {{3, 1, 0}, -0.5}, {{2, 3, 1}, 2.0}});
    auto sym = symmetrize(k);
    for (int i = 0; i < 20; ++i) {
        auto p = sample_path(model, part, TimeGrid::uniform(1.0, 8), 5, i);
        const double a = multiple_integral(p, model, part, k), b = multiple_integral(p, model, part, sym);
        EXPECT_NEAR(a, b, 1e-12 * (1.0 + std::abs(a)));
    }
}

TEST(Isometry, FirstOrderMatchesMu) {
    auto model = duality_model();
    auto part = shell_partition(model, 3);
    PathEnsemble ens(model, part, TimeGrid::uniform(1.0, 16), 6, 40000);
    auto e = indicator({region(0.0, 0.75, ValueSet::zero().unite(ValueSet::point(0.5)))});
    auto r = isometry_check(ens, e, e, 4);
    EXPECT_DOUBLE_EQ(r.analytic, 0.75 * (1.0 + 0.25));
    EXPECT_LT(std::abs(r.estimate - r.analytic), 3.0 * r.std_error);
}

TEST(Isometry, DistinctOrdersAreOrthogonal) {
    auto model = duality_model();
    auto part = shell_partition(model, 3);
    PathEnsemble ens(model, part, TimeGrid::uniform(1.0, 16), 7, 40000);
    auto f1 = indicator({region(0.0, 0.5, ValueSet::everything())});
    auto f2 = indicator({region(0.0, 0.5, ValueSet::everything()), region(0.5, 1.0, ValueSet::everything())});
    auto r = isometry_check(ens, f1, f2, 4);
    EXPECT_EQ(r.analytic, 0.0);
    EXPECT_LT(std::abs(r.estimate), 3.0 * r.std_error);
}

TEST(Isometry, SecondOrderProductOfMeasures) {
    auto model = duality_model();
    auto part = shell_partition(model, 3);
    auto e = region(0.0, 0.5, ValueSet::zero());
    auto f = region(0.25, 1.0, ValueSet::point(1.5));
    auto k = indicator({e, f});
    const double expect = mu_measure(model, e) * mu_measure(model, f);
    EXPECT_DOUBLE_EQ(isometry_analytic(model, part, k, k), expect);
    PathEnsemble ens(model, part, TimeGrid::uniform(1.0, 16), 8, 40000);
    auto r = isometry_check(ens, k, k, 4);
    EXPECT_LT(std::abs(r.estimate - expect), 3.0 * r.std_error);
}

TEST(Isometry, RandomKernelsProperty) {
    Gen gen(9);
    auto model = duality_model();
    auto part = shell_partition(model, 3);
    const std::vector<ValueSet> values{ValueSet::zero(), ValueSet::point(1.5), ValueSet::point(0.5),
                                       ValueSet::point(-0.5)};
    int failures = 0;
    const int trials = 12;
    for (int trial = 0; trial < trials; ++trial) {
        const int n = gen.integer(1, 3);
        std::vector<ProductRegion> regions;
        for (int q = 0; q < 4; ++q)
            for (const auto& v : values)
                if (gen.integer(0, 2) == 0) regions.push_back(region(q / 4.0, (q + 1) / 4.0, v));
        if (static_cast<int>(regions.size()) < n) continue;
        std::vector<ElementaryKernel::Term> terms;
        for (int t = 0; t < 3; ++t) {
            std::vector<int> idx;
            while (static_cast<int>(idx.size()) < n) {
                int i = gen.integer(0, static_cast<int>(regions.size()) - 1);
                if (std::find(idx.begin(), idx.end(), i) == idx.end()) idx.push_back(i);
            }
            terms.push_back({idx, gen.uniform(-1.0, 1.0)});
        }
        ElementaryKernel k(n, regions, terms);
        PathEnsemble ens(model, part, TimeGrid::uniform(1.0, 4), 100 + trial, 20000);
        auto r = isometry_check(ens, k, k, 4);
        if (std::abs(r.estimate - r.analytic) > 3.0 * r.std_error) ++failures;
    }
    // Each trial fails with probability ~0.3% at 3 SE.
    EXPECT_LE(failures, 1);
}

TEST(SkorohodChaos, DeterministicIntegrand) {
    auto model = duality_model();
    auto part = shell_partition(model, 3);
    auto p = sample_path(model, part, TimeGrid::uniform(1.0, 8), 10, 0);
    auto e = region(0.0, 0.5, ValueSet::everything());
    ChaosField u{{{e, 2.0, ElementaryKernel::constant(1.0)}}};
    EXPECT_EQ(skorohod_chaos(p, model, part, u), 2.0 * M_of_set(p, model, part, e).value);
}

TEST(SkorohodChaos, DisjointFirstChaosGivesProduct) {
    auto model = duality_model();
    auto part = shell_partition(model, 3);
    auto e = region(0.0, 0.5, ValueSet::zero());
    auto f = region(0.25, 1.0, ValueSet::nonzero());
    ChaosField u{{{e, 1.0, indicator({f})}}};
    for (int i = 0; i < 50; ++i) {
        auto p = sample_path(model, part, TimeGrid::uniform(1.0, 8), 11, i);
        EXPECT_EQ(skorohod_chaos(p, model, part, u), multiple_integral(p, model, part, indicator({e, f})));
    }
}

TEST(SkorohodChaos, MatchesProductOnHigherOrders) {
    auto model = duality_model();
    auto part = shell_partition(model, 3);
    auto e = region(0.0, 0.25, ValueSet::everything());
    std::vector<ProductRegion> rest{region(0.25, 0.5, ValueSet::zero()), region(0.5, 1.0, ValueSet::point(0.5)),
                                    region(0.5, 1.0, ValueSet::point(-0.5))};
    ChaosField u{{{e, 1.5, indicator(rest)}}};
    std::vector<ProductRegion> all{e};
    all.insert(all.end(), rest.begin(), rest.end());
    for (int i = 0; i < 50; ++i) {
        auto p = sample_path(model, part, TimeGrid::uniform(1.0, 8), 12, i);
        const double product = 1.5 * multiple_integral(p, model, part, indicator(all));
        EXPECT_NEAR(skorohod_chaos(p, model, part, u), product, 1e-12 * (1.0 + std::abs(product)));
    }
}

TEST(SkorohodChaos, DiagonalUsesQuadraticVariation) {
    auto model = duality_model();
    auto part = shell_partition(model, 3);
    auto e = region(0.0, 0.5, ValueSet::everything());
    ChaosField u{{{e, 1.0, indicator({e})}}};
    auto p = sample_path(model, part, TimeGrid::uniform(1.0, 8), 13, 0);
    const double m = M_of_set(p, model, part, e).value;
    EXPECT_EQ(skorohod_chaos(p, model, part, u), m * m - quadratic_variation(p, model, e));
    ChaosField partial{{{region(0.0, 0.75, ValueSet::everything()), 1.0, indicator({e})}}};
    EXPECT_THROW(skorohod_chaos(p, model, part, partial), UnsupportedOperation);
}

TEST(SkorohodChaos, MeanZeroAndDuality) {
    auto model = duality_model();
    auto part = shell_partition(model, 3);
    const TimeGrid grid = TimeGrid::uniform(1.0, 16);
    PathEnsemble ens(model, part, grid, 14, 40000);
    const auto e = region(0.0, 0.5, ValueSet::zero().unite(ValueSet::point(1.5)));
    const auto f = region(0.5, 1.0, ValueSet::everything());
    struct Case {
        ProductRegion z;
        ElementaryKernel kernel;
    };
    std::vector<Case> fields{{e, ElementaryKernel::constant(1.0)},
                             {e, indicator({f})},
                             {e, indicator({e})},
                             {f, indicator({e, region(0.0, 0.25, ValueSet::point(0.5))})}};
    std::vector<RandomFunctional> tests{
        catalog::constant(1.0), catalog::sin_brownian(1.0), catalog::jump_sum_sq(0.75),
        catalog::cos_of_X(1.3, 0.5, model, part),
        ChaosExpansion(0.5, {indicator({region(0.0, 1.0, ValueSet::everything())})}).functional(model, part)};
    for (std::size_t a = 0; a < fields.size(); ++a) {
        const ChaosField u{{{fields[a].z, 1.0, fields[a].kernel}}};
        const auto g_fun = ChaosExpansion(fields[a].kernel.order() == 0 ? 1.0 : 0.0,
                                          fields[a].kernel.order() == 0 ? std::vector<ElementaryKernel>{}
                                                                        : std::vector<ElementaryKernel>{fields[a].kernel})
                               .functional(model, part);
        for (std::size_t b = 0; b < tests.size(); ++b) {
            std::vector<double> diff(ens.size());
            parallel_for(ens.size(), 4, [&](std::size_t i) {
                const auto p = ens.path(i);
                diff[i] = skorohod_chaos(p, model, part, u) * tests[b](p) -
                          g_fun(p) * dual_pairing(tests[b], p, model, fields[a].z);
            });
            auto s = sample_stats(diff);
            EXPECT_LT(std::abs(s.mean), 3.0 * s.std_error + 1e-12) << "field " << a << " F " << tests[b].name();
        }
    }
}

TEST(ChaosExpansion, GradientMatchesFiniteDifference) {
    auto model = duality_model();
    auto part = shell_partition(model, 3);
    auto k = indicator({region(0.0, 0.25, ValueSet::zero()), region(0.5, 1.0, ValueSet::everything()),
                        region(0.25, 0.5, ValueSet::everything())});
    auto f = ChaosExpansion(0.3, {k, indicator({region(0.0, 1.0, ValueSet::zero())})}).functional(model, part);
    Gen gen(15);
    for (int i = 0; i < 100; ++i) {
        auto p = sample_path(model, part, TimeGrid::uniform(1.0, 16), 15, i);
        const double t = gen.uniform(0.0, 1.0);
        const double exact = f.gradient(p, t);
        EXPECT_NEAR(exact, brownian_derivative(f, p, t, FiniteDifference{1e-5}), 1e-6 * (1.0 + std::abs(exact)));
    }
}
