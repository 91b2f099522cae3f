#include <gtest/gtest.h>

#include <cmath>

#include "levycalc/canonical_path.hpp"
#include "levycalc/ensemble.hpp"
#include "levycalc/errors.hpp"

using namespace levycalc;

namespace {

CanonicalPath path_with(std::vector<Jump> jumps, int cells = 10) {
    auto grid = TimeGrid::uniform(1.0, cells);
    return CanonicalPath(grid, std::vector<double>(grid.size(), 0.0), std::move(jumps));
}

LevyModel atom_model(double gamma, double sigma, std::vector<Atom> atoms) {
    return LevyModel(gamma, sigma, LevyMeasure::atoms(std::move(atoms)), 1.0);
}

}  // namespace

TEST(TimeGrid, CellLookup) {
    auto g = TimeGrid::uniform(1.0, 4);
    EXPECT_EQ(g.cell_of(0.0), 0);
    EXPECT_EQ(g.cell_of(0.25), 0);
    EXPECT_EQ(g.cell_of(0.26), 1);
    EXPECT_EQ(g.cell_of(1.0), 3);
    EXPECT_EQ(g.node_of(0.5), 2);
    EXPECT_FALSE(g.node_of(0.3).has_value());
    EXPECT_THROW(TimeGrid({0.0, 0.5, 0.5}), InvalidArgument);
}

TEST(CanonicalPath, ConstructionInvariants) {
    auto g = TimeGrid::uniform(1.0, 2);
    EXPECT_THROW(CanonicalPath(g, {1.0, 0.0, 0.0}, {}), InvalidArgument);
    EXPECT_THROW(CanonicalPath(g, {0.0, 0.0}, {}), InvalidArgument);
    EXPECT_THROW(CanonicalPath(g, {0.0, 0.0, 0.0}, {{0.3, 1.0, 1}, {0.3, 2.0, 1}}), InvalidArgument);
    EXPECT_THROW(CanonicalPath(g, {0.0, 0.0, 0.0}, {{0.0, 1.0, 1}}), InvalidArgument);
    CanonicalPath p(g, {0.0, 0.0, 0.0}, {{0.7, 1.0, 1}, {0.2, 2.0, 1}});
    EXPECT_EQ(p.jumps()[0].time, 0.2);
}

TEST(AddJump, InsertsInTimeOrder) {
    auto p = add_jump(path_with({{0.3, 1.5, 1}}), 0.7, -0.4);
    ASSERT_EQ(p.jumps().size(), 2u);
    EXPECT_EQ(p.jumps()[0].time, 0.3);
    EXPECT_EQ(p.jumps()[1].time, 0.7);
    EXPECT_EQ(p.jumps()[1].size, -0.4);
}

TEST(AddJump, IncreasesJumpSumExactly) {
    auto model = atom_model(0.0, 0.0, {{1.5, 2.0}});
    auto part = shell_partition(model, 1);
    auto p = path_with({{0.3, 1.5, 1}});
    EXPECT_EQ(evaluate_X(add_jump(p, 0.5, 2.25), model, part, 1.0) - evaluate_X(p, model, part, 1.0), 2.25);
}

TEST(AddJump, Commutes) {
    auto p = path_with({{0.3, 1.5, 1}});
    EXPECT_EQ(add_jump(add_jump(p, 0.5, 1.1), 0.9, -2.0), add_jump(add_jump(p, 0.9, -2.0), 0.5, 1.1));
}

TEST(AddJump, RemoveRestoresBitForBit) {
    auto model = atom_model(0.1, 1.0, {{1.5, 2.0}, {0.5, 1.0}});
    auto part = shell_partition(model, 3);
    auto p = sample_path(model, part, TimeGrid::uniform(1.0, 64), 5, 11);
    auto q = add_jump(p, 0.4375, -0.8, &part);
    EXPECT_EQ(q.jumps().size(), p.jumps().size() + 1);
    EXPECT_EQ(remove_jump(q, 0.4375, -0.8), p);
}

TEST(AddJump, CollisionNudgesTowardZero) {
    auto p = add_jump(path_with({{0.3, 1.5, 1}}), 0.3, 2.0);
    ASSERT_EQ(p.jumps().size(), 2u);
    EXPECT_EQ(p.jumps()[0].time, std::nextafter(0.3, 0.0));
    EXPECT_EQ(p.jumps()[1].time, 0.3);
}

TEST(AddJump, RejectsZeroSize) { EXPECT_THROW(add_jump(path_with({}), 0.5, 0.0), InvalidArgument); }

TEST(EvaluateX, PureDrift) {
    auto model = LevyModel(0.7, 0.0, LevyMeasure::none(), 1.0);
    auto part = shell_partition(model, 2);
    auto p = sample_path(model, part, TimeGrid::uniform(1.0, 8), 1, 0);
    for (double t : {0.0, 0.125, 0.3, 1.0}) EXPECT_EQ(evaluate_X(p, model, part, t), 0.7 * t);
}

TEST(EvaluateX, SingleBigJump) {
    auto model = atom_model(0.0, 0.0, {{1.5, 2.0}});
    auto part = shell_partition(model, 1);
    auto p = path_with({{0.3, 1.5, 1}});
    EXPECT_EQ(evaluate_X(p, model, part, 0.2), 0.0);
    EXPECT_EQ(evaluate_X(p, model, part, 0.4), 1.5);
    EXPECT_THROW(evaluate_X(p, model, part, 1.5), InvalidArgument);
}

TEST(EvaluateX, CadlagAtEveryJump) {
    auto model = atom_model(0.2, 0.8, {{1.5, 2.0}, {-0.5, 3.0}, {0.3, 4.0}});
    auto part = shell_partition(model, 4);
    PathEnsemble ens(model, part, TimeGrid::uniform(1.0, 32), 21, 50);
    for (std::size_t i = 0; i < ens.size(); ++i) {
        auto p = ens.path(i);
        for (const auto& j : p.jumps()) {
            const double at = evaluate_X(p, model, part, j.time);
            const double left = evaluate_X_left(p, model, part, j.time);
            EXPECT_NEAR(at - left, j.size, 1e-12);
            EXPECT_NEAR(evaluate_X(p, model, part, std::nextafter(j.time, 2.0)), at, 1e-9);
        }
    }
}

TEST(EvaluateX, CompensatedSmallAtomHasMeanZero) {
    auto model = atom_model(0.0, 0.0, {{0.5, 3.0}});
    auto part = shell_partition(model, 3);
    PathEnsemble ens(model, part, TimeGrid::uniform(1.0, 4), 8, 20000);
    std::vector<double> xs(ens.size());
    parallel_for(ens.size(), 4, [&](std::size_t i) { xs[i] = evaluate_X(ens.path(i), model, part, 0.75); });
    auto s = sample_stats(xs);
    EXPECT_LT(std::abs(s.mean), 3.0 * s.std_error);
}

TEST(SamplePath, PureDiffusionMoments) {
    auto model = LevyModel(0.0, 1.0, LevyMeasure::none(), 1.0);
    auto part = shell_partition(model, 2);
    PathEnsemble ens(model, part, TimeGrid::uniform(1.0, 16), 3, 20000);
    std::vector<double> z(ens.size()), z2(ens.size());
    for (std::size_t i = 0; i < ens.size(); ++i) {
        auto p = ens.path(i);
        EXPECT_TRUE(p.jumps().empty());
        z[i] = (p.brownian()[5] - p.brownian()[4]) / std::sqrt(1.0 / 16);
        z2[i] = z[i] * z[i];
    }
    auto s1 = sample_stats(z), s2 = sample_stats(z2);
    EXPECT_LT(std::abs(s1.mean), 3.0 * s1.std_error);
    EXPECT_LT(std::abs(s2.mean - 1.0), 3.0 * s2.std_error);
}

TEST(SamplePath, ZeroSigmaGivesFlatBrownian) {
    auto model = atom_model(0.0, 0.0, {{1.5, 2.0}});
    auto p = sample_path(model, shell_partition(model, 1), TimeGrid::uniform(1.0, 8), 2, 4);
    for (double w : p.brownian()) EXPECT_EQ(w, 0.0);
}

TEST(SamplePath, JumpCountsArePoisson) {
    auto model = atom_model(0.0, 0.6, {{1.5, 2.0}, {0.3, 1.5}});
    auto part = shell_partition(model, 3);
    PathEnsemble ens(model, part, TimeGrid::uniform(1.0, 8), 42, 20000);
    std::vector<double> big(ens.size()), small(ens.size()), big_sq(ens.size()), w(ens.size());
    for (std::size_t i = 0; i < ens.size(); ++i) {
        auto p = ens.path(i);
        for (const auto& j : p.jumps()) {
            EXPECT_EQ(part.shell_of(j.size), j.shell);
            (j.shell == 1 ? big[i] : small[i]) += 1.0;
        }
        big_sq[i] = (big[i] - 2.0) * (big[i] - 2.0);
        w[i] = 0.36 * p.brownian()[4] * p.brownian()[4];
    }
    auto sb = sample_stats(big), ss = sample_stats(small), sv = sample_stats(big_sq), sw = sample_stats(w);
    EXPECT_LT(std::abs(sb.mean - 2.0), 3.0 * sb.std_error);
    EXPECT_LT(std::abs(ss.mean - 1.5), 3.0 * ss.std_error);
    EXPECT_LT(std::abs(sv.mean - 2.0), 3.0 * sv.std_error);
    EXPECT_LT(std::abs(sw.mean - 0.36 * 0.5), 3.0 * sw.std_error);
}

TEST(SamplePath, ReproducibleFromSeedAndIndex) {
    auto model = atom_model(0.0, 1.0, {{1.5, 2.0}, {0.3, 1.5}});
    auto part = shell_partition(model, 3);
    auto grid = TimeGrid::uniform(1.0, 16);
    EXPECT_EQ(sample_path(model, part, grid, 7, 12), sample_path(model, part, grid, 7, 12));
    EXPECT_EQ(dump_path(sample_path(model, part, grid, 7, 12), 12), dump_path(PathEnsemble(model, part, grid, 7, 20).path(12), 12));
    EXPECT_NE(dump_path(sample_path(model, part, grid, 7, 12), 0), dump_path(sample_path(model, part, grid, 7, 13), 0));
}

TEST(JumpTimesAbove, Filters) {
    auto p = path_with({{0.3, 1.5, 1}, {0.7, -0.05, 6}});
    EXPECT_EQ(jump_times_above(p, 0.1, 1.0), (std::vector<double>{0.0, 0.3}));
    EXPECT_EQ(jump_times_above(p, 2.0, 1.0), (std::vector<double>{0.0}));
    EXPECT_EQ(jump_times_above(p, 0.01, 1.0), (std::vector<double>{0.0, 0.3, 0.7}));
}

TEST(PathwiseIntegral, CompensatedBigJump) {
    auto model = atom_model(0.0, 0.0, {{1.5, 2.0}});
    auto part = shell_partition(model, 1);
    auto p = path_with({{0.3, 1.5, 1}});
    JumpField one = [](const CanonicalPath&, double, double) { return 1.0; };
    auto r = pathwise_jtilde_integral(p, model, part, one, ValueSet::abs_range(1.0, kInf), 1.0);
    EXPECT_DOUBLE_EQ(r.value, -1.5);
    EXPECT_TRUE(r.warnings.empty());
    JumpField zero = [](const CanonicalPath&, double, double) { return 0.0; };
    EXPECT_EQ(pathwise_jtilde_integral(p, model, part, zero, ValueSet::nonzero(), 1.0).value, 0.0);
}

TEST(PathwiseIntegral, MartingaleMeanZero) {
    auto model = atom_model(0.0, 0.0, {{1.5, 2.0}, {-0.4, 3.0}});
    auto part = shell_partition(model, 3);
    PathEnsemble ens(model, part, TimeGrid::uniform(1.0, 16), 77, 20000);
    JumpField v = [](const CanonicalPath&, double s, double x) { return std::cos(3.0 * s) + x; };
    std::vector<double> xs(ens.size());
    parallel_for(ens.size(), 4, [&](std::size_t i) {
        xs[i] = pathwise_jtilde_integral(ens.path(i), model, part, v, ValueSet::nonzero(), 1.0).value;
    });
    // Left-point compensator bias of the deterministic part is O(1/16); compare against its exact mean.
    double bias = 0.0;
    for (int k = 0; k < 16; ++k) {
        const double t0 = k / 16.0, t1 = (k + 1) / 16.0;
        const double exact = (std::sin(3.0 * t1) - std::sin(3.0 * t0)) / 3.0;
        bias += (exact - std::cos(3.0 * t0) / 16.0) * (2.0 * 1.5 + 3.0 * -0.4);
    }
    auto s = sample_stats(xs);
    EXPECT_LT(std::abs(s.mean - bias), 3.0 * s.std_error);
}

TEST(PathwiseIntegral, WarnsBelowTruncationFloor) {
    auto model = atom_model(0.0, 0.0, {{1.5, 2.0}, {0.01, 3.0}});
    auto part = shell_partition(model, 2);
    JumpField one = [](const CanonicalPath&, double, double) { return 1.0; };
    auto r = pathwise_jtilde_integral(path_with({}), model, part, one, ValueSet::nonzero(), 1.0);
    EXPECT_FALSE(r.warnings.empty());
}
