#include <gtest/gtest.h>

#include <cmath>

#include "levycalc/errors.hpp"
#include "levycalc/ito.hpp"

using namespace levycalc;

namespace {

LevyModel brownian_model() { return LevyModel(0.0, 1.0, LevyMeasure::none(), 1.0); }

LevyModel two_atom_model() {
    return LevyModel(0.1, 1.0, LevyMeasure::atoms({{1.5, 0.5}, {0.5, 1.0}, {-0.5, 1.0}}), 1.0);
}

PathEnsemble ensemble_of(const LevyModel& model, int depth, int cells, std::size_t paths, std::uint64_t seed = 5) {
    return PathEnsemble(model, shell_partition(model, depth), TimeGrid::uniform(model.horizon(), cells), seed, paths);
}

YSpec without_hook(YSpec spec) {
    for (auto& c : spec.components) c.d_minus_hook = {};
    return spec;
}

}  // namespace

TEST(YProcess, BrownianSpecIsW) {
    const auto ens = ensemble_of(brownian_model(), 3, 16, 4);
    const YProcess y(y_catalog::brownian(), ens.model(), ens.partition(), 1.0);
    for (std::size_t n = 0; n < ens.size(); ++n) {
        const auto path = ens.path(n);
        for (double t : {0.0, 0.3, 0.5, 1.0}) EXPECT_DOUBLE_EQ(y.at(path, t)[0], path.brownian_at(t));
        const auto nodes = y.on_grid(path, 16);
        for (int k = 0; k <= 16; ++k) EXPECT_DOUBLE_EQ(nodes[k][0], path.brownian_at(ens.grid()[k]));
    }
}

TEST(YProcess, GridTrajectoryMatchesDirectEvaluation) {
    const auto ens = ensemble_of(two_atom_model(), 3, 32, 6);
    const YProcess y(y_catalog::adapted_mix(), ens.model(), ens.partition(), ens.partition().floor());
    for (std::size_t n = 0; n < ens.size(); ++n) {
        const auto path = ens.path(n);
        const auto nodes = y.on_grid(path, 32);
        for (int k = 0; k <= 32; ++k) {
            const auto direct = y.at(path, ens.grid()[k]);
            for (int i = 0; i < 2; ++i) EXPECT_NEAR(nodes[k][i], direct[i], 1e-12 * (1.0 + std::abs(direct[i])));
        }
    }
}

TEST(YProcess, SwitchedDiffusionClosedForm) {
    // Y_t = 0.5 + W_{t ^ 0.5} + cos(W_0.5)(W_t - W_0.5) 1_{t > 0.5} + 0.3 t.
    const auto ens = ensemble_of(two_atom_model(), 3, 16, 4);
    const YProcess y(y_catalog::adapted_mix(), ens.model(), ens.partition(), ens.partition().floor());
    for (std::size_t n = 0; n < ens.size(); ++n) {
        const auto path = ens.path(n);
        for (double t : {0.25, 0.5, 0.75, 1.0}) {
            const double w5 = path.brownian_at(0.5);
            const double want = 0.5 + path.brownian_at(std::min(t, 0.5)) +
                                (t > 0.5 ? std::cos(w5) * (path.brownian_at(t) - w5) : 0.0) + 0.3 * t;
            EXPECT_NEAR(y.at(path, t)[0], want, 1e-12);
        }
    }
}

TEST(YProcess, JumpIncrementsEqualCoefficientTimesSize) {
    const auto ens = ensemble_of(two_atom_model(), 3, 16, 20);
    const YProcess y(y_catalog::adapted_mix(), ens.model(), ens.partition(), ens.partition().floor());
    int seen = 0;
    for (std::size_t n = 0; n < ens.size(); ++n) {
        const auto path = ens.path(n);
        for (const auto& j : path.jumps()) {
            const auto left = y.at(path, j.time, true), right = y.at(path, j.time);
            const auto v = y.v_at(path, j.time, j.size);
            for (int i = 0; i < 2; ++i) EXPECT_NEAR(right[i] - left[i], v[i] * j.size, 1e-12);
            ++seen;
        }
    }
    EXPECT_GT(seen, 10);
}

TEST(YProcess, SmallJumpsCompensatedAndGated) {
    const LevyModel model(0.0, 0.0, LevyMeasure::atoms({{0.5, 2.0}}), 1.0);
    const auto ens = ensemble_of(model, 3, 8, 4000);
    const YProcess y(y_catalog::small_jump_unit(), model, ens.partition(), ens.partition().floor());
    const YProcess gated(y_catalog::small_jump_unit(), model, ens.partition(), 0.5);
    std::vector<double> values;
    for (std::size_t n = 0; n < ens.size(); ++n) {
        const auto path = ens.path(n);
        const double want = 0.5 * static_cast<double>(path.jumps().size()) - 1.0;
        EXPECT_NEAR(y.at(path, 1.0)[0], want, 1e-12);
        EXPECT_EQ(gated.at(path, 1.0)[0], 0.0);
        values.push_back(y.at(path, 1.0)[0]);
    }
    const SampleStats s = sample_stats(values);
    EXPECT_LT(std::abs(s.mean), 4.0 * s.std_error);
}

TEST(YProcess, RejectsEpsilonOutsideRange) {
    const auto model = two_atom_model();
    const auto part = shell_partition(model, 3);
    EXPECT_THROW(YProcess(y_catalog::small_jump_unit(), model, part, part.floor() / 2.0), InvalidArgument);
    EXPECT_THROW(YProcess(y_catalog::small_jump_unit(), model, part, 1.5), InvalidArgument);
    EXPECT_THROW(YProcess(y_catalog::small_jump_unit(), model, part, 0.0), InvalidArgument);
}

TEST(DMinusY, AdaptedSpecIsZero) {
    const auto ens = ensemble_of(brownian_model(), 3, 16, 2);
    const auto path = ens.path(0);
    EXPECT_EQ(d_minus_Y(y_catalog::brownian(), path, ens.model(), ens.partition(), 0.5, DMinusMode::AdaptedZero)[0],
              0.0);
    EXPECT_THROW(d_minus_Y(y_catalog::terminal_brownian(1.0), path, ens.model(), ens.partition(), 0.5,
                           DMinusMode::AdaptedZero),
                 UnsupportedOperation);
}

TEST(DMinusY, TerminalBrownianIsW) {
    const auto ens = ensemble_of(brownian_model(), 3, 16, 5);
    for (std::size_t n = 0; n < ens.size(); ++n) {
        const auto path = ens.path(n);
        for (int k : {1, 5, 8, 15}) {
            const double s = ens.grid()[k];
            const auto spec = y_catalog::terminal_brownian(1.0);
            const double hook = d_minus_Y(spec, path, ens.model(), ens.partition(), s, DMinusMode::Analytic)[0];
            EXPECT_DOUBLE_EQ(hook, path.brownian_at(s));
            EXPECT_NEAR(d_minus_Y(spec, path, ens.model(), ens.partition(), s, DMinusMode::Numeric)[0], hook, 1e-6);
            EXPECT_NEAR(d_minus_Y(without_hook(spec), path, ens.model(), ens.partition(), s, DMinusMode::Analytic)[0],
                        hook, 1e-12);
        }
    }
}

TEST(DMinusY, TerminalSineIncludesTimeTerm) {
    // D_s of sin(W_T) W_r - r cos(W_T) as r -> s-: cos(W_T) W_s + s sin(W_T).
    const auto ens = ensemble_of(brownian_model(), 3, 16, 5);
    const auto spec = y_catalog::terminal_sine(1.0);
    for (std::size_t n = 0; n < ens.size(); ++n) {
        const auto path = ens.path(n);
        const double wt = path.brownian_at(1.0);
        for (int k : {2, 7, 12}) {
            const double s = ens.grid()[k];
            const double want = std::cos(wt) * path.brownian_at(s) + s * std::sin(wt);
            EXPECT_NEAR(d_minus_Y(spec, path, ens.model(), ens.partition(), s, DMinusMode::Analytic)[0], want, 1e-12);
            EXPECT_NEAR(d_minus_Y(without_hook(spec), path, ens.model(), ens.partition(), s, DMinusMode::Analytic)[0],
                        want, 1e-12);
            EXPECT_NEAR(d_minus_Y(spec, path, ens.model(), ens.partition(), s, DMinusMode::Numeric)[0], want, 1e-6);
        }
    }
}

TEST(ItoLedger, TermsSumToRecordedTotal) {
    const auto ens = ensemble_of(two_atom_model(), 3, 16, 50);
    for (LedgerForm form : {LedgerForm::General, LedgerForm::FiniteVariation}) {
        const auto ledger = form == LedgerForm::General
                                ? ito_ledger_general(y_catalog::adapted_mix(), test_functions::trig_mix(2), ens,
                                                     ens.partition().floor(), 1.0)
                                : ito_ledger_finite_variation(y_catalog::adapted_mix(), test_functions::trig_mix(2),
                                                              ens, ens.partition().floor(), 1.0);
        for (std::size_t n = 0; n < ens.size(); ++n) {
            double sum = 0.0;
            for (const auto& term : ledger_terms(form)) sum += ledger.values(term)[n];
            EXPECT_EQ(sum, ledger.values("rhs")[n]);
            EXPECT_EQ(ledger.values("lhs")[n] - ledger.values("rhs")[n], ledger.values("residual")[n]);
        }
    }
}

TEST(ItoLedger, AdaptedBrownianSquareResidualIsDiscreteQuadraticVariation) {
    const auto ens = ensemble_of(brownian_model(), 3, 64, 200);
    const auto ledger = ito_ledger_general(y_catalog::brownian(), test_functions::square(), ens, 1.0, 1.0);
    for (std::size_t n = 0; n < ens.size(); ++n) {
        const auto path = ens.path(n);
        double qv = 0.0;
        for (int k = 0; k < 64; ++k) {
            const double dw = path.brownian_at(ens.grid()[k + 1]) - path.brownian_at(ens.grid()[k]);
            qv += dw * dw;
        }
        EXPECT_NEAR(ledger.values("residual")[n], qv - 1.0, 1e-12);
        EXPECT_EQ(ledger.values("dminus_diffusion")[n], 0.0);
    }
}

TEST(ItoLedger, AdaptedRefinementOrderIsOneHalf) {
    const auto model = brownian_model();
    const auto study = ito_refinement_study(y_catalog::brownian(), test_functions::sine(), model,
                                            shell_partition(model, 3), 9, 2000, {16, 64, 256}, 1.0);
    ASSERT_EQ(study.rows.size(), 3u);
    EXPECT_GT(study.rows[0].rms_residual, study.rows[2].rms_residual);
    EXPECT_NEAR(study.order, 0.5, 0.1);
}

TEST(ItoLedger, PureJumpFiniteVariationWithinPathwiseBound) {
    const LevyModel model(0.0, 0.0, LevyMeasure::atoms({{0.5, 1.0}, {-0.25, 2.0}, {0.25, 3.0}}), 1.0);
    const auto ens = ensemble_of(model, 4, 32, 500);
    const auto ledger = ito_ledger_finite_variation(y_catalog::small_jump_unit(), test_functions::sine(), ens,
                                                    ens.partition().floor(), 1.0);
    ASSERT_EQ(ledger.quadrature_bound.size(), ens.size());
    for (std::size_t n = 0; n < ens.size(); ++n)
        EXPECT_LE(std::abs(ledger.values("residual")[n]), ledger.quadrature_bound[n]);
}

TEST(ItoLedger, FormsAgreeWhenBothApply) {
    const auto ens = ensemble_of(two_atom_model(), 3, 32, 200);
    const auto spec = y_catalog::adapted_mix();
    const auto f = test_functions::trig_mix(2);
    const auto general = ito_ledger_general(spec, f, ens, ens.partition().floor(), 1.0);
    const auto fv = ito_ledger_finite_variation(spec, f, ens, ens.partition().floor(), 1.0);
    for (std::size_t n = 0; n < ens.size(); ++n) {
        EXPECT_EQ(general.values("lhs")[n], fv.values("lhs")[n]);
        EXPECT_NEAR(general.values("rhs")[n], fv.values("rhs")[n], 1e-10);
    }
}

TEST(ItoLedger, EmptyLevyMeasureFormsCoincide) {
    const auto ens = ensemble_of(brownian_model(), 3, 32, 100);
    const auto general = ito_ledger_general(y_catalog::brownian(), test_functions::cosine(), ens, 1.0, 1.0);
    const auto fv = ito_ledger_finite_variation(y_catalog::brownian(), test_functions::cosine(), ens, 1.0, 1.0);
    for (std::size_t n = 0; n < ens.size(); ++n) EXPECT_EQ(general.values("residual")[n], fv.values("residual")[n]);
    EXPECT_EQ(general.stat("small_jumps").mean, 0.0);
    EXPECT_EQ(fv.stat("jump_sum").mean, 0.0);
}

TEST(ItoLedger, FiniteVariationRefusesInfiniteFirstMoment) {
    const LevyModel model(0.0, 1.0, LevyMeasure::power_law(1.0, 1.5, 1.0), 1.0);
    const auto ens = ensemble_of(model, 3, 8, 4);
    EXPECT_THROW(ito_ledger_finite_variation(y_catalog::brownian(), test_functions::sine(), ens, 1.0, 1.0),
                 UnsupportedOperation);
}

TEST(ItoLedger, RejectsOffGridTime) {
    const auto ens = ensemble_of(brownian_model(), 3, 8, 4);
    EXPECT_THROW(ito_ledger_general(y_catalog::brownian(), test_functions::sine(), ens, 1.0, 0.3), InvalidArgument);
}

TEST(ItoLedger, AnticipatingMeanResidualWithinQuadratureScale) {
    const auto ens = ensemble_of(brownian_model(), 3, 64, 2000);
    for (const auto& [spec, f] : {std::pair{y_catalog::terminal_brownian(1.0), test_functions::square()},
                                  std::pair{y_catalog::terminal_sine(1.0), test_functions::sine()}}) {
        const auto ledger = ito_ledger_general(spec, f, ens, 1.0, 1.0);
        const SampleStats& r = ledger.stat("residual");
        EXPECT_LE(std::abs(r.mean), 3.0 * r.std_error + 1.0 / 64.0) << spec.name;
        EXPECT_NE(ledger.stat("dminus_diffusion").mean, 0.0);
    }
}

TEST(EpsilonStudy, ExactOnceAllAtomsRetained) {
    const LevyModel model(0.0, 1.0, LevyMeasure::atoms({{0.5, 1.0}, {0.05, 20.0}}), 1.0);
    const auto ens = ensemble_of(model, 6, 8, 400);
    const auto rows = epsilon_convergence_study(y_catalog::small_jump_unit(), ens, {0.5, 0.25, 0.1, 0.04}, 1.0);
    ASSERT_EQ(rows.size(), 4u);
    EXPECT_GT(rows[0].gap, rows[1].gap);
    EXPECT_GT(rows[2].gap, 0.0);
    EXPECT_TRUE(rows[3].exact_zero);
    for (const auto& r : rows) EXPECT_TRUE(r.monotone) << r.epsilon;
}

TEST(ItoLedger, AnticipatingJumpCoefficient) {
    // v = total jump sum up to T: the jump delta-term is non-adapted and must still have mean zero.
    const LevyModel model(0.0, 1.0, LevyMeasure::atoms({{0.5, 1.0}, {-0.5, 1.0}, {0.25, 2.0}}), 1.0);
    const auto ens = ensemble_of(model, 4, 32, 3000);
    YComponent c;
    c.name = "anticipating_jumps";
    c.y0 = catalog::constant(0.0);
    c.v_small = SimpleRandomField(
        {{catalog::jump_sum(1.0), Shape::box({0.0, kInf}, ValueSet::nonzero()), std::nullopt}});
    const YSpec spec{"anticipating-jumps", {c}, false, 10.0};
    const auto ledger = ito_ledger_general(spec, test_functions::sine(), ens, ens.partition().floor(), 1.0, {{}, 4});
    const auto& delta = ledger.stat("delta_jump");
    const auto& cells = ledger.stat("jump_delta_cells");
    const auto& residual = ledger.stat("residual");
    EXPECT_LT(std::abs(delta.mean), 4.0 * delta.std_error);
    EXPECT_LT(std::abs(cells.mean), 4.0 * cells.std_error);
    EXPECT_GT(std::abs(ledger.stat("dminus_jump").mean), 10.0 * ledger.stat("dminus_jump").std_error);
    EXPECT_LE(std::abs(residual.mean), 3.0 * residual.std_error + 1.0 / 32.0);
}

TEST(ItoLedger, ExactGradientRouteMatchesFiniteDifferenceRoute) {
    const auto ens = ensemble_of(brownian_model(), 3, 16, 30);
    auto slow = y_catalog::terminal_sine(1.0);
    slow.components[0].diffusion_closed_gradient = {};
    const auto fast = ito_ledger_general(y_catalog::terminal_sine(1.0), test_functions::sine(), ens, 1.0, 1.0);
    const auto fd = ito_ledger_general(slow, test_functions::sine(), ens, 1.0, 1.0);
    for (std::size_t n = 0; n < ens.size(); ++n)
        EXPECT_NEAR(fast.values("delta_diffusion")[n], fd.values("delta_diffusion")[n], 1e-6);
}

TEST(ItoLedger, DiffusionOnlySpecIgnoresSmallJumpsOfTheModel) {
    const LevyModel model(0.0, 1.0, LevyMeasure::atoms({{0.5, 2.0}, {-0.5, 2.0}}), 1.0);
    const auto ens = ensemble_of(model, 3, 16, 200);
    const auto ledger = ito_ledger_general(y_catalog::terminal_brownian(1.0), test_functions::sine(), ens,
                                           ens.partition().floor(), 1.0);
    EXPECT_EQ(ledger.stat("delta_jump").mean, 0.0);
    EXPECT_EQ(ledger.stat("small_jumps").mean, 0.0);
}
