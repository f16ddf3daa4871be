#include "purisk/risk.hpp"

#include <gtest/gtest.h>

#include <cmath>

using purisk::make_constant_scenario;
using purisk::make_probit_scenario;
using purisk::mc_bayes_risk;
using purisk::mc_excess_risk;
using purisk::probit_closed_form;
using purisk::ProbitReport;
using purisk::RiskReport;
using purisk::Scenario;

TEST(ProbitClosedForm, MatchesFrozenReferenceValues) {
    // Reference values computed with an independent quadrature oracle.
    const ProbitReport neg = probit_closed_form(-1.0);
    EXPECT_DOUBLE_EQ(neg.l_star, 0.25);
    EXPECT_NEAR(neg.l_star_pu, 0.012585744800027563, 1e-15);
    EXPECT_NEAR(neg.excess, 0.23741425519997245, 1e-15);
    EXPECT_NEAR(neg.p_s1, 0.48741425519997245, 1e-15);

    const ProbitReport pos = probit_closed_form(1.0);
    EXPECT_NEAR(pos.l_star_pu, 0.23741425519997245, 1e-15);
    EXPECT_NEAR(pos.excess, 0.012585744800027563, 1e-15);
    EXPECT_NEAR(pos.p_s1, 0.14606950913142952, 1e-15);

    const ProbitReport zero = probit_closed_form(0.0);
    EXPECT_DOUBLE_EQ(zero.l_star_pu, 0.125);
    EXPECT_DOUBLE_EQ(zero.excess, 0.125);
    EXPECT_DOUBLE_EQ(zero.p_s1, 0.375);

    EXPECT_THROW(probit_closed_form(purisk::kNaN), std::domain_error);
}

TEST(ProbitClosedForm, BranchesMeetContinuouslyAtZero) {
    const ProbitReport left = probit_closed_form(-1e-13);
    const ProbitReport right = probit_closed_form(1e-13);
    EXPECT_NEAR(left.l_star_pu, right.l_star_pu, 1e-12);
    EXPECT_NEAR(left.excess, right.excess, 1e-12);
    EXPECT_NEAR(left.p_s1, right.p_s1, 1e-12);
}

TEST(ProbitClosedForm, InternalIdentitiesHoldOnAGrid) {
    for (double a = -4.0; a <= 4.0; a += 0.08) {
        const ProbitReport r = probit_closed_form(a);
        EXPECT_NEAR(r.excess, r.l_star - r.l_star_pu, 1e-15) << "a=" << a;
        EXPECT_DOUBLE_EQ(r.p_s1 + r.p_s0, 1.0) << "a=" << a;
        EXPECT_GE(r.l_star_pu, -1e-15);
        EXPECT_GE(r.excess, -1e-15);
    }
}

TEST(ProbitClosedForm, ExcessIsMonotoneInTheThresholdAndSaturates) {
    // Raising the threshold labels fewer records, so the value of observing
    // the label shrinks: excess decreases in a.
    double prev = purisk::kInf;
    for (double a = -4.0; a <= 4.0; a += 0.08) {
        const double ex = probit_closed_form(a).excess;
        EXPECT_LE(ex, prev + 1e-15) << "a=" << a;
        prev = ex;
    }
    EXPECT_NEAR(probit_closed_form(8.0).excess, 0.0, 1e-8);
    EXPECT_NEAR(probit_closed_form(-8.0).excess, 0.25, 1e-8);
}

TEST(ProbitScenario, ExposesTheClosedFormIngredients) {
    Scenario sc = make_probit_scenario(0.7);
    EXPECT_EQ(sc.dims(), 1u);
    const double below[] = {0.69};
    const double above[] = {0.71};
    EXPECT_DOUBLE_EQ(sc.propensity(below), 0.0);
    EXPECT_DOUBLE_EQ(sc.propensity(above), 1.0);
    const double origin[] = {0.0};
    EXPECT_DOUBLE_EQ(sc.posterior(origin), 0.5);
    const double one[] = {1.0};
    EXPECT_NEAR(sc.posterior(one), 0.84134474606854293, 1e-15);
}

TEST(MonteCarloRisk, AgreesWithTheClosedFormAtFourSigma) {
    const double a = 0.0;
    const ProbitReport exact = probit_closed_form(a);
    const RiskReport mc = mc_bayes_risk(make_probit_scenario(a), 100000, 3);
    EXPECT_NEAR(mc.l_star.value, exact.l_star, 4.0 * mc.l_star.std_error);
    EXPECT_NEAR(mc.l_star_pu.value, exact.l_star_pu, 4.0 * mc.l_star_pu.std_error);
    EXPECT_NEAR(mc.l_star_pu_sampled.value, exact.l_star_pu,
                4.0 * mc.l_star_pu_sampled.std_error);
    EXPECT_NEAR(mc.excess.value, exact.excess, 4.0 * mc.excess.std_error);
    EXPECT_NEAR(mc.p_s1.value, exact.p_s1, 4.0 * mc.p_s1.std_error);
    EXPECT_NEAR(mc.l_star_pu_stratum.value, exact.l_star_pu / exact.p_s0,
                4.0 * mc.l_star_pu_stratum.std_error);
    EXPECT_GT(mc.l_star.std_error, 0.0);
    EXPECT_EQ(mc.n_mc, 100000u);
}

TEST(MonteCarloRisk, StratumFormIsTheRenormalizedWholePopulationForm) {
    const RiskReport mc = mc_bayes_risk(make_probit_scenario(0.6), 50000, 11);
    const double p_s0 = 1.0 - mc.p_s1.value;
    EXPECT_NEAR(mc.l_star_pu_stratum.value, mc.l_star_pu.value / p_s0, 1e-15);
}

TEST(MonteCarloRisk, IsDeterministicAcrossWorkerCounts) {
    Scenario sc = make_probit_scenario(1.0);
    const RiskReport one = mc_bayes_risk(sc, 50000, 42, 1);
    const RiskReport four = mc_bayes_risk(sc, 50000, 42, 4);
    const RiskReport rerun = mc_bayes_risk(sc, 50000, 42, 1);
    EXPECT_EQ(one.l_star.value, four.l_star.value);
    EXPECT_EQ(one.l_star_pu.value, four.l_star_pu.value);
    EXPECT_EQ(one.l_star_pu_sampled.value, four.l_star_pu_sampled.value);
    EXPECT_EQ(one.excess.value, four.excess.value);
    EXPECT_EQ(one.p_s1.value, four.p_s1.value);
    EXPECT_EQ(one.l_star.value, rerun.l_star.value);
    EXPECT_EQ(one.l_star.std_error, four.l_star.std_error);
}

TEST(MonteCarloRisk, NeverObservingTheLabelRemovesNothing) {
    // e = 0: the label channel is dead, the two risks coincide pointwise and
    // the excess is exactly zero with exact zero bounds.
    const RiskReport mc = mc_bayes_risk(make_constant_scenario(0.3, 0.0), 5000, 1);
    EXPECT_EQ(mc.l_star.value, mc.l_star_pu.value);
    EXPECT_EQ(mc.excess.value, 0.0);
    EXPECT_EQ(mc.excess.std_error, 0.0);
    EXPECT_EQ(mc.p_s1.value, 0.0);
    EXPECT_EQ(mc.bound_lower, 0.0);
    EXPECT_EQ(mc.bound_upper, 0.0);
    EXPECT_EQ(mc.bound_violation, 0.0);
}

TEST(MonteCarloRisk, DegenerateFullyLabeledScenarioIsAnError) {
    EXPECT_THROW(mc_bayes_risk(make_constant_scenario(1.0, 1.0), 5000, 1), std::runtime_error);
    EXPECT_THROW(mc_bayes_risk(make_probit_scenario(0.0), 999, 1), std::invalid_argument);
    EXPECT_THROW(make_constant_scenario(1.2, 0.5), std::invalid_argument);
    EXPECT_THROW(make_constant_scenario(0.5, -0.1), std::invalid_argument);
}

TEST(ExcessRisk, TightConstantCaseCollapsesTheBoundsToAPoint) {
    // y = 0.3, e = 0.5: lower bound, excess and upper bound all equal 0.15.
    const purisk::ExcessReport r = purisk::mc_excess_risk(make_constant_scenario(0.3, 0.5), 5000, 1);
    EXPECT_NEAR(r.delta.value, 0.15, 1e-12);
    EXPECT_NEAR(r.lower.value, 0.15, 1e-12);
    EXPECT_NEAR(r.upper.value, 0.15, 1e-12);
    EXPECT_LE(r.violation, 1e-12);
}

TEST(ExcessRisk, BoundsBracketTheExcessOnTheProbitFamily) {
    for (double a : {-1.0, 0.0, 1.0}) {
        const purisk::ExcessReport r = purisk::mc_excess_risk(make_probit_scenario(a), 100000, 19);
        EXPECT_LE(r.lower.value, r.delta.value + 3.0 * (r.lower.std_error + r.delta.std_error))
            << "a=" << a;
        EXPECT_LE(r.delta.value, r.upper.value + 3.0 * (r.delta.std_error + r.upper.std_error))
            << "a=" << a;
        // Per-record rounding can leave sub-ulp-scale slack, nothing more.
        EXPECT_LE(r.violation, 1e-12) << "a=" << a;
        const ProbitReport exact = probit_closed_form(a);
        EXPECT_NEAR(r.delta.value, exact.excess, 4.0 * r.delta.std_error) << "a=" << a;
    }
}

TEST(ExcessRisk, SharesTheSampleWithTheRiskReport) {
    Scenario sc = make_probit_scenario(0.3);
    const RiskReport risk = mc_bayes_risk(sc, 20000, 8);
    const purisk::ExcessReport excess = purisk::mc_excess_risk(sc, 20000, 8);
    EXPECT_EQ(excess.delta.value, risk.excess.value);
    EXPECT_EQ(excess.lower.value, risk.bound_lower);
    EXPECT_EQ(excess.upper.value, risk.bound_upper);
}
