#include "purisk/synth.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>
#include <string>

#include "support/oracles.hpp"

using purisk::build_scenario;
using purisk::calibrate_intercept;
using purisk::CalibrationParams;
using purisk::ConstantPropensity;
using purisk::ProbabilisticLabeling;
using purisk::PuDataset;
using purisk::RngStream;
using purisk::sample_dataset;
using purisk::Scenario;
using purisk::TopQuantileLabeling;
using purisk::Variant;
using purisk::VariantSpec;
using purisk::Vec;

namespace {

VariantSpec make_spec(Variant v, double c, std::size_t dims = 20, double mu = 0.25) {
    VariantSpec spec;
    spec.variant = v;
    spec.dims = dims;
    spec.mu_per_coordinate = mu;
    spec.target_c = c;
    return spec;
}

// Max deviation of the scenario posterior from the best-fitting linear
// logistic model over probe points: ~0 exactly when the posterior is
// logistic-linear in x.
double logistic_fit_residual(const Scenario& sc, std::uint64_t seed, int n_probes) {
    std::vector<Vec> rows;
    Vec targets;
    Vec x(sc.dims());
    for (int i = 0; i < n_probes; ++i) {
        RngStream rng = RngStream::for_record(seed, static_cast<std::uint64_t>(i));
        int y = 0;
        sc.sample_x(rng, x, &y);
        Vec row = x;
        row.push_back(1.0);  // bias column
        rows.push_back(std::move(row));
        targets.push_back(purisk::logit(purisk::clamp01(sc.posterior(x)) * (1 - 2e-12) + 1e-12));
    }
    const Vec beta = oracle::least_squares(rows, targets);
    double worst = 0.0;
    for (int i = 0; i < n_probes; ++i) {
        double z = 0.0;
        for (std::size_t j = 0; j < rows[i].size(); ++j) z += beta[j] * rows[i][j];
        worst = std::max(worst, std::fabs(purisk::sigmoid(z) - purisk::sigmoid(targets[i])));
    }
    return worst;
}

}  // namespace

TEST(VariantNames, RoundTripThroughStrings) {
    for (Variant v : {Variant::v1, Variant::v2, Variant::v3, Variant::scar}) {
        EXPECT_EQ(purisk::variant_from_string(purisk::to_string(v)), v);
    }
    EXPECT_THROW(purisk::variant_from_string("v9"), std::invalid_argument);
}

TEST(VariantSpec, ValidationNamesTheOffendingField) {
    VariantSpec spec = make_spec(Variant::v1, 1.5);
    try {
        spec.validate();
        FAIL() << "expected invalid_argument";
    } catch (const std::invalid_argument& e) {
        EXPECT_NE(std::string(e.what()).find("target_c"), std::string::npos);
    }
    spec = make_spec(Variant::v1, 0.5, 0);
    EXPECT_THROW(spec.validate(), std::invalid_argument);
    spec = make_spec(Variant::v1, 0.5, 4);
    spec.gamma = Vec{1.0, 2.0};  // wrong length
    EXPECT_THROW(spec.validate(), std::invalid_argument);
}

TEST(CalibrateIntercept, ZeroDirectionReducesToAScalarSigmoidInversion) {
    // With gamma = 0 the propensity is sigmoid(r) for every x, so the
    // calibrated intercept must invert the sigmoid at target_c.
    VariantSpec spec = make_spec(Variant::v1, 0.5, 6);
    spec.gamma = Vec(6, 0.0);
    const double r_half = calibrate_intercept(spec, 50000, 4242, 5e-4);
    EXPECT_NEAR(r_half, 0.0, 0.01);

    spec.target_c = 0.3;
    const double r_third = calibrate_intercept(spec, 50000, 4242, 5e-4);
    EXPECT_NEAR(r_third, purisk::logit(0.3), 0.01);
}

TEST(CalibrateIntercept, IsDeterministicAndRejectsBadInputs) {
    VariantSpec spec = make_spec(Variant::v1, 0.3, 8);
    const double a = calibrate_intercept(spec, 20000, 91, 5e-4);
    const double b = calibrate_intercept(spec, 20000, 91, 5e-4);
    EXPECT_EQ(a, b);

    EXPECT_THROW(calibrate_intercept(make_spec(Variant::scar, 0.3), 1000, 1, 1e-3),
                 std::invalid_argument);
    EXPECT_THROW(calibrate_intercept(make_spec(Variant::v1, 1.0), 1000, 1, 1e-3),
                 std::invalid_argument);
    EXPECT_THROW(calibrate_intercept(spec, 0, 1, 1e-3), std::invalid_argument);
    EXPECT_THROW(calibrate_intercept(spec, 1000, 1, 0.0), std::invalid_argument);
}

TEST(CalibrateIntercept, HitsTheTargetOnAFreshSample) {
    // Calibrate, then re-estimate the positive-class mean propensity with new
    // draws; the two must agree to Monte-Carlo accuracy.
    for (Variant v : {Variant::v1, Variant::v2, Variant::v3}) {
        VariantSpec spec = make_spec(v, 0.3);
        Scenario sc = build_scenario(spec);
        const Vec var = (v == Variant::v3) ? [&] {
            Vec w(spec.dims, 1.0);
            for (std::size_t j = 1; j < spec.dims; j += 2) w[j] = 2.0;
            return w;
        }()
                                           : Vec(spec.dims, 1.0);
        purisk::Moments m;
        Vec x(spec.dims);
        for (std::size_t i = 0; i < 50000; ++i) {
            RngStream rng = RngStream::for_record(777, i);
            rng.fill_normals(x);
            for (std::size_t j = 0; j < spec.dims; ++j) {
                x[j] = spec.mu_per_coordinate + std::sqrt(var[j]) * x[j];
            }
            m.add(sc.propensity(x));
        }
        EXPECT_NEAR(m.mean(), 0.3, 0.01) << purisk::to_string(v);
    }
}

TEST(BuildScenario, ScarVariantHasConstantPropensityAndBalancedMixture) {
    VariantSpec spec = make_spec(Variant::scar, 0.3, 5);
    Scenario sc = build_scenario(spec);
    EXPECT_TRUE(sc.is_mixture());
    EXPECT_DOUBLE_EQ(sc.class_prior(), 0.5);
    EXPECT_DOUBLE_EQ(sc.target_c(), 0.3);
    EXPECT_NE(sc.fingerprint().find("scar"), std::string::npos);
    EXPECT_NE(sc.fingerprint().find("r=none"), std::string::npos);
    RngStream rng = RngStream::for_record(1, 1);
    Vec x(5);
    for (int i = 0; i < 100; ++i) {
        sc.sample_x(rng, x);
        EXPECT_DOUBLE_EQ(sc.propensity(x), 0.3);
    }
    for (std::size_t j = 0; j < 5; ++j) {
        EXPECT_DOUBLE_EQ(sc.positive_law().mean[j], 0.25);
        EXPECT_DOUBLE_EQ(sc.negative_law().mean[j], 0.0);
        EXPECT_DOUBLE_EQ(sc.positive_law().var[j], 1.0);
    }
}

TEST(BuildScenario, FirstVariantPosteriorIsExactlyLogisticLinear) {
    Scenario sc = build_scenario(make_spec(Variant::v1, 0.5, 10));
    // Closed form for the balanced equal-covariance mixture.
    RngStream rng = RngStream::for_record(31415, 0);
    Vec x(10);
    for (int i = 0; i < 10000; ++i) {
        for (double& v : x) v = 2.0 * rng.normal();
        double lin = -10 * 0.25 * 0.25 / 2.0;
        for (double v : x) lin += 0.25 * v;
        ASSERT_NEAR(sc.posterior(x), purisk::sigmoid(lin), 1e-10);
    }
    EXPECT_LE(logistic_fit_residual(sc, 161, 200), 1e-6);
}

TEST(BuildScenario, ThirdVariantPosteriorIsNotLogisticLinear) {
    // Heteroscedastic positive class: quadratic terms survive in the
    // log-density ratio, so no linear logistic model can reproduce the
    // posterior.
    Scenario sc = build_scenario(make_spec(Variant::v3, 0.5, 10));
    EXPECT_GT(logistic_fit_residual(sc, 161, 200), 1e-3);
    for (std::size_t j = 0; j < 10; ++j) {
        EXPECT_DOUBLE_EQ(sc.positive_law().var[j], j % 2 == 1 ? 2.0 : 1.0);
    }
}

TEST(BuildScenario, SecondVariantUsesThePowerPropensity) {
    Scenario sc = build_scenario(make_spec(Variant::v2, 0.3, 6));
    const auto& spec = sc.propensity_spec();
    const auto* p = std::get_if<purisk::PowerPropensity>(&spec);
    ASSERT_NE(p, nullptr);
    EXPECT_DOUBLE_EQ(p->exponent, purisk::kV2Exponent);
    // Powered propensity is the plain one raised to the exponent.
    Vec x(6, 0.2);
    const double z = purisk::dot(p->base.gamma, x) + p->base.intercept;
    EXPECT_NEAR(sc.propensity(x), std::pow(purisk::sigmoid(z), 10.0), 1e-13);
}

TEST(SampleDataset, LabeledRecordsAreAllTruePositivesAndDrawsAreReproducible) {
    Scenario sc = build_scenario(make_spec(Variant::v1, 0.3, 8));
    PuDataset a = sample_dataset(sc, 3000, 17);
    PuDataset b = sample_dataset(sc, 3000, 17);
    ASSERT_EQ(a.size(), 3000u);
    std::size_t positives = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a.s(i) == 1) {
            EXPECT_EQ(a.y_true(i), 1);
        }
        positives += static_cast<std::size_t>(a.y_true(i));
        ASSERT_EQ(a.y_true(i), b.y_true(i));
        ASSERT_EQ(a.s(i), b.s(i));
        for (std::size_t j = 0; j < a.dims(); ++j) ASSERT_EQ(a.x(i)[j], b.x(i)[j]);
    }
    EXPECT_NEAR(static_cast<double>(positives) / 3000.0, 0.5, 0.03);
    EXPECT_EQ(a.meta().seed, 17u);
    EXPECT_EQ(a.meta().fingerprint, sc.fingerprint());
    EXPECT_DOUBLE_EQ(a.meta().target_c, 0.3);
    EXPECT_DOUBLE_EQ(a.meta().achieved_c, a.recompute_achieved_c());
}

TEST(SampleDataset, LabeledSetsAreNestedAcrossLabelFrequencies) {
    // Same seed, lower target: the labeling uniform per record is identical,
    // and scar propensity drops from 0.6 to 0.2, so every record labeled under
    // c=0.2 is also labeled under c=0.6.
    Scenario generous = build_scenario(make_spec(Variant::scar, 0.6, 4));
    Scenario scarce = build_scenario(make_spec(Variant::scar, 0.2, 4));
    PuDataset lo = sample_dataset(scarce, 5000, 23);
    PuDataset hi = sample_dataset(generous, 5000, 23);
    std::size_t lo_total = 0;
    for (std::size_t i = 0; i < lo.size(); ++i) {
        ASSERT_EQ(lo.y_true(i), hi.y_true(i));
        if (lo.s(i) == 1) {
            EXPECT_EQ(hi.s(i), 1) << "record " << i;
            ++lo_total;
        }
    }
    EXPECT_GT(lo_total, 0u);
}

TEST(SampleDataset, RealizedLabelFrequencyTracksTheTarget) {
    Scenario sc = build_scenario(make_spec(Variant::scar, 0.3, 4));
    PuDataset ds = sample_dataset(sc, 100000, 5);
    // ~50000 positives; 3 binomial standard errors around 0.3.
    const double se = std::sqrt(0.3 * 0.7 / 50000.0);
    EXPECT_NEAR(ds.meta().achieved_c, 0.3, 3.5 * se);
}

TEST(SampleDataset, BoundaryLabelFrequenciesAreExact) {
    Scenario all = build_scenario(make_spec(Variant::scar, 1.0, 3));
    PuDataset ds = sample_dataset(all, 2000, 9);
    EXPECT_DOUBLE_EQ(ds.meta().achieved_c, 1.0);

    // target_c = 0 is outside VariantSpec's domain; build the constant-zero
    // propensity scenario directly.
    Scenario none = Scenario::gaussian_mixture(
        0.5, purisk::GaussianDiag{Vec(3, 0.25), Vec(3, 1.0)},
        purisk::GaussianDiag{Vec(3, 0.0), Vec(3, 1.0)}, ConstantPropensity{0.0}, "no labels");
    PuDataset empty = sample_dataset(none, 2000, 9);
    EXPECT_DOUBLE_EQ(empty.meta().achieved_c, 0.0);
    for (std::size_t i = 0; i < empty.size(); ++i) ASSERT_EQ(empty.s(i), 0);
}

TEST(SampleDataset, TopQuantileLabelingIsDeterministicAndExactlySized) {
    Scenario sc = build_scenario(make_spec(Variant::v1, 0.5, 4));
    TopQuantileLabeling strategy{Vec{1.0, 0.5, 0.0, -0.25}, 0.3};
    PuDataset ds = sample_dataset(sc, 500, 31, strategy);
    std::size_t positives = 0, labeled = 0;
    double min_labeled_score = purisk::kInf, max_unlabeled_score = -purisk::kInf;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        if (ds.y_true(i) == 0) {
            ASSERT_EQ(ds.s(i), 0);
            continue;
        }
        ++positives;
        labeled += static_cast<std::size_t>(ds.s(i));
        const double score = purisk::dot(strategy.score_weights, ds.x(i));
        if (ds.s(i) == 1) {
            min_labeled_score = std::min(min_labeled_score, score);
        } else {
            max_unlabeled_score = std::max(max_unlabeled_score, score);
        }
    }
    EXPECT_EQ(labeled, static_cast<std::size_t>(0.3 * static_cast<double>(positives)));
    EXPECT_GE(min_labeled_score, max_unlabeled_score);
    EXPECT_DOUBLE_EQ(ds.meta().target_c, 0.3);

    EXPECT_THROW(sample_dataset(sc, 500, 31, TopQuantileLabeling{Vec{1.0}, 0.3}),
                 std::invalid_argument);
    EXPECT_THROW(sample_dataset(sc, 500, 31, TopQuantileLabeling{Vec(4, 1.0), 1.5}),
                 std::invalid_argument);
}

TEST(SampleDataset, TopQuantileWithNoPositivesIsAnError) {
    Scenario never = Scenario::direct(
        1, [](std::span<const double>) { return 0.0; },  // y(x) = 0: no positives exist
        [](std::span<const double>) { return 0.5; },
        [](RngStream& rng, std::span<double> out) { out[0] = rng.normal(); }, "all negative");
    EXPECT_THROW(sample_dataset(never, 100, 1, TopQuantileLabeling{Vec{1.0}, 0.5}),
                 std::runtime_error);
    EXPECT_THROW(sample_dataset(never, 0, 1), std::invalid_argument);
}

TEST(SampleDataset, FreshReEstimatesOfLabelFrequencyStayNearTheTarget) {
    // Ten independent datasets per variant at one target; the mean realized
    // label frequency must sit within Monte-Carlo noise of the target.
    for (Variant v : {Variant::v1, Variant::v2, Variant::v3}) {
        Scenario sc = build_scenario(make_spec(v, 0.3));
        purisk::Moments m;
        for (std::uint64_t seed = 100; seed < 110; ++seed) {
            m.add(sample_dataset(sc, 10000, seed).meta().achieved_c);
        }
        EXPECT_NEAR(m.mean(), 0.3, 0.01) << purisk::to_string(v);
    }
}
