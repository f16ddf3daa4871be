#pragma once

// Synthetic benchmark families.  All four variants share the same class
// structure — a balanced two-component Gaussian mixture in p dimensions with
// the positive mean shifted by a constant per coordinate — and differ in how
// positives get labeled:
//
//   v1    logistic propensity sigmoid(gamma . x + r)
//   v2    the v1 propensity raised to the 10th power (sharper selection)
//   v3    the v1 propensity over a heteroscedastic positive class
//         (variances alternate 1, 2, 1, 2, ... so the class posterior is not
//         logistic in x)
//   scar  constant propensity (selected completely at random)
//
// For v1-v3 the intercept r is calibrated by bisection so that the average
// propensity over the positive class hits a target label frequency c.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "purisk/math.hpp"
#include "purisk/model.hpp"
#include "purisk/rng.hpp"

namespace purisk {

enum class Variant { v1, v2, v3, scar };

inline const char* to_string(Variant v) {
    switch (v) {
        case Variant::v1: return "v1";
        case Variant::v2: return "v2";
        case Variant::v3: return "v3";
        case Variant::scar: return "scar";
    }
    return "unknown";
}

inline Variant variant_from_string(const std::string& s) {
    if (s == "v1") return Variant::v1;
    if (s == "v2") return Variant::v2;
    if (s == "v3") return Variant::v3;
    if (s == "scar") return Variant::scar;
    throw std::invalid_argument("variant: unknown name \"" + s +
                                "\" (expected v1, v2, v3 or scar)");
}

// Exponent applied to the base propensity in variant v2.
inline constexpr double kV2Exponent = 10.0;

struct VariantSpec {
    Variant variant = Variant::v1;
    std::size_t dims = 20;
    double mu_per_coordinate = 0.25;  // positive-class mean shift per coordinate
    double target_c = 0.5;            // label frequency P(S=1 | Y=1), in (0, 1]
    std::optional<Vec> gamma;         // propensity direction; default all 0.5

    Vec effective_gamma() const {
        if (gamma) {
            if (gamma->size() != dims) {
                throw std::invalid_argument("variant spec: gamma has " +
                                            std::to_string(gamma->size()) +
                                            " coordinates, expected " + std::to_string(dims));
            }
            return *gamma;
        }
        return Vec(dims, 0.5);
    }

    void validate() const {
        if (dims == 0) throw std::invalid_argument("variant spec: dims must be positive");
        if (!is_finite(mu_per_coordinate)) {
            throw std::invalid_argument("variant spec: mu_per_coordinate must be finite");
        }
        if (!(target_c > 0.0 && target_c <= 1.0)) {
            throw std::invalid_argument("variant spec: target_c must lie in (0, 1], got " +
                                        to_string_g17(target_c));
        }
        effective_gamma();
    }
};

// Labeling strategies for sample_dataset.
struct ProbabilisticLabeling {};  // S ~ Bernoulli(e(x)) per positive

// Deterministic alternative: exactly floor(fraction * #positives) of the
// positives get labeled — those with the highest linear score w . x, ties
// broken toward the earlier record.
struct TopQuantileLabeling {
    Vec score_weights;
    double fraction = 0.5;  // in [0, 1]
};

using LabelingStrategy = std::variant<ProbabilisticLabeling, TopQuantileLabeling>;

struct CalibrationParams {
    std::size_t mc_positives = 200000;  // positive-class draws for the intercept search
    double tol = 5e-4;                  // |mean propensity - target_c| stopping rule
    std::uint64_t seed = 4242;
};

namespace detail {

// Positive-class variances per variant (v3 alternates 1, 2, 1, 2, ...).
inline Vec positive_variances(Variant v, std::size_t dims) {
    Vec var(dims, 1.0);
    if (v == Variant::v3) {
        for (std::size_t j = 1; j < dims; j += 2) var[j] = 2.0;
    }
    return var;
}

}  // namespace detail

// Intercept r such that the positive-class average of the variant's
// propensity equals target_c, found by bisection on a fixed Monte-Carlo
// sample of the positive class.  The initial bracket [-1, 1] is widened by
// doubling; 60 doublings without a sign change is an error (reports the last
// bracket).  Defined for v1, v2 and v3 (scar needs no intercept).
inline double calibrate_intercept(const VariantSpec& spec, std::size_t mc_positives,
                                  std::uint64_t seed, double tol) {
    spec.validate();
    if (spec.variant == Variant::scar) {
        throw std::invalid_argument("calibrate_intercept: scar has no intercept to calibrate");
    }
    if (!(spec.target_c > 0.0 && spec.target_c < 1.0)) {
        throw std::invalid_argument("calibrate_intercept: target_c must lie in (0, 1), got " +
                                    to_string_g17(spec.target_c));
    }
    if (mc_positives == 0) {
        throw std::invalid_argument("calibrate_intercept: mc_positives must be positive");
    }
    if (!(tol > 0.0)) throw std::invalid_argument("calibrate_intercept: tol must be positive");

    const Vec gamma = spec.effective_gamma();
    const Vec var = detail::positive_variances(spec.variant, spec.dims);
    const double exponent = spec.variant == Variant::v2 ? kV2Exponent : 1.0;

    // Only the linear score gamma . x matters, so keep one scalar per draw.
    Vec scores(mc_positives);
    for (std::size_t i = 0; i < mc_positives; ++i) {
        RngStream rng = RngStream::for_record(seed, i);
        double acc = 0.0;
        for (std::size_t j = 0; j < spec.dims; ++j) {
            const double xj = spec.mu_per_coordinate + std::sqrt(var[j]) * rng.normal();
            acc += gamma[j] * xj;
        }
        scores[i] = acc;
    }

    auto mean_propensity = [&](double r) {
        double total = 0.0;
        for (double z : scores) {
            total += exponent == 1.0 ? sigmoid(z + r)
                                     : std::exp(-exponent * log1pexp(-(z + r)));
        }
        return total / static_cast<double>(mc_positives);
    };

    // Widen until the target is bracketed (mean propensity is increasing in r).
    double lo = -1.0, hi = 1.0;
    int doublings = 0;
    while (mean_propensity(lo) > spec.target_c) {
        lo *= 2.0;
        if (++doublings > 60) {
            throw std::runtime_error("calibrate_intercept: no bracket after 60 doublings, last [" +
                                     to_string_g17(lo) + ", " + to_string_g17(hi) + "]");
        }
    }
    doublings = 0;
    while (mean_propensity(hi) < spec.target_c) {
        hi *= 2.0;
        if (++doublings > 60) {
            throw std::runtime_error("calibrate_intercept: no bracket after 60 doublings, last [" +
                                     to_string_g17(lo) + ", " + to_string_g17(hi) + "]");
        }
    }

    for (int iter = 0; iter < 500; ++iter) {
        const double mid = 0.5 * (lo + hi);
        const double f = mean_propensity(mid) - spec.target_c;
        if (std::fabs(f) <= tol) return mid;
        if (f < 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    throw std::runtime_error("calibrate_intercept: bisection failed to reach tol=" +
                             to_string_g17(tol) + " within 500 iterations");
}

// Fully specified scenario for a variant: balanced mixture with means 0 and
// mu_per_coordinate * 1, variant-specific positive-class covariance, and the
// calibrated (or constant) propensity.
inline Scenario build_scenario(const VariantSpec& spec, const CalibrationParams& calib = {}) {
    spec.validate();
    GaussianDiag positive{Vec(spec.dims, spec.mu_per_coordinate),
                          detail::positive_variances(spec.variant, spec.dims)};
    GaussianDiag negative{Vec(spec.dims, 0.0), Vec(spec.dims, 1.0)};

    PropensitySpec prop = ConstantPropensity{spec.target_c};
    std::string r_part = "none";
    if (spec.variant != Variant::scar) {
        const double r = calibrate_intercept(spec, calib.mc_positives, calib.seed, calib.tol);
        r_part = to_string_g17(r);
        LogisticLinearPropensity base{spec.effective_gamma(), r};
        if (spec.variant == Variant::v2) {
            prop = PowerPropensity{std::move(base), kV2Exponent};
        } else {
            prop = std::move(base);
        }
    }

    std::string fp = std::string(to_string(spec.variant)) + " dims=" + std::to_string(spec.dims) +
                     " mu=" + to_string_g17(spec.mu_per_coordinate) +
                     " c=" + to_string_g17(spec.target_c) + " r=" + r_part;
    Scenario sc = Scenario::gaussian_mixture(0.5, std::move(positive), std::move(negative),
                                             std::move(prop), std::move(fp));
    sc.set_target_c(spec.target_c);
    return sc;
}

// Draw n records.  Record i uses the substream (seed, i); the per-record draw
// order is: class pick, features, then (probabilistic labeling, positives
// only) the label uniform.  Holding the seed fixed while moving target_c
// therefore reuses the identical (x, y) sample and the identical label
// uniforms, so labeled sets are nested across label frequencies.
inline PuDataset sample_dataset(const Scenario& scenario, std::size_t n, std::uint64_t seed,
                                const LabelingStrategy& strategy = ProbabilisticLabeling{}) {
    if (n == 0) throw std::invalid_argument("sample_dataset: n must be positive");

    std::vector<Sample> samples(n);
    const bool probabilistic = std::holds_alternative<ProbabilisticLabeling>(strategy);
    for (std::size_t i = 0; i < n; ++i) {
        RngStream rng = RngStream::for_record(seed, i);
        Sample& r = samples[i];
        r.x.resize(scenario.dims());
        scenario.sample_x(rng, r.x, &r.y);
        if (probabilistic && r.y == 1) {
            r.s = rng.bernoulli(scenario.propensity(r.x)) ? 1 : 0;
        }
    }

    double target_c = scenario.target_c();
    if (const auto* tq = std::get_if<TopQuantileLabeling>(&strategy)) {
        if (tq->score_weights.size() != scenario.dims()) {
            throw std::invalid_argument("sample_dataset: top-quantile score weights have " +
                                        std::to_string(tq->score_weights.size()) +
                                        " coordinates, expected " + std::to_string(scenario.dims()));
        }
        if (!(tq->fraction >= 0.0 && tq->fraction <= 1.0)) {
            throw std::invalid_argument("sample_dataset: top-quantile fraction must lie in [0, 1]");
        }
        std::vector<std::pair<double, std::size_t>> pos;  // (score, index)
        for (std::size_t i = 0; i < n; ++i) {
            if (samples[i].y == 1) pos.emplace_back(dot(tq->score_weights, samples[i].x), i);
        }
        if (pos.empty()) {
            throw std::runtime_error("sample_dataset: no positive records to label");
        }
        std::sort(pos.begin(), pos.end(), [](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first > b.first;
            return a.second < b.second;
        });
        const std::size_t k = static_cast<std::size_t>(tq->fraction * static_cast<double>(pos.size()));
        for (std::size_t j = 0; j < k; ++j) samples[pos[j].second].s = 1;
        target_c = tq->fraction;
    }

    std::size_t n_pos = 0, n_lab = 0;
    for (const Sample& r : samples) {
        n_pos += static_cast<std::size_t>(r.y);
        n_lab += static_cast<std::size_t>(r.s);
    }

    DatasetMeta meta;
    meta.fingerprint = scenario.fingerprint();
    meta.target_c = target_c;
    meta.achieved_c = n_pos == 0 ? 0.0 : static_cast<double>(n_lab) / static_cast<double>(n_pos);
    meta.seed = seed;
    return PuDataset(std::move(samples), std::move(meta));
}

}  // namespace purisk
