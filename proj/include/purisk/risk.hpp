#pragma once

// Bayes-risk analysis for augmented PU prediction.
//
// Closed forms exist for the one-dimensional probit family: y(x) = Phi(x)
// with X standard normal and a hard labeling threshold e(x) = 1{x > a}.
// Everything else is estimated by Monte Carlo from the identity
//
//   L*_PU = 1/2 * ( P(S=0) - E|1 + s(X) - 2 y(X)| )
//
// whose integrand also yields the feature-only Bayes risk E[min(y, 1-y)],
// the excess risk of ignoring S, and the envelope
// E[s(X) 1{y(X) < 1/2}] <= excess <= P(S=1).

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "purisk/math.hpp"
#include "purisk/model.hpp"
#include "purisk/parallel.hpp"
#include "purisk/rng.hpp"

namespace purisk {

// ---------------------------------------------------------------------------
// Probit family: closed forms
// ---------------------------------------------------------------------------

struct ProbitReport {
    double a = 0.0;
    double l_star = 0.25;
    double l_star_pu = 0.0;
    double excess = 0.0;  // l_star - l_star_pu
    double p_s1 = 0.0;
    double p_s0 = 1.0;
};

// Exact risks for the probit scenario with threshold a.  Both branch families
// meet at a = 0 (values 0.125 / 0.125 / 0.375), and excess == l_star -
// l_star_pu holds identically.
inline ProbitReport probit_closed_form(double a) {
    if (!is_finite(a)) throw std::domain_error("probit_closed_form: a must be finite");
    const double phi = normal_cdf(a);
    ProbitReport r;
    r.a = a;
    r.l_star = 0.25;
    if (a > 0.0) {
        r.l_star_pu = phi - 0.5 * phi * phi - 0.25;
        r.excess = 0.5 * (1.0 - phi) * (1.0 - phi);
    } else {
        r.l_star_pu = 0.5 * phi * phi;
        r.excess = 0.25 - 0.5 * phi * phi;
    }
    r.p_s1 = 0.5 * (1.0 - phi * phi);
    r.p_s0 = 0.5 * (1.0 + phi * phi);
    return r;
}

// The probit scenario itself: 1-D, y(x) = Phi(x), e(x) = 1{x > a}.
inline Scenario make_probit_scenario(double a) {
    if (!is_finite(a)) throw std::invalid_argument("make_probit_scenario: a must be finite");
    return Scenario::direct(
        1, [](std::span<const double> x) { return normal_cdf(x[0]); },
        [a](std::span<const double> x) { return x[0] > a ? 1.0 : 0.0; },
        [](RngStream& rng, std::span<double> out) { out[0] = rng.normal(); },
        "probit a=" + to_string_g17(a));
}

// Flat scenario y(x) = y0, e(x) = e0 over standard normal features; the
// excess-bound envelope collapses to a point when y0 < 1/2.
inline Scenario make_constant_scenario(double y0, double e0, std::size_t dims = 1) {
    if (!(is_finite(y0) && y0 >= 0.0 && y0 <= 1.0)) {
        throw std::invalid_argument("make_constant_scenario: y must lie in [0, 1]");
    }
    if (!(is_finite(e0) && e0 >= 0.0 && e0 <= 1.0)) {
        throw std::invalid_argument("make_constant_scenario: e must lie in [0, 1]");
    }
    return Scenario::direct(
        dims, [y0](std::span<const double>) { return y0; },
        [e0](std::span<const double>) { return e0; },
        [](RngStream& rng, std::span<double> out) { rng.fill_normals(out); },
        "constant y=" + to_string_g17(y0) + " e=" + to_string_g17(e0) +
            " dims=" + std::to_string(dims));
}

// ---------------------------------------------------------------------------
// Monte-Carlo estimates
// ---------------------------------------------------------------------------

struct ExcessReport {
    Estimate delta;   // l_star - l_star_pu
    Estimate lower;   // E[s(X) 1{y(X) < 1/2}]
    Estimate upper;   // P(S=1)
    double violation = 0.0;  // max(0, lower - delta, delta - upper)
    std::uint64_t n_mc = 0;
    std::uint64_t seed = 0;
};

namespace detail {

// One record's contribution to every risk series, accumulated per block and
// merged in block order (bit-identical for any worker count).
struct RiskAccum {
    Moments bayes;         // min(y, 1-y)
    Moments augmented;     // 1/2 ((1-s) - |1+s-2y|)
    Moments sampled;       // stratum form with S drawn per record
    Moments label_prob;    // s(x)
    Moments lower_bound;   // s(x) 1{y < 1/2}
    Moments gap;           // bayes - augmented, pointwise
    double sum_aug_label = 0.0;  // sum of augmented * s, for the ratio SE

    void merge(const RiskAccum& o) {
        bayes.merge(o.bayes);
        augmented.merge(o.augmented);
        sampled.merge(o.sampled);
        label_prob.merge(o.label_prob);
        lower_bound.merge(o.lower_bound);
        gap.merge(o.gap);
        sum_aug_label += o.sum_aug_label;
    }
};

inline constexpr std::size_t kMcBlock = 8192;

inline RiskAccum mc_risk_core(const Scenario& scenario, std::uint64_t n_mc, std::uint64_t seed,
                              unsigned workers) {
    const std::size_t n_blocks = block_count(n_mc, kMcBlock);
    std::vector<RiskAccum> partials(n_blocks);

    parallel_for_blocks(n_mc, kMcBlock, workers, [&](std::size_t block, std::size_t begin,
                                                     std::size_t end) {
        RiskAccum acc;
        Vec x(scenario.dims());
        for (std::size_t i = begin; i < end; ++i) {
            RngStream rng = RngStream::for_record(seed, i);
            scenario.sample_x(rng, x);
            const double y = scenario.posterior(x);
            const double e = scenario.propensity(x);
            const double s = e * y;

            const double bayes = y < 1.0 - y ? y : 1.0 - y;
            const double w = 1.0 + s - 2.0 * y;
            const double augmented = 0.5 * ((1.0 - s) - std::fabs(w));
            acc.bayes.add(bayes);
            acc.augmented.add(augmented);
            acc.label_prob.add(s);
            acc.lower_bound.add(y < 0.5 ? s : 0.0);
            acc.gap.add(bayes - augmented);
            acc.sum_aug_label += augmented * s;

            // Cross-check series: draw S, keep the S=0 stratum contribution.
            if (rng.bernoulli(s)) {
                acc.sampled.add(0.0);
            } else {
                const double ty = clamp01((y - s) / (1.0 - s));
                acc.sampled.add(0.5 * (1.0 - std::fabs(2.0 * ty - 1.0)));
            }
        }
        partials[block] = acc;
    });

    RiskAccum total;
    for (const RiskAccum& p : partials) total.merge(p);
    return total;
}

}  // namespace detail

// Monte-Carlo risk report.  Requires n_mc >= 1000 (plug-in standard errors
// are meaningless below that).  Throws if the scenario labels everything
// (P(S=0) estimate of zero leaves no unlabeled stratum to renormalize).
inline RiskReport mc_bayes_risk(const Scenario& scenario, std::uint64_t n_mc, std::uint64_t seed,
                                unsigned workers = 1) {
    if (n_mc < 1000) {
        throw std::invalid_argument("mc_bayes_risk: n_mc must be at least 1000, got " +
                                    std::to_string(n_mc));
    }
    const detail::RiskAccum acc = detail::mc_risk_core(scenario, n_mc, seed, workers);
    const double n = static_cast<double>(n_mc);

    RiskReport r;
    r.n_mc = n_mc;
    r.seed = seed;
    r.l_star = {acc.bayes.mean(), acc.bayes.std_error()};
    r.l_star_pu = {acc.augmented.mean(), acc.augmented.std_error()};
    r.l_star_pu_sampled = {acc.sampled.mean(), acc.sampled.std_error()};
    r.p_s1 = {acc.label_prob.mean(), acc.label_prob.std_error()};
    r.excess = {acc.gap.mean(), acc.gap.std_error()};
    r.bound_lower = acc.lower_bound.mean();
    r.bound_upper = acc.label_prob.mean();
    r.bound_violation = std::max({0.0, r.bound_lower - r.excess.value,
                                  r.excess.value - r.bound_upper});

    const double p_s0 = 1.0 - acc.label_prob.mean();
    if (!(p_s0 > 0.0)) {
        throw std::runtime_error("mc_bayes_risk: degenerate stratum, P(S=0) estimate is zero");
    }
    const double ratio = acc.augmented.mean() / p_s0;
    // Delta method for mean(augmented) / mean(1 - s): the variance of
    // augmented - ratio * (1 - s) divided by n * P(S=0)^2.
    const double var_aug = acc.augmented.variance();
    const double var_s = acc.label_prob.variance();  // Var(1-s) = Var(s)
    const double cov_aug_s = acc.sum_aug_label / n - acc.augmented.mean() * acc.label_prob.mean();
    const double var_num = var_aug + ratio * ratio * var_s + 2.0 * ratio * cov_aug_s;
    r.l_star_pu_stratum = {ratio, std::sqrt(std::max(0.0, var_num) / n) / p_s0};
    return r;
}

// Excess-risk estimate with its structural envelope; same draws as
// mc_bayes_risk for the same (n_mc, seed).
inline ExcessReport mc_excess_risk(const Scenario& scenario, std::uint64_t n_mc,
                                   std::uint64_t seed, unsigned workers = 1) {
    if (n_mc < 1000) {
        throw std::invalid_argument("mc_excess_risk: n_mc must be at least 1000, got " +
                                    std::to_string(n_mc));
    }
    const detail::RiskAccum acc = detail::mc_risk_core(scenario, n_mc, seed, workers);
    ExcessReport r;
    r.n_mc = n_mc;
    r.seed = seed;
    r.delta = {acc.gap.mean(), acc.gap.std_error()};
    r.lower = {acc.lower_bound.mean(), acc.lower_bound.std_error()};
    r.upper = {acc.label_prob.mean(), acc.label_prob.std_error()};
    r.violation = std::max({0.0, r.lower.value - r.delta.value, r.delta.value - r.upper.value});
    return r;
}

}  // namespace purisk
