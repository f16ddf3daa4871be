#pragma once

// Decision rules for augmented PU prediction.  At prediction time both the
// features x and the label indicator S are observed.  A labeled record
// (S = 1) is positive by construction; on the unlabeled stratum the optimal
// rule compares the class posterior y(x) against (1 + s(x)) / 2, which is
// strictly larger than the feature-only threshold 1/2 whenever s(x) > 0 —
// the augmented rule is the more conservative of the two.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "purisk/math.hpp"

namespace purisk {

namespace detail {
inline void require(bool ok, const char* fn, const std::string& msg) {
    if (!ok) throw std::domain_error(std::string(fn) + ": requires " + msg);
}
inline std::string pair_str(double y, double s) {
    return " (y=" + to_string_g17(y) + ", s=" + to_string_g17(s) + ")";
}
}  // namespace detail

// Posterior of the true class on the unlabeled stratum:
// P(Y=1 | X=x, S=0) = (y - s) / (1 - s).  Domain: 0 <= s <= y <= 1 and s < 1.
// The result is clamped to [0, 1] to absorb last-ulp rounding.
inline double tilde_y(double y, double s) {
    detail::require(is_finite(y) && is_finite(s), "tilde_y", "finite y and s" + detail::pair_str(y, s));
    detail::require(s >= 0.0, "tilde_y", "s >= 0" + detail::pair_str(y, s));
    detail::require(s <= y, "tilde_y", "s <= y" + detail::pair_str(y, s));
    detail::require(y <= 1.0, "tilde_y", "y <= 1" + detail::pair_str(y, s));
    detail::require(s < 1.0, "tilde_y", "s < 1" + detail::pair_str(y, s));
    return clamp01((y - s) / (1.0 - s));
}

// Feature-only Bayes rule: positive iff y(x) > 1/2 (ties go negative).
inline int decide_db(double y) {
    detail::require(is_finite(y) && y >= 0.0 && y <= 1.0, "decide_db",
                    "y in [0, 1], got " + to_string_g17(y));
    return y > 0.5 ? 1 : 0;
}

// Augmented Bayes rule.  A labeled record is positive outright; an unlabeled
// one is positive iff y(x) > (1 + s(x)) / 2 (ties go negative).  Total over
// y, s_prob in [0, 1]: the threshold can only be crossed when s_prob < y, so
// no ordering between the two estimates is assumed.
inline int decide_db_pu(double y, double s_prob, int s_label) {
    detail::require(is_finite(y) && y >= 0.0 && y <= 1.0, "decide_db_pu",
                    "y in [0, 1], got " + to_string_g17(y));
    detail::require(is_finite(s_prob) && s_prob >= 0.0 && s_prob <= 1.0, "decide_db_pu",
                    "s_prob in [0, 1], got " + to_string_g17(s_prob));
    if (s_label != 0 && s_label != 1) {
        throw std::domain_error("decide_db_pu: requires s_label in {0, 1}, got " +
                                std::to_string(s_label));
    }
    if (s_label == 1) return 1;
    return y > 0.5 * (1.0 + s_prob) ? 1 : 0;
}

// Under a constant propensity c the augmented threshold on the unlabeled
// stratum collapses to a single number: predict positive iff the stratum
// posterior exceeds 1 / (2 - c).  Defined for c in [0, 1]; c = 1 gives 1.
inline double scar_threshold(double c) {
    detail::require(is_finite(c) && c >= 0.0 && c <= 1.0, "scar_threshold",
                    "c in [0, 1], got " + to_string_g17(c));
    return 1.0 / (2.0 - c);
}

// Threshold for a general cost weighting: with phi_inv_at_1 the posterior
// odds level at which the costs balance, the unlabeled-stratum rule becomes
// y > (phi_inv_at_1 + s) / (1 + phi_inv_at_1).  phi_inv_at_1 = 1 recovers the
// symmetric threshold (1 + s) / 2.
inline double generalized_threshold(double phi_inv_at_1, double s_prob) {
    if (!(is_finite(phi_inv_at_1) && phi_inv_at_1 > 0.0)) {
        throw std::domain_error("generalized_threshold: requires phi_inv_at_1 > 0, got " +
                                to_string_g17(phi_inv_at_1));
    }
    detail::require(is_finite(s_prob) && s_prob >= 0.0 && s_prob <= 1.0, "generalized_threshold",
                    "s_prob in [0, 1], got " + to_string_g17(s_prob));
    return (phi_inv_at_1 + s_prob) / (1.0 + phi_inv_at_1);
}

// Odds ratio between P(Y=1 | x, S=0) and P(Y=1 | x): equals 1 - e(x), so the
// unlabeled stratum always carries the smaller posterior odds.
inline double odds_ratio(double e) {
    detail::require(is_finite(e) && e >= 0.0 && e <= 1.0, "odds_ratio",
                    "e in [0, 1], got " + to_string_g17(e));
    return 1.0 - e;
}

// Same ratio from the two posteriors: (y - s) / y.  Requires y > 0.
inline double odds_ratio_from(double y, double s) {
    detail::require(is_finite(y) && is_finite(s), "odds_ratio_from",
                    "finite y and s" + detail::pair_str(y, s));
    detail::require(s >= 0.0, "odds_ratio_from", "s >= 0" + detail::pair_str(y, s));
    detail::require(s <= y, "odds_ratio_from", "s <= y" + detail::pair_str(y, s));
    detail::require(y <= 1.0, "odds_ratio_from", "y <= 1" + detail::pair_str(y, s));
    detail::require(y > 0.0, "odds_ratio_from", "y > 0" + detail::pair_str(y, s));
    return (y - s) / y;
}

// Screening score for unlabeled records: (y - s) / (1 - y), increasing in
// the stratum posterior; a score above 1 is exactly an augmented-rule
// positive.  y = 1 yields +infinity (a sure positive outranks everything).
inline double likely_positive_score(double y, double s) {
    detail::require(is_finite(y) && is_finite(s), "likely_positive_score",
                    "finite y and s" + detail::pair_str(y, s));
    detail::require(s >= 0.0, "likely_positive_score", "s >= 0" + detail::pair_str(y, s));
    detail::require(s <= y, "likely_positive_score", "s <= y" + detail::pair_str(y, s));
    detail::require(y <= 1.0, "likely_positive_score", "y <= 1" + detail::pair_str(y, s));
    if (y == 1.0) return kInf;
    return (y - s) / (1.0 - y);
}

struct RankItem {
    std::uint64_t id = 0;
    double y = 0.0;
    double s = 0.0;
};

// Top-k ids by likely_positive_score, descending; equal scores break toward
// the smaller id.  k may equal the input size; larger k is an error.
inline std::vector<std::uint64_t> rank_top_k(const std::vector<RankItem>& items, std::size_t k) {
    if (k > items.size()) {
        throw std::domain_error("rank_top_k: k=" + std::to_string(k) + " exceeds " +
                                std::to_string(items.size()) + " items");
    }
    std::vector<std::pair<double, std::uint64_t>> scored;
    scored.reserve(items.size());
    for (const RankItem& it : items) {
        scored.emplace_back(likely_positive_score(it.y, it.s), it.id);
    }
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    std::vector<std::uint64_t> out;
    out.reserve(k);
    for (std::size_t i = 0; i < k; ++i) out.push_back(scored[i].second);
    return out;
}

// Closed-form stratum posterior for the two-logistic family where
// y(x) = sigmoid(alpha x) and s(x) = sigmoid(alpha x) * sigmoid(beta x) ...
// arranged so that the stratum posterior is
//   1 / (1 + exp(-(alpha - beta) x) + exp(-alpha x)),
// evaluated through a three-term log-sum-exp so large |x| cannot overflow.
inline double example2_tilde_y(double alpha, double beta, double x) {
    detail::require(is_finite(alpha) && is_finite(beta) && is_finite(x), "example2_tilde_y",
                    "finite alpha, beta, x");
    const double t1 = -(alpha - beta) * x;
    const double t2 = -alpha * x;
    // log(1 + e^t1 + e^t2) via max-shift
    double m = 0.0;
    if (t1 > m) m = t1;
    if (t2 > m) m = t2;
    const double lse = m + std::log(std::exp(0.0 - m) + std::exp(t1 - m) + std::exp(t2 - m));
    return std::exp(-lse);
}

}  // namespace purisk
