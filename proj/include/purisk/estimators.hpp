#pragma once

// Estimation from PU data: a weighted logistic regression solved by plain
// gradient descent with backtracking line search, a direct logistic fit of
// the label indicator, and an EM fit of the (posterior, propensity) pair
// from the observable (x, s) view.
//
// EM structure: the missing datum for an unlabeled record is its class.  The
// E-step assigns each unlabeled record the soft-positive weight
//   q = y_hat (1 - e_hat) / (1 - y_hat e_hat),
// the posterior M-step refits y_hat against targets (1 for labeled, q for
// unlabeled), and the propensity M-step refits e_hat against S restricted to
// the soft positives (labeled records with weight 1 and target 1, unlabeled
// with weight q and target 0).  The observed-data log-likelihood
//   sum_{s=1} log(y_hat e_hat) + sum_{s=0} log(1 - y_hat e_hat)
// is recorded after every iteration and must never decrease.

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "purisk/math.hpp"
#include "purisk/model.hpp"

namespace purisk {

struct LogisticHyper {
    double l2 = 1e-3;           // ridge strength on the weights (bias unpenalized)
    std::size_t max_iter = 500;
    double tol = 1e-6;          // max-norm of the gradient at which to stop
};

struct LogisticModel {
    Vec weights;
    double bias = 0.0;
    double l2 = 0.0;
    double final_loss = 0.0;
    std::size_t iterations = 0;
    bool converged = false;

    double decision_value(std::span<const double> x) const { return dot(weights, x) + bias; }
    double predict(std::span<const double> x) const { return sigmoid(decision_value(x)); }

    nlohmann::json to_json() const {
        return nlohmann::json{{"weights", weights},     {"bias", bias},
                              {"l2", l2},               {"final_loss", final_loss},
                              {"iterations", iterations}, {"converged", converged}};
    }
    static LogisticModel from_json(const nlohmann::json& j) {
        LogisticModel m;
        m.weights = j.at("weights").get<Vec>();
        m.bias = j.at("bias").get<double>();
        m.l2 = j.at("l2").get<double>();
        m.final_loss = j.at("final_loss").get<double>();
        m.iterations = j.at("iterations").get<std::size_t>();
        m.converged = j.at("converged").get<bool>();
        return m;
    }
};

namespace detail {

// Loss and gradient of the weighted ridge logistic objective
//   (1/n) sum_i w_i [log(1 + exp(z_i)) - t_i z_i] + (l2/2) ||w||^2,
// z_i = w . x_i + b.  The bias carries no penalty.
struct LossGrad {
    double loss = 0.0;
    Vec grad_w;
    double grad_b = 0.0;
};

inline double logistic_loss(const DenseMatrix& X, const Vec& targets, const Vec& sample_w,
                            const Vec& w, double b, double l2) {
    const double n = static_cast<double>(X.rows);
    double acc = 0.0;
    for (std::size_t i = 0; i < X.rows; ++i) {
        const double z = dot(w, X.row(i)) + b;
        acc += sample_w[i] * (log1pexp(z) - targets[i] * z);
    }
    double penalty = 0.0;
    for (double wj : w) penalty += wj * wj;
    return acc / n + 0.5 * l2 * penalty;
}

inline LossGrad logistic_loss_grad(const DenseMatrix& X, const Vec& targets, const Vec& sample_w,
                                   const Vec& w, double b, double l2) {
    const double n = static_cast<double>(X.rows);
    LossGrad out;
    out.grad_w.assign(X.cols, 0.0);
    for (std::size_t i = 0; i < X.rows; ++i) {
        const std::span<const double> xi = X.row(i);
        const double z = dot(w, xi) + b;
        out.loss += sample_w[i] * (log1pexp(z) - targets[i] * z);
        const double r = sample_w[i] * (sigmoid(z) - targets[i]);
        for (std::size_t j = 0; j < X.cols; ++j) out.grad_w[j] += r * xi[j];
        out.grad_b += r;
    }
    out.loss /= n;
    out.grad_b /= n;
    double penalty = 0.0;
    for (std::size_t j = 0; j < X.cols; ++j) {
        out.grad_w[j] = out.grad_w[j] / n + l2 * w[j];
        penalty += w[j] * w[j];
    }
    out.loss += 0.5 * l2 * penalty;
    return out;
}

}  // namespace detail

// Full-batch gradient descent with a backtracking (Armijo) line search.  The
// accepted step doubles between iterations (capped at 64) so flat stretches
// are crossed quickly.  Deterministic: no randomness anywhere.  An optional
// init warm-starts the solve (used by the EM loop).
inline LogisticModel fit_logistic(const DenseMatrix& X, const Vec& targets, const Vec& sample_w,
                                  const LogisticHyper& hyper = {},
                                  const LogisticModel* init = nullptr) {
    if (X.rows == 0 || X.cols == 0) {
        throw std::invalid_argument("fit_logistic: empty feature matrix");
    }
    if (targets.size() != X.rows || sample_w.size() != X.rows) {
        throw std::invalid_argument("fit_logistic: targets/weights size mismatch with features");
    }
    for (double t : targets) {
        if (!(is_finite(t) && t >= 0.0 && t <= 1.0)) {
            throw std::invalid_argument("fit_logistic: targets must lie in [0, 1]");
        }
    }
    for (double w : sample_w) {
        if (!(is_finite(w) && w >= 0.0)) {
            throw std::invalid_argument("fit_logistic: sample weights must be nonnegative");
        }
    }
    if (!(hyper.l2 >= 0.0)) throw std::invalid_argument("fit_logistic: l2 must be nonnegative");
    if (!(hyper.tol > 0.0)) throw std::invalid_argument("fit_logistic: tol must be positive");
    if (init && init->weights.size() != X.cols) {
        throw std::invalid_argument("fit_logistic: init dimension mismatch");
    }

    Vec w = init ? init->weights : Vec(X.cols, 0.0);
    double b = init ? init->bias : 0.0;
    detail::LossGrad lg = detail::logistic_loss_grad(X, targets, sample_w, w, b, hyper.l2);

    double step = 1.0;
    std::size_t iters = 0;
    bool converged = false;
    Vec w_try(X.cols);
    for (; iters < hyper.max_iter; ++iters) {
        double gmax = std::fabs(lg.grad_b);
        double gsq = lg.grad_b * lg.grad_b;
        for (double g : lg.grad_w) {
            gmax = std::max(gmax, std::fabs(g));
            gsq += g * g;
        }
        if (gmax <= hyper.tol) {
            converged = true;
            break;
        }

        step = std::min(step * 2.0, 64.0);
        bool accepted = false;
        double b_try = b, loss_try = 0.0;
        while (step >= 1e-16) {
            for (std::size_t j = 0; j < X.cols; ++j) w_try[j] = w[j] - step * lg.grad_w[j];
            b_try = b - step * lg.grad_b;
            loss_try = detail::logistic_loss(X, targets, sample_w, w_try, b_try, hyper.l2);
            if (loss_try <= lg.loss - 1e-4 * step * gsq) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;  // descent direction exhausted at double precision

        w.swap(w_try);
        b = b_try;
        lg = detail::logistic_loss_grad(X, targets, sample_w, w, b, hyper.l2);
    }

    LogisticModel m;
    m.weights = std::move(w);
    m.bias = b;
    m.l2 = hyper.l2;
    m.final_loss = lg.loss;
    m.iterations = iters;
    m.converged = converged;
    return m;
}

inline DenseMatrix to_matrix(const ObservableView& view) {
    DenseMatrix X(view.size(), view.dims());
    for (std::size_t i = 0; i < view.size(); ++i) {
        const std::span<const double> xi = view.x(i);
        for (std::size_t j = 0; j < view.dims(); ++j) X.at(i, j) = xi[j];
    }
    return X;
}

// Direct logistic fit of the label indicator: an estimate of s(x) = P(S=1|x).
// Needs both label values present to be meaningful.
inline LogisticModel fit_s_model(const ObservableView& view, const LogisticHyper& hyper = {}) {
    std::size_t labeled = 0;
    Vec targets(view.size());
    for (std::size_t i = 0; i < view.size(); ++i) {
        targets[i] = static_cast<double>(view.s(i));
        labeled += static_cast<std::size_t>(view.s(i));
    }
    if (labeled == 0 || labeled == view.size()) {
        throw std::runtime_error("fit_s_model: degenerate fit, every record has s=" +
                                 std::to_string(labeled == 0 ? 0 : 1));
    }
    return fit_logistic(to_matrix(view), targets, Vec(view.size(), 1.0), hyper);
}

struct EmHyper {
    LogisticHyper posterior{};    // inner solve for y_hat
    LogisticHyper propensity{};   // inner solve for e_hat
    std::size_t em_iters = 30;
};

// Probability clamp used inside the likelihood and E-step.
inline constexpr double kEmProbClamp = 1e-6;

namespace detail {
inline double em_clamp(double p) {
    if (p < kEmProbClamp) return kEmProbClamp;
    if (p > 1.0 - kEmProbClamp) return 1.0 - kEmProbClamp;
    return p;
}

// Soft-positive weight of an unlabeled record under the current fit:
// P(Y=1 | x, S=0) = y (1 - e) / (1 - y e).  At e = 1 this is exactly 0 (an
// unlabeled record cannot be positive when positives are always labeled).
inline double em_soft_positive(double y_hat, double e_hat) {
    return y_hat * (1.0 - e_hat) / (1.0 - y_hat * e_hat);
}
}  // namespace detail

struct EmPuModel {
    LogisticModel posterior_model;   // y_hat
    LogisticModel propensity_model;  // e_hat
    Vec ll_trace;                    // observed log-likelihood, per iteration

    double y_hat(std::span<const double> x) const { return posterior_model.predict(x); }
    double e_hat(std::span<const double> x) const { return propensity_model.predict(x); }
    // P(S=1|x) implied by the fit; a product of probabilities, so in [0, 1].
    double s_hat(std::span<const double> x) const { return y_hat(x) * e_hat(x); }

    nlohmann::json to_json() const {
        return nlohmann::json{{"posterior_model", posterior_model.to_json()},
                              {"propensity_model", propensity_model.to_json()},
                              {"ll_trace", ll_trace}};
    }
    static EmPuModel from_json(const nlohmann::json& j) {
        EmPuModel m;
        m.posterior_model = LogisticModel::from_json(j.at("posterior_model"));
        m.propensity_model = LogisticModel::from_json(j.at("propensity_model"));
        m.ll_trace = j.at("ll_trace").get<Vec>();
        return m;
    }
};

// EM fit of (y_hat, e_hat) from the observable view.  Initialization:
// y_hat starts from a logistic fit that treats S as the class (every
// unlabeled record provisionally negative), e_hat starts flat at 1/2.
// Requires at least one labeled record.  Throws if the observed
// log-likelihood drops by more than 1e-6 between iterations.
inline EmPuModel fit_em_pu(const ObservableView& view, const EmHyper& hyper = {}) {
    const std::size_t n = view.size();
    std::size_t labeled = 0;
    for (std::size_t i = 0; i < n; ++i) labeled += static_cast<std::size_t>(view.s(i));
    if (labeled == 0) {
        throw std::runtime_error("fit_em_pu: needs at least one labeled record");
    }

    const DenseMatrix X = to_matrix(view);
    Vec s_target(n);
    for (std::size_t i = 0; i < n; ++i) s_target[i] = static_cast<double>(view.s(i));
    const Vec unit_w(n, 1.0);

    EmPuModel em;
    em.posterior_model = fit_logistic(X, s_target, unit_w, hyper.posterior);
    em.propensity_model.weights.assign(X.cols, 0.0);  // e_hat identically 1/2
    em.propensity_model.bias = 0.0;
    em.propensity_model.l2 = hyper.propensity.l2;

    Vec y_prob(n), e_prob(n);
    auto refresh_probs = [&]() {
        for (std::size_t i = 0; i < n; ++i) {
            y_prob[i] = detail::em_clamp(em.posterior_model.predict(X.row(i)));
            e_prob[i] = detail::em_clamp(em.propensity_model.predict(X.row(i)));
        }
    };
    auto observed_ll = [&]() {
        double ll = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double se = y_prob[i] * e_prob[i];
            ll += view.s(i) == 1 ? std::log(se) : std::log1p(-se);
        }
        return ll;
    };

    refresh_probs();
    em.ll_trace.push_back(observed_ll());

    Vec y_target(n), prop_w(n);
    for (std::size_t it = 0; it < hyper.em_iters; ++it) {
        // E-step: soft-positive weights for the unlabeled records.
        for (std::size_t i = 0; i < n; ++i) {
            if (view.s(i) == 1) {
                y_target[i] = 1.0;
                prop_w[i] = 1.0;
            } else {
                const double q = detail::em_soft_positive(y_prob[i], e_prob[i]);
                y_target[i] = q;
                prop_w[i] = q;
            }
        }
        // M-steps, warm-started from the previous round.
        em.posterior_model =
            fit_logistic(X, y_target, unit_w, hyper.posterior, &em.posterior_model);
        em.propensity_model =
            fit_logistic(X, s_target, prop_w, hyper.propensity, &em.propensity_model);

        refresh_probs();
        const double ll = observed_ll();
        if (ll < em.ll_trace.back() - 1e-6) {
            throw std::runtime_error("fit_em_pu: observed log-likelihood decreased from " +
                                     to_string_g17(em.ll_trace.back()) + " to " +
                                     to_string_g17(ll) + " at iteration " + std::to_string(it + 1));
        }
        em.ll_trace.push_back(ll);
    }
    return em;
}

// ---------------------------------------------------------------------------
// Estimator pairs
// ---------------------------------------------------------------------------

// Oracle pair: the scenario's true posterior and label posterior.
inline EstimatorPair prophet_pair(const Scenario& scenario) {
    EstimatorPair p;
    p.y_hat = [scenario](std::span<const double> x) { return clamp01(scenario.posterior(x)); };
    p.s_hat = [scenario](std::span<const double> x) {
        return clamp01(scenario.label_posterior(x));
    };
    p.provenance = Provenance::prophet;
    return p;
}

// Fitted pair for downstream decisions: the EM posterior joined with the
// direct label-indicator fit (the product form e_hat * y_hat stays available
// on the EmPuModel itself).
inline EstimatorPair make_fitted_pair(const EmPuModel& em, const LogisticModel& s_model) {
    EstimatorPair p;
    p.y_hat = [m = em.posterior_model](std::span<const double> x) {
        return clamp01(m.predict(x));
    };
    p.s_hat = [s_model](std::span<const double> x) { return clamp01(s_model.predict(x)); };
    p.provenance = Provenance::fitted;
    return p;
}

enum class Replace { y, s };

// Swap one component of a fitted pair for its oracle: Replace::y keeps the
// fitted s_hat and restores the true posterior, Replace::s the reverse.  The
// untouched component is shared, not re-wrapped.
inline EstimatorPair semi_prophet_pair(const Scenario& scenario, const EstimatorPair& fitted,
                                       Replace which) {
    EstimatorPair p;
    if (which == Replace::y) {
        p.y_hat = [scenario](std::span<const double> x) { return clamp01(scenario.posterior(x)); };
        p.s_hat = fitted.s_hat;
        p.provenance = Provenance::semi_prophet_y;
    } else {
        p.y_hat = fitted.y_hat;
        p.s_hat = [scenario](std::span<const double> x) {
            return clamp01(scenario.label_posterior(x));
        };
        p.provenance = Provenance::semi_prophet_s;
    }
    return p;
}

// Serialized fitted pair (two logistic models); the file format used by the
// rank tool.
inline nlohmann::json pair_to_json(const EmPuModel& em, const LogisticModel& s_model) {
    return nlohmann::json{{"kind", "estimator_pair"},
                          {"y_model", em.posterior_model.to_json()},
                          {"s_model", s_model.to_json()}};
}

struct LoadedPair {
    LogisticModel y_model;
    LogisticModel s_model;

    EstimatorPair pair() const {
        EstimatorPair p;
        p.y_hat = [m = y_model](std::span<const double> x) { return clamp01(m.predict(x)); };
        p.s_hat = [m = s_model](std::span<const double> x) { return clamp01(m.predict(x)); };
        p.provenance = Provenance::fitted;
        return p;
    }
};

inline LoadedPair pair_from_json(const nlohmann::json& j) {
    if (!j.contains("kind") || j.at("kind") != "estimator_pair") {
        throw std::runtime_error("estimator pair file: missing kind=\"estimator_pair\"");
    }
    LoadedPair lp;
    lp.y_model = LogisticModel::from_json(j.at("y_model"));
    lp.s_model = LogisticModel::from_json(j.at("s_model"));
    return lp;
}

}  // namespace purisk
