#pragma once

// Benchmark harness: compares decision methods over a grid of synthetic
// scenarios and label frequencies, scoring them on the unlabeled stratum of
// an independent test draw (labeled records are positive by construction, so
// every method gets them right; the stratum is where methods differ).
//
// Methods:
//   SProphet      true (y, s), augmented rule
//   YProphet      true y, feature-only rule
//   Fitted_dB     EM posterior, feature-only rule
//   Fitted_dBPU   EM posterior + direct label-indicator fit, augmented rule
//   SemiProphetY  true y + direct label-indicator fit, augmented rule
//   SemiProphetS  EM posterior + true s, augmented rule

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "purisk/estimators.hpp"
#include "purisk/math.hpp"
#include "purisk/model.hpp"
#include "purisk/parallel.hpp"
#include "purisk/rules.hpp"
#include "purisk/synth.hpp"

namespace purisk {

// ---------------------------------------------------------------------------
// Metrics on the unlabeled stratum
// ---------------------------------------------------------------------------

// Accuracy against the true class over records with s = 0.
inline double u_accuracy(const std::vector<int>& preds, const PuDataset& ds) {
    if (preds.size() != ds.size()) {
        throw std::invalid_argument("u_accuracy: prediction count mismatch");
    }
    std::size_t total = 0, correct = 0;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        if (ds.s(i) != 0) continue;
        ++total;
        correct += static_cast<std::size_t>(preds[i] == ds.y_true(i));
    }
    if (total == 0) {
        throw std::runtime_error("u_accuracy: degenerate stratum, no unlabeled records");
    }
    return static_cast<double>(correct) / static_cast<double>(total);
}

// Mean of the two within-stratum recalls; needs both classes present among
// the unlabeled records.
inline double u_balanced_accuracy(const std::vector<int>& preds, const PuDataset& ds) {
    if (preds.size() != ds.size()) {
        throw std::invalid_argument("u_balanced_accuracy: prediction count mismatch");
    }
    std::size_t pos = 0, pos_hit = 0, neg = 0, neg_hit = 0;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        if (ds.s(i) != 0) continue;
        if (ds.y_true(i) == 1) {
            ++pos;
            pos_hit += static_cast<std::size_t>(preds[i] == 1);
        } else {
            ++neg;
            neg_hit += static_cast<std::size_t>(preds[i] == 0);
        }
    }
    if (pos == 0 || neg == 0) {
        throw std::runtime_error(
            "u_balanced_accuracy: degenerate stratum, only one class among unlabeled records");
    }
    return 0.5 * (static_cast<double>(pos_hit) / static_cast<double>(pos) +
                  static_cast<double>(neg_hit) / static_cast<double>(neg));
}

// One-sided sign test: P(Bin(trials, 1/2) >= wins).  No decisive trials means
// no test (empty result); the experiment layer maps that to p = 1.
inline std::optional<double> binomial_win_test(unsigned wins, unsigned trials) {
    if (trials == 0) return std::nullopt;
    if (wins > trials) {
        throw std::invalid_argument("binomial_win_test: wins exceed trials");
    }
    // Sum C(trials, k) for k = trials down to wins, then scale by 2^-trials.
    long double coeff = 1.0L;  // C(trials, trials)
    long double total = 0.0L;
    for (unsigned k = trials;; --k) {
        if (k >= wins) total += coeff;
        if (k == 0 || k == wins) break;
        coeff = coeff * static_cast<long double>(k) / static_cast<long double>(trials - k + 1);
    }
    return static_cast<double>(total * std::exp2l(-static_cast<long double>(trials)));
}

// ---------------------------------------------------------------------------
// Methods
// ---------------------------------------------------------------------------

enum class Method { s_prophet, y_prophet, fitted_db, fitted_db_pu, semi_prophet_y, semi_prophet_s };

inline const std::vector<Method>& all_methods() {
    static const std::vector<Method> all = {Method::s_prophet,      Method::y_prophet,
                                            Method::fitted_db,      Method::fitted_db_pu,
                                            Method::semi_prophet_y, Method::semi_prophet_s};
    return all;
}

inline const char* to_string(Method m) {
    switch (m) {
        case Method::s_prophet: return "SProphet";
        case Method::y_prophet: return "YProphet";
        case Method::fitted_db: return "Fitted_dB";
        case Method::fitted_db_pu: return "Fitted_dBPU";
        case Method::semi_prophet_y: return "SemiProphetY";
        case Method::semi_prophet_s: return "SemiProphetS";
    }
    return "unknown";
}

inline Method method_from_string(const std::string& s) {
    for (Method m : all_methods()) {
        if (s == to_string(m)) return m;
    }
    throw std::invalid_argument("method: unknown name \"" + s +
                                "\" (expected SProphet, YProphet, Fitted_dB, Fitted_dBPU, "
                                "SemiProphetY or SemiProphetS)");
}

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

struct ExperimentConfig {
    std::vector<Variant> variants = {Variant::v1, Variant::v2, Variant::v3, Variant::scar};
    std::size_t dims = 20;
    double mu_per_coordinate = 0.25;
    std::optional<Vec> gamma;  // propensity direction; default all 0.5
    std::vector<double> c_grid = {0.02, 0.1, 0.3, 0.5, 0.7, 0.9};
    std::vector<Method> methods = all_methods();
    std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
    std::size_t n_train = 10000;
    std::size_t n_test = 10000;
    EmHyper em{};
    LogisticHyper s_model{};
    CalibrationParams calibration{};

    void validate() const {
        if (variants.empty()) throw std::invalid_argument("experiment config: no variants");
        if (c_grid.empty()) throw std::invalid_argument("experiment config: empty c_grid");
        if (methods.empty()) throw std::invalid_argument("experiment config: no methods");
        if (seeds.empty()) throw std::invalid_argument("experiment config: no seeds");
        if (n_train == 0 || n_test == 0) {
            throw std::invalid_argument("experiment config: n_train and n_test must be positive");
        }
        for (double c : c_grid) {
            VariantSpec probe{variants.front(), dims, mu_per_coordinate, c, gamma};
            probe.validate();  // rejects target_c outside (0, 1]
        }
    }

    VariantSpec spec_for(Variant v, double c) const {
        return VariantSpec{v, dims, mu_per_coordinate, c, gamma};
    }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["variants"] = nlohmann::json::array();
        for (Variant v : variants) j["variants"].push_back(to_string(v));
        j["dims"] = dims;
        j["mu_per_coordinate"] = mu_per_coordinate;
        if (gamma) j["gamma"] = *gamma;
        j["c_grid"] = c_grid;
        j["methods"] = nlohmann::json::array();
        for (Method m : methods) j["methods"].push_back(to_string(m));
        j["seeds"] = seeds;
        j["n_train"] = n_train;
        j["n_test"] = n_test;
        j["em"] = {{"em_iters", em.em_iters},
                   {"posterior", {{"l2", em.posterior.l2},
                                  {"max_iter", em.posterior.max_iter},
                                  {"tol", em.posterior.tol}}},
                   {"propensity", {{"l2", em.propensity.l2},
                                   {"max_iter", em.propensity.max_iter},
                                   {"tol", em.propensity.tol}}}};
        j["s_model"] = {{"l2", s_model.l2}, {"max_iter", s_model.max_iter}, {"tol", s_model.tol}};
        j["calibration"] = {{"mc_positives", calibration.mc_positives},
                            {"tol", calibration.tol},
                            {"seed", calibration.seed}};
        return j;
    }

    static LogisticHyper hyper_from_json(const nlohmann::json& j, LogisticHyper base) {
        if (j.contains("l2")) base.l2 = j.at("l2").get<double>();
        if (j.contains("max_iter")) base.max_iter = j.at("max_iter").get<std::size_t>();
        if (j.contains("tol")) base.tol = j.at("tol").get<double>();
        return base;
    }

    // Absent fields keep their defaults, so partial configs stay valid.
    static ExperimentConfig from_json(const nlohmann::json& j) {
        ExperimentConfig c;
        if (j.contains("variants")) {
            c.variants.clear();
            for (const auto& v : j.at("variants")) {
                c.variants.push_back(variant_from_string(v.get<std::string>()));
            }
        }
        if (j.contains("dims")) c.dims = j.at("dims").get<std::size_t>();
        if (j.contains("mu_per_coordinate")) {
            c.mu_per_coordinate = j.at("mu_per_coordinate").get<double>();
        }
        if (j.contains("gamma")) c.gamma = j.at("gamma").get<Vec>();
        if (j.contains("c_grid")) c.c_grid = j.at("c_grid").get<std::vector<double>>();
        if (j.contains("methods")) {
            c.methods.clear();
            for (const auto& m : j.at("methods")) {
                c.methods.push_back(method_from_string(m.get<std::string>()));
            }
        }
        if (j.contains("seeds")) c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
        if (j.contains("n_train")) c.n_train = j.at("n_train").get<std::size_t>();
        if (j.contains("n_test")) c.n_test = j.at("n_test").get<std::size_t>();
        if (j.contains("em")) {
            const auto& e = j.at("em");
            if (e.contains("em_iters")) c.em.em_iters = e.at("em_iters").get<std::size_t>();
            if (e.contains("posterior")) {
                c.em.posterior = hyper_from_json(e.at("posterior"), c.em.posterior);
            }
            if (e.contains("propensity")) {
                c.em.propensity = hyper_from_json(e.at("propensity"), c.em.propensity);
            }
        }
        if (j.contains("s_model")) c.s_model = hyper_from_json(j.at("s_model"), c.s_model);
        if (j.contains("calibration")) {
            const auto& cal = j.at("calibration");
            if (cal.contains("mc_positives")) {
                c.calibration.mc_positives = cal.at("mc_positives").get<std::size_t>();
            }
            if (cal.contains("tol")) c.calibration.tol = cal.at("tol").get<double>();
            if (cal.contains("seed")) c.calibration.seed = cal.at("seed").get<std::uint64_t>();
        }
        return c;
    }
};

// ---------------------------------------------------------------------------
// Results
// ---------------------------------------------------------------------------

struct MetricAggregate {
    double mean = 0.0;
    double std_error = 0.0;  // sample stdev / sqrt(#seeds)
    double std_dev = 0.0;    // sample stdev (n-1)
    Vec per_seed;
};

struct CellResult {
    std::string variant;
    double c = 0.0;
    std::string error;  // empty when the cell completed
    // metric name -> method -> aggregate
    std::map<std::string, std::map<Method, MetricAggregate>> metrics;
};

struct WinTest {
    std::string metric;
    Method a = Method::s_prophet;
    Method b = Method::y_prophet;
    unsigned wins_a = 0;
    unsigned wins_b = 0;
    unsigned ties = 0;
    double p_a_over_b = 1.0;  // one-sided; 1 when no cell is decisive
    double p_b_over_a = 1.0;
};

inline const std::vector<std::string>& experiment_metrics() {
    static const std::vector<std::string> names = {"u_accuracy", "u_balanced_accuracy",
                                                   "u_positive_rate"};
    return names;
}

struct ExperimentResult {
    nlohmann::json config_echo;
    std::vector<CellResult> cells;
    std::vector<WinTest> win_tests;

    bool all_ok() const {
        for (const CellResult& c : cells) {
            if (!c.error.empty()) return false;
        }
        return true;
    }

    std::vector<std::string> errors() const {
        std::vector<std::string> out;
        for (const CellResult& c : cells) {
            if (!c.error.empty()) {
                out.push_back(c.variant + " c=" + to_string_g17(c.c) + ": " + c.error);
            }
        }
        return out;
    }

    // Long format, one row per (cell, method, metric, seed).
    std::string to_csv() const {
        std::ostringstream out;
        out << "variant,c,method,metric,seed,value\n";
        for (const CellResult& cell : cells) {
            if (!cell.error.empty()) continue;
            for (const auto& [metric, by_method] : cell.metrics) {
                for (const auto& [method, agg] : by_method) {
                    for (std::size_t k = 0; k < agg.per_seed.size(); ++k) {
                        out << cell.variant << "," << to_string_g17(cell.c) << ","
                            << to_string(method) << "," << metric << "," << k << ","
                            << to_string_g17(agg.per_seed[k]) << "\n";
                    }
                }
            }
        }
        return out.str();
    }

    nlohmann::json summary_json() const {
        nlohmann::json j;
        j["config"] = config_echo;
        j["cells"] = nlohmann::json::array();
        for (const CellResult& cell : cells) {
            nlohmann::json cj;
            cj["variant"] = cell.variant;
            cj["c"] = cell.c;
            if (!cell.error.empty()) cj["error"] = cell.error;
            for (const auto& [metric, by_method] : cell.metrics) {
                for (const auto& [method, agg] : by_method) {
                    cj["metrics"][metric][to_string(method)] = {{"mean", agg.mean},
                                                                {"std_error", agg.std_error},
                                                                {"std_dev", agg.std_dev},
                                                                {"per_seed", agg.per_seed}};
                }
            }
            j["cells"].push_back(std::move(cj));
        }
        j["win_tests"] = nlohmann::json::array();
        for (const WinTest& w : win_tests) {
            j["win_tests"].push_back({{"metric", w.metric},
                                      {"method_a", to_string(w.a)},
                                      {"method_b", to_string(w.b)},
                                      {"wins_a", w.wins_a},
                                      {"wins_b", w.wins_b},
                                      {"ties", w.ties},
                                      {"p_a_over_b", w.p_a_over_b},
                                      {"p_b_over_a", w.p_b_over_a}});
        }
        j["errors"] = errors();
        return j;
    }

    // Wide human-readable view of one metric: rows are (variant, c) cells,
    // columns are methods, entries are "mean +- std_error".
    std::string to_table(const std::string& metric) const {
        std::vector<Method> methods;
        for (const CellResult& cell : cells) {
            auto it = cell.metrics.find(metric);
            if (it == cell.metrics.end()) continue;
            for (const auto& [m, agg] : it->second) {
                if (std::find(methods.begin(), methods.end(), m) == methods.end()) {
                    methods.push_back(m);
                }
            }
        }
        std::sort(methods.begin(), methods.end());

        auto fmt = [](double v) {
            char buf[32];
            std::snprintf(buf, sizeof(buf), "%.4f", v);
            return std::string(buf);
        };
        std::vector<std::vector<std::string>> rows;
        std::vector<std::string> header = {"variant", "c"};
        for (Method m : methods) header.push_back(to_string(m));
        rows.push_back(header);
        for (const CellResult& cell : cells) {
            std::vector<std::string> row = {cell.variant, fmt(cell.c)};
            if (!cell.error.empty()) {
                row.push_back("error: " + cell.error);
                rows.push_back(row);
                continue;
            }
            auto it = cell.metrics.find(metric);
            for (Method m : methods) {
                std::string entry = "-";
                if (it != cell.metrics.end()) {
                    auto mt = it->second.find(m);
                    if (mt != it->second.end()) {
                        entry = fmt(mt->second.mean) + " +- " + fmt(mt->second.std_error);
                    }
                }
                row.push_back(entry);
            }
            rows.push_back(row);
        }

        std::vector<std::size_t> width;
        for (const auto& row : rows) {
            for (std::size_t i = 0; i < row.size(); ++i) {
                if (i >= width.size()) width.push_back(0);
                width[i] = std::max(width[i], row[i].size());
            }
        }
        std::ostringstream out;
        out << metric << "\n";
        for (const auto& row : rows) {
            for (std::size_t i = 0; i < row.size(); ++i) {
                out << row[i];
                if (i + 1 < row.size()) {
                    out << std::string(width[i] - row[i].size() + 2, ' ');
                }
            }
            out << "\n";
        }
        return out.str();
    }
};

// ---------------------------------------------------------------------------
// Running
// ---------------------------------------------------------------------------

struct NamedScenario {
    std::string label;
    double c = 0.0;
    Scenario scenario;
};

namespace detail {

// Decision function per method: feature-only for YProphet/Fitted_dB,
// augmented for the rest.
inline bool uses_augmented_rule(Method m) {
    return m != Method::y_prophet && m != Method::fitted_db;
}

inline bool needs_em_fit(Method m) {
    return m == Method::fitted_db || m == Method::fitted_db_pu || m == Method::semi_prophet_s;
}
inline bool needs_s_fit(Method m) {
    return m == Method::fitted_db_pu || m == Method::semi_prophet_y;
}

// One (cell, seed) evaluation: train on one draw, score on an independent
// draw.  Seeds 2k / 2k+1 keep the two draws disjoint across experiment seeds.
inline std::map<Method, std::map<std::string, double>> run_cell_seed(
    const Scenario& scenario, const ExperimentConfig& config, std::uint64_t seed) {
    const PuDataset train = sample_dataset(scenario, config.n_train, 2 * seed);
    const PuDataset test = sample_dataset(scenario, config.n_test, 2 * seed + 1);

    bool want_em = false, want_s = false;
    for (Method m : config.methods) {
        want_em = want_em || needs_em_fit(m);
        want_s = want_s || needs_s_fit(m);
    }
    std::optional<EmPuModel> em;
    std::optional<LogisticModel> s_model;
    if (want_em) em = fit_em_pu(train.observable(), config.em);
    if (want_s) s_model = fit_s_model(train.observable(), config.s_model);

    EstimatorPair oracle = prophet_pair(scenario);
    auto pair_for = [&](Method m) -> EstimatorPair {
        switch (m) {
            case Method::s_prophet:
            case Method::y_prophet:
                return oracle;
            case Method::fitted_db:
            case Method::fitted_db_pu: {
                EstimatorPair p;
                p.y_hat = [mdl = em->posterior_model](std::span<const double> x) {
                    return clamp01(mdl.predict(x));
                };
                if (m == Method::fitted_db_pu) {
                    p.s_hat = [mdl = *s_model](std::span<const double> x) {
                        return clamp01(mdl.predict(x));
                    };
                } else {
                    p.s_hat = oracle.s_hat;  // unused by the feature-only rule
                }
                p.provenance = Provenance::fitted;
                return p;
            }
            case Method::semi_prophet_y: {
                EstimatorPair fitted;
                fitted.y_hat = oracle.y_hat;  // replaced anyway
                fitted.s_hat = [mdl = *s_model](std::span<const double> x) {
                    return clamp01(mdl.predict(x));
                };
                return semi_prophet_pair(scenario, fitted, Replace::y);
            }
            case Method::semi_prophet_s: {
                EstimatorPair fitted;
                fitted.y_hat = [mdl = em->posterior_model](std::span<const double> x) {
                    return clamp01(mdl.predict(x));
                };
                fitted.s_hat = oracle.s_hat;  // replaced anyway
                return semi_prophet_pair(scenario, fitted, Replace::s);
            }
        }
        throw std::logic_error("run_cell_seed: unhandled method");
    };

    std::map<Method, std::map<std::string, double>> out;
    std::vector<int> preds(test.size());
    for (Method m : config.methods) {
        const EstimatorPair pair = pair_for(m);
        const bool augmented = uses_augmented_rule(m);
        for (std::size_t i = 0; i < test.size(); ++i) {
            if (test.s(i) == 1) {
                preds[i] = 1;  // a labeled record is positive by construction
            } else if (augmented) {
                preds[i] = decide_db_pu(pair.y_hat(test.x(i)), pair.s_hat(test.x(i)), 0);
            } else {
                preds[i] = decide_db(pair.y_hat(test.x(i)));
            }
        }
        std::size_t stratum = 0, positives = 0;
        for (std::size_t i = 0; i < test.size(); ++i) {
            if (test.s(i) != 0) continue;
            ++stratum;
            positives += static_cast<std::size_t>(preds[i]);
        }
        out[m]["u_accuracy"] = u_accuracy(preds, test);
        out[m]["u_balanced_accuracy"] = u_balanced_accuracy(preds, test);
        out[m]["u_positive_rate"] =
            stratum == 0 ? 0.0 : static_cast<double>(positives) / static_cast<double>(stratum);
    }
    return out;
}

// Evaluate every configured seed for one scenario and aggregate.  Any throw
// (degenerate fit, degenerate stratum, ...) lands in CellResult::error.
inline void evaluate_cell(const Scenario& scenario, const ExperimentConfig& config,
                          CellResult& out) {
    try {
        // metric -> method -> per-seed values
        std::map<std::string, std::map<Method, Vec>> series;
        for (std::uint64_t seed : config.seeds) {
            auto one = run_cell_seed(scenario, config, seed);
            for (const auto& [method, metrics] : one) {
                for (const auto& [metric, value] : metrics) {
                    series[metric][method].push_back(value);
                }
            }
        }
        for (auto& [metric, by_method] : series) {
            for (auto& [method, values] : by_method) {
                MetricAggregate agg;
                agg.per_seed = values;
                double total = 0.0;
                for (double v : values) total += v;
                const double k = static_cast<double>(values.size());
                agg.mean = total / k;
                if (values.size() > 1) {
                    double ss = 0.0;
                    for (double v : values) ss += (v - agg.mean) * (v - agg.mean);
                    agg.std_dev = std::sqrt(ss / (k - 1.0));
                    agg.std_error = agg.std_dev / std::sqrt(k);
                }
                out.metrics[metric][method] = std::move(agg);
            }
        }
    } catch (const std::exception& e) {
        out.error = e.what();
        out.metrics.clear();
    }
}

// Pairwise sign tests per metric over cells that completed: a cell is a win
// for whichever method has the strictly larger seed-averaged mean, exact ties
// are excluded, and the p-value is the one-sided binomial tail (1 when no
// cell is decisive).
inline std::vector<WinTest> compute_win_tests(const std::vector<CellResult>& cells,
                                              const std::vector<Method>& methods) {
    std::vector<WinTest> out;
    for (const std::string& metric : experiment_metrics()) {
        for (std::size_t i = 0; i < methods.size(); ++i) {
            for (std::size_t j = i + 1; j < methods.size(); ++j) {
                WinTest w;
                w.metric = metric;
                w.a = methods[i];
                w.b = methods[j];
                for (const CellResult& cell : cells) {
                    if (!cell.error.empty()) continue;
                    auto it = cell.metrics.find(metric);
                    if (it == cell.metrics.end()) continue;
                    const double ma = it->second.at(w.a).mean;
                    const double mb = it->second.at(w.b).mean;
                    if (ma > mb) {
                        ++w.wins_a;
                    } else if (mb > ma) {
                        ++w.wins_b;
                    } else {
                        ++w.ties;
                    }
                }
                const unsigned trials = w.wins_a + w.wins_b;
                w.p_a_over_b = binomial_win_test(w.wins_a, trials).value_or(1.0);
                w.p_b_over_a = binomial_win_test(w.wins_b, trials).value_or(1.0);
                out.push_back(w);
            }
        }
    }
    return out;
}

}  // namespace detail

// Evaluate the configured methods over explicit scenarios (one cell each).
// Cells that throw are reported through CellResult::error; the rest complete.
inline ExperimentResult run_experiment_cells(const std::vector<NamedScenario>& cells,
                                             const ExperimentConfig& config,
                                             unsigned parallelism = 1) {
    config.validate();
    ExperimentResult result;
    result.config_echo = config.to_json();
    result.cells.resize(cells.size());

    parallel_for_blocks(cells.size(), 1, parallelism,
                        [&](std::size_t, std::size_t idx, std::size_t) {
                            result.cells[idx].variant = cells[idx].label;
                            result.cells[idx].c = cells[idx].c;
                            detail::evaluate_cell(cells[idx].scenario, config, result.cells[idx]);
                        });
    result.win_tests = detail::compute_win_tests(result.cells, config.methods);
    return result;
}

// Standard grid run: every configured variant crossed with every label
// frequency.  Scenario construction (including intercept calibration) happens
// inside the cell task, so a calibration failure is reported per cell rather
// than aborting the grid.
inline ExperimentResult run_experiment(const ExperimentConfig& config, unsigned parallelism = 1) {
    config.validate();
    struct PendingCell {
        std::string label;
        double c;
        VariantSpec spec;
    };
    std::vector<PendingCell> pending;
    for (Variant v : config.variants) {
        for (double c : config.c_grid) {
            pending.push_back({to_string(v), c, config.spec_for(v, c)});
        }
    }

    ExperimentResult result;
    result.config_echo = config.to_json();
    result.cells.resize(pending.size());

    parallel_for_blocks(pending.size(), 1, parallelism,
                        [&](std::size_t, std::size_t idx, std::size_t) {
                            CellResult& out = result.cells[idx];
                            out.variant = pending[idx].label;
                            out.c = pending[idx].c;
                            try {
                                const Scenario scenario =
                                    build_scenario(pending[idx].spec, config.calibration);
                                detail::evaluate_cell(scenario, config, out);
                            } catch (const std::exception& e) {
                                out.error = e.what();
                                out.metrics.clear();
                            }
                        });
    result.win_tests = detail::compute_win_tests(result.cells, config.methods);
    return result;
}

}  // namespace purisk
