#pragma once

// Core domain types: data-generating scenarios (Gaussian-mixture or direct
// function handles), labeling propensities, positive-unlabeled datasets with
// CSV/JSON persistence, estimator pairs, and risk reports.
//
// The setting throughout: a binary class Y, features X, and a label indicator
// S with P(S=1 | X, Y=0) = 0.  The propensity e(x) = P(S=1 | Y=1, X=x) drives
// labeling, so the label posterior is s(x) = P(S=1 | X=x) = e(x) * y(x) with
// y(x) = P(Y=1 | X=x).

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "purisk/math.hpp"
#include "purisk/rng.hpp"

namespace purisk {

// ---------------------------------------------------------------------------
// Propensities
// ---------------------------------------------------------------------------

// e(x) = sigmoid(gamma . x + intercept)
struct LogisticLinearPropensity {
    Vec gamma;
    double intercept = 0.0;
};

// e(x) = base(x) ^ exponent, exponent >= 1 (sharpening a logistic propensity).
struct PowerPropensity {
    LogisticLinearPropensity base;
    double exponent = 1.0;
};

// e(x) = c for all x (the selected-completely-at-random case).
struct ConstantPropensity {
    double c = 0.5;
};

// e(x) = 1 if x[axis] > a else 0.
struct HardThresholdPropensity {
    double a = 0.0;
    std::size_t axis = 0;
};

using PropensitySpec = std::variant<LogisticLinearPropensity, PowerPropensity,
                                    ConstantPropensity, HardThresholdPropensity>;

inline void validate_propensity(const PropensitySpec& spec, std::size_t dims) {
    if (const auto* p = std::get_if<LogisticLinearPropensity>(&spec)) {
        if (p->gamma.size() != dims) {
            throw std::invalid_argument("propensity: gamma has " + std::to_string(p->gamma.size()) +
                                        " coordinates but the scenario has " + std::to_string(dims));
        }
        if (!is_finite(p->intercept)) throw std::invalid_argument("propensity: intercept must be finite");
    } else if (const auto* p2 = std::get_if<PowerPropensity>(&spec)) {
        if (p2->base.gamma.size() != dims) {
            throw std::invalid_argument("propensity: gamma has " + std::to_string(p2->base.gamma.size()) +
                                        " coordinates but the scenario has " + std::to_string(dims));
        }
        if (!(p2->exponent >= 1.0)) {
            throw std::invalid_argument("propensity: exponent must be >= 1, got " +
                                        to_string_g17(p2->exponent));
        }
    } else if (const auto* p3 = std::get_if<ConstantPropensity>(&spec)) {
        if (!(p3->c >= 0.0 && p3->c <= 1.0)) {
            throw std::invalid_argument("propensity: constant must lie in [0, 1], got " +
                                        to_string_g17(p3->c));
        }
    } else if (const auto* p4 = std::get_if<HardThresholdPropensity>(&spec)) {
        if (p4->axis >= dims) {
            throw std::invalid_argument("propensity: axis " + std::to_string(p4->axis) +
                                        " out of range for " + std::to_string(dims) + " dims");
        }
    }
}

inline double propensity_value(const PropensitySpec& spec, std::span<const double> x) {
    struct Visitor {
        std::span<const double> x;
        double operator()(const LogisticLinearPropensity& p) const {
            return sigmoid(dot(p.gamma, x) + p.intercept);
        }
        double operator()(const PowerPropensity& p) const {
            // sigmoid(z)^k computed as exp(-k * log1pexp(-z)): stable when
            // sigmoid underflows.
            const double z = dot(p.base.gamma, x) + p.base.intercept;
            return std::exp(-p.exponent * log1pexp(-z));
        }
        double operator()(const ConstantPropensity& p) const { return p.c; }
        double operator()(const HardThresholdPropensity& p) const {
            return x[p.axis] > p.a ? 1.0 : 0.0;
        }
    };
    return std::visit(Visitor{x}, spec);
}

// ---------------------------------------------------------------------------
// Scenario
// ---------------------------------------------------------------------------

// Axis-aligned Gaussian class-conditional law.
struct GaussianDiag {
    Vec mean;
    Vec var;  // strictly positive, one entry per coordinate
};

// A fully specified generative model.  Two construction modes:
//   * gaussian_mixture: X | Y=k ~ N(mean_k, diag(var_k)), P(Y=1) = class_prior,
//     and a structured propensity; the class posterior has a closed form.
//   * direct: caller supplies y(x), e(x) and an X sampler; used for
//     hand-built cases (probit threshold, constant-risk scenarios, ...).
class Scenario {
  public:
    static Scenario gaussian_mixture(double class_prior, GaussianDiag positive,
                                     GaussianDiag negative, PropensitySpec propensity,
                                     std::string fingerprint) {
        if (!(class_prior > 0.0 && class_prior < 1.0)) {
            throw std::invalid_argument("scenario: class_prior must lie in (0, 1), got " +
                                        to_string_g17(class_prior));
        }
        const std::size_t dims = positive.mean.size();
        if (dims == 0) throw std::invalid_argument("scenario: dims must be positive");
        if (positive.var.size() != dims || negative.mean.size() != dims ||
            negative.var.size() != dims) {
            throw std::invalid_argument("scenario: class laws disagree on dimension");
        }
        for (double v : positive.var)
            if (!(v > 0.0)) throw std::invalid_argument("scenario: variances must be positive");
        for (double v : negative.var)
            if (!(v > 0.0)) throw std::invalid_argument("scenario: variances must be positive");
        validate_propensity(propensity, dims);

        Scenario s;
        s.dims_ = dims;
        s.class_prior_ = class_prior;
        s.positive_ = std::move(positive);
        s.negative_ = std::move(negative);
        s.propensity_ = std::move(propensity);
        s.fingerprint_ = std::move(fingerprint);
        return s;
    }

    using PosteriorFn = std::function<double(std::span<const double>)>;
    using SamplerFn = std::function<void(RngStream&, std::span<double>)>;

    static Scenario direct(std::size_t dims, PosteriorFn y, PosteriorFn e,
                           SamplerFn sample_x, std::string fingerprint) {
        if (dims == 0) throw std::invalid_argument("scenario: dims must be positive");
        if (!y || !e || !sample_x) {
            throw std::invalid_argument("scenario: direct construction needs y, e and a sampler");
        }
        Scenario s;
        s.dims_ = dims;
        s.direct_y_ = std::move(y);
        s.direct_e_ = std::move(e);
        s.direct_sampler_ = std::move(sample_x);
        s.fingerprint_ = std::move(fingerprint);
        return s;
    }

    std::size_t dims() const { return dims_; }
    bool is_mixture() const { return positive_.has_value(); }
    const std::string& fingerprint() const { return fingerprint_; }

    double class_prior() const {
        require_mixture("class_prior");
        return class_prior_;
    }
    const GaussianDiag& positive_law() const {
        require_mixture("positive_law");
        return *positive_;
    }
    const GaussianDiag& negative_law() const {
        require_mixture("negative_law");
        return *negative_;
    }
    const PropensitySpec& propensity_spec() const {
        require_mixture("propensity_spec");
        return propensity_;
    }

    // Intended label frequency P(S=1 | Y=1); set by scenario builders that
    // calibrated toward a target, NaN otherwise.
    double target_c() const { return target_c_; }
    void set_target_c(double c) { target_c_ = c; }

    // P(Y=1 | X=x), evaluated in log space for the mixture mode.
    double posterior(std::span<const double> x) const {
        check_dims(x);
        if (!is_mixture()) return direct_y_(x);
        const double lp = log_density(*positive_, x) + std::log(class_prior_);
        const double ln = log_density(*negative_, x) + std::log(1.0 - class_prior_);
        // P(Y=1|x) = exp(lp) / (exp(lp) + exp(ln)) = sigmoid(lp - ln)
        return sigmoid(lp - ln);
    }

    // e(x) = P(S=1 | Y=1, X=x).
    double propensity(std::span<const double> x) const {
        check_dims(x);
        if (!is_mixture()) return direct_e_(x);
        return propensity_value(propensity_, x);
    }

    // s(x) = P(S=1 | X=x) = e(x) * y(x).
    double label_posterior(std::span<const double> x) const {
        return propensity(x) * posterior(x);
    }

    // Draw X from the marginal law.  Mixture mode consumes one uniform (the
    // component pick) followed by dims normals; direct mode delegates to the
    // sampler.  The fixed draw order is part of the reproducibility contract.
    void sample_x(RngStream& rng, std::span<double> out, int* y_out = nullptr) const {
        if (out.size() != dims_) {
            throw std::invalid_argument("scenario: output buffer has wrong dimension");
        }
        if (is_mixture()) {
            const bool positive = rng.bernoulli(class_prior_);
            const GaussianDiag& law = positive ? *positive_ : *negative_;
            rng.fill_normals(out);
            for (std::size_t j = 0; j < dims_; ++j) {
                out[j] = law.mean[j] + std::sqrt(law.var[j]) * out[j];
            }
            if (y_out) *y_out = positive ? 1 : 0;
        } else {
            direct_sampler_(rng, out);
            if (y_out) *y_out = rng.bernoulli(direct_y_(out)) ? 1 : 0;
        }
    }

  private:
    Scenario() = default;

    void require_mixture(const char* what) const {
        if (!is_mixture()) {
            throw std::logic_error(std::string("scenario: ") + what +
                                   " is only defined for gaussian_mixture scenarios");
        }
    }
    void check_dims(std::span<const double> x) const {
        if (x.size() != dims_) {
            throw std::invalid_argument("scenario: point has " + std::to_string(x.size()) +
                                        " coordinates, expected " + std::to_string(dims_));
        }
    }
    static double log_density(const GaussianDiag& g, std::span<const double> x) {
        static const double log_2pi = 1.8378770664093454835607;
        double acc = 0.0;
        for (std::size_t j = 0; j < x.size(); ++j) {
            const double d = x[j] - g.mean[j];
            acc += -0.5 * (d * d / g.var[j] + std::log(g.var[j]) + log_2pi);
        }
        return acc;
    }

    std::size_t dims_ = 0;
    double class_prior_ = 0.5;
    std::optional<GaussianDiag> positive_;
    std::optional<GaussianDiag> negative_;
    PropensitySpec propensity_ = ConstantPropensity{0.5};
    PosteriorFn direct_y_;
    PosteriorFn direct_e_;
    SamplerFn direct_sampler_;
    std::string fingerprint_;
    double target_c_ = kNaN;
};

inline double exact_posterior(const Scenario& sc, std::span<const double> x) {
    return sc.posterior(x);
}
inline double exact_propensity(const Scenario& sc, std::span<const double> x) {
    return sc.propensity(x);
}
inline double exact_label_posterior(const Scenario& sc, std::span<const double> x) {
    return sc.label_posterior(x);
}

// ---------------------------------------------------------------------------
// Datasets
// ---------------------------------------------------------------------------

struct Sample {
    Vec x;
    int y = 0;  // true class (hidden at prediction time)
    int s = 0;  // label indicator; s = 1 implies y = 1
};

struct DatasetMeta {
    std::string fingerprint;   // scenario identity
    double target_c = kNaN;    // intended label frequency (NaN when not applicable)
    double achieved_c = kNaN;  // realized #labeled / #positives (0 when no positives)
    std::uint64_t seed = 0;
};

class PuDataset;

// Read-only view of what a PU learner may see: features and label indicator.
// The true class stays behind PuDataset::y_true for evaluation code.
class ObservableView {
  public:
    explicit ObservableView(const PuDataset& ds) : ds_(&ds) {}
    std::size_t size() const;
    std::size_t dims() const;
    std::span<const double> x(std::size_t i) const;
    int s(std::size_t i) const;

  private:
    const PuDataset* ds_;
};

class PuDataset {
  public:
    PuDataset(std::vector<Sample> samples, DatasetMeta meta)
        : samples_(std::move(samples)), meta_(std::move(meta)) {
        if (samples_.empty()) throw std::invalid_argument("dataset: no records");
        dims_ = samples_[0].x.size();
        if (dims_ == 0) throw std::invalid_argument("dataset: zero-dimensional records");
        for (std::size_t i = 0; i < samples_.size(); ++i) {
            const Sample& r = samples_[i];
            if (r.x.size() != dims_) {
                throw std::invalid_argument("dataset: record " + std::to_string(i) +
                                            " has inconsistent dimension");
            }
            if ((r.y != 0 && r.y != 1) || (r.s != 0 && r.s != 1)) {
                throw std::invalid_argument("dataset: record " + std::to_string(i) +
                                            " has non-binary y or s");
            }
            if (r.s == 1 && r.y != 1) {
                throw std::invalid_argument("dataset: record " + std::to_string(i) +
                                            " is labeled (s=1) but not positive (y=0)");
            }
            for (double v : r.x) {
                if (!is_finite(v)) {
                    throw std::invalid_argument("dataset: record " + std::to_string(i) +
                                                " has a non-finite feature");
                }
            }
        }
    }

    std::size_t size() const { return samples_.size(); }
    std::size_t dims() const { return dims_; }
    std::span<const double> x(std::size_t i) const { return samples_[i].x; }
    int s(std::size_t i) const { return samples_[i].s; }
    // Evaluation-only accessor: the true class is not observable at
    // prediction time.
    int y_true(std::size_t i) const { return samples_[i].y; }
    const DatasetMeta& meta() const { return meta_; }
    ObservableView observable() const { return ObservableView(*this); }

    // Realized label frequency #labeled / #positives (0 if no positives).
    double recompute_achieved_c() const {
        std::size_t pos = 0, lab = 0;
        for (const Sample& r : samples_) {
            pos += static_cast<std::size_t>(r.y);
            lab += static_cast<std::size_t>(r.s);
        }
        return pos == 0 ? 0.0 : static_cast<double>(lab) / static_cast<double>(pos);
    }

    // CSV layout: header "x_0,...,x_{p-1},y,s", one record per line, features
    // rendered with round-trip precision.
    void write_csv(const std::filesystem::path& path) const {
        std::ofstream out(path);
        if (!out) throw std::runtime_error("dataset: cannot open " + path.string() + " for writing");
        for (std::size_t j = 0; j < dims_; ++j) out << "x_" << j << ",";
        out << "y,s\n";
        for (const Sample& r : samples_) {
            for (double v : r.x) out << to_string_g17(v) << ",";
            out << r.y << "," << r.s << "\n";
        }
        if (!out) throw std::runtime_error("dataset: write failed for " + path.string());
    }

    // Metadata sidecar; seed round-trips as an integer and the floating
    // fields round-trip exactly (shortest-faithful serialization).
    void write_meta_json(const std::filesystem::path& path) const {
        nlohmann::json j;
        j["fingerprint"] = meta_.fingerprint;
        if (std::isnan(meta_.target_c)) {
            j["target_c"] = nullptr;
        } else {
            j["target_c"] = meta_.target_c;
        }
        j["achieved_c"] = meta_.achieved_c;
        j["seed"] = meta_.seed;
        j["n"] = samples_.size();
        j["dims"] = dims_;
        std::ofstream out(path);
        if (!out) throw std::runtime_error("dataset: cannot open " + path.string() + " for writing");
        out << j.dump(2) << "\n";
        if (!out) throw std::runtime_error("dataset: write failed for " + path.string());
    }

    static PuDataset read(const std::filesystem::path& csv_path,
                          const std::filesystem::path& json_path) {
        DatasetMeta meta = read_meta(json_path);
        std::ifstream in(csv_path);
        if (!in) throw std::runtime_error("dataset: cannot open " + csv_path.string());
        std::string line;
        if (!std::getline(in, line)) {
            throw std::runtime_error("dataset: " + csv_path.string() + " is empty");
        }
        const std::size_t dims = parse_header(line, csv_path);
        std::vector<Sample> samples;
        std::size_t line_no = 1;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.empty()) continue;
            samples.push_back(parse_row(line, dims, csv_path, line_no));
        }
        return PuDataset(std::move(samples), std::move(meta));
    }

  private:
    static DatasetMeta read_meta(const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("dataset: cannot open " + path.string());
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw std::runtime_error("dataset: " + path.string() + ": " + e.what());
        }
        DatasetMeta meta;
        meta.fingerprint = j.at("fingerprint").get<std::string>();
        meta.target_c = j.at("target_c").is_null() ? kNaN : j.at("target_c").get<double>();
        meta.achieved_c = j.at("achieved_c").get<double>();
        meta.seed = j.at("seed").get<std::uint64_t>();
        return meta;
    }

    static std::size_t parse_header(const std::string& line, const std::filesystem::path& path) {
        std::vector<std::string> fields = split_csv(line);
        if (fields.size() < 3 || fields[fields.size() - 2] != "y" || fields.back() != "s") {
            throw std::runtime_error("dataset: " + path.string() +
                                     ": header must end with \"y,s\"");
        }
        const std::size_t dims = fields.size() - 2;
        for (std::size_t j = 0; j < dims; ++j) {
            if (fields[j] != "x_" + std::to_string(j)) {
                throw std::runtime_error("dataset: " + path.string() + ": header column " +
                                         std::to_string(j) + " must be x_" + std::to_string(j));
            }
        }
        return dims;
    }

    static Sample parse_row(const std::string& line, std::size_t dims,
                            const std::filesystem::path& path, std::size_t line_no) {
        std::vector<std::string> fields = split_csv(line);
        if (fields.size() != dims + 2) {
            throw std::runtime_error("dataset: " + path.string() + ":" + std::to_string(line_no) +
                                     ": expected " + std::to_string(dims + 2) + " fields, got " +
                                     std::to_string(fields.size()));
        }
        Sample r;
        r.x.resize(dims);
        for (std::size_t j = 0; j < dims; ++j) {
            r.x[j] = parse_double(fields[j], path, line_no);
        }
        r.y = parse_bit(fields[dims], path, line_no, "y");
        r.s = parse_bit(fields[dims + 1], path, line_no, "s");
        return r;
    }

    static std::vector<std::string> split_csv(const std::string& line) {
        std::vector<std::string> out;
        std::string cur;
        for (char ch : line) {
            if (ch == ',') {
                out.push_back(cur);
                cur.clear();
            } else if (ch != '\r') {
                cur.push_back(ch);
            }
        }
        out.push_back(cur);
        return out;
    }

    static double parse_double(const std::string& f, const std::filesystem::path& path,
                               std::size_t line_no) {
        char* end = nullptr;
        const double v = std::strtod(f.c_str(), &end);
        if (f.empty() || end != f.c_str() + f.size() || !is_finite(v)) {
            throw std::runtime_error("dataset: " + path.string() + ":" + std::to_string(line_no) +
                                     ": bad numeric field \"" + f + "\"");
        }
        return v;
    }

    static int parse_bit(const std::string& f, const std::filesystem::path& path,
                         std::size_t line_no, const char* name) {
        if (f == "0") return 0;
        if (f == "1") return 1;
        throw std::runtime_error("dataset: " + path.string() + ":" + std::to_string(line_no) +
                                 ": field " + name + " must be 0 or 1, got \"" + f + "\"");
    }

    std::vector<Sample> samples_;
    DatasetMeta meta_;
    std::size_t dims_ = 0;
};

inline std::size_t ObservableView::size() const { return ds_->size(); }
inline std::size_t ObservableView::dims() const { return ds_->dims(); }
inline std::span<const double> ObservableView::x(std::size_t i) const { return ds_->x(i); }
inline int ObservableView::s(std::size_t i) const { return ds_->s(i); }

// ---------------------------------------------------------------------------
// Estimator pairs and risk reports
// ---------------------------------------------------------------------------

// Where an estimator pair's components came from.
enum class Provenance { prophet, semi_prophet_y, semi_prophet_s, fitted };

inline const char* to_string(Provenance p) {
    switch (p) {
        case Provenance::prophet: return "prophet";
        case Provenance::semi_prophet_y: return "semi_prophet_y";
        case Provenance::semi_prophet_s: return "semi_prophet_s";
        case Provenance::fitted: return "fitted";
    }
    return "unknown";
}

// A (y_hat, s_hat) pair: estimates of P(Y=1|x) and P(S=1|x).  Components are
// expected to map into [0, 1]; builders in the estimators module clamp.
struct EstimatorPair {
    std::function<double(std::span<const double>)> y_hat;
    std::function<double(std::span<const double>)> s_hat;
    Provenance provenance = Provenance::fitted;
};

struct Estimate {
    double value = 0.0;
    double std_error = 0.0;
};

// Monte-Carlo risk summary for a scenario.  l_star is the Bayes risk of the
// feature-only problem; l_star_pu is the risk of the optimal augmented rule
// (its closed expectation form); l_star_pu_sampled is the same quantity
// estimated from the unlabeled stratum with S drawn per record (cross-check);
// l_star_pu_stratum renormalizes by P(S=0).  excess = l_star - l_star_pu >= 0
// (the risk removed by observing S), accumulated pointwise, with
// bound_lower <= excess <= bound_upper its structural envelope.
struct RiskReport {
    Estimate l_star;
    Estimate l_star_pu;
    Estimate l_star_pu_sampled;
    Estimate l_star_pu_stratum;
    Estimate excess;
    Estimate p_s1;
    double bound_lower = 0.0;
    double bound_upper = 0.0;
    double bound_violation = 0.0;  // max(0, lower - excess, excess - upper)
    std::uint64_t n_mc = 0;
    std::uint64_t seed = 0;

    nlohmann::json to_json() const {
        auto est = [](const Estimate& e) {
            return nlohmann::json{{"estimate", e.value}, {"std_error", e.std_error}};
        };
        return nlohmann::json{
            {"l_star", est(l_star)},
            {"l_star_pu", est(l_star_pu)},
            {"l_star_pu_sampled", est(l_star_pu_sampled)},
            {"l_star_pu_stratum", est(l_star_pu_stratum)},
            {"excess", est(excess)},
            {"p_s1", est(p_s1)},
            {"bound_lower", bound_lower},
            {"bound_upper", bound_upper},
            {"bound_violation", bound_violation},
            {"n_mc", n_mc},
            {"seed", seed},
        };
    }
};

}  // namespace purisk
