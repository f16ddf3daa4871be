#pragma once

// Numeric primitives shared across the library: numerically stable logistic
// helpers, the standard normal CDF, fixed-order moment accumulation for
// Monte-Carlo estimates, and a minimal dense row-major matrix.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace purisk {

using Vec = std::vector<double>;

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Logistic function, stable for large |z| (never overflows).
inline double sigmoid(double z) {
    if (z >= 0.0) {
        return 1.0 / (1.0 + std::exp(-z));
    }
    const double e = std::exp(z);
    return e / (1.0 + e);
}

// Inverse of sigmoid; defined on the open interval (0, 1).
inline double logit(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        throw std::domain_error("logit: argument must lie in (0, 1), got " +
                                std::to_string(p));
    }
    return std::log(p / (1.0 - p));
}

// log(1 + exp(z)) without overflow; also the softplus function.
inline double log1pexp(double z) {
    if (z <= -37.0) return std::exp(z);
    if (z <= 18.0) return std::log1p(std::exp(z));
    if (z <= 33.3) return z + std::exp(-z);
    return z;
}

// log(exp(a) + exp(b)) with the usual max-shift trick; tolerates -inf.
inline double log_sum_exp(double a, double b) {
    if (a == -kInf) return b;
    if (b == -kInf) return a;
    const double m = a > b ? a : b;
    return m + std::log1p(std::exp(-std::fabs(a - b)));
}

inline double normal_pdf(double x) {
    static const double inv_sqrt_2pi = 0.3989422804014326779399461;
    return inv_sqrt_2pi * std::exp(-0.5 * x * x);
}

// Standard normal CDF via erfc; accurate to ~1e-15 absolute over the reals.
inline double normal_cdf(double x) {
    static const double inv_sqrt2 = 0.7071067811865475244008444;
    return 0.5 * std::erfc(-x * inv_sqrt2);
}

inline double clamp01(double v) {
    if (v < 0.0) return 0.0;
    if (v > 1.0) return 1.0;
    return v;
}

inline bool is_finite(double v) { return std::isfinite(v); }

// Shortest-faithful decimal rendering of a double ("%.17g" round-trips
// exactly); used for CSV payloads and scenario fingerprints.
inline std::string to_string_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// Running first/second moments of one scalar series.  Accumulators are merged
// in a caller-fixed order, so parallel reductions that combine per-block
// accumulators by block index produce bit-identical results for any worker
// count.
struct Moments {
    std::uint64_t count = 0;
    double sum = 0.0;
    double sum_sq = 0.0;

    void add(double v) {
        ++count;
        sum += v;
        sum_sq += v * v;
    }
    void merge(const Moments& o) {
        count += o.count;
        sum += o.sum;
        sum_sq += o.sum_sq;
    }
    double mean() const {
        if (count == 0) throw std::logic_error("Moments::mean: empty accumulator");
        return sum / static_cast<double>(count);
    }
    // Population variance of the sample (plug-in estimate).
    double variance() const {
        const double m = mean();
        double v = sum_sq / static_cast<double>(count) - m * m;
        return v > 0.0 ? v : 0.0;
    }
    // Standard error of the mean under the plug-in variance.
    double std_error() const {
        if (count == 0) throw std::logic_error("Moments::std_error: empty accumulator");
        return std::sqrt(variance() / static_cast<double>(count));
    }
};

// Dense row-major matrix; just enough structure for the logistic solvers.
struct DenseMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    Vec data;  // rows * cols, row-major

    DenseMatrix() = default;
    DenseMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    double& at(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double at(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
    std::span<const double> row(std::size_t i) const {
        return std::span<const double>(data).subspan(i * cols, cols);
    }
    std::span<double> row(std::size_t i) {
        return std::span<double>(data).subspan(i * cols, cols);
    }
};

inline double dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw std::invalid_argument("dot: size mismatch (" + std::to_string(a.size()) +
                                    " vs " + std::to_string(b.size()) + ")");
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

}  // namespace purisk
