#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "yieldml/common.hpp"

namespace yieldml {

// How "within tolerance" is judged. Relative: |residual| <= tol * |actual|.
// Range: |residual| <= tol * reference_range (one absolute threshold for all
// rows, reference_range normally the training-target max - min).
enum class ToleranceRule { Relative, Range };

inline std::string to_string(ToleranceRule r) {
    return r == ToleranceRule::Relative ? "relative" : "range";
}

inline ToleranceRule tolerance_rule_from_string(const std::string& s) {
    if (s == "relative") return ToleranceRule::Relative;
    if (s == "range") return ToleranceRule::Range;
    throw ConfigError("unknown tolerance rule '" + s + "' (use 'relative' or 'range')");
}

struct ResidualRow {
    double actual = 0.0;
    double predicted = 0.0;
    double residual = 0.0;  // actual - predicted
};

struct Evaluation {
    double rms_error = 0.0;
    double accuracy = 0.0;  // fraction in [0,1]
    double tolerance = 0.30;
    ToleranceRule rule = ToleranceRule::Relative;
    size_t n = 0;
    std::vector<ResidualRow> residuals;
};

namespace detail {
inline void check_pairs(std::span<const double> actual, std::span<const double> predicted) {
    if (actual.empty()) throw std::invalid_argument("metrics: empty input");
    if (actual.size() != predicted.size())
        throw std::invalid_argument("metrics: size mismatch (" + std::to_string(actual.size()) +
                                    " vs " + std::to_string(predicted.size()) + ")");
    for (size_t i = 0; i < actual.size(); ++i)
        if (!is_finite(actual[i]) || !is_finite(predicted[i]))
            throw std::invalid_argument("metrics: non-finite value at index " + std::to_string(i));
}
}  // namespace detail

inline double rms_error(std::span<const double> actual, std::span<const double> predicted) {
    detail::check_pairs(actual, predicted);
    double sum = 0.0;
    for (size_t i = 0; i < actual.size(); ++i) {
        double r = actual[i] - predicted[i];
        sum += r * r;
    }
    return std::sqrt(sum / static_cast<double>(actual.size()));
}

inline double tolerance_accuracy(std::span<const double> actual, std::span<const double> predicted,
                                 double tolerance) {
    detail::check_pairs(actual, predicted);
    if (!(tolerance > 0.0)) throw ConfigError("tolerance must be > 0");
    size_t good = 0;
    for (size_t i = 0; i < actual.size(); ++i) {
        if (actual[i] == 0.0)
            throw ConfigError("tolerance_accuracy: actual value at index " + std::to_string(i) +
                              " is zero; the relative rule is undefined there - use the range rule "
                              "(tolerance_accuracy_range)");
        if (std::abs(predicted[i] - actual[i]) <= tolerance * std::abs(actual[i])) ++good;
    }
    return static_cast<double>(good) / static_cast<double>(actual.size());
}

inline double tolerance_accuracy_range(std::span<const double> actual, std::span<const double> predicted,
                                       double tolerance, double reference_range) {
    detail::check_pairs(actual, predicted);
    if (!(tolerance > 0.0)) throw ConfigError("tolerance must be > 0");
    if (!(reference_range > 0.0) || !is_finite(reference_range))
        throw ConfigError("range rule: reference range must be > 0");
    size_t good = 0;
    for (size_t i = 0; i < actual.size(); ++i)
        if (std::abs(predicted[i] - actual[i]) <= tolerance * reference_range) ++good;
    return static_cast<double>(good) / static_cast<double>(actual.size());
}

// reference_range is only consulted under ToleranceRule::Range.
inline Evaluation evaluate(std::span<const double> actual, std::span<const double> predicted,
                           double tolerance = 0.30, ToleranceRule rule = ToleranceRule::Relative,
                           double reference_range = 0.0) {
    Evaluation ev;
    ev.rms_error = rms_error(actual, predicted);
    ev.accuracy = rule == ToleranceRule::Relative
                      ? tolerance_accuracy(actual, predicted, tolerance)
                      : tolerance_accuracy_range(actual, predicted, tolerance, reference_range);
    ev.tolerance = tolerance;
    ev.rule = rule;
    ev.n = actual.size();
    ev.residuals.reserve(actual.size());
    for (size_t i = 0; i < actual.size(); ++i)
        ev.residuals.push_back({actual[i], predicted[i], actual[i] - predicted[i]});
    return ev;
}

}  // namespace yieldml
