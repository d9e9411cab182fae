#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "yieldml/dataset.hpp"
#include "yieldml/metrics.hpp"

namespace yieldml {

// Kernel regressor: prediction is a Gaussian-weighted average of stored
// training targets; the single bandwidth sigma is the only free parameter.
struct GrnnModel {
    std::vector<std::vector<double>> patterns;  // normalized inputs, p rows
    std::vector<double> targets;                // raw yield units, p
    double sigma = 1.0;
    Normalizer normalizer;

    size_t pattern_count() const { return patterns.size(); }

    void validate() const {
        if (patterns.empty() || patterns.size() != targets.size())
            throw ConfigError("grnn: need pattern_count = target_count >= 1");
        if (!(sigma > 0.0) || !is_finite(sigma)) throw ConfigError("grnn: sigma must be positive and finite");
        for (const auto& p : patterns)
            if (p.size() != normalizer.dim()) throw ConfigError("grnn: pattern dimension mismatch");
    }
};

// 25 log-spaced points over [1e-2, 1e1], in normalized-feature units.
inline std::vector<double> default_sigma_grid() {
    std::vector<double> grid(25);
    for (int k = 0; k < 25; ++k) grid[k] = std::pow(10.0, -2.0 + 3.0 * k / 24.0);
    return grid;
}

namespace detail {

// Weighted average over patterns, optionally skipping one index (for
// leave-one-out). Distances are shifted by their minimum before
// exponentiation; the ratio is unchanged and cannot underflow to 0/0.
inline double grnn_estimate(const std::vector<std::vector<double>>& patterns,
                            const std::vector<double>& targets, double sigma,
                            std::span<const double> query, size_t skip = SIZE_MAX) {
    const double inv = 1.0 / (2.0 * sigma * sigma);
    double d_min = std::numeric_limits<double>::infinity();
    size_t nearest = SIZE_MAX;
    std::vector<double> dist(patterns.size());
    for (size_t j = 0; j < patterns.size(); ++j) {
        if (j == skip) continue;
        dist[j] = squared_distance(query, patterns[j]);
        if (dist[j] < d_min) {
            d_min = dist[j];
            nearest = j;
        }
    }
    double num = 0.0, den = 0.0;
    double y_lo = std::numeric_limits<double>::infinity();
    double y_hi = -std::numeric_limits<double>::infinity();
    for (size_t j = 0; j < patterns.size(); ++j) {
        if (j == skip) continue;
        // the d == d_min weight is 1 by definition; spelling it out keeps
        // 0 * inf out of the expression when 2*sigma^2 underflows
        double w = dist[j] == d_min ? 1.0 : std::exp(-(dist[j] - d_min) * inv);
        num += targets[j] * w;
        den += w;
        y_lo = std::min(y_lo, targets[j]);
        y_hi = std::max(y_hi, targets[j]);
    }
    // den >= 1 after the shift; the fallback is unreachable but keeps the
    // never-NaN contract even if the shift is bypassed by future edits.
    if (den == 0.0) return targets[nearest];
    return std::clamp(num / den, y_lo, y_hi);
}

inline std::vector<std::vector<double>> pairwise_sq_distances(
    const std::vector<std::vector<double>>& pts) {
    const size_t n = pts.size();
    std::vector<std::vector<double>> d(n, std::vector<double>(n, 0.0));
    for (size_t i = 0; i < n; ++i)
        for (size_t j = i + 1; j < n; ++j) d[i][j] = d[j][i] = squared_distance(pts[i], pts[j]);
    return d;
}

// Leave-one-out RMS error on pre-normalized patterns, reusing a precomputed
// distance matrix across the whole sigma grid.
inline double loo_rms(const std::vector<std::vector<double>>& dist, const std::vector<double>& targets,
                      double sigma) {
    const size_t n = targets.size();
    const double inv = 1.0 / (2.0 * sigma * sigma);
    double sum = 0.0;
    for (size_t i = 0; i < n; ++i) {
        double d_min = std::numeric_limits<double>::infinity();
        for (size_t j = 0; j < n; ++j)
            if (j != i) d_min = std::min(d_min, dist[i][j]);
        double num = 0.0, den = 0.0;
        for (size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            double w = dist[i][j] == d_min ? 1.0 : std::exp(-(dist[i][j] - d_min) * inv);
            num += targets[j] * w;
            den += w;
        }
        double r = targets[i] - num / den;
        sum += r * r;
    }
    return std::sqrt(sum / static_cast<double>(n));
}

inline double select_bandwidth_normalized(const std::vector<std::vector<double>>& patterns,
                                          const std::vector<double>& targets,
                                          std::vector<double> grid) {
    if (grid.empty()) throw ConfigError("grnn: empty bandwidth grid");
    if (patterns.size() < 2) throw ConfigError("grnn: bandwidth selection needs >= 2 samples");
    for (double s : grid)
        if (!(s > 0.0) || !is_finite(s)) throw ConfigError("grnn: grid values must be positive");
    auto dist = pairwise_sq_distances(patterns);
    double d_max = 0.0;
    for (const auto& row : dist)
        for (double v : row) d_max = std::max(d_max, v);
    if (d_max == 0.0) throw TrainingError("grnn: degenerate training set (all inputs identical)");

    std::sort(grid.begin(), grid.end());  // ties resolve toward the smaller sigma
    double best_sigma = grid.front();
    double best_rms = std::numeric_limits<double>::infinity();
    for (double s : grid) {
        double r = loo_rms(dist, targets, s);
        if (r < best_rms) {
            best_rms = r;
            best_sigma = s;
        }
    }
    return best_sigma;
}

}  // namespace detail

// Grid value minimizing leave-one-out RMS error on the training set.
inline double select_bandwidth(const Dataset& train, const std::vector<double>& grid) {
    Normalizer norm = Normalizer::fit(train);
    return detail::select_bandwidth_normalized(norm.transform_all(train), train.targets, grid);
}

inline GrnnModel grnn_train(const Dataset& train, std::vector<double> sigma_grid = {}) {
    if (train.size() < 2) throw ConfigError("grnn: need >= 2 training samples");
    if (sigma_grid.empty()) sigma_grid = default_sigma_grid();
    GrnnModel m;
    m.normalizer = Normalizer::fit(train);
    m.patterns = m.normalizer.transform_all(train);
    m.targets = train.targets;
    m.sigma = detail::select_bandwidth_normalized(m.patterns, m.targets, std::move(sigma_grid));
    m.validate();
    return m;
}

// Prediction at a raw-unit query; always inside [min target, max target].
inline double grnn_predict(const GrnnModel& m, std::span<const double> x) {
    auto z = m.normalizer.transform(x);
    return detail::grnn_estimate(m.patterns, m.targets, m.sigma, z);
}

}  // namespace yieldml
