#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "yieldml/dataset.hpp"
#include "yieldml/metrics.hpp"

namespace yieldml {

struct SvrConfig {
    double C = 10.0;        // box constraint
    double epsilon = 0.1;   // insensitive-tube half-width, target units
    double gamma = 1.0;     // RBF exponent coefficient, normalized-feature units
    double tol = 1e-3;      // KKT tolerance
    int max_passes = 200000;  // cap on pairwise SMO updates

    void validate() const {
        if (!(C > 0.0) || !is_finite(C)) throw ConfigError("svr: C must be > 0");
        if (!(epsilon >= 0.0) || !is_finite(epsilon)) throw ConfigError("svr: epsilon must be >= 0");
        if (!(gamma > 0.0) || !is_finite(gamma)) throw ConfigError("svr: gamma must be > 0");
        if (!(tol > 0.0) || !is_finite(tol)) throw ConfigError("svr: tol must be > 0");
        if (max_passes < 1) throw ConfigError("svr: max_passes must be >= 1");
    }
};

inline double rbf_kernel(std::span<const double> x, std::span<const double> z, double gamma) {
    return std::exp(-gamma * squared_distance(x, z));
}

// Sparse kernel expansion over the training patterns that carry nonzero dual
// coefficients.
struct SvrModel {
    std::vector<std::vector<double>> support_patterns;  // normalized inputs
    std::vector<double> coefficients;                   // beta_j = alpha_j - alpha*_j
    double bias = 0.0;
    SvrConfig config;
    Normalizer normalizer;
    bool converged = true;

    size_t support_count() const { return support_patterns.size(); }

    void validate() const {
        config.validate();
        if (support_patterns.size() != coefficients.size())
            throw ConfigError("svr: pattern/coefficient count mismatch");
        double sum = 0.0;
        for (double b : coefficients) {
            if (std::abs(b) > config.C + 1e-12) throw ConfigError("svr: |coefficient| exceeds C");
            sum += b;
        }
        if (std::abs(sum) > config.tol) throw ConfigError("svr: coefficients do not sum to zero");
        if (!is_finite(bias)) throw ConfigError("svr: non-finite bias");
    }
};

inline double svr_predict(const SvrModel& m, std::span<const double> x) {
    auto z = m.normalizer.transform(x);
    double f = m.bias;
    for (size_t j = 0; j < m.support_patterns.size(); ++j)
        f += m.coefficients[j] * rbf_kernel(z, m.support_patterns[j], m.config.gamma);
    return f;
}

struct SvrTrainResult {
    SvrModel model;
    bool converged = false;
    int iterations = 0;
    std::vector<double> beta;       // per training sample, before support pruning
    std::vector<double> residuals;  // y_i - f(x_i) including bias
    double dual_objective = 0.0;
};

// Invoked once per SMO update with the current 2n-variable state; test hook.
using SvrAudit = std::function<void(int iteration, std::span<const double> u, std::span<const double> beta)>;

namespace detail {

// SMO working state over 2n variables u_p = s_p * alpha_p, where the first n
// entries (s=+1) are the alphas and the last n (s=-1) the alpha-stars. The
// equality constraint is sum(u) = 0 and each u_p sits in a one-sided box.
// Pair steps move u_i up and u_j down by the same amount, so the constraint
// holds exactly throughout.
class SmoSolver {
public:
    SmoSolver(const std::vector<std::vector<double>>& patterns, const std::vector<double>& targets,
              const SvrConfig& cfg)
        : x_(patterns), y_(targets), cfg_(cfg), n_(patterns.size()) {
        u_.assign(2 * n_, 0.0);
        beta_.assign(n_, 0.0);
        error_.resize(n_);
        for (size_t k = 0; k < n_; ++k) error_[k] = -y_[k];  // f-hat(x_k) - y_k at beta = 0
        if (n_ <= kGramCacheLimit) {
            gram_.assign(n_, std::vector<double>(n_));
            for (size_t i = 0; i < n_; ++i)
                for (size_t j = i; j < n_; ++j)
                    gram_[i][j] = gram_[j][i] = rbf_kernel(x_[i], x_[j], cfg_.gamma);
        }
    }

    bool solve(int& iterations, const SvrAudit& audit) {
        for (iterations = 0; iterations < cfg_.max_passes; ++iterations) {
            auto [i, m_val] = max_up();
            auto [j_min, min_val] = min_low();
            (void)j_min;
            if (m_val - min_val <= cfg_.tol) return true;

            size_t j = select_second(i, m_val);
            if (j == kNone) return false;

            const size_t mi = i % n_, mj = j % n_;
            double eta = kernel(mi, mi) + kernel(mj, mj) - 2.0 * kernel(mi, mj);
            double step = eta > kEtaFloor ? (m_val - value(j)) / eta
                                          : std::numeric_limits<double>::infinity();
            step = std::min({step, upper(i) - u_[i], u_[j] - lower(j)});

            // move the pair by one common amount; push rounding overshoot back
            // through the partner so sum(u) = 0 and the boxes hold exactly
            const double old_i = u_[i];
            u_[i] += step;
            u_[j] -= step;
            if (u_[i] > upper(i)) {
                u_[j] += u_[i] - upper(i);
                u_[i] = upper(i);
            }
            if (u_[j] < lower(j)) {
                u_[i] -= lower(j) - u_[j];
                u_[j] = lower(j);
            }
            const double applied = u_[i] - old_i;
            if (!(applied > 0.0)) return m_val - min_val <= cfg_.tol;
            beta_[mi] += applied;
            beta_[mj] -= applied;
            if (mi != mj)
                for (size_t k = 0; k < n_; ++k) error_[k] += applied * (kernel(k, mi) - kernel(k, mj));
            if (audit) audit(iterations + 1, u_, beta_);
        }
        auto [i, m_val] = max_up();
        auto [j, min_val] = min_low();
        (void)i;
        (void)j;
        return m_val - min_val <= cfg_.tol;
    }

    double bias() const {
        auto [i, m_val] = max_up();
        auto [j, min_val] = min_low();
        (void)i;
        (void)j;
        return 0.5 * (m_val + min_val);
    }

    const std::vector<double>& beta() const { return beta_; }

    double dual_objective() const {
        double quad = 0.0;
        for (size_t i = 0; i < n_; ++i) {
            if (beta_[i] == 0.0) continue;
            for (size_t j = 0; j < n_; ++j) quad += beta_[i] * beta_[j] * kernel(i, j);
        }
        double linear = 0.0;
        for (size_t p = 0; p < 2 * n_; ++p) linear += cfg_.epsilon * std::abs(u_[p]);
        for (size_t i = 0; i < n_; ++i) linear -= y_[i] * beta_[i];
        return 0.5 * quad + linear;
    }

private:
    static constexpr size_t kNone = static_cast<size_t>(-1);
    static constexpr size_t kGramCacheLimit = 2000;
    static constexpr double kEtaFloor = 1e-12;

    double kernel(size_t i, size_t j) const {
        if (!gram_.empty()) return gram_[i][j];
        return rbf_kernel(x_[i], x_[j], cfg_.gamma);
    }

    double sign(size_t p) const { return p < n_ ? 1.0 : -1.0; }
    double upper(size_t p) const { return p < n_ ? cfg_.C : 0.0; }
    double lower(size_t p) const { return p < n_ ? 0.0 : -cfg_.C; }

    // Negated dual gradient; optimality is max over I_up <= min over I_low.
    double value(size_t p) const { return -error_[p % n_] - sign(p) * cfg_.epsilon; }

    std::pair<size_t, double> max_up() const {
        size_t best = kNone;
        double best_val = -std::numeric_limits<double>::infinity();
        for (size_t p = 0; p < 2 * n_; ++p) {
            if (!(u_[p] < upper(p))) continue;
            double v = value(p);
            if (v > best_val) {
                best_val = v;
                best = p;
            }
        }
        return {best, best_val};
    }

    std::pair<size_t, double> min_low() const {
        size_t best = kNone;
        double best_val = std::numeric_limits<double>::infinity();
        for (size_t p = 0; p < 2 * n_; ++p) {
            if (!(u_[p] > lower(p))) continue;
            double v = value(p);
            if (v < best_val) {
                best_val = v;
                best = p;
            }
        }
        return {best, best_val};
    }

    // Second working variable: the one allowing the largest actual step
    // (unconstrained Newton step clipped by both boxes), lowest index on ties.
    size_t select_second(size_t i, double m_val) const {
        const size_t mi = i % n_;
        const double room_i = upper(i) - u_[i];
        size_t best = kNone;
        double best_step = 0.0;
        for (size_t p = 0; p < 2 * n_; ++p) {
            if (!(u_[p] > lower(p))) continue;
            double v = value(p);
            if (!(v < m_val)) continue;
            const size_t mp = p % n_;
            double eta = kernel(mi, mi) + kernel(mp, mp) - 2.0 * kernel(mi, mp);
            double step = eta > kEtaFloor ? (m_val - v) / eta : std::numeric_limits<double>::infinity();
            step = std::min({step, room_i, u_[p] - lower(p)});
            if (step > best_step) {
                best_step = step;
                best = p;
            }
        }
        return best;
    }

    const std::vector<std::vector<double>>& x_;
    const std::vector<double>& y_;
    SvrConfig cfg_;
    size_t n_;
    std::vector<double> u_;
    std::vector<double> beta_;
    std::vector<double> error_;  // f-hat(x_k) - y_k, bias excluded
    std::vector<std::vector<double>> gram_;
};

}  // namespace detail

inline SvrTrainResult svr_train_full(const Dataset& train, const SvrConfig& cfg,
                                     const SvrAudit& audit = {}) {
    cfg.validate();
    if (train.size() == 0) throw ConfigError("svr: empty training set");
    SvrTrainResult result;
    Normalizer norm = train.size() == 1 ? Normalizer::identity(train.dim()) : Normalizer::fit(train);
    auto patterns = norm.transform_all(train);

    detail::SmoSolver solver(patterns, train.targets, cfg);
    result.converged = solver.solve(result.iterations, audit);
    result.beta = solver.beta();
    result.dual_objective = solver.dual_objective();

    SvrModel m;
    m.config = cfg;
    m.normalizer = std::move(norm);
    m.bias = solver.bias();
    m.converged = result.converged;
    for (size_t j = 0; j < result.beta.size(); ++j) {
        if (std::abs(result.beta[j]) > 1e-12) {
            m.support_patterns.push_back(patterns[j]);
            m.coefficients.push_back(result.beta[j]);
        }
    }
    m.validate();

    result.residuals.resize(train.size());
    for (size_t k = 0; k < train.size(); ++k)
        result.residuals[k] = train.targets[k] - svr_predict(m, train.inputs[k]);
    result.model = std::move(m);
    return result;
}

inline SvrModel svr_train(const Dataset& train, const SvrConfig& cfg) {
    return svr_train_full(train, cfg).model;
}

// Mean k-fold RMS error over the grid, smallest (C, epsilon, gamma) on ties.
// Fold assignment is a seeded shuffle dealt round-robin.
inline SvrConfig svr_grid_search(const Dataset& train, std::vector<double> c_grid,
                                 std::vector<double> eps_grid, std::vector<double> gamma_grid,
                                 int folds, uint64_t seed = 0, const SvrConfig& base = {}) {
    if (c_grid.empty() || eps_grid.empty() || gamma_grid.empty())
        throw ConfigError("svr: empty hyperparameter grid");
    if (folds < 2) throw ConfigError("svr: need folds >= 2");
    if (train.size() < static_cast<size_t>(folds))
        throw ConfigError("svr: need at least " + std::to_string(folds) + " samples for " +
                          std::to_string(folds) + "-fold search, have " + std::to_string(train.size()));
    std::sort(c_grid.begin(), c_grid.end());
    std::sort(eps_grid.begin(), eps_grid.end());
    std::sort(gamma_grid.begin(), gamma_grid.end());

    std::vector<size_t> order(train.size());
    std::iota(order.begin(), order.end(), size_t{0});
    Rng rng(seed);
    for (size_t i = order.size() - 1; i > 0; --i) std::swap(order[i], order[rng.next_index(i + 1)]);
    std::vector<std::vector<size_t>> fold_idx(folds);
    for (size_t i = 0; i < order.size(); ++i) fold_idx[i % folds].push_back(order[i]);

    SvrConfig best = base;
    best.C = c_grid.front();
    best.epsilon = eps_grid.front();
    best.gamma = gamma_grid.front();
    double best_score = std::numeric_limits<double>::infinity();

    for (double c : c_grid)
        for (double eps : eps_grid)
            for (double gamma : gamma_grid) {
                SvrConfig cfg = base;
                cfg.C = c;
                cfg.epsilon = eps;
                cfg.gamma = gamma;
                double score = 0.0;
                for (int f = 0; f < folds; ++f) {
                    std::vector<size_t> train_rows;
                    for (int g = 0; g < folds; ++g)
                        if (g != f) train_rows.insert(train_rows.end(), fold_idx[g].begin(), fold_idx[g].end());
                    std::sort(train_rows.begin(), train_rows.end());
                    SvrModel m = svr_train(train.subset(train_rows), cfg);
                    std::vector<double> actual, predicted;
                    for (size_t row : fold_idx[f]) {
                        actual.push_back(train.targets[row]);
                        predicted.push_back(svr_predict(m, train.inputs[row]));
                    }
                    score += rms_error(actual, predicted);
                }
                score /= folds;
                if (score < best_score) {
                    best_score = score;
                    best = cfg;
                }
            }
    return best;
}

inline std::vector<double> default_svr_c_grid() { return {0.1, 1.0, 10.0, 100.0}; }
inline std::vector<double> default_svr_epsilon_grid() { return {0.01, 0.1, 1.0}; }
inline std::vector<double> default_svr_gamma_grid() { return {0.01, 0.1, 1.0, 10.0}; }

}  // namespace yieldml
