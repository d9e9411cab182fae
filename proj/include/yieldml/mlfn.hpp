#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "yieldml/dataset.hpp"

namespace yieldml {

inline double sigmoid(double zeta) { return 1.0 / (1.0 + std::exp(-zeta)); }

// Fully connected layered net: every neuron in a layer feeds every neuron in
// the next, nothing else.
struct MlfnTopology {
    std::vector<int> layer_sizes;  // [d_in, hidden..., d_out]

    void validate() const {
        if (layer_sizes.size() < 2) throw ConfigError("mlfn: topology needs input and output layers");
        for (int s : layer_sizes)
            if (s < 1) throw ConfigError("mlfn: every layer size must be >= 1");
    }
    size_t layer_count() const { return layer_sizes.size(); }
};

// Affine map taking raw yield into the sigmoid's working range and back.
struct TargetScaler {
    double scale = 1.0;
    double offset = 0.0;

    double to_scaled(double y) const { return scale * y + offset; }
    double to_raw(double s) const { return (s - offset) / scale; }

    // Maps [min target, max target] onto [0.1, 0.9]; a constant target column
    // maps onto 0.5 with unit slope so the map stays invertible.
    static TargetScaler fit(std::span<const double> targets) {
        if (targets.empty()) throw ConfigError("mlfn: no targets to scale");
        double lo = targets[0], hi = targets[0];
        for (double y : targets) {
            lo = std::min(lo, y);
            hi = std::max(hi, y);
        }
        TargetScaler s;
        if (hi > lo) {
            s.scale = 0.8 / (hi - lo);
            s.offset = 0.1 - s.scale * lo;
        } else {
            s.scale = 1.0;
            s.offset = 0.5 - lo;
        }
        return s;
    }
};

struct MlfnModel {
    MlfnTopology topology;
    // weights[l] connects layer l to layer l+1, flattened as [out * in_size + in];
    // thresholds[l] has one entry per layer-(l+1) neuron.
    std::vector<std::vector<double>> weights;
    std::vector<std::vector<double>> thresholds;
    Normalizer normalizer;
    TargetScaler target_scaler;

    void validate() const {
        topology.validate();
        const size_t layers = topology.layer_count();
        if (weights.size() != layers - 1 || thresholds.size() != layers - 1)
            throw ConfigError("mlfn: parameter block count does not match topology");
        for (size_t l = 0; l + 1 < layers; ++l) {
            size_t in = static_cast<size_t>(topology.layer_sizes[l]);
            size_t out = static_cast<size_t>(topology.layer_sizes[l + 1]);
            if (weights[l].size() != in * out || thresholds[l].size() != out)
                throw ConfigError("mlfn: parameter block size does not match topology at layer " +
                                  std::to_string(l));
            for (double w : weights[l])
                if (!is_finite(w)) throw ConfigError("mlfn: non-finite weight");
            for (double t : thresholds[l])
                if (!is_finite(t)) throw ConfigError("mlfn: non-finite threshold");
        }
        if (normalizer.dim() != static_cast<size_t>(topology.layer_sizes.front()))
            throw ConfigError("mlfn: normalizer dimension does not match input layer");
    }
};

struct TrainConfig {
    double learning_rate = 0.1;
    double momentum = 0.9;
    int max_epochs = 5000;
    int patience = 200;  // epochs without >= 1e-10 objective improvement
    uint64_t seed = 0;
    double init_half_width = 0.5;

    void validate() const {
        if (!(learning_rate > 0.0) || !is_finite(learning_rate))
            throw ConfigError("mlfn: learning_rate must be > 0");
        if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("mlfn: momentum must be in [0,1)");
        if (max_epochs < 1) throw ConfigError("mlfn: max_epochs must be >= 1");
        if (patience < 1) throw ConfigError("mlfn: patience must be >= 1");
        if (!(init_half_width > 0.0) || !is_finite(init_half_width))
            throw ConfigError("mlfn: init_half_width must be > 0");
    }
};

struct MlfnTrace {
    std::vector<std::vector<double>> activations;  // [0] = normalized input, then per layer
    double output_scaled = 0.0;                    // first output neuron, in (0,1)
    double output = 0.0;                           // raw yield units
};

struct MlfnGradient {
    std::vector<std::vector<double>> weights;
    std::vector<std::vector<double>> thresholds;
};

namespace detail {

inline std::vector<std::vector<double>> mlfn_forward_normalized(const MlfnModel& m,
                                                                std::span<const double> z) {
    std::vector<std::vector<double>> acts;
    acts.reserve(m.topology.layer_count());
    acts.emplace_back(z.begin(), z.end());
    for (size_t l = 0; l + 1 < m.topology.layer_count(); ++l) {
        const auto& prev = acts.back();
        const size_t in = prev.size();
        const size_t out = static_cast<size_t>(m.topology.layer_sizes[l + 1]);
        std::vector<double> next(out);
        for (size_t i = 0; i < out; ++i) {
            double potential = m.thresholds[l][i];
            const double* w = m.weights[l].data() + i * in;
            for (size_t j = 0; j < in; ++j) potential += w[j] * prev[j];
            next[i] = sigmoid(potential);
        }
        acts.push_back(std::move(next));
    }
    return acts;
}

// Objective (and optionally its gradient) on pre-normalized inputs and
// pre-scaled targets; the training loop and the public API share this path so
// their values agree bit for bit.
inline double mlfn_objective_core(const MlfnModel& m, const std::vector<std::vector<double>>& x_norm,
                                  const std::vector<double>& t_scaled, MlfnGradient* grad) {
    if (x_norm.empty()) throw std::invalid_argument("mlfn: empty dataset");
    const size_t layers = m.topology.layer_count();
    const size_t d_out = static_cast<size_t>(m.topology.layer_sizes.back());
    if (grad) {
        grad->weights.assign(layers - 1, {});
        grad->thresholds.assign(layers - 1, {});
        for (size_t l = 0; l + 1 < layers; ++l) {
            grad->weights[l].assign(m.weights[l].size(), 0.0);
            grad->thresholds[l].assign(m.thresholds[l].size(), 0.0);
        }
    }
    double objective = 0.0;
    for (size_t c = 0; c < x_norm.size(); ++c) {
        auto acts = mlfn_forward_normalized(m, x_norm[c]);
        const auto& out = acts.back();
        for (size_t o = 0; o < d_out; ++o) {
            double r = t_scaled[c] - out[o];
            objective += 0.5 * r * r;
        }
        if (!grad) continue;
        // reverse accumulation; delta holds dE/d(potential) per neuron
        std::vector<double> delta(d_out);
        for (size_t o = 0; o < d_out; ++o)
            delta[o] = (out[o] - t_scaled[c]) * out[o] * (1.0 - out[o]);
        for (size_t l = layers - 1; l-- > 0;) {
            const auto& in_acts = acts[l];
            const size_t in = in_acts.size();
            const size_t n_out = delta.size();
            for (size_t i = 0; i < n_out; ++i) {
                grad->thresholds[l][i] += delta[i];
                double* gw = grad->weights[l].data() + i * in;
                for (size_t j = 0; j < in; ++j) gw[j] += delta[i] * in_acts[j];
            }
            if (l == 0) break;
            std::vector<double> prev_delta(in, 0.0);
            for (size_t j = 0; j < in; ++j) {
                double s = 0.0;
                for (size_t i = 0; i < n_out; ++i) s += m.weights[l][i * in + j] * delta[i];
                prev_delta[j] = s * in_acts[j] * (1.0 - in_acts[j]);
            }
            delta = std::move(prev_delta);
        }
    }
    return objective;
}

}  // namespace detail

inline MlfnTrace forward(const MlfnModel& m, std::span<const double> x) {
    MlfnTrace tr;
    tr.activations = detail::mlfn_forward_normalized(m, m.normalizer.transform(x));
    tr.output_scaled = tr.activations.back()[0];
    tr.output = m.target_scaler.to_raw(tr.output_scaled);
    return tr;
}

inline double mlfn_predict(const MlfnModel& m, std::span<const double> x) { return forward(m, x).output; }

// Sum over cases and output neurons of half the squared scaled residual.
inline double objective(const MlfnModel& m, const Dataset& data) {
    std::vector<double> t(data.size());
    for (size_t i = 0; i < data.size(); ++i) t[i] = m.target_scaler.to_scaled(data.targets[i]);
    return detail::mlfn_objective_core(m, m.normalizer.transform_all(data), t, nullptr);
}

inline MlfnGradient gradient(const MlfnModel& m, const Dataset& data) {
    std::vector<double> t(data.size());
    for (size_t i = 0; i < data.size(); ++i) t[i] = m.target_scaler.to_scaled(data.targets[i]);
    MlfnGradient g;
    detail::mlfn_objective_core(m, m.normalizer.transform_all(data), t, &g);
    return g;
}

struct MlfnTrainResult {
    MlfnModel model;
    int epochs_run = 0;
    double final_objective = 0.0;
    std::vector<double> epoch_objectives;  // objective at the start of each epoch
};

// Called once per epoch with the objective at the epoch's starting parameters.
using MlfnObserver = std::function<void(int epoch, double objective, const MlfnModel& current)>;

// Full-batch gradient descent with momentum. Parameters start uniform in
// [-init_half_width, +init_half_width]; training stops at max_epochs or after
// `patience` epochs without a >= 1e-10 improvement. The best parameters seen
// are returned, so final_objective <= the initial objective always holds.
inline MlfnTrainResult mlfn_train(const MlfnTopology& topology, const Dataset& train,
                                  const TrainConfig& cfg, const MlfnObserver& observer = {}) {
    topology.validate();
    cfg.validate();
    if (train.size() == 0) throw ConfigError("mlfn: empty training set");
    if (static_cast<size_t>(topology.layer_sizes.front()) != train.dim())
        throw ConfigError("mlfn: input layer size " + std::to_string(topology.layer_sizes.front()) +
                          " does not match data dimension " + std::to_string(train.dim()));
    if (topology.layer_sizes.back() != 1)
        throw ConfigError("mlfn: training expects a single output neuron");

    MlfnModel m;
    m.topology = topology;
    m.normalizer = Normalizer::fit(train);
    m.target_scaler = TargetScaler::fit(train.targets);
    Rng rng(cfg.seed);
    const size_t layers = topology.layer_count();
    m.weights.resize(layers - 1);
    m.thresholds.resize(layers - 1);
    for (size_t l = 0; l + 1 < layers; ++l) {
        size_t in = static_cast<size_t>(topology.layer_sizes[l]);
        size_t out = static_cast<size_t>(topology.layer_sizes[l + 1]);
        m.weights[l].resize(in * out);
        m.thresholds[l].resize(out);
        for (double& w : m.weights[l]) w = rng.next_uniform(-cfg.init_half_width, cfg.init_half_width);
        for (double& t : m.thresholds[l]) t = rng.next_uniform(-cfg.init_half_width, cfg.init_half_width);
    }

    const auto x_norm = m.normalizer.transform_all(train);
    std::vector<double> t_scaled(train.size());
    for (size_t i = 0; i < train.size(); ++i) t_scaled[i] = m.target_scaler.to_scaled(train.targets[i]);

    MlfnGradient velocity;
    velocity.weights = m.weights;
    velocity.thresholds = m.thresholds;
    for (auto& v : velocity.weights) std::fill(v.begin(), v.end(), 0.0);
    for (auto& v : velocity.thresholds) std::fill(v.begin(), v.end(), 0.0);

    MlfnTrainResult result;
    MlfnModel best = m;
    double best_objective = std::numeric_limits<double>::infinity();
    double patience_reference = std::numeric_limits<double>::infinity();
    int stale_epochs = 0;

    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        MlfnGradient g;
        double e = detail::mlfn_objective_core(m, x_norm, t_scaled, &g);
        if (!is_finite(e))
            throw TrainingError("mlfn: diverged at epoch " + std::to_string(epoch) +
                                " (objective not finite; lower the learning rate)");
        result.epoch_objectives.push_back(e);
        if (observer) observer(epoch, e, m);
        if (e < best_objective) {
            best_objective = e;
            best = m;
        }
        if (patience_reference - e >= 1e-10) {
            patience_reference = e;
            stale_epochs = 0;
        } else {
            ++stale_epochs;
        }
        if (stale_epochs >= cfg.patience) break;

        for (size_t l = 0; l + 1 < layers; ++l) {
            for (size_t k = 0; k < m.weights[l].size(); ++k) {
                velocity.weights[l][k] =
                    cfg.momentum * velocity.weights[l][k] - cfg.learning_rate * g.weights[l][k];
                m.weights[l][k] += velocity.weights[l][k];
            }
            for (size_t k = 0; k < m.thresholds[l].size(); ++k) {
                velocity.thresholds[l][k] =
                    cfg.momentum * velocity.thresholds[l][k] - cfg.learning_rate * g.thresholds[l][k];
                m.thresholds[l][k] += velocity.thresholds[l][k];
            }
        }
        ++result.epochs_run;
    }

    // The last update step is otherwise unevaluated.
    double e_last = detail::mlfn_objective_core(m, x_norm, t_scaled, nullptr);
    if (is_finite(e_last) && e_last < best_objective) {
        best_objective = e_last;
        best = m;
    }

    result.model = std::move(best);
    result.final_objective = best_objective;
    return result;
}

}  // namespace yieldml
