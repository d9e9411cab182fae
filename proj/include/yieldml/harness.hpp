#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <string>
#include <thread>
#include <vector>

#include "yieldml/fixture.hpp"
#include "yieldml/metrics.hpp"
#include "yieldml/model.hpp"

namespace yieldml {

enum class CandidateKind { Grnn, Svr, Mlfn };

inline constexpr int kMlfnNodesMin = 2;
inline constexpr int kMlfnNodesMax = 25;

struct GrnnOptions {
    std::vector<double> sigma_grid;  // empty = default grid
};

struct SvrOptions {
    bool grid_search = true;  // false: train with `base` as-is
    std::vector<double> c_grid, epsilon_grid, gamma_grid;  // empty = defaults
    int folds = 5;
    SvrConfig base;
};

struct CandidateSpec {
    CandidateKind kind = CandidateKind::Grnn;
    int mlfn_nodes = 0;  // meaningful iff kind == Mlfn
    GrnnOptions grnn;
    SvrOptions svr;
    TrainConfig mlfn;                   // per-trial seed is substituted by the harness
    std::vector<uint64_t> trial_seeds;  // one training per entry

    std::string id() const {
        switch (kind) {
            case CandidateKind::Grnn: return "GRNN";
            case CandidateKind::Svr: return "SVR";
            default: return "MLFN (" + std::to_string(mlfn_nodes) + " Nodes)";
        }
    }

    void validate() const {
        if (kind == CandidateKind::Mlfn) {
            if (mlfn_nodes < kMlfnNodesMin || mlfn_nodes > kMlfnNodesMax)
                throw ConfigError("candidate: MLFN nodes must be in [" + std::to_string(kMlfnNodesMin) +
                                  "," + std::to_string(kMlfnNodesMax) + "], got " +
                                  std::to_string(mlfn_nodes));
        } else if (mlfn_nodes != 0) {
            throw ConfigError("candidate: mlfn_nodes only applies to MLFN candidates");
        }
    }
};

// Wall: measured wall-clock lands in report files. Off: time columns are
// written as zero so files are byte-reproducible; stdout still shows
// measurements either way.
enum class TimingMode { Wall, Off };

struct HarnessOptions {
    SplitSpec split;
    double tolerance = 0.30;
    ToleranceRule rule = ToleranceRule::Relative;
    TimingMode timing = TimingMode::Wall;
    int jobs = 1;
};

struct ReportRow {
    std::string id;
    double mean_rms = std::numeric_limits<double>::infinity();
    double accuracy = 0.0;  // mean over successful trials
    double measured_time_ms = 0.0;
    double reported_time_ms = 0.0;
    int trials = 0;  // successful trials
    std::vector<double> trial_rms;
    std::string notes;
};

struct SearchReport {
    std::vector<ReportRow> rows;  // ascending mean RMS; ties by reported time, then id
    uint64_t split_seed = 0;
    double train_fraction = 0.65;
    double tolerance = 0.30;
    ToleranceRule rule = ToleranceRule::Relative;
    TimingMode timing = TimingMode::Wall;
};

struct TrialSeries {
    std::string id;
    int mlfn_nodes = 0;  // 0 for GRNN/SVR rows
    std::vector<double> rms;
    double mean = 0.0;
    double stddev = 0.0;
    double mean_time_ms = 0.0;  // measured
};

namespace detail {

inline double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

// Population convention; exactly zero for a constant series.
inline double stddev_of(const std::vector<double>& v) {
    auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    if (*lo == *hi) return 0.0;
    double m = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size()));
}

// fn(i) for i in [0, n), spread over up to `jobs` workers. Each index owns its
// output slot, so results are independent of scheduling.
template <class Fn>
void run_indexed(int jobs, size_t n, Fn&& fn) {
    if (jobs <= 1 || n <= 1) {
        for (size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<size_t> next{0};
    auto worker = [&] {
        for (size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
    };
    std::vector<std::thread> pool;
    size_t workers = std::min<size_t>(static_cast<size_t>(jobs), n);
    pool.reserve(workers);
    for (size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
}

}  // namespace detail

inline Model train_candidate(const CandidateSpec& cand, const Dataset& train, uint64_t seed) {
    cand.validate();
    switch (cand.kind) {
        case CandidateKind::Grnn:
            return grnn_train(train, cand.grnn.sigma_grid);
        case CandidateKind::Svr: {
            if (!cand.svr.grid_search) return svr_train(train, cand.svr.base);
            auto cg = cand.svr.c_grid.empty() ? default_svr_c_grid() : cand.svr.c_grid;
            auto eg = cand.svr.epsilon_grid.empty() ? default_svr_epsilon_grid() : cand.svr.epsilon_grid;
            auto gg = cand.svr.gamma_grid.empty() ? default_svr_gamma_grid() : cand.svr.gamma_grid;
            SvrConfig cfg = svr_grid_search(train, cg, eg, gg, cand.svr.folds, seed, cand.svr.base);
            return svr_train(train, cfg);
        }
        default: {
            TrainConfig cfg = cand.mlfn;
            cfg.seed = seed;
            MlfnTopology topo{{static_cast<int>(train.dim()), cand.mlfn_nodes, 1}};
            return mlfn_train(topo, train, cfg).model;
        }
    }
}

// GRNN, SVR, then MLFN for every node count; seeds derived from
// (base_seed, candidate index, trial index).
inline std::vector<CandidateSpec> default_roster(uint64_t base_seed, int mlfn_trials = 5,
                                                 const TrainConfig& mlfn_cfg = {},
                                                 int nodes_min = kMlfnNodesMin,
                                                 int nodes_max = kMlfnNodesMax) {
    if (mlfn_trials < 1) throw ConfigError("roster: mlfn_trials must be >= 1");
    if (nodes_min < kMlfnNodesMin || nodes_max > kMlfnNodesMax || nodes_min > nodes_max)
        throw ConfigError("roster: node range must sit inside [" + std::to_string(kMlfnNodesMin) + "," +
                          std::to_string(kMlfnNodesMax) + "]");
    std::vector<CandidateSpec> roster;
    CandidateSpec grnn;
    grnn.kind = CandidateKind::Grnn;
    grnn.trial_seeds = {derive_seed(base_seed, 0, 0)};
    roster.push_back(grnn);
    CandidateSpec svr;
    svr.kind = CandidateKind::Svr;
    svr.trial_seeds = {derive_seed(base_seed, 1, 0)};
    roster.push_back(svr);
    for (int nodes = nodes_min; nodes <= nodes_max; ++nodes) {
        CandidateSpec c;
        c.kind = CandidateKind::Mlfn;
        c.mlfn_nodes = nodes;
        c.mlfn = mlfn_cfg;
        for (int t = 0; t < mlfn_trials; ++t)
            c.trial_seeds.push_back(derive_seed(base_seed, roster.size(), static_cast<uint64_t>(t)));
        roster.push_back(c);
    }
    return roster;
}

// One shared split; every candidate trains on the same train partition and is
// scored on the same test partition, once per trial seed. A diverged trial is
// recorded in the row's notes and excluded from the row statistics.
inline SearchReport best_net_search(const Dataset& ds, const std::vector<CandidateSpec>& candidates,
                                    const HarnessOptions& opts) {
    if (candidates.empty()) throw ConfigError("search: no candidates");
    for (const auto& c : candidates) c.validate();
    auto [train, test] = split(ds, opts.split);
    if (train.size() == 0 || test.size() == 0)
        throw ConfigError("search: split produced an empty partition");
    double target_range = 0.0;
    if (opts.rule == ToleranceRule::Range) {
        auto [lo, hi] = std::minmax_element(train.targets.begin(), train.targets.end());
        target_range = *hi - *lo;
    }

    std::vector<ReportRow> rows(candidates.size());
    std::vector<std::exception_ptr> failures(candidates.size());
    detail::run_indexed(opts.jobs, candidates.size(), [&](size_t ci) {
        try {
            const CandidateSpec& cand = candidates[ci];
            ReportRow row;
            row.id = cand.id();
            std::vector<uint64_t> seeds = cand.trial_seeds;
            if (seeds.empty()) seeds.push_back(derive_seed(opts.split.seed, ci, 0));
            double time_sum = 0.0, acc_sum = 0.0;
            for (size_t t = 0; t < seeds.size(); ++t) {
                try {
                    auto t0 = std::chrono::steady_clock::now();
                    Model m = train_candidate(cand, train, seeds[t]);
                    auto t1 = std::chrono::steady_clock::now();
                    time_sum += std::chrono::duration<double, std::milli>(t1 - t0).count();
                    std::vector<double> predicted(test.size());
                    for (size_t i = 0; i < test.size(); ++i) predicted[i] = predict(m, test.inputs[i]);
                    Evaluation ev = evaluate(test.targets, predicted, opts.tolerance, opts.rule, target_range);
                    row.trial_rms.push_back(ev.rms_error);
                    acc_sum += ev.accuracy;
                } catch (const TrainingError& e) {
                    if (!row.notes.empty()) row.notes += "; ";
                    row.notes += "trial " + std::to_string(t + 1) + " failed: " + e.what();
                }
            }
            row.trials = static_cast<int>(row.trial_rms.size());
            if (row.trials > 0) {
                row.mean_rms = detail::mean_of(row.trial_rms);
                row.accuracy = acc_sum / row.trials;
                row.measured_time_ms = time_sum / row.trials;
            }
            row.reported_time_ms = opts.timing == TimingMode::Wall ? row.measured_time_ms : 0.0;
            rows[ci] = std::move(row);
        } catch (...) {
            failures[ci] = std::current_exception();
        }
    });
    for (auto& f : failures)
        if (f) std::rethrow_exception(f);

    std::sort(rows.begin(), rows.end(), [](const ReportRow& a, const ReportRow& b) {
        if (a.mean_rms != b.mean_rms) return a.mean_rms < b.mean_rms;
        if (a.reported_time_ms != b.reported_time_ms) return a.reported_time_ms < b.reported_time_ms;
        return a.id < b.id;
    });

    SearchReport report;
    report.rows = std::move(rows);
    report.split_seed = opts.split.seed;
    report.train_fraction = opts.split.train_fraction;
    report.tolerance = opts.tolerance;
    report.rule = opts.rule;
    report.timing = opts.timing;
    return report;
}

// n_trials train/evaluate runs on one shared split, differing only in the
// trial seed. Deterministic trainers (GRNN, fixed-config SVR) come out with
// stddev exactly zero.
inline TrialSeries repeated_trials(const Dataset& ds, const CandidateSpec& cand, const SplitSpec& split_spec,
                                   int n_trials, uint64_t base_seed = 0) {
    if (n_trials < 1) throw ConfigError("trials: n_trials must be >= 1");
    cand.validate();
    auto [train, test] = split(ds, split_spec);
    TrialSeries series;
    series.id = cand.id();
    series.mlfn_nodes = cand.kind == CandidateKind::Mlfn ? cand.mlfn_nodes : 0;
    double time_sum = 0.0;
    for (int t = 0; t < n_trials; ++t) {
        uint64_t seed = t < static_cast<int>(cand.trial_seeds.size())
                            ? cand.trial_seeds[t]
                            : derive_seed(base_seed, 0, static_cast<uint64_t>(t));
        auto t0 = std::chrono::steady_clock::now();
        Model m = train_candidate(cand, train, seed);
        auto t1 = std::chrono::steady_clock::now();
        time_sum += std::chrono::duration<double, std::milli>(t1 - t0).count();
        std::vector<double> predicted(test.size());
        for (size_t i = 0; i < test.size(); ++i) predicted[i] = predict(m, test.inputs[i]);
        series.rms.push_back(rms_error(test.targets, predicted));
    }
    series.mean = detail::mean_of(series.rms);
    series.stddev = detail::stddev_of(series.rms);
    series.mean_time_ms = time_sum / n_trials;
    return series;
}

// One TrialSeries per node count over [nodes_lo, nodes_hi]; seeds derive from
// (base_seed, node count, trial index) so a sub-range reproduces the full
// range's entries.
inline std::vector<TrialSeries> node_sweep(const Dataset& ds, int nodes_lo, int nodes_hi,
                                           int trials_per_node, const SplitSpec& split_spec,
                                           uint64_t base_seed = 0, const TrainConfig& mlfn_cfg = {},
                                           int jobs = 1) {
    if (nodes_lo < kMlfnNodesMin || nodes_hi > kMlfnNodesMax || nodes_lo > nodes_hi)
        throw ConfigError("sweep: node range must sit inside [" + std::to_string(kMlfnNodesMin) + "," +
                          std::to_string(kMlfnNodesMax) + "]");
    if (trials_per_node < 1) throw ConfigError("sweep: trials_per_node must be >= 1");
    const size_t count = static_cast<size_t>(nodes_hi - nodes_lo + 1);
    std::vector<TrialSeries> series(count);
    std::vector<std::exception_ptr> failures(count);
    detail::run_indexed(jobs, count, [&](size_t k) {
        try {
            CandidateSpec cand;
            cand.kind = CandidateKind::Mlfn;
            cand.mlfn_nodes = nodes_lo + static_cast<int>(k);
            cand.mlfn = mlfn_cfg;
            for (int t = 0; t < trials_per_node; ++t)
                cand.trial_seeds.push_back(
                    derive_seed(base_seed, static_cast<uint64_t>(cand.mlfn_nodes), static_cast<uint64_t>(t)));
            series[k] = repeated_trials(ds, cand, split_spec, trials_per_node, base_seed);
        } catch (...) {
            failures[k] = std::current_exception();
        }
    });
    for (auto& f : failures)
        if (f) std::rethrow_exception(f);
    return series;
}

inline std::string format_hms(double ms) {
    auto total = static_cast<long long>(std::llround(ms / 1000.0));
    long long h = total / 3600, m = (total % 3600) / 60, s = total % 60;
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%lld:%02lld:%02lld", h, m, s);
    return buf;
}

// The data behind predicted-vs-actual and residual plots: one row per sample,
// residual = actual - predicted.
inline void write_scatter_csv(const Model& m, const Dataset& data, const std::string& path) {
    if (data.size() == 0) throw ConfigError("scatter: empty dataset");
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path + "'");
    out << "actual,predicted,residual\n";
    for (size_t i = 0; i < data.size(); ++i) {
        double p = predict(m, data.inputs[i]);
        out << format_double(data.targets[i]) << ',' << format_double(p) << ','
            << format_double(data.targets[i] - p) << '\n';
    }
    if (!out.good()) throw IoError("write failed for '" + path + "'");
}

namespace detail {
inline std::string sanitize_csv(std::string s) {
    for (char& c : s)
        if (c == ',' || c == '\n') c = ';';
    return s;
}
}  // namespace detail

inline void write_search_csv(const SearchReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path + "'");
    out << "# yieldml search report\n";
    out << "# split_seed=" << report.split_seed << "\n";
    out << "# train_fraction=" << format_double(report.train_fraction) << "\n";
    out << "# tolerance=" << format_double(report.tolerance) << "\n";
    out << "# tolerance_rule=" << to_string(report.rule) << "\n";
    out << "# timing=" << (report.timing == TimingMode::Wall ? "wall" : "off") << "\n";
    out << "rank,model,mean_rms_error,mean_training_time_ms,training_time_hms,prediction_accuracy,"
           "trials,trial_rms_errors,notes\n";
    for (size_t r = 0; r < report.rows.size(); ++r) {
        const auto& row = report.rows[r];
        std::string trial_list;
        for (size_t t = 0; t < row.trial_rms.size(); ++t)
            trial_list += (t ? ";" : "") + format_double(row.trial_rms[t]);
        out << (r + 1) << ',' << detail::sanitize_csv(row.id) << ',' << format_double(row.mean_rms) << ','
            << format_double(row.reported_time_ms) << ',' << format_hms(row.reported_time_ms) << ','
            << format_double(row.accuracy) << ',' << row.trials << ',' << trial_list << ','
            << detail::sanitize_csv(row.notes) << '\n';
    }
    if (!out.good()) throw IoError("write failed for '" + path + "'");
}

inline void write_search_md(const SearchReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path + "'");
    char buf[64];
    out << "# Best net search\n\n";
    std::snprintf(buf, sizeof(buf), "%g", report.train_fraction);
    out << "- split seed: " << report.split_seed << ", train fraction: " << buf << "\n";
    std::snprintf(buf, sizeof(buf), "%.0f%%", report.tolerance * 100.0);
    out << "- tolerance: " << buf << " (" << to_string(report.rule) << " rule)\n\n";
    out << "| Model Type | Mean RMS Error | Training Time | Prediction Accuracy |\n";
    out << "| --- | --- | --- | --- |\n";
    for (const auto& row : report.rows) {
        std::snprintf(buf, sizeof(buf), "%.2f", row.mean_rms);
        out << "| " << row.id << " | " << buf << " | " << format_hms(row.reported_time_ms) << " | ";
        std::snprintf(buf, sizeof(buf), "%.2f%%", row.accuracy * 100.0);
        out << buf << " |\n";
    }
    if (!out.good()) throw IoError("write failed for '" + path + "'");
}

inline void write_sweep_csv(const std::vector<TrialSeries>& series, const std::string& path,
                            TimingMode timing) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path + "'");
    out << "nodes,mean_rms_error,stddev_rms_error,mean_training_time_ms,trials\n";
    for (const auto& s : series) {
        double t = timing == TimingMode::Wall ? s.mean_time_ms : 0.0;
        out << s.mlfn_nodes << ',' << format_double(s.mean) << ',' << format_double(s.stddev) << ','
            << format_double(t) << ',' << s.rms.size() << '\n';
    }
    if (!out.good()) throw IoError("write failed for '" + path + "'");
}

inline void write_trials_csv(const TrialSeries& series, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path + "'");
    out << "# model=" << series.id << "\n";
    out << "# mean=" << format_double(series.mean) << "\n";
    out << "# stddev=" << format_double(series.stddev) << "\n";
    out << "trial,rms_error\n";
    for (size_t t = 0; t < series.rms.size(); ++t)
        out << (t + 1) << ',' << format_double(series.rms[t]) << '\n';
    if (!out.good()) throw IoError("write failed for '" + path + "'");
}

}  // namespace yieldml
