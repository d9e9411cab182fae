// yieldml: train, compare, and run tabular yield-regression models from the
// command line. Exit codes: 0 success, 1 data/training error, 2 usage error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "yieldml/harness.hpp"
#include "yieldml/persistence.hpp"

namespace fs = std::filesystem;
using namespace yieldml;

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

const CLI::Validator kOpenUnitInterval{
    [](std::string& s) -> std::string {
        char* end = nullptr;
        double v = std::strtod(s.c_str(), &end);
        if (end == s.c_str() || *end != '\0' || !(v > 0.0 && v < 1.0))
            return "value must be a number in (0,1)";
        return {};
    },
    "FLOAT in (0,1)"};

struct CommonOpts {
    std::string data;
    uint64_t seed = 42;
    double train_fraction = 0.65;
    double tolerance = 0.30;
    std::string rule = "relative";
    std::string timing = "wall";
    int jobs = 1;
};

void add_split_flags(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--data", o.data, "input CSV (time_h,temperature_c,enzyme_mg,molar_ratio,yield_pct)")
        ->required();
    cmd->add_option("--seed", o.seed, "master seed for split and trial derivation");
    cmd->add_option("--train-fraction", o.train_fraction, "training share of the data")
        ->check(kOpenUnitInterval);
}

void add_tolerance_flags(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--tolerance", o.tolerance, "accuracy tolerance (fraction)")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--tolerance-rule", o.rule, "relative: vs each actual; range: vs target range")
        ->check(CLI::IsMember({"relative", "range"}));
}

TimingMode timing_mode(const std::string& s) {
    return s == "off" ? TimingMode::Off : TimingMode::Wall;
}

struct MlfnFlags {
    double lr = TrainConfig{}.learning_rate;
    double momentum = TrainConfig{}.momentum;
    int max_epochs = TrainConfig{}.max_epochs;
    int patience = TrainConfig{}.patience;
    double init_half_width = TrainConfig{}.init_half_width;

    TrainConfig to_config() const {
        TrainConfig cfg;
        cfg.learning_rate = lr;
        cfg.momentum = momentum;
        cfg.max_epochs = max_epochs;
        cfg.patience = patience;
        cfg.init_half_width = init_half_width;
        return cfg;
    }
};

void add_mlfn_flags(CLI::App* cmd, MlfnFlags& f) {
    cmd->add_option("--mlfn-lr", f.lr, "MLFN learning rate")->check(CLI::PositiveNumber);
    cmd->add_option("--mlfn-momentum", f.momentum, "MLFN momentum in [0,1)")
        ->check(CLI::Range(0.0, 0.999999));
    cmd->add_option("--mlfn-max-epochs", f.max_epochs, "MLFN epoch cap")->check(CLI::PositiveNumber);
    cmd->add_option("--mlfn-patience", f.patience, "epochs without improvement before stopping")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--mlfn-init", f.init_half_width, "half-width of uniform parameter init")
        ->check(CLI::PositiveNumber);
}

double target_range_of(const Dataset& ds) {
    auto [lo, hi] = std::minmax_element(ds.targets.begin(), ds.targets.end());
    return *hi - *lo;
}

void print_metrics_line(const std::string& label, const Evaluation& ev) {
    std::printf("%s: n=%zu  rms_error=%.4f  accuracy=%.2f%%  (tolerance %.0f%%, %s rule)\n",
                label.c_str(), ev.n, ev.rms_error, ev.accuracy * 100.0, ev.tolerance * 100.0,
                to_string(ev.rule).c_str());
}

// ---- gen-fixture ----------------------------------------------------------

struct GenFixtureOpts {
    int n = 150;
    uint64_t seed = 7;
    double noise = 2.0;
    std::string out;
};

void run_gen_fixture(const GenFixtureOpts& o) {
    FixtureSpec spec{o.n, o.seed, o.noise};
    Dataset ds = make_yield_fixture(spec);
    write_yield_csv(ds, o.out);
    std::printf("wrote %zu samples to %s\n", ds.size(), o.out.c_str());
}

// ---- search ---------------------------------------------------------------

struct SearchOpts {
    CommonOpts common;
    std::string out_dir = ".";
    int mlfn_trials = 5;
    int nodes_min = kMlfnNodesMin;
    int nodes_max = kMlfnNodesMax;
    MlfnFlags mlfn;
};

void run_search(const SearchOpts& o) {
    if (o.nodes_min > o.nodes_max) throw UsageError("--mlfn-nodes-min must be <= --mlfn-nodes-max");
    Dataset ds = load_yield_csv(o.common.data);
    HarnessOptions opts;
    opts.split = {o.common.train_fraction, o.common.seed};
    opts.tolerance = o.common.tolerance;
    opts.rule = tolerance_rule_from_string(o.common.rule);
    opts.timing = timing_mode(o.common.timing);
    opts.jobs = o.common.jobs;
    auto roster = default_roster(o.common.seed, o.mlfn_trials, o.mlfn.to_config(), o.nodes_min,
                                 o.nodes_max);

    SearchReport report = best_net_search(ds, roster, opts);

    fs::create_directories(o.out_dir);
    fs::path csv = fs::path(o.out_dir) / "report.csv";
    fs::path md = fs::path(o.out_dir) / "report.md";
    write_search_csv(report, csv.string());
    write_search_md(report, md.string());

    const ReportRow& best = report.rows.front();
    std::printf("%zu candidates on %zu samples (split seed %llu)\n", report.rows.size(), ds.size(),
                static_cast<unsigned long long>(report.split_seed));
    std::printf("best: %s  mean RMS %.4f  accuracy %.2f%%  time %s (%.1f ms)\n", best.id.c_str(),
                best.mean_rms, best.accuracy * 100.0, format_hms(best.measured_time_ms).c_str(),
                best.measured_time_ms);
    std::printf("report: %s, %s\n", csv.string().c_str(), md.string().c_str());
}

// ---- train ----------------------------------------------------------------

struct TrainOpts {
    CommonOpts common;
    std::string kind;
    std::string out;
    int nodes = 4;
    uint64_t mlfn_seed_set = 0;  // derived from --seed unless --mlfn-seed given
    bool mlfn_seed_given = false;
    MlfnFlags mlfn;
    std::string epoch_log;
    std::vector<double> sigma_grid;
    std::vector<double> svr_c = default_svr_c_grid();
    std::vector<double> svr_eps = default_svr_epsilon_grid();
    std::vector<double> svr_gamma = default_svr_gamma_grid();
    int svr_folds = 5;
    std::string scatter_dir;
};

void run_train(const TrainOpts& o) {
    Dataset ds = load_yield_csv(o.common.data);
    SplitSpec split_spec{o.common.train_fraction, o.common.seed};
    auto [train, test] = split(ds, split_spec);

    Provenance prov;
    prov.dataset_source = o.common.data;
    prov.split_seed = o.common.seed;

    Model model;
    if (o.kind == "grnn") {
        GrnnModel m = grnn_train(train, o.sigma_grid);
        prov.training_config = {{"kind", "grnn"}, {"sigma", double_to_hex(m.sigma)}};
        model = std::move(m);
    } else if (o.kind == "svr") {
        SvrConfig cfg;
        if (o.svr_c.size() == 1 && o.svr_eps.size() == 1 && o.svr_gamma.size() == 1) {
            cfg.C = o.svr_c[0];
            cfg.epsilon = o.svr_eps[0];
            cfg.gamma = o.svr_gamma[0];
        } else {
            cfg = svr_grid_search(train, o.svr_c, o.svr_eps, o.svr_gamma, o.svr_folds, o.common.seed);
        }
        SvrModel m = svr_train(train, cfg);
        if (!m.converged)
            std::fprintf(stderr, "warning: SMO hit the max_passes cap before reaching tolerance\n");
        prov.training_config = {{"kind", "svr"},
                                {"C", double_to_hex(cfg.C)},
                                {"epsilon", double_to_hex(cfg.epsilon)},
                                {"gamma", double_to_hex(cfg.gamma)},
                                {"folds", o.svr_folds}};
        model = std::move(m);
    } else {
        TrainConfig cfg = o.mlfn.to_config();
        cfg.seed = o.mlfn_seed_given ? o.mlfn_seed_set : derive_seed(o.common.seed, 2, 0);
        MlfnTopology topo{{static_cast<int>(train.dim()), o.nodes, 1}};
        std::vector<std::pair<int, double>> log;
        MlfnObserver observer;
        if (!o.epoch_log.empty())
            observer = [&log](int epoch, double e, const MlfnModel&) { log.emplace_back(epoch, e); };
        MlfnTrainResult result = mlfn_train(topo, train, cfg, observer);
        if (!o.epoch_log.empty()) {
            std::ofstream out(o.epoch_log);
            if (!out) throw IoError("cannot write '" + o.epoch_log + "'");
            out << "epoch,objective\n";
            for (auto& [epoch, e] : log) out << epoch << ',' << format_double(e) << '\n';
        }
        std::printf("trained MLFN (%d nodes): %d epochs, objective %.6g\n", o.nodes,
                    result.epochs_run, result.final_objective);
        prov.training_config = {{"kind", "mlfn"},
                                {"nodes", o.nodes},
                                {"seed", std::to_string(cfg.seed)},
                                {"learning_rate", double_to_hex(cfg.learning_rate)},
                                {"momentum", double_to_hex(cfg.momentum)},
                                {"max_epochs", cfg.max_epochs},
                                {"patience", cfg.patience}};
        model = std::move(result.model);
    }

    save_model(model, o.out, prov);

    ToleranceRule rule = tolerance_rule_from_string(o.common.rule);
    double range_ref = target_range_of(train);
    std::vector<double> train_pred(train.size()), test_pred(test.size());
    for (size_t i = 0; i < train.size(); ++i) train_pred[i] = predict(model, train.inputs[i]);
    for (size_t i = 0; i < test.size(); ++i) test_pred[i] = predict(model, test.inputs[i]);
    print_metrics_line("train", evaluate(train.targets, train_pred, o.common.tolerance, rule, range_ref));
    print_metrics_line("test", evaluate(test.targets, test_pred, o.common.tolerance, rule, range_ref));
    std::printf("model: %s\n", o.out.c_str());

    if (!o.scatter_dir.empty()) {
        fs::create_directories(o.scatter_dir);
        write_scatter_csv(model, train, (fs::path(o.scatter_dir) / "scatter_train.csv").string());
        write_scatter_csv(model, test, (fs::path(o.scatter_dir) / "scatter_test.csv").string());
    }
}

// ---- predict ---------------------------------------------------------------

struct PredictOpts {
    std::string model;
    std::string data;
    std::string out;
    double time_h = -1, temperature_c = 0, enzyme_mg = -1, molar_ratio = 0;
    bool has_time = false, has_temp = false, has_enzyme = false, has_ratio = false;
};

void run_predict(const PredictOpts& o) {
    LoadedModel loaded = load_model(o.model);
    const bool inline_mode = o.has_time || o.has_temp || o.has_enzyme || o.has_ratio;
    if (inline_mode && (!o.has_time || !o.has_temp || !o.has_enzyme || !o.has_ratio))
        throw UsageError("inline prediction needs all of --time, --temperature, --enzyme, --molar-ratio");
    if (inline_mode == !o.data.empty())
        throw UsageError("use either --data/--out or the four inline condition flags");

    if (inline_mode) {
        std::vector<double> x{o.time_h, o.temperature_c, o.enzyme_mg, o.molar_ratio};
        if (x.size() != model_input_dim(loaded.model))
            throw CsvError("model expects " + std::to_string(model_input_dim(loaded.model)) +
                           " features");
        std::printf("%.10g\n", predict(loaded.model, x));
        return;
    }

    if (o.out.empty()) throw UsageError("--data needs --out for the predictions CSV");
    Dataset ds = load_feature_csv(o.data);
    if (ds.dim() != model_input_dim(loaded.model))
        throw CsvError("model expects " + std::to_string(model_input_dim(loaded.model)) +
                       " features, data has " + std::to_string(ds.dim()));
    std::ofstream out(o.out);
    if (!out) throw IoError("cannot write '" + o.out + "'");
    for (const auto& name : ds.feature_names) out << name << ',';
    out << "predicted_yield_pct\n";
    for (size_t i = 0; i < ds.size(); ++i) {
        for (double v : ds.inputs[i]) out << format_double(v) << ',';
        out << format_double(predict(loaded.model, ds.inputs[i])) << '\n';
    }
    if (!out.good()) throw IoError("write failed for '" + o.out + "'");
    std::printf("wrote %zu predictions to %s\n", ds.size(), o.out.c_str());
}

// ---- eval -------------------------------------------------------------------

struct EvalOpts {
    std::string model;
    std::string data;
    std::string scatter = "scatter.csv";
    double tolerance = 0.30;
    std::string rule = "relative";
    double range_reference = 0.0;  // 0 = derive from the eval data
};

void run_eval(const EvalOpts& o) {
    LoadedModel loaded = load_model(o.model);
    Dataset ds = load_yield_csv(o.data);
    std::vector<double> predicted(ds.size());
    for (size_t i = 0; i < ds.size(); ++i) predicted[i] = predict(loaded.model, ds.inputs[i]);
    ToleranceRule rule = tolerance_rule_from_string(o.rule);
    double range_ref = o.range_reference > 0.0 ? o.range_reference : target_range_of(ds);
    Evaluation ev = evaluate(ds.targets, predicted, o.tolerance, rule, range_ref);
    print_metrics_line("eval", ev);
    if (!o.scatter.empty()) {
        write_scatter_csv(loaded.model, ds, o.scatter);
        std::printf("scatter: %s\n", o.scatter.c_str());
    }
}

// ---- sweep ------------------------------------------------------------------

struct SweepOpts {
    CommonOpts common;
    int nodes_min = kMlfnNodesMin;
    int nodes_max = kMlfnNodesMax;
    int trials = 5;
    std::string out = "sweep.csv";
    MlfnFlags mlfn;
};

void run_sweep(const SweepOpts& o) {
    if (o.nodes_min > o.nodes_max) throw UsageError("--nodes-min must be <= --nodes-max");
    Dataset ds = load_yield_csv(o.common.data);
    SplitSpec split_spec{o.common.train_fraction, o.common.seed};
    auto series = node_sweep(ds, o.nodes_min, o.nodes_max, o.trials, split_spec, o.common.seed,
                             o.mlfn.to_config(), o.common.jobs);
    write_sweep_csv(series, o.out, timing_mode(o.common.timing));
    const TrialSeries* best = &series.front();
    for (const auto& s : series)
        if (s.mean < best->mean) best = &s;
    std::printf("%zu node counts, %d trials each; best mean RMS %.4f at %d nodes\n", series.size(),
                o.trials, best->mean, best->mlfn_nodes);
    std::printf("sweep: %s\n", o.out.c_str());
}

// ---- trials -----------------------------------------------------------------

struct TrialsOpts {
    CommonOpts common;
    std::string kind = "grnn";
    int nodes = 4;
    int n_trials = 10;
    std::string out;
    MlfnFlags mlfn;
};

void run_trials(const TrialsOpts& o) {
    Dataset ds = load_yield_csv(o.common.data);
    CandidateSpec cand;
    if (o.kind == "grnn") {
        cand.kind = CandidateKind::Grnn;
    } else if (o.kind == "svr") {
        cand.kind = CandidateKind::Svr;
    } else {
        cand.kind = CandidateKind::Mlfn;
        cand.mlfn_nodes = o.nodes;
        cand.mlfn = o.mlfn.to_config();
    }
    for (int t = 0; t < o.n_trials; ++t)
        cand.trial_seeds.push_back(derive_seed(o.common.seed, 0, static_cast<uint64_t>(t)));
    SplitSpec split_spec{o.common.train_fraction, o.common.seed};
    TrialSeries series = repeated_trials(ds, cand, split_spec, o.n_trials, o.common.seed);
    std::printf("%s: %d trials, mean RMS %.6g, stddev %.6g\n", series.id.c_str(), o.n_trials,
                series.mean, series.stddev);
    if (!o.out.empty()) {
        write_trials_csv(series, o.out);
        std::printf("trials: %s\n", o.out.c_str());
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"yieldml: tabular yield-regression models (GRNN, MLFN, SVR) and experiment harness"};
    app.require_subcommand(1);

    GenFixtureOpts gen;
    auto* gen_cmd = app.add_subcommand("gen-fixture", "emit the synthetic yield benchmark CSV");
    gen_cmd->add_option("--n", gen.n, "sample count")->check(CLI::PositiveNumber);
    gen_cmd->add_option("--seed", gen.seed, "generator seed");
    gen_cmd->add_option("--noise", gen.noise, "Gaussian noise sigma (yield %)")
        ->check(CLI::NonNegativeNumber);
    gen_cmd->add_option("--out", gen.out, "output CSV path")->required();

    SearchOpts search;
    auto* search_cmd = app.add_subcommand("search", "best-net search over GRNN, SVR, and MLFN 2..25");
    add_split_flags(search_cmd, search.common);
    add_tolerance_flags(search_cmd, search.common);
    search_cmd->add_option("--out-dir", search.out_dir, "directory for report.csv / report.md");
    search_cmd->add_option("--mlfn-trials", search.mlfn_trials, "trials per MLFN node count")
        ->check(CLI::PositiveNumber);
    search_cmd->add_option("--mlfn-nodes-min", search.nodes_min, "smallest MLFN node count")
        ->check(CLI::Range(kMlfnNodesMin, kMlfnNodesMax));
    search_cmd->add_option("--mlfn-nodes-max", search.nodes_max, "largest MLFN node count")
        ->check(CLI::Range(kMlfnNodesMin, kMlfnNodesMax));
    search_cmd->add_option("--jobs", search.common.jobs, "parallel candidate trainings")
        ->check(CLI::PositiveNumber);
    search_cmd->add_option("--timing", search.common.timing, "wall: measured times in files; off: zeros")
        ->check(CLI::IsMember({"wall", "off"}));
    add_mlfn_flags(search_cmd, search.mlfn);

    TrainOpts train;
    auto* train_cmd = app.add_subcommand("train", "train one model on the train split and save it");
    add_split_flags(train_cmd, train.common);
    add_tolerance_flags(train_cmd, train.common);
    train_cmd->add_option("--kind", train.kind, "model family")
        ->required()
        ->check(CLI::IsMember({"grnn", "mlfn", "svr"}));
    train_cmd->add_option("--out", train.out, "model file path")->required();
    train_cmd->add_option("--nodes", train.nodes, "MLFN hidden nodes")
        ->check(CLI::Range(kMlfnNodesMin, kMlfnNodesMax));
    auto* seed_opt = train_cmd->add_option("--mlfn-seed", train.mlfn_seed_set,
                                           "MLFN init seed (default: derived from --seed)");
    train_cmd->add_option("--epoch-log", train.epoch_log, "per-epoch objective CSV (MLFN)");
    train_cmd->add_option("--sigma-grid", train.sigma_grid, "GRNN bandwidth grid")->delimiter(',');
    train_cmd->add_option("--svr-c-grid", train.svr_c, "SVR C grid")->delimiter(',');
    train_cmd->add_option("--svr-eps-grid", train.svr_eps, "SVR epsilon grid")->delimiter(',');
    train_cmd->add_option("--svr-gamma-grid", train.svr_gamma, "SVR gamma grid")->delimiter(',');
    train_cmd->add_option("--svr-folds", train.svr_folds, "cross-validation folds")
        ->check(CLI::Range(2, 1000000));
    train_cmd->add_option("--scatter-dir", train.scatter_dir,
                          "write scatter_train.csv / scatter_test.csv here");
    add_mlfn_flags(train_cmd, train.mlfn);

    PredictOpts predict_opts;
    auto* predict_cmd = app.add_subcommand("predict", "predict yields with a saved model");
    predict_cmd->add_option("--model", predict_opts.model, "model file")->required();
    predict_cmd->add_option("--data", predict_opts.data, "feature CSV (yield column optional)");
    predict_cmd->add_option("--out", predict_opts.out, "predictions CSV path");
    predict_cmd->add_option("--time", predict_opts.time_h, "time (h)")
        ->each([&](const std::string&) { predict_opts.has_time = true; });
    predict_cmd->add_option("--temperature", predict_opts.temperature_c, "temperature (C)")
        ->each([&](const std::string&) { predict_opts.has_temp = true; });
    predict_cmd->add_option("--enzyme", predict_opts.enzyme_mg, "enzyme amount (mg)")
        ->each([&](const std::string&) { predict_opts.has_enzyme = true; });
    predict_cmd->add_option("--molar-ratio", predict_opts.molar_ratio, "molar ratio")
        ->each([&](const std::string&) { predict_opts.has_ratio = true; });

    EvalOpts eval;
    auto* eval_cmd = app.add_subcommand("eval", "score a saved model on labeled data");
    eval_cmd->add_option("--model", eval.model, "model file")->required();
    eval_cmd->add_option("--data", eval.data, "labeled CSV")->required();
    eval_cmd->add_option("--scatter", eval.scatter, "scatter CSV path ('' to skip)");
    eval_cmd->add_option("--tolerance", eval.tolerance, "accuracy tolerance")->check(CLI::PositiveNumber);
    eval_cmd->add_option("--tolerance-rule", eval.rule, "relative or range")
        ->check(CLI::IsMember({"relative", "range"}));
    eval_cmd->add_option("--range-reference", eval.range_reference,
                         "target range for the range rule (default: from --data)");

    SweepOpts sweep;
    auto* sweep_cmd = app.add_subcommand("sweep", "MLFN node sweep, plot-ready CSV");
    add_split_flags(sweep_cmd, sweep.common);
    sweep_cmd->add_option("--nodes-min", sweep.nodes_min, "first node count")
        ->check(CLI::Range(kMlfnNodesMin, kMlfnNodesMax));
    sweep_cmd->add_option("--nodes-max", sweep.nodes_max, "last node count")
        ->check(CLI::Range(kMlfnNodesMin, kMlfnNodesMax));
    sweep_cmd->add_option("--trials", sweep.trials, "trials per node count")->check(CLI::PositiveNumber);
    sweep_cmd->add_option("--out", sweep.out, "sweep CSV path");
    sweep_cmd->add_option("--jobs", sweep.common.jobs, "parallel node trainings")
        ->check(CLI::PositiveNumber);
    sweep_cmd->add_option("--timing", sweep.common.timing, "wall or off")
        ->check(CLI::IsMember({"wall", "off"}));
    add_mlfn_flags(sweep_cmd, sweep.mlfn);

    TrialsOpts trials;
    auto* trials_cmd = app.add_subcommand("trials", "repeated train/evaluate runs for one candidate");
    add_split_flags(trials_cmd, trials.common);
    trials_cmd->add_option("--kind", trials.kind, "model family")
        ->check(CLI::IsMember({"grnn", "mlfn", "svr"}));
    trials_cmd->add_option("--nodes", trials.nodes, "MLFN hidden nodes")
        ->check(CLI::Range(kMlfnNodesMin, kMlfnNodesMax));
    trials_cmd->add_option("-n,--trials", trials.n_trials, "trial count")->check(CLI::PositiveNumber);
    trials_cmd->add_option("--out", trials.out, "per-trial CSV path");
    add_mlfn_flags(trials_cmd, trials.mlfn);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    train.mlfn_seed_given = seed_opt->count() > 0;

    try {
        if (app.got_subcommand(gen_cmd)) run_gen_fixture(gen);
        else if (app.got_subcommand(search_cmd)) run_search(search);
        else if (app.got_subcommand(train_cmd)) run_train(train);
        else if (app.got_subcommand(predict_cmd)) run_predict(predict_opts);
        else if (app.got_subcommand(eval_cmd)) run_eval(eval);
        else if (app.got_subcommand(sweep_cmd)) run_sweep(sweep);
        else if (app.got_subcommand(trials_cmd)) run_trials(trials);
    } catch (const UsageError& e) {
        std::fprintf(stderr, "usage error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
