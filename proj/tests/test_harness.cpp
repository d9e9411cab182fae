#include <catch2/catch.hpp>

#include <cmath>

#include "test_support.hpp"
#include "yieldml/harness.hpp"

using namespace yieldml;
using testsupport::make_dataset;
using testsupport::read_text;
using testsupport::TempDir;

namespace {

CandidateSpec grnn_candidate(uint64_t seed = 1) {
    CandidateSpec c;
    c.kind = CandidateKind::Grnn;
    c.trial_seeds = {seed};
    return c;
}

CandidateSpec mlfn_candidate(int nodes, std::vector<uint64_t> seeds, int max_epochs = 300) {
    CandidateSpec c;
    c.kind = CandidateKind::Mlfn;
    c.mlfn_nodes = nodes;
    c.mlfn.max_epochs = max_epochs;
    c.trial_seeds = std::move(seeds);
    return c;
}

HarnessOptions quiet_options(uint64_t seed = 42) {
    HarnessOptions opts;
    opts.split = {0.65, seed};
    opts.timing = TimingMode::Off;
    return opts;
}

}  // namespace

TEST_CASE("single candidate produces a one-row report") {
    Dataset ds = make_yield_fixture({40, 2, 2.0});
    SearchReport report = best_net_search(ds, {grnn_candidate()}, quiet_options());
    REQUIRE(report.rows.size() == 1);
    REQUIRE(report.rows[0].id == "GRNN");
    REQUIRE(report.rows[0].trials == 1);
    REQUIRE(std::isfinite(report.rows[0].mean_rms));
}

TEST_CASE("report row reproduces a manual train/score of the same split") {
    Dataset ds = make_yield_fixture({60, 9, 2.0});
    HarnessOptions opts = quiet_options(7);
    SearchReport report = best_net_search(ds, {grnn_candidate()}, opts);

    auto [train, test] = split(ds, opts.split);
    GrnnModel m = grnn_train(train);
    std::vector<double> predicted(test.size());
    for (size_t i = 0; i < test.size(); ++i) predicted[i] = grnn_predict(m, test.inputs[i]);
    REQUIRE(report.rows[0].mean_rms == rms_error(test.targets, predicted));
}

TEST_CASE("duplicated candidates tie and sort by id") {
    Dataset ds = make_yield_fixture({40, 3, 2.0});
    std::vector<CandidateSpec> cands{grnn_candidate(1), grnn_candidate(1)};
    SearchReport report = best_net_search(ds, cands, quiet_options());
    REQUIRE(report.rows.size() == 2);
    REQUIRE(report.rows[0].mean_rms == report.rows[1].mean_rms);
    REQUIRE(report.rows[0].id <= report.rows[1].id);
}

TEST_CASE("mini roster report is sorted and internally consistent") {
    Dataset ds = make_yield_fixture({60, 4, 2.0});
    std::vector<CandidateSpec> cands{grnn_candidate(1),
                                     mlfn_candidate(2, {11, 12}),
                                     mlfn_candidate(3, {21, 22}),
                                     mlfn_candidate(4, {31, 32})};
    SearchReport report = best_net_search(ds, cands, quiet_options(5));
    REQUIRE(report.rows.size() == 4);
    for (size_t r = 1; r < report.rows.size(); ++r)
        REQUIRE(report.rows[r - 1].mean_rms <= report.rows[r].mean_rms);
    for (const auto& row : report.rows) {
        REQUIRE(row.trials == static_cast<int>(row.trial_rms.size()));
        double mean = 0.0;
        for (double v : row.trial_rms) mean += v;
        mean /= row.trial_rms.size();
        REQUIRE(row.mean_rms == Approx(mean).margin(1e-12));
        REQUIRE(row.accuracy >= 0.0);
        REQUIRE(row.accuracy <= 1.0);
    }
}

TEST_CASE("parallel search matches the single-threaded result") {
    Dataset ds = make_yield_fixture({50, 8, 2.0});
    std::vector<CandidateSpec> cands{grnn_candidate(1), mlfn_candidate(2, {5, 6}),
                                     mlfn_candidate(3, {7, 8})};
    HarnessOptions one = quiet_options(3);
    HarnessOptions four = one;
    four.jobs = 4;
    SearchReport a = best_net_search(ds, cands, one);
    SearchReport b = best_net_search(ds, cands, four);
    REQUIRE(a.rows.size() == b.rows.size());
    for (size_t r = 0; r < a.rows.size(); ++r) {
        REQUIRE(a.rows[r].id == b.rows[r].id);
        REQUIRE(a.rows[r].mean_rms == b.rows[r].mean_rms);
        REQUIRE(a.rows[r].trial_rms == b.rows[r].trial_rms);
        REQUIRE(a.rows[r].accuracy == b.rows[r].accuracy);
    }
}

TEST_CASE("a diverging trial is recorded in-row, not fatal") {
    Dataset ds = make_yield_fixture({60, 4, 2.0});
    CandidateSpec bad = mlfn_candidate(4, {1, 2}, 50);
    bad.mlfn.init_half_width = 1e308;  // mixed-sign overflow potentials go NaN immediately
    bad.mlfn.momentum = 0.0;
    std::vector<CandidateSpec> cands{grnn_candidate(1), bad};
    SearchReport report = best_net_search(ds, cands, quiet_options(2));
    REQUIRE(report.rows.size() == 2);
    const ReportRow* bad_row = nullptr;
    for (const auto& row : report.rows)
        if (row.id != "GRNN") bad_row = &row;
    REQUIRE(bad_row != nullptr);
    REQUIRE_FALSE(bad_row->notes.empty());
    REQUIRE(bad_row->trials < 2);
    if (bad_row->trials == 0) {
        REQUIRE(std::isinf(bad_row->mean_rms));
        REQUIRE(report.rows.back().id == bad_row->id);  // unusable rows sort last
    }
}

TEST_CASE("default roster covers GRNN, SVR, and every node count") {
    auto roster = default_roster(42, 3);
    REQUIRE(roster.size() == 26);
    REQUIRE(roster[0].kind == CandidateKind::Grnn);
    REQUIRE(roster[1].kind == CandidateKind::Svr);
    for (size_t i = 2; i < roster.size(); ++i) {
        REQUIRE(roster[i].kind == CandidateKind::Mlfn);
        REQUIRE(roster[i].mlfn_nodes == static_cast<int>(i));
        REQUIRE(roster[i].trial_seeds.size() == 3);
    }
    // seeds must be distinct across candidates and trials
    std::vector<uint64_t> all;
    for (const auto& c : roster) all.insert(all.end(), c.trial_seeds.begin(), c.trial_seeds.end());
    std::sort(all.begin(), all.end());
    REQUIRE(std::adjacent_find(all.begin(), all.end()) == all.end());
}

TEST_CASE("repeated GRNN trials have exactly zero spread") {
    Dataset ds = make_yield_fixture({50, 6, 2.0});
    TrialSeries series = repeated_trials(ds, grnn_candidate(), {0.65, 11}, 5, 11);
    REQUIRE(series.rms.size() == 5);
    REQUIRE(series.stddev == 0.0);
    for (double v : series.rms) REQUIRE(v == series.rms[0]);
}

TEST_CASE("single trial has zero stddev by definition") {
    Dataset ds = make_yield_fixture({30, 2, 2.0});
    TrialSeries series = repeated_trials(ds, grnn_candidate(), {0.65, 1}, 1, 1);
    REQUIRE(series.rms.size() == 1);
    REQUIRE(series.stddev == 0.0);
}

TEST_CASE("MLFN trials fluctuate within a controllable range") {
    Dataset ds = make_yield_fixture({80, 13, 2.0});
    CandidateSpec cand = mlfn_candidate(4, {}, 800);
    TrialSeries series = repeated_trials(ds, cand, {0.65, 3}, 5, 99);
    REQUIRE(series.rms.size() == 5);
    REQUIRE(series.stddev > 0.0);
    REQUIRE(series.stddev / series.mean < 0.5);
}

TEST_CASE("node sweep shapes") {
    Dataset ds = make_yield_fixture({40, 5, 2.0});
    TrainConfig quick;
    quick.max_epochs = 60;
    SECTION("degenerate single-node range") {
        auto series = node_sweep(ds, 2, 2, 1, {0.65, 4}, 4, quick);
        REQUIRE(series.size() == 1);
        REQUIRE(series[0].mlfn_nodes == 2);
    }
    SECTION("range with multiple trials") {
        auto series = node_sweep(ds, 2, 5, 3, {0.65, 4}, 4, quick, 2);
        REQUIRE(series.size() == 4);
        for (size_t k = 0; k < 4; ++k) {
            REQUIRE(series[k].mlfn_nodes == static_cast<int>(k) + 2);
            REQUIRE(series[k].rms.size() == 3);
        }
    }
    SECTION("bad ranges are rejected") {
        REQUIRE_THROWS_AS(node_sweep(ds, 1, 5, 1, {0.65, 4}, 4, quick), ConfigError);
        REQUIRE_THROWS_AS(node_sweep(ds, 5, 2, 1, {0.65, 4}, 4, quick), ConfigError);
    }
}

TEST_CASE("scatter file carries actual, predicted, and residual columns") {
    TempDir dir("scatter");
    GrnnModel constant;
    constant.normalizer = Normalizer::identity(1);
    constant.patterns = {{0.0}};
    constant.targets = {42.0};
    constant.sigma = 1.0;
    Model m = constant;

    SECTION("a perfect model leaves zero residuals") {
        Dataset ds = make_dataset({{0.5}, {1.5}, {-3.0}}, {42.0, 42.0, 42.0});
        write_scatter_csv(m, ds, dir.file("s.csv"));
        REQUIRE(read_text(dir.file("s.csv")) ==
                "actual,predicted,residual\n42,42,0\n42,42,0\n42,42,0\n");
    }
    SECTION("three samples give three data rows") {
        Dataset ds = make_dataset({{0.5}, {1.5}, {-3.0}}, {40.0, 44.0, 42.0});
        write_scatter_csv(m, ds, dir.file("s.csv"));
        std::string text = read_text(dir.file("s.csv"));
        REQUIRE(std::count(text.begin(), text.end(), '\n') == 4);
        REQUIRE(text.find("40,42,-2\n") != std::string::npos);
    }
}

TEST_CASE("scatter residual column agrees with rms_error to 1e-12") {
    Dataset ds = make_yield_fixture({50, 17, 2.0});
    auto [train, test] = split(ds, {0.65, 17});
    Model m = grnn_train(train);
    TempDir dir("scatter2");
    write_scatter_csv(m, test, dir.file("sc.csv"));

    // read back and fold the residual column into an RMS
    std::ifstream in(dir.file("sc.csv"));
    std::string line;
    std::getline(in, line);
    std::vector<double> actual, predicted, residual;
    while (std::getline(in, line)) {
        auto c1 = line.find(','), c2 = line.rfind(',');
        actual.push_back(std::stod(line.substr(0, c1)));
        predicted.push_back(std::stod(line.substr(c1 + 1, c2 - c1 - 1)));
        residual.push_back(std::stod(line.substr(c2 + 1)));
    }
    REQUIRE(actual.size() == test.size());
    double se = 0.0;
    for (double r : residual) se += r * r;
    double rms_from_file = std::sqrt(se / static_cast<double>(residual.size()));
    std::vector<double> direct(test.size());
    for (size_t i = 0; i < test.size(); ++i) direct[i] = predict(m, test.inputs[i]);
    REQUIRE(rms_from_file == Approx(rms_error(test.targets, direct)).margin(1e-12));
}

TEST_CASE("report files render every row") {
    Dataset ds = make_yield_fixture({40, 19, 2.0});
    std::vector<CandidateSpec> cands{grnn_candidate(1), mlfn_candidate(2, {9}, 100)};
    SearchReport report = best_net_search(ds, cands, quiet_options(19));
    TempDir dir("report");
    write_search_csv(report, dir.file("report.csv"));
    write_search_md(report, dir.file("report.md"));
    std::string csv = read_text(dir.file("report.csv"));
    REQUIRE(csv.find("# split_seed=19") != std::string::npos);
    REQUIRE(csv.find("# tolerance_rule=relative") != std::string::npos);
    REQUIRE(csv.find("GRNN") != std::string::npos);
    REQUIRE(csv.find("MLFN (2 Nodes)") != std::string::npos);
    std::string md = read_text(dir.file("report.md"));
    REQUIRE(md.find("| Model Type | Mean RMS Error | Training Time | Prediction Accuracy |") !=
            std::string::npos);
    REQUIRE(md.find("| GRNN |") != std::string::npos);
}

TEST_CASE("format_hms renders clock-style durations") {
    REQUIRE(format_hms(0.0) == "0:00:00");
    REQUIRE(format_hms(1400.0) == "0:00:01");
    REQUIRE(format_hms(61000.0) == "0:01:01");
    REQUIRE(format_hms(3661000.0) == "1:01:01");
}

TEST_CASE("candidate validation") {
    CandidateSpec c;
    c.kind = CandidateKind::Mlfn;
    c.mlfn_nodes = 26;
    REQUIRE_THROWS_AS(c.validate(), ConfigError);
    c.mlfn_nodes = 1;
    REQUIRE_THROWS_AS(c.validate(), ConfigError);
    c.kind = CandidateKind::Grnn;
    c.mlfn_nodes = 4;
    REQUIRE_THROWS_AS(c.validate(), ConfigError);
}
