#include <catch2/catch.hpp>

#include "test_support.hpp"
#include "yieldml/dataset.hpp"
#include "yieldml/fixture.hpp"

using namespace yieldml;
using testsupport::make_dataset;
using testsupport::TempDir;
using testsupport::write_text;

namespace {
const std::string kGoodCsv =
    "time_h,temperature_c,enzyme_mg,molar_ratio,yield_pct\n"
    "12,45,100,2,55.5\n"
    "24,50,150,3,61.2\n"
    "6,40,80,1.5,38\n"
    "48,55,200,4,72.9\n"
    "36,47,120,2.5,66.1\n";
}

TEST_CASE("load_yield_csv keeps rows in file order") {
    TempDir dir("csv");
    write_text(dir.file("good.csv"), kGoodCsv);
    Dataset ds = load_yield_csv(dir.file("good.csv"));
    REQUIRE(ds.size() == 5);
    REQUIRE(ds.dim() == 4);
    REQUIRE(ds.inputs[0] == std::vector<double>{12, 45, 100, 2});
    REQUIRE(ds.targets[0] == 55.5);
    REQUIRE(ds.inputs[4] == std::vector<double>{36, 47, 120, 2.5});
    REQUIRE(ds.targets[4] == 66.1);
    REQUIRE(ds.feature_names == kYieldFeatureNames);
}

TEST_CASE("load_yield_csv names row and column of a bad cell") {
    TempDir dir("csv");
    write_text(dir.file("bad.csv"),
               "time_h,temperature_c,enzyme_mg,molar_ratio,yield_pct\n"
               "12,45,100,2,55.5\n"
               "24,50,150,3,61.2\n"
               "6,abc,80,1.5,38\n");
    REQUIRE_THROWS_MATCHES(load_yield_csv(dir.file("bad.csv")), CsvError,
                           Catch::Matchers::Message("row 3, column 'temperature_c': not a number: 'abc'"));
}

TEST_CASE("load_yield_csv rejects reordered headers") {
    TempDir dir("csv");
    write_text(dir.file("reordered.csv"),
               "temperature_c,time_h,enzyme_mg,molar_ratio,yield_pct\n"
               "45,12,100,2,55.5\n");
    REQUIRE_THROWS_WITH(load_yield_csv(dir.file("reordered.csv")),
                        Catch::Matchers::Contains("header mismatch"));
}

TEST_CASE("load_yield_csv errors") {
    TempDir dir("csv");
    SECTION("missing file") {
        REQUIRE_THROWS_AS(load_yield_csv(dir.file("nope.csv")), IoError);
    }
    SECTION("row invariant violation names the row") {
        write_text(dir.file("neg.csv"),
                   "time_h,temperature_c,enzyme_mg,molar_ratio,yield_pct\n"
                   "12,45,100,2,55.5\n"
                   "24,50,-1,3,61.2\n");
        REQUIRE_THROWS_WITH(load_yield_csv(dir.file("neg.csv")),
                            Catch::Matchers::Contains("row 2") &&
                                Catch::Matchers::Contains("enzyme_mg"));
    }
    SECTION("short row is rejected") {
        write_text(dir.file("short.csv"),
                   "time_h,temperature_c,enzyme_mg,molar_ratio,yield_pct\n"
                   "12,45,100,2\n");
        REQUIRE_THROWS_AS(load_yield_csv(dir.file("short.csv")), CsvError);
    }
}

TEST_CASE("generic loader accepts an explicit schema") {
    TempDir dir("csv");
    write_text(dir.file("generic.csv"), "a,b,target\n1,2,3\n4,5,6\n");
    Dataset ds = load_csv(dir.file("generic.csv"), {"a", "b", "target"});
    REQUIRE(ds.size() == 2);
    REQUIRE(ds.dim() == 2);
    REQUIRE(ds.targets == std::vector<double>{3, 6});
}

TEST_CASE("split sizes follow round(fraction * n)") {
    SECTION("n=20, fraction 0.65 gives 13/7") {
        auto idx = split_indices(20, {0.65, 42});
        REQUIRE(idx.train.size() == 13);
        REQUIRE(idx.test.size() == 7);
    }
    SECTION("n=100 gives the 65/35 protocol split") {
        auto idx = split_indices(100, {0.65, 42});
        REQUIRE(idx.train.size() == 65);
        REQUIRE(idx.test.size() == 35);
    }
}

TEST_CASE("split is deterministic, disjoint, and exhaustive") {
    for (uint64_t seed : {0ull, 1ull, 42ull, 0xdeadbeefull}) {
        for (size_t n : {2u, 3u, 17u, 100u}) {
            auto a = split_indices(n, {0.65, seed});
            auto b = split_indices(n, {0.65, seed});
            REQUIRE(a.train == b.train);
            REQUIRE(a.test == b.test);
            std::vector<bool> seen(n, false);
            for (size_t i : a.train) {
                REQUIRE_FALSE(seen[i]);
                seen[i] = true;
            }
            for (size_t i : a.test) {
                REQUIRE_FALSE(seen[i]);
                seen[i] = true;
            }
            for (bool s : seen) REQUIRE(s);
        }
    }
}

TEST_CASE("split rejects bad input") {
    REQUIRE_THROWS_AS(split_indices(1, {0.65, 0}), ConfigError);
    REQUIRE_THROWS_AS(split_indices(10, {0.0, 0}), ConfigError);
    REQUIRE_THROWS_AS(split_indices(10, {1.0, 0}), ConfigError);
    REQUIRE_THROWS_AS(split_indices(10, {1.5, 0}), ConfigError);
}

TEST_CASE("split partitions carry the right rows") {
    Dataset ds = make_yield_fixture({30, 5, 1.0});
    auto [train, test] = split(ds, {0.65, 9});
    REQUIRE(train.size() == 20);  // round(0.65 * 30) = 20 (llround of 19.5)
    REQUIRE(test.size() == 10);
    // multiset union equals the original rows
    std::vector<double> all = train.targets;
    all.insert(all.end(), test.targets.begin(), test.targets.end());
    std::sort(all.begin(), all.end());
    std::vector<double> orig = ds.targets;
    std::sort(orig.begin(), orig.end());
    REQUIRE(all == orig);
}

TEST_CASE("normalizer statistics use the population convention") {
    // single feature {1, 3}: mean 2, population stddev sqrt(((1-2)^2+(3-2)^2)/2) = 1
    Dataset ds = make_dataset({{1.0}, {3.0}}, {0.0, 0.0});
    Normalizer norm = fit_normalizer(ds);
    REQUIRE(norm.means()[0] == 2.0);
    REQUIRE(norm.stds()[0] == 1.0);
}

TEST_CASE("normalizer rejects constant features by name") {
    Dataset ds = make_dataset({{5.0, 1.0}, {5.0, 2.0}, {5.0, 3.0}}, {0, 0, 0});
    REQUIRE_THROWS_WITH(fit_normalizer(ds), Catch::Matchers::Contains("f0") &&
                                                Catch::Matchers::Contains("constant"));
}

TEST_CASE("normalizer round-trips within 1e-12") {
    Dataset ds = make_yield_fixture({40, 11, 2.0});
    Normalizer norm = fit_normalizer(ds);
    Rng rng(99);
    for (int k = 0; k < 200; ++k) {
        std::vector<double> x(4);
        for (double& v : x) v = rng.next_uniform(-1000.0, 1000.0);
        auto back = norm.inverse(norm.transform(x));
        for (size_t c = 0; c < 4; ++c) {
            double scale = std::max(1.0, std::abs(x[c]));
            REQUIRE(std::abs(back[c] - x[c]) / scale < 1e-12);
        }
    }
}

TEST_CASE("normalizer sees only the training partition") {
    Dataset ds = make_yield_fixture({50, 3, 1.0});
    SplitSpec spec{0.65, 21};
    auto idx = split_indices(ds.size(), spec);
    Normalizer before = fit_normalizer(ds.subset(idx.train));
    // trash every test row; training statistics must not move
    for (size_t i : idx.test) {
        for (double& v : ds.inputs[i]) v *= -17.0;
        ds.targets[i] = 1e6;
    }
    Normalizer after = fit_normalizer(ds.subset(idx.train));
    REQUIRE(before.means() == after.means());
    REQUIRE(before.stds() == after.stds());
}

TEST_CASE("normalizer dimension mismatch is an error") {
    Dataset ds = make_dataset({{1.0, 2.0}, {3.0, 4.0}}, {0, 0});
    Normalizer norm = fit_normalizer(ds);
    std::vector<double> wrong{1.0};
    REQUIRE_THROWS_AS(norm.transform(wrong), std::invalid_argument);
}
