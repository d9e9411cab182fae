#include <catch2/catch.hpp>

#include "test_support.hpp"
#include "yieldml/fixture.hpp"
#include "yieldml/persistence.hpp"

using namespace yieldml;
using testsupport::read_text;
using testsupport::TempDir;
using testsupport::write_text;

namespace {

std::vector<std::vector<double>> random_queries(size_t count, size_t d, uint64_t seed) {
    Rng rng(seed);
    std::vector<std::vector<double>> out(count, std::vector<double>(d));
    for (auto& row : out)
        for (double& v : row) v = rng.next_uniform(-100.0, 400.0);
    return out;
}

void require_bit_identical_predictions(const Model& a, const Model& b, uint64_t seed) {
    for (const auto& q : random_queries(100, model_input_dim(a), seed))
        REQUIRE(predict(a, q) == predict(b, q));
}

}  // namespace

TEST_CASE("GRNN round-trips with bit-identical predictions") {
    Dataset ds = make_yield_fixture({40, 23, 2.0});
    Model m = grnn_train(ds);
    TempDir dir("persist");
    Provenance prov;
    prov.dataset_source = "fixture";
    prov.split_seed = 23;
    save_model(m, dir.file("g.model"), prov);
    LoadedModel loaded = load_model(dir.file("g.model"));
    REQUIRE(model_kind(loaded.model) == "grnn");
    require_bit_identical_predictions(m, loaded.model, 1);
    REQUIRE(loaded.provenance.dataset_source == "fixture");
    REQUIRE(loaded.provenance.split_seed == 23);
    REQUIRE(loaded.provenance.library_version == kLibraryVersion);
}

TEST_CASE("MLFN round-trips with an identical parameter vector") {
    Dataset ds = make_yield_fixture({30, 29, 2.0});
    TrainConfig cfg;
    cfg.max_epochs = 150;
    cfg.seed = 77;
    MlfnModel trained = mlfn_train(MlfnTopology{{4, 3, 1}}, ds, cfg).model;
    TempDir dir("persist");
    save_model(trained, dir.file("m.model"));
    LoadedModel loaded = load_model(dir.file("m.model"));
    const auto& back = std::get<MlfnModel>(loaded.model);
    REQUIRE(back.weights == trained.weights);
    REQUIRE(back.thresholds == trained.thresholds);
    REQUIRE(back.topology.layer_sizes == trained.topology.layer_sizes);
    REQUIRE(back.target_scaler.scale == trained.target_scaler.scale);
    REQUIRE(back.target_scaler.offset == trained.target_scaler.offset);
    require_bit_identical_predictions(trained, loaded.model, 2);
}

TEST_CASE("SVR round-trips with bit-identical predictions") {
    Dataset ds = make_yield_fixture({35, 31, 2.0});
    SvrConfig cfg;
    cfg.C = 10.0;
    cfg.epsilon = 0.5;
    cfg.gamma = 0.5;
    SvrModel trained = svr_train(ds, cfg);
    REQUIRE(trained.support_count() > 0);
    TempDir dir("persist");
    save_model(trained, dir.file("s.model"));
    LoadedModel loaded = load_model(dir.file("s.model"));
    const auto& back = std::get<SvrModel>(loaded.model);
    REQUIRE(back.coefficients == trained.coefficients);
    REQUIRE(back.bias == trained.bias);
    REQUIRE(back.config.gamma == trained.config.gamma);
    require_bit_identical_predictions(trained, loaded.model, 3);
}

TEST_CASE("corrupting one payload byte trips the checksum") {
    Dataset ds = make_yield_fixture({20, 37, 2.0});
    Model m = grnn_train(ds);
    TempDir dir("persist");
    save_model(m, dir.file("c.model"));
    std::string text = read_text(dir.file("c.model"));
    // flip one mantissa digit inside a hex float so the JSON stays parseable
    auto pos = text.find("0x1.");
    REQUIRE(pos != std::string::npos);
    pos += 4;
    text[pos] = text[pos] == '7' ? '8' : '7';
    write_text(dir.file("c.model"), text);
    REQUIRE_THROWS_AS(load_model(dir.file("c.model")), FormatError);
    REQUIRE_THROWS_WITH(load_model(dir.file("c.model")), Catch::Matchers::Contains("checksum"));
}

TEST_CASE("unsupported versions never decode") {
    Dataset ds = make_yield_fixture({20, 41, 2.0});
    Model m = grnn_train(ds);
    TempDir dir("persist");
    save_model(m, dir.file("v.model"));
    std::string text = read_text(dir.file("v.model"));
    auto pos = text.find("\"format_version\": 1");
    REQUIRE(pos != std::string::npos);
    text.replace(pos, std::string("\"format_version\": 1").size(), "\"format_version\": 9");
    write_text(dir.file("v.model"), text);
    REQUIRE_THROWS_WITH(load_model(dir.file("v.model")),
                        Catch::Matchers::Contains("format_version"));
}

TEST_CASE("junk files are rejected cleanly") {
    TempDir dir("persist");
    write_text(dir.file("junk.model"), "not json at all {{{");
    REQUIRE_THROWS_AS(load_model(dir.file("junk.model")), FormatError);
    write_text(dir.file("other.model"), "{\"format\": \"something-else\"}");
    REQUIRE_THROWS_AS(load_model(dir.file("other.model")), FormatError);
    REQUIRE_THROWS_AS(load_model(dir.file("missing.model")), IoError);
}

TEST_CASE("decoded payloads are revalidated against model invariants") {
    Dataset ds = make_yield_fixture({20, 43, 2.0});
    Model m = grnn_train(ds);
    TempDir dir("persist");
    save_model(m, dir.file("i.model"));

    // rewrite sigma to a negative value and fix up the checksum so only the
    // invariant check can reject the file
    nlohmann::json file = nlohmann::json::parse(read_text(dir.file("i.model")));
    file["payload"]["params"]["sigma"] = double_to_hex(-1.0);
    file["checksum"] = [](const std::string& s) {
        uint64_t h = 0xcbf29ce484222325ULL;
        for (unsigned char c : s) {
            h ^= c;
            h *= 0x100000001b3ULL;
        }
        char buf[20];
        std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
        return std::string(buf);
    }(file["payload"].dump());
    write_text(dir.file("i.model"), file.dump(2));
    REQUIRE_THROWS_WITH(load_model(dir.file("i.model")), Catch::Matchers::Contains("sigma"));
}
