#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "yieldml/model.hpp"

namespace yieldml {

inline constexpr int kModelFormatVersion = 1;

// What the model was trained from; carried verbatim in the model file.
// Everything here is static per training run so files stay byte-reproducible.
struct Provenance {
    std::string dataset_source;
    uint64_t split_seed = 0;
    nlohmann::json training_config = nlohmann::json::object();
    std::string library_version = kLibraryVersion;
};

struct LoadedModel {
    Model model;
    Provenance provenance;
};

namespace detail {

inline uint64_t fnv1a64(const std::string& bytes) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string checksum_hex(const std::string& bytes) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a64(bytes)));
    return buf;
}

inline nlohmann::json encode_vector(const std::vector<double>& v) {
    nlohmann::json out = nlohmann::json::array();
    for (double x : v) out.push_back(double_to_hex(x));
    return out;
}

inline std::vector<double> decode_vector(const nlohmann::json& j) {
    std::vector<double> out;
    out.reserve(j.size());
    for (const auto& e : j) out.push_back(hex_to_double(e.get<std::string>()));
    return out;
}

inline nlohmann::json encode_matrix(const std::vector<std::vector<double>>& m) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& row : m) out.push_back(encode_vector(row));
    return out;
}

inline std::vector<std::vector<double>> decode_matrix(const nlohmann::json& j) {
    std::vector<std::vector<double>> out;
    out.reserve(j.size());
    for (const auto& e : j) out.push_back(decode_vector(e));
    return out;
}

inline nlohmann::json encode_normalizer(const Normalizer& n, const std::vector<std::string>& names) {
    return {{"means", encode_vector(n.means())},
            {"stds", encode_vector(n.stds())},
            {"feature_names", names}};
}

inline Normalizer decode_normalizer(const nlohmann::json& j, std::vector<std::string>& names_out) {
    names_out = j.at("feature_names").get<std::vector<std::string>>();
    return Normalizer(decode_vector(j.at("means")), decode_vector(j.at("stds")));
}

inline nlohmann::json encode_params(const GrnnModel& m) {
    return {{"sigma", double_to_hex(m.sigma)},
            {"patterns", encode_matrix(m.patterns)},
            {"targets", encode_vector(m.targets)}};
}

inline nlohmann::json encode_params(const MlfnModel& m) {
    return {{"layer_sizes", m.topology.layer_sizes},
            {"weights", encode_matrix(m.weights)},
            {"thresholds", encode_matrix(m.thresholds)},
            {"target_scale", double_to_hex(m.target_scaler.scale)},
            {"target_offset", double_to_hex(m.target_scaler.offset)}};
}

inline nlohmann::json encode_params(const SvrModel& m) {
    return {{"C", double_to_hex(m.config.C)},
            {"epsilon", double_to_hex(m.config.epsilon)},
            {"gamma", double_to_hex(m.config.gamma)},
            {"tol", double_to_hex(m.config.tol)},
            {"max_passes", m.config.max_passes},
            {"bias", double_to_hex(m.bias)},
            {"coefficients", encode_vector(m.coefficients)},
            {"support_patterns", encode_matrix(m.support_patterns)},
            {"converged", m.converged}};
}

}  // namespace detail

// Self-describing container: version + kind tag + checksummed payload. The
// numeric payload is hex-float text, so a load reproduces every double bit
// for bit. Layout documented in docs/model-format.md.
inline void save_model(const Model& m, const std::string& path, const Provenance& prov = {}) {
    nlohmann::json payload;
    std::vector<std::string> names;  // normalizer block carries the expected input schema
    std::visit(
        [&](const auto& model) {
            model.validate();
            payload["params"] = detail::encode_params(model);
        },
        m);
    // The canonical schema belongs to the domain loader; generic models keep
    // whatever the dataset carried. Names are stored even when defaulted.
    names.assign(model_input_dim(m), "");
    if (model_input_dim(m) == kYieldFeatureNames.size()) names = kYieldFeatureNames;
    payload["normalizer"] =
        detail::encode_normalizer(std::visit([](const auto& mm) -> const Normalizer& { return mm.normalizer; }, m),
                                  names);
    payload["provenance"] = {{"dataset_source", prov.dataset_source},
                             {"split_seed", std::to_string(prov.split_seed)},
                             {"training_config", prov.training_config},
                             {"library_version", prov.library_version}};

    nlohmann::json file;
    file["format"] = "yieldml-model";
    file["format_version"] = kModelFormatVersion;
    file["kind"] = model_kind(m);
    file["payload"] = payload;
    file["checksum"] = detail::checksum_hex(payload.dump());

    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path + "'");
    out << file.dump(2) << '\n';
    if (!out.good()) throw IoError("write failed for '" + path + "'");
}

inline LoadedModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    nlohmann::json file;
    try {
        in >> file;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("'" + path + "': not a model file: " + e.what());
    }

    if (file.value("format", "") != "yieldml-model")
        throw FormatError("'" + path + "': not a yieldml model file");
    const int version = file.value("format_version", -1);
    if (version != kModelFormatVersion)
        throw FormatError("'" + path + "': unsupported format_version " + std::to_string(version) +
                          " (supported: " + std::to_string(kModelFormatVersion) + ")");
    if (!file.contains("payload") || !file.contains("checksum"))
        throw FormatError("'" + path + "': missing payload or checksum");

    const std::string stored = file["checksum"].get<std::string>();
    const std::string computed = detail::checksum_hex(file["payload"].dump());
    if (stored != computed)
        throw FormatError("'" + path + "': checksum mismatch (stored " + stored + ", computed " +
                          computed + ")");

    const auto& payload = file["payload"];
    const std::string kind = file.value("kind", "");
    LoadedModel out;
    try {
        std::vector<std::string> names;
        Normalizer norm = detail::decode_normalizer(payload.at("normalizer"), names);
        const auto& params = payload.at("params");
        if (kind == "grnn") {
            GrnnModel m;
            m.normalizer = std::move(norm);
            m.sigma = hex_to_double(params.at("sigma").get<std::string>());
            m.patterns = detail::decode_matrix(params.at("patterns"));
            m.targets = detail::decode_vector(params.at("targets"));
            m.validate();
            out.model = std::move(m);
        } else if (kind == "mlfn") {
            MlfnModel m;
            m.normalizer = std::move(norm);
            m.topology.layer_sizes = params.at("layer_sizes").get<std::vector<int>>();
            m.weights = detail::decode_matrix(params.at("weights"));
            m.thresholds = detail::decode_matrix(params.at("thresholds"));
            m.target_scaler.scale = hex_to_double(params.at("target_scale").get<std::string>());
            m.target_scaler.offset = hex_to_double(params.at("target_offset").get<std::string>());
            m.validate();
            out.model = std::move(m);
        } else if (kind == "svr") {
            SvrModel m;
            m.normalizer = std::move(norm);
            m.config.C = hex_to_double(params.at("C").get<std::string>());
            m.config.epsilon = hex_to_double(params.at("epsilon").get<std::string>());
            m.config.gamma = hex_to_double(params.at("gamma").get<std::string>());
            m.config.tol = hex_to_double(params.at("tol").get<std::string>());
            m.config.max_passes = params.at("max_passes").get<int>();
            m.bias = hex_to_double(params.at("bias").get<std::string>());
            m.coefficients = detail::decode_vector(params.at("coefficients"));
            m.support_patterns = detail::decode_matrix(params.at("support_patterns"));
            m.converged = params.at("converged").get<bool>();
            m.validate();
            out.model = std::move(m);
        } else {
            throw FormatError("'" + path + "': unknown model kind '" + kind + "'");
        }

        const auto& prov = payload.at("provenance");
        out.provenance.dataset_source = prov.value("dataset_source", "");
        out.provenance.split_seed = std::stoull(prov.value("split_seed", "0"));
        out.provenance.training_config = prov.value("training_config", nlohmann::json::object());
        out.provenance.library_version = prov.value("library_version", "");
    } catch (const FormatError&) {
        throw;
    } catch (const std::exception& e) {
        throw FormatError("'" + path + "': malformed payload: " + e.what());
    }
    return out;
}

}  // namespace yieldml
