#pragma once

#include <algorithm>
#include <array>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "yieldml/common.hpp"

namespace yieldml {

inline const std::vector<std::string> kYieldFeatureNames = {"time_h", "temperature_c", "enzyme_mg",
                                                            "molar_ratio"};
inline constexpr const char* kYieldTargetName = "yield_pct";

// One reaction record: four condition features and the observed yield.
struct Sample {
    double time_h = 0.0;
    double temperature_c = 0.0;
    double enzyme_mg = 0.0;
    double molar_ratio = 1.0;
    double yield_pct = 0.0;

    std::array<double, 4> features() const { return {time_h, temperature_c, enzyme_mg, molar_ratio}; }

    // Throws CsvError naming the violated field; `where` identifies the row.
    void validate(const std::string& where) const {
        auto bad = [&](const std::string& what) { throw CsvError(where + ": " + what); };
        for (auto [v, name] : {std::pair{time_h, "time_h"},
                               {temperature_c, "temperature_c"},
                               {enzyme_mg, "enzyme_mg"},
                               {molar_ratio, "molar_ratio"},
                               {yield_pct, "yield_pct"}}) {
            if (!is_finite(v)) bad(std::string(name) + " is not finite");
        }
        if (time_h < 0.0) bad("time_h must be >= 0");
        if (enzyme_mg < 0.0) bad("enzyme_mg must be >= 0");
        if (molar_ratio <= 0.0) bad("molar_ratio must be > 0");
    }
};

// Ordered collection of records. The domain schema has d = 4, but nothing in
// the library assumes it; any d >= 1 works.
struct Dataset {
    std::vector<std::vector<double>> inputs;  // n rows of d features
    std::vector<double> targets;              // n
    std::vector<std::string> feature_names;   // d
    std::string source;

    size_t size() const { return inputs.size(); }
    size_t dim() const { return feature_names.size(); }

    static Dataset from_samples(const std::vector<Sample>& samples, std::string source = "memory") {
        Dataset ds;
        ds.feature_names = kYieldFeatureNames;
        ds.source = std::move(source);
        ds.inputs.reserve(samples.size());
        ds.targets.reserve(samples.size());
        for (const Sample& s : samples) {
            auto f = s.features();
            ds.inputs.emplace_back(f.begin(), f.end());
            ds.targets.push_back(s.yield_pct);
        }
        return ds;
    }

    Dataset subset(std::span<const size_t> indices) const {
        Dataset out;
        out.feature_names = feature_names;
        out.source = source;
        out.inputs.reserve(indices.size());
        out.targets.reserve(indices.size());
        for (size_t i : indices) {
            out.inputs.push_back(inputs.at(i));
            out.targets.push_back(targets.at(i));
        }
        return out;
    }
};

struct SplitSpec {
    double train_fraction = 0.65;
    uint64_t seed = 0;
};

namespace detail {

inline std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.push_back("");
    return cells;
}

inline double parse_cell(const std::string& cell, size_t row, const std::string& column) {
    const char* begin = cell.c_str();
    char* end = nullptr;
    double v = std::strtod(begin, &end);
    while (end && *end == ' ') ++end;
    if (end == begin || *end != '\0')
        throw CsvError("row " + std::to_string(row) + ", column '" + column + "': not a number: '" +
                       cell + "'");
    if (!is_finite(v))
        throw CsvError("row " + std::to_string(row) + ", column '" + column + "': not finite");
    return v;
}

inline std::string strip_cr(std::string s) {
    if (!s.empty() && s.back() == '\r') s.pop_back();
    return s;
}

}  // namespace detail

// Generic loader: the header must equal `columns` exactly; when has_target is
// true the last column is the regression target. Rows are kept in file order.
inline Dataset load_csv(const std::string& path, const std::vector<std::string>& columns,
                        bool has_target = true) {
    if (columns.size() < (has_target ? 2u : 1u)) throw ConfigError("load_csv: schema needs >= 1 feature");
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw CsvError("'" + path + "': missing header row");
    auto header = detail::split_line(detail::strip_cr(line));
    if (header != columns) {
        std::string want, got;
        for (const auto& c : columns) want += (want.empty() ? "" : ",") + c;
        for (const auto& c : header) got += (got.empty() ? "" : ",") + c;
        throw CsvError("'" + path + "': header mismatch: expected '" + want + "', found '" + got + "'");
    }

    Dataset ds;
    ds.source = path;
    ds.feature_names.assign(columns.begin(), columns.end() - (has_target ? 1 : 0));
    size_t row = 0;
    while (std::getline(in, line)) {
        line = detail::strip_cr(line);
        if (line.empty()) continue;
        ++row;
        auto cells = detail::split_line(line);
        if (cells.size() != columns.size())
            throw CsvError("row " + std::to_string(row) + ": expected " +
                           std::to_string(columns.size()) + " cells, found " +
                           std::to_string(cells.size()));
        std::vector<double> values(columns.size());
        for (size_t c = 0; c < columns.size(); ++c)
            values[c] = detail::parse_cell(cells[c], row, columns[c]);
        if (has_target) {
            ds.targets.push_back(values.back());
            values.pop_back();
        } else {
            ds.targets.push_back(0.0);
        }
        ds.inputs.push_back(std::move(values));
    }
    return ds;
}

// Domain loader for the reaction-condition schema; validates per-row Sample
// invariants on top of the generic numeric checks.
inline Dataset load_yield_csv(const std::string& path) {
    std::vector<std::string> columns = kYieldFeatureNames;
    columns.push_back(kYieldTargetName);
    Dataset ds = load_csv(path, columns);
    for (size_t i = 0; i < ds.size(); ++i) {
        Sample s{ds.inputs[i][0], ds.inputs[i][1], ds.inputs[i][2], ds.inputs[i][3], ds.targets[i]};
        s.validate("row " + std::to_string(i + 1));
    }
    return ds;
}

// Feature-only loader for prediction inputs. Accepts the 4-column feature
// schema, or the full labeled schema with the yield column ignored.
inline Dataset load_feature_csv(const std::string& path) {
    std::ifstream probe(path);
    if (!probe) throw IoError("cannot open '" + path + "'");
    std::string line;
    std::getline(probe, line);
    auto header = detail::split_line(detail::strip_cr(line));
    probe.close();
    std::vector<std::string> labeled = kYieldFeatureNames;
    labeled.push_back(kYieldTargetName);
    if (header == labeled) return load_csv(path, labeled, true);
    return load_csv(path, kYieldFeatureNames, false);
}

struct SplitIndices {
    std::vector<size_t> train;
    std::vector<size_t> test;
};

// Seeded uniform shuffle, |train| = round(fraction * n), remainder in test.
// Each side keeps original file order.
inline SplitIndices split_indices(size_t n, const SplitSpec& spec) {
    if (n < 2) throw ConfigError("split: need at least 2 samples, have " + std::to_string(n));
    if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0))
        throw ConfigError("split: train_fraction must be in (0,1), got " +
                          format_double(spec.train_fraction));
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), size_t{0});
    Rng rng(spec.seed);
    for (size_t i = n - 1; i > 0; --i) std::swap(order[i], order[rng.next_index(i + 1)]);

    auto train_size = static_cast<size_t>(std::llround(spec.train_fraction * static_cast<double>(n)));
    SplitIndices out;
    out.train.assign(order.begin(), order.begin() + train_size);
    out.test.assign(order.begin() + train_size, order.end());
    std::sort(out.train.begin(), out.train.end());
    std::sort(out.test.begin(), out.test.end());
    return out;
}

inline std::pair<Dataset, Dataset> split(const Dataset& ds, const SplitSpec& spec) {
    SplitIndices idx = split_indices(ds.size(), spec);
    return {ds.subset(idx.train), ds.subset(idx.test)};
}

// Per-feature z-scoring. Statistics are population convention (divide by n),
// fit on the training partition only.
class Normalizer {
public:
    Normalizer() = default;
    Normalizer(std::vector<double> means, std::vector<double> stds)
        : means_(std::move(means)), stds_(std::move(stds)) {
        if (means_.size() != stds_.size()) throw ConfigError("normalizer: mean/std size mismatch");
        for (double s : stds_)
            if (!(s > 0.0) || !is_finite(s)) throw ConfigError("normalizer: standard deviations must be > 0");
    }

    static Normalizer fit(const Dataset& train) {
        if (train.size() == 0) throw ConfigError("normalizer: empty training set");
        const size_t n = train.size(), d = train.dim();
        std::vector<double> means(d, 0.0), stds(d, 0.0);
        for (const auto& row : train.inputs)
            for (size_t c = 0; c < d; ++c) means[c] += row[c];
        for (size_t c = 0; c < d; ++c) means[c] /= static_cast<double>(n);
        for (const auto& row : train.inputs)
            for (size_t c = 0; c < d; ++c) {
                double diff = row[c] - means[c];
                stds[c] += diff * diff;
            }
        for (size_t c = 0; c < d; ++c) {
            stds[c] = std::sqrt(stds[c] / static_cast<double>(n));
            if (stds[c] == 0.0)
                throw ConfigError("normalizer: feature '" + train.feature_names[c] +
                                  "' is constant (zero variance)");
        }
        return Normalizer(std::move(means), std::move(stds));
    }

    static Normalizer identity(size_t d) {
        return Normalizer(std::vector<double>(d, 0.0), std::vector<double>(d, 1.0));
    }

    std::vector<double> transform(std::span<const double> x) const {
        check_dim(x.size());
        std::vector<double> out(x.size());
        for (size_t c = 0; c < x.size(); ++c) out[c] = (x[c] - means_[c]) / stds_[c];
        return out;
    }

    std::vector<double> inverse(std::span<const double> z) const {
        check_dim(z.size());
        std::vector<double> out(z.size());
        for (size_t c = 0; c < z.size(); ++c) out[c] = z[c] * stds_[c] + means_[c];
        return out;
    }

    std::vector<std::vector<double>> transform_all(const Dataset& ds) const {
        std::vector<std::vector<double>> out;
        out.reserve(ds.size());
        for (const auto& row : ds.inputs) out.push_back(transform(row));
        return out;
    }

    size_t dim() const { return means_.size(); }
    const std::vector<double>& means() const { return means_; }
    const std::vector<double>& stds() const { return stds_; }

private:
    void check_dim(size_t d) const {
        if (d != means_.size())
            throw std::invalid_argument("normalizer: expected dimension " + std::to_string(means_.size()) +
                                        ", got " + std::to_string(d));
    }

    std::vector<double> means_;
    std::vector<double> stds_;
};

inline Normalizer fit_normalizer(const Dataset& train) { return Normalizer::fit(train); }

}  // namespace yieldml
