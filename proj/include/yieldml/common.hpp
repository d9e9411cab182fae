#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <random>
#include <span>
#include <stdexcept>
#include <string>

namespace yieldml {

inline constexpr const char* kLibraryVersion = "0.1.0";

// Malformed or out-of-contract input data (CSV cells, headers, row invariants).
struct CsvError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Invalid configuration value (fractions, grids, hyperparameters).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Training failed in a way the caller must see (divergence, degenerate data).
struct TrainingError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Model file problems: unknown version, checksum mismatch, invariant violation.
struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Order-independent per-task seeds: mixing, not arithmetic, so nearby
// (base, a, b) triples do not produce correlated streams.
inline uint64_t derive_seed(uint64_t base, uint64_t a, uint64_t b) {
    return splitmix64(splitmix64(base ^ splitmix64(a)) ^ splitmix64(b ^ 0x5851f42d4c957f2dULL));
}

// Deterministic random source. mt19937_64's output sequence is pinned by the
// standard; the extraction helpers below are pinned here. std::shuffle and
// std::*_distribution are implementation-defined and must not be used where
// byte-identical reruns are promised.
class Rng {
public:
    explicit Rng(uint64_t seed) : engine_(seed) {}

    uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1), 53-bit resolution.
    double next_double() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double next_uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    // Index in [0, n). Modulo bias is irrelevant at these n.
    size_t next_index(size_t n) { return static_cast<size_t>(engine_() % n); }

    // Box-Muller, one value per call; the sine partner is discarded so the
    // draw count per sample is fixed.
    double next_gaussian() {
        double u1 = 1.0 - next_double();  // (0, 1]
        double u2 = next_double();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
    }

private:
    std::mt19937_64 engine_;
};

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size())
        throw std::invalid_argument("squared_distance: dimension mismatch (" +
                                    std::to_string(a.size()) + " vs " + std::to_string(b.size()) + ")");
    double d = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        double diff = a[i] - b[i];
        d += diff * diff;
    }
    return d;
}

// Shortest text that parses back to the same double (%.17g is always enough).
inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// Lossless textual encoding for persisted models.
inline std::string double_to_hex(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%a", v);
    return buf;
}

inline double hex_to_double(const std::string& s) {
    char* end = nullptr;
    double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0')
        throw FormatError("not a hex float: '" + s + "'");
    return v;
}

inline bool is_finite(double v) { return std::isfinite(v); }

}  // namespace yieldml
