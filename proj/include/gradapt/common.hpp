#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace gradapt {

// Error taxonomy. Callers that can recover catch the specific type;
// the CLI maps ConfigError -> exit 2 and NumericError -> exit 3.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ShapeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg, long step = -1)
        : std::runtime_error(msg), step(step) {}
    long step;  // optimizer step that produced the failure, -1 if unknown
};

struct AnnotationMissingError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DegeneratePlanError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// splitmix64; used to derive independent child seeds from (base, stream).
inline std::uint64_t split_mix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
    return split_mix64(base + 0x9E3779B97F4A7C15ULL * (stream + 1));
}

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t base, std::uint64_t stream) {
    return Rng(derive_seed(base, stream));
}

}  // namespace gradapt
