#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace ffm {

// Error taxonomy; the CLI maps these onto exit codes (config=2, data=3,
// numerical=4).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
// Thrown when a metric baseline is undefined (e.g. NLL on an all-one-label
// sample); bootstrap treats it as a skippable resample.
struct DegenerateBaselineError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Slot {
    std::uint32_t field = 0;  // field id in [0, F)
    std::uint64_t value = 0;  // opaque categorical token

    bool operator==(const Slot&) const = default;
};

// One example: binary outcome plus categorical slots, at most one per field.
// cost/reward are 0 when absent; all computations treat that as "no value".
struct FeatureVector {
    std::uint8_t label = 0;  // y in {0,1}
    double weight = 1.0;     // importance weight, > 0
    double cost = 0.0;       // display cost, >= 0
    double reward = 0.0;     // impression value, >= 0
    std::vector<Slot> slots;

    bool operator==(const FeatureVector&) const = default;
};

enum class ModelKind : std::uint8_t {
    Ffm = 0,      // pairwise dot products of field-aware embeddings
    LrCross = 1,  // logistic regression over hashed cross-feature conjunctions
};

struct ModelConfig {
    std::uint32_t num_fields = 1;   // F
    std::uint32_t latent_dim = 1;   // k; forced to 1 for LrCross
    std::uint64_t hash_space = 1;   // d, number of embedding rows
    double learning_rate = 0.2;     // eta
    double l2_lambda = 0.0;
    double init_scale = 1.0;
    std::uint64_t rng_seed = 1;
    ModelKind kind = ModelKind::Ffm;

    bool operator==(const ModelConfig&) const = default;

    // Throws ConfigError on out-of-domain values.
    void validate() const;
};

const char* to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& s);

} // namespace ffm
