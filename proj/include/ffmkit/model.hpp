#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "ffmkit/types.hpp"

namespace ffm {

// Hashed row index for the embedding of `value` (a token of `own_field`) used
// against `other_field`. Deterministic, stateless, uniform-ish over [0, d).
std::uint64_t phi(std::uint64_t value, std::uint32_t own_field,
                  std::uint32_t other_field, std::uint64_t hash_space);

// Row of the cross-feature conjunction (f1=v1, f2=v2). Symmetric in the two
// (field, value) pairs so both orientations share one row; this is the
// LrCross analogue of phi.
std::uint64_t phi_cross(std::uint32_t f1, std::uint64_t v1, std::uint32_t f2,
                        std::uint64_t v2, std::uint64_t hash_space);

// Hashed embedding table plus the AdaGrad accumulator. `weights` and
// `adagrad` are row-major d x k; every adagrad entry starts at 1 and never
// decreases.
struct FfmModel {
    ModelConfig config;
    std::vector<double> weights;
    std::vector<double> adagrad;
    std::uint32_t trained_epochs = 0;

    // Random init: weights uniform in [0, init_scale/sqrt(k)] from rng_seed,
    // adagrad all ones. Forces latent_dim to 1 for LrCross.
    static FfmModel init(ModelConfig config);

    double* row(std::uint64_t r) { return weights.data() + r * config.latent_dim; }
    const double* row(std::uint64_t r) const { return weights.data() + r * config.latent_dim; }
};

// True when config, weights, adagrad and trained_epochs match bit for bit.
bool bitwise_equal(const FfmModel& a, const FfmModel& b);

// Sum of one dot product per unordered pair of present fields (Ffm), or of
// one conjunction weight per pair (LrCross). Fields absent from x contribute
// nothing. Throws DataError if a slot's field id is out of range.
double raw_score(const FfmModel& model, const FeatureVector& x);

// sigmoid(raw_score), clamped away from {0,1}.
double predict_proba(const FfmModel& model, const FeatureVector& x);

constexpr double kProbaClamp = 1e-9;
double clamp_proba(double p);

// Negative log likelihood of a single (clamped) prediction.
double log_loss(double p, std::uint8_t label);

// One touched row of a per-example gradient; `g` has latent_dim entries.
struct RowGrad {
    std::uint64_t row;
    std::vector<double> g;
};

// Gradient of the weighted, L2-regularized per-example log loss at the
// current weights. Rows touched by several pairs accumulate; nothing is
// mutated. The regularizer adds lambda*w once per pair side, matching
// sgd_step.
std::vector<RowGrad> loss_gradient(const FfmModel& model, const FeatureVector& x);

// One AdaGrad step on a single example. Gradients for all touched rows are
// computed against the pre-step weights, then applied: G += g^2 elementwise
// and w -= eta * g / sqrt(G) with the post-accumulation G. Returns the
// weighted log loss before the update. Throws NumericalError on a non-finite
// gradient.
double sgd_step(FfmModel& model, const FeatureVector& x);

// Model file: little-endian binary, magic "FFMF", then version u32,
// model_kind u8, F u32, k u32, d u64, eta f64, lambda f64, init_scale f64,
// rng_seed u64, trained_epochs u32, then d*k f64 weights and d*k f64 adagrad
// entries.
constexpr std::uint32_t kModelFormatVersion = 1;
constexpr std::size_t kModelHeaderBytes = 61;

void save_model(const FfmModel& model, std::ostream& out);
void save_model(const FfmModel& model, const std::string& path);
FfmModel load_model(std::istream& in);
FfmModel load_model(const std::string& path);

} // namespace ffm
