#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace ffm {

struct BenchPoint {
    std::uint32_t latent_dim = 0;
    double ns_per_prediction = 0.0;
};

struct BenchResult {
    std::vector<BenchPoint> points;
    double slope = 0.0;      // ns per prediction per latent factor
    double intercept = 0.0;  // k-independent cost (hashing, pair loop)
    double r2 = 0.0;         // fit quality of the linear model
};

// Times predict_proba on random fully-populated examples for each latent
// dimension and fits ns/prediction = intercept + slope * k.
BenchResult bench_prediction(std::uint32_t num_fields, std::uint64_t hash_space,
                             std::span<const std::uint32_t> latent_dims,
                             std::uint32_t n_examples, std::uint32_t repeats,
                             std::uint64_t seed);

// k,ns_per_prediction
std::string bench_csv(const BenchResult& result);

} // namespace ffm
