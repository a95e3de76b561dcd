#include "ffmkit/bench.hpp"

#include <algorithm>
#include <chrono>
#include <limits>
#include <cstdio>

#include "ffmkit/model.hpp"
#include "ffmkit/rng.hpp"

namespace ffm {

BenchResult bench_prediction(std::uint32_t num_fields, std::uint64_t hash_space,
                             std::span<const std::uint32_t> latent_dims,
                             std::uint32_t n_examples, std::uint32_t repeats,
                             std::uint64_t seed) {
    if (latent_dims.empty()) throw ConfigError("bench: no latent dims");
    if (num_fields < 2) throw ConfigError("bench: need at least 2 fields");
    if (n_examples < 1 || repeats < 1) throw ConfigError("bench: empty workload");

    Rng rng(mix_seed(seed, 0xbe7c));
    std::vector<FeatureVector> examples(n_examples);
    for (FeatureVector& x : examples) {
        x.slots.reserve(num_fields);
        for (std::uint32_t f = 0; f < num_fields; ++f)
            x.slots.push_back({f, rng.next_u64()});
    }

    BenchResult res;
    volatile double sink = 0.0;
    using clock = std::chrono::steady_clock;

    std::vector<FfmModel> models;
    for (const std::uint32_t k : latent_dims) {
        ModelConfig cfg;
        cfg.num_fields = num_fields;
        cfg.latent_dim = k;
        cfg.hash_space = hash_space;
        cfg.rng_seed = seed;
        models.push_back(FfmModel::init(cfg));
        // warmup pass to fault in the tables
        for (const FeatureVector& x : examples)
            sink = sink + predict_proba(models.back(), x);
    }

    // passes interleaved across latent dims and the fastest pass kept per
    // dim: slow system phases hit every dim alike and cannot bend the curve
    std::vector<double> best(latent_dims.size(),
                             std::numeric_limits<double>::infinity());
    for (std::uint32_t r = 0; r < repeats; ++r) {
        for (std::size_t i = 0; i < models.size(); ++i) {
            const auto tick = clock::now();
            for (const FeatureVector& x : examples)
                sink = sink + predict_proba(models[i], x);
            best[i] = std::min(
                best[i], std::chrono::duration<double>(clock::now() - tick).count());
        }
    }
    for (std::size_t i = 0; i < models.size(); ++i)
        res.points.push_back(
            {latent_dims[i], best[i] * 1e9 / static_cast<double>(n_examples)});

    // least-squares line over (k, ns)
    const double n = static_cast<double>(res.points.size());
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (const BenchPoint& p : res.points) {
        sx += p.latent_dim;
        sy += p.ns_per_prediction;
        sxx += static_cast<double>(p.latent_dim) * p.latent_dim;
        sxy += p.latent_dim * p.ns_per_prediction;
    }
    const double denom = n * sxx - sx * sx;
    res.slope = denom != 0.0 ? (n * sxy - sx * sy) / denom : 0.0;
    res.intercept = (sy - res.slope * sx) / n;

    double ss_res = 0.0, ss_tot = 0.0;
    const double mean_y = sy / n;
    for (const BenchPoint& p : res.points) {
        const double fit = res.intercept + res.slope * p.latent_dim;
        ss_res += (p.ns_per_prediction - fit) * (p.ns_per_prediction - fit);
        ss_tot += (p.ns_per_prediction - mean_y) * (p.ns_per_prediction - mean_y);
    }
    res.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
    return res;
}

std::string bench_csv(const BenchResult& result) {
    std::string out = "k,ns_per_prediction\n";
    char buf[64];
    for (const BenchPoint& p : result.points) {
        std::snprintf(buf, sizeof(buf), "%u,%.2f\n", p.latent_dim, p.ns_per_prediction);
        out += buf;
    }
    return out;
}

} // namespace ffm
