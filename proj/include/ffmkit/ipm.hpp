#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ffmkit/trainer.hpp"

namespace ffm {

enum class IpmVariant : std::uint8_t {
    Naive = 0,     // weights averaged at barriers; per-machine G never mixed
    Improved = 1,  // G re-broadcast each epoch and aggregated at barriers
};

enum class ShardPolicy : std::uint8_t { Contiguous = 0, RoundRobin = 1 };

struct IpmConfig {
    std::uint32_t machines = 1;
    IpmVariant variant = IpmVariant::Improved;
    double learning_rate = 0.0;  // 0 keeps the seed model's rate
    std::uint32_t max_epochs = 200;
    bool early_stop = true;
    ShardPolicy shard_policy = ShardPolicy::Contiguous;
    bool run_parallel = true;    // machines on threads; serial runs give identical results
    bool record_history = false;
    std::uint32_t eval_threads = 1;
};

struct IpmReport {
    TrainReport report;
    std::uint32_t epochs_to_best = 0;  // 1-based argmin of validation loss; 0 if the seed wins
    double best_val_loss = 0.0;
    std::vector<FfmModel> history;     // averaged model per epoch (record_history)
};

// Epoch-synchronous simulated distributed training: each machine updates a
// private copy of the model over its fixed shard, weights are averaged at the
// epoch barrier (fixed machine order), and early stopping applies to the
// averaged model. With one machine this reduces bit-exactly to train().
IpmReport ipm_train(const IpmConfig& config, const FfmModel& seed,
                    std::span<const FeatureVector> train_set,
                    std::span<const FeatureVector> val_set);

// machines * epochs_single / epochs_multi; the time saved per epoch against
// the extra epochs the averaging costs.
double speedup(std::uint32_t machines, double epochs_multi, double epochs_single);

struct SweepRow {
    std::uint32_t machines = 1;
    IpmVariant variant = IpmVariant::Improved;
    double eta = 0.0;
    std::uint32_t epochs_to_best = 0;
    double best_logloss = 0.0;
    double speedup_vs_single = 0.0;  // NaN when the sweep has no single-machine row
};

// One ipm_train per config from a fresh model (same rng_seed throughout).
// The speed-up column is relative to the first machines==1 row.
std::vector<SweepRow> sweep(std::span<const IpmConfig> configs,
                            const ModelConfig& model_config,
                            std::span<const FeatureVector> train_set,
                            std::span<const FeatureVector> val_set);

// machines,variant,eta,epochs_to_best,best_logloss,speedup_vs_single
std::string sweep_csv(std::span<const SweepRow> rows);

const char* to_string(IpmVariant v);
IpmVariant ipm_variant_from_string(const std::string& s);

} // namespace ffm
