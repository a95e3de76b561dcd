#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ffmkit/metrics.hpp"
#include "ffmkit/model.hpp"

namespace ffm {

struct TrainOptions {
    std::uint32_t max_epochs = 200;
    std::uint32_t threads = 1;
};

struct EpochRecord {
    double train_loss = 0.0;  // weighted mean, progressive over the epoch
    double val_loss = 0.0;    // weighted mean after the epoch
    double seconds = 0.0;
};

// Outcome of an early-stopped run. Training stops at the first epoch whose
// validation loss exceeds the previous one; the mature model is the epoch
// before the stop and the premature model the epoch before that. When the
// stop triggers at epoch 1 both fall back to the seed, and when the cap is
// reached they are the last and second-to-last epochs.
struct TrainReport {
    std::vector<EpochRecord> epochs;  // entry per completed epoch, 1-based
    double initial_val_loss = 0.0;    // validation loss of the seed (L_0)
    std::uint32_t stop_epoch = 0;     // trigger epoch, or max_epochs at the cap
    bool stopped_early = false;
    double best_val_loss = 0.0;       // min over L_0 and all epoch losses
    FfmModel mature_model;            // w_{t-1}
    FfmModel premature_model;         // w_{t-2}
    double wall_time_per_epoch = 0.0;

    std::uint32_t epochs_run() const { return static_cast<std::uint32_t>(epochs.size()); }
};

// Epoch loop with a seeded within-epoch shuffle. threads > 1 shards each
// epoch across workers that update the shared tables without synchronization;
// results are bit-reproducible only for threads == 1.
TrainReport train(const FfmModel& seed, std::span<const FeatureVector> train_set,
                  std::span<const FeatureVector> val_set, const TrainOptions& opts = {});

// Weighted log-loss sums over a dataset. Deterministic for any thread count
// (fixed-size chunks reduced in order).
LossSummary evaluate_loss(const FfmModel& model, std::span<const FeatureVector> data,
                          std::uint32_t threads = 1);

// Progress log: one CSV row per epoch (epoch,train_ll,val_ll,seconds).
std::string progress_csv(const TrainReport& report);

namespace detail {

// Visit order for one epoch of one shard; the trainer is shard 0 and the IPM
// machines are shards 1..k. Seeded so runs are reproducible but epochs differ.
std::vector<std::uint32_t> epoch_order(std::size_t n, std::uint64_t rng_seed,
                                       std::uint32_t epoch, std::uint32_t shard);

// sgd_step over `order`, sequential; returns the weighted loss sum. A
// NumericalError is rethrown naming the failing example's position.
double run_ordered(FfmModel& model, std::span<const FeatureVector> data,
                   std::span<const std::uint32_t> order);

// One training epoch (shuffle + sgd over all examples), racy when
// threads > 1. Returns the weighted loss sum.
double run_training_epoch(FfmModel& model, std::span<const FeatureVector> data,
                          std::uint32_t epoch, std::uint32_t threads);

} // namespace detail

} // namespace ffm
