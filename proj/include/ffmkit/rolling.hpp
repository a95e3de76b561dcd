#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ffmkit/data.hpp"
#include "ffmkit/trainer.hpp"

namespace ffm {

enum class Seeding : std::uint8_t {
    Cold = 0,      // fresh random init every step
    Naive = 1,     // seed with the previous step's mature model
    Premature = 2, // seed with the previous step's premature model
};

struct RollingPlan {
    RollingWindow window;
    Seeding seeding = Seeding::Cold;
    // Train on the most recent N blocks of the train window from the second
    // step on; 0 means the full window. The first step always uses the full
    // window, so every plan starts from the same model.
    std::uint32_t train_size_blocks = 0;
    bool reset_adagrad = false;  // seed weights only, G back to ones
    TrainOptions train_options;
};

struct StepRecord {
    std::uint32_t step = 0;    // 0-based
    double test_ll = 0.0;      // weighted mean on the test window (mature model)
    double test_nll = 0.0;
    std::uint32_t epochs = 0;  // training epochs run this step
    double seconds = 0.0;
};

struct RollingReport {
    Seeding seeding = Seeding::Cold;
    std::uint32_t train_size_blocks = 0;
    std::vector<StepRecord> steps;
    std::uint64_t total_epochs = 0;
    double mean_time_per_epoch = 0.0;
    double total_seconds = 0.0;
};

// Rolling re-training over the blocked dataset: per step train on the step's
// train window (early stopping on its validation window), report the mature
// model's metrics on the test window, and carry the configured snapshot into
// the next step.
RollingReport run_rolling(const RollingPlan& plan, const BlockedDataset& data,
                          const ModelConfig& config);

struct PlanComparison {
    RollingReport baseline;               // COLD over the full window
    std::vector<RollingReport> plans;
    std::vector<std::vector<double>> delta_ll;  // [plan][step], plan minus baseline
    std::vector<double> mean_delta;
    std::vector<Interval> delta_ci;       // bootstrap over steps (when resamples > 0)
};

// Runs the implicit COLD baseline plus every plan over the same windows and
// tabulates the per-step test log-loss differences. All plans must share the
// baseline's window arithmetic.
PlanComparison compare_plans(std::span<const RollingPlan> plans,
                             const BlockedDataset& data, const ModelConfig& config,
                             std::uint32_t ci_resamples = 1000, double ci_level = 0.90,
                             std::uint64_t ci_seed = 1);

// step,seeding,train_blocks,test_ll,test_nll,epochs,seconds
std::string rolling_report_csv(std::span<const RollingReport> reports);
// step,seeding,train_blocks,delta_ll
std::string delta_vs_baseline_csv(const PlanComparison& cmp);

const char* to_string(Seeding s);
Seeding seeding_from_string(const std::string& s);

} // namespace ffm
