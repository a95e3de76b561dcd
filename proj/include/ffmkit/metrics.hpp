#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "ffmkit/model.hpp"
#include "ffmkit/types.hpp"

namespace ffm {

// Weighted log loss sums plus the tallies the constant-baseline predictor
// needs. `weights` may be empty (unit weights).
struct LossSummary {
    double ll_sum = 0.0;
    double weight_sum = 0.0;
    double positive_weight = 0.0;
    std::uint64_t n = 0;
    std::uint64_t positives = 0;

    double mean() const { return weight_sum > 0.0 ? ll_sum / weight_sum : 0.0; }
    double base_rate() const { return weight_sum > 0.0 ? positive_weight / weight_sum : 0.0; }
};

LossSummary weighted_log_loss(std::span<const double> predictions,
                              std::span<const std::uint8_t> labels,
                              std::span<const double> weights = {});

// Relative log-loss improvement over the best constant predictor of the
// evaluated set: (LL(pbar) - LL(p)) / LL(pbar). Throws
// DegenerateBaselineError when every label is the same.
double nll(std::span<const double> predictions,
           std::span<const std::uint8_t> labels,
           std::span<const double> weights = {});

// Counterfactual profit with second prices drawn from Gamma(alpha = beta*c+1,
// rate beta): per example with threshold T = p*v the contribution is
// y*v*P(alpha, beta*T) - (alpha/beta)*P(alpha+1, beta*T), P the regularized
// lower incomplete gamma. `weights` may be empty.
double utility(std::span<const double> predictions,
               std::span<const std::uint8_t> labels,
               std::span<const double> rewards,
               std::span<const double> costs, double beta,
               std::span<const double> weights = {});

// Contribution of a single example (exposed for oracle-style checks).
double utility_term(double p, std::uint8_t label, double reward, double cost,
                    double beta);

struct CiResult {
    double low = 0.0;
    double high = 0.0;
    std::uint32_t skipped = 0;  // degenerate resamples dropped
};

// Percentile bootstrap over example-level resampling. `metric` receives the
// resampled index multiset and may throw DegenerateBaselineError to skip a
// resample; more than 10% skips is an error.
CiResult bootstrap_ci(const std::function<double(std::span<const std::size_t>)>& metric,
                      std::size_t n, std::uint32_t resamples, double level,
                      std::uint64_t seed);

struct Interval {
    double low = 0.0;
    double high = 0.0;
};

struct MetricReport {
    double ll = 0.0;   // weighted sum over examples
    double nll = 0.0;
    std::vector<double> betas;
    std::vector<double> utility;  // aligned with betas
    Interval ll_ci, nll_ci;
    std::vector<Interval> utility_ci;
    std::uint64_t n = 0;
};

struct MetricOptions {
    std::vector<double> betas = {10.0, 1000.0};
    std::uint32_t bootstrap_resamples = 1000;  // 0 disables the CIs
    double ci_level = 0.90;
    std::uint64_t seed = 1;
    bool weighted_utility = true;  // apply example weights to utility too
};

MetricReport evaluate_metrics(const FfmModel& model,
                              std::span<const FeatureVector> examples,
                              const MetricOptions& opts = {});

// Same report computed from raw arrays (no model involved).
MetricReport compute_metrics(std::span<const double> predictions,
                             std::span<const FeatureVector> examples,
                             const MetricOptions& opts = {});

std::string metric_report_json(const MetricReport& report);

std::vector<double> predict_batch(const FfmModel& model,
                                  std::span<const FeatureVector> examples);

} // namespace ffm
