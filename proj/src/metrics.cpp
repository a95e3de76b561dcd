#include "ffmkit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "ffmkit/gamma.hpp"
#include "ffmkit/rng.hpp"

#include "json.hpp"

namespace ffm {

namespace {

inline double weight_at(std::span<const double> w, std::size_t i) {
    return w.empty() ? 1.0 : w[i];
}

void check_sizes(std::size_t n, std::span<const std::uint8_t> labels,
                 std::span<const double> weights, const char* who) {
    if (labels.size() != n)
        throw DataError(std::string(who) + ": predictions/labels size mismatch");
    if (!weights.empty() && weights.size() != n)
        throw DataError(std::string(who) + ": weights size mismatch");
}

// LL of the constant predictor pbar, in closed form.
double constant_ll(double pbar, double weight_sum, double positive_weight) {
    const double p = clamp_proba(pbar);
    return -positive_weight * std::log(p) -
           (weight_sum - positive_weight) * std::log(1.0 - p);
}

double quantile(const std::vector<double>& sorted, double q) {
    if (sorted.size() == 1) return sorted[0];
    const double h = q * static_cast<double>(sorted.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(h);
    if (lo + 1 >= sorted.size()) return sorted.back();
    const double frac = h - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

} // namespace

LossSummary weighted_log_loss(std::span<const double> predictions,
                              std::span<const std::uint8_t> labels,
                              std::span<const double> weights) {
    check_sizes(predictions.size(), labels, weights, "weighted_log_loss");
    LossSummary s;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const double w = weight_at(weights, i);
        s.ll_sum += w * log_loss(clamp_proba(predictions[i]), labels[i]);
        s.weight_sum += w;
        if (labels[i]) {
            s.positive_weight += w;
            ++s.positives;
        }
        ++s.n;
    }
    return s;
}

double nll(std::span<const double> predictions,
           std::span<const std::uint8_t> labels,
           std::span<const double> weights) {
    const LossSummary s = weighted_log_loss(predictions, labels, weights);
    if (s.n == 0 || s.positive_weight <= 0.0 || s.positive_weight >= s.weight_sum)
        throw DegenerateBaselineError("nll: all labels identical, constant baseline undefined");
    const double base = constant_ll(s.base_rate(), s.weight_sum, s.positive_weight);
    return (base - s.ll_sum) / base;
}

double utility_term(double p, std::uint8_t label, double reward, double cost,
                    double beta) {
    const double threshold = p * reward;
    if (threshold <= 0.0) return 0.0;
    const double alpha = beta * cost + 1.0;
    const double x = beta * threshold;
    const double win_mass = reg_lower_gamma(alpha, x);
    const double paid = (alpha / beta) * reg_lower_gamma(alpha + 1.0, x);
    return (label ? reward : 0.0) * win_mass - paid;
}

double utility(std::span<const double> predictions,
               std::span<const std::uint8_t> labels,
               std::span<const double> rewards,
               std::span<const double> costs, double beta,
               std::span<const double> weights) {
    if (!(beta > 0.0) || !std::isfinite(beta))
        throw ConfigError("utility: beta must be positive and finite");
    check_sizes(predictions.size(), labels, weights, "utility");
    if (rewards.size() != predictions.size() || costs.size() != predictions.size())
        throw DataError("utility: rewards/costs size mismatch");

    double total = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        if (!std::isfinite(predictions[i]) || !std::isfinite(rewards[i]) ||
            !std::isfinite(costs[i]) || rewards[i] < 0.0 || costs[i] < 0.0)
            throw DataError("utility: non-finite or negative input at example " +
                            std::to_string(i));
        total += weight_at(weights, i) *
                 utility_term(predictions[i], labels[i], rewards[i], costs[i], beta);
    }
    return total;
}

CiResult bootstrap_ci(const std::function<double(std::span<const std::size_t>)>& metric,
                      std::size_t n, std::uint32_t resamples, double level,
                      std::uint64_t seed) {
    if (n == 0) throw ConfigError("bootstrap_ci: empty dataset");
    if (resamples < 100) throw ConfigError("bootstrap_ci: need at least 100 resamples");
    if (!(level > 0.0 && level < 1.0)) throw ConfigError("bootstrap_ci: level in (0,1)");

    Rng rng(mix_seed(seed, 0xb007));
    std::vector<std::size_t> idx(n);
    std::vector<double> values;
    values.reserve(resamples);
    CiResult res;
    for (std::uint32_t r = 0; r < resamples; ++r) {
        for (std::size_t i = 0; i < n; ++i)
            idx[i] = static_cast<std::size_t>(rng.below(n));
        try {
            values.push_back(metric(idx));
        } catch (const DegenerateBaselineError&) {
            ++res.skipped;
        }
    }
    if (res.skipped * 10 > resamples)
        throw DataError("bootstrap_ci: more than 10% of resamples were degenerate");

    std::sort(values.begin(), values.end());
    res.low = quantile(values, (1.0 - level) / 2.0);
    res.high = quantile(values, (1.0 + level) / 2.0);
    return res;
}

std::vector<double> predict_batch(const FfmModel& model,
                                  std::span<const FeatureVector> examples) {
    std::vector<double> out(examples.size());
    for (std::size_t i = 0; i < examples.size(); ++i)
        out[i] = predict_proba(model, examples[i]);
    return out;
}

MetricReport compute_metrics(std::span<const double> predictions,
                             std::span<const FeatureVector> examples,
                             const MetricOptions& opts) {
    const std::size_t n = examples.size();
    if (n == 0) throw DataError("compute_metrics: empty dataset");
    if (predictions.size() != n) throw DataError("compute_metrics: size mismatch");

    // Per-example terms; every (re)sampled metric reduces to sums of these.
    std::vector<double> ll_term(n), w(n), wy(n);
    std::vector<std::vector<double>> util_term(opts.betas.size(),
                                               std::vector<double>(n));
    for (std::size_t i = 0; i < n; ++i) {
        const FeatureVector& e = examples[i];
        w[i] = e.weight;
        wy[i] = e.label ? e.weight : 0.0;
        ll_term[i] = e.weight * log_loss(clamp_proba(predictions[i]), e.label);
        const double uw = opts.weighted_utility ? e.weight : 1.0;
        for (std::size_t b = 0; b < opts.betas.size(); ++b)
            util_term[b][i] = uw * utility_term(predictions[i], e.label, e.reward,
                                                e.cost, opts.betas[b]);
    }

    MetricReport rep;
    rep.n = n;
    rep.betas = opts.betas;

    double ll_sum = 0.0, w_sum = 0.0, wy_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        ll_sum += ll_term[i];
        w_sum += w[i];
        wy_sum += wy[i];
    }
    rep.ll = ll_sum;

    const auto nll_of = [&](double lls, double ws, double wys) {
        if (wys <= 0.0 || wys >= ws)
            throw DegenerateBaselineError("nll: degenerate resample");
        const double base = constant_ll(wys / ws, ws, wys);
        return (base - lls) / base;
    };
    rep.nll = nll_of(ll_sum, w_sum, wy_sum);

    rep.utility.resize(opts.betas.size());
    for (std::size_t b = 0; b < opts.betas.size(); ++b) {
        double u = 0.0;
        for (std::size_t i = 0; i < n; ++i) u += util_term[b][i];
        rep.utility[b] = u;
    }

    if (opts.bootstrap_resamples > 0) {
        const auto sum_over = [](std::span<const std::size_t> idx,
                                 const std::vector<double>& term) {
            double s = 0.0;
            for (std::size_t i : idx) s += term[i];
            return s;
        };
        const auto ll_metric = [&](std::span<const std::size_t> idx) {
            return sum_over(idx, ll_term);
        };
        const auto nll_metric = [&](std::span<const std::size_t> idx) {
            return nll_of(sum_over(idx, ll_term), sum_over(idx, w), sum_over(idx, wy));
        };
        const CiResult llci = bootstrap_ci(ll_metric, n, opts.bootstrap_resamples,
                                           opts.ci_level, opts.seed);
        rep.ll_ci = {llci.low, llci.high};
        const CiResult nllci = bootstrap_ci(nll_metric, n, opts.bootstrap_resamples,
                                            opts.ci_level, opts.seed);
        rep.nll_ci = {nllci.low, nllci.high};
        rep.utility_ci.resize(opts.betas.size());
        for (std::size_t b = 0; b < opts.betas.size(); ++b) {
            const auto um = [&](std::span<const std::size_t> idx) {
                return sum_over(idx, util_term[b]);
            };
            const CiResult uci = bootstrap_ci(um, n, opts.bootstrap_resamples,
                                              opts.ci_level, opts.seed);
            rep.utility_ci[b] = {uci.low, uci.high};
        }
    }
    return rep;
}

MetricReport evaluate_metrics(const FfmModel& model,
                              std::span<const FeatureVector> examples,
                              const MetricOptions& opts) {
    const std::vector<double> p = predict_batch(model, examples);
    return compute_metrics(p, examples, opts);
}

std::string metric_report_json(const MetricReport& rep) {
    nlohmann::ordered_json j;
    j["ll"] = rep.ll;
    j["nll"] = rep.nll;

    const auto beta_key = [](double beta) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%g", beta);
        return std::string(buf);
    };
    nlohmann::ordered_json util = nlohmann::ordered_json::object();
    for (std::size_t b = 0; b < rep.betas.size(); ++b)
        util[beta_key(rep.betas[b])] = rep.utility[b];
    j["utility"] = util;

    nlohmann::ordered_json ci = nlohmann::ordered_json::object();
    if (!rep.utility_ci.empty() || rep.ll_ci.low != 0.0 || rep.ll_ci.high != 0.0) {
        ci["ll"] = {rep.ll_ci.low, rep.ll_ci.high};
        ci["nll"] = {rep.nll_ci.low, rep.nll_ci.high};
        nlohmann::ordered_json uci = nlohmann::ordered_json::object();
        for (std::size_t b = 0; b < rep.utility_ci.size(); ++b)
            uci[beta_key(rep.betas[b])] = {rep.utility_ci[b].low, rep.utility_ci[b].high};
        ci["utility"] = uci;
    }
    j["ci"] = ci;
    j["n"] = rep.n;
    return j.dump(2);
}

} // namespace ffm
