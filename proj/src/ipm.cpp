#include "ffmkit/ipm.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

namespace ffm {

namespace {

std::vector<std::vector<std::uint32_t>> make_shards(std::size_t n, std::uint32_t machines,
                                                    ShardPolicy policy) {
    std::vector<std::vector<std::uint32_t>> shards(machines);
    if (policy == ShardPolicy::RoundRobin) {
        for (std::size_t i = 0; i < n; ++i)
            shards[i % machines].push_back(static_cast<std::uint32_t>(i));
        return shards;
    }
    for (std::uint32_t m = 0; m < machines; ++m) {
        const std::size_t lo = n * m / machines;
        const std::size_t hi = n * (m + 1) / machines;
        shards[m].reserve(hi - lo);
        for (std::size_t i = lo; i < hi; ++i)
            shards[m].push_back(static_cast<std::uint32_t>(i));
    }
    return shards;
}

} // namespace

IpmReport ipm_train(const IpmConfig& config, const FfmModel& seed,
                    std::span<const FeatureVector> train_set,
                    std::span<const FeatureVector> val_set) {
    if (config.machines < 1) throw ConfigError("ipm_train: machines must be >= 1");
    if (config.max_epochs < 1) throw ConfigError("ipm_train: max_epochs must be >= 1");
    if (val_set.empty()) throw ConfigError("ipm_train: empty validation set");
    if (train_set.size() < config.machines)
        throw ConfigError("ipm_train: fewer examples than machines");

    const std::uint32_t k = config.machines;
    const bool improved = config.variant == IpmVariant::Improved;

    FfmModel global = seed;
    if (config.learning_rate > 0.0) global.config.learning_rate = config.learning_rate;

    const auto shards = make_shards(train_set.size(), k, config.shard_policy);
    // Machine-local example views, so each machine shuffles indices into its
    // own shard.
    std::vector<std::vector<FeatureVector>> shard_data(k);
    for (std::uint32_t m = 0; m < k; ++m) {
        shard_data[m].reserve(shards[m].size());
        for (const std::uint32_t i : shards[m]) shard_data[m].push_back(train_set[i]);
    }

    // Under the naive variant each machine's accumulator persists across
    // epochs and is never reseeded from the global model.
    std::vector<std::vector<double>> naive_grads(improved ? 0 : k);
    if (!improved)
        for (std::uint32_t m = 0; m < k; ++m) naive_grads[m] = seed.adagrad;

    double train_weight = 0.0;
    for (const FeatureVector& x : train_set) train_weight += x.weight;

    IpmReport out;
    TrainReport& rep = out.report;
    rep.initial_val_loss = evaluate_loss(global, val_set, config.eval_threads).mean();

    FfmModel snap_prev = global;
    FfmModel snap_prev2 = global;
    double last_val = rep.initial_val_loss;
    double total_seconds = 0.0;

    std::vector<FfmModel> locals(k);
    std::vector<double> local_loss(k, 0.0);

    using clock = std::chrono::steady_clock;
    for (std::uint32_t t = 1; t <= config.max_epochs; ++t) {
        const auto tick = clock::now();

        const auto run_machine = [&](std::uint32_t m) {
            FfmModel& local = locals[m];
            local.config = global.config;
            local.trained_epochs = global.trained_epochs;
            local.weights = global.weights;  // broadcast w
            if (improved)
                local.adagrad = global.adagrad;  // broadcast G
            else
                local.adagrad = std::move(naive_grads[m]);
            const std::vector<std::uint32_t> order =
                detail::epoch_order(shard_data[m].size(), local.config.rng_seed, t, m);
            local_loss[m] = detail::run_ordered(local, shard_data[m], order);
        };

        if (config.run_parallel && k > 1) {
            std::vector<std::thread> pool;
            std::exception_ptr failure;
            std::mutex failure_mu;
            for (std::uint32_t m = 0; m < k; ++m)
                pool.emplace_back([&, m] {
                    try {
                        run_machine(m);
                    } catch (...) {
                        std::lock_guard<std::mutex> lock(failure_mu);
                        if (!failure) failure = std::current_exception();
                    }
                });
            for (auto& th : pool) th.join();
            if (failure) std::rethrow_exception(failure);
        } else {
            for (std::uint32_t m = 0; m < k; ++m) run_machine(m);
        }

        // Barrier: average weights in machine order. For the improved variant
        // the accumulators are aggregated without double counting the
        // broadcast base; for the naive variant the global model carries the
        // machine mean as its snapshot value only.
        const std::size_t n_entries = global.weights.size();
        const double inv_k = 1.0 / static_cast<double>(k);
        std::vector<double> new_w(n_entries, 0.0);
        for (std::uint32_t m = 0; m < k; ++m) {
            const std::vector<double>& wm = locals[m].weights;
            for (std::size_t j = 0; j < n_entries; ++j) new_w[j] += wm[j];
        }
        for (std::size_t j = 0; j < n_entries; ++j) new_w[j] *= inv_k;

        std::vector<double> new_g(n_entries, 0.0);
        for (std::uint32_t m = 0; m < k; ++m) {
            const std::vector<double>& gm = locals[m].adagrad;
            for (std::size_t j = 0; j < n_entries; ++j) new_g[j] += gm[j];
        }
        if (improved) {
            if (k > 1) {
                const double excess = static_cast<double>(k - 1);
                for (std::size_t j = 0; j < n_entries; ++j)
                    new_g[j] -= excess * global.adagrad[j];
            }
        } else {
            for (std::size_t j = 0; j < n_entries; ++j) new_g[j] *= inv_k;
            for (std::uint32_t m = 0; m < k; ++m)
                naive_grads[m] = std::move(locals[m].adagrad);
        }
        global.weights = std::move(new_w);
        global.adagrad = std::move(new_g);
        global.trained_epochs += 1;

        double train_ll = 0.0;
        for (const double l : local_loss) train_ll += l;
        const double val = evaluate_loss(global, val_set, config.eval_threads).mean();
        const double secs = std::chrono::duration<double>(clock::now() - tick).count();
        total_seconds += secs;
        rep.epochs.push_back({train_ll / train_weight, val, secs});
        if (config.record_history) out.history.push_back(global);

        if (config.early_stop && val > last_val) {
            rep.stop_epoch = t;
            rep.stopped_early = true;
            break;
        }
        last_val = val;
        snap_prev2 = std::move(snap_prev);
        snap_prev = global;
    }
    if (!rep.stopped_early) rep.stop_epoch = config.max_epochs;

    rep.mature_model = std::move(snap_prev);
    rep.premature_model = std::move(snap_prev2);
    rep.best_val_loss = rep.initial_val_loss;
    if (!rep.epochs.empty())
        rep.wall_time_per_epoch = total_seconds / static_cast<double>(rep.epochs.size());

    out.best_val_loss = rep.initial_val_loss;
    out.epochs_to_best = 0;
    for (std::size_t i = 0; i < rep.epochs.size(); ++i) {
        if (rep.epochs[i].val_loss < out.best_val_loss) {
            out.best_val_loss = rep.epochs[i].val_loss;
            out.epochs_to_best = static_cast<std::uint32_t>(i + 1);
        }
    }
    rep.best_val_loss = out.best_val_loss;
    return out;
}

double speedup(std::uint32_t machines, double epochs_multi, double epochs_single) {
    if (machines < 1) throw ConfigError("speedup: machines must be >= 1");
    if (!(epochs_single >= 1.0)) throw ConfigError("speedup: epochs_single must be >= 1");
    if (!(epochs_multi > 0.0)) throw ConfigError("speedup: epochs_multi must be > 0");
    return static_cast<double>(machines) * epochs_single / epochs_multi;
}

std::vector<SweepRow> sweep(std::span<const IpmConfig> configs,
                            const ModelConfig& model_config,
                            std::span<const FeatureVector> train_set,
                            std::span<const FeatureVector> val_set) {
    if (configs.empty()) throw ConfigError("sweep: no configurations");

    std::vector<SweepRow> rows;
    rows.reserve(configs.size());
    for (const IpmConfig& cfg : configs) {
        const FfmModel seed = FfmModel::init(model_config);
        const IpmReport rep = ipm_train(cfg, seed, train_set, val_set);
        SweepRow row;
        row.machines = cfg.machines;
        row.variant = cfg.variant;
        row.eta = cfg.learning_rate > 0.0 ? cfg.learning_rate : model_config.learning_rate;
        row.epochs_to_best = rep.epochs_to_best;
        row.best_logloss = rep.best_val_loss;
        rows.push_back(row);
    }

    double single_epochs = std::numeric_limits<double>::quiet_NaN();
    for (const SweepRow& r : rows)
        if (r.machines == 1) {
            single_epochs = r.epochs_to_best;
            break;
        }
    for (SweepRow& r : rows)
        r.speedup_vs_single = (std::isnan(single_epochs) || r.epochs_to_best == 0)
                                  ? std::numeric_limits<double>::quiet_NaN()
                                  : speedup(r.machines, r.epochs_to_best, single_epochs);
    return rows;
}

std::string sweep_csv(std::span<const SweepRow> rows) {
    std::string out = "machines,variant,eta,epochs_to_best,best_logloss,speedup_vs_single\n";
    char buf[160];
    for (const SweepRow& r : rows) {
        std::snprintf(buf, sizeof(buf), "%u,%s,%g,%u,%.9g,%.4g\n", r.machines,
                      to_string(r.variant), r.eta, r.epochs_to_best, r.best_logloss,
                      r.speedup_vs_single);
        out += buf;
    }
    return out;
}

const char* to_string(IpmVariant v) {
    return v == IpmVariant::Naive ? "naive" : "improved";
}

IpmVariant ipm_variant_from_string(const std::string& s) {
    if (s == "naive") return IpmVariant::Naive;
    if (s == "improved") return IpmVariant::Improved;
    throw ConfigError("unknown IPM variant: " + s);
}

} // namespace ffm
