#include "ffmkit/trainer.hpp"

#include <atomic>
#include <chrono>
#include <cstdio>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>

#include "ffmkit/rng.hpp"

namespace ffm {

namespace detail {

std::vector<std::uint32_t> epoch_order(std::size_t n, std::uint64_t rng_seed,
                                       std::uint32_t epoch, std::uint32_t shard) {
    std::vector<std::uint32_t> order(n);
    std::iota(order.begin(), order.end(), 0u);
    Rng rng(mix_seed(rng_seed, epoch, shard));
    rng.shuffle(order);
    return order;
}

double run_ordered(FfmModel& model, std::span<const FeatureVector> data,
                   std::span<const std::uint32_t> order) {
    double loss = 0.0;
    for (const std::uint32_t i : order) {
        try {
            loss += sgd_step(model, data[i]);
        } catch (const NumericalError& e) {
            throw NumericalError(std::string(e.what()) + " at example " + std::to_string(i));
        }
    }
    return loss;
}

double run_training_epoch(FfmModel& model, std::span<const FeatureVector> data,
                          std::uint32_t epoch, std::uint32_t threads) {
    const std::vector<std::uint32_t> order =
        epoch_order(data.size(), model.config.rng_seed, epoch, 0);
    if (threads <= 1) return run_ordered(model, data, order);

    // Racy mode: workers update the shared tables with no synchronization.
    const std::size_t n = order.size();
    std::vector<double> partial(threads, 0.0);
    std::vector<std::thread> pool;
    std::exception_ptr failure;
    std::mutex failure_mu;
    for (std::uint32_t t = 0; t < threads; ++t) {
        const std::size_t lo = n * t / threads;
        const std::size_t hi = n * (t + 1) / threads;
        pool.emplace_back([&, t, lo, hi] {
            try {
                partial[t] = run_ordered(
                    model, data, std::span<const std::uint32_t>(order).subspan(lo, hi - lo));
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_mu);
                if (!failure) failure = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);

    double loss = 0.0;
    for (const double p : partial) loss += p;
    return loss;
}

} // namespace detail

LossSummary evaluate_loss(const FfmModel& model, std::span<const FeatureVector> data,
                          std::uint32_t threads) {
    constexpr std::size_t kChunk = 8192;
    const std::size_t n_chunks = (data.size() + kChunk - 1) / kChunk;

    const auto eval_chunk = [&](std::size_t c) {
        LossSummary s;
        const std::size_t lo = c * kChunk;
        const std::size_t hi = std::min(lo + kChunk, data.size());
        for (std::size_t i = lo; i < hi; ++i) {
            const FeatureVector& x = data[i];
            s.ll_sum += x.weight * log_loss(predict_proba(model, x), x.label);
            s.weight_sum += x.weight;
            if (x.label) {
                s.positive_weight += x.weight;
                ++s.positives;
            }
            ++s.n;
        }
        return s;
    };

    std::vector<LossSummary> chunks(n_chunks);
    if (threads <= 1 || n_chunks <= 1) {
        for (std::size_t c = 0; c < n_chunks; ++c) chunks[c] = eval_chunk(c);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (std::uint32_t t = 0; t < threads; ++t)
            pool.emplace_back([&] {
                for (std::size_t c = next.fetch_add(1); c < n_chunks; c = next.fetch_add(1))
                    chunks[c] = eval_chunk(c);
            });
        for (auto& th : pool) th.join();
    }

    LossSummary total;
    for (const LossSummary& s : chunks) {
        total.ll_sum += s.ll_sum;
        total.weight_sum += s.weight_sum;
        total.positive_weight += s.positive_weight;
        total.n += s.n;
        total.positives += s.positives;
    }
    return total;
}

TrainReport train(const FfmModel& seed, std::span<const FeatureVector> train_set,
                  std::span<const FeatureVector> val_set, const TrainOptions& opts) {
    if (opts.max_epochs < 1) throw ConfigError("train: max_epochs must be >= 1");
    if (train_set.empty()) throw ConfigError("train: empty training set");
    if (val_set.empty()) throw ConfigError("train: empty validation set");

    double train_weight = 0.0;
    for (const FeatureVector& x : train_set) train_weight += x.weight;

    TrainReport rep;
    FfmModel current = seed;
    rep.initial_val_loss = evaluate_loss(current, val_set, opts.threads).mean();

    FfmModel snap_prev = current;   // w_{t-1}
    FfmModel snap_prev2 = current;  // w_{t-2}; the seed doubles as w_{-1}
    double last_val = rep.initial_val_loss;
    double total_seconds = 0.0;

    using clock = std::chrono::steady_clock;
    for (std::uint32_t t = 1; t <= opts.max_epochs; ++t) {
        const auto tick = clock::now();
        double train_ll;
        try {
            train_ll = detail::run_training_epoch(current, train_set, t, opts.threads);
        } catch (const NumericalError& e) {
            throw NumericalError("epoch " + std::to_string(t) + ": " + e.what());
        }
        current.trained_epochs += 1;
        const double val = evaluate_loss(current, val_set, opts.threads).mean();
        const double secs = std::chrono::duration<double>(clock::now() - tick).count();
        total_seconds += secs;
        rep.epochs.push_back({train_ll / train_weight, val, secs});

        if (val > last_val) {
            rep.stop_epoch = t;
            rep.stopped_early = true;
            break;
        }
        last_val = val;
        snap_prev2 = std::move(snap_prev);
        snap_prev = current;
    }
    if (!rep.stopped_early) rep.stop_epoch = opts.max_epochs;

    rep.mature_model = std::move(snap_prev);
    rep.premature_model = std::move(snap_prev2);
    rep.best_val_loss = rep.initial_val_loss;
    for (const EpochRecord& e : rep.epochs)
        if (e.val_loss < rep.best_val_loss) rep.best_val_loss = e.val_loss;
    if (!rep.epochs.empty())
        rep.wall_time_per_epoch = total_seconds / static_cast<double>(rep.epochs.size());
    return rep;
}

std::string progress_csv(const TrainReport& rep) {
    std::string out = "epoch,train_ll,val_ll,seconds\n";
    char buf[128];
    for (std::size_t i = 0; i < rep.epochs.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%zu,%.9g,%.9g,%.3f\n", i + 1,
                      rep.epochs[i].train_loss, rep.epochs[i].val_loss,
                      rep.epochs[i].seconds);
        out += buf;
    }
    return out;
}

} // namespace ffm
