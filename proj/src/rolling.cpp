#include "ffmkit/rolling.hpp"

#include <algorithm>
#include <cstdio>
#include <optional>

#include "ffmkit/metrics.hpp"
#include "ffmkit/rng.hpp"

namespace ffm {

RollingReport run_rolling(const RollingPlan& plan, const BlockedDataset& data,
                          const ModelConfig& config) {
    if (plan.train_size_blocks > plan.window.train_blocks)
        throw ConfigError("run_rolling: train_size_blocks exceeds the train window");
    const std::vector<RollingStep> steps = rolling_steps(data, plan.window);

    RollingReport rep;
    rep.seeding = plan.seeding;
    rep.train_size_blocks =
        plan.train_size_blocks == 0 ? plan.window.train_blocks : plan.train_size_blocks;

    std::optional<FfmModel> carried;
    for (std::size_t s = 0; s < steps.size(); ++s) {
        const RollingStep& st = steps[s];

        // The first step has no predecessor, so every seeding mode trains the
        // full window from a cold start and all plans coincide.
        std::uint32_t train_begin = st.train_begin;
        if (s > 0 && plan.train_size_blocks > 0)
            train_begin = st.train_end - plan.train_size_blocks;

        const auto train_span = data.block_span(train_begin, st.train_end);
        const auto val_span = data.block_span(st.val_begin, st.val_end);
        const auto test_span = data.block_span(st.test_begin, st.test_end);

        FfmModel seed_model = (plan.seeding == Seeding::Cold || !carried)
                                  ? FfmModel::init(config)
                                  : std::move(*carried);
        if (plan.reset_adagrad)
            std::fill(seed_model.adagrad.begin(), seed_model.adagrad.end(), 1.0);

        TrainReport tr;
        try {
            tr = train(seed_model, train_span, val_span, plan.train_options);
        } catch (const NumericalError& e) {
            throw NumericalError("rolling step " + std::to_string(s) + ": " + e.what());
        }

        StepRecord rec;
        rec.step = static_cast<std::uint32_t>(s);
        rec.epochs = tr.epochs_run();
        rec.seconds = 0.0;
        for (const EpochRecord& e : tr.epochs) rec.seconds += e.seconds;

        const std::vector<double> preds = predict_batch(tr.mature_model, test_span);
        std::vector<std::uint8_t> labels(test_span.size());
        std::vector<double> weights(test_span.size());
        for (std::size_t i = 0; i < test_span.size(); ++i) {
            labels[i] = test_span[i].label;
            weights[i] = test_span[i].weight;
        }
        const LossSummary ls = weighted_log_loss(preds, labels, weights);
        rec.test_ll = ls.mean();
        try {
            rec.test_nll = nll(preds, labels, weights);
        } catch (const DegenerateBaselineError& e) {
            throw DataError("rolling step " + std::to_string(s) + ": " + e.what());
        }
        rep.steps.push_back(rec);
        rep.total_epochs += rec.epochs;
        rep.total_seconds += rec.seconds;

        if (plan.seeding == Seeding::Naive)
            carried = std::move(tr.mature_model);
        else if (plan.seeding == Seeding::Premature)
            carried = std::move(tr.premature_model);
        else
            carried.reset();
    }
    if (rep.total_epochs > 0)
        rep.mean_time_per_epoch = rep.total_seconds / static_cast<double>(rep.total_epochs);
    return rep;
}

PlanComparison compare_plans(std::span<const RollingPlan> plans,
                             const BlockedDataset& data, const ModelConfig& config,
                             std::uint32_t ci_resamples, double ci_level,
                             std::uint64_t ci_seed) {
    if (plans.empty()) throw ConfigError("compare_plans: no plans");
    const RollingWindow& w0 = plans[0].window;
    for (const RollingPlan& p : plans) {
        if (p.window.train_blocks != w0.train_blocks || p.window.val_blocks != w0.val_blocks ||
            p.window.test_blocks != w0.test_blocks || p.window.step != w0.step)
            throw ConfigError("compare_plans: plans must share the window arithmetic");
    }

    RollingPlan base;
    base.window = w0;
    base.seeding = Seeding::Cold;
    base.train_size_blocks = 0;
    base.train_options = plans[0].train_options;

    PlanComparison cmp;
    cmp.baseline = run_rolling(base, data, config);
    const std::size_t n_steps = cmp.baseline.steps.size();

    for (const RollingPlan& p : plans) {
        RollingReport rep = run_rolling(p, data, config);
        if (rep.steps.size() != n_steps)
            throw ConfigError("compare_plans: misaligned step counts");
        std::vector<double> delta(n_steps);
        for (std::size_t s = 0; s < n_steps; ++s)
            delta[s] = rep.steps[s].test_ll - cmp.baseline.steps[s].test_ll;
        cmp.plans.push_back(std::move(rep));
        cmp.delta_ll.push_back(std::move(delta));
    }

    for (std::size_t p = 0; p < cmp.delta_ll.size(); ++p) {
        const std::vector<double>& d = cmp.delta_ll[p];
        double mean = 0.0;
        for (const double v : d) mean += v;
        mean /= static_cast<double>(n_steps);
        cmp.mean_delta.push_back(mean);

        if (ci_resamples > 0) {
            const auto metric = [&](std::span<const std::size_t> idx) {
                double s = 0.0;
                for (const std::size_t i : idx) s += d[i];
                return s / static_cast<double>(idx.size());
            };
            const CiResult ci =
                bootstrap_ci(metric, n_steps, ci_resamples, ci_level, mix_seed(ci_seed, p));
            cmp.delta_ci.push_back({ci.low, ci.high});
        }
    }
    return cmp;
}

std::string rolling_report_csv(std::span<const RollingReport> reports) {
    std::string out = "step,seeding,train_blocks,test_ll,test_nll,epochs,seconds\n";
    char buf[160];
    for (const RollingReport& r : reports) {
        for (const StepRecord& s : r.steps) {
            std::snprintf(buf, sizeof(buf), "%u,%s,%u,%.9g,%.9g,%u,%.3f\n", s.step,
                          to_string(r.seeding), r.train_size_blocks, s.test_ll, s.test_nll,
                          s.epochs, s.seconds);
            out += buf;
        }
    }
    return out;
}

std::string delta_vs_baseline_csv(const PlanComparison& cmp) {
    std::string out = "step,seeding,train_blocks,delta_ll\n";
    char buf[128];
    for (std::size_t p = 0; p < cmp.plans.size(); ++p) {
        for (std::size_t s = 0; s < cmp.delta_ll[p].size(); ++s) {
            std::snprintf(buf, sizeof(buf), "%zu,%s,%u,%.9g\n", s,
                          to_string(cmp.plans[p].seeding), cmp.plans[p].train_size_blocks,
                          cmp.delta_ll[p][s]);
            out += buf;
        }
    }
    return out;
}

const char* to_string(Seeding s) {
    switch (s) {
        case Seeding::Cold: return "cold";
        case Seeding::Naive: return "naive";
        default: return "premature";
    }
}

Seeding seeding_from_string(const std::string& s) {
    if (s == "cold") return Seeding::Cold;
    if (s == "naive") return Seeding::Naive;
    if (s == "premature") return Seeding::Premature;
    throw ConfigError("unknown seeding mode: " + s);
}

} // namespace ffm
