// Python module exposing the training, prediction, metric, and experiment
// entry points over the C++ core.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "ffmkit/bench.hpp"
#include "ffmkit/data.hpp"
#include "ffmkit/ipm.hpp"
#include "ffmkit/metrics.hpp"
#include "ffmkit/model.hpp"
#include "ffmkit/rolling.hpp"
#include "ffmkit/trainer.hpp"

namespace py = pybind11;
using namespace ffm;

namespace {

ModelConfig make_config(std::uint32_t fields, std::uint32_t k, std::uint64_t d,
                        double eta, double lambda, double init_scale,
                        std::uint64_t seed, const std::string& kind) {
    ModelConfig cfg;
    cfg.num_fields = fields;
    cfg.kind = model_kind_from_string(kind);
    cfg.latent_dim = cfg.kind == ModelKind::LrCross ? 1 : k;
    cfg.hash_space = d;
    cfg.learning_rate = eta;
    cfg.l2_lambda = lambda;
    cfg.init_scale = init_scale;
    cfg.rng_seed = seed;
    cfg.validate();
    return cfg;
}

FeatureVector make_feature_vector(
    const std::vector<std::pair<std::uint32_t, std::uint64_t>>& slots,
    int label, double weight, double cost, double reward) {
    FeatureVector x;
    x.label = label ? 1 : 0;
    x.weight = weight;
    x.cost = cost;
    x.reward = reward;
    for (const auto& [f, v] : slots) x.slots.push_back({f, v});
    return x;
}

py::dict report_to_dict(const TrainReport& rep) {
    py::dict d;
    d["stop_epoch"] = rep.stop_epoch;
    d["stopped_early"] = rep.stopped_early;
    d["initial_val_loss"] = rep.initial_val_loss;
    d["best_val_loss"] = rep.best_val_loss;
    d["wall_time_per_epoch"] = rep.wall_time_per_epoch;
    py::list epochs;
    for (const EpochRecord& e : rep.epochs) {
        py::dict r;
        r["train_loss"] = e.train_loss;
        r["val_loss"] = e.val_loss;
        r["seconds"] = e.seconds;
        epochs.append(r);
    }
    d["epochs"] = epochs;
    d["mature"] = rep.mature_model;
    d["premature"] = rep.premature_model;
    return d;
}

py::dict metric_report_to_dict(const MetricReport& rep) {
    py::dict d;
    d["ll"] = rep.ll;
    d["nll"] = rep.nll;
    py::dict util, util_ci;
    for (std::size_t b = 0; b < rep.betas.size(); ++b) {
        util[py::cast(rep.betas[b])] = rep.utility[b];
        if (b < rep.utility_ci.size())
            util_ci[py::cast(rep.betas[b])] =
                py::make_tuple(rep.utility_ci[b].low, rep.utility_ci[b].high);
    }
    d["utility"] = util;
    py::dict ci;
    ci["ll"] = py::make_tuple(rep.ll_ci.low, rep.ll_ci.high);
    ci["nll"] = py::make_tuple(rep.nll_ci.low, rep.nll_ci.high);
    ci["utility"] = util_ci;
    d["ci"] = ci;
    d["n"] = rep.n;
    d["json"] = metric_report_json(rep);
    return d;
}

py::dict rolling_report_to_dict(const RollingReport& rep) {
    py::dict d;
    d["seeding"] = std::string(to_string(rep.seeding));
    d["train_blocks"] = rep.train_size_blocks;
    py::list steps;
    for (const StepRecord& s : rep.steps) {
        py::dict r;
        r["step"] = s.step;
        r["test_ll"] = s.test_ll;
        r["test_nll"] = s.test_nll;
        r["epochs"] = s.epochs;
        r["seconds"] = s.seconds;
        steps.append(r);
    }
    d["steps"] = steps;
    d["total_epochs"] = rep.total_epochs;
    d["mean_time_per_epoch"] = rep.mean_time_per_epoch;
    d["total_seconds"] = rep.total_seconds;
    return d;
}

} // namespace

PYBIND11_MODULE(ffmkit, m) {
    m.doc() = "Field-aware factorization machines for response-rate prediction: "
              "hashed pairwise models, AdaGrad training with early stopping, "
              "simulated iterative parameter mixing, warm-start experiments, and "
              "NLL/Utility metrics.";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
    py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);
    py::register_exception<DegenerateBaselineError>(m, "DegenerateBaselineError",
                                                    PyExc_ValueError);

    py::class_<ModelConfig>(m, "ModelConfig")
        .def(py::init(&make_config), py::arg("fields"), py::arg("k") = 4,
             py::arg("d") = std::uint64_t(1) << 20, py::arg("eta") = 0.2,
             py::arg("lambda_") = 0.0, py::arg("init_scale") = 1.0,
             py::arg("seed") = 1, py::arg("kind") = "ffm")
        .def_readonly("fields", &ModelConfig::num_fields)
        .def_readonly("k", &ModelConfig::latent_dim)
        .def_readonly("d", &ModelConfig::hash_space)
        .def_readonly("eta", &ModelConfig::learning_rate)
        .def_readonly("lambda_", &ModelConfig::l2_lambda)
        .def_readonly("seed", &ModelConfig::rng_seed)
        .def_property_readonly(
            "kind", [](const ModelConfig& c) { return std::string(to_string(c.kind)); });

    py::class_<FfmModel>(m, "FfmModel")
        .def_static("init", &FfmModel::init, py::arg("config"))
        .def_property_readonly("config", [](const FfmModel& m_) { return m_.config; })
        .def_readonly("trained_epochs", &FfmModel::trained_epochs)
        .def("predict",
             [](const FfmModel& model,
                const std::vector<std::pair<std::uint32_t, std::uint64_t>>& slots) {
                 return predict_proba(model, make_feature_vector(slots, 0, 1, 0, 0));
             },
             py::arg("slots"), "Probability for one example given [(field, value), ...]")
        .def("save", [](const FfmModel& model, const std::string& path) {
            save_model(model, path);
        })
        .def_static("load", [](const std::string& path) { return load_model(path); });

    m.def("phi", &phi, py::arg("value"), py::arg("own_field"), py::arg("other_field"),
          py::arg("d"), "Hashed embedding row for a value against another field");
    m.def("phi_cross", &phi_cross, py::arg("f1"), py::arg("v1"), py::arg("f2"),
          py::arg("v2"), py::arg("d"));

    m.def(
        "train_file",
        [](const ModelConfig& cfg, const std::string& train_path,
           const std::string& val_path, std::uint32_t max_epochs, std::uint32_t threads) {
            const Dataset tr = read_dataset(train_path, cfg.num_fields);
            const Dataset va = read_dataset(val_path, cfg.num_fields);
            TrainOptions opts;
            opts.max_epochs = max_epochs;
            opts.threads = threads;
            return report_to_dict(train(FfmModel::init(cfg), tr.examples, va.examples, opts));
        },
        py::arg("config"), py::arg("train_path"), py::arg("val_path"),
        py::arg("max_epochs") = 200, py::arg("threads") = 1,
        "Early-stopped AdaGrad training over files; returns the report with the "
        "mature and premature models");

    m.def(
        "predict_file",
        [](const FfmModel& model, const std::string& path) {
            const Dataset ds = read_dataset(path, model.config.num_fields);
            return predict_batch(model, ds.examples);
        },
        py::arg("model"), py::arg("path"));

    m.def(
        "evaluate_file",
        [](const FfmModel& model, const std::string& path, std::vector<double> betas,
           std::uint32_t resamples, double level, std::uint64_t seed,
           bool weighted_utility) {
            const Dataset ds = read_dataset(path, model.config.num_fields);
            MetricOptions opts;
            if (!betas.empty()) opts.betas = std::move(betas);
            opts.bootstrap_resamples = resamples;
            opts.ci_level = level;
            opts.seed = seed;
            opts.weighted_utility = weighted_utility;
            return metric_report_to_dict(evaluate_metrics(model, ds.examples, opts));
        },
        py::arg("model"), py::arg("path"), py::arg("betas") = std::vector<double>{},
        py::arg("resamples") = 1000, py::arg("level") = 0.90, py::arg("seed") = 1,
        py::arg("weighted_utility") = true);

    m.def(
        "nll",
        [](const std::vector<double>& p, const std::vector<int>& y,
           const std::vector<double>& w) {
            std::vector<std::uint8_t> labels(y.size());
            for (std::size_t i = 0; i < y.size(); ++i) labels[i] = y[i] ? 1 : 0;
            return nll(p, labels, w);
        },
        py::arg("predictions"), py::arg("labels"),
        py::arg("weights") = std::vector<double>{},
        "Relative log-loss improvement over the best constant predictor");

    m.def(
        "utility",
        [](const std::vector<double>& p, const std::vector<int>& y,
           const std::vector<double>& rewards, const std::vector<double>& costs,
           double beta, const std::vector<double>& w) {
            std::vector<std::uint8_t> labels(y.size());
            for (std::size_t i = 0; i < y.size(); ++i) labels[i] = y[i] ? 1 : 0;
            return utility(p, labels, rewards, costs, beta, w);
        },
        py::arg("predictions"), py::arg("labels"), py::arg("rewards"), py::arg("costs"),
        py::arg("beta"), py::arg("weights") = std::vector<double>{});

    m.def("utility_term", &utility_term, py::arg("p"), py::arg("label"), py::arg("reward"),
          py::arg("cost"), py::arg("beta"));

    m.def("speedup", &speedup, py::arg("machines"), py::arg("epochs_multi"),
          py::arg("epochs_single"),
          "machines * epochs_single / epochs_multi, the IPM speed-up model");

    m.def(
        "gen_synthetic",
        [](const std::string& out_path, std::uint32_t fields, std::uint32_t card,
           std::uint32_t blocks, std::uint32_t block_size, double drift,
           std::uint64_t seed, std::uint32_t planted_dim, double base_rate,
           double logit_std, bool with_values) {
            SyntheticSpec spec;
            spec.num_fields = fields;
            spec.cardinality = card;
            spec.num_blocks = blocks;
            spec.block_size = block_size;
            spec.drift_rate = drift;
            spec.seed = seed;
            spec.planted_dim = planted_dim;
            spec.base_rate = base_rate;
            spec.target_logit_std = logit_std;
            spec.with_values = with_values;
            SyntheticData synth = gen_synthetic(spec);
            Dataset out_ds;
            out_ds.num_fields = spec.num_fields;
            out_ds.examples = std::move(synth.data.examples);
            write_dataset(out_path, out_ds);
            return static_cast<std::uint64_t>(out_ds.examples.size());
        },
        py::arg("out_path"), py::arg("fields") = 8, py::arg("card") = 100,
        py::arg("blocks") = 90, py::arg("block_size") = 1000, py::arg("drift") = 0.0,
        py::arg("seed") = 1, py::arg("planted_dim") = 4, py::arg("base_rate") = 0.3,
        py::arg("logit_std") = 1.5, py::arg("with_values") = false,
        "Write a planted-model synthetic dataset; returns the example count");

    m.def(
        "ipm_sweep_file",
        [](const ModelConfig& cfg, const std::string& train_path,
           const std::string& val_path, const std::vector<std::uint32_t>& machines,
           const std::vector<double>& etas, const std::vector<std::string>& variants,
           std::uint32_t max_epochs, bool early_stop) {
            const Dataset tr = read_dataset(train_path, cfg.num_fields);
            const Dataset va = read_dataset(val_path, cfg.num_fields);
            std::vector<IpmConfig> configs;
            for (const std::string& vs : variants)
                for (const double eta : etas)
                    for (const std::uint32_t mc : machines) {
                        IpmConfig c;
                        c.machines = mc;
                        c.variant = ipm_variant_from_string(vs);
                        c.learning_rate = eta;
                        c.max_epochs = max_epochs;
                        c.early_stop = early_stop;
                        configs.push_back(c);
                    }
            const auto rows = sweep(configs, cfg, tr.examples, va.examples);
            py::list out;
            for (const SweepRow& r : rows) {
                py::dict d;
                d["machines"] = r.machines;
                d["variant"] = std::string(to_string(r.variant));
                d["eta"] = r.eta;
                d["epochs_to_best"] = r.epochs_to_best;
                d["best_logloss"] = r.best_logloss;
                d["speedup_vs_single"] = r.speedup_vs_single;
                out.append(d);
            }
            return out;
        },
        py::arg("config"), py::arg("train_path"), py::arg("val_path"),
        py::arg("machines"), py::arg("etas"), py::arg("variants"),
        py::arg("max_epochs") = 200, py::arg("early_stop") = true);

    m.def(
        "compare_plans_file",
        [](const ModelConfig& cfg, const std::string& data_path, std::uint32_t blocks,
           std::uint32_t train_blocks, std::uint32_t val_blocks, std::uint32_t test_blocks,
           const std::vector<std::pair<std::string, std::uint32_t>>& plan_specs,
           std::uint32_t max_epochs, std::uint32_t threads, std::uint32_t ci_resamples) {
            Dataset ds = read_dataset(data_path, cfg.num_fields);
            const BlockedDataset blocked = split_blocks(std::move(ds), blocks);
            std::vector<RollingPlan> plans;
            for (const auto& [seeding, train_size] : plan_specs) {
                RollingPlan p;
                p.window.train_blocks = train_blocks;
                p.window.val_blocks = val_blocks;
                p.window.test_blocks = test_blocks;
                p.seeding = seeding_from_string(seeding);
                p.train_size_blocks = train_size;
                p.train_options.max_epochs = max_epochs;
                p.train_options.threads = threads;
                plans.push_back(p);
            }
            const PlanComparison cmp =
                compare_plans(plans, blocked, cfg, ci_resamples, 0.90, cfg.rng_seed);
            py::dict out;
            out["baseline"] = rolling_report_to_dict(cmp.baseline);
            py::list reps, deltas, cis;
            for (const RollingReport& r : cmp.plans) reps.append(rolling_report_to_dict(r));
            for (const auto& d : cmp.delta_ll) deltas.append(d);
            for (const Interval& ci : cmp.delta_ci)
                cis.append(py::make_tuple(ci.low, ci.high));
            out["plans"] = reps;
            out["delta_ll"] = deltas;
            out["mean_delta"] = cmp.mean_delta;
            out["delta_ci"] = cis;
            return out;
        },
        py::arg("config"), py::arg("data_path"), py::arg("blocks") = 90,
        py::arg("train_blocks") = 44, py::arg("val_blocks") = 1,
        py::arg("test_blocks") = 1, py::arg("plans") =
            std::vector<std::pair<std::string, std::uint32_t>>{{"premature", 0}},
        py::arg("max_epochs") = 200, py::arg("threads") = 1,
        py::arg("ci_resamples") = 0);

    m.def(
        "bench_prediction",
        [](std::uint32_t fields, std::uint64_t d, const std::vector<std::uint32_t>& ks,
           std::uint32_t examples, std::uint32_t repeats, std::uint64_t seed) {
            const BenchResult res = bench_prediction(fields, d, ks, examples, repeats, seed);
            py::dict out;
            py::list points;
            for (const BenchPoint& p : res.points)
                points.append(py::make_tuple(p.latent_dim, p.ns_per_prediction));
            out["points"] = points;
            out["slope"] = res.slope;
            out["intercept"] = res.intercept;
            out["r2"] = res.r2;
            return out;
        },
        py::arg("fields") = 10, py::arg("d") = std::uint64_t(1) << 18,
        py::arg("ks") = std::vector<std::uint32_t>{1, 2, 4, 8},
        py::arg("examples") = 2000, py::arg("repeats") = 50, py::arg("seed") = 1);

    m.attr("__version__") = "0.1.0";
}
