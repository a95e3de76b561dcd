// ffmkit command line: train/evaluate FFM and LR-cross response models, run
// the simulated-distribution and warm-start experiments, and generate data.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "ffmkit/bench.hpp"
#include "ffmkit/data.hpp"
#include "ffmkit/ipm.hpp"
#include "ffmkit/metrics.hpp"
#include "ffmkit/model.hpp"
#include "ffmkit/rolling.hpp"
#include "ffmkit/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

constexpr const char* kVersion = "0.1.0";

int run(const std::vector<std::string>& args);

std::uint32_t default_threads() {
    if (const char* env = std::getenv("FFM_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v >= 1) return static_cast<std::uint32_t>(v);
    }
    return 1;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream f(path);
    if (!f) throw ffm::DataError("cannot open for writing: " + path.string());
    f << text;
    if (!f) throw ffm::DataError("write failed: " + path.string());
}

// Every command records its resolved configuration and seeds so the run can
// be replayed exactly (see the rerun command).
void write_manifest(const fs::path& out_dir, const std::string& command,
                    const std::vector<std::string>& argv, const ordered_json& config,
                    const ordered_json& outputs) {
    ordered_json m;
    m["tool"] = "ffmkit";
    m["version"] = kVersion;
    m["command"] = command;
    m["argv"] = argv;
    m["config"] = config;
    m["outputs"] = outputs;
    write_text(out_dir / "run_manifest.json", m.dump(2) + "\n");
}

struct ModelFlags {
    std::uint32_t fields = 0;
    std::uint32_t k = 4;
    std::uint64_t d = 1 << 20;
    double eta = 0.2;
    double lambda = 0.0;
    double init_scale = 1.0;
    std::uint64_t seed = 1;
    std::string kind = "ffm";

    void attach(CLI::App* cmd) {
        cmd->add_option("--fields", fields, "Number of fields F")->required();
        cmd->add_option("--k", k, "Latent factors per embedding");
        cmd->add_option("--d", d, "Hash space (embedding rows)");
        cmd->add_option("--eta", eta, "AdaGrad learning rate");
        cmd->add_option("--lambda", lambda, "L2 regularization");
        cmd->add_option("--init-scale", init_scale, "Weight init scale");
        cmd->add_option("--seed", seed, "RNG seed for weight init and shuffles");
        cmd->add_option("--model-kind", kind, "ffm or lr-cross");
    }

    ffm::ModelConfig to_config() const {
        ffm::ModelConfig cfg;
        cfg.num_fields = fields;
        cfg.kind = ffm::model_kind_from_string(kind);
        cfg.latent_dim = cfg.kind == ffm::ModelKind::LrCross ? 1 : k;
        cfg.hash_space = d;
        cfg.learning_rate = eta;
        cfg.l2_lambda = lambda;
        cfg.init_scale = init_scale;
        cfg.rng_seed = seed;
        return cfg;
    }

    ordered_json to_json() const {
        ordered_json j;
        j["fields"] = fields;
        j["k"] = kind == "lr-cross" ? 1 : k;
        j["d"] = d;
        j["eta"] = eta;
        j["lambda"] = lambda;
        j["init_scale"] = init_scale;
        j["seed"] = seed;
        j["model_kind"] = kind;
        return j;
    }
};

std::vector<std::string> split_list(const std::string& csv) {
    std::vector<std::string> out;
    std::size_t at = 0;
    while (at <= csv.size()) {
        const std::size_t comma = csv.find(',', at);
        if (comma == std::string::npos) {
            out.push_back(csv.substr(at));
            break;
        }
        out.push_back(csv.substr(at, comma - at));
        at = comma + 1;
    }
    return out;
}

int cmd_train(const std::vector<std::string>& argv, CLI::App* cmd,
              const ModelFlags& mf, const std::string& data_path,
              const std::string& val_path, std::uint32_t epochs, std::uint32_t threads,
              const std::string& out_dir_s, bool save_premature) {
    (void)cmd;
    const fs::path out_dir(out_dir_s);
    fs::create_directories(out_dir);

    const ffm::ModelConfig cfg = mf.to_config();
    cfg.validate();
    const ffm::Dataset train_set = ffm::read_dataset(data_path, cfg.num_fields);
    const ffm::Dataset val_set = ffm::read_dataset(val_path, cfg.num_fields);

    ffm::TrainOptions opts;
    opts.max_epochs = epochs;
    opts.threads = threads;
    const ffm::TrainReport rep =
        ffm::train(ffm::FfmModel::init(cfg), train_set.examples, val_set.examples, opts);

    ffm::save_model(rep.mature_model, (out_dir / "model.ffm").string());
    if (save_premature)
        ffm::save_model(rep.premature_model, (out_dir / "premature.ffm").string());
    write_text(out_dir / "progress.csv", ffm::progress_csv(rep));

    ordered_json config = mf.to_json();
    config["data"] = data_path;
    config["val"] = val_path;
    config["epochs"] = epochs;
    config["threads"] = threads;
    ordered_json outputs;
    outputs["model"] = (out_dir / "model.ffm").string();
    if (save_premature) outputs["premature"] = (out_dir / "premature.ffm").string();
    outputs["progress"] = (out_dir / "progress.csv").string();
    write_manifest(out_dir, "train", argv, config, outputs);

    std::printf("stopped at epoch %u (%s), best validation loss %.6f\n", rep.stop_epoch,
                rep.stopped_early ? "validation increase" : "epoch cap", rep.best_val_loss);
    return 0;
}

int cmd_eval(const std::vector<std::string>& argv, const std::string& model_path,
             const std::string& data_path, std::vector<double> betas,
             std::uint32_t resamples, double level, std::uint64_t ci_seed,
             bool unweighted_utility, const std::string& out_dir_s) {
    const fs::path out_dir(out_dir_s);
    fs::create_directories(out_dir);

    const ffm::FfmModel model = ffm::load_model(model_path);
    const ffm::Dataset data = ffm::read_dataset(data_path, model.config.num_fields);

    ffm::MetricOptions opts;
    if (!betas.empty()) opts.betas = std::move(betas);
    opts.bootstrap_resamples = resamples;
    opts.ci_level = level;
    opts.seed = ci_seed;
    opts.weighted_utility = !unweighted_utility;
    const ffm::MetricReport rep = ffm::evaluate_metrics(model, data.examples, opts);

    const std::string json = ffm::metric_report_json(rep);
    write_text(out_dir / "metrics.json", json + "\n");
    std::printf("%s\n", json.c_str());

    ordered_json config;
    config["model"] = model_path;
    config["data"] = data_path;
    config["betas"] = opts.betas;
    config["resamples"] = resamples;
    config["level"] = level;
    config["ci_seed"] = ci_seed;
    config["weighted_utility"] = opts.weighted_utility;
    ordered_json outputs;
    outputs["metrics"] = (out_dir / "metrics.json").string();
    write_manifest(out_dir, "eval", argv, config, outputs);
    return 0;
}

int cmd_predict(const std::vector<std::string>& argv, const std::string& model_path,
                const std::string& data_path, bool bench, std::uint32_t bench_fields,
                std::uint64_t bench_d, const std::string& bench_ks,
                std::uint32_t bench_examples, std::uint32_t bench_repeats,
                std::uint64_t bench_seed, const std::string& out_dir_s) {
    const fs::path out_dir(out_dir_s);
    fs::create_directories(out_dir);

    ordered_json config, outputs;
    if (bench) {
        std::vector<std::uint32_t> ks;
        for (const std::string& s : split_list(bench_ks))
            ks.push_back(static_cast<std::uint32_t>(std::stoul(s)));
        const ffm::BenchResult res = ffm::bench_prediction(
            bench_fields, bench_d, ks, bench_examples, bench_repeats, bench_seed);
        write_text(out_dir / "bench.csv", ffm::bench_csv(res));
        std::printf("%s", ffm::bench_csv(res).c_str());
        std::printf("fit: ns/pred = %.2f + %.2f * k, R^2 = %.4f\n", res.intercept,
                    res.slope, res.r2);
        config["bench"] = true;
        config["fields"] = bench_fields;
        config["d"] = bench_d;
        config["k_list"] = bench_ks;
        config["examples"] = bench_examples;
        config["repeats"] = bench_repeats;
        config["seed"] = bench_seed;
        outputs["bench"] = (out_dir / "bench.csv").string();
        write_manifest(out_dir, "predict", argv, config, outputs);
        return 0;
    }

    if (model_path.empty() || data_path.empty())
        throw ffm::ConfigError("predict: --model and --data are required unless --bench");
    const ffm::FfmModel model = ffm::load_model(model_path);
    const ffm::Dataset data = ffm::read_dataset(data_path, model.config.num_fields);
    std::string lines;
    char buf[40];
    for (const ffm::FeatureVector& x : data.examples) {
        std::snprintf(buf, sizeof(buf), "%.9g\n", ffm::predict_proba(model, x));
        lines += buf;
    }
    write_text(out_dir / "predictions.txt", lines);
    config["model"] = model_path;
    config["data"] = data_path;
    outputs["predictions"] = (out_dir / "predictions.txt").string();
    write_manifest(out_dir, "predict", argv, config, outputs);
    return 0;
}

int cmd_ipm_sim(const std::vector<std::string>& argv, const ModelFlags& mf,
                const std::string& data_path, const std::string& val_path,
                const std::string& machines_s, const std::string& etas_s,
                const std::string& variants_s, std::uint32_t epochs, bool no_early_stop,
                std::uint32_t threads, const std::string& out_dir_s) {
    const fs::path out_dir(out_dir_s);
    fs::create_directories(out_dir);

    const ffm::ModelConfig cfg = mf.to_config();
    cfg.validate();
    const ffm::Dataset train_set = ffm::read_dataset(data_path, cfg.num_fields);
    const ffm::Dataset val_set = ffm::read_dataset(val_path, cfg.num_fields);

    std::vector<ffm::IpmConfig> configs;
    for (const std::string& vs : split_list(variants_s)) {
        const ffm::IpmVariant variant = ffm::ipm_variant_from_string(vs);
        for (const std::string& es : split_list(etas_s)) {
            const double eta = std::stod(es);
            for (const std::string& ms : split_list(machines_s)) {
                ffm::IpmConfig c;
                c.machines = static_cast<std::uint32_t>(std::stoul(ms));
                c.variant = variant;
                c.learning_rate = eta;
                c.max_epochs = epochs;
                c.early_stop = !no_early_stop;
                c.eval_threads = threads;
                configs.push_back(c);
            }
        }
    }

    const auto rows = ffm::sweep(configs, cfg, train_set.examples, val_set.examples);
    const std::string csv = ffm::sweep_csv(rows);
    write_text(out_dir / "ipm_sweep.csv", csv);
    std::printf("%s", csv.c_str());

    ordered_json config = mf.to_json();
    config["data"] = data_path;
    config["val"] = val_path;
    config["machines"] = machines_s;
    config["etas"] = etas_s;
    config["variants"] = variants_s;
    config["epochs"] = epochs;
    config["early_stop"] = !no_early_stop;
    config["threads"] = threads;
    ordered_json outputs;
    outputs["sweep"] = (out_dir / "ipm_sweep.csv").string();
    write_manifest(out_dir, "ipm-sim", argv, config, outputs);
    return 0;
}

int cmd_rolling(const std::vector<std::string>& argv, const ModelFlags& mf,
                const std::string& data_path, std::uint32_t blocks,
                std::uint32_t train_blocks, std::uint32_t val_blocks,
                std::uint32_t test_blocks, const std::vector<std::string>& plan_specs,
                std::uint32_t epochs, std::uint32_t threads, bool reset_adagrad,
                std::uint32_t ci_resamples, const std::string& out_dir_s) {
    const fs::path out_dir(out_dir_s);
    fs::create_directories(out_dir);

    const ffm::ModelConfig cfg = mf.to_config();
    cfg.validate();
    ffm::Dataset ds = ffm::read_dataset(data_path, cfg.num_fields);
    const ffm::BlockedDataset blocked = ffm::split_blocks(std::move(ds), blocks);

    ffm::RollingWindow window;
    window.train_blocks = train_blocks;
    window.val_blocks = val_blocks;
    window.test_blocks = test_blocks;

    // plan spec: cold | naive | premature, optionally :train_size
    std::vector<ffm::RollingPlan> plans;
    for (const std::string& spec : plan_specs) {
        ffm::RollingPlan p;
        p.window = window;
        const std::size_t colon = spec.find(':');
        p.seeding = ffm::seeding_from_string(spec.substr(0, colon));
        if (colon != std::string::npos)
            p.train_size_blocks = static_cast<std::uint32_t>(std::stoul(spec.substr(colon + 1)));
        p.reset_adagrad = reset_adagrad;
        p.train_options.max_epochs = epochs;
        p.train_options.threads = threads;
        plans.push_back(p);
    }

    const ffm::PlanComparison cmp =
        ffm::compare_plans(plans, blocked, cfg, ci_resamples, 0.90, cfg.rng_seed);

    std::vector<ffm::RollingReport> reports = {cmp.baseline};
    reports.insert(reports.end(), cmp.plans.begin(), cmp.plans.end());
    write_text(out_dir / "rolling_report.csv", ffm::rolling_report_csv(reports));
    write_text(out_dir / "delta_vs_baseline.csv", ffm::delta_vs_baseline_csv(cmp));

    for (std::size_t p = 0; p < cmp.plans.size(); ++p) {
        std::printf("plan %s(%u blocks): mean delta LL vs baseline %+.6f",
                    ffm::to_string(cmp.plans[p].seeding), cmp.plans[p].train_size_blocks,
                    cmp.mean_delta[p]);
        if (p < cmp.delta_ci.size())
            std::printf("  [%.6f, %.6f]", cmp.delta_ci[p].low, cmp.delta_ci[p].high);
        std::printf("  epochs %llu\n",
                    static_cast<unsigned long long>(cmp.plans[p].total_epochs));
    }
    std::printf("baseline epochs %llu, time/epoch %.3fs\n",
                static_cast<unsigned long long>(cmp.baseline.total_epochs),
                cmp.baseline.mean_time_per_epoch);

    ordered_json config = mf.to_json();
    config["data"] = data_path;
    config["blocks"] = blocks;
    config["train_blocks"] = train_blocks;
    config["val_blocks"] = val_blocks;
    config["test_blocks"] = test_blocks;
    config["plans"] = plan_specs;
    config["epochs"] = epochs;
    config["threads"] = threads;
    config["reset_adagrad"] = reset_adagrad;
    config["ci_resamples"] = ci_resamples;
    ordered_json outputs;
    outputs["rolling_report"] = (out_dir / "rolling_report.csv").string();
    outputs["delta_vs_baseline"] = (out_dir / "delta_vs_baseline.csv").string();
    write_manifest(out_dir, "rolling", argv, config, outputs);
    return 0;
}

int cmd_split(const std::vector<std::string>& argv, const std::string& data_path,
              std::uint32_t fields, std::uint32_t blocks, const std::string& out_dir_s) {
    const fs::path out_dir(out_dir_s);
    fs::create_directories(out_dir);
    ffm::write_block_index(data_path, fields, blocks, (out_dir / "blocks.csv").string());

    ordered_json config;
    config["data"] = data_path;
    config["fields"] = fields;
    config["blocks"] = blocks;
    ordered_json outputs;
    outputs["index"] = (out_dir / "blocks.csv").string();
    write_manifest(out_dir, "split", argv, config, outputs);
    std::printf("wrote %s\n", (out_dir / "blocks.csv").string().c_str());
    return 0;
}

int cmd_gen_synth(const std::vector<std::string>& argv, std::uint32_t fields,
                  std::uint32_t card, std::uint32_t blocks, std::uint32_t block_size,
                  double drift, std::uint64_t seed, std::uint32_t planted_dim,
                  double base_rate, double logit_std, bool with_values,
                  const std::string& out_path, const std::string& out_dir_s) {
    const fs::path out_dir(out_dir_s);
    fs::create_directories(out_dir);
    const fs::path data_path = out_path.empty() ? out_dir / "synthetic.ffm" : fs::path(out_path);

    ffm::SyntheticSpec spec;
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
    const ffm::SyntheticData synth = ffm::gen_synthetic(spec);

    std::ofstream f(data_path);
    if (!f) throw ffm::DataError("cannot open for writing: " + data_path.string());
    for (const ffm::FeatureVector& x : synth.data.examples) ffm::write_example(f, x);
    f.close();

    ordered_json config;
    config["fields"] = fields;
    config["card"] = card;
    config["blocks"] = blocks;
    config["block_size"] = block_size;
    config["drift"] = drift;
    config["seed"] = seed;
    config["planted_dim"] = planted_dim;
    config["base_rate"] = base_rate;
    config["logit_std"] = logit_std;
    config["with_values"] = with_values;
    ordered_json outputs;
    outputs["data"] = data_path.string();
    write_manifest(out_dir, "gen-synth", argv, config, outputs);
    std::printf("wrote %zu examples to %s\n", synth.data.examples.size(),
                data_path.string().c_str());
    return 0;
}

int cmd_rerun(const std::string& manifest_path) {
    std::ifstream f(manifest_path);
    if (!f) throw ffm::DataError("cannot open: " + manifest_path);
    ordered_json m;
    try {
        f >> m;
    } catch (const std::exception& e) {
        throw ffm::DataError("bad manifest: " + std::string(e.what()));
    }
    if (!m.contains("argv") || !m["argv"].is_array())
        throw ffm::DataError("manifest has no argv array");
    std::vector<std::string> argv;
    for (const auto& a : m["argv"]) argv.push_back(a.get<std::string>());
    return run(argv);
}

int run(const std::vector<std::string>& args) {
    CLI::App app{"FFM response-rate models: training, metrics, simulated "
                 "distributed training, and warm-start experiments"};
    app.require_subcommand(1);

    // train
    auto* train_cmd = app.add_subcommand("train", "Train one model with early stopping");
    ModelFlags train_mf;
    train_mf.attach(train_cmd);
    std::string train_data, train_val, train_out = ".";
    std::uint32_t train_epochs = 200, train_threads = default_threads();
    bool save_premature = false;
    train_cmd->add_option("--data", train_data, "Training examples")->required();
    train_cmd->add_option("--val", train_val, "Validation examples")->required();
    train_cmd->add_option("--epochs", train_epochs, "Epoch cap");
    train_cmd->add_option("--threads", train_threads, "Racy update workers");
    train_cmd->add_option("--out-dir", train_out, "Output directory");
    train_cmd->add_flag("--save-premature", save_premature, "Also write premature.ffm");

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "Metric report (LL, NLL, Utility) as JSON");
    std::string eval_model, eval_data, eval_out = ".";
    std::vector<double> eval_betas;
    std::uint32_t eval_resamples = 1000;
    double eval_level = 0.90;
    std::uint64_t eval_ci_seed = 1;
    bool eval_unweighted = false;
    eval_cmd->add_option("--model", eval_model, "Model file")->required();
    eval_cmd->add_option("--data", eval_data, "Test examples")->required();
    eval_cmd->add_option("--beta", eval_betas, "Utility beta (repeatable)");
    eval_cmd->add_option("--resamples", eval_resamples, "Bootstrap resamples (0 disables)");
    eval_cmd->add_option("--level", eval_level, "CI level");
    eval_cmd->add_option("--ci-seed", eval_ci_seed, "Bootstrap seed");
    eval_cmd->add_flag("--unweighted-utility", eval_unweighted,
                       "Ignore example weights in the utility sum");
    eval_cmd->add_option("--out-dir", eval_out, "Output directory");

    // predict
    auto* pred_cmd = app.add_subcommand("predict", "Batch predictions or --bench timing");
    std::string pred_model, pred_data, pred_out = ".", pred_ks = "1,2,4,8";
    bool pred_bench = false;
    std::uint32_t pred_fields = 10, pred_examples = 2000, pred_repeats = 50;
    std::uint64_t pred_d = 1 << 18, pred_seed = 1;
    pred_cmd->add_option("--model", pred_model, "Model file");
    pred_cmd->add_option("--data", pred_data, "Examples to score");
    pred_cmd->add_flag("--bench", pred_bench, "Time predictions across latent dims");
    pred_cmd->add_option("--fields", pred_fields, "Bench: fields per example");
    pred_cmd->add_option("--d", pred_d, "Bench: hash space");
    pred_cmd->add_option("--k-list", pred_ks, "Bench: latent dims, comma separated");
    pred_cmd->add_option("--examples", pred_examples, "Bench: example count");
    pred_cmd->add_option("--repeats", pred_repeats, "Bench: passes over the examples");
    pred_cmd->add_option("--seed", pred_seed, "Bench: RNG seed");
    pred_cmd->add_option("--out-dir", pred_out, "Output directory");

    // ipm-sim
    auto* ipm_cmd = app.add_subcommand("ipm-sim", "Simulated iterative parameter mixing sweep");
    ModelFlags ipm_mf;
    ipm_mf.attach(ipm_cmd);
    std::string ipm_data, ipm_val, ipm_machines = "1", ipm_etas = "0", ipm_variants = "improved";
    std::string ipm_out = ".";
    std::uint32_t ipm_epochs = 200, ipm_threads = default_threads();
    bool ipm_no_early_stop = false;
    ipm_cmd->add_option("--data", ipm_data, "Training examples")->required();
    ipm_cmd->add_option("--val", ipm_val, "Validation examples")->required();
    ipm_cmd->add_option("--machines", ipm_machines, "Machine counts, comma separated");
    ipm_cmd->add_option("--eta-list", ipm_etas,
                        "Learning rates, comma separated (0 keeps --eta)");
    ipm_cmd->add_option("--variant", ipm_variants, "naive, improved, or both comma separated");
    ipm_cmd->add_option("--epochs", ipm_epochs, "Epoch cap");
    ipm_cmd->add_flag("--no-early-stop", ipm_no_early_stop, "Always run to the cap");
    ipm_cmd->add_option("--threads", ipm_threads, "Validation evaluation workers");
    ipm_cmd->add_option("--out-dir", ipm_out, "Output directory");

    // rolling
    auto* roll_cmd = app.add_subcommand("rolling", "Rolling warm-start comparison");
    ModelFlags roll_mf;
    roll_mf.attach(roll_cmd);
    std::string roll_data, roll_out = ".";
    std::uint32_t roll_blocks = 90, roll_train = 44, roll_val = 1, roll_test = 1;
    std::uint32_t roll_epochs = 200, roll_threads = default_threads(), roll_ci = 1000;
    bool roll_reset = false;
    std::vector<std::string> roll_plans;
    roll_cmd->add_option("--data", roll_data, "Examples, temporally ordered")->required();
    roll_cmd->add_option("--blocks", roll_blocks, "Number of blocks");
    roll_cmd->add_option("--train-blocks", roll_train, "Train window in blocks");
    roll_cmd->add_option("--val-blocks", roll_val, "Validation window in blocks");
    roll_cmd->add_option("--test-blocks", roll_test, "Test window in blocks");
    roll_cmd->add_option("--plan", roll_plans,
                         "Plan seeding[:train_size], e.g. premature:4 (repeatable)");
    roll_cmd->add_option("--epochs", roll_epochs, "Epoch cap per step");
    roll_cmd->add_option("--threads", roll_threads, "Trainer threads");
    roll_cmd->add_flag("--reset-adagrad", roll_reset, "Seed weights only, reset G");
    roll_cmd->add_option("--ci-resamples", roll_ci, "Bootstrap resamples over steps");
    roll_cmd->add_option("--out-dir", roll_out, "Output directory");

    // split
    auto* split_cmd = app.add_subcommand("split", "Write a block index sidecar CSV");
    std::string split_data, split_out = ".";
    std::uint32_t split_fields = 0, split_blocks_n = 90;
    split_cmd->add_option("--data", split_data, "Examples")->required();
    split_cmd->add_option("--fields", split_fields, "Number of fields F")->required();
    split_cmd->add_option("--blocks", split_blocks_n, "Number of blocks");
    split_cmd->add_option("--out-dir", split_out, "Output directory");

    // gen-synth
    auto* gen_cmd = app.add_subcommand("gen-synth", "Generate planted-model synthetic data");
    std::uint32_t gen_fields = 8, gen_card = 100, gen_blocks = 90, gen_block_size = 1000;
    std::uint32_t gen_planted = 4;
    double gen_drift = 0.0, gen_base = 0.3, gen_logit_std = 1.5;
    std::uint64_t gen_seed = 1;
    bool gen_values = false;
    std::string gen_out_path, gen_out_dir = ".";
    gen_cmd->add_option("--fields", gen_fields, "Number of fields");
    gen_cmd->add_option("--card", gen_card, "Cardinality per field");
    gen_cmd->add_option("--blocks", gen_blocks, "Number of blocks");
    gen_cmd->add_option("--block-size", gen_block_size, "Examples per block");
    gen_cmd->add_option("--drift", gen_drift, "Embedding random-walk rate per block");
    gen_cmd->add_option("--seed", gen_seed, "Generator seed");
    gen_cmd->add_option("--planted-dim", gen_planted, "Planted latent dimension");
    gen_cmd->add_option("--base-rate", gen_base, "Positive rate of the planted model");
    gen_cmd->add_option("--logit-std", gen_logit_std, "Target logit spread");
    gen_cmd->add_flag("--with-values", gen_values, "Emit per-example cost and reward");
    gen_cmd->add_option("--out", gen_out_path, "Dataset path (default <out-dir>/synthetic.ffm)");
    gen_cmd->add_option("--out-dir", gen_out_dir, "Output directory");

    // rerun
    auto* rerun_cmd = app.add_subcommand("rerun", "Replay a run from its manifest");
    std::string rerun_manifest;
    rerun_cmd->add_option("manifest", rerun_manifest, "run_manifest.json path")->required();

    try {
        // CLI11 consumes the vector back to front
        app.parse(std::vector<std::string>(args.rbegin(), args.rend()));
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    if (train_cmd->parsed())
        return cmd_train(args, train_cmd, train_mf, train_data, train_val, train_epochs,
                         train_threads, train_out, save_premature);
    if (eval_cmd->parsed())
        return cmd_eval(args, eval_model, eval_data, eval_betas, eval_resamples,
                        eval_level, eval_ci_seed, eval_unweighted, eval_out);
    if (pred_cmd->parsed())
        return cmd_predict(args, pred_model, pred_data, pred_bench, pred_fields, pred_d,
                           pred_ks, pred_examples, pred_repeats, pred_seed, pred_out);
    if (ipm_cmd->parsed())
        return cmd_ipm_sim(args, ipm_mf, ipm_data, ipm_val, ipm_machines, ipm_etas,
                           ipm_variants, ipm_epochs, ipm_no_early_stop, ipm_threads,
                           ipm_out);
    if (roll_cmd->parsed())
        return cmd_rolling(args, roll_mf, roll_data, roll_blocks, roll_train, roll_val,
                           roll_test, roll_plans, roll_epochs, roll_threads, roll_reset,
                           roll_ci, roll_out);
    if (split_cmd->parsed())
        return cmd_split(args, split_data, split_fields, split_blocks_n, split_out);
    if (gen_cmd->parsed())
        return cmd_gen_synth(args, gen_fields, gen_card, gen_blocks, gen_block_size,
                             gen_drift, gen_seed, gen_planted, gen_base, gen_logit_std,
                             gen_values, gen_out_path, gen_out_dir);
    if (rerun_cmd->parsed()) return cmd_rerun(rerun_manifest);
    return 2;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run(std::vector<std::string>(argv + 1, argv + argc));
    } catch (const ffm::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const ffm::DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 3;
    } catch (const ffm::NumericalError& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return 4;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
