#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "otfuse/config.hpp"
#include "otfuse/io.hpp"
#include "otfuse/runner.hpp"
#include "otfuse/verify.hpp"

namespace fs = std::filesystem;
using namespace otfuse;

namespace {

// exit codes: 0 success, 1 usage, 2 data error, 3 invariant failure
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitInvariant = 3;

int log_level() {
    const char* env = std::getenv("OTFUSE_LOG");
    return env ? std::atoi(env) : 0;
}

void log_info(const std::string& msg) {
    if (log_level() > 0) std::cerr << "[otfuse] " << msg << '\n';
}

struct CommonFlags {
    std::string config_path;
    std::string out_dir;
    long long seed = -1;
    double epsilon = -1.0;
    double lambda = -1.0;
    std::size_t parallel = 1;
    std::string format = "both";
};

ExperimentConfig resolve_config(const CommonFlags& flags) {
    ExperimentConfig cfg;
    if (!flags.config_path.empty()) cfg = ExperimentConfig::load(flags.config_path);
    if (flags.seed >= 0) cfg.seed = static_cast<std::uint64_t>(flags.seed);
    if (flags.epsilon > 0.0) cfg.sinkhorn.epsilon = flags.epsilon;
    if (flags.lambda >= 0.0) cfg.lambda = flags.lambda;
    if (!flags.out_dir.empty()) cfg.output_dir = flags.out_dir;
    cfg.validate();
    return cfg;
}

void add_common(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--config", flags.config_path, "experiment config file");
    cmd->add_option("--seed", flags.seed, "override the config seed");
    cmd->add_option("--out", flags.out_dir, "output directory");
    cmd->add_option("--epsilon", flags.epsilon, "entropic regularization");
    cmd->add_option("--lambda", flags.lambda, "fusion weight");
    cmd->add_option("--parallel", flags.parallel, "worker count");
    cmd->add_option("--format", flags.format, "report format: csv, svg, or both")
        ->check(CLI::IsMember({"csv", "svg", "both"}));
}

int cmd_generate(const CommonFlags& flags) {
    ExperimentConfig cfg = resolve_config(flags);
    fs::path dir = cfg.output_dir;
    log_info("generating dataset in " + dir.string());
    Dataset ds = write_dataset(cfg, dir);
    std::cout << "generated " << ds.entries.size() << " samples over "
              << cfg.attributes.combination_count() << " scene combinations in " << dir.string()
              << '\n';
    return 0;
}

int cmd_train_heads(const CommonFlags& flags, const std::string& dataset_dir,
                    std::size_t steps, double learning_rate) {
    Dataset ds = load_dataset(dataset_dir);
    ExperimentConfig cfg = ds.config;
    if (flags.seed >= 0) cfg.seed = static_cast<std::uint64_t>(flags.seed);
    fs::path out = flags.out_dir.empty() ? fs::path(dataset_dir) : fs::path(flags.out_dir);
    fs::create_directories(out);

    // labeled CLS embeddings from the training combinations only
    auto train_idx = cfg.train_combination_indices();
    std::vector<LabeledEmbedding> data;
    for (const DatasetEntry& e : ds.entries) {
        if (std::find(train_idx.begin(), train_idx.end(), e.combination) == train_idx.end())
            continue;
        SyntheticScene scene = load_scene(ds, e);
        auto [w, d, r] = cfg.attributes.combination_unpack(e.combination);
        data.push_back(LabeledEmbedding{std::move(scene.cls_embedding), w, d, r});
    }
    if (data.empty()) throw DataError("no training samples in dataset");

    // fresh heads, deterministically initialized
    auto init_head = [&](std::size_t categories, std::uint64_t stream) {
        LinearHead head;
        head.tau = 0.07;
        head.text_embeddings = Matrix(categories, cfg.embedding_dim);
        Rng rng(mix_seed(cfg.seed, 5000 + stream, 0));
        for (double& v : head.text_embeddings.data) v = 0.01 * rng.next_gaussian();
        return head;
    };
    LinearHead w0 = init_head(cfg.attributes.weather.size(), 0);
    LinearHead d0 = init_head(cfg.attributes.time_of_day.size(), 1);
    LinearHead r0 = init_head(cfg.attributes.road_type.size(), 2);

    log_info("training heads on " + std::to_string(data.size()) + " samples");
    TrainResult tr = train_heads(data, w0, d0, r0, steps, learning_rate);

    write_heads(out / "heads.txt", tr.weather, tr.time_of_day, tr.road_type);
    std::string trace = "step,loss\n";
    for (std::size_t i = 0; i < tr.loss_trace.size(); ++i)
        trace += std::to_string(i) + "," + std::to_string(tr.loss_trace[i]) + "\n";
    write_text_file(out / "loss_trace.csv", trace);
    std::cout << "trained heads for " << steps << " steps; final loss "
              << (tr.loss_trace.empty() ? 0.0 : tr.loss_trace.back()) << '\n';
    return 0;
}

int cmd_run(const CommonFlags& flags, const std::string& dataset_dir,
            const std::string& heads_path, bool dump_plans) {
    Dataset ds = load_dataset(dataset_dir);
    if (flags.seed >= 0) ds.config.seed = static_cast<std::uint64_t>(flags.seed);
    if (flags.epsilon > 0.0) ds.config.sinkhorn.epsilon = flags.epsilon;
    if (flags.lambda >= 0.0) ds.config.lambda = flags.lambda;
    fs::path out = flags.out_dir.empty() ? fs::path(dataset_dir) / "report" : fs::path(flags.out_dir);
    fs::create_directories(out);

    RunOptions opts;
    opts.parallel = flags.parallel;
    opts.dump_plans = dump_plans;
    opts.plan_dir = out / "plans";
    if (!heads_path.empty()) opts.heads_path = heads_path;

    log_info("running pipeline over " + std::to_string(ds.entries.size()) + " samples");
    RunOutput result = run_pipeline(ds, opts);

    if (flags.format == "csv" || flags.format == "both")
        write_text_file(out / "report.csv", result.report.to_csv());
    if (flags.format == "svg" || flags.format == "both")
        write_text_file(out / "report.svg", render_delta_svg(result.report));

    std::cout << result.report.to_csv();
    return 0;
}

int cmd_verify(const CommonFlags& flags, const std::string& inject) {
    VerifyOptions opts;
    opts.seed = flags.seed >= 0 ? static_cast<std::uint64_t>(flags.seed) : 42;
    opts.inject_cost_corruption = inject == "cost-range";
    if (!flags.out_dir.empty()) {
        fs::create_directories(flags.out_dir);
        opts.sweep_csv_path = (fs::path(flags.out_dir) / "epsilon_sweep.csv").string();
    }
    auto results = run_invariant_suite(opts);
    int failures = 0;
    for (const CheckResult& r : results) {
        std::cout << (r.pass ? "PASS" : "FAIL") << ' ' << r.name << " (" << r.detail << ")\n";
        if (!r.pass) ++failures;
    }
    std::cout << failures << " failed of " << results.size() << '\n';
    return failures == 0 ? 0 : kExitInvariant;
}

int cmd_dump_plan(const CommonFlags& flags, const std::string& dataset_dir) {
    CommonFlags f = flags;
    return cmd_run(f, dataset_dir, "", true);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"optimal-transport fusion pipeline for traversability segmentation"};
    app.require_subcommand(1);

    CommonFlags flags;
    std::string dataset_dir, heads_path, inject;
    std::size_t train_steps = 500;
    double learning_rate = 0.1;
    bool dump_plans = false;

    CLI::App* generate = app.add_subcommand("generate", "write a synthetic dataset");
    add_common(generate, flags);

    CLI::App* train = app.add_subcommand("train-heads", "train attribute classifier heads");
    add_common(train, flags);
    train->add_option("--dataset", dataset_dir, "dataset directory")->required();
    train->add_option("--steps", train_steps, "gradient steps");
    train->add_option("--learning-rate", learning_rate, "step size");

    CLI::App* run = app.add_subcommand("run", "run the fusion pipeline and report metrics");
    add_common(run, flags);
    run->add_option("--dataset", dataset_dir, "dataset directory")->required();
    run->add_option("--heads", heads_path, "trained heads file (default: bundled heads)");
    run->add_flag("--dump-plans", dump_plans, "write per-sample transport plans");

    CLI::App* verify = app.add_subcommand("verify", "run the invariant suites");
    add_common(verify, flags);
    verify->add_option("--inject", inject, "inject a fault (cost-range)");

    CLI::App* dump = app.add_subcommand("dump-plan", "run and dump transport plans");
    add_common(dump, flags);
    dump->add_option("--dataset", dataset_dir, "dataset directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (generate->parsed()) return cmd_generate(flags);
        if (train->parsed()) return cmd_train_heads(flags, dataset_dir, train_steps, learning_rate);
        if (run->parsed()) return cmd_run(flags, dataset_dir, heads_path, dump_plans);
        if (verify->parsed()) return cmd_verify(flags, inject);
        if (dump->parsed()) return cmd_dump_plan(flags, dataset_dir);
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kExitData;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitData;
    }
    return kExitUsage;
}
