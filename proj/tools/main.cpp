#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bigfive/pipeline.hpp"

namespace {

struct CliOptions {
    std::string config_path;
    std::string out_dir;
    std::string manifest;
    std::vector<std::string> populations;
    std::vector<std::string> methods;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int threads = 0;
    bool threads_set = false;
};

bigfive::RunConfig resolve(const CliOptions& opts) {
    bigfive::RunConfig config;
    if (!opts.config_path.empty()) config = bigfive::RunConfig::load(opts.config_path);
    if (opts.seed_set) {
        config.seed = opts.seed;
        config.synth.seed = opts.seed;
    }
    if (!opts.out_dir.empty()) config.out_dir = opts.out_dir;
    if (!opts.manifest.empty()) config.manifest_path = opts.manifest;
    if (!opts.populations.empty()) {
        for (const auto& p : opts.populations) {
            if (std::find(bigfive::kKnownPopulations.begin(), bigfive::kKnownPopulations.end(),
                          p) == bigfive::kKnownPopulations.end())
                throw bigfive::ConfigError("unknown population '" + p + "'");
        }
        config.populations = opts.populations;
    }
    if (!opts.methods.empty()) {
        for (const auto& m : opts.methods)
            if (m != "method1" && m != "method2")
                throw bigfive::ConfigError("unknown method '" + m + "'");
        config.methods = opts.methods;
    }
    if (opts.threads_set) config.threads = opts.threads;
    return config;
}

void add_common(CLI::App* cmd, CliOptions& opts) {
    cmd->add_option("--config", opts.config_path, "JSON run configuration");
    cmd->add_option("--out", opts.out_dir, "output directory (overrides config)");
    cmd->add_option("--manifest", opts.manifest, "cohort manifest path (overrides config)");
    cmd->add_option("--seed", opts.seed, "master seed (overrides config)")
        ->each([&opts](const std::string&) { opts.seed_set = true; });
    cmd->add_option("--threads", opts.threads, "worker threads (overrides config)")
        ->each([&opts](const std::string&) { opts.threads_set = true; });
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"behavioral-sensing Big Five classification pipeline"};
    app.require_subcommand(1);

    CliOptions opts;
    std::function<void(const bigfive::RunConfig&)> action;

    auto* synth = app.add_subcommand("synth", "generate a synthetic cohort");
    add_common(synth, opts);
    synth->callback([&] { action = bigfive::cmd_synth; });

    auto* features = app.add_subcommand("features", "extract the feature matrix");
    add_common(features, opts);
    features->callback([&] { action = bigfive::cmd_features; });

    auto* label = app.add_subcommand("label", "median-split trait labels");
    add_common(label, opts);
    label->callback([&] { action = bigfive::cmd_label; });

    auto* impute = app.add_subcommand("impute", "missingness filter + iterative imputation");
    add_common(impute, opts);
    impute->callback([&] { action = bigfive::cmd_impute; });

    auto* evaluate = app.add_subcommand("evaluate", "cross-validation protocols + McNemar");
    add_common(evaluate, opts);
    evaluate->add_option("--population", opts.populations,
                         "population filters (repeatable; overrides config)");
    evaluate->add_option("--method", opts.methods, "method1|method2 (repeatable)");
    evaluate->callback([&] { action = bigfive::cmd_evaluate; });

    auto* importance = app.add_subcommand("importance", "per-category importance aggregation");
    add_common(importance, opts);
    importance->callback([&] { action = bigfive::cmd_importance; });

    auto* distributions =
        app.add_subcommand("distributions", "per-country feature histograms");
    add_common(distributions, opts);
    distributions->callback([&] { action = bigfive::cmd_distributions; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        action(resolve(opts));
    } catch (const bigfive::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const bigfive::EmptyCohort& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
