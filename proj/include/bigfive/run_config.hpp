#pragma once

#include <string>
#include <vector>

#include "bigfive/eval.hpp"
#include "bigfive/features.hpp"
#include "bigfive/impute.hpp"
#include "bigfive/synth.hpp"

namespace bigfive {

// Batch configuration for the CLI. Every stage reads and writes artifacts
// under out_dir; all randomness derives from the single master seed.
struct RunConfig {
    std::uint64_t seed = 42;
    int threads = 1;
    std::string out_dir = "out";
    std::string manifest_path;  // empty = <out_dir>/manifest.csv

    GeneratorConfig synth;
    FeatureConfig features;
    double malformed_tolerance = 0.01;

    double missing_threshold = 0.30;
    ImputeParams impute;

    ForestParams forest;
    RfeParams rfe;

    int method1_repeats = 10;
    int method2_repeats = 15;
    int balance_repeats = 10;
    std::size_t spain_subsample_n = 0;

    std::vector<std::string> methods{"method1", "method2"};
    std::vector<std::string> populations{"all"};

    int dist_bins = 20;
    std::vector<std::string> dist_features;
    std::string dist_source = "features.csv";

    std::vector<std::string> importance_populations{"all"};
    std::vector<std::string> importance_traits;  // empty = all five

    std::string resolved_manifest() const;

    // Strict parse: unknown keys anywhere raise ConfigError naming the key.
    static RunConfig load(const std::string& path);
    static RunConfig from_json_text(const std::string& text, const std::string& origin);

    // Canonical serialization (sorted keys) echoed into the output directory.
    std::string echo_json() const;
};

extern const std::vector<std::string> kKnownPopulations;

}  // namespace bigfive
