#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bigfive/core_types.hpp"

namespace bigfive {

struct ForestParams {
    int n_trees = 100;
    int max_depth = 0;           // 0 = unlimited
    int min_leaf = 1;
    int features_per_split = 0;  // 0 = floor(sqrt(d))
    bool bootstrap = true;
    std::uint64_t seed = 0;
    int n_threads = 1;  // trees use per-index rng streams, so any value gives
                        // identical models
};

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0;
    int left = -1;
    int right = -1;
    double high_fraction = 0;  // share of High training rows at this node
    int n_samples = 0;
};

struct Tree {
    std::vector<TreeNode> nodes;  // nodes[0] is the root
};

struct ForestModel {
    std::vector<Tree> trees;
    std::vector<double> importances;  // normalized mean impurity decrease, sums to 1
    std::vector<std::string> feature_names;
    std::size_t n_features = 0;

    // human-readable dump of trees and importances; stable across runs
    std::string export_text() const;
};

// CART forest on bootstrap samples with Gini impurity and a random feature
// subset per split. Split thresholds sit midway between adjacent observed
// values; ties in impurity decrease resolve to the lowest feature index and
// then the lowest threshold. Throws SingleClass when y is constant.
ForestModel fit_forest(const std::vector<double>& X, const std::vector<TraitClass>& y,
                       std::size_t n, std::size_t d, const ForestParams& params,
                       const std::vector<std::string>* feature_names = nullptr);

// Majority vote across trees; an exact vote tie resolves to Low. Per-row mean
// leaf high-fractions land in *fractions when provided. Throws SchemaMismatch
// when the column count (or the names, when both sides carry them) differs
// from training.
std::vector<TraitClass> predict_forest(const ForestModel& model,
                                       const std::vector<double>& X, std::size_t n,
                                       std::size_t d,
                                       const std::vector<std::string>* feature_names = nullptr,
                                       std::vector<double>* fractions = nullptr);

// Recursive feature elimination: refit, then drop the lowest-importance
// ceil(drop_frac * d_current) columns until at most target_k remain. Returns
// surviving column indices in ascending order; if d <= target_k every column
// survives without a fit.
std::vector<std::size_t> rfe(const std::vector<double>& X, const std::vector<TraitClass>& y,
                             std::size_t n, std::size_t d, const ForestParams& params,
                             std::size_t target_k = 50, double drop_frac = 0.10);

}  // namespace bigfive
