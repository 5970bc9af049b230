#include "bigfive/forest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "bigfive/error.hpp"
#include "bigfive/parallel.hpp"
#include "bigfive/rng.hpp"

namespace bigfive {

namespace {

struct TreeBuilder {
    const std::vector<double>& X;
    const std::vector<TraitClass>& y;
    std::size_t n;
    std::size_t d;
    const ForestParams& params;
    int mtry;
    Rng rng;

    Tree tree;
    std::vector<double> importance;  // unnormalized impurity decrease
    std::vector<int> rows;           // working sample, partitioned in place
    std::vector<int> feature_perm;
    std::vector<std::pair<double, std::uint8_t>> scratch;
    std::size_t n_root = 0;

    TreeBuilder(const std::vector<double>& X_, const std::vector<TraitClass>& y_,
                std::size_t n_, std::size_t d_, const ForestParams& params_, int mtry_,
                std::uint64_t seed)
        : X(X_), y(y_), n(n_), d(d_), params(params_), mtry(mtry_), rng(seed) {
        importance.assign(d, 0.0);
        feature_perm.resize(d);
        for (std::size_t j = 0; j < d; ++j) feature_perm[j] = static_cast<int>(j);
    }

    static double gini(std::size_t n_high, std::size_t total) {
        if (total == 0) return 0;
        const double p = static_cast<double>(n_high) / static_cast<double>(total);
        return 2.0 * p * (1.0 - p);
    }

    void build() {
        rows.resize(n);
        if (params.bootstrap) {
            for (std::size_t i = 0; i < n; ++i)
                rows[i] = static_cast<int>(rng.uniform_int(n));
        } else {
            for (std::size_t i = 0; i < n; ++i) rows[i] = static_cast<int>(i);
        }
        n_root = n;
        grow(0, n, 0);
    }

    // returns the node index for rows[begin, end)
    int grow(std::size_t begin, std::size_t end, int depth) {
        const std::size_t count = end - begin;
        std::size_t n_high = 0;
        for (std::size_t i = begin; i < end; ++i)
            if (y[static_cast<std::size_t>(rows[i])] == TraitClass::High) ++n_high;

        const int node_index = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();
        tree.nodes[node_index].n_samples = static_cast<int>(count);
        tree.nodes[node_index].high_fraction =
            static_cast<double>(n_high) / static_cast<double>(count);

        const bool depth_capped = params.max_depth > 0 && depth >= params.max_depth;
        if (n_high == 0 || n_high == count || depth_capped ||
            count < 2 * static_cast<std::size_t>(params.min_leaf))
            return node_index;

        const double parent_impurity = gini(n_high, count);

        int best_feature = -1;
        double best_threshold = 0;
        double best_decrease = 0;

        for (int c = 0; c < mtry; ++c) {
            const std::size_t swap_with =
                static_cast<std::size_t>(c) + rng.uniform_int(d - static_cast<std::size_t>(c));
            std::swap(feature_perm[static_cast<std::size_t>(c)], feature_perm[swap_with]);
            const int f = feature_perm[static_cast<std::size_t>(c)];

            scratch.clear();
            for (std::size_t i = begin; i < end; ++i) {
                const std::size_t r = static_cast<std::size_t>(rows[i]);
                scratch.emplace_back(X[r * d + static_cast<std::size_t>(f)],
                                     y[r] == TraitClass::High ? 1 : 0);
            }
            std::sort(scratch.begin(), scratch.end());

            std::size_t left_n = 0, left_high = 0;
            for (std::size_t i = 0; i + 1 < scratch.size(); ++i) {
                ++left_n;
                left_high += scratch[i].second;
                if (scratch[i].first == scratch[i + 1].first) continue;
                const std::size_t right_n = count - left_n;
                if (left_n < static_cast<std::size_t>(params.min_leaf) ||
                    right_n < static_cast<std::size_t>(params.min_leaf))
                    continue;
                const double wl = static_cast<double>(left_n) / static_cast<double>(count);
                const double decrease = parent_impurity -
                                        wl * gini(left_high, left_n) -
                                        (1.0 - wl) * gini(n_high - left_high, right_n);
                if (decrease <= 0) continue;
                const double threshold = 0.5 * (scratch[i].first + scratch[i + 1].first);
                const bool better =
                    decrease > best_decrease ||
                    (decrease == best_decrease &&
                     (best_feature < 0 || f < best_feature ||
                      (f == best_feature && threshold < best_threshold)));
                if (better) {
                    best_decrease = decrease;
                    best_feature = f;
                    best_threshold = threshold;
                }
            }
        }

        if (best_feature < 0) return node_index;

        importance[static_cast<std::size_t>(best_feature)] +=
            (static_cast<double>(count) / static_cast<double>(n_root)) * best_decrease;

        const double threshold = best_threshold;
        const std::size_t f = static_cast<std::size_t>(best_feature);
        auto mid_it = std::partition(
            rows.begin() + static_cast<std::ptrdiff_t>(begin),
            rows.begin() + static_cast<std::ptrdiff_t>(end),
            [&](int r) { return X[static_cast<std::size_t>(r) * d + f] <= threshold; });
        const std::size_t mid =
            static_cast<std::size_t>(mid_it - rows.begin());

        tree.nodes[node_index].feature = best_feature;
        tree.nodes[node_index].threshold = threshold;
        const int left = grow(begin, mid, depth + 1);
        tree.nodes[node_index].left = left;
        const int right = grow(mid, end, depth + 1);
        tree.nodes[node_index].right = right;
        return node_index;
    }
};

double leaf_fraction(const Tree& tree, const double* row, std::size_t d) {
    int node = 0;
    while (tree.nodes[static_cast<std::size_t>(node)].feature >= 0) {
        const TreeNode& nd = tree.nodes[static_cast<std::size_t>(node)];
        node = row[nd.feature] <= nd.threshold ? nd.left : nd.right;
    }
    return tree.nodes[static_cast<std::size_t>(node)].high_fraction;
}

std::string fmt(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

}  // namespace

ForestModel fit_forest(const std::vector<double>& X, const std::vector<TraitClass>& y,
                       std::size_t n, std::size_t d, const ForestParams& params,
                       const std::vector<std::string>* feature_names) {
    if (n == 0 || d == 0) throw InvalidParam("empty training data");
    if (X.size() != n * d) throw InvalidParam("X size does not match n*d");
    if (y.size() != n) throw InvalidParam("y size does not match n");
    if (params.n_trees < 1) throw InvalidParam("n_trees must be >= 1");

    std::size_t n_high = 0;
    for (TraitClass c : y)
        if (c == TraitClass::High) ++n_high;
    if (n_high == 0 || n_high == n) throw SingleClass("training labels are constant");

    int mtry = params.features_per_split;
    if (mtry <= 0) mtry = std::max(1, static_cast<int>(std::sqrt(static_cast<double>(d))));
    if (mtry > static_cast<int>(d)) mtry = static_cast<int>(d);

    ForestModel model;
    model.n_features = d;
    if (feature_names) model.feature_names = *feature_names;
    model.trees.resize(static_cast<std::size_t>(params.n_trees));

    std::vector<std::vector<double>> tree_importance(
        static_cast<std::size_t>(params.n_trees));

    parallel_for(static_cast<std::size_t>(params.n_trees), params.n_threads,
                 [&](std::size_t t) {
                     TreeBuilder builder(X, y, n, d, params, mtry,
                                         derive_seed(params.seed, "tree", t));
                     builder.build();
                     model.trees[t] = std::move(builder.tree);
                     tree_importance[t] = std::move(builder.importance);
                 });

    model.importances.assign(d, 0.0);
    for (const auto& imp : tree_importance)
        for (std::size_t j = 0; j < d; ++j) model.importances[j] += imp[j];
    double total = 0;
    for (double v : model.importances) total += v;
    if (total > 0)
        for (double& v : model.importances) v /= total;
    return model;
}

std::vector<TraitClass> predict_forest(const ForestModel& model,
                                       const std::vector<double>& X, std::size_t n,
                                       std::size_t d,
                                       const std::vector<std::string>* feature_names,
                                       std::vector<double>* fractions) {
    if (d != model.n_features)
        throw SchemaMismatch("expected " + std::to_string(model.n_features) +
                             " features, got " + std::to_string(d));
    if (feature_names && !model.feature_names.empty() &&
        *feature_names != model.feature_names)
        throw SchemaMismatch("feature names differ from training schema");
    if (X.size() != n * d) throw InvalidParam("X size does not match n*d");

    std::vector<TraitClass> labels(n);
    if (fractions) fractions->assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = X.data() + i * d;
        std::size_t votes_high = 0;
        double fraction_sum = 0;
        for (const Tree& tree : model.trees) {
            const double frac = leaf_fraction(tree, row, d);
            fraction_sum += frac;
            if (frac > 0.5) ++votes_high;
        }
        labels[i] = 2 * votes_high > model.trees.size() ? TraitClass::High : TraitClass::Low;
        if (fractions)
            (*fractions)[i] = fraction_sum / static_cast<double>(model.trees.size());
    }
    return labels;
}

std::vector<std::size_t> rfe(const std::vector<double>& X, const std::vector<TraitClass>& y,
                             std::size_t n, std::size_t d, const ForestParams& params,
                             std::size_t target_k, double drop_frac) {
    if (drop_frac <= 0 || drop_frac >= 1)
        throw InvalidParam("drop_frac must be in (0,1)");
    if (target_k < 1) throw InvalidParam("target_k must be >= 1");

    std::vector<std::size_t> current(d);
    for (std::size_t j = 0; j < d; ++j) current[j] = j;

    std::vector<double> sub;
    int round = 0;
    while (current.size() > target_k) {
        const std::size_t d_cur = current.size();
        sub.resize(n * d_cur);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < d_cur; ++j)
                sub[i * d_cur + j] = X[i * d + current[j]];

        ForestParams round_params = params;
        round_params.seed = derive_seed(params.seed, "rfe", static_cast<std::uint64_t>(round));
        ForestModel model = fit_forest(sub, y, n, d_cur, round_params);

        std::size_t drop = static_cast<std::size_t>(
            std::ceil(drop_frac * static_cast<double>(d_cur)));
        drop = std::min(drop, d_cur - target_k);
        if (drop == 0) drop = 1;

        // rank columns: lowest importance first; ties drop the higher
        // original index so low-index features persist
        std::vector<std::size_t> order(d_cur);
        for (std::size_t j = 0; j < d_cur; ++j) order[j] = j;
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            if (model.importances[a] != model.importances[b])
                return model.importances[a] < model.importances[b];
            return current[a] > current[b];
        });

        std::vector<bool> dropped(d_cur, false);
        for (std::size_t k = 0; k < drop; ++k) dropped[order[k]] = true;
        std::vector<std::size_t> next;
        next.reserve(d_cur - drop);
        for (std::size_t j = 0; j < d_cur; ++j)
            if (!dropped[j]) next.push_back(current[j]);
        current = std::move(next);
        ++round;
    }
    return current;
}

std::string ForestModel::export_text() const {
    std::string out;
    out += "forest n_features=" + std::to_string(n_features) +
           " n_trees=" + std::to_string(trees.size()) + "\n";
    out += "importances";
    for (double v : importances) out += " " + fmt(v);
    out += "\n";
    for (std::size_t t = 0; t < trees.size(); ++t) {
        out += "tree " + std::to_string(t) + "\n";
        const auto& nodes = trees[t].nodes;
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            const TreeNode& nd = nodes[i];
            out += "  node " + std::to_string(i);
            if (nd.feature >= 0) {
                out += " split f" + std::to_string(nd.feature) + " <= " + fmt(nd.threshold) +
                       " left=" + std::to_string(nd.left) +
                       " right=" + std::to_string(nd.right);
            } else {
                out += " leaf high_fraction=" + fmt(nd.high_fraction);
            }
            out += " n=" + std::to_string(nd.n_samples) + "\n";
        }
    }
    return out;
}

}  // namespace bigfive
