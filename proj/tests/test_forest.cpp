#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "bigfive/forest.hpp"
#include "bigfive/rng.hpp"

using namespace bigfive;

namespace {

// rows separable on a single feature threshold
void separable_set(std::size_t n, std::size_t d, std::size_t informative, Rng& rng,
                   std::vector<double>& X, std::vector<TraitClass>& y) {
    X.assign(n * d, 0.0);
    y.assign(n, TraitClass::Low);
    for (std::size_t i = 0; i < n; ++i) {
        const bool high = i % 2 == 1;
        for (std::size_t j = 0; j < d; ++j) X[i * d + j] = rng.normal();
        X[i * d + informative] = high ? rng.uniform(1.0, 2.0) : rng.uniform(-2.0, -1.0);
        y[i] = high ? TraitClass::High : TraitClass::Low;
    }
}

double training_accuracy(const ForestModel& model, const std::vector<double>& X,
                         const std::vector<TraitClass>& y, std::size_t n, std::size_t d) {
    auto pred = predict_forest(model, X, n, d);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < n; ++i)
        if (pred[i] == y[i]) ++correct;
    return static_cast<double>(correct) / static_cast<double>(n);
}

}  // namespace

TEST_CASE("constant labels are rejected") {
    std::vector<double> X = {1, 2, 3, 4};
    std::vector<TraitClass> y(4, TraitClass::Low);
    ForestParams params;
    params.n_trees = 5;
    CHECK_THROWS_AS(fit_forest(X, y, 4, 1, params), SingleClass);
}

TEST_CASE("threshold-separable data trains to accuracy 1") {
    Rng rng(1);
    std::vector<double> X;
    std::vector<TraitClass> y;
    separable_set(60, 1, 0, rng, X, y);
    ForestParams params;
    params.n_trees = 30;
    params.seed = 9;
    ForestModel model = fit_forest(X, y, 60, 1, params);
    CHECK(training_accuracy(model, X, y, 60, 1) == doctest::Approx(1.0));
}

TEST_CASE("importances are non-negative and sum to 1") {
    Rng rng(2);
    std::vector<double> X;
    std::vector<TraitClass> y;
    separable_set(50, 6, 2, rng, X, y);
    ForestParams params;
    params.n_trees = 25;
    params.seed = 3;
    ForestModel model = fit_forest(X, y, 50, 6, params);
    double total = 0;
    for (double v : model.importances) {
        CHECK(v >= 0.0);
        total += v;
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("the planted feature wins the importance ranking in a seed majority") {
    int wins = 0;
    for (int repeat = 0; repeat < 20; ++repeat) {
        Rng rng(100 + repeat);
        std::vector<double> X;
        std::vector<TraitClass> y;
        separable_set(60, 3, 1, rng, X, y);
        ForestParams params;
        params.n_trees = 30;
        params.seed = static_cast<std::uint64_t>(repeat);
        ForestModel model = fit_forest(X, y, 60, 3, params);
        const auto best =
            std::max_element(model.importances.begin(), model.importances.end());
        if (best - model.importances.begin() == 1) ++wins;
    }
    CHECK(wins > 10);
}

TEST_CASE("a single-tree forest predicts that tree's leaf class") {
    Rng rng(4);
    std::vector<double> X;
    std::vector<TraitClass> y;
    separable_set(30, 2, 0, rng, X, y);
    ForestParams params;
    params.n_trees = 1;
    params.seed = 5;
    ForestModel model = fit_forest(X, y, 30, 2, params);
    REQUIRE(model.trees.size() == 1);
    for (std::size_t i = 0; i < 30; ++i) {
        std::vector<double> row(X.begin() + i * 2, X.begin() + (i + 1) * 2);
        std::vector<double> fractions;
        auto pred = predict_forest(model, row, 1, 2, nullptr, &fractions);
        const TraitClass leaf =
            fractions[0] > 0.5 ? TraitClass::High : TraitClass::Low;
        CHECK(pred[0] == leaf);
    }
}

TEST_CASE("an exact vote tie resolves to low") {
    // hand-built forest: two stub trees voting opposite ways
    ForestModel model;
    model.n_features = 1;
    Tree t1, t2;
    t1.nodes.push_back(TreeNode{-1, 0, -1, -1, 1.0, 10});  // votes high
    t2.nodes.push_back(TreeNode{-1, 0, -1, -1, 0.0, 10});  // votes low
    model.trees = {t1, t2};
    model.importances = {1.0};
    std::vector<double> X = {0.5};
    auto pred = predict_forest(model, X, 1, 1);
    CHECK(pred[0] == TraitClass::Low);
}

TEST_CASE("predict rejects a wrong schema") {
    Rng rng(6);
    std::vector<double> X;
    std::vector<TraitClass> y;
    separable_set(20, 3, 0, rng, X, y);
    ForestParams params;
    params.n_trees = 5;
    ForestModel model = fit_forest(X, y, 20, 3, params);
    std::vector<double> bad(20 * 2, 0.0);
    CHECK_THROWS_AS(predict_forest(model, bad, 20, 2), SchemaMismatch);

    std::vector<std::string> names = {"a", "b", "c"};
    std::vector<std::string> other = {"a", "c", "b"};
    ForestModel named = fit_forest(X, y, 20, 3, params, &names);
    CHECK_THROWS_AS(predict_forest(named, X, 20, 3, &other), SchemaMismatch);
    CHECK_NOTHROW(predict_forest(named, X, 20, 3, &names));
}

TEST_CASE("prediction is invariant under a feature permutation with schema mapping") {
    Rng rng(7);
    std::vector<double> X;
    std::vector<TraitClass> y;
    separable_set(40, 4, 2, rng, X, y);
    ForestParams params;
    params.n_trees = 15;
    params.seed = 2;
    ForestModel model = fit_forest(X, y, 40, 4, params);
    auto direct = predict_forest(model, X, 40, 4);

    // permute columns, then map them back before predicting
    const std::array<std::size_t, 4> perm = {2, 0, 3, 1};
    std::vector<double> permuted(40 * 4);
    for (std::size_t i = 0; i < 40; ++i)
        for (std::size_t j = 0; j < 4; ++j) permuted[i * 4 + perm[j]] = X[i * 4 + j];
    std::vector<double> mapped_back(40 * 4);
    for (std::size_t i = 0; i < 40; ++i)
        for (std::size_t j = 0; j < 4; ++j) mapped_back[i * 4 + j] = permuted[i * 4 + perm[j]];
    auto roundabout = predict_forest(model, mapped_back, 40, 4);
    CHECK(direct == roundabout);
}

TEST_CASE("duplicating every training row keeps training accuracy") {
    Rng rng(8);
    std::vector<double> X;
    std::vector<TraitClass> y;
    separable_set(40, 2, 0, rng, X, y);
    ForestParams params;
    params.n_trees = 20;
    params.seed = 11;
    ForestModel model = fit_forest(X, y, 40, 2, params);

    std::vector<double> X2(X);
    X2.insert(X2.end(), X.begin(), X.end());
    std::vector<TraitClass> y2(y);
    y2.insert(y2.end(), y.begin(), y.end());
    ForestModel doubled = fit_forest(X2, y2, 80, 2, params);
    CHECK(training_accuracy(model, X, y, 40, 2) ==
          doctest::Approx(training_accuracy(doubled, X2, y2, 80, 2)));
}

TEST_CASE("fit is bit-reproducible for a fixed seed and any thread count") {
    Rng rng(9);
    std::vector<double> X;
    std::vector<TraitClass> y;
    separable_set(50, 5, 1, rng, X, y);
    ForestParams params;
    params.n_trees = 12;
    params.seed = 77;
    params.n_threads = 1;
    ForestModel a = fit_forest(X, y, 50, 5, params);
    params.n_threads = 4;
    ForestModel b = fit_forest(X, y, 50, 5, params);
    CHECK(a.export_text() == b.export_text());

    params.seed = 78;
    ForestModel c = fit_forest(X, y, 50, 5, params);
    CHECK(a.export_text() != c.export_text());
}

TEST_CASE("every split threshold separates two observed values") {
    Rng rng(10);
    std::vector<double> X;
    std::vector<TraitClass> y;
    separable_set(40, 3, 0, rng, X, y);
    ForestParams params;
    params.n_trees = 10;
    params.seed = 13;
    ForestModel model = fit_forest(X, y, 40, 3, params);
    for (const Tree& tree : model.trees) {
        for (const TreeNode& node : tree.nodes) {
            if (node.feature < 0) continue;
            double below = -1e300, above = 1e300;
            for (std::size_t i = 0; i < 40; ++i) {
                const double v = X[i * 3 + static_cast<std::size_t>(node.feature)];
                if (v <= node.threshold) below = std::max(below, v);
                if (v > node.threshold) above = std::min(above, v);
            }
            CHECK(below < node.threshold);
            CHECK(node.threshold < above);
        }
    }
}

TEST_CASE("rfe reduces to the target in one round when d = target + 1") {
    Rng rng(11);
    std::vector<double> X;
    std::vector<TraitClass> y;
    separable_set(40, 6, 0, rng, X, y);
    ForestParams params;
    params.n_trees = 15;
    params.seed = 1;
    auto selected = rfe(X, y, 40, 6, params, 5, 0.10);
    CHECK(selected.size() == 5);
    CHECK(std::is_sorted(selected.begin(), selected.end()));
}

TEST_CASE("rfe keeps everything when d <= target") {
    std::vector<double> X = {0, 1, 1, 0, 0, 1, 1, 0};
    std::vector<TraitClass> y = {TraitClass::Low, TraitClass::High, TraitClass::Low,
                                 TraitClass::High};
    ForestParams params;
    params.n_trees = 3;
    auto selected = rfe(X, y, 4, 2, params, 10, 0.10);
    CHECK(selected == std::vector<std::size_t>{0, 1});
}

TEST_CASE("the planted feature survives rfe in nearly every seeded run") {
    int survived = 0;
    for (int repeat = 0; repeat < 20; ++repeat) {
        Rng rng(300 + repeat);
        std::vector<double> X;
        std::vector<TraitClass> y;
        separable_set(50, 40, 7, rng, X, y);
        ForestParams params;
        params.n_trees = 25;
        params.seed = static_cast<std::uint64_t>(repeat);
        auto selected = rfe(X, y, 50, 40, params, 5, 0.15);
        if (std::find(selected.begin(), selected.end(), 7) != selected.end()) ++survived;
    }
    CHECK(survived >= 18);
}

TEST_CASE("rfe rejects a zero drop fraction") {
    std::vector<double> X = {0, 1, 1, 0};
    std::vector<TraitClass> y = {TraitClass::Low, TraitClass::High};
    ForestParams params;
    CHECK_THROWS_AS(rfe(X, y, 2, 2, params, 1, 0.0), InvalidParam);
}
