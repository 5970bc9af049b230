#include "bigfive/psychometrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace bigfive {

void ScoringKey::validate() const {
    std::array<int, kTraitCount> counts{};
    for (const auto& item : items) counts[static_cast<int>(item.trait)]++;
    for (int c : counts)
        if (c != 10) throw Error("scoring key must have exactly 10 items per trait");
}

const ScoringKey& ScoringKey::bundled() {
    static const ScoringKey key = [] {
        ScoringKey k;
        for (int i = 0; i < kQuestionnaireItems; ++i) {
            k.items[i].trait = static_cast<Trait>(i % kTraitCount);
            k.items[i].keying = (i / kTraitCount) < 5 ? Keying::Positive : Keying::Reversed;
        }
        k.validate();
        return k;
    }();
    return key;
}

ScoringKey ScoringKey::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path, 0, "cannot open scoring key");
    ScoringKey key;
    std::array<bool, kQuestionnaireItems> seen{};
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        if (line_no == 1 && line.rfind("item,", 0) == 0) continue;  // header
        std::istringstream ss(line);
        std::string idx_s, trait_s, keying_s;
        if (!std::getline(ss, idx_s, ',') || !std::getline(ss, trait_s, ',') ||
            !std::getline(ss, keying_s))
            throw ParseError(path, line_no, "expected item,trait,keying");
        int idx = std::stoi(idx_s);
        if (idx < 1 || idx > kQuestionnaireItems)
            throw ParseError(path, line_no, "item index out of [1,50]");
        if (seen[idx - 1]) throw ParseError(path, line_no, "duplicate item index");
        seen[idx - 1] = true;
        key.items[idx - 1].trait = trait_from_string(trait_s);
        if (keying_s == "positive")
            key.items[idx - 1].keying = Keying::Positive;
        else if (keying_s == "reversed")
            key.items[idx - 1].keying = Keying::Reversed;
        else
            throw ParseError(path, line_no, "keying must be positive|reversed");
    }
    for (bool s : seen)
        if (!s) throw ParseError(path, 0, "scoring key incomplete: 50 items required");
    key.validate();
    return key;
}

void ScoringKey::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw Error("cannot write scoring key: " + path);
    out << "item,trait,keying\n";
    for (int i = 0; i < kQuestionnaireItems; ++i) {
        out << (i + 1) << ',' << to_string(items[i].trait) << ','
            << (items[i].keying == Keying::Positive ? "positive" : "reversed") << '\n';
    }
}

TraitScores score_traits(const std::array<int, kQuestionnaireItems>& responses,
                         const ScoringKey& key) {
    TraitScores scores;
    for (int i = 0; i < kQuestionnaireItems; ++i) {
        int r = responses[i];
        if (r < 1 || r > 5)
            throw BadResponse("response " + std::to_string(i + 1) + " out of [1,5]: " +
                              std::to_string(r));
        int value = key.items[i].keying == Keying::Positive ? r : 6 - r;
        scores[key.items[i].trait] += value;
    }
    return scores;
}

namespace {

// (mean, n-1 variance)
std::pair<double, double> mean_var(const std::vector<double>& v) {
    const std::size_t n = v.size();
    double mean = 0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(n);
    double ss = 0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return {mean, n > 1 ? ss / static_cast<double>(n - 1) : 0.0};
}

}  // namespace

double cronbach_alpha(const std::vector<std::array<double, 10>>& item_matrix) {
    constexpr int k = 10;
    const std::size_t n = item_matrix.size();
    if (n < 2) throw Error("cronbach_alpha needs at least 2 participants");

    double sum_item_var = 0;
    std::vector<double> column(n);
    for (int j = 0; j < k; ++j) {
        for (std::size_t i = 0; i < n; ++i) column[i] = item_matrix[i][j];
        sum_item_var += mean_var(column).second;
    }
    std::vector<double> totals(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (int j = 0; j < k; ++j) totals[i] += item_matrix[i][j];
    const double total_var = mean_var(totals).second;
    if (total_var == 0) throw ZeroVariance("total-score variance is zero");

    return (static_cast<double>(k) / (k - 1)) * (1.0 - sum_item_var / total_var);
}

std::vector<std::array<double, 10>> trait_item_matrix(
    const std::vector<Participant>& cohort, const ScoringKey& key, Trait trait) {
    std::vector<std::array<double, 10>> matrix;
    matrix.reserve(cohort.size());
    for (const auto& p : cohort) {
        std::array<double, 10> row{};
        int col = 0;
        for (int i = 0; i < kQuestionnaireItems; ++i) {
            if (key.items[i].trait != trait) continue;
            int r = p.responses[i];
            row[col++] = key.items[i].keying == Keying::Positive ? r : 6 - r;
        }
        matrix.push_back(row);
    }
    return matrix;
}

CohortTraitStats trait_stats(const std::vector<TraitScores>& scores) {
    if (scores.empty()) throw EmptyPopulation("trait_stats on empty population");
    CohortTraitStats stats;
    stats.n = scores.size();
    for (Trait t : kAllTraits) {
        std::vector<double> v(scores.size());
        for (std::size_t i = 0; i < scores.size(); ++i)
            v[i] = static_cast<double>(scores[i][t]);
        TraitStats& ts = stats.per_trait[static_cast<int>(t)];
        auto [mean, var] = mean_var(v);
        ts.mean = mean;
        if (v.size() >= 2) ts.std_dev = std::sqrt(var);
        ts.median = median_of(v);
        ts.max = *std::max_element(v.begin(), v.end());
        ts.min = *std::min_element(v.begin(), v.end());
    }
    return stats;
}

}  // namespace bigfive
