#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "bigfive/core_types.hpp"

namespace bigfive {

enum class Keying : std::uint8_t { Positive, Reversed };

struct KeyItem {
    Trait trait;
    Keying keying;
};

// 50-item key: which trait each questionnaire item feeds and whether it is
// reverse-keyed. Exactly 10 items per trait.
struct ScoringKey {
    std::array<KeyItem, kQuestionnaireItems> items;

    void validate() const;  // throws Error when the 10-per-trait invariant fails

    // The bundled instrument: traits cycle E,A,C,N,O by item index; the first
    // five items of each trait are keyed positive, the last five reversed.
    static const ScoringKey& bundled();

    static ScoringKey load(const std::string& path);
    void save(const std::string& path) const;
};

// Item value = r for positive keying, 6-r for reversed; trait score = sum of
// its ten item values, so each trait lands in [10,50].
TraitScores score_traits(const std::array<int, kQuestionnaireItems>& responses,
                         const ScoringKey& key);

// Cronbach's alpha for one trait's 10 keyed item columns.
// item_matrix[participant][item], items already keyed (reversals applied).
double cronbach_alpha(const std::vector<std::array<double, 10>>& item_matrix);

// Keyed item columns for one trait, in item-index order.
std::vector<std::array<double, 10>> trait_item_matrix(
    const std::vector<Participant>& cohort, const ScoringKey& key, Trait trait);

struct TraitStats {
    double mean = 0;
    std::optional<double> std_dev;  // n-1; absent for a single participant
    double median = 0;
    double max = 0;
    double min = 0;
};

struct CohortTraitStats {
    std::array<TraitStats, kTraitCount> per_trait;
    std::size_t n = 0;
};

CohortTraitStats trait_stats(const std::vector<TraitScores>& scores);

}  // namespace bigfive
