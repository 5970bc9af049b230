#pragma once

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "bigfive/forest.hpp"
#include "bigfive/impute.hpp"

namespace bigfive {

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

double cohen_kappa(const std::vector<TraitClass>& truth, const std::vector<TraitClass>& pred);

struct McNemarResult {
    long b = 0;  // first run correct, second wrong
    long c = 0;  // first run wrong, second correct
    double statistic = 0;  // continuity-corrected chi-square, clamped at 0
    double p_value = 1;
    bool exact = false;  // binomial path (b + c < 25)
    bool no_discordant = false;
    std::size_t n_pairs = 0;
};

// ---------------------------------------------------------------------------
// Evaluation runs
// ---------------------------------------------------------------------------

struct EvalInstance {
    std::string participant_id;
    int repeat = 0;
    TraitClass truth = TraitClass::Low;
    TraitClass pred = TraitClass::Low;
};

struct EvalRun {
    std::string method;
    Trait trait = Trait::Extraversion;
    std::vector<EvalInstance> instances;
    double accuracy = 0;  // instance-weighted over all repeats
    double kappa = 0;     // pooled confusion matrix
};

// Predictions paired on (participant, repeat); keys present in only one run
// are ignored. b + c = 0 reports p = 1 with the no_discordant flag rather
// than an error.
McNemarResult mcnemar(const EvalRun& run_a, const EvalRun& run_b);

struct FoldAudit {
    int repeat = 0;
    std::string fold;  // country code (method 1) or subset index (method 2)
    std::size_t train_n = 0;
    std::size_t test_n = 0;
    bool train_contains_test_group = false;  // must stay false for method 1
};

struct MethodResult {
    std::array<EvalRun, kTraitCount> runs;
    std::vector<FoldAudit> audits;
};

struct EvalParams {
    ForestParams forest;
    int method1_repeats = 10;
    int method2_repeats = 15;
    std::size_t spain_subsample_n = 0;  // 0 = smallest country count
    std::uint64_t seed = 0;
    int n_threads = 1;
};

// Optional per-repeat row selection (demographic balancing); identity when
// absent. Rows index the cohort passed to the method.
using RepeatSelector = std::function<std::vector<std::size_t>(int repeat)>;

// Method 1, leave-one-country-out: per repeat the Spanish rows are sampled
// down to the smallest country's size, then every country in turn forms the
// test fold while the other four train. Country flags never enter the
// feature set here.
MethodResult method1_loco(const CohortMatrix& cohort, const EvalParams& params,
                          const RepeatSelector& selector = {});

// Method 2, leave-one-subset-out: same repeat-level population (the Spain
// subsample is shared with method 1's repeat), but test folds are random
// subsets sized like the per-country folds, and the five binary country
// flags join the features.
MethodResult method2_loso(const CohortMatrix& cohort, const EvalParams& params,
                          const RepeatSelector& selector = {});

// ---------------------------------------------------------------------------
// Demographic balancing and population filters
// ---------------------------------------------------------------------------

enum class BalanceAxis { Gender, Age };

// Per-repeat row subsets: gender keeps the minority and downsamples the
// majority to its size; age downsamples only the largest bracket to the
// smallest bracket's size. Throws EmptyStratum when a stratum is empty.
std::vector<std::vector<std::size_t>> balanced_subsets(const CohortMatrix& cohort,
                                                       BalanceAxis axis, int repeats,
                                                       std::uint64_t seed);

RepeatSelector balanced_selector(const CohortMatrix& cohort, BalanceAxis axis, int repeats,
                                 std::uint64_t seed);

CohortMatrix population_filter(const CohortMatrix& cohort,
                               const std::function<bool(const Demographics&)>& predicate);

bool is_student(const Demographics& demo);

// ---------------------------------------------------------------------------
// Importance aggregation (leave-one-instance-out + RFE)
// ---------------------------------------------------------------------------

struct RfeParams {
    std::size_t target_k = 50;
    double drop_frac = 0.10;
};

struct ImportanceRow {
    std::string population;
    Trait trait = Trait::Extraversion;
    std::array<double, kCategoryCount> category_weight{};  // sums to 1
    std::array<DayType, kCategoryCount> dominant_daytype{};
};

// Sequentially excludes one instance, runs RFE + a final fit on the
// survivors, and accumulates the surviving features' importances; weights
// are summed per data category and normalized to 1. Throws TooSmall for
// populations under 10.
ImportanceRow importance_by_category(const CohortMatrix& cohort, const std::string& population,
                                     Trait trait, const EvalParams& params,
                                     const RfeParams& rfe_params = {});

// ---------------------------------------------------------------------------
// Distribution export
// ---------------------------------------------------------------------------

struct DistributionRow {
    Country country;
    std::string feature;
    double bin_lo = 0;
    double bin_hi = 0;
    double mass = 0;
};

// Histograms over shared bin edges (global min..max), normalized to sum 1
// within each country. Missing cells are skipped. Throws UnknownFeature.
std::vector<DistributionRow> feature_distributions(const CohortMatrix& cohort,
                                                   const std::vector<std::string>& features,
                                                   int bins = 20);

}  // namespace bigfive
