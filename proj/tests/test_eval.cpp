#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "bigfive/eval.hpp"
#include "bigfive/features.hpp"
#include "bigfive/rng.hpp"

using namespace bigfive;

namespace {

// fabricated labeled cohort; labels for every trait follow a hidden score,
// optionally expressed in feature column 0 (signal > 0)
CohortMatrix fake_cohort(const std::array<std::size_t, kCountryCount>& counts, std::size_t d,
                         double signal, std::uint64_t seed,
                         bool country_flip = false) {
    CohortMatrix m;
    for (std::size_t j = 0; j < d; ++j) m.feature_names.push_back("f" + std::to_string(j));
    Rng rng(seed);
    std::vector<double> hidden;
    std::size_t serial = 0;
    for (Country c : kAllCountries) {
        for (std::size_t k = 0; k < counts[static_cast<int>(c)]; ++k) {
            m.ids.push_back("p" + std::to_string(++serial));
            Demographics demo;
            demo.country = c;
            demo.gender = rng.bernoulli(0.4) ? Gender::Female : Gender::Male;
            demo.age_range = static_cast<AgeRange>(rng.uniform_int(3));
            demo.employment =
                rng.bernoulli(0.4) ? Employment::BachelorStudent : Employment::Employed;
            m.demographics.push_back(demo);
            m.scores.push_back({});
            const double h = rng.normal();
            hidden.push_back(h);
            const double flip =
                country_flip ? (static_cast<int>(c) % 2 == 0 ? 1.0 : -1.0) : 1.0;
            for (std::size_t j = 0; j < d; ++j) {
                double v = rng.normal();
                if (j == 0) v += signal * h * flip;
                m.values.push_back(v);
                m.missing.push_back(0);
            }
        }
    }
    // same label per trait (hidden > median)
    std::vector<double> sorted = hidden;
    std::sort(sorted.begin(), sorted.end());
    const double median = sorted[sorted.size() / 2];
    for (int t = 0; t < kTraitCount; ++t) {
        for (double h : hidden)
            m.labels[t].push_back(h <= median ? TraitClass::Low : TraitClass::High);
    }
    return m;
}

EvalRun run_from_flags(const std::vector<std::pair<bool, int>>& correct_with_repeat) {
    // truth is balanced; prediction correctness as requested
    EvalRun run;
    run.method = "stub";
    int serial = 0;
    for (auto [correct, repeat] : correct_with_repeat) {
        EvalInstance inst;
        inst.participant_id = "p" + std::to_string(serial++);
        inst.repeat = repeat;
        inst.truth = serial % 2 == 0 ? TraitClass::Low : TraitClass::High;
        inst.pred = correct ? inst.truth
                            : (inst.truth == TraitClass::Low ? TraitClass::High
                                                             : TraitClass::Low);
        run.instances.push_back(inst);
    }
    return run;
}

// pair of runs over shared keys with the requested discordance pattern
std::pair<EvalRun, EvalRun> paired_runs(long both_correct, long b, long c, long both_wrong) {
    std::vector<std::pair<bool, int>> a_flags, b_flags;
    for (long i = 0; i < both_correct; ++i) {
        a_flags.push_back({true, 0});
        b_flags.push_back({true, 0});
    }
    for (long i = 0; i < b; ++i) {
        a_flags.push_back({true, 0});
        b_flags.push_back({false, 0});
    }
    for (long i = 0; i < c; ++i) {
        a_flags.push_back({false, 0});
        b_flags.push_back({true, 0});
    }
    for (long i = 0; i < both_wrong; ++i) {
        a_flags.push_back({false, 0});
        b_flags.push_back({false, 0});
    }
    return {run_from_flags(a_flags), run_from_flags(b_flags)};
}

// Pascal-triangle enumeration oracle for the exact two-sided binomial
double binomial_two_sided_oracle(long b, long c) {
    const long n = b + c;
    std::vector<double> row = {1.0};
    for (long i = 1; i <= n; ++i) {
        std::vector<double> next(i + 1, 1.0);
        for (long j = 1; j < i; ++j) next[j] = row[j - 1] + row[j];
        row = std::move(next);
    }
    const long k = std::min(b, c);
    double tail = 0;
    for (long i = 0; i <= k; ++i) tail += row[i];
    return std::min(1.0, 2.0 * tail / std::pow(2.0, static_cast<double>(n)));
}

EvalParams fast_params(std::uint64_t seed) {
    EvalParams params;
    params.forest.n_trees = 20;
    params.method1_repeats = 2;
    params.method2_repeats = 2;
    params.seed = seed;
    return params;
}

}  // namespace

// ---------------------------------------------------------------------------
// Kappa
// ---------------------------------------------------------------------------

TEST_CASE("kappa: perfect agreement is 1") {
    std::vector<TraitClass> truth = {TraitClass::Low, TraitClass::High, TraitClass::Low,
                                     TraitClass::High};
    CHECK(cohen_kappa(truth, truth) == doctest::Approx(1.0));
}

TEST_CASE("kappa: constant prediction on balanced truth is 0") {
    std::vector<TraitClass> truth, pred;
    for (int i = 0; i < 40; ++i) {
        truth.push_back(i % 2 == 0 ? TraitClass::Low : TraitClass::High);
        pred.push_back(TraitClass::Low);
    }
    CHECK(cohen_kappa(truth, pred) == doctest::Approx(0.0));
}

TEST_CASE("kappa: TP=40 FN=20 FP=10 TN=30 gives 0.4") {
    std::vector<TraitClass> truth, pred;
    auto push = [&](TraitClass t, TraitClass p, int count) {
        for (int i = 0; i < count; ++i) {
            truth.push_back(t);
            pred.push_back(p);
        }
    };
    push(TraitClass::High, TraitClass::High, 40);  // TP
    push(TraitClass::High, TraitClass::Low, 20);   // FN
    push(TraitClass::Low, TraitClass::High, 10);   // FP
    push(TraitClass::Low, TraitClass::Low, 30);    // TN
    CHECK(cohen_kappa(truth, pred) == doctest::Approx(0.4).epsilon(1e-12));
}

TEST_CASE("kappa: single-class truth is degenerate") {
    std::vector<TraitClass> truth(10, TraitClass::Low);
    CHECK_THROWS_AS(cohen_kappa(truth, truth), DegenerateTruth);
}

// ---------------------------------------------------------------------------
// McNemar
// ---------------------------------------------------------------------------

TEST_CASE("mcnemar: symmetric discordance b=c=5") {
    auto [a, b] = paired_runs(10, 5, 5, 3);
    McNemarResult res = mcnemar(a, b);
    CHECK(res.b == 5);
    CHECK(res.c == 5);
    CHECK(res.statistic == doctest::Approx(0.0));
    CHECK(res.exact);
    CHECK(res.p_value == doctest::Approx(1.0));
}

TEST_CASE("mcnemar: b=10 c=2 exact binomial") {
    auto [a, b] = paired_runs(20, 10, 2, 5);
    McNemarResult res = mcnemar(a, b);
    CHECK(res.exact);
    CHECK(res.p_value == doctest::Approx(0.0386).epsilon(2e-2));
    CHECK(res.p_value == doctest::Approx(binomial_two_sided_oracle(10, 2)).epsilon(1e-12));
}

TEST_CASE("mcnemar: identical runs have no discordant pairs") {
    auto [a, b] = paired_runs(15, 0, 0, 5);
    McNemarResult res = mcnemar(a, b);
    CHECK(res.no_discordant);
    CHECK(res.p_value == doctest::Approx(1.0));
}

TEST_CASE("mcnemar: exact path equals brute-force enumeration for all b+c <= 25") {
    for (long n = 1; n < 25; ++n) {
        for (long b_count = 0; b_count <= n; ++b_count) {
            const long c_count = n - b_count;
            auto [a, b] = paired_runs(5, b_count, c_count, 2);
            McNemarResult res = mcnemar(a, b);
            CHECK(res.exact);
            CHECK(res.p_value ==
                  doctest::Approx(binomial_two_sided_oracle(b_count, c_count)).epsilon(1e-12));
        }
    }
}

TEST_CASE("mcnemar: large-sample path uses the corrected chi-square") {
    auto [a, b] = paired_runs(50, 30, 10, 10);
    McNemarResult res = mcnemar(a, b);
    CHECK_FALSE(res.exact);
    // (|30-10|-1)^2/40 = 9.025; chi2(1) sf ~ 0.00266
    CHECK(res.statistic == doctest::Approx(9.025));
    CHECK(res.p_value == doctest::Approx(0.00266).epsilon(0.01));
}

TEST_CASE("mcnemar pairs on (participant, repeat) and ignores unmatched keys") {
    EvalRun a = run_from_flags({{true, 0}, {true, 1}});
    EvalRun b = run_from_flags({{false, 0}, {false, 2}});  // p0/r0 shared; r1 vs r2 not
    McNemarResult res = mcnemar(a, b);
    CHECK(res.n_pairs == 1);
    CHECK(res.b == 1);
    CHECK(res.c == 0);
}

// ---------------------------------------------------------------------------
// Protocols
// ---------------------------------------------------------------------------

TEST_CASE("method 1 fold bookkeeping on a cohort shaped like the study") {
    CohortMatrix cohort = fake_cohort({27, 69, 25, 21, 24}, 4, 0.0, 1);
    EvalParams params = fast_params(5);
    params.method1_repeats = 2;
    MethodResult result = method1_loco(cohort, params);

    std::map<std::string, std::size_t> test_sizes;
    for (const FoldAudit& audit : result.audits) {
        CHECK_FALSE(audit.train_contains_test_group);
        CHECK(audit.train_n + audit.test_n == 118);
        CHECK(audit.train_n == 118 - audit.test_n);
        if (audit.repeat == 0) test_sizes[audit.fold] = audit.test_n;
    }
    CHECK(test_sizes["UK"] == 27);
    CHECK(test_sizes["ES"] == 21);  // subsampled from 69 to the smallest country
    CHECK(test_sizes["PE"] == 25);
    CHECK(test_sizes["CO"] == 21);
    CHECK(test_sizes["CL"] == 24);

    // per repeat every included participant is tested exactly once
    const EvalRun& run = result.runs[0];
    std::set<std::pair<std::string, int>> keys;
    for (const auto& inst : run.instances) CHECK(keys.insert({inst.participant_id, inst.repeat}).second);
    CHECK(run.instances.size() == 118 * 2);
}

TEST_CASE("method 2 subset sizes mirror the per-country folds and flags join the schema") {
    CohortMatrix cohort = fake_cohort({10, 23, 8, 7, 9}, 4, 0.0, 2);
    EvalParams params = fast_params(6);
    params.method2_repeats = 2;
    MethodResult result = method2_loso(cohort, params);

    std::multiset<std::size_t> sizes;
    for (const FoldAudit& audit : result.audits)
        if (audit.repeat == 0) sizes.insert(audit.test_n);
    // ES subsampled to 7 (smallest country), so sizes are {10, 7, 8, 7, 9}
    CHECK(sizes == std::multiset<std::size_t>{7, 7, 8, 9, 10});

    // union of test sets covers every included participant at least once
    std::set<std::string> tested;
    for (const auto& inst : result.runs[0].instances) tested.insert(inst.participant_id);
    CHECK(tested.size() >= 10 + 7 + 8 + 7 + 9);
}

TEST_CASE("constant country flags never split, so they carry no importance") {
    CohortMatrix cohort = fake_cohort({0, 0, 30, 0, 0}, 3, 1.5, 3);
    CohortMatrix flagged = attach_country_flags(cohort);
    std::vector<double> X;
    std::vector<TraitClass> y;
    X.reserve(flagged.n() * flagged.d());
    for (std::size_t i = 0; i < flagged.n(); ++i)
        for (std::size_t j = 0; j < flagged.d(); ++j) X.push_back(flagged.at(i, j));
    y = flagged.labels[0];
    ForestParams params;
    params.n_trees = 20;
    ForestModel model = fit_forest(X, y, flagged.n(), flagged.d(), params);
    for (std::size_t j = 3; j < flagged.d(); ++j)
        CHECK(model.importances[j] == doctest::Approx(0.0));
}

TEST_CASE("shuffled labels land near chance") {
    CohortMatrix cohort = fake_cohort({80, 80, 80, 80, 80}, 5, 0.0, 4);
    EvalParams params = fast_params(7);
    params.forest.n_trees = 30;
    params.method1_repeats = 2;
    MethodResult result = method1_loco(cohort, params);
    for (Trait t : kAllTraits) {
        const EvalRun& run = result.runs[static_cast<int>(t)];
        CHECK(run.accuracy > 0.43);
        CHECK(run.accuracy < 0.57);
        CHECK(std::abs(run.kappa) < 0.12);
    }
}

TEST_CASE("a strong country-independent signal is learned by method 1") {
    CohortMatrix cohort = fake_cohort({20, 30, 20, 20, 20}, 4, 3.0, 8);
    EvalParams params = fast_params(9);
    params.forest.n_trees = 40;
    params.method1_repeats = 2;
    MethodResult result = method1_loco(cohort, params);
    CHECK(result.runs[0].accuracy >= 0.65);
}

TEST_CASE("a country-flipped signal favors method 2 over method 1") {
    int m2_wins = 0;
    for (int seed = 0; seed < 10; ++seed) {
        CohortMatrix cohort =
            fake_cohort({16, 20, 16, 16, 16}, 4, 3.0, 100 + seed, /*country_flip=*/true);
        EvalParams params = fast_params(static_cast<std::uint64_t>(seed));
        params.forest.n_trees = 40;
        params.method1_repeats = 2;
        params.method2_repeats = 2;
        MethodResult m1 = method1_loco(cohort, params);
        MethodResult m2 = method2_loso(cohort, params);
        if (m2.runs[0].accuracy > m1.runs[0].accuracy) ++m2_wins;
    }
    CHECK(m2_wins >= 8);
}

// ---------------------------------------------------------------------------
// Balancing and population filters
// ---------------------------------------------------------------------------

TEST_CASE("gender balancing downsamples the majority to the minority size") {
    CohortMatrix cohort = fake_cohort({40, 0, 0, 0, 0}, 2, 0.0, 11);
    std::size_t females = 0;
    for (const auto& demo : cohort.demographics)
        if (demo.gender == Gender::Female) ++females;
    REQUIRE(females > 0);
    REQUIRE(females < 40);
    const std::size_t minority = std::min(females, cohort.n() - females);

    auto draws = balanced_subsets(cohort, BalanceAxis::Gender, 10, 3);
    CHECK(draws.size() == 10);
    std::set<std::vector<std::size_t>> distinct;
    for (const auto& rows : draws) {
        CHECK(rows.size() == 2 * minority);
        std::size_t f = 0;
        for (std::size_t r : rows)
            if (cohort.demographics[r].gender == Gender::Female) ++f;
        CHECK(f == minority);
        distinct.insert(rows);
    }
    CHECK(distinct.size() > 1);  // repeats differ
}

TEST_CASE("an already balanced cohort is identity up to ordering") {
    CohortMatrix cohort = fake_cohort({12, 0, 0, 0, 0}, 2, 0.0, 12);
    for (std::size_t i = 0; i < cohort.n(); ++i)
        cohort.demographics[i].gender = i % 2 == 0 ? Gender::Female : Gender::Male;
    auto draws = balanced_subsets(cohort, BalanceAxis::Gender, 3, 5);
    for (const auto& rows : draws) {
        CHECK(rows.size() == cohort.n());
        CHECK(std::is_sorted(rows.begin(), rows.end()));
    }
}

TEST_CASE("age balancing shrinks only the dominant bracket") {
    CohortMatrix cohort = fake_cohort({54, 0, 0, 0, 0}, 2, 0.0, 13);
    // brackets: 15 young, 30 mid (dominant), 9 old
    for (std::size_t i = 0; i < cohort.n(); ++i) {
        cohort.demographics[i].age_range = i < 15   ? AgeRange::A18_25
                                           : i < 45 ? AgeRange::A26_34
                                                    : AgeRange::A35_44;
    }
    auto draws = balanced_subsets(cohort, BalanceAxis::Age, 4, 6);
    for (const auto& rows : draws) {
        std::array<std::size_t, 3> counts{};
        for (std::size_t r : rows) counts[static_cast<int>(cohort.demographics[r].age_range)]++;
        CHECK(counts[0] == 15);  // untouched
        CHECK(counts[1] == 9);   // downsampled to the smallest bracket
        CHECK(counts[2] == 9);
    }
}

TEST_CASE("balancing requires every stratum") {
    CohortMatrix cohort = fake_cohort({10, 0, 0, 0, 0}, 2, 0.0, 14);
    for (auto& demo : cohort.demographics) demo.gender = Gender::Male;
    CHECK_THROWS_AS(balanced_subsets(cohort, BalanceAxis::Gender, 2, 1), EmptyStratum);
    for (auto& demo : cohort.demographics) demo.age_range = AgeRange::A26_34;
    CHECK_THROWS_AS(balanced_subsets(cohort, BalanceAxis::Age, 2, 1), EmptyStratum);
}

TEST_CASE("population filters") {
    CohortMatrix cohort = fake_cohort({20, 0, 0, 0, 0}, 2, 0.0, 15);
    CohortMatrix students =
        population_filter(cohort, [](const Demographics& d) { return is_student(d); });
    for (const auto& demo : students.demographics) CHECK(is_student(demo));

    CohortMatrix identity = population_filter(cohort, [](const Demographics&) { return true; });
    CHECK(identity.n() == cohort.n());
    CHECK(identity.ids == cohort.ids);

    CHECK_THROWS_AS(population_filter(cohort, [](const Demographics&) { return false; }),
                    EmptyPopulation);
}

// ---------------------------------------------------------------------------
// Importance aggregation
// ---------------------------------------------------------------------------

namespace {

// cohort using real catalog names so categories resolve
CohortMatrix catalog_cohort(std::size_t n, double planted_signal, std::uint64_t seed) {
    CohortMatrix m;
    m.feature_names = FeatureCatalog::instance().names();
    const std::size_t d = m.feature_names.size();
    std::set<int> planted;
    for (const char* name : {"noise.median_scaled.night.mean.weekday",
                             "noise.median_db.night.mean.weekday",
                             "noise.silence_ratio.night.mean.weekday"}) {
        const int idx = FeatureCatalog::instance().index_of(name);
        REQUIRE(idx >= 0);
        planted.insert(idx);
    }
    Rng rng(seed);
    std::vector<double> hidden;
    m.values.assign(n * d, 0.0);
    m.missing.assign(n * d, 0);
    for (std::size_t i = 0; i < n; ++i) {
        m.ids.push_back("p" + std::to_string(i));
        m.demographics.push_back({});
        m.scores.push_back({});
        const double h = rng.normal();
        hidden.push_back(h);
        for (std::size_t j = 0; j < d; ++j) {
            double v = rng.normal();
            if (planted.count(static_cast<int>(j))) v += planted_signal * h;
            m.values[i * d + j] = v;
        }
    }
    std::vector<double> sorted = hidden;
    std::sort(sorted.begin(), sorted.end());
    const double median = sorted[sorted.size() / 2];
    for (int t = 0; t < kTraitCount; ++t)
        for (double h : hidden)
            m.labels[t].push_back(h <= median ? TraitClass::Low : TraitClass::High);
    return m;
}

}  // namespace

TEST_CASE("importance weights sum to 1 and a planted noise signal wins") {
    CohortMatrix cohort = catalog_cohort(16, 4.0, 21);
    EvalParams params;
    params.forest.n_trees = 60;
    params.seed = 2;
    RfeParams rfe_params;
    rfe_params.target_k = 30;
    rfe_params.drop_frac = 0.30;
    ImportanceRow row =
        importance_by_category(cohort, "all", Trait::Extraversion, params, rfe_params);

    double total = 0;
    for (double w : row.category_weight) total += w;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));

    const double noise_weight = row.category_weight[static_cast<int>(Category::Noise)];
    for (Category c : kAllCategories)
        if (c != Category::Noise)
            CHECK(noise_weight >= row.category_weight[static_cast<int>(c)]);
    CHECK(row.dominant_daytype[static_cast<int>(Category::Noise)] == DayType::Weekday);
}

TEST_CASE("importance aggregation rejects tiny populations") {
    CohortMatrix cohort = catalog_cohort(8, 1.0, 22);
    EvalParams params;
    CHECK_THROWS_AS(importance_by_category(cohort, "all", Trait::Openness, params),
                    TooSmall);
}

// ---------------------------------------------------------------------------
// Distributions
// ---------------------------------------------------------------------------

TEST_CASE("a single participant concentrates all mass in one bin") {
    CohortMatrix cohort = fake_cohort({1, 0, 0, 0, 0}, 3, 0.0, 31);
    auto rows = feature_distributions(cohort, {"f1"}, 20);
    REQUIRE(rows.size() == 20);
    double total = 0;
    int nonzero = 0;
    for (const auto& row : rows) {
        total += row.mass;
        if (row.mass > 0) ++nonzero;
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(nonzero == 1);
}

TEST_CASE("per-country masses each sum to 1") {
    CohortMatrix cohort = fake_cohort({9, 12, 7, 6, 8}, 3, 0.0, 32);
    auto rows = feature_distributions(cohort, {"f0", "f2"}, 10);
    std::map<std::pair<std::string, Country>, double> totals;
    for (const auto& row : rows) totals[{row.feature, row.country}] += row.mass;
    CHECK(totals.size() == 10);  // 2 features x 5 countries
    for (const auto& [key, total] : totals) CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("unknown features are rejected") {
    CohortMatrix cohort = fake_cohort({3, 0, 0, 0, 0}, 2, 0.0, 33);
    CHECK_THROWS_AS(feature_distributions(cohort, {"nope"}, 5), UnknownFeature);
}
