#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "bigfive/eval.hpp"
#include "bigfive/features.hpp"
#include "bigfive/psychometrics.hpp"
#include "bigfive/synth.hpp"

using namespace bigfive;

namespace {

GeneratorConfig small_config(std::uint64_t seed, int days = 7) {
    GeneratorConfig config;
    config.country_counts = {6, 9, 6, 5, 6};
    config.study_days = days;
    config.seed = seed;
    config.dropout.opt_out.fill(0.0);
    config.dropout.daily_gap = 0.0;
    return config;
}

}  // namespace

TEST_CASE("default config reproduces the cohort shape") {
    GeneratorConfig config;
    config.seed = 1;
    SynthCohort cohort = generate(config);
    REQUIRE(cohort.manifest.entries.size() == 166);

    std::array<std::size_t, kCountryCount> counts{};
    std::size_t female = 0, students = 0;
    std::array<std::size_t, 3> ages{};
    for (const auto& entry : cohort.manifest.entries) {
        counts[static_cast<int>(entry.participant.country)]++;
        if (entry.participant.gender == Gender::Female) ++female;
        if (entry.participant.employment == Employment::BachelorStudent ||
            entry.participant.employment == Employment::MasterStudent)
            ++students;
        ages[static_cast<int>(entry.participant.age_range)]++;
    }
    CHECK(counts == std::array<std::size_t, kCountryCount>{27, 69, 25, 21, 24});
    CHECK(female == 54);
    CHECK(students == 67);
    CHECK(ages == std::array<std::size_t, 3>{30, 118, 18});

    // study window defaults to 21 days
    CHECK(cohort.manifest.study_end - cohort.manifest.study_start == 21 * kMsPerDay);
}

TEST_CASE("generation is deterministic for a fixed seed") {
    GeneratorConfig config = small_config(42);
    SynthCohort a = generate(config);
    SynthCohort b = generate(config);
    REQUIRE(a.event_streams.size() == b.event_streams.size());
    for (std::size_t i = 0; i < a.event_streams.size(); ++i)
        CHECK(a.event_streams[i] == b.event_streams[i]);
    for (std::size_t i = 0; i < a.truth.size(); ++i) {
        CHECK(a.truth[i].scores == b.truth[i].scores);
        CHECK(a.truth[i].behavior == b.truth[i].behavior);
    }

    GeneratorConfig other = small_config(43);
    SynthCohort c = generate(other);
    bool any_different = false;
    for (std::size_t i = 0; i < a.truth.size() && !any_different; ++i)
        if (!(a.truth[i].scores == c.truth[i].scores)) any_different = true;
    CHECK(any_different);
}

TEST_CASE("questionnaire responses re-score to the drawn traits exactly") {
    SynthCohort cohort = generate(small_config(7));
    for (std::size_t i = 0; i < cohort.manifest.entries.size(); ++i) {
        const TraitScores scored = score_traits(
            cohort.manifest.entries[i].participant.responses, ScoringKey::bundled());
        CHECK(scored == cohort.truth[i].scores);
    }
}

TEST_CASE("per-country trait statistics match the configured gaussians") {
    GeneratorConfig config;
    config.seed = 3;
    SynthCohort cohort = generate(config);

    std::array<std::vector<TraitScores>, kCountryCount> by_country;
    for (std::size_t i = 0; i < cohort.truth.size(); ++i)
        by_country[static_cast<int>(cohort.truth[i].country)].push_back(
            cohort.truth[i].scores);

    for (int c = 0; c < kCountryCount; ++c) {
        CohortTraitStats stats = trait_stats(by_country[c]);
        for (int t = 0; t < kTraitCount; ++t) {
            const TraitGaussian& g = config.trait_gaussians[c][t];
            CHECK(std::abs(stats.per_trait[t].mean - g.mean) < 1.5);
            REQUIRE(stats.per_trait[t].std_dev.has_value());
            CHECK(std::abs(*stats.per_trait[t].std_dev - g.sd) < 2.0);
        }
    }
}

TEST_CASE("questionnaire coupling hits the reliability targets") {
    GeneratorConfig config;
    config.seed = 5;
    SynthCohort cohort = generate(config);
    std::vector<Participant> participants;
    for (const auto& e : cohort.manifest.entries) participants.push_back(e.participant);

    const double alpha_e = cronbach_alpha(
        trait_item_matrix(participants, ScoringKey::bundled(), Trait::Extraversion));
    const double alpha_n = cronbach_alpha(
        trait_item_matrix(participants, ScoringKey::bundled(), Trait::Neuroticism));
    CHECK(alpha_e >= 0.7);
    CHECK(alpha_n >= 0.7);
    for (Trait t : kAllTraits) {
        const double alpha =
            cronbach_alpha(trait_item_matrix(participants, ScoringKey::bundled(), t));
        CHECK(alpha >= 0.6);  // all traits meaningfully coupled
        CHECK(alpha <= 1.0);
    }
}

TEST_CASE("opt-outs remove whole streams and are recorded") {
    GeneratorConfig config = small_config(11);
    config.dropout.opt_out[static_cast<int>(Category::Calls)] = 0.5;
    SynthCohort cohort = generate(config);

    std::size_t opted_out = 0;
    for (std::size_t i = 0; i < cohort.truth.size(); ++i) {
        const bool out = cohort.truth[i].opted_out[static_cast<int>(Category::Calls)];
        if (out) ++opted_out;
        bool has_calls = false;
        for (const auto& e : cohort.event_streams[i])
            if (e.category == Category::Calls) has_calls = true;
        CHECK(has_calls == !out);
    }
    // quota sampling keeps the realized rate at the configured one
    CHECK(opted_out == std::llround(0.5 * static_cast<double>(cohort.truth.size())));
}

TEST_CASE("daily gaps drop exactly the recorded category-days") {
    GeneratorConfig config = small_config(13);
    config.dropout.daily_gap = 0.2;
    SynthCohort cohort = generate(config);
    const std::int64_t start_day = cohort.manifest.study_start / kMsPerDay;

    bool any_gap = false;
    for (std::size_t i = 0; i < cohort.truth.size(); ++i) {
        for (auto [category, day] : cohort.truth[i].gap_days) {
            any_gap = true;
            for (const auto& e : cohort.event_streams[i]) {
                if (e.category != category) continue;
                // events are stamped in local wall time; day index from the
                // participant's local frame
                const std::int64_t local_day =
                    floor_div(e.timestamp_utc + cohort.manifest.entries[i]
                                                        .participant.tz_offset_minutes *
                                                    kMsPerMinute,
                              kMsPerDay) -
                    start_day;
                CHECK(local_day != day);
            }
        }
    }
    CHECK(any_gap);
}

TEST_CASE("a positive noise-night effect raises the planted parameter with the score") {
    GeneratorConfig config = small_config(17);
    config.effects.push_back({"noise_night_level", Trait::Extraversion, 1.0, 0.0});
    SynthCohort cohort = generate(config);

    // country baselines differ; compare within one country
    std::map<Country, std::vector<std::pair<int, double>>> by_country;
    for (const auto& t : cohort.truth)
        by_country[t.country].push_back(
            {t.scores[Trait::Extraversion], t.behavior.at("noise_night_db")});
    for (auto& [country, list] : by_country) {
        auto hi = std::max_element(list.begin(), list.end());
        auto lo = std::min_element(list.begin(), list.end());
        if (hi->first > lo->first) CHECK(hi->second > lo->second);
    }
}

TEST_CASE("unknown effect families and bad probabilities are config errors") {
    GeneratorConfig config = small_config(19);
    config.effects.push_back({"telepathy", Trait::Openness, 1.0, 0.0});
    CHECK_THROWS_AS(generate(config), ConfigError);

    GeneratorConfig bad = small_config(19);
    bad.dropout.daily_gap = 1.5;
    CHECK_THROWS_AS(generate(bad), ConfigError);
}

TEST_CASE("zero effects leave downstream labels unpredictable while a growing effect helps") {
    // effect-size monotonicity, scaled down: 3 levels x 3 seeds
    std::array<double, 3> mean_acc{};
    for (int level = 0; level < 3; ++level) {
        double total = 0;
        for (int seed = 0; seed < 3; ++seed) {
            GeneratorConfig config = small_config(200 + seed, 10);
            config.country_counts = {10, 14, 10, 9, 10};
            if (level > 0) {
                const double size = level == 1 ? 1.0 : 2.5;
                config.effects.push_back({"noise_night_level", Trait::Extraversion, size, 0.0});
                config.effects.push_back({"unlock_rate", Trait::Extraversion, size, 0.0});
                config.effects.push_back({"call_rate", Trait::Extraversion, size, 0.0});
            }
            SynthCohort cohort = generate(config);

            std::vector<Participant> participants;
            for (const auto& e : cohort.manifest.entries) participants.push_back(e.participant);
            std::vector<FeatureVector> features;
            for (std::size_t i = 0; i < participants.size(); ++i) {
                EventLog log = ingest_events(cohort.event_streams[i], participants[i].id,
                                             cohort.manifest.study_start,
                                             cohort.manifest.study_end);
                features.push_back(extract_features(log, participants[i]).vector);
            }
            CohortMatrix matrix = assemble_cohort(participants, features);
            label_cohort(matrix);
            matrix = filter_missingness(matrix, 0.30);
            iterative_impute(matrix);

            EvalParams params;
            params.forest.n_trees = 40;
            params.method1_repeats = 2;
            params.seed = static_cast<std::uint64_t>(seed);
            MethodResult m1 = method1_loco(matrix, params);
            total += m1.runs[static_cast<int>(Trait::Extraversion)].accuracy;
        }
        mean_acc[level] = total / 3.0;
    }
    CHECK(mean_acc[1] >= mean_acc[0] - 0.02);
    CHECK(mean_acc[2] >= mean_acc[1] - 0.02);
    CHECK(mean_acc[2] > 0.6);  // the strong level is clearly learnable
}
