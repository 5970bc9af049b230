#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "bigfive/core_types.hpp"
#include "bigfive/ingest.hpp"

namespace bigfive {

struct TraitGaussian {
    double mean = 30;
    double sd = 7;
};

// One planted trait -> behavior coupling. The participant's standardized
// trait score shifts the named behavior family, scaled by
// (1 - country_modulation) + country_modulation * country_factor, where the
// per-country factor is +1 for UK/PE/CL and -1 for ES/CO. Modulation 0 plants
// a country-independent signal; 1 flips its sign by country.
struct EffectSpec {
    std::string family;
    Trait trait = Trait::Extraversion;
    double size = 0;
    double country_modulation = 0;
};

// valid effect families
extern const std::vector<std::string> kEffectFamilies;

struct DropoutConfig {
    std::array<double, kCategoryCount> opt_out{};  // whole-stream, per participant
    double daily_gap = 0.0;                        // per (participant, category, day)
};

struct GeneratorConfig {
    std::array<std::size_t, kCountryCount> country_counts{27, 69, 25, 21, 24};
    std::array<std::array<TraitGaussian, kTraitCount>, kCountryCount> trait_gaussians;
    std::array<TraitGaussian, kTraitCount> population_gaussians;  // standardization frame
    std::array<double, kTraitCount> item_noise_sd{0.95, 1.0, 1.0, 0.85, 1.0};
    std::vector<EffectSpec> effects;
    DropoutConfig dropout;
    InstantMs study_start = 0;  // 0 = default start (a Monday)
    int study_days = 21;
    std::uint64_t seed = 0;

    GeneratorConfig();  // installs the observed-cohort gaussians and opt-out rates

    void validate() const;  // throws ConfigError
};

struct ParticipantTruth {
    std::string id;
    Country country = Country::UK;
    TraitScores scores;
    std::array<bool, kCategoryCount> opted_out{};
    std::map<std::string, double> behavior;             // planted per-participant parameters
    std::vector<std::pair<Category, int>> gap_days;     // (category, day index)
};

struct SynthCohort {
    CohortManifest manifest;
    std::vector<std::vector<SensorEvent>> event_streams;  // parallel to manifest entries
    std::vector<ParticipantTruth> truth;
};

// Deterministic for a fixed config: trait scores come from per-country
// gaussians (sample-moment matched), questionnaire responses are back-solved
// so scoring reproduces the drawn scores exactly, and daily event streams
// follow a two-place home/work schedule with the configured effects and
// dropout applied.
SynthCohort generate(const GeneratorConfig& config);

// manifest.csv + logs/<id>.jsonl + ground_truth.csv under out_dir
void write_cohort(const SynthCohort& cohort, const std::string& out_dir);

void write_ground_truth(const std::vector<ParticipantTruth>& truth, const std::string& path);

}  // namespace bigfive
