#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "bigfive/core_types.hpp"
#include "bigfive/psychometrics.hpp"

namespace bigfive {

struct Demographics {
    Country country = Country::UK;
    Gender gender = Gender::Female;
    AgeRange age_range = AgeRange::A26_34;
    Education education = Education::Other;
    Employment employment = Employment::Other;
};

// Dense participants x features grid with an explicit missing mask, plus the
// per-trait binary labels and everything eval needs to slice populations.
// Country flag columns exist only after attach_country_flags (the
// leave-one-subset-out configuration).
struct CohortMatrix {
    std::vector<std::string> ids;
    std::vector<Demographics> demographics;
    std::vector<TraitScores> scores;
    std::vector<std::string> feature_names;
    std::vector<double> values;        // row-major, n x d
    std::vector<std::uint8_t> missing; // parallel to values
    std::array<std::vector<TraitClass>, kTraitCount> labels;  // empty until labeled
    std::array<double, kTraitCount> medians{};
    bool has_country_flags = false;

    std::size_t n() const { return ids.size(); }
    std::size_t d() const { return feature_names.size(); }

    double at(std::size_t row, std::size_t col) const { return values[row * d() + col]; }
    bool is_missing(std::size_t row, std::size_t col) const {
        return missing[row * d() + col] != 0;
    }
    void set(std::size_t row, std::size_t col, double v) {
        values[row * d() + col] = v;
        missing[row * d() + col] = 0;
    }
    void set_missing(std::size_t row, std::size_t col) {
        values[row * d() + col] = 0;
        missing[row * d() + col] = 1;
    }

    double row_missing_fraction(std::size_t row) const;
    bool labeled() const { return !labels[0].empty(); }

    CohortMatrix subset(const std::vector<std::size_t>& rows) const;
};

// Joins participants with their feature vectors (by id, manifest order) and
// scores the questionnaire. Labels are not assigned here; call label_cohort
// once the population is final.
CohortMatrix assemble_cohort(const std::vector<Participant>& participants,
                             const std::vector<FeatureVector>& features,
                             const ScoringKey& key = ScoringKey::bundled());

// Median-splits every trait over the current population.
void label_cohort(CohortMatrix& matrix);

struct FilterReport {
    std::array<std::size_t, kCountryCount> kept{};
    std::array<std::size_t, kCountryCount> dropped{};
    std::vector<std::string> dropped_ids;
};

// Drops participants whose missing fraction strictly exceeds the threshold.
// Throws EmptyCohort when nobody survives.
CohortMatrix filter_missingness(const CohortMatrix& matrix, double threshold,
                                FilterReport* report = nullptr);

struct ImputeParams {
    int max_sweeps = 10;
    double tol = 1e-3;
    double ridge = 1e-3;
};

struct ImputeReport {
    std::vector<long> column_missing;  // pre-impute counts per column
    int sweeps_used = 0;
    double final_max_change = 0;  // max |delta| / column std over the last sweep
    bool converged = false;
};

// Round-robin ridge imputation: missing cells start at column medians, then
// each incomplete column is repeatedly re-predicted from all other columns
// (fit on the rows where it is observed) until the largest std-relative cell
// change drops below tol or the sweep budget runs out. Observed cells are
// never touched. Throws AllMissingColumn if a column has no observed value.
ImputeReport iterative_impute(CohortMatrix& matrix, const ImputeParams& params = {});

// Appends the five binary country indicator columns.
CohortMatrix attach_country_flags(const CohortMatrix& matrix);

}  // namespace bigfive
