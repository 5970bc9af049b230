#pragma once

#include <string>
#include <vector>

#include "bigfive/eval.hpp"
#include "bigfive/run_config.hpp"

namespace bigfive {

// ---------------------------------------------------------------------------
// Artifact IO
// ---------------------------------------------------------------------------

void write_feature_matrix(const std::vector<FeatureVector>& features, const std::string& path);
std::vector<FeatureVector> read_feature_matrix(const std::string& path);

struct LabelsArtifact {
    std::vector<std::string> ids;
    std::vector<TraitScores> scores;
    std::array<std::vector<TraitClass>, kTraitCount> labels;
    std::array<double, kTraitCount> medians{};
};

void write_labels(const LabelsArtifact& artifact, const std::string& labels_path,
                  const std::string& medians_path);
LabelsArtifact read_labels(const std::string& labels_path, const std::string& medians_path);

// ---------------------------------------------------------------------------
// Population-level evaluation (shared by the CLI and the acceptance suite)
// ---------------------------------------------------------------------------

struct PopulationEval {
    std::string population;
    std::vector<MethodResult> results;       // parallel to methods
    std::vector<std::string> methods;
    std::vector<McNemarResult> mcnemar_per_trait;  // filled when both methods ran
};

// population is one of kKnownPopulations; balanced populations resample per
// repeat with streams derived from the config seed.
PopulationEval evaluate_population(const CohortMatrix& cohort, const std::string& population,
                                   const std::vector<std::string>& methods,
                                   const RunConfig& config);

void write_eval_report(const std::vector<PopulationEval>& evals, const std::string& path);
void write_mcnemar_report(const std::vector<PopulationEval>& evals, const std::string& path);
void write_importance_report(const std::vector<ImportanceRow>& rows, const std::string& path);
void write_distribution_report(const std::vector<DistributionRow>& rows,
                               const std::string& path);

// Rebuilds the labeled cohort matrix from stage artifacts (manifest +
// feature matrix + labels).
CohortMatrix load_cohort_matrix(const std::string& manifest_path,
                                const std::string& matrix_path,
                                const std::string& labels_path,
                                const std::string& medians_path);

// ---------------------------------------------------------------------------
// CLI stages; each consumes only prior-stage artifacts under config.out_dir
// ---------------------------------------------------------------------------

void cmd_synth(const RunConfig& config);
void cmd_features(const RunConfig& config);
void cmd_label(const RunConfig& config);
void cmd_impute(const RunConfig& config);
void cmd_evaluate(const RunConfig& config);
void cmd_importance(const RunConfig& config);
void cmd_distributions(const RunConfig& config);

}  // namespace bigfive
