#include "bigfive/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "bigfive/parallel.hpp"
#include "bigfive/rng.hpp"
#include "bigfive/synth.hpp"

namespace bigfive {

namespace fs = std::filesystem;

namespace {

std::string fmt(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

std::string fmt_fixed(double v, int decimals) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
    return buf;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

double parse_double(const std::string& s, const std::string& path, long line) {
    double v;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw ParseError(path, line, "expected number, got '" + s + "'");
    return v;
}

}  // namespace

// ---------------------------------------------------------------------------
// Artifact IO
// ---------------------------------------------------------------------------

void write_feature_matrix(const std::vector<FeatureVector>& features,
                          const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write feature matrix: " + path);
    const auto& names = FeatureCatalog::instance().names();
    out << "participant_id";
    for (const auto& name : names) out << ',' << name;
    out << '\n';
    for (const auto& fv : features) {
        out << fv.participant_id;
        for (const auto& v : fv.values) {
            out << ',';
            if (v) out << fmt(*v);
        }
        out << '\n';
    }
}

std::vector<FeatureVector> read_feature_matrix(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path, 0, "cannot open feature matrix");
    std::string line;
    if (!std::getline(in, line)) throw ParseError(path, 0, "empty feature matrix");
    const auto header = split_csv(line);
    const auto& names = FeatureCatalog::instance().names();
    if (header.size() != names.size() + 1 || header[0] != "participant_id")
        throw ParseError(path, 1, "unexpected feature matrix header");
    for (std::size_t j = 0; j < names.size(); ++j)
        if (header[j + 1] != names[j])
            throw ParseError(path, 1, "column " + std::to_string(j + 1) +
                                          " is '" + header[j + 1] + "', expected '" +
                                          names[j] + "'");

    std::vector<FeatureVector> features;
    long line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto fields = split_csv(line);
        if (fields.size() != names.size() + 1)
            throw ParseError(path, line_no, "wrong field count");
        FeatureVector fv;
        fv.participant_id = fields[0];
        fv.values.resize(names.size());
        for (std::size_t j = 0; j < names.size(); ++j) {
            if (!fields[j + 1].empty())
                fv.values[j] = parse_double(fields[j + 1], path, line_no);
        }
        features.push_back(std::move(fv));
    }
    return features;
}

void write_labels(const LabelsArtifact& artifact, const std::string& labels_path,
                  const std::string& medians_path) {
    {
        std::ofstream out(labels_path);
        if (!out) throw Error("cannot write labels: " + labels_path);
        out << "participant_id";
        for (Trait t : kAllTraits)
            out << ',' << to_string(t) << "_score," << to_string(t) << "_label";
        out << '\n';
        for (std::size_t i = 0; i < artifact.ids.size(); ++i) {
            out << artifact.ids[i];
            for (Trait t : kAllTraits) {
                const int ti = static_cast<int>(t);
                out << ',' << artifact.scores[i][t] << ','
                    << (artifact.labels[ti][i] == TraitClass::High ? "high" : "low");
            }
            out << '\n';
        }
    }
    {
        std::ofstream out(medians_path);
        if (!out) throw Error("cannot write medians: " + medians_path);
        out << "trait,median,n_low,n_high\n";
        for (Trait t : kAllTraits) {
            const int ti = static_cast<int>(t);
            std::size_t n_low = 0;
            for (TraitClass c : artifact.labels[ti])
                if (c == TraitClass::Low) ++n_low;
            out << to_string(t) << ',' << fmt(artifact.medians[ti]) << ',' << n_low << ','
                << artifact.labels[ti].size() - n_low << '\n';
        }
    }
}

LabelsArtifact read_labels(const std::string& labels_path, const std::string& medians_path) {
    LabelsArtifact artifact;
    std::ifstream in(labels_path);
    if (!in) throw ParseError(labels_path, 0, "cannot open labels");
    std::string line;
    if (!std::getline(in, line)) throw ParseError(labels_path, 0, "empty labels file");
    long line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto fields = split_csv(line);
        if (fields.size() != 1 + 2 * kTraitCount)
            throw ParseError(labels_path, line_no, "wrong field count");
        artifact.ids.push_back(fields[0]);
        TraitScores scores;
        for (int t = 0; t < kTraitCount; ++t) {
            scores.values[t] =
                static_cast<int>(parse_double(fields[1 + 2 * t], labels_path, line_no));
            const std::string& label = fields[2 + 2 * t];
            if (label != "low" && label != "high")
                throw ParseError(labels_path, line_no, "label must be low|high");
            artifact.labels[t].push_back(label == "high" ? TraitClass::High : TraitClass::Low);
        }
        artifact.scores.push_back(scores);
    }

    std::ifstream med(medians_path);
    if (!med) throw ParseError(medians_path, 0, "cannot open medians");
    std::getline(med, line);  // header
    line_no = 1;
    while (std::getline(med, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto fields = split_csv(line);
        if (fields.size() != 4) throw ParseError(medians_path, line_no, "wrong field count");
        Trait t = trait_from_string(fields[0]);
        artifact.medians[static_cast<int>(t)] = parse_double(fields[1], medians_path, line_no);
    }
    return artifact;
}

// ---------------------------------------------------------------------------
// Cohort assembly from artifacts
// ---------------------------------------------------------------------------

CohortMatrix load_cohort_matrix(const std::string& manifest_path,
                                const std::string& matrix_path,
                                const std::string& labels_path,
                                const std::string& medians_path) {
    CohortManifest manifest = parse_manifest(manifest_path);
    std::vector<FeatureVector> features = read_feature_matrix(matrix_path);
    LabelsArtifact labels = read_labels(labels_path, medians_path);

    std::map<std::string, const Participant*> by_id;
    for (const auto& entry : manifest.entries) by_id[entry.participant.id] = &entry.participant;
    std::map<std::string, std::size_t> label_row;
    for (std::size_t i = 0; i < labels.ids.size(); ++i) label_row[labels.ids[i]] = i;

    // matrix rows define the population (the missingness filter may have
    // dropped manifest participants)
    std::vector<Participant> participants;
    for (const auto& fv : features) {
        auto it = by_id.find(fv.participant_id);
        if (it == by_id.end())
            throw Error("participant " + fv.participant_id + " not in manifest");
        participants.push_back(*it->second);
    }
    CohortMatrix matrix = assemble_cohort(participants, features);
    for (std::size_t i = 0; i < matrix.n(); ++i) {
        auto it = label_row.find(matrix.ids[i]);
        if (it == label_row.end())
            throw Error("participant " + matrix.ids[i] + " has no labels");
        for (int t = 0; t < kTraitCount; ++t)
            matrix.labels[t].push_back(labels.labels[t][it->second]);
    }
    matrix.medians = labels.medians;
    return matrix;
}

// ---------------------------------------------------------------------------
// Evaluation driver
// ---------------------------------------------------------------------------

PopulationEval evaluate_population(const CohortMatrix& cohort, const std::string& population,
                                   const std::vector<std::string>& methods,
                                   const RunConfig& config) {
    EvalParams params;
    params.forest = config.forest;
    params.method1_repeats = config.method1_repeats;
    params.method2_repeats = config.method2_repeats;
    params.spain_subsample_n = config.spain_subsample_n;
    params.seed = derive_seed(config.seed, "eval", hash_tag(population));
    params.n_threads = config.threads;

    const CohortMatrix* base = &cohort;
    CohortMatrix filtered;
    RepeatSelector selector;

    if (population == "female" || population == "male") {
        const Gender g = population == "female" ? Gender::Female : Gender::Male;
        filtered = population_filter(
            cohort, [g](const Demographics& demo) { return demo.gender == g; });
        base = &filtered;
    } else if (population == "student" || population == "non_student") {
        const bool want = population == "student";
        filtered = population_filter(
            cohort, [want](const Demographics& demo) { return is_student(demo) == want; });
        base = &filtered;
    } else if (population == "gender_balanced") {
        selector = balanced_selector(
            cohort, BalanceAxis::Gender,
            std::max({config.balance_repeats, config.method1_repeats, config.method2_repeats}),
            derive_seed(config.seed, "balance", hash_tag(population)));
    } else if (population == "age_balanced") {
        selector = balanced_selector(
            cohort, BalanceAxis::Age,
            std::max({config.balance_repeats, config.method1_repeats, config.method2_repeats}),
            derive_seed(config.seed, "balance", hash_tag(population)));
    } else if (population != "all") {
        throw ConfigError("unknown population '" + population + "'");
    }

    PopulationEval eval;
    eval.population = population;
    eval.methods = methods;
    for (const std::string& method : methods) {
        if (method == "method1")
            eval.results.push_back(method1_loco(*base, params, selector));
        else if (method == "method2")
            eval.results.push_back(method2_loso(*base, params, selector));
        else
            throw ConfigError("unknown method '" + method + "'");
    }

    auto m1 = std::find(methods.begin(), methods.end(), "method1");
    auto m2 = std::find(methods.begin(), methods.end(), "method2");
    if (m1 != methods.end() && m2 != methods.end()) {
        const MethodResult& r1 = eval.results[static_cast<std::size_t>(m1 - methods.begin())];
        const MethodResult& r2 = eval.results[static_cast<std::size_t>(m2 - methods.begin())];
        for (Trait t : kAllTraits)
            eval.mcnemar_per_trait.push_back(
                mcnemar(r1.runs[static_cast<int>(t)], r2.runs[static_cast<int>(t)]));
    }
    return eval;
}

void write_eval_report(const std::vector<PopulationEval>& evals, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write eval report: " + path);
    out << "population,method";
    for (Trait t : kAllTraits)
        out << ',' << to_string(t) << "_acc_pct," << to_string(t) << "_kappa";
    out << '\n';
    for (const auto& eval : evals) {
        for (std::size_t m = 0; m < eval.methods.size(); ++m) {
            out << eval.population << ',' << eval.methods[m];
            for (Trait t : kAllTraits) {
                const EvalRun& run = eval.results[m].runs[static_cast<int>(t)];
                out << ',' << fmt_fixed(run.accuracy * 100.0, 2) << ','
                    << fmt_fixed(run.kappa, 2);
            }
            out << '\n';
        }
    }
}

void write_mcnemar_report(const std::vector<PopulationEval>& evals, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write mcnemar report: " + path);
    out << "population,trait,b,c,statistic,p_value,exact,n_pairs\n";
    for (const auto& eval : evals) {
        if (eval.mcnemar_per_trait.empty()) continue;
        for (Trait t : kAllTraits) {
            const McNemarResult& r = eval.mcnemar_per_trait[static_cast<int>(t)];
            out << eval.population << ',' << to_string(t) << ',' << r.b << ',' << r.c << ','
                << fmt(r.statistic) << ',' << fmt(r.p_value) << ',' << (r.exact ? 1 : 0) << ','
                << r.n_pairs << '\n';
        }
    }
}

void write_importance_report(const std::vector<ImportanceRow>& rows, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write importance report: " + path);
    out << "population,trait,category,weight,dominant_daytype\n";
    for (const auto& row : rows) {
        for (Category c : kAllCategories) {
            const int ci = static_cast<int>(c);
            out << row.population << ',' << to_string(row.trait) << ',' << to_string(c) << ','
                << fmt(row.category_weight[ci]) << ',' << to_string(row.dominant_daytype[ci])
                << '\n';
        }
    }
}

void write_distribution_report(const std::vector<DistributionRow>& rows,
                               const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write distribution report: " + path);
    out << "country,feature,bin_lo,bin_hi,mass\n";
    for (const auto& row : rows) {
        out << to_string(row.country) << ',' << row.feature << ',' << fmt(row.bin_lo) << ','
            << fmt(row.bin_hi) << ',' << fmt(row.mass) << '\n';
    }
}

// ---------------------------------------------------------------------------
// Stages
// ---------------------------------------------------------------------------

namespace {

void echo_config(const RunConfig& config) {
    fs::create_directories(config.out_dir);
    std::ofstream out(fs::path(config.out_dir) / "config_echo.json");
    if (!out) throw Error("cannot write config echo");
    out << config.echo_json();
}

}  // namespace

void cmd_synth(const RunConfig& config) {
    GeneratorConfig gen = config.synth;
    gen.seed = config.seed;
    SynthCohort cohort = generate(gen);
    fs::create_directories(config.out_dir);
    write_cohort(cohort, config.out_dir);
    echo_config(config);
}

void cmd_features(const RunConfig& config) {
    CohortManifest manifest = parse_manifest(config.resolved_manifest());
    if (manifest.entries.empty()) throw EmptyCohort("manifest lists no participants");
    const fs::path base = fs::path(config.resolved_manifest()).parent_path();

    std::vector<FeatureVector> features(manifest.entries.size());
    std::vector<std::array<bool, kCategoryCount>> present(manifest.entries.size());
    std::vector<long> dropped(manifest.entries.size());
    parallel_for(manifest.entries.size(), config.threads, [&](std::size_t i) {
        const auto& entry = manifest.entries[i];
        fs::path log_path = entry.log_path;
        if (log_path.is_relative()) log_path = base / log_path;
        EventLog log;
        try {
            log = parse_event_log(log_path.string(), entry.participant.id,
                                  manifest.study_start, manifest.study_end,
                                  config.malformed_tolerance);
        } catch (const Error& e) {
            throw Error("participant " + entry.participant.id + ": " + e.what());
        }
        ExtractionResult result = extract_features(log, entry.participant, config.features);
        features[i] = std::move(result.vector);
        present[i] = log.category_present;
        dropped[i] = log.dropped_outside_window;
    });

    fs::create_directories(config.out_dir);
    write_feature_matrix(features, (fs::path(config.out_dir) / "features.csv").string());

    // per-category missing rate: share of participants with no stream at all
    std::ofstream report(fs::path(config.out_dir) / "extraction_report.csv");
    if (!report) throw Error("cannot write extraction report");
    report << "category,missing_participant_fraction\n";
    for (Category c : kAllCategories) {
        std::size_t missing = 0;
        for (const auto& flags : present)
            if (!flags[static_cast<int>(c)]) ++missing;
        report << to_string(c) << ','
               << fmt(static_cast<double>(missing) /
                      static_cast<double>(manifest.entries.size()))
               << '\n';
    }
    long total_dropped = 0;
    for (long v : dropped) total_dropped += v;
    report << "_events_outside_window," << total_dropped << '\n';
}

void cmd_label(const RunConfig& config) {
    CohortManifest manifest = parse_manifest(config.resolved_manifest());
    if (manifest.entries.empty()) throw EmptyCohort("manifest lists no participants");

    LabelsArtifact artifact;
    std::vector<TraitScores> scores;
    for (const auto& entry : manifest.entries) {
        artifact.ids.push_back(entry.participant.id);
        scores.push_back(score_traits(entry.participant.responses, ScoringKey::bundled()));
    }
    artifact.scores = scores;
    for (Trait t : kAllTraits) {
        TraitSplit split = trait_class_labels(scores, t);
        artifact.labels[static_cast<int>(t)] = std::move(split.labels);
        artifact.medians[static_cast<int>(t)] = split.median;
    }
    fs::create_directories(config.out_dir);
    write_labels(artifact, (fs::path(config.out_dir) / "labels.csv").string(),
                 (fs::path(config.out_dir) / "label_medians.csv").string());
}

void cmd_impute(const RunConfig& config) {
    CohortManifest manifest = parse_manifest(config.resolved_manifest());
    std::vector<FeatureVector> features =
        read_feature_matrix((fs::path(config.out_dir) / "features.csv").string());
    std::vector<Participant> participants;
    {
        std::map<std::string, const Participant*> by_id;
        for (const auto& e : manifest.entries) by_id[e.participant.id] = &e.participant;
        for (const auto& fv : features) {
            auto it = by_id.find(fv.participant_id);
            if (it == by_id.end())
                throw Error("participant " + fv.participant_id + " not in manifest");
            participants.push_back(*it->second);
        }
    }
    CohortMatrix matrix = assemble_cohort(participants, features);

    FilterReport filter_report;
    matrix = filter_missingness(matrix, config.missing_threshold, &filter_report);
    ImputeReport impute_report = iterative_impute(matrix, config.impute);

    // imputed matrix keeps the features.csv schema
    std::vector<FeatureVector> imputed;
    for (std::size_t i = 0; i < matrix.n(); ++i) {
        FeatureVector fv;
        fv.participant_id = matrix.ids[i];
        fv.values.resize(matrix.d());
        for (std::size_t j = 0; j < matrix.d(); ++j) fv.values[j] = matrix.at(i, j);
        imputed.push_back(std::move(fv));
    }
    write_feature_matrix(imputed, (fs::path(config.out_dir) / "features_imputed.csv").string());

    std::ofstream retention(fs::path(config.out_dir) / "retention.csv");
    if (!retention) throw Error("cannot write retention report");
    retention << "country,kept,dropped\n";
    for (Country c : kAllCountries) {
        const int ci = static_cast<int>(c);
        retention << to_string(c) << ',' << filter_report.kept[ci] << ','
                  << filter_report.dropped[ci] << '\n';
    }

    std::ofstream report(fs::path(config.out_dir) / "imputation_report.csv");
    if (!report) throw Error("cannot write imputation report");
    report << "sweeps_used," << impute_report.sweeps_used << '\n';
    report << "final_max_change," << fmt(impute_report.final_max_change) << '\n';
    report << "converged," << (impute_report.converged ? 1 : 0) << '\n';
    report << "feature,missing_count\n";
    for (std::size_t j = 0; j < matrix.d(); ++j)
        report << matrix.feature_names[j] << ',' << impute_report.column_missing[j] << '\n';
}

void cmd_evaluate(const RunConfig& config) {
    const fs::path out = config.out_dir;
    CohortMatrix matrix =
        load_cohort_matrix(config.resolved_manifest(), (out / "features_imputed.csv").string(),
                           (out / "labels.csv").string(), (out / "label_medians.csv").string());

    std::vector<PopulationEval> evals;
    for (const std::string& population : config.populations)
        evals.push_back(evaluate_population(matrix, population, config.methods, config));

    write_eval_report(evals, (out / "eval_report.csv").string());
    write_mcnemar_report(evals, (out / "mcnemar.csv").string());
}

void cmd_importance(const RunConfig& config) {
    const fs::path out = config.out_dir;
    CohortMatrix matrix =
        load_cohort_matrix(config.resolved_manifest(), (out / "features_imputed.csv").string(),
                           (out / "labels.csv").string(), (out / "label_medians.csv").string());

    EvalParams params;
    params.forest = config.forest;
    params.seed = derive_seed(config.seed, "importance");
    params.n_threads = config.threads;

    std::vector<std::string> traits = config.importance_traits;
    if (traits.empty())
        for (Trait t : kAllTraits) traits.emplace_back(to_string(t));

    std::vector<ImportanceRow> rows;
    for (const std::string& population : config.importance_populations) {
        CohortMatrix sub = matrix;
        if (population != "all") {
            const Country country = country_from_string(population);
            sub = population_filter(matrix, [country](const Demographics& demo) {
                return demo.country == country;
            });
        }
        for (const std::string& trait_name : traits) {
            rows.push_back(importance_by_category(sub, population,
                                                  trait_from_string(trait_name), params,
                                                  config.rfe));
        }
    }
    write_importance_report(rows, (out / "importance.csv").string());
}

void cmd_distributions(const RunConfig& config) {
    const fs::path out = config.out_dir;
    CohortManifest manifest = parse_manifest(config.resolved_manifest());
    std::vector<FeatureVector> features =
        read_feature_matrix((out / config.dist_source).string());

    std::vector<Participant> participants;
    {
        std::map<std::string, const Participant*> by_id;
        for (const auto& e : manifest.entries) by_id[e.participant.id] = &e.participant;
        for (const auto& fv : features) {
            auto it = by_id.find(fv.participant_id);
            if (it == by_id.end())
                throw Error("participant " + fv.participant_id + " not in manifest");
            participants.push_back(*it->second);
        }
    }
    CohortMatrix matrix = assemble_cohort(participants, features);

    std::vector<std::string> names = config.dist_features;
    if (names.empty()) throw ConfigError("distributions.features must list at least one name");
    auto rows = feature_distributions(matrix, names, config.dist_bins);
    write_distribution_report(rows, (out / "distributions.csv").string());
}

}  // namespace bigfive
