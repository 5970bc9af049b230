#include "bigfive/impute.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <Eigen/Dense>

#include "bigfive/features.hpp"

namespace bigfive {

double CohortMatrix::row_missing_fraction(std::size_t row) const {
    const std::size_t dim = d();
    if (dim == 0) return 1.0;
    std::size_t count = 0;
    for (std::size_t j = 0; j < dim; ++j)
        if (is_missing(row, j)) ++count;
    return static_cast<double>(count) / static_cast<double>(dim);
}

CohortMatrix CohortMatrix::subset(const std::vector<std::size_t>& rows) const {
    CohortMatrix out;
    out.feature_names = feature_names;
    out.has_country_flags = has_country_flags;
    out.medians = medians;
    const std::size_t dim = d();
    out.values.reserve(rows.size() * dim);
    out.missing.reserve(rows.size() * dim);
    for (std::size_t r : rows) {
        out.ids.push_back(ids[r]);
        out.demographics.push_back(demographics[r]);
        out.scores.push_back(scores[r]);
        out.values.insert(out.values.end(), values.begin() + r * dim,
                          values.begin() + (r + 1) * dim);
        out.missing.insert(out.missing.end(), missing.begin() + r * dim,
                           missing.begin() + (r + 1) * dim);
        for (int t = 0; t < kTraitCount; ++t)
            if (!labels[t].empty()) out.labels[t].push_back(labels[t][r]);
    }
    return out;
}

CohortMatrix assemble_cohort(const std::vector<Participant>& participants,
                             const std::vector<FeatureVector>& features,
                             const ScoringKey& key) {
    std::map<std::string, const FeatureVector*> by_id;
    for (const auto& fv : features) by_id[fv.participant_id] = &fv;

    CohortMatrix matrix;
    matrix.feature_names = FeatureCatalog::instance().names();
    const std::size_t dim = matrix.feature_names.size();
    for (const auto& p : participants) {
        auto it = by_id.find(p.id);
        if (it == by_id.end()) throw Error("no feature vector for participant " + p.id);
        const FeatureVector& fv = *it->second;
        if (fv.values.size() != dim)
            throw Error("feature vector size mismatch for participant " + p.id);
        matrix.ids.push_back(p.id);
        matrix.demographics.push_back(
            {p.country, p.gender, p.age_range, p.education, p.employment});
        matrix.scores.push_back(score_traits(p.responses, key));
        for (const auto& v : fv.values) {
            matrix.values.push_back(v.value_or(0.0));
            matrix.missing.push_back(v.has_value() ? 0 : 1);
        }
    }
    return matrix;
}

void label_cohort(CohortMatrix& matrix) {
    for (Trait t : kAllTraits) {
        TraitSplit split = trait_class_labels(matrix.scores, t);
        matrix.labels[static_cast<int>(t)] = std::move(split.labels);
        matrix.medians[static_cast<int>(t)] = split.median;
    }
}

CohortMatrix filter_missingness(const CohortMatrix& matrix, double threshold,
                                FilterReport* report) {
    if (threshold <= 0 || threshold >= 1) throw Error("missingness threshold must be in (0,1)");
    std::vector<std::size_t> keep;
    FilterReport local;
    for (std::size_t i = 0; i < matrix.n(); ++i) {
        const int c = static_cast<int>(matrix.demographics[i].country);
        if (matrix.row_missing_fraction(i) > threshold) {
            local.dropped[c]++;
            local.dropped_ids.push_back(matrix.ids[i]);
        } else {
            local.kept[c]++;
            keep.push_back(i);
        }
    }
    if (report) *report = local;
    if (keep.empty()) throw EmptyCohort("no participant passes the missingness filter");
    return matrix.subset(keep);
}

ImputeReport iterative_impute(CohortMatrix& matrix, const ImputeParams& params) {
    const std::size_t n = matrix.n();
    const std::size_t d = matrix.d();
    if (n < 2) throw Error("iterative imputation needs at least 2 participants");

    ImputeReport report;
    report.column_missing.assign(d, 0);

    // column medians over observed cells initialise the missing entries
    std::vector<std::vector<std::size_t>> missing_rows(d);
    for (std::size_t j = 0; j < d; ++j) {
        std::vector<double> observed;
        for (std::size_t i = 0; i < n; ++i) {
            if (matrix.is_missing(i, j))
                missing_rows[j].push_back(i);
            else
                observed.push_back(matrix.at(i, j));
        }
        report.column_missing[j] = static_cast<long>(missing_rows[j].size());
        if (observed.empty())
            throw AllMissingColumn("column '" + matrix.feature_names[j] +
                                   "' has no observed value");
        if (!missing_rows[j].empty()) {
            const double med = median_of(std::move(observed));
            for (std::size_t i : missing_rows[j]) matrix.values[i * d + j] = med;
        }
    }

    std::vector<std::size_t> incomplete;
    for (std::size_t j = 0; j < d; ++j)
        if (!missing_rows[j].empty()) incomplete.push_back(j);
    if (incomplete.empty()) {
        report.converged = true;
        return report;
    }

    using Mat = Eigen::MatrixXd;
    using Vec = Eigen::VectorXd;

    for (int sweep = 0; sweep < params.max_sweeps; ++sweep) {
        double max_rel_change = 0;

        // standardized copy of the current grid
        Mat X(n, d);
        Vec col_mean(d), col_std(d);
        for (std::size_t j = 0; j < d; ++j) {
            double mean = 0;
            for (std::size_t i = 0; i < n; ++i) mean += matrix.at(i, j);
            mean /= static_cast<double>(n);
            double ss = 0;
            for (std::size_t i = 0; i < n; ++i) {
                const double c = matrix.at(i, j) - mean;
                ss += c * c;
            }
            double sd = std::sqrt(ss / static_cast<double>(n > 1 ? n - 1 : 1));
            col_mean(static_cast<Eigen::Index>(j)) = mean;
            col_std(static_cast<Eigen::Index>(j)) = sd;
            const double scale = sd > 0 ? 1.0 / sd : 0.0;
            for (std::size_t i = 0; i < n; ++i)
                X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                    (matrix.at(i, j) - mean) * scale;
        }

        for (std::size_t j : incomplete) {
            const auto& rows = missing_rows[j];
            const std::size_t n_obs = n - rows.size();
            if (n_obs < 2) continue;  // too little signal; keep the median fill

            // fit on rows where column j is observed
            std::vector<std::uint8_t> is_missing_row(n, 0);
            for (std::size_t r : rows) is_missing_row[r] = 1;

            Mat A(n_obs, d);  // column j will be zeroed out of the predictors
            Vec y(n_obs);
            std::size_t k = 0;
            for (std::size_t i = 0; i < n; ++i) {
                if (is_missing_row[i]) continue;
                A.row(static_cast<Eigen::Index>(k)) = X.row(static_cast<Eigen::Index>(i));
                y(static_cast<Eigen::Index>(k)) =
                    X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
                ++k;
            }
            A.col(static_cast<Eigen::Index>(j)).setZero();

            Mat gram = A.transpose() * A;
            gram.diagonal().array() += params.ridge;
            Vec beta = gram.ldlt().solve(A.transpose() * y);
            beta(static_cast<Eigen::Index>(j)) = 0;

            const double sd = col_std(static_cast<Eigen::Index>(j));
            const double mean = col_mean(static_cast<Eigen::Index>(j));
            for (std::size_t i : rows) {
                Vec x_row = X.row(static_cast<Eigen::Index>(i));
                x_row(static_cast<Eigen::Index>(j)) = 0;
                const double pred_std = x_row.dot(beta);
                const double pred = mean + pred_std * sd;
                const double old = matrix.values[i * d + j];
                if (sd > 0)
                    max_rel_change = std::max(max_rel_change, std::abs(pred - old) / sd);
                matrix.values[i * d + j] = pred;
            }
        }

        report.sweeps_used = sweep + 1;
        report.final_max_change = max_rel_change;
        if (max_rel_change < params.tol) {
            report.converged = true;
            break;
        }
    }

    // the grid is dense now
    std::fill(matrix.missing.begin(), matrix.missing.end(), 0);
    return report;
}

CohortMatrix attach_country_flags(const CohortMatrix& matrix) {
    if (matrix.has_country_flags) return matrix;
    CohortMatrix out;
    out.ids = matrix.ids;
    out.demographics = matrix.demographics;
    out.scores = matrix.scores;
    out.labels = matrix.labels;
    out.medians = matrix.medians;
    out.has_country_flags = true;
    out.feature_names = matrix.feature_names;
    for (Country c : kAllCountries)
        out.feature_names.push_back("country_flag." + std::string(to_string(c)));

    const std::size_t n = matrix.n();
    const std::size_t d_old = matrix.d();
    const std::size_t d_new = out.feature_names.size();
    out.values.assign(n * d_new, 0.0);
    out.missing.assign(n * d_new, 0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d_old; ++j) {
            out.values[i * d_new + j] = matrix.values[i * d_old + j];
            out.missing[i * d_new + j] = matrix.missing[i * d_old + j];
        }
        out.values[i * d_new + d_old + static_cast<int>(matrix.demographics[i].country)] = 1.0;
    }
    return out;
}

}  // namespace bigfive
