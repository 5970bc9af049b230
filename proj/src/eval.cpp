#include "bigfive/eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <set>

#include "bigfive/features.hpp"
#include "bigfive/parallel.hpp"
#include "bigfive/rng.hpp"

namespace bigfive {

namespace {

void compute_run_metrics(EvalRun& run) {
    std::size_t correct = 0;
    std::vector<TraitClass> truth, pred;
    truth.reserve(run.instances.size());
    pred.reserve(run.instances.size());
    for (const auto& inst : run.instances) {
        if (inst.truth == inst.pred) ++correct;
        truth.push_back(inst.truth);
        pred.push_back(inst.pred);
    }
    run.accuracy = run.instances.empty()
                       ? 0.0
                       : static_cast<double>(correct) / static_cast<double>(run.instances.size());
    run.kappa = cohen_kappa(truth, pred);
}

// gathers the per-trait design matrix (all feature columns) and labels for
// the given rows
void gather(const CohortMatrix& cohort, const std::vector<std::size_t>& rows, Trait trait,
            std::vector<double>& X, std::vector<TraitClass>& y) {
    const std::size_t d = cohort.d();
    X.resize(rows.size() * d);
    y.resize(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        std::copy(cohort.values.begin() + rows[i] * d,
                  cohort.values.begin() + (rows[i] + 1) * d, X.begin() + i * d);
        y[i] = cohort.labels[static_cast<int>(trait)][rows[i]];
    }
}

// rows of the repeat's population: everyone outside Spain plus a seeded
// Spain subsample of the smallest country's size
std::vector<std::size_t> repeat_population(const CohortMatrix& cohort,
                                           const std::vector<std::size_t>& base_rows,
                                           std::size_t spain_subsample_n, std::uint64_t seed,
                                           int repeat) {
    std::array<std::vector<std::size_t>, kCountryCount> by_country;
    for (std::size_t r : base_rows)
        by_country[static_cast<int>(cohort.demographics[r].country)].push_back(r);

    std::size_t min_count = 0;
    bool first = true;
    for (const auto& rows : by_country) {
        if (rows.empty()) continue;
        if (first || rows.size() < min_count) min_count = rows.size();
        first = false;
    }
    std::size_t target = spain_subsample_n > 0 ? spain_subsample_n : min_count;

    std::vector<std::size_t> population;
    for (Country c : kAllCountries) {
        auto& rows = by_country[static_cast<int>(c)];
        if (c == Country::ES && rows.size() > target) {
            Rng rng(derive_seed(seed, "spain", static_cast<std::uint64_t>(repeat)));
            auto picks = rng.sample_without_replacement(rows.size(), target);
            std::sort(picks.begin(), picks.end());
            for (std::size_t p : picks) population.push_back(rows[p]);
        } else {
            population.insert(population.end(), rows.begin(), rows.end());
        }
    }
    return population;
}

struct Fold {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
    std::string name;
    bool leak = false;
};

MethodResult run_folds(const CohortMatrix& cohort, const EvalParams& params,
                       const std::string& method, int repeats,
                       const std::function<std::vector<Fold>(int repeat)>& make_folds) {
    MethodResult result;
    for (Trait t : kAllTraits) {
        result.runs[static_cast<int>(t)].method = method;
        result.runs[static_cast<int>(t)].trait = t;
    }

    struct FoldTask {
        int repeat;
        Fold fold;
    };
    std::vector<FoldTask> tasks;
    for (int r = 0; r < repeats; ++r) {
        for (auto& fold : make_folds(r)) {
            result.audits.push_back(
                {r, fold.name, fold.train.size(), fold.test.size(), fold.leak});
            tasks.push_back({r, std::move(fold)});
        }
    }

    // per-(task, trait) predictions, deterministic reduction in task order
    std::vector<std::array<std::vector<TraitClass>, kTraitCount>> predictions(tasks.size());
    parallel_for(tasks.size(), params.n_threads, [&](std::size_t ti) {
        const FoldTask& task = tasks[ti];
        std::vector<double> X_train, X_test;
        std::vector<TraitClass> y_train, y_test;
        for (Trait t : kAllTraits) {
            gather(cohort, task.fold.train, t, X_train, y_train);
            gather(cohort, task.fold.test, t, X_test, y_test);
            ForestParams fp = params.forest;
            fp.seed = derive_seed(params.seed, method, static_cast<std::uint64_t>(task.repeat),
                                  hash_tag(task.fold.name), static_cast<std::uint64_t>(t));
            fp.n_threads = 1;
            ForestModel model =
                fit_forest(X_train, y_train, task.fold.train.size(), cohort.d(), fp);
            predictions[ti][static_cast<int>(t)] =
                predict_forest(model, X_test, task.fold.test.size(), cohort.d());
        }
    });

    for (std::size_t ti = 0; ti < tasks.size(); ++ti) {
        const FoldTask& task = tasks[ti];
        for (Trait t : kAllTraits) {
            EvalRun& run = result.runs[static_cast<int>(t)];
            const auto& preds = predictions[ti][static_cast<int>(t)];
            for (std::size_t i = 0; i < task.fold.test.size(); ++i) {
                const std::size_t row = task.fold.test[i];
                run.instances.push_back({cohort.ids[row], task.repeat,
                                         cohort.labels[static_cast<int>(t)][row], preds[i]});
            }
        }
    }
    for (Trait t : kAllTraits) compute_run_metrics(result.runs[static_cast<int>(t)]);
    return result;
}

std::vector<std::size_t> all_rows(const CohortMatrix& cohort) {
    std::vector<std::size_t> rows(cohort.n());
    for (std::size_t i = 0; i < cohort.n(); ++i) rows[i] = i;
    return rows;
}

}  // namespace

double cohen_kappa(const std::vector<TraitClass>& truth, const std::vector<TraitClass>& pred) {
    if (truth.size() != pred.size() || truth.empty())
        throw Error("kappa inputs must be equal-length and non-empty");
    const double n = static_cast<double>(truth.size());
    double t_high = 0, p_high = 0, agree = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i] == TraitClass::High) ++t_high;
        if (pred[i] == TraitClass::High) ++p_high;
        if (truth[i] == pred[i]) ++agree;
    }
    if (t_high == 0 || t_high == n)
        throw DegenerateTruth("kappa undefined for single-class truth");
    const double po = agree / n;
    const double pe = (t_high / n) * (p_high / n) + (1 - t_high / n) * (1 - p_high / n);
    if (pe >= 1.0) return 0.0;
    return (po - pe) / (1 - pe);
}

McNemarResult mcnemar(const EvalRun& run_a, const EvalRun& run_b) {
    std::map<std::pair<std::string, int>, bool> a_correct;
    for (const auto& inst : run_a.instances)
        a_correct[{inst.participant_id, inst.repeat}] = inst.truth == inst.pred;

    McNemarResult res;
    for (const auto& inst : run_b.instances) {
        auto it = a_correct.find({inst.participant_id, inst.repeat});
        if (it == a_correct.end()) continue;
        ++res.n_pairs;
        const bool bc = inst.truth == inst.pred;
        if (it->second && !bc) ++res.b;
        if (!it->second && bc) ++res.c;
    }

    const long n = res.b + res.c;
    if (n == 0) {
        res.no_discordant = true;
        res.p_value = 1.0;
        res.statistic = 0.0;
        return res;
    }

    const double diff = std::max(0.0, std::abs(static_cast<double>(res.b - res.c)) - 1.0);
    res.statistic = diff * diff / static_cast<double>(n);

    if (n < 25) {
        // exact two-sided binomial(n, 1/2) on the smaller discordant count
        res.exact = true;
        const long k = std::min(res.b, res.c);
        double tail = 0;
        double coeff = 1.0;  // C(n, 0)
        for (long i = 0; i <= k; ++i) {
            if (i > 0) coeff = coeff * static_cast<double>(n - i + 1) / static_cast<double>(i);
            tail += coeff;
        }
        res.p_value = std::min(1.0, 2.0 * tail * std::pow(0.5, static_cast<double>(n)));
    } else {
        // chi-square with 1 df survival function
        res.p_value = std::erfc(std::sqrt(res.statistic / 2.0));
    }
    return res;
}

MethodResult method1_loco(const CohortMatrix& cohort, const EvalParams& params,
                          const RepeatSelector& selector) {
    if (!cohort.labeled()) throw Error("cohort must be labeled before evaluation");
    std::set<Country> countries;
    for (const auto& demo : cohort.demographics) countries.insert(demo.country);
    if (countries.size() < 2) throw Error("method 1 needs at least 2 countries");

    auto make_folds = [&](int repeat) {
        std::vector<std::size_t> base = selector ? selector(repeat) : all_rows(cohort);
        std::vector<std::size_t> population = repeat_population(
            cohort, base, params.spain_subsample_n, params.seed, repeat);
        std::vector<Fold> folds;
        for (Country c : kAllCountries) {
            Fold fold;
            fold.name = to_string(c);
            for (std::size_t r : population) {
                if (cohort.demographics[r].country == c)
                    fold.test.push_back(r);
                else
                    fold.train.push_back(r);
            }
            if (fold.test.empty()) continue;
            for (std::size_t r : fold.train)
                if (cohort.demographics[r].country == c) fold.leak = true;
            folds.push_back(std::move(fold));
        }
        return folds;
    };
    return run_folds(cohort, params, "method1", params.method1_repeats, make_folds);
}

MethodResult method2_loso(const CohortMatrix& cohort, const EvalParams& params,
                          const RepeatSelector& selector) {
    if (!cohort.labeled()) throw Error("cohort must be labeled before evaluation");
    const CohortMatrix flagged = attach_country_flags(cohort);

    auto make_folds = [&](int repeat) {
        std::vector<std::size_t> base = selector ? selector(repeat) : all_rows(flagged);
        std::vector<std::size_t> population = repeat_population(
            flagged, base, params.spain_subsample_n, params.seed, repeat);

        // subset sizes mirror the per-country fold sizes of method 1
        std::array<std::size_t, kCountryCount> sizes{};
        for (std::size_t r : population)
            sizes[static_cast<int>(flagged.demographics[r].country)]++;

        Rng rng(derive_seed(params.seed, "m2subset", static_cast<std::uint64_t>(repeat)));
        rng.shuffle(population);

        std::vector<Fold> folds;
        std::size_t cursor = 0;
        int subset_index = 0;
        for (Country c : kAllCountries) {
            const std::size_t size = sizes[static_cast<int>(c)];
            if (size == 0) continue;
            Fold fold;
            fold.name = "subset" + std::to_string(subset_index++);
            fold.test.assign(population.begin() + cursor, population.begin() + cursor + size);
            fold.train.reserve(population.size() - size);
            for (std::size_t i = 0; i < population.size(); ++i)
                if (i < cursor || i >= cursor + size) fold.train.push_back(population[i]);
            cursor += size;
            std::sort(fold.test.begin(), fold.test.end());
            std::sort(fold.train.begin(), fold.train.end());
            folds.push_back(std::move(fold));
        }
        return folds;
    };
    return run_folds(flagged, params, "method2", params.method2_repeats, make_folds);
}

std::vector<std::vector<std::size_t>> balanced_subsets(const CohortMatrix& cohort,
                                                       BalanceAxis axis, int repeats,
                                                       std::uint64_t seed) {
    std::vector<std::vector<std::size_t>> draws;
    draws.reserve(static_cast<std::size_t>(repeats));

    if (axis == BalanceAxis::Gender) {
        std::vector<std::size_t> female, male;
        for (std::size_t i = 0; i < cohort.n(); ++i)
            (cohort.demographics[i].gender == Gender::Female ? female : male).push_back(i);
        if (female.empty() || male.empty())
            throw EmptyStratum("both genders must be present to balance");
        const bool female_minority = female.size() <= male.size();
        const auto& minority = female_minority ? female : male;
        const auto& majority = female_minority ? male : female;
        for (int r = 0; r < repeats; ++r) {
            Rng rng(derive_seed(seed, "balance_gender", static_cast<std::uint64_t>(r)));
            auto picks = rng.sample_without_replacement(majority.size(), minority.size());
            std::vector<std::size_t> rows = minority;
            for (std::size_t p : picks) rows.push_back(majority[p]);
            std::sort(rows.begin(), rows.end());
            draws.push_back(std::move(rows));
        }
        return draws;
    }

    // age: only the dominant bracket shrinks, down to the smallest bracket
    std::array<std::vector<std::size_t>, 3> brackets;
    for (std::size_t i = 0; i < cohort.n(); ++i)
        brackets[static_cast<int>(cohort.demographics[i].age_range)].push_back(i);
    for (const auto& b : brackets)
        if (b.empty()) throw EmptyStratum("all three age brackets must be present to balance");
    std::size_t dominant = 0, smallest = 0;
    for (std::size_t b = 1; b < 3; ++b) {
        if (brackets[b].size() > brackets[dominant].size()) dominant = b;
        if (brackets[b].size() < brackets[smallest].size()) smallest = b;
    }
    const std::size_t target = brackets[smallest].size();
    for (int r = 0; r < repeats; ++r) {
        Rng rng(derive_seed(seed, "balance_age", static_cast<std::uint64_t>(r)));
        std::vector<std::size_t> rows;
        for (std::size_t b = 0; b < 3; ++b) {
            if (b == dominant) {
                auto picks = rng.sample_without_replacement(brackets[b].size(), target);
                for (std::size_t p : picks) rows.push_back(brackets[b][p]);
            } else {
                rows.insert(rows.end(), brackets[b].begin(), brackets[b].end());
            }
        }
        std::sort(rows.begin(), rows.end());
        draws.push_back(std::move(rows));
    }
    return draws;
}

RepeatSelector balanced_selector(const CohortMatrix& cohort, BalanceAxis axis, int repeats,
                                 std::uint64_t seed) {
    auto draws = std::make_shared<std::vector<std::vector<std::size_t>>>(
        balanced_subsets(cohort, axis, repeats, seed));
    return [draws](int repeat) {
        return (*draws)[static_cast<std::size_t>(repeat) % draws->size()];
    };
}

CohortMatrix population_filter(const CohortMatrix& cohort,
                               const std::function<bool(const Demographics&)>& predicate) {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < cohort.n(); ++i)
        if (predicate(cohort.demographics[i])) rows.push_back(i);
    if (rows.empty()) throw EmptyPopulation("population filter matched nobody");
    return cohort.subset(rows);
}

bool is_student(const Demographics& demo) {
    return demo.employment == Employment::BachelorStudent ||
           demo.employment == Employment::MasterStudent;
}

ImportanceRow importance_by_category(const CohortMatrix& cohort, const std::string& population,
                                     Trait trait, const EvalParams& params,
                                     const RfeParams& rfe_params) {
    const std::size_t n = cohort.n();
    if (n < 10) throw TooSmall("importance aggregation needs at least 10 instances");
    if (!cohort.labeled()) throw Error("cohort must be labeled");
    const std::size_t d = cohort.d();

    std::vector<std::vector<double>> per_fit(n);
    parallel_for(n, params.n_threads, [&](std::size_t leave_out) {
        std::vector<std::size_t> rows;
        rows.reserve(n - 1);
        for (std::size_t i = 0; i < n; ++i)
            if (i != leave_out) rows.push_back(i);

        std::vector<double> X;
        std::vector<TraitClass> y;
        gather(cohort, rows, trait, X, y);

        ForestParams fp = params.forest;
        fp.seed = derive_seed(params.seed, "loo", static_cast<std::uint64_t>(leave_out));
        fp.n_threads = 1;

        std::vector<std::size_t> selected =
            rfe(X, y, rows.size(), d, fp, rfe_params.target_k, rfe_params.drop_frac);

        std::vector<double> sub(rows.size() * selected.size());
        for (std::size_t i = 0; i < rows.size(); ++i)
            for (std::size_t j = 0; j < selected.size(); ++j)
                sub[i * selected.size() + j] = X[i * d + selected[j]];
        ForestParams final_fp = fp;
        final_fp.seed = derive_seed(fp.seed, "final");
        ForestModel model = fit_forest(sub, y, rows.size(), selected.size(), final_fp);

        std::vector<double> weights(d, 0.0);
        for (std::size_t j = 0; j < selected.size(); ++j)
            weights[selected[j]] = model.importances[j];
        per_fit[leave_out] = std::move(weights);
    });

    std::vector<double> accumulated(d, 0.0);
    for (const auto& w : per_fit)
        for (std::size_t j = 0; j < d; ++j) accumulated[j] += w[j];

    ImportanceRow row;
    row.population = population;
    row.trait = trait;
    const FeatureCatalog& catalog = FeatureCatalog::instance();
    std::array<std::array<double, 2>, kCategoryCount> by_daytype{};  // [category][daytype]
    double total = 0;
    for (std::size_t j = 0; j < d; ++j) {
        const int cat_idx = catalog.index_of(cohort.feature_names[j]);
        if (cat_idx < 0) continue;  // country flags and other non-catalog columns
        const Category cat = catalog.category_of(static_cast<std::size_t>(cat_idx));
        const DayType dt = catalog.day_type_of(static_cast<std::size_t>(cat_idx));
        by_daytype[static_cast<int>(cat)][dt == DayType::Weekend ? 1 : 0] += accumulated[j];
        total += accumulated[j];
    }
    if (total <= 0) throw Error("no importance mass accumulated");
    for (int c = 0; c < kCategoryCount; ++c) {
        const double weight = by_daytype[c][0] + by_daytype[c][1];
        row.category_weight[c] = weight / total;
        row.dominant_daytype[c] =
            by_daytype[c][1] > by_daytype[c][0] ? DayType::Weekend : DayType::Weekday;
    }
    return row;
}

std::vector<DistributionRow> feature_distributions(const CohortMatrix& cohort,
                                                   const std::vector<std::string>& features,
                                                   int bins) {
    if (bins < 1) throw Error("bins must be >= 1");
    std::vector<DistributionRow> rows;
    for (const std::string& feature : features) {
        auto it = std::find(cohort.feature_names.begin(), cohort.feature_names.end(), feature);
        if (it == cohort.feature_names.end())
            throw UnknownFeature("unknown feature '" + feature + "'");
        const std::size_t j = static_cast<std::size_t>(it - cohort.feature_names.begin());

        double lo = 0, hi = 0;
        bool seen = false;
        for (std::size_t i = 0; i < cohort.n(); ++i) {
            if (cohort.is_missing(i, j)) continue;
            const double v = cohort.at(i, j);
            if (!seen || v < lo) lo = v;
            if (!seen || v > hi) hi = v;
            seen = true;
        }
        if (!seen) throw UnknownFeature("feature '" + feature + "' has no observed values");
        if (hi <= lo) {
            lo -= 0.5;
            hi += 0.5;
        }
        const double width = (hi - lo) / static_cast<double>(bins);

        std::array<std::vector<double>, kCountryCount> counts;
        for (auto& c : counts) c.assign(static_cast<std::size_t>(bins), 0.0);
        std::array<double, kCountryCount> totals{};
        for (std::size_t i = 0; i < cohort.n(); ++i) {
            if (cohort.is_missing(i, j)) continue;
            const double v = cohort.at(i, j);
            int bin = static_cast<int>((v - lo) / width);
            if (bin >= bins) bin = bins - 1;
            if (bin < 0) bin = 0;
            const int country = static_cast<int>(cohort.demographics[i].country);
            counts[country][static_cast<std::size_t>(bin)] += 1.0;
            totals[country] += 1.0;
        }

        for (Country c : kAllCountries) {
            const int ci = static_cast<int>(c);
            if (totals[ci] == 0) continue;
            for (int b = 0; b < bins; ++b) {
                rows.push_back({c, feature, lo + width * b, lo + width * (b + 1),
                                counts[ci][static_cast<std::size_t>(b)] / totals[ci]});
            }
        }
    }
    return rows;
}

}  // namespace bigfive
