#include "bigfive/run_config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace bigfive {

using nlohmann::json;

const std::vector<std::string> kKnownPopulations = {
    "all",          "gender_balanced", "female",      "male",
    "age_balanced", "student",         "non_student"};

namespace {

void require_keys(const json& obj, const std::set<std::string>& allowed,
                  const std::string& scope) {
    if (!obj.is_object()) throw ConfigError("'" + scope + "' must be an object");
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (!allowed.count(it.key()))
            throw ConfigError("unknown config key '" + scope + "." + it.key() + "'");
    }
}

double get_num(const json& obj, const char* key, double fallback) {
    return obj.contains(key) ? obj.at(key).get<double>() : fallback;
}

InstantMs parse_instant(const json& v, const std::string& scope) {
    auto t = parse_iso8601(v.get<std::string>());
    if (!t) throw ConfigError("bad ISO-8601 timestamp in " + scope);
    return *t;
}

void load_synth(const json& obj, GeneratorConfig& out) {
    require_keys(obj,
                 {"country_counts", "trait_gaussians", "population_gaussians", "item_noise_sd",
                  "effects", "dropout", "study_start", "study_days"},
                 "synth");
    if (obj.contains("country_counts")) {
        require_keys(obj.at("country_counts"), {"UK", "ES", "PE", "CO", "CL"},
                     "synth.country_counts");
        for (Country c : kAllCountries) {
            const std::string name(to_string(c));
            if (obj.at("country_counts").contains(name))
                out.country_counts[static_cast<int>(c)] =
                    obj.at("country_counts").at(name).get<std::size_t>();
        }
    }
    if (obj.contains("trait_gaussians")) {
        require_keys(obj.at("trait_gaussians"), {"UK", "ES", "PE", "CO", "CL"},
                     "synth.trait_gaussians");
        for (Country c : kAllCountries) {
            const std::string cname(to_string(c));
            if (!obj.at("trait_gaussians").contains(cname)) continue;
            const json& per_country = obj.at("trait_gaussians").at(cname);
            require_keys(per_country,
                         {"extraversion", "agreeableness", "conscientiousness", "neuroticism",
                          "openness"},
                         "synth.trait_gaussians." + cname);
            for (Trait t : kAllTraits) {
                const std::string tname(to_string(t));
                if (!per_country.contains(tname)) continue;
                const json& pair = per_country.at(tname);
                if (!pair.is_array() || pair.size() != 2)
                    throw ConfigError("trait gaussian must be [mean, sd]");
                out.trait_gaussians[static_cast<int>(c)][static_cast<int>(t)] = {
                    pair[0].get<double>(), pair[1].get<double>()};
            }
        }
    }
    if (obj.contains("population_gaussians")) {
        const json& pop = obj.at("population_gaussians");
        require_keys(pop,
                     {"extraversion", "agreeableness", "conscientiousness", "neuroticism",
                      "openness"},
                     "synth.population_gaussians");
        for (Trait t : kAllTraits) {
            const std::string tname(to_string(t));
            if (!pop.contains(tname)) continue;
            const json& pair = pop.at(tname);
            if (!pair.is_array() || pair.size() != 2)
                throw ConfigError("population gaussian must be [mean, sd]");
            out.population_gaussians[static_cast<int>(t)] = {pair[0].get<double>(),
                                                             pair[1].get<double>()};
        }
    }
    if (obj.contains("item_noise_sd")) {
        const json& noise = obj.at("item_noise_sd");
        require_keys(noise,
                     {"extraversion", "agreeableness", "conscientiousness", "neuroticism",
                      "openness"},
                     "synth.item_noise_sd");
        for (Trait t : kAllTraits) {
            const std::string tname(to_string(t));
            if (noise.contains(tname))
                out.item_noise_sd[static_cast<int>(t)] = noise.at(tname).get<double>();
        }
    }
    if (obj.contains("effects")) {
        out.effects.clear();
        for (const json& e : obj.at("effects")) {
            require_keys(e, {"family", "trait", "size", "country_modulation"},
                         "synth.effects[]");
            EffectSpec spec;
            spec.family = e.at("family").get<std::string>();
            spec.trait = trait_from_string(e.at("trait").get<std::string>());
            spec.size = e.at("size").get<double>();
            spec.country_modulation = get_num(e, "country_modulation", 0.0);
            out.effects.push_back(std::move(spec));
        }
    }
    if (obj.contains("dropout")) {
        const json& drop = obj.at("dropout");
        require_keys(drop, {"opt_out", "daily_gap"}, "synth.dropout");
        if (drop.contains("opt_out")) {
            require_keys(drop.at("opt_out"),
                         {"accelerometer", "battery", "calls", "unlocks", "light", "location",
                          "noise", "pedometer"},
                         "synth.dropout.opt_out");
            for (Category c : kAllCategories) {
                const std::string name(to_string(c));
                if (drop.at("opt_out").contains(name))
                    out.dropout.opt_out[static_cast<int>(c)] =
                        drop.at("opt_out").at(name).get<double>();
            }
        }
        out.dropout.daily_gap = get_num(drop, "daily_gap", out.dropout.daily_gap);
    }
    if (obj.contains("study_start"))
        out.study_start = parse_instant(obj.at("study_start"), "synth.study_start");
    if (obj.contains("study_days")) out.study_days = obj.at("study_days").get<int>();
}

}  // namespace

std::string RunConfig::resolved_manifest() const {
    return manifest_path.empty() ? out_dir + "/manifest.csv" : manifest_path;
}

RunConfig RunConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return from_json_text(buffer.str(), path);
}

RunConfig RunConfig::from_json_text(const std::string& text, const std::string& origin) {
    json root;
    try {
        root = json::parse(text);
    } catch (const std::exception& e) {
        throw ConfigError(origin + ": " + e.what());
    }

    require_keys(root,
                 {"seed", "threads", "out_dir", "manifest", "synth", "features", "impute",
                  "forest", "rfe", "eval", "methods", "populations", "distributions",
                  "importance"},
                 "config");

    RunConfig config;
    if (root.contains("seed")) config.seed = root.at("seed").get<std::uint64_t>();
    if (root.contains("threads")) config.threads = root.at("threads").get<int>();
    if (root.contains("out_dir")) config.out_dir = root.at("out_dir").get<std::string>();
    if (root.contains("manifest")) config.manifest_path = root.at("manifest").get<std::string>();
    config.synth.seed = config.seed;

    if (root.contains("synth")) load_synth(root.at("synth"), config.synth);
    config.synth.seed = config.seed;

    if (root.contains("features")) {
        const json& f = root.at("features");
        require_keys(f,
                     {"stay_roam_radius_m", "stay_min_dwell_s", "place_merge_radius_m",
                      "silence_threshold_db", "work_start_hour", "work_end_hour",
                      "max_leg_speed_kmh", "malformed_tolerance"},
                     "features");
        config.features.stay_roam_radius_m =
            get_num(f, "stay_roam_radius_m", config.features.stay_roam_radius_m);
        config.features.stay_min_dwell_s =
            get_num(f, "stay_min_dwell_s", config.features.stay_min_dwell_s);
        config.features.place_merge_radius_m =
            get_num(f, "place_merge_radius_m", config.features.place_merge_radius_m);
        config.features.silence_threshold_db =
            get_num(f, "silence_threshold_db", config.features.silence_threshold_db);
        config.features.work_start_hour = static_cast<int>(
            get_num(f, "work_start_hour", config.features.work_start_hour));
        config.features.work_end_hour =
            static_cast<int>(get_num(f, "work_end_hour", config.features.work_end_hour));
        config.features.max_leg_speed_kmh =
            get_num(f, "max_leg_speed_kmh", config.features.max_leg_speed_kmh);
        config.malformed_tolerance =
            get_num(f, "malformed_tolerance", config.malformed_tolerance);
    }

    if (root.contains("impute")) {
        const json& imp = root.at("impute");
        require_keys(imp, {"missing_threshold", "max_sweeps", "tol", "ridge"}, "impute");
        config.missing_threshold = get_num(imp, "missing_threshold", config.missing_threshold);
        config.impute.max_sweeps =
            static_cast<int>(get_num(imp, "max_sweeps", config.impute.max_sweeps));
        config.impute.tol = get_num(imp, "tol", config.impute.tol);
        config.impute.ridge = get_num(imp, "ridge", config.impute.ridge);
    }

    if (root.contains("forest")) {
        const json& f = root.at("forest");
        require_keys(f, {"n_trees", "max_depth", "min_leaf", "features_per_split", "bootstrap"},
                     "forest");
        config.forest.n_trees = static_cast<int>(get_num(f, "n_trees", config.forest.n_trees));
        config.forest.max_depth =
            static_cast<int>(get_num(f, "max_depth", config.forest.max_depth));
        config.forest.min_leaf =
            static_cast<int>(get_num(f, "min_leaf", config.forest.min_leaf));
        config.forest.features_per_split = static_cast<int>(
            get_num(f, "features_per_split", config.forest.features_per_split));
        if (f.contains("bootstrap")) config.forest.bootstrap = f.at("bootstrap").get<bool>();
    }

    if (root.contains("rfe")) {
        const json& r = root.at("rfe");
        require_keys(r, {"target_k", "drop_frac"}, "rfe");
        config.rfe.target_k =
            static_cast<std::size_t>(get_num(r, "target_k", config.rfe.target_k));
        config.rfe.drop_frac = get_num(r, "drop_frac", config.rfe.drop_frac);
    }

    if (root.contains("eval")) {
        const json& e = root.at("eval");
        require_keys(e,
                     {"method1_repeats", "method2_repeats", "balance_repeats",
                      "spain_subsample_n"},
                     "eval");
        config.method1_repeats =
            static_cast<int>(get_num(e, "method1_repeats", config.method1_repeats));
        config.method2_repeats =
            static_cast<int>(get_num(e, "method2_repeats", config.method2_repeats));
        config.balance_repeats =
            static_cast<int>(get_num(e, "balance_repeats", config.balance_repeats));
        config.spain_subsample_n = static_cast<std::size_t>(
            get_num(e, "spain_subsample_n", config.spain_subsample_n));
    }

    if (root.contains("methods")) {
        config.methods.clear();
        for (const json& m : root.at("methods")) {
            const std::string name = m.get<std::string>();
            if (name != "method1" && name != "method2")
                throw ConfigError("unknown method '" + name + "'");
            config.methods.push_back(name);
        }
    }
    if (root.contains("populations")) {
        config.populations.clear();
        for (const json& p : root.at("populations")) {
            const std::string name = p.get<std::string>();
            if (std::find(kKnownPopulations.begin(), kKnownPopulations.end(), name) ==
                kKnownPopulations.end())
                throw ConfigError("unknown population '" + name + "'");
            config.populations.push_back(name);
        }
    }

    if (root.contains("distributions")) {
        const json& d = root.at("distributions");
        require_keys(d, {"bins", "features", "source"}, "distributions");
        config.dist_bins = static_cast<int>(get_num(d, "bins", config.dist_bins));
        if (d.contains("features")) {
            config.dist_features.clear();
            for (const json& f : d.at("features"))
                config.dist_features.push_back(f.get<std::string>());
        }
        if (d.contains("source")) config.dist_source = d.at("source").get<std::string>();
    }

    if (root.contains("importance")) {
        const json& imp = root.at("importance");
        require_keys(imp, {"populations", "traits"}, "importance");
        if (imp.contains("populations")) {
            config.importance_populations.clear();
            for (const json& p : imp.at("populations"))
                config.importance_populations.push_back(p.get<std::string>());
        }
        if (imp.contains("traits")) {
            config.importance_traits.clear();
            for (const json& t : imp.at("traits")) {
                trait_from_string(t.get<std::string>());  // validation only
                config.importance_traits.push_back(t.get<std::string>());
            }
        }
    }

    return config;
}

std::string RunConfig::echo_json() const {
    json root;
    root["seed"] = seed;
    root["threads"] = threads;
    root["out_dir"] = out_dir;
    root["manifest"] = resolved_manifest();

    json synth_obj;
    for (Country c : kAllCountries)
        synth_obj["country_counts"][std::string(to_string(c))] =
            synth.country_counts[static_cast<int>(c)];
    for (Country c : kAllCountries) {
        for (Trait t : kAllTraits) {
            const auto& g = synth.trait_gaussians[static_cast<int>(c)][static_cast<int>(t)];
            synth_obj["trait_gaussians"][std::string(to_string(c))]
                     [std::string(to_string(t))] = {g.mean, g.sd};
        }
    }
    for (Trait t : kAllTraits) {
        const auto& g = synth.population_gaussians[static_cast<int>(t)];
        synth_obj["population_gaussians"][std::string(to_string(t))] = {g.mean, g.sd};
        synth_obj["item_noise_sd"][std::string(to_string(t))] =
            synth.item_noise_sd[static_cast<int>(t)];
    }
    synth_obj["effects"] = json::array();
    for (const auto& e : synth.effects) {
        synth_obj["effects"].push_back({{"family", e.family},
                                        {"trait", std::string(to_string(e.trait))},
                                        {"size", e.size},
                                        {"country_modulation", e.country_modulation}});
    }
    for (Category c : kAllCategories)
        synth_obj["dropout"]["opt_out"][std::string(to_string(c))] =
            synth.dropout.opt_out[static_cast<int>(c)];
    synth_obj["dropout"]["daily_gap"] = synth.dropout.daily_gap;
    synth_obj["study_days"] = synth.study_days;
    if (synth.study_start != 0)
        synth_obj["study_start"] = format_iso8601_utc(synth.study_start);
    root["synth"] = std::move(synth_obj);

    root["features"] = {{"stay_roam_radius_m", features.stay_roam_radius_m},
                        {"stay_min_dwell_s", features.stay_min_dwell_s},
                        {"place_merge_radius_m", features.place_merge_radius_m},
                        {"silence_threshold_db", features.silence_threshold_db},
                        {"work_start_hour", features.work_start_hour},
                        {"work_end_hour", features.work_end_hour},
                        {"max_leg_speed_kmh", features.max_leg_speed_kmh},
                        {"malformed_tolerance", malformed_tolerance}};
    root["impute"] = {{"missing_threshold", missing_threshold},
                      {"max_sweeps", impute.max_sweeps},
                      {"tol", impute.tol},
                      {"ridge", impute.ridge}};
    root["forest"] = {{"n_trees", forest.n_trees},
                      {"max_depth", forest.max_depth},
                      {"min_leaf", forest.min_leaf},
                      {"features_per_split", forest.features_per_split},
                      {"bootstrap", forest.bootstrap}};
    root["rfe"] = {{"target_k", rfe.target_k}, {"drop_frac", rfe.drop_frac}};
    root["eval"] = {{"method1_repeats", method1_repeats},
                    {"method2_repeats", method2_repeats},
                    {"balance_repeats", balance_repeats},
                    {"spain_subsample_n", spain_subsample_n}};
    root["methods"] = methods;
    root["populations"] = populations;
    root["distributions"] = {{"bins", dist_bins},
                             {"features", dist_features},
                             {"source", dist_source}};
    root["importance"] = {{"populations", importance_populations},
                          {"traits", importance_traits}};
    return root.dump(2) + "\n";
}

}  // namespace bigfive
