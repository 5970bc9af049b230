#include "bigfive/synth.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "bigfive/psychometrics.hpp"
#include "bigfive/rng.hpp"

namespace bigfive {

namespace {

// 2018-03-05 was a Monday
const InstantMs kDefaultStudyStart = days_from_civil(2018, 3, 5) * kMsPerDay;

struct CountryProfile {
    int tz_offset_minutes;
    double city_lat;
    double city_lon;
    double noise_day_db;
    double noise_night_db;  // UK/ES nights are quieter than the South American cities
    double factor;          // sign of fully country-modulated effects
};

const std::array<CountryProfile, kCountryCount> kCountryProfiles = {{
    {0, 51.507, -0.128, 50.0, 37.0, +1.0},     // UK
    {60, 40.417, -3.704, 52.0, 38.0, -1.0},    // ES
    {-300, -12.046, -77.043, 56.0, 45.0, +1.0},  // PE
    {-300, 4.711, -74.072, 57.0, 46.0, -1.0},  // CO
    {-180, -33.449, -70.669, 55.0, 44.0, +1.0},  // CL
}};

// demographic quotas per country for the default cohort shape
const std::array<std::array<int, 2>, kCountryCount> kGenderQuota = {{
    {10, 17}, {16, 53}, {10, 15}, {10, 11}, {8, 16}}};
const std::array<std::array<int, 3>, kCountryCount> kAgeQuota = {{
    {6, 21, 0}, {19, 48, 2}, {1, 20, 4}, {2, 13, 6}, {2, 16, 6}}};
const std::array<std::array<int, 8>, kCountryCount> kEducationQuota = {{
    {0, 0, 9, 3, 9, 3, 2, 1},
    {0, 0, 16, 18, 25, 6, 0, 4},
    {0, 0, 2, 14, 8, 0, 0, 1},
    {1, 0, 3, 13, 2, 2, 0, 0},
    {0, 0, 9, 12, 2, 1, 0, 0}}};
const std::array<std::array<int, 8>, kCountryCount> kEmploymentQuota = {{
    {13, 3, 5, 4, 0, 0, 0, 2},
    {13, 9, 0, 39, 3, 0, 1, 4},
    {9, 3, 1, 6, 1, 1, 0, 4},
    {8, 2, 1, 5, 1, 1, 2, 1},
    {11, 1, 3, 7, 1, 0, 0, 1}}};

// largest-remainder scaling of a quota vector to a new total
std::vector<int> scale_quota(const int* quota, std::size_t k, std::size_t total_new) {
    double total_old = 0;
    for (std::size_t i = 0; i < k; ++i) total_old += quota[i];
    std::vector<int> out(k, 0);
    if (total_old == 0) {
        // degenerate quota: spread uniformly
        for (std::size_t i = 0; i < total_new; ++i) out[i % k]++;
        return out;
    }
    std::vector<std::pair<double, std::size_t>> remainders;
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < k; ++i) {
        const double share = quota[i] * static_cast<double>(total_new) / total_old;
        out[i] = static_cast<int>(std::floor(share));
        assigned += static_cast<std::size_t>(out[i]);
        remainders.push_back({share - std::floor(share), i});
    }
    std::sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    for (std::size_t i = 0; assigned < total_new; ++i, ++assigned)
        out[remainders[i % k].second]++;
    return out;
}

template <typename T>
std::vector<T> quota_values(const std::vector<int>& counts, Rng& rng) {
    std::vector<T> values;
    for (std::size_t i = 0; i < counts.size(); ++i)
        for (int c = 0; c < counts[i]; ++c) values.push_back(static_cast<T>(i));
    rng.shuffle(values);
    return values;
}

struct Behavior {
    double call_out_rate;
    double call_in_rate;
    double call_duration_mean_s;
    double unlock_rate;
    double noise_day_db;
    double noise_night_db;
    double steps_scale;
    double outing_prob;
    double evening_outing_prob;
    double accel_amp;
    double light_day_lux;
    double charge_rate;

    std::map<std::string, double> as_map() const {
        return {{"call_out_rate", call_out_rate},
                {"call_in_rate", call_in_rate},
                {"call_duration_mean_s", call_duration_mean_s},
                {"unlock_rate", unlock_rate},
                {"noise_day_db", noise_day_db},
                {"noise_night_db", noise_night_db},
                {"steps_scale", steps_scale},
                {"outing_prob", outing_prob},
                {"evening_outing_prob", evening_outing_prob},
                {"accel_amp", accel_amp},
                {"light_day_lux", light_day_lux},
                {"charge_rate", charge_rate}};
    }
};

double clamp(double v, double lo, double hi) { return std::min(hi, std::max(lo, v)); }

Behavior make_behavior(const GeneratorConfig& config, Country country,
                       const TraitScores& scores) {
    const CountryProfile& profile = kCountryProfiles[static_cast<int>(country)];

    std::array<double, kTraitCount> z{};
    for (int t = 0; t < kTraitCount; ++t) {
        const TraitGaussian& g = config.population_gaussians[t];
        z[t] = g.sd > 0 ? (scores.values[t] - g.mean) / g.sd : 0.0;
    }
    auto shift = [&](const std::string& family) {
        double u = 0;
        for (const EffectSpec& e : config.effects) {
            if (e.family != family) continue;
            const double mult = (1.0 - e.country_modulation) +
                                e.country_modulation * profile.factor;
            u += e.size * z[static_cast<int>(e.trait)] * mult;
        }
        return u;
    };

    Behavior b;
    b.call_out_rate = 2.2 * std::exp(0.35 * shift("call_rate"));
    b.call_in_rate = 1.8 * std::exp(0.35 * shift("call_rate"));
    b.call_duration_mean_s = 90.0 * std::exp(0.4 * shift("call_duration"));
    b.unlock_rate = 36.0 * std::exp(0.3 * shift("unlock_rate"));
    const double all_noise = 3.0 * shift("noise_level");
    b.noise_day_db = profile.noise_day_db + all_noise;
    b.noise_night_db = profile.noise_night_db + all_noise + 4.0 * shift("noise_night_level");
    b.steps_scale = std::exp(0.4 * shift("steps"));
    b.outing_prob = clamp(0.55 + 0.15 * shift("outing"), 0.05, 0.95);
    b.evening_outing_prob = clamp(0.25 + 0.10 * shift("outing"), 0.02, 0.90);
    b.accel_amp = 1.2 * std::exp(0.3 * shift("accel_amp"));
    b.light_day_lux = 260.0 * std::exp(0.3 * shift("light_level"));
    b.charge_rate = 1.2 * std::exp(0.25 * shift("charge_rate"));
    return b;
}

struct GeoPoint {
    double lat;
    double lon;
};

GeoPoint offset_point(const GeoPoint& origin, double distance_m, double bearing_rad) {
    const double dlat = distance_m * std::cos(bearing_rad) / 111320.0;
    const double dlon = distance_m * std::sin(bearing_rad) /
                        (111320.0 * std::cos(origin.lat * M_PI / 180.0));
    return {origin.lat + dlat, origin.lon + dlon};
}

// one scheduled stretch of the local day, minutes since local midnight
struct Segment {
    double start_min;
    double end_min;
    int place = -1;        // index into places; -1 = commute
    int from = 0, to = 0;  // commute endpoints
};

struct DaySchedule {
    std::vector<Segment> segments;
    std::vector<std::pair<double, double>> movement_windows;  // commutes + walks
};

GeoPoint position_at(const DaySchedule& schedule, const std::vector<GeoPoint>& places,
                     double minute) {
    for (const Segment& seg : schedule.segments) {
        if (minute < seg.start_min || minute >= seg.end_min) continue;
        if (seg.place >= 0) return places[static_cast<std::size_t>(seg.place)];
        const double f = (minute - seg.start_min) / (seg.end_min - seg.start_min);
        const GeoPoint& a = places[static_cast<std::size_t>(seg.from)];
        const GeoPoint& b = places[static_cast<std::size_t>(seg.to)];
        return {a.lat + f * (b.lat - a.lat), a.lon + f * (b.lon - a.lon)};
    }
    return places[0];  // home
}

DaySchedule build_schedule(bool weekend, const Behavior& behavior,
                           std::size_t n_places, Rng& rng) {
    DaySchedule day;
    auto add_stay = [&](double from, double to, int place) {
        if (to > from) day.segments.push_back({from, to, place, 0, 0});
    };
    auto add_commute = [&](double from, double to, int a, int b) {
        day.segments.push_back({from, to, -1, a, b});
        day.movement_windows.push_back({from, to});
    };
    auto pick_other = [&]() {
        return n_places > 2 ? 2 + static_cast<int>(rng.uniform_int(n_places - 2)) : 0;
    };

    if (!weekend) {
        const double leave_home = 510 + rng.uniform(-20, 20);
        const double commute1 = rng.uniform(15, 30);
        const double leave_work = 1020 + rng.uniform(-30, 30);
        const double commute2 = rng.uniform(15, 30);
        add_stay(0, leave_home, 0);
        add_commute(leave_home, leave_home + commute1, 0, 1);
        double at_work_until = leave_work;
        const bool lunch_walk = rng.bernoulli(0.5);
        add_stay(leave_home + commute1, at_work_until, 1);
        if (lunch_walk) {
            // a 20-minute midday walk without leaving the work place cluster
            const double walk_start = 740 + rng.uniform(-20, 20);
            day.movement_windows.push_back({walk_start, walk_start + 20});
        }
        add_commute(leave_work, leave_work + commute2, 1, 0);
        double home_at = leave_work + commute2;
        if (rng.bernoulli(behavior.evening_outing_prob)) {
            const int other = pick_other();
            const double out_at = std::max(home_at + 10.0, 1170 + rng.uniform(-20, 20));
            const double back_at = out_at + rng.uniform(90, 150);
            add_stay(home_at, out_at, 0);
            add_commute(out_at, out_at + 12, 0, other);
            add_stay(out_at + 12, back_at, other);
            add_commute(back_at, back_at + 12, other, 0);
            add_stay(back_at + 12, 1440, 0);
        } else {
            add_stay(home_at, 1440, 0);
        }
        return day;
    }

    // weekend
    double cursor = 0;
    if (rng.bernoulli(behavior.outing_prob)) {
        const int other = pick_other();
        const double out_at = 660 + rng.uniform(-60, 60);
        const double back_at = out_at + rng.uniform(120, 240);
        add_stay(cursor, out_at, 0);
        add_commute(out_at, out_at + 15, 0, other);
        add_stay(out_at + 15, back_at, other);
        add_commute(back_at, back_at + 15, other, 0);
        cursor = back_at + 15;
        if (rng.bernoulli(behavior.outing_prob * 0.5) && cursor < 1100) {
            const int other2 = pick_other();
            const double out2 = cursor + rng.uniform(30, 90);
            const double back2 = out2 + rng.uniform(60, 150);
            add_stay(cursor, out2, 0);
            add_commute(out2, out2 + 15, 0, other2);
            add_stay(out2 + 15, back2, other2);
            add_commute(back2, back2 + 15, other2, 0);
            cursor = back2 + 15;
        }
    }
    add_stay(cursor, 1440, 0);
    return day;
}

std::string format_double(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

}  // namespace

const std::vector<std::string> kEffectFamilies = {
    "call_rate",  "call_duration", "unlock_rate", "noise_level", "noise_night_level",
    "steps",      "outing",        "accel_amp",   "light_level", "charge_rate"};

GeneratorConfig::GeneratorConfig() {
    // observed-cohort gaussians per country (E, A, C, N, O)
    const double means[kCountryCount][kTraitCount] = {
        {27.72, 39.03, 33.65, 27.09, 36.03},
        {30.48, 40.17, 33.18, 28.67, 36.46},
        {31.33, 38.76, 34.87, 30.80, 37.54},
        {29.84, 38.37, 36.60, 32.70, 38.50},
        {29.22, 39.14, 35.31, 29.56, 36.62}};
    const double sds[kCountryCount][kTraitCount] = {
        {9.58, 7.26, 6.16, 8.23, 6.15},
        {7.37, 5.43, 5.45, 7.83, 4.79},
        {5.91, 4.67, 5.67, 6.36, 4.26},
        {6.75, 4.58, 5.00, 7.51, 4.62},
        {6.83, 5.58, 4.71, 8.23, 5.31}};
    for (int c = 0; c < kCountryCount; ++c)
        for (int t = 0; t < kTraitCount; ++t)
            trait_gaussians[c][t] = {means[c][t], sds[c][t]};

    const double pop_means[kTraitCount] = {30.01, 39.50, 34.17, 29.34, 36.81};
    const double pop_sds[kTraitCount] = {7.42, 5.56, 5.55, 7.83, 5.01};
    for (int t = 0; t < kTraitCount; ++t)
        population_gaussians[t] = {pop_means[t], pop_sds[t]};

    dropout.opt_out[static_cast<int>(Category::Accelerometer)] = 0.348;
    dropout.opt_out[static_cast<int>(Category::Battery)] = 0.0;
    dropout.opt_out[static_cast<int>(Category::Calls)] = 0.390;
    dropout.opt_out[static_cast<int>(Category::Unlocks)] = 0.3025;
    dropout.opt_out[static_cast<int>(Category::Light)] = 0.158;
    dropout.opt_out[static_cast<int>(Category::Location)] = 0.156;
    dropout.opt_out[static_cast<int>(Category::Noise)] = 0.094;
    dropout.opt_out[static_cast<int>(Category::Pedometer)] = 0.469;
}

void GeneratorConfig::validate() const {
    if (study_days < 1) throw ConfigError("study_days must be >= 1");
    for (double p : dropout.opt_out)
        if (p < 0 || p > 1) throw ConfigError("opt_out probabilities must be in [0,1]");
    if (dropout.daily_gap < 0 || dropout.daily_gap > 1)
        throw ConfigError("daily_gap must be in [0,1]");
    for (const auto& country : trait_gaussians)
        for (const auto& g : country)
            if (g.sd < 0) throw ConfigError("trait gaussian sd must be >= 0");
    for (const EffectSpec& e : effects) {
        if (std::find(kEffectFamilies.begin(), kEffectFamilies.end(), e.family) ==
            kEffectFamilies.end())
            throw ConfigError("unknown effect family '" + e.family + "'");
        if (e.country_modulation < 0 || e.country_modulation > 1)
            throw ConfigError("country_modulation must be in [0,1]");
        if (!std::isfinite(e.size)) throw ConfigError("effect size must be finite");
    }
    for (double sd : item_noise_sd)
        if (sd < 0) throw ConfigError("item_noise_sd must be >= 0");
}

SynthCohort generate(const GeneratorConfig& config) {
    config.validate();
    const InstantMs start =
        config.study_start != 0 ? config.study_start : kDefaultStudyStart;
    const std::int64_t start_day = floor_div(start, kMsPerDay);

    SynthCohort cohort;
    cohort.manifest.study_start = start;
    cohort.manifest.study_end = start + static_cast<std::int64_t>(config.study_days) * kMsPerDay;

    std::size_t total = 0;
    for (std::size_t c : config.country_counts) total += c;
    if (total == 0) throw ConfigError("empty cohort");
    const int id_width = total >= 1000 ? 5 : 4;

    // phase 1: demographics per country
    struct Pending {
        Participant participant;
        ParticipantTruth truth;
    };
    std::vector<Pending> pending;
    pending.reserve(total);
    std::size_t serial = 0;
    for (int ci = 0; ci < kCountryCount; ++ci) {
        const std::size_t n = config.country_counts[ci];
        if (n == 0) continue;
        Rng demo_rng(derive_seed(config.seed, "demographics", static_cast<std::uint64_t>(ci)));
        auto genders = quota_values<Gender>(
            scale_quota(kGenderQuota[ci].data(), 2, n), demo_rng);
        auto ages = quota_values<AgeRange>(scale_quota(kAgeQuota[ci].data(), 3, n), demo_rng);
        auto educations = quota_values<Education>(
            scale_quota(kEducationQuota[ci].data(), 8, n), demo_rng);
        auto employments = quota_values<Employment>(
            scale_quota(kEmploymentQuota[ci].data(), 8, n), demo_rng);

        for (std::size_t i = 0; i < n; ++i) {
            Pending p;
            char buf[16];
            std::snprintf(buf, sizeof(buf), "p%0*zu", id_width, ++serial);
            p.participant.id = buf;
            p.participant.country = static_cast<Country>(ci);
            p.participant.gender = genders[i];
            p.participant.age_range = ages[i];
            p.participant.education = educations[i];
            p.participant.employment = employments[i];
            p.participant.tz_offset_minutes = kCountryProfiles[ci].tz_offset_minutes;
            p.truth.id = p.participant.id;
            p.truth.country = p.participant.country;
            pending.push_back(std::move(p));
        }
    }

    // phase 2: trait scores, sample-moment matched per (country, trait)
    for (int ci = 0; ci < kCountryCount; ++ci) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < pending.size(); ++i)
            if (static_cast<int>(pending[i].participant.country) == ci) members.push_back(i);
        if (members.empty()) continue;
        for (int t = 0; t < kTraitCount; ++t) {
            Rng rng(derive_seed(config.seed, "scores", static_cast<std::uint64_t>(ci),
                                static_cast<std::uint64_t>(t)));
            const TraitGaussian& g = config.trait_gaussians[ci][t];
            std::vector<double> z(members.size());
            for (double& v : z) v = rng.normal();
            if (members.size() >= 2) {
                double mean = 0;
                for (double v : z) mean += v;
                mean /= static_cast<double>(z.size());
                double ss = 0;
                for (double v : z) ss += (v - mean) * (v - mean);
                const double sd = std::sqrt(ss / static_cast<double>(z.size() - 1));
                for (double& v : z) v = sd > 0 ? (v - mean) / sd : 0.0;
            } else {
                z[0] = 0;
            }
            for (std::size_t k = 0; k < members.size(); ++k) {
                const double raw = g.mean + g.sd * z[k];
                const int score =
                    static_cast<int>(clamp(std::round(raw), 10.0, 50.0));
                pending[members[k]].truth.scores.values[t] = score;
            }
        }
    }

    // phase 2.5: opt-outs drawn as cohort-level quotas so realized rates track
    // the configured probabilities exactly (up to rounding)
    for (int c = 0; c < kCategoryCount; ++c) {
        const double p = config.dropout.opt_out[c];
        const std::size_t k = static_cast<std::size_t>(
            std::llround(p * static_cast<double>(pending.size())));
        if (k == 0) continue;
        Rng rng(derive_seed(config.seed, "optout", static_cast<std::uint64_t>(c)));
        for (std::size_t pick : rng.sample_without_replacement(pending.size(), k))
            pending[pick].truth.opted_out[c] = true;
    }

    // phase 3: responses, behavior, events
    const ScoringKey& key = ScoringKey::bundled();
    // key item slots per trait, in item order
    std::array<std::vector<int>, kTraitCount> trait_slots;
    for (int i = 0; i < kQuestionnaireItems; ++i)
        trait_slots[static_cast<int>(key.items[i].trait)].push_back(i);

    cohort.event_streams.resize(pending.size());
    for (std::size_t pi = 0; pi < pending.size(); ++pi) {
        Pending& p = pending[pi];
        const std::uint64_t p_seed = derive_seed(config.seed, "participant",
                                                 static_cast<std::uint64_t>(pi));
        const CountryProfile& profile =
            kCountryProfiles[static_cast<int>(p.participant.country)];
        const int tz = p.participant.tz_offset_minutes;

        // questionnaire responses back-solved to the drawn scores
        {
            Rng rng(derive_seed(p_seed, "items"));
            for (int t = 0; t < kTraitCount; ++t) {
                const int score = p.truth.scores.values[t];
                const double base = score / 10.0;
                std::array<int, 10> values;
                int sum = 0;
                for (int j = 0; j < 10; ++j) {
                    values[j] = static_cast<int>(
                        clamp(std::round(base + config.item_noise_sd[t] * rng.normal()), 1.0,
                              5.0));
                    sum += values[j];
                }
                int j = 0;
                while (sum != score) {
                    if (sum < score && values[j] < 5) {
                        ++values[j];
                        ++sum;
                    } else if (sum > score && values[j] > 1) {
                        --values[j];
                        --sum;
                    }
                    j = (j + 1) % 10;
                }
                for (int j2 = 0; j2 < 10; ++j2) {
                    const int slot = trait_slots[t][j2];
                    values[j2] = std::max(1, std::min(5, values[j2]));
                    p.participant.responses[slot] = key.items[slot].keying == Keying::Positive
                                                        ? values[j2]
                                                        : 6 - values[j2];
                }
            }
        }

        std::array<std::vector<bool>, kCategoryCount> gap;
        {
            Rng rng(derive_seed(p_seed, "gaps"));
            for (int c = 0; c < kCategoryCount; ++c) {
                gap[c].assign(static_cast<std::size_t>(config.study_days), false);
                for (int d = 0; d < config.study_days; ++d) {
                    if (config.dropout.daily_gap > 0 && rng.bernoulli(config.dropout.daily_gap)) {
                        gap[c][static_cast<std::size_t>(d)] = true;
                        p.truth.gap_days.push_back({static_cast<Category>(c), d});
                    }
                }
            }
        }

        const Behavior behavior =
            make_behavior(config, p.participant.country, p.truth.scores);
        p.truth.behavior = behavior.as_map();

        // geography: home, work, a few other places
        std::vector<GeoPoint> places;
        {
            Rng rng(derive_seed(p_seed, "geo"));
            GeoPoint home = offset_point({profile.city_lat, profile.city_lon},
                                         rng.uniform(500, 6000), rng.uniform(0, 2 * M_PI));
            places.push_back(home);
            places.push_back(
                offset_point(home, rng.uniform(2000, 7000), rng.uniform(0, 2 * M_PI)));
            const int n_other = 2 + static_cast<int>(rng.uniform_int(3));
            for (int k = 0; k < n_other; ++k)
                places.push_back(
                    offset_point(home, rng.uniform(800, 5000), rng.uniform(0, 2 * M_PI)));
        }

        std::vector<SensorEvent>& events = cohort.event_streams[pi];
        auto active = [&](Category c, int d) {
            return !p.truth.opted_out[static_cast<int>(c)] &&
                   !gap[static_cast<int>(c)][static_cast<std::size_t>(d)];
        };
        auto utc_at = [&](int d, double wall_minute) {
            return (start_day + d) * kMsPerDay +
                   static_cast<InstantMs>(std::llround(wall_minute * 60000.0)) -
                   static_cast<InstantMs>(tz) * kMsPerMinute;
        };

        for (int d = 0; d < config.study_days; ++d) {
            Rng rng(derive_seed(p_seed, "day", static_cast<std::uint64_t>(d)));
            const bool weekend =
                is_weekend(LocalDate{static_cast<std::int32_t>(start_day + d)});
            const DaySchedule schedule = build_schedule(weekend, behavior, places.size(), rng);

            // location fixes every 15 minutes
            if (active(Category::Location, d)) {
                for (int m = 0; m < 1440; m += 15) {
                    GeoPoint pos = position_at(schedule, places, m);
                    pos = offset_point(pos, std::abs(rng.normal(0, 12)),
                                       rng.uniform(0, 2 * M_PI));
                    SensorEvent e;
                    e.category = Category::Location;
                    e.timestamp_utc = utc_at(d, m);
                    e.payload = LocationFix{pos.lat, pos.lon, 10.0};
                    events.push_back(std::move(e));
                }
            }

            // noise every 15 minutes, offset from the location cadence
            if (active(Category::Noise, d)) {
                for (int m = 7; m < 1440; m += 15) {
                    const int hour = m / 60;
                    const bool night = hour >= 22 || hour < 4;
                    const double base = night ? behavior.noise_night_db : behavior.noise_day_db;
                    SensorEvent e;
                    e.category = Category::Noise;
                    e.timestamp_utc = utc_at(d, m);
                    e.payload = NoiseSample{std::max(0.0, base + rng.normal(0, 4.5))};
                    events.push_back(std::move(e));
                }
            }

            // light every 15 minutes
            if (active(Category::Light, d)) {
                for (int m = 11; m < 1440; m += 15) {
                    const int hour = m / 60;
                    const bool daylight = hour >= 8 && hour < 20;
                    const double lux = daylight
                                           ? behavior.light_day_lux *
                                                 std::exp(rng.normal(0, 0.6))
                                           : 3.0 * std::exp(rng.normal(0, 0.5));
                    SensorEvent e;
                    e.category = Category::Light;
                    e.timestamp_utc = utc_at(d, m);
                    e.payload = LightSample{lux};
                    events.push_back(std::move(e));
                }
            }

            // battery every 30 minutes with charge windows
            if (active(Category::Battery, d)) {
                std::vector<std::pair<double, double>> charging;
                const long n_charges = rng.poisson(behavior.charge_rate);
                for (long k = 0; k < n_charges; ++k) {
                    const double at = rng.uniform(1140, 1380);  // evening
                    charging.push_back({at, at + 90});
                }
                double level = rng.uniform(55, 95);
                for (int m = 0; m < 1440; m += 30) {
                    bool is_charging = false;
                    for (const auto& w : charging)
                        if (m >= w.first && m < w.second) is_charging = true;
                    level += is_charging ? 12.0 : -1.1;
                    level = clamp(level, 5.0, 100.0);
                    SensorEvent e;
                    e.category = Category::Battery;
                    e.timestamp_utc = utc_at(d, m);
                    e.payload = BatteryState{level, is_charging};
                    events.push_back(std::move(e));
                }
            }

            // unlock/lock pairs
            if (active(Category::Unlocks, d)) {
                const double rate = behavior.unlock_rate * (weekend ? 0.85 : 1.0);
                long n = rng.poisson(rate);
                std::vector<double> at;
                for (long k = 0; k < n; ++k) at.push_back(rng.uniform(420, 1435));
                std::sort(at.begin(), at.end());
                for (std::size_t k = 0; k < at.size(); ++k) {
                    double session_s = rng.lognormal(std::log(140.0), 0.7);
                    const double gap_s =
                        (k + 1 < at.size() ? (at[k + 1] - at[k]) : (1440 - at[k])) * 60.0;
                    session_s = std::min(session_s, std::max(10.0, 0.9 * gap_s));
                    SensorEvent unlock;
                    unlock.category = Category::Unlocks;
                    unlock.timestamp_utc = utc_at(d, at[k]);
                    unlock.payload = ScreenEvent{ScreenKind::Unlock};
                    events.push_back(std::move(unlock));
                    SensorEvent lock;
                    lock.category = Category::Unlocks;
                    lock.timestamp_utc = utc_at(d, at[k] + session_s / 60.0);
                    lock.payload = ScreenEvent{ScreenKind::Lock};
                    events.push_back(std::move(lock));
                }
            }

            // calls
            if (active(Category::Calls, d)) {
                auto emit_calls = [&](CallDirection dir, double lambda, bool with_duration) {
                    const long n = rng.poisson(lambda);
                    for (long k = 0; k < n; ++k) {
                        const double at = rng.uniform(480, 1380);
                        CallEvent call;
                        call.direction = dir;
                        call.duration_s =
                            with_duration
                                ? rng.lognormal(std::log(behavior.call_duration_mean_s), 0.7)
                                : 0.0;
                        const int peer = static_cast<int>(
                            14.0 * rng.uniform() * rng.uniform());  // skewed to few contacts
                        char buf[24];
                        std::snprintf(buf, sizeof(buf), "x%016llx",
                                      static_cast<unsigned long long>(
                                          derive_seed(p_seed, "peer",
                                                      static_cast<std::uint64_t>(peer))));
                        call.correspondent = buf;
                        SensorEvent e;
                        e.category = Category::Calls;
                        e.timestamp_utc = utc_at(d, at);
                        e.payload = std::move(call);
                        events.push_back(std::move(e));
                    }
                };
                const double wk = weekend ? 1.15 : 1.0;
                emit_calls(CallDirection::Outgoing, behavior.call_out_rate * wk, true);
                emit_calls(CallDirection::Incoming, behavior.call_in_rate * wk, true);
                emit_calls(CallDirection::Missed, 0.4, false);
                emit_calls(CallDirection::Rejected, 0.15, false);
            }

            // movement windows drive pedometer and accelerometer
            const bool pedometer_on = active(Category::Pedometer, d);
            const bool accel_on = active(Category::Accelerometer, d);
            if (pedometer_on || accel_on) {
                for (const auto& window : schedule.movement_windows) {
                    const double duration_min = window.second - window.first;
                    if (duration_min <= 1) continue;
                    if (pedometer_on) {
                        const double steps = duration_min * 85.0 * behavior.steps_scale *
                                             std::exp(rng.normal(0, 0.15));
                        SensorEvent e;
                        e.category = Category::Pedometer;
                        e.timestamp_utc = utc_at(d, window.first);
                        e.payload = PedometerBurst{std::max(0L, std::lround(steps))};
                        events.push_back(std::move(e));
                    }
                    if (accel_on) {
                        const long bursts =
                            1 + rng.poisson(std::min(2.0, duration_min / 20.0));
                        for (long bk = 0; bk < bursts; ++bk) {
                            const double at =
                                window.first + rng.uniform(0, std::max(1.0, duration_min - 1));
                            AccelBurst burst;
                            const double freq = rng.uniform(0.9, 1.4);  // walking cadence, Hz
                            const double amp =
                                behavior.accel_amp * (0.8 + 0.4 * rng.uniform());
                            const double phase = rng.uniform(0, 2 * M_PI);
                            const int n_samples = 136;  // ~45 s at 3 Hz
                            burst.samples.reserve(n_samples);
                            for (int s = 0; s < n_samples; ++s) {
                                const double t_s = s / 3.0;
                                burst.samples.push_back(AccelSample{
                                    static_cast<std::int32_t>(std::lround(t_s * 1000)),
                                    rng.normal(0, 0.08), rng.normal(0, 0.08),
                                    9.81 + amp * std::sin(2 * M_PI * freq * t_s + phase) +
                                        rng.normal(0, 0.12)});
                            }
                            SensorEvent e;
                            e.category = Category::Accelerometer;
                            e.timestamp_utc = utc_at(d, at);
                            e.payload = std::move(burst);
                            events.push_back(std::move(e));
                        }
                    }
                }
            }
        }
    }

    for (auto& p : pending) {
        p.participant.validate();
        ManifestEntry entry;
        entry.participant = std::move(p.participant);
        entry.log_path = "logs/" + p.truth.id + ".jsonl";
        cohort.manifest.entries.push_back(std::move(entry));
        cohort.truth.push_back(std::move(p.truth));
    }
    return cohort;
}

void write_ground_truth(const std::vector<ParticipantTruth>& truth, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write ground truth: " + path);
    out << "id,country";
    for (Trait t : kAllTraits) out << ',' << to_string(t);
    for (Category c : kAllCategories) out << ",optout_" << to_string(c);
    out << ",gap_days";
    if (!truth.empty())
        for (const auto& [name, value] : truth.front().behavior) out << ',' << name;
    out << '\n';
    for (const auto& p : truth) {
        out << p.id << ',' << to_string(p.country);
        for (int v : p.scores.values) out << ',' << v;
        for (bool o : p.opted_out) out << ',' << (o ? 1 : 0);
        out << ',';
        for (std::size_t i = 0; i < p.gap_days.size(); ++i) {
            if (i) out << ';';
            out << to_string(p.gap_days[i].first) << ':' << p.gap_days[i].second;
        }
        for (const auto& [name, value] : p.behavior) out << ',' << format_double(value);
        out << '\n';
    }
}

void write_cohort(const SynthCohort& cohort, const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(fs::path(out_dir) / "logs");
    write_manifest(cohort.manifest, (fs::path(out_dir) / "manifest.csv").string());
    for (std::size_t i = 0; i < cohort.manifest.entries.size(); ++i) {
        const auto& entry = cohort.manifest.entries[i];
        write_event_log(cohort.event_streams[i],
                        (fs::path(out_dir) / entry.log_path).string());
    }
    write_ground_truth(cohort.truth, (fs::path(out_dir) / "ground_truth.csv").string());
}

}  // namespace bigfive
