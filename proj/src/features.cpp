#include "bigfive/features.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <unordered_map>

namespace bigfive {

namespace {

constexpr double kEarthRadiusM = 6371000.0;
constexpr double kDegToRad = M_PI / 180.0;

const char* period_suffix(DayPeriod p) {
    switch (p) {
        case DayPeriod::Morning: return "morning";
        case DayPeriod::Afternoon: return "afternoon";
        case DayPeriod::Evening: return "evening";
        case DayPeriod::Night: return "night";
        case DayPeriod::EntireDay: return "entire_day";
    }
    return "?";
}

std::vector<std::string> build_daily_base_names() {
    std::vector<std::string> names;
    names.reserve(kDailyBaseCount);
    auto add = [&names](std::string n) { names.push_back(std::move(n)); };

    add("accelerometer.freq_mean");
    add("accelerometer.freq_std");
    add("accelerometer.amp_mean");
    add("accelerometer.amp_std");
    for (DayPeriod p : kDayParts) add("accelerometer.energy_mean." + std::string(period_suffix(p)));
    for (DayPeriod p : kDayParts) add("accelerometer.energy_std." + std::string(period_suffix(p)));

    add("battery.level_mean");
    add("battery.charge_count");

    add("calls.incoming_count");
    add("calls.outgoing_count");
    add("calls.missed_count");
    add("calls.rejected_count");
    add("calls.incoming_duration");
    add("calls.outgoing_duration");
    add("calls.incoming_contacts");
    add("calls.outgoing_contacts");
    add("calls.missed_contacts");

    for (DayPeriod p : kDayPartsAndEntire) add("unlocks.first_unlock." + std::string(period_suffix(p)));
    add("unlocks.last_unlock");
    add("unlocks.session_mean");
    add("unlocks.interval_mean");
    add("unlocks.count");

    for (DayPeriod p : kDayPartsAndEntire) add("light.median_lux." + std::string(period_suffix(p)));

    add("location.entropy");
    add("location.place_count");
    add("location.place_dwell");
    add("location.stop_count");
    add("location.gyration");
    for (DayPeriod p : kDayPartsAndEntire) add("location.home_time." + std::string(period_suffix(p)));
    add("location.work_time.entire_day");
    add("location.distance");
    add("location.travel_time");

    for (DayPeriod p : kDayPartsAndEntire) add("noise.median_db." + std::string(period_suffix(p)));
    for (DayPeriod p : kDayPartsAndEntire) add("noise.median_scaled." + std::string(period_suffix(p)));
    for (DayPeriod p : kDayPartsAndEntire) add("noise.silence_ratio." + std::string(period_suffix(p)));

    for (DayPeriod p : kDayPartsAndEntire) add("pedometer.steps." + std::string(period_suffix(p)));

    return names;
}

const std::unordered_map<std::string, int>& daily_base_lookup() {
    static const std::unordered_map<std::string, int> map = [] {
        std::unordered_map<std::string, int> m;
        const auto& names = daily_base_names();
        for (std::size_t i = 0; i < names.size(); ++i) m[names[i]] = static_cast<int>(i);
        return m;
    }();
    return map;
}

int base_of(const char* name) {
    int idx = daily_base_index(name);
    if (idx < 0) throw Error(std::string("internal: unknown base ") + name);
    return idx;
}

// base indices resolved once
struct BaseIdx {
    int accel_freq_mean = base_of("accelerometer.freq_mean");
    int accel_freq_std = base_of("accelerometer.freq_std");
    int accel_amp_mean = base_of("accelerometer.amp_mean");
    int accel_amp_std = base_of("accelerometer.amp_std");
    int accel_energy_mean = base_of("accelerometer.energy_mean.morning");  // +period
    int accel_energy_std = base_of("accelerometer.energy_std.morning");
    int battery_level = base_of("battery.level_mean");
    int battery_charges = base_of("battery.charge_count");
    int calls_first = base_of("calls.incoming_count");
    int unlocks_first = base_of("unlocks.first_unlock.morning");  // +period incl. entire
    int unlocks_last = base_of("unlocks.last_unlock");
    int unlocks_session = base_of("unlocks.session_mean");
    int unlocks_interval = base_of("unlocks.interval_mean");
    int unlocks_count = base_of("unlocks.count");
    int light_first = base_of("light.median_lux.morning");
    int loc_entropy = base_of("location.entropy");
    int loc_place_count = base_of("location.place_count");
    int loc_place_dwell = base_of("location.place_dwell");
    int loc_stop_count = base_of("location.stop_count");
    int loc_gyration = base_of("location.gyration");
    int loc_home_first = base_of("location.home_time.morning");
    int loc_work = base_of("location.work_time.entire_day");
    int loc_distance = base_of("location.distance");
    int loc_travel = base_of("location.travel_time");
    int noise_db_first = base_of("noise.median_db.morning");
    int noise_scaled_first = base_of("noise.median_scaled.morning");
    int noise_silence_first = base_of("noise.silence_ratio.morning");
    int pedo_first = base_of("pedometer.steps.morning");
};

const BaseIdx& idx() {
    static const BaseIdx b;
    return b;
}

std::optional<double> mean_of_list(const std::vector<double>& v) {
    if (v.empty()) return std::nullopt;
    double s = 0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

std::optional<double> std_of_list(const std::vector<double>& v) {
    if (v.size() < 2) return std::nullopt;
    double m = *mean_of_list(v);
    double ss = 0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

// UTC window of (date, period); night extends past midnight into the next
// calendar date so one night stays contiguous.
std::pair<InstantMs, InstantMs> period_window_utc(LocalDate date, DayPeriod period,
                                                  int tz_offset_minutes) {
    const std::int64_t day_ms = static_cast<std::int64_t>(date.days) * kMsPerDay;
    std::int64_t lo_h = 0, hi_h = 0;
    switch (period) {
        case DayPeriod::Morning: lo_h = 4; hi_h = 12; break;
        case DayPeriod::Afternoon: lo_h = 12; hi_h = 18; break;
        case DayPeriod::Evening: lo_h = 18; hi_h = 22; break;
        case DayPeriod::Night: lo_h = 22; hi_h = 28; break;
        case DayPeriod::EntireDay: lo_h = 4; hi_h = 28; break;
    }
    const std::int64_t off = static_cast<std::int64_t>(tz_offset_minutes) * kMsPerMinute;
    return {day_ms + lo_h * kMsPerHour - off, day_ms + hi_h * kMsPerHour - off};
}

double overlap_s(InstantMs a1, InstantMs a2, InstantMs b1, InstantMs b2) {
    InstantMs lo = std::max(a1, b1);
    InstantMs hi = std::min(a2, b2);
    return hi > lo ? (hi - lo) / 1000.0 : 0.0;
}

// dwell of [a,b) inside the given period across every local date it touches
double dwell_in_period_all_days_s(InstantMs a, InstantMs b, DayPeriod period,
                                  int tz_offset_minutes) {
    const std::int64_t off = static_cast<std::int64_t>(tz_offset_minutes) * kMsPerMinute;
    const std::int64_t first_day = floor_div(a + off, kMsPerDay) - 1;
    const std::int64_t last_day = floor_div(b + off, kMsPerDay) + 1;
    double total = 0;
    for (std::int64_t d = first_day; d <= last_day; ++d) {
        auto [lo, hi] = period_window_utc(LocalDate{static_cast<std::int32_t>(d)}, period,
                                          tz_offset_minutes);
        total += overlap_s(a, b, lo, hi);
    }
    return total;
}

// dwell of [a,b) inside weekday work hours across every local date it touches
double dwell_in_work_hours_s(InstantMs a, InstantMs b, int tz_offset_minutes,
                             int work_start_hour, int work_end_hour) {
    const std::int64_t off = static_cast<std::int64_t>(tz_offset_minutes) * kMsPerMinute;
    const std::int64_t first_day = floor_div(a + off, kMsPerDay);
    const std::int64_t last_day = floor_div(b + off, kMsPerDay);
    double total = 0;
    for (std::int64_t d = first_day; d <= last_day; ++d) {
        LocalDate date{static_cast<std::int32_t>(d)};
        if (is_weekend(date)) continue;
        const std::int64_t day_ms = d * kMsPerDay;
        total += overlap_s(a, b, day_ms + work_start_hour * kMsPerHour - off,
                           day_ms + work_end_hour * kMsPerHour - off);
    }
    return total;
}

std::optional<double> median_opt(std::vector<double> v) {
    if (v.empty()) return std::nullopt;
    return median_of(std::move(v));
}

}  // namespace

// ---------------------------------------------------------------------------
// Catalog
// ---------------------------------------------------------------------------

const std::vector<std::string>& daily_base_names() {
    static const std::vector<std::string> names = build_daily_base_names();
    return names;
}

int daily_base_index(std::string_view name) {
    const auto& map = daily_base_lookup();
    auto it = map.find(std::string(name));
    return it == map.end() ? -1 : it->second;
}

Category daily_base_category(int base_index) {
    const std::string& name = daily_base_names().at(static_cast<std::size_t>(base_index));
    return category_from_string(name.substr(0, name.find('.')));
}

FeatureCatalog::FeatureCatalog() {
    names_.reserve(kFeatureCount);
    const auto& bases = daily_base_names();
    for (const std::string& base : bases) {
        for (const char* stat : {"mean", "std"}) {
            for (DayType dt : kAllDayTypes) {
                names_.push_back(base + "." + stat + "." + std::string(to_string(dt)));
            }
        }
    }
    for (DayType dt : kAllDayTypes)
        names_.push_back("location.routine_index." + std::string(to_string(dt)));
    if (names_.size() != kFeatureCount)
        throw Error("feature catalog size mismatch: " + std::to_string(names_.size()));
}

const FeatureCatalog& FeatureCatalog::instance() {
    static const FeatureCatalog catalog;
    return catalog;
}

int FeatureCatalog::index_of(std::string_view name) const {
    static const std::unordered_map<std::string, int> map = [this] {
        std::unordered_map<std::string, int> m;
        for (std::size_t i = 0; i < names_.size(); ++i) m[names_[i]] = static_cast<int>(i);
        return m;
    }();
    auto it = map.find(std::string(name));
    return it == map.end() ? -1 : it->second;
}

Category FeatureCatalog::category_of(std::size_t feature_index) const {
    if (is_routine_index(feature_index)) return Category::Location;
    return daily_base_category(static_cast<int>(feature_index / 4));
}

DayType FeatureCatalog::day_type_of(std::size_t feature_index) const {
    if (is_routine_index(feature_index))
        return feature_index == routine_feature_index(DayType::Weekend) ? DayType::Weekend
                                                                        : DayType::Weekday;
    return feature_index % 2 == 1 ? DayType::Weekend : DayType::Weekday;
}

// ---------------------------------------------------------------------------
// Location mining
// ---------------------------------------------------------------------------

double haversine_m(double lat1, double lon1, double lat2, double lon2) {
    const double phi1 = lat1 * kDegToRad;
    const double phi2 = lat2 * kDegToRad;
    const double dphi = (lat2 - lat1) * kDegToRad;
    const double dlambda = (lon2 - lon1) * kDegToRad;
    const double a = std::sin(dphi / 2) * std::sin(dphi / 2) +
                     std::cos(phi1) * std::cos(phi2) * std::sin(dlambda / 2) *
                         std::sin(dlambda / 2);
    return 2.0 * kEarthRadiusM * std::asin(std::min(1.0, std::sqrt(a)));
}

std::vector<StayPoint> detect_stay_points(const std::vector<GeoFix>& fixes,
                                          double roam_radius_m, double min_dwell_s) {
    std::vector<StayPoint> points;
    const std::size_t n = fixes.size();
    std::size_t i = 0;
    while (i < n) {
        double sum_lat = fixes[i].lat, sum_lon = fixes[i].lon;
        std::size_t j = i;
        while (j + 1 < n) {
            const double cand_lat = (sum_lat + fixes[j + 1].lat) / static_cast<double>(j + 2 - i);
            const double cand_lon = (sum_lon + fixes[j + 1].lon) / static_cast<double>(j + 2 - i);
            bool inside = true;
            for (std::size_t k = i; k <= j + 1; ++k) {
                if (haversine_m(fixes[k].lat, fixes[k].lon, cand_lat, cand_lon) >
                    roam_radius_m) {
                    inside = false;
                    break;
                }
            }
            if (!inside) break;
            sum_lat += fixes[j + 1].lat;
            sum_lon += fixes[j + 1].lon;
            ++j;
        }
        const double dwell_s = (fixes[j].t - fixes[i].t) / 1000.0;
        if (dwell_s >= min_dwell_s) {
            points.push_back(StayPoint{sum_lat / static_cast<double>(j - i + 1),
                                       sum_lon / static_cast<double>(j - i + 1), fixes[i].t,
                                       fixes[j].t});
            i = j + 1;
        } else {
            ++i;
        }
    }
    return points;
}

std::vector<Place> build_places(const std::vector<StayPoint>& staypoints,
                                int tz_offset_minutes, const FeatureConfig& config) {
    if (staypoints.empty()) throw NoPlaces("no staypoints to build places from");

    std::vector<Place> places;
    for (std::size_t s = 0; s < staypoints.size(); ++s) {
        const StayPoint& sp = staypoints[s];
        int best = -1;
        double best_dist = config.place_merge_radius_m;
        for (std::size_t p = 0; p < places.size(); ++p) {
            double d = haversine_m(sp.lat, sp.lon, places[p].lat, places[p].lon);
            if (d <= best_dist) {
                best_dist = d;
                best = static_cast<int>(p);
            }
        }
        if (best < 0) {
            Place place;
            place.lat = sp.lat;
            place.lon = sp.lon;
            place.dwell_s = sp.dwell_s();
            place.visits.push_back(s);
            places.push_back(std::move(place));
        } else {
            Place& place = places[static_cast<std::size_t>(best)];
            const double w = sp.dwell_s();
            const double total = place.dwell_s + w;
            if (total > 0) {
                place.lat = (place.lat * place.dwell_s + sp.lat * w) / total;
                place.lon = (place.lon * place.dwell_s + sp.lon * w) / total;
            }
            place.dwell_s = total;
            place.visits.push_back(s);
        }
    }

    std::vector<double> night_dwell(places.size(), 0.0);
    std::vector<double> work_dwell(places.size(), 0.0);
    for (std::size_t p = 0; p < places.size(); ++p) {
        for (std::size_t v : places[p].visits) {
            const StayPoint& sp = staypoints[v];
            night_dwell[p] += dwell_in_period_all_days_s(sp.arrival, sp.departure,
                                                         DayPeriod::Night, tz_offset_minutes);
            work_dwell[p] += dwell_in_work_hours_s(sp.arrival, sp.departure, tz_offset_minutes,
                                                   config.work_start_hour, config.work_end_hour);
        }
    }

    // home: max night dwell; if nobody has night presence, fall back to max
    // total dwell
    bool any_night = false;
    for (double nd : night_dwell)
        if (nd > 0) any_night = true;
    std::size_t home = 0;
    for (std::size_t p = 1; p < places.size(); ++p) {
        if (any_night ? night_dwell[p] > night_dwell[home]
                      : places[p].dwell_s > places[home].dwell_s)
            home = p;
    }
    places[home].label = PlaceLabel::Home;

    int work = -1;
    for (std::size_t p = 0; p < places.size(); ++p) {
        if (p == home || work_dwell[p] <= 0) continue;
        if (work < 0 || work_dwell[p] > work_dwell[static_cast<std::size_t>(work)])
            work = static_cast<int>(p);
    }
    if (work >= 0) places[static_cast<std::size_t>(work)].label = PlaceLabel::Work;

    return places;
}

double routine_index(const std::vector<std::vector<int>>& daily_place_sets) {
    if (daily_place_sets.size() < 2)
        throw Insufficient("routine index needs at least 2 days");
    std::vector<std::set<int>> sets;
    sets.reserve(daily_place_sets.size());
    for (const auto& day : daily_place_sets) sets.emplace_back(day.begin(), day.end());

    double total = 0;
    std::size_t pairs = 0;
    for (std::size_t a = 0; a < sets.size(); ++a) {
        for (std::size_t b = a + 1; b < sets.size(); ++b) {
            std::size_t inter = 0;
            for (int id : sets[a]) inter += sets[b].count(id);
            const std::size_t uni = sets[a].size() + sets[b].size() - inter;
            total += uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
            ++pairs;
        }
    }
    return total / static_cast<double>(pairs);
}

// ---------------------------------------------------------------------------
// Per-category daily extraction
// ---------------------------------------------------------------------------

namespace daily {

BurstSpectrum analyze_burst(const AccelBurst& burst) {
    BurstSpectrum out;
    const std::size_t n = burst.samples.size();
    if (n == 0) return out;

    std::vector<double> mag(n);
    double mean = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& s = burst.samples[i];
        mag[i] = std::sqrt(s.x * s.x + s.y * s.y + s.z * s.z);
        mean += mag[i];
    }
    mean /= static_cast<double>(n);

    double energy = 0;
    for (double m : mag) energy += m * m;
    out.energy = energy / static_cast<double>(n);

    const std::int64_t span_ms = burst.samples.back().dt_ms - burst.samples.front().dt_ms;
    if (n < 8 || span_ms <= 0) return out;

    const double fs = 1000.0 * static_cast<double>(n - 1) / static_cast<double>(span_ms);

    // naive DFT of the detrended magnitude; bursts are short so O(n^2) is fine
    std::size_t best_k = 1;
    double best_mag = -1;
    for (std::size_t k = 1; k <= n / 2; ++k) {
        double re = 0, im = 0;
        const double w = -2.0 * M_PI * static_cast<double>(k) / static_cast<double>(n);
        for (std::size_t t = 0; t < n; ++t) {
            const double x = mag[t] - mean;
            re += x * std::cos(w * static_cast<double>(t));
            im += x * std::sin(w * static_cast<double>(t));
        }
        const double amp = std::sqrt(re * re + im * im);
        if (amp > best_mag) {
            best_mag = amp;
            best_k = k;
        }
    }
    out.dominant_freq_hz = static_cast<double>(best_k) * fs / static_cast<double>(n);
    out.amplitude = 2.0 * best_mag / static_cast<double>(n);
    return out;
}

void accel_daily(const std::vector<PeriodAccel>& bursts, DailyRecord& out) {
    if (bursts.empty()) return;
    std::vector<double> freqs, amps;
    std::array<std::vector<double>, 4> energy_by_period;
    for (const auto& [period, burst] : bursts) {
        BurstSpectrum spec = analyze_burst(*burst);
        if (burst->samples.empty()) continue;
        if (spec.dominant_freq_hz) {
            freqs.push_back(*spec.dominant_freq_hz);
            amps.push_back(*spec.amplitude);
        }
        energy_by_period[static_cast<int>(period)].push_back(spec.energy);
    }
    const BaseIdx& b = idx();
    out.bases[b.accel_freq_mean] = mean_of_list(freqs);
    out.bases[b.accel_freq_std] = std_of_list(freqs);
    out.bases[b.accel_amp_mean] = mean_of_list(amps);
    out.bases[b.accel_amp_std] = std_of_list(amps);
    for (int p = 0; p < 4; ++p) {
        out.bases[b.accel_energy_mean + p] = mean_of_list(energy_by_period[p]);
        out.bases[b.accel_energy_std + p] = std_of_list(energy_by_period[p]);
    }
}

void battery_daily(const std::vector<std::pair<InstantMs, BatteryState>>& events,
                   bool category_present, DailyRecord& out) {
    const BaseIdx& b = idx();
    if (!events.empty()) {
        std::vector<double> levels;
        levels.reserve(events.size());
        long charges = 0;
        for (std::size_t i = 0; i < events.size(); ++i) {
            levels.push_back(events[i].second.level);
            if (i > 0 && !events[i - 1].second.charging && events[i].second.charging)
                ++charges;
        }
        out.bases[b.battery_level] = mean_of_list(levels);
        out.bases[b.battery_charges] = static_cast<double>(charges);
    } else if (category_present) {
        out.bases[b.battery_charges] = 0.0;
    }
}

void calls_daily(const std::vector<CallEvent>& events, bool category_present,
                 DailyRecord& out) {
    if (events.empty() && !category_present) return;
    std::array<long, 4> counts{};
    double incoming_duration = 0, outgoing_duration = 0;
    std::set<std::string> incoming_peers, outgoing_peers, missed_peers;
    for (const auto& call : events) {
        counts[static_cast<int>(call.direction)]++;
        switch (call.direction) {
            case CallDirection::Incoming:
                incoming_duration += call.duration_s;
                incoming_peers.insert(call.correspondent);
                break;
            case CallDirection::Outgoing:
                outgoing_duration += call.duration_s;
                outgoing_peers.insert(call.correspondent);
                break;
            case CallDirection::Missed:
                missed_peers.insert(call.correspondent);
                break;
            case CallDirection::Rejected:
                break;
        }
    }
    const BaseIdx& b = idx();
    out.bases[b.calls_first + 0] = static_cast<double>(counts[0]);
    out.bases[b.calls_first + 1] = static_cast<double>(counts[1]);
    out.bases[b.calls_first + 2] = static_cast<double>(counts[2]);
    out.bases[b.calls_first + 3] = static_cast<double>(counts[3]);
    out.bases[b.calls_first + 4] = incoming_duration;
    out.bases[b.calls_first + 5] = outgoing_duration;
    out.bases[b.calls_first + 6] = static_cast<double>(incoming_peers.size());
    out.bases[b.calls_first + 7] = static_cast<double>(outgoing_peers.size());
    out.bases[b.calls_first + 8] = static_cast<double>(missed_peers.size());
}

void unlocks_daily(const std::vector<std::pair<InstantMs, ScreenKind>>& events,
                   int tz_offset_minutes, LocalDate date, bool category_present,
                   DailyRecord& out) {
    const BaseIdx& b = idx();
    if (events.empty()) {
        if (category_present) out.bases[b.unlocks_count] = 0.0;
        return;
    }

    const std::int64_t off = static_cast<std::int64_t>(tz_offset_minutes) * kMsPerMinute;
    const std::int64_t midnight_local = static_cast<std::int64_t>(date.days) * kMsPerDay;
    const std::int64_t day_end_utc = midnight_local + 28 * kMsPerHour - off;

    std::array<std::optional<double>, 5> first_minute;  // 4 periods + entire day
    std::optional<double> last_minute;
    std::vector<double> sessions, intervals;
    std::optional<InstantMs> open_unlock;
    std::optional<InstantMs> prev_unlock;
    long unlock_count = 0;

    for (const auto& [t, kind] : events) {
        if (kind == ScreenKind::Unlock) {
            ++unlock_count;
            const double minute =
                static_cast<double>((t + off - midnight_local)) / kMsPerMinute;
            Bucket bucket = assign_bucket(t, tz_offset_minutes);
            auto& slot = first_minute[static_cast<int>(bucket.period)];
            if (!slot || minute < *slot) slot = minute;
            if (!first_minute[4] || minute < *first_minute[4]) first_minute[4] = minute;
            if (!last_minute || minute > *last_minute) last_minute = minute;
            if (prev_unlock) intervals.push_back((t - *prev_unlock) / 1000.0);
            prev_unlock = t;
            if (!open_unlock) open_unlock = t;
        } else if (kind == ScreenKind::Lock) {
            if (open_unlock) {
                sessions.push_back((t - *open_unlock) / 1000.0);
                open_unlock.reset();
            }
        }
    }
    if (open_unlock) {
        // trailing unlock: close at the next local midnight, clamped to the
        // owning day's end for night unlocks already past midnight
        const std::int64_t local = *open_unlock + off;
        const std::int64_t next_midnight = (floor_div(local, kMsPerDay) + 1) * kMsPerDay - off;
        sessions.push_back((std::min(next_midnight, day_end_utc) - *open_unlock) / 1000.0);
    }

    for (int p = 0; p < 4; ++p) out.bases[b.unlocks_first + p] = first_minute[p];
    out.bases[b.unlocks_first + 4] = first_minute[4];
    out.bases[b.unlocks_last] = last_minute;
    out.bases[b.unlocks_session] = mean_of_list(sessions);
    out.bases[b.unlocks_interval] = mean_of_list(intervals);
    out.bases[b.unlocks_count] = static_cast<double>(unlock_count);
}

void light_daily(const std::vector<std::pair<DayPeriod, double>>& samples, DailyRecord& out) {
    const BaseIdx& b = idx();
    std::array<std::vector<double>, 5> by_period;
    for (const auto& [period, lux] : samples) {
        by_period[static_cast<int>(period)].push_back(lux);
        by_period[4].push_back(lux);
    }
    for (int p = 0; p < 5; ++p) out.bases[b.light_first + p] = median_opt(by_period[p]);
}

void noise_daily(const std::vector<std::pair<DayPeriod, double>>& samples,
                 double participant_min_db, double participant_max_db,
                 double silence_threshold_db, DailyRecord& out) {
    const BaseIdx& b = idx();
    const double range = participant_max_db - participant_min_db;
    std::array<std::vector<double>, 5> raw;
    std::array<long, 5> silent{};
    for (const auto& [period, db] : samples) {
        int p = static_cast<int>(period);
        raw[p].push_back(db);
        raw[4].push_back(db);
        if (db < silence_threshold_db) {
            silent[p]++;
            silent[4]++;
        }
    }
    for (int p = 0; p < 5; ++p) {
        if (raw[p].empty()) continue;
        double med = *median_opt(raw[p]);
        out.bases[b.noise_db_first + p] = med;
        out.bases[b.noise_scaled_first + p] =
            range > 0 ? (med - participant_min_db) / range : 0.0;
        out.bases[b.noise_silence_first + p] =
            static_cast<double>(silent[p]) / static_cast<double>(raw[p].size());
    }
}

void pedometer_daily(const std::vector<std::pair<DayPeriod, long>>& bursts,
                     bool category_present, DailyRecord& out) {
    if (bursts.empty() && !category_present) return;
    const BaseIdx& b = idx();
    std::array<long, 5> sums{};
    for (const auto& [period, steps] : bursts) {
        sums[static_cast<int>(period)] += steps;
        sums[4] += steps;
    }
    for (int p = 0; p < 5; ++p) out.bases[b.pedo_first + p] = static_cast<double>(sums[p]);
}

void location_daily(const std::vector<GeoFix>& day_fixes,
                    const std::vector<StayPoint>& staypoints,
                    const std::vector<Place>& places, int tz_offset_minutes,
                    LocalDate date, const FeatureConfig& config, DailyRecord& out) {
    if (day_fixes.empty()) return;
    const BaseIdx& b = idx();
    auto [day_lo, day_hi] = period_window_utc(date, DayPeriod::EntireDay, tz_offset_minutes);

    // per-place dwell intersected with the day span
    double total_dwell = 0;
    std::vector<double> place_dwell(places.size(), 0.0);
    int home = -1, work = -1;
    for (std::size_t p = 0; p < places.size(); ++p) {
        if (places[p].label == PlaceLabel::Home) home = static_cast<int>(p);
        if (places[p].label == PlaceLabel::Work) work = static_cast<int>(p);
        for (std::size_t v : places[p].visits) {
            place_dwell[p] += overlap_s(staypoints[v].arrival, staypoints[v].departure,
                                        day_lo, day_hi);
        }
        total_dwell += place_dwell[p];
    }

    long visited = 0;
    double entropy = 0;
    for (double d : place_dwell) {
        if (d <= 0) continue;
        ++visited;
        const double share = d / total_dwell;
        entropy -= share * std::log(share);
    }
    out.bases[b.loc_entropy] = visited > 0 ? std::optional<double>(entropy) : std::nullopt;
    out.bases[b.loc_place_count] = static_cast<double>(visited);
    out.bases[b.loc_place_dwell] = total_dwell;

    long stops = 0;
    for (const auto& sp : staypoints)
        if (sp.arrival >= day_lo && sp.arrival < day_hi) ++stops;
    out.bases[b.loc_stop_count] = static_cast<double>(stops);

    // radius of gyration: equirectangular projection around the day's centroid
    double mean_lat = 0, mean_lon = 0;
    for (const auto& f : day_fixes) {
        mean_lat += f.lat;
        mean_lon += f.lon;
    }
    mean_lat /= static_cast<double>(day_fixes.size());
    mean_lon /= static_cast<double>(day_fixes.size());
    const double coslat = std::cos(mean_lat * kDegToRad);
    double sq = 0;
    for (const auto& f : day_fixes) {
        const double dx = (f.lon - mean_lon) * kDegToRad * coslat * kEarthRadiusM;
        const double dy = (f.lat - mean_lat) * kDegToRad * kEarthRadiusM;
        sq += dx * dx + dy * dy;
    }
    out.bases[b.loc_gyration] = std::sqrt(sq / static_cast<double>(day_fixes.size()));

    for (int p = 0; p < 5; ++p) {
        double t = 0;
        if (home >= 0) {
            DayPeriod period = p < 4 ? static_cast<DayPeriod>(p) : DayPeriod::EntireDay;
            auto [lo, hi] = period_window_utc(date, period, tz_offset_minutes);
            for (std::size_t v : places[static_cast<std::size_t>(home)].visits)
                t += overlap_s(staypoints[v].arrival, staypoints[v].departure, lo, hi);
        }
        out.bases[b.loc_home_first + p] = t;
    }
    {
        double t = 0;
        if (work >= 0) {
            for (std::size_t v : places[static_cast<std::size_t>(work)].visits)
                t += overlap_s(staypoints[v].arrival, staypoints[v].departure, day_lo, day_hi);
        }
        out.bases[b.loc_work] = t;
    }

    double distance = 0;
    const double cap_m_per_s = config.max_leg_speed_kmh / 3.6;
    for (std::size_t i = 1; i < day_fixes.size(); ++i) {
        const double leg = haversine_m(day_fixes[i - 1].lat, day_fixes[i - 1].lon,
                                       day_fixes[i].lat, day_fixes[i].lon);
        const double dt = (day_fixes[i].t - day_fixes[i - 1].t) / 1000.0;
        if (dt <= 0) continue;
        if (leg / dt <= cap_m_per_s) distance += leg;
    }
    out.bases[b.loc_distance] = distance;

    const InstantMs first_t = day_fixes.front().t;
    const InstantMs last_t = day_fixes.back().t;
    double inside = 0;
    for (const auto& sp : staypoints)
        inside += overlap_s(sp.arrival, sp.departure, first_t, last_t);
    out.bases[b.loc_travel] = std::max(0.0, (last_t - first_t) / 1000.0 - inside);
}

}  // namespace daily

// ---------------------------------------------------------------------------
// Aggregation and orchestration
// ---------------------------------------------------------------------------

FeatureVector aggregate_daily(const std::string& participant_id,
                              const std::vector<DailyRecord>& days,
                              const std::array<std::optional<double>, 2>& routine_by_daytype) {
    FeatureVector fv;
    fv.participant_id = participant_id;
    fv.values.resize(kFeatureCount);

    for (int base = 0; base < kDailyBaseCount; ++base) {
        for (DayType dt : kAllDayTypes) {
            std::vector<double> values;
            for (const auto& day : days) {
                if (day.day_type != dt) continue;
                const auto& v = day.bases[static_cast<std::size_t>(base)];
                if (v) values.push_back(*v);
            }
            fv.values[FeatureCatalog::feature_index(base, 0, dt)] = mean_of_list(values);
            fv.values[FeatureCatalog::feature_index(base, 1, dt)] = std_of_list(values);
        }
    }
    fv.values[FeatureCatalog::routine_feature_index(DayType::Weekday)] = routine_by_daytype[0];
    fv.values[FeatureCatalog::routine_feature_index(DayType::Weekend)] = routine_by_daytype[1];
    return fv;
}

ExtractionResult extract_features(const EventLog& log, const Participant& participant,
                                  const FeatureConfig& config) {
    ExtractionResult result;
    const int tz = participant.tz_offset_minutes;

    // group events by owning local date
    struct DayEvents {
        std::vector<daily::PeriodAccel> accel;
        std::vector<std::pair<InstantMs, BatteryState>> battery;
        std::vector<CallEvent> calls;
        std::vector<std::pair<InstantMs, ScreenKind>> screen;
        std::vector<std::pair<DayPeriod, double>> light;
        std::vector<GeoFix> fixes;
        std::vector<std::pair<DayPeriod, double>> noise;
        std::vector<std::pair<DayPeriod, long>> pedometer;
    };
    std::map<std::int32_t, DayEvents> by_date;

    std::vector<GeoFix> all_fixes;
    double noise_min = 0, noise_max = 0;
    bool noise_seen = false;

    for (const auto& event : log.events) {
        const Bucket bucket = assign_bucket(event.timestamp_utc, tz);
        DayEvents& day = by_date[bucket.date.days];
        switch (event.category) {
            case Category::Accelerometer:
                day.accel.push_back({bucket.period, &std::get<AccelBurst>(event.payload)});
                break;
            case Category::Battery:
                day.battery.emplace_back(event.timestamp_utc,
                                         std::get<BatteryState>(event.payload));
                break;
            case Category::Calls:
                day.calls.push_back(std::get<CallEvent>(event.payload));
                break;
            case Category::Unlocks:
                day.screen.emplace_back(event.timestamp_utc,
                                        std::get<ScreenEvent>(event.payload).kind);
                break;
            case Category::Light:
                day.light.emplace_back(bucket.period, std::get<LightSample>(event.payload).lux);
                break;
            case Category::Location: {
                const auto& fix = std::get<LocationFix>(event.payload);
                GeoFix g{event.timestamp_utc, fix.latitude, fix.longitude};
                day.fixes.push_back(g);
                all_fixes.push_back(g);
                break;
            }
            case Category::Noise: {
                const double db = std::get<NoiseSample>(event.payload).db;
                day.noise.emplace_back(bucket.period, db);
                if (!noise_seen || db < noise_min) noise_min = db;
                if (!noise_seen || db > noise_max) noise_max = db;
                noise_seen = true;
                break;
            }
            case Category::Pedometer:
                day.pedometer.emplace_back(bucket.period,
                                           std::get<PedometerBurst>(event.payload).steps);
                break;
        }
    }

    result.staypoints =
        detect_stay_points(all_fixes, config.stay_roam_radius_m, config.stay_min_dwell_s);
    if (!result.staypoints.empty())
        result.places = build_places(result.staypoints, tz, config);

    std::array<std::vector<std::vector<int>>, 2> place_sets_by_daytype;

    for (auto& [date_days, day] : by_date) {
        DailyRecord record;
        record.date = LocalDate{date_days};
        record.day_type =
            is_weekend(record.date) ? DayType::Weekend : DayType::Weekday;

        daily::accel_daily(day.accel, record);
        daily::battery_daily(day.battery, log.has(Category::Battery), record);
        daily::calls_daily(day.calls, log.has(Category::Calls), record);
        daily::unlocks_daily(day.screen, tz, record.date, log.has(Category::Unlocks), record);
        daily::light_daily(day.light, record);
        daily::noise_daily(day.noise, noise_min, noise_max, config.silence_threshold_db,
                           record);
        daily::pedometer_daily(day.pedometer, log.has(Category::Pedometer), record);
        daily::location_daily(day.fixes, result.staypoints, result.places, tz, record.date,
                              config, record);

        if (!day.fixes.empty()) {
            auto [day_lo, day_hi] =
                period_window_utc(record.date, DayPeriod::EntireDay, tz);
            std::vector<int> visited;
            for (std::size_t p = 0; p < result.places.size(); ++p) {
                for (std::size_t v : result.places[p].visits) {
                    if (overlap_s(result.staypoints[v].arrival, result.staypoints[v].departure,
                                  day_lo, day_hi) > 0) {
                        visited.push_back(static_cast<int>(p));
                        break;
                    }
                }
            }
            place_sets_by_daytype[record.day_type == DayType::Weekend ? 1 : 0].push_back(
                std::move(visited));
        }

        result.days.push_back(std::move(record));
    }

    for (int dt = 0; dt < 2; ++dt) {
        if (place_sets_by_daytype[dt].size() >= 2)
            result.routine_by_daytype[dt] = routine_index(place_sets_by_daytype[dt]);
    }

    result.vector =
        aggregate_daily(log.participant_id, result.days, result.routine_by_daytype);
    return result;
}

}  // namespace bigfive
