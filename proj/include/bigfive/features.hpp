#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bigfive/core_types.hpp"
#include "bigfive/ingest.hpp"

namespace bigfive {

// ---------------------------------------------------------------------------
// Canonical feature naming
//
// Daily base features (one value per participant-day) are aggregated over the
// study period into `<base>.<mean|std>.<weekday|weekend>` columns, plus one
// routine index per day type. Names are the contract for every downstream
// report.
// ---------------------------------------------------------------------------

constexpr int kDailyBaseCount = 70;
constexpr int kFeatureCount = 282;  // 70 bases x {mean,std} x {weekday,weekend} + 2 routine

const std::vector<std::string>& daily_base_names();
int daily_base_index(std::string_view name);  // -1 if unknown
Category daily_base_category(int base_index);

class FeatureCatalog {
public:
    static const FeatureCatalog& instance();

    const std::vector<std::string>& names() const { return names_; }
    std::size_t size() const { return names_.size(); }
    int index_of(std::string_view name) const;
    Category category_of(std::size_t feature_index) const;
    DayType day_type_of(std::size_t feature_index) const;
    bool is_routine_index(std::size_t feature_index) const {
        return feature_index >= kDailyBaseCount * 4;
    }

    // stat: 0 = mean, 1 = std
    static std::size_t feature_index(int base_index, int stat, DayType day_type) {
        return static_cast<std::size_t>(base_index) * 4 + stat * 2 +
               (day_type == DayType::Weekend ? 1 : 0);
    }
    static std::size_t routine_feature_index(DayType day_type) {
        return kDailyBaseCount * 4 + (day_type == DayType::Weekend ? 1 : 0);
    }

private:
    FeatureCatalog();
    std::vector<std::string> names_;
};

// ---------------------------------------------------------------------------
// Config
// ---------------------------------------------------------------------------

struct FeatureConfig {
    double stay_roam_radius_m = 200.0;
    double stay_min_dwell_s = 1200.0;
    double place_merge_radius_m = 200.0;
    double silence_threshold_db = 40.0;
    int work_start_hour = 9;   // weekday work window, local time
    int work_end_hour = 17;
    double max_leg_speed_kmh = 300.0;
};

// ---------------------------------------------------------------------------
// Daily records
// ---------------------------------------------------------------------------

struct DailyRecord {
    LocalDate date;
    DayType day_type = DayType::Weekday;
    std::vector<std::optional<double>> bases;  // size kDailyBaseCount

    DailyRecord() : bases(kDailyBaseCount) {}
};

// ---------------------------------------------------------------------------
// Location mining
// ---------------------------------------------------------------------------

struct GeoFix {
    InstantMs t;
    double lat;
    double lon;
};

struct StayPoint {
    double lat;         // centroid
    double lon;
    InstantMs arrival;
    InstantMs departure;

    double dwell_s() const { return (departure - arrival) / 1000.0; }
};

enum class PlaceLabel : std::uint8_t { Home, Work, Other };

struct Place {
    double lat;
    double lon;
    double dwell_s = 0;
    PlaceLabel label = PlaceLabel::Other;
    std::vector<std::size_t> visits;  // indices into the staypoint list
};

double haversine_m(double lat1, double lon1, double lat2, double lon2);

// Maximal runs of consecutive fixes within roam_radius_m of the run centroid
// lasting at least min_dwell_s.
std::vector<StayPoint> detect_stay_points(const std::vector<GeoFix>& fixes,
                                          double roam_radius_m = 200.0,
                                          double min_dwell_s = 1200.0);

// Agglomerates staypoints into places and labels home (max dwell during
// night periods, falling back to max total dwell) and work (max dwell during
// weekday work hours, excluding home). Throws NoPlaces on empty input.
std::vector<Place> build_places(const std::vector<StayPoint>& staypoints,
                                int tz_offset_minutes, const FeatureConfig& config = {});

// Mean pairwise Jaccard similarity of per-day visited place-id sets; both
// sets empty counts as similarity 1. Throws Insufficient for fewer than two
// days.
double routine_index(const std::vector<std::vector<int>>& daily_place_sets);

// ---------------------------------------------------------------------------
// Per-category daily extraction (inputs restricted to one owning local date)
// ---------------------------------------------------------------------------

namespace daily {

struct PeriodAccel {
    DayPeriod period;
    const AccelBurst* burst;
};

struct BurstSpectrum {
    std::optional<double> dominant_freq_hz;  // needs >= 8 samples and a positive span
    std::optional<double> amplitude;
    double energy = 0;  // mean squared raw magnitude
};

BurstSpectrum analyze_burst(const AccelBurst& burst);

void accel_daily(const std::vector<PeriodAccel>& bursts, DailyRecord& out);
void battery_daily(const std::vector<std::pair<InstantMs, BatteryState>>& events,
                   bool category_present, DailyRecord& out);
void calls_daily(const std::vector<CallEvent>& events, bool category_present,
                 DailyRecord& out);
void unlocks_daily(const std::vector<std::pair<InstantMs, ScreenKind>>& events,
                   int tz_offset_minutes, LocalDate date, bool category_present,
                   DailyRecord& out);
void light_daily(const std::vector<std::pair<DayPeriod, double>>& samples, DailyRecord& out);
void noise_daily(const std::vector<std::pair<DayPeriod, double>>& samples,
                 double participant_min_db, double participant_max_db,
                 double silence_threshold_db, DailyRecord& out);
void pedometer_daily(const std::vector<std::pair<DayPeriod, long>>& bursts,
                     bool category_present, DailyRecord& out);
void location_daily(const std::vector<GeoFix>& day_fixes,
                    const std::vector<StayPoint>& staypoints,
                    const std::vector<Place>& places, int tz_offset_minutes,
                    LocalDate date, const FeatureConfig& config, DailyRecord& out);

}  // namespace daily

// ---------------------------------------------------------------------------
// Aggregation
// ---------------------------------------------------------------------------

// Mean and n-1 std per base and day type over the days where the base is
// present (std absent with fewer than two such days), plus the two routine
// indices.
FeatureVector aggregate_daily(const std::string& participant_id,
                              const std::vector<DailyRecord>& days,
                              const std::array<std::optional<double>, 2>& routine_by_daytype);

struct ExtractionResult {
    FeatureVector vector;
    std::vector<DailyRecord> days;
    std::vector<StayPoint> staypoints;
    std::vector<Place> places;
    std::array<std::optional<double>, 2> routine_by_daytype;  // [weekday, weekend]
};

ExtractionResult extract_features(const EventLog& log, const Participant& participant,
                                  const FeatureConfig& config = {});

}  // namespace bigfive
