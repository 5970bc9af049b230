#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "bigfive/error.hpp"
#include "bigfive/timeutil.hpp"

namespace bigfive {

// ---------------------------------------------------------------------------
// Enumerations
// ---------------------------------------------------------------------------

enum class Country : std::uint8_t { UK, ES, PE, CO, CL };
constexpr int kCountryCount = 5;
constexpr std::array<Country, 5> kAllCountries = {
    Country::UK, Country::ES, Country::PE, Country::CO, Country::CL};

enum class Gender : std::uint8_t { Female, Male };

enum class AgeRange : std::uint8_t { A18_25, A26_34, A35_44 };

enum class Education : std::uint8_t {
    NoEducation,
    PrimarySchool,
    SecondarySchool,
    TechnicalSchool,
    Bachelor,
    Master,
    PhD,
    Other
};

enum class Employment : std::uint8_t {
    Employed,
    UnemployedJobHunting,
    UnemployedNotJobHunting,
    BachelorStudent,
    MasterStudent,
    Retired,
    Homemaker,
    Other
};

enum class Trait : std::uint8_t {
    Extraversion,
    Agreeableness,
    Conscientiousness,
    Neuroticism,
    Openness
};
constexpr int kTraitCount = 5;
constexpr std::array<Trait, 5> kAllTraits = {
    Trait::Extraversion, Trait::Agreeableness, Trait::Conscientiousness,
    Trait::Neuroticism, Trait::Openness};

enum class DayPeriod : std::uint8_t { Morning, Afternoon, Evening, Night, EntireDay };
constexpr std::array<DayPeriod, 4> kDayParts = {
    DayPeriod::Morning, DayPeriod::Afternoon, DayPeriod::Evening, DayPeriod::Night};
constexpr std::array<DayPeriod, 5> kDayPartsAndEntire = {
    DayPeriod::Morning, DayPeriod::Afternoon, DayPeriod::Evening, DayPeriod::Night,
    DayPeriod::EntireDay};

enum class DayType : std::uint8_t { Weekday, Weekend };
constexpr std::array<DayType, 2> kAllDayTypes = {DayType::Weekday, DayType::Weekend};

enum class Category : std::uint8_t {
    Accelerometer,
    Battery,
    Calls,
    Unlocks,
    Light,
    Location,
    Noise,
    Pedometer
};
constexpr int kCategoryCount = 8;
constexpr std::array<Category, 8> kAllCategories = {
    Category::Accelerometer, Category::Battery, Category::Calls,
    Category::Unlocks,       Category::Light,   Category::Location,
    Category::Noise,         Category::Pedometer};

// String names (wire format + report columns). from_* throw Error on
// unknown input.
std::string_view to_string(Country c);
std::string_view to_string(Gender g);
std::string_view to_string(AgeRange a);
std::string_view to_string(Education e);
std::string_view to_string(Employment e);
std::string_view to_string(Trait t);
std::string_view to_string(DayPeriod p);
std::string_view to_string(DayType d);
std::string_view to_string(Category c);

Country country_from_string(std::string_view s);
Gender gender_from_string(std::string_view s);
AgeRange age_range_from_string(std::string_view s);
Education education_from_string(std::string_view s);
Employment employment_from_string(std::string_view s);
Trait trait_from_string(std::string_view s);
DayPeriod day_period_from_string(std::string_view s);
DayType day_type_from_string(std::string_view s);
Category category_from_string(std::string_view s);

// ---------------------------------------------------------------------------
// Participant
// ---------------------------------------------------------------------------

constexpr int kQuestionnaireItems = 50;

struct Participant {
    std::string id;
    Country country = Country::UK;
    Gender gender = Gender::Female;
    AgeRange age_range = AgeRange::A26_34;
    Education education = Education::Other;
    Employment employment = Employment::Other;
    std::array<int, kQuestionnaireItems> responses{};  // each in [1,5]
    int tz_offset_minutes = 0;                         // [-840, 840]

    void validate() const;  // throws Error on violated invariants
};

// ---------------------------------------------------------------------------
// Sensor events
// ---------------------------------------------------------------------------

struct AccelSample {
    std::int32_t dt_ms;  // offset from the burst's event timestamp
    double x, y, z;      // m/s^2

    bool operator==(const AccelSample&) const = default;
};

struct AccelBurst {
    std::vector<AccelSample> samples;
    bool operator==(const AccelBurst&) const = default;
};

struct BatteryState {
    double level = 0;  // percent [0,100]
    bool charging = false;
    bool operator==(const BatteryState&) const = default;
};

enum class CallDirection : std::uint8_t { Incoming, Outgoing, Missed, Rejected };
std::string_view to_string(CallDirection d);
CallDirection call_direction_from_string(std::string_view s);

struct CallEvent {
    CallDirection direction = CallDirection::Incoming;
    double duration_s = 0;
    std::string correspondent;  // hashed id
    bool operator==(const CallEvent&) const = default;
};

enum class ScreenKind : std::uint8_t { ScreenOn, ScreenOff, Unlock, Lock };
std::string_view to_string(ScreenKind k);
ScreenKind screen_kind_from_string(std::string_view s);

struct ScreenEvent {
    ScreenKind kind = ScreenKind::Unlock;
    bool operator==(const ScreenEvent&) const = default;
};

struct LightSample {
    double lux = 0;
    bool operator==(const LightSample&) const = default;
};

struct LocationFix {
    double latitude = 0;
    double longitude = 0;
    double accuracy_m = 0;
    bool operator==(const LocationFix&) const = default;
};

struct NoiseSample {
    double db = 0;
    bool operator==(const NoiseSample&) const = default;
};

struct PedometerBurst {
    long steps = 0;
    bool operator==(const PedometerBurst&) const = default;
};

using SensorPayload =
    std::variant<AccelBurst, BatteryState, CallEvent, ScreenEvent, LightSample,
                 LocationFix, NoiseSample, PedometerBurst>;

struct SensorEvent {
    Category category = Category::Battery;
    InstantMs timestamp_utc = 0;
    SensorPayload payload;

    bool operator==(const SensorEvent&) const = default;
    bool payload_matches_category() const;
};

// ---------------------------------------------------------------------------
// Calendar bucketing
// ---------------------------------------------------------------------------

struct Bucket {
    LocalDate date;    // the local date that owns the bucket
    DayPeriod period;  // one of the four day parts, never EntireDay
    DayType day_type;

    bool operator==(const Bucket&) const = default;
};

// Morning [04,12), afternoon [12,18), evening [18,22), night [22,04).
// Events in [00:00,04:00) belong to the previous date's night so one night
// stays contiguous; DayType follows the owning date.
Bucket assign_bucket(InstantMs timestamp_utc, int tz_offset_minutes);

// ---------------------------------------------------------------------------
// Trait scores and labels
// ---------------------------------------------------------------------------

struct TraitScores {
    std::array<int, kTraitCount> values{};  // each in [10,50]

    int operator[](Trait t) const { return values[static_cast<int>(t)]; }
    int& operator[](Trait t) { return values[static_cast<int>(t)]; }
    bool operator==(const TraitScores&) const = default;
};

enum class TraitClass : std::uint8_t { Low = 0, High = 1 };

struct TraitSplit {
    double median = 0;
    std::vector<TraitClass> labels;
    std::size_t n_low = 0;
    std::size_t n_high = 0;
};

// Median split; score <= median -> Low. Throws DegenerateSplit when every
// score is equal or one class would be empty.
TraitSplit trait_class_labels(const std::vector<TraitScores>& scores, Trait trait);

// Standard sample median (mean of the two middle values for even n).
double median_of(std::vector<double> values);

// ---------------------------------------------------------------------------
// Feature vectors
// ---------------------------------------------------------------------------

// Values keyed by canonical feature names (see features.hpp for the
// catalog); a disengaged optional is a missing measurement.
struct FeatureVector {
    std::string participant_id;
    std::vector<std::optional<double>> values;  // catalog order

    double missing_fraction() const;
};

}  // namespace bigfive
