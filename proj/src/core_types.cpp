#include "bigfive/core_types.hpp"

#include <algorithm>
#include <cmath>

namespace bigfive {

namespace {

template <typename E, std::size_t N>
E lookup(const std::array<std::pair<std::string_view, E>, N>& table,
         std::string_view s, std::string_view what) {
    for (const auto& [name, value] : table)
        if (name == s) return value;
    throw Error("unknown " + std::string(what) + ": '" + std::string(s) + "'");
}

constexpr std::array<std::pair<std::string_view, Country>, 5> kCountryNames = {{
    {"UK", Country::UK},
    {"ES", Country::ES},
    {"PE", Country::PE},
    {"CO", Country::CO},
    {"CL", Country::CL},
}};

constexpr std::array<std::pair<std::string_view, Gender>, 2> kGenderNames = {{
    {"female", Gender::Female},
    {"male", Gender::Male},
}};

constexpr std::array<std::pair<std::string_view, AgeRange>, 3> kAgeNames = {{
    {"18-25", AgeRange::A18_25},
    {"26-34", AgeRange::A26_34},
    {"35-44", AgeRange::A35_44},
}};

constexpr std::array<std::pair<std::string_view, Education>, 8> kEducationNames = {{
    {"no_education", Education::NoEducation},
    {"primary_school", Education::PrimarySchool},
    {"secondary_school", Education::SecondarySchool},
    {"technical_school", Education::TechnicalSchool},
    {"bachelor", Education::Bachelor},
    {"master", Education::Master},
    {"phd", Education::PhD},
    {"other", Education::Other},
}};

constexpr std::array<std::pair<std::string_view, Employment>, 8> kEmploymentNames = {{
    {"employed", Employment::Employed},
    {"unemployed_job_hunting", Employment::UnemployedJobHunting},
    {"unemployed_not_job_hunting", Employment::UnemployedNotJobHunting},
    {"bachelor_student", Employment::BachelorStudent},
    {"master_student", Employment::MasterStudent},
    {"retired", Employment::Retired},
    {"homemaker", Employment::Homemaker},
    {"other", Employment::Other},
}};

constexpr std::array<std::pair<std::string_view, Trait>, 5> kTraitNames = {{
    {"extraversion", Trait::Extraversion},
    {"agreeableness", Trait::Agreeableness},
    {"conscientiousness", Trait::Conscientiousness},
    {"neuroticism", Trait::Neuroticism},
    {"openness", Trait::Openness},
}};

constexpr std::array<std::pair<std::string_view, DayPeriod>, 5> kPeriodNames = {{
    {"morning", DayPeriod::Morning},
    {"afternoon", DayPeriod::Afternoon},
    {"evening", DayPeriod::Evening},
    {"night", DayPeriod::Night},
    {"entire_day", DayPeriod::EntireDay},
}};

constexpr std::array<std::pair<std::string_view, DayType>, 2> kDayTypeNames = {{
    {"weekday", DayType::Weekday},
    {"weekend", DayType::Weekend},
}};

constexpr std::array<std::pair<std::string_view, Category>, 8> kCategoryNames = {{
    {"accelerometer", Category::Accelerometer},
    {"battery", Category::Battery},
    {"calls", Category::Calls},
    {"unlocks", Category::Unlocks},
    {"light", Category::Light},
    {"location", Category::Location},
    {"noise", Category::Noise},
    {"pedometer", Category::Pedometer},
}};

constexpr std::array<std::pair<std::string_view, CallDirection>, 4> kCallDirNames = {{
    {"incoming", CallDirection::Incoming},
    {"outgoing", CallDirection::Outgoing},
    {"missed", CallDirection::Missed},
    {"rejected", CallDirection::Rejected},
}};

constexpr std::array<std::pair<std::string_view, ScreenKind>, 4> kScreenKindNames = {{
    {"screen_on", ScreenKind::ScreenOn},
    {"screen_off", ScreenKind::ScreenOff},
    {"unlock", ScreenKind::Unlock},
    {"lock", ScreenKind::Lock},
}};

template <typename E, std::size_t N>
std::string_view name_of(const std::array<std::pair<std::string_view, E>, N>& table, E v) {
    for (const auto& [name, value] : table)
        if (value == v) return name;
    return "?";
}

}  // namespace

std::string_view to_string(Country c) { return name_of(kCountryNames, c); }
std::string_view to_string(Gender g) { return name_of(kGenderNames, g); }
std::string_view to_string(AgeRange a) { return name_of(kAgeNames, a); }
std::string_view to_string(Education e) { return name_of(kEducationNames, e); }
std::string_view to_string(Employment e) { return name_of(kEmploymentNames, e); }
std::string_view to_string(Trait t) { return name_of(kTraitNames, t); }
std::string_view to_string(DayPeriod p) { return name_of(kPeriodNames, p); }
std::string_view to_string(DayType d) { return name_of(kDayTypeNames, d); }
std::string_view to_string(Category c) { return name_of(kCategoryNames, c); }
std::string_view to_string(CallDirection d) { return name_of(kCallDirNames, d); }
std::string_view to_string(ScreenKind k) { return name_of(kScreenKindNames, k); }

Country country_from_string(std::string_view s) { return lookup(kCountryNames, s, "country"); }
Gender gender_from_string(std::string_view s) { return lookup(kGenderNames, s, "gender"); }
AgeRange age_range_from_string(std::string_view s) { return lookup(kAgeNames, s, "age range"); }
Education education_from_string(std::string_view s) { return lookup(kEducationNames, s, "education"); }
Employment employment_from_string(std::string_view s) { return lookup(kEmploymentNames, s, "employment"); }
Trait trait_from_string(std::string_view s) { return lookup(kTraitNames, s, "trait"); }
DayPeriod day_period_from_string(std::string_view s) { return lookup(kPeriodNames, s, "day period"); }
DayType day_type_from_string(std::string_view s) { return lookup(kDayTypeNames, s, "day type"); }
Category category_from_string(std::string_view s) { return lookup(kCategoryNames, s, "category"); }
CallDirection call_direction_from_string(std::string_view s) {
    return lookup(kCallDirNames, s, "call direction");
}
ScreenKind screen_kind_from_string(std::string_view s) {
    return lookup(kScreenKindNames, s, "screen kind");
}

void Participant::validate() const {
    if (id.empty()) throw Error("participant id empty");
    for (int r : responses)
        if (r < 1 || r > 5)
            throw Error("participant " + id + ": response out of [1,5]");
    if (tz_offset_minutes < -14 * 60 || tz_offset_minutes > 14 * 60)
        throw Error("participant " + id + ": tz offset out of [-14h,+14h]");
}

bool SensorEvent::payload_matches_category() const {
    switch (category) {
        case Category::Accelerometer: return std::holds_alternative<AccelBurst>(payload);
        case Category::Battery: return std::holds_alternative<BatteryState>(payload);
        case Category::Calls: return std::holds_alternative<CallEvent>(payload);
        case Category::Unlocks: return std::holds_alternative<ScreenEvent>(payload);
        case Category::Light: return std::holds_alternative<LightSample>(payload);
        case Category::Location: return std::holds_alternative<LocationFix>(payload);
        case Category::Noise: return std::holds_alternative<NoiseSample>(payload);
        case Category::Pedometer: return std::holds_alternative<PedometerBurst>(payload);
    }
    return false;
}

Bucket assign_bucket(InstantMs timestamp_utc, int tz_offset_minutes) {
    const std::int64_t local_ms = timestamp_utc + static_cast<std::int64_t>(tz_offset_minutes) * kMsPerMinute;
    std::int64_t day = floor_div(local_ms, kMsPerDay);
    const int hour = static_cast<int>((local_ms - day * kMsPerDay) / kMsPerHour);

    DayPeriod period;
    if (hour >= 4 && hour < 12) {
        period = DayPeriod::Morning;
    } else if (hour >= 12 && hour < 18) {
        period = DayPeriod::Afternoon;
    } else if (hour >= 18 && hour < 22) {
        period = DayPeriod::Evening;
    } else {
        period = DayPeriod::Night;
        if (hour < 4) day -= 1;  // [00:00,04:00) rides with the previous date
    }

    LocalDate date{static_cast<std::int32_t>(day)};
    return Bucket{date, period, is_weekend(date) ? DayType::Weekend : DayType::Weekday};
}

double median_of(std::vector<double> values) {
    const std::size_t n = values.size();
    if (n == 0) throw Error("median of empty sample");
    std::sort(values.begin(), values.end());
    if (n % 2 == 1) return values[n / 2];
    return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

TraitSplit trait_class_labels(const std::vector<TraitScores>& scores, Trait trait) {
    if (scores.size() < 2) throw DegenerateSplit("need at least 2 participants");
    std::vector<double> v(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i)
        v[i] = static_cast<double>(scores[i][trait]);

    TraitSplit split;
    split.median = median_of(v);
    split.labels.resize(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) {
        bool low = v[i] <= split.median;
        split.labels[i] = low ? TraitClass::Low : TraitClass::High;
        (low ? split.n_low : split.n_high)++;
    }
    if (split.n_low == 0 || split.n_high == 0)
        throw DegenerateSplit("median split leaves one class empty for " +
                              std::string(to_string(trait)));
    return split;
}

double FeatureVector::missing_fraction() const {
    if (values.empty()) return 1.0;
    std::size_t missing = 0;
    for (const auto& v : values)
        if (!v.has_value()) ++missing;
    return static_cast<double>(missing) / static_cast<double>(values.size());
}

}  // namespace bigfive
