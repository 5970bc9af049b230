#include "bigfive/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace bigfive {

using nlohmann::json;

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

std::string format_double(double v) {
    // shortest round-trip form; keeps artifacts byte-stable
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

int parse_int(const std::string& s, const std::string& path, long line) {
    int v;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw ParseError(path, line, "expected integer, got '" + s + "'");
    return v;
}

constexpr const char* kManifestHeaderPrefix =
    "id,country,gender,age_range,education,employment,tz_offset";

}  // namespace

std::vector<Participant> CohortManifest::participants() const {
    std::vector<Participant> out;
    out.reserve(entries.size());
    for (const auto& e : entries) out.push_back(e.participant);
    return out;
}

CohortManifest parse_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path, 0, "cannot open manifest");

    CohortManifest manifest;
    std::string line;
    long line_no = 0;

    // window pragma
    if (!std::getline(in, line)) throw ParseError(path, 0, "empty manifest");
    ++line_no;
    {
        auto fields = split_csv(line);
        if (fields.size() != 3 || fields[0] != "#window")
            throw ParseError(path, line_no, "expected '#window,<start>,<end>' pragma");
        auto start = parse_iso8601(fields[1]);
        auto end = parse_iso8601(fields[2]);
        if (!start || !end) throw ParseError(path, line_no, "bad window timestamps");
        manifest.study_start = *start;
        manifest.study_end = *end;
        if (manifest.study_end - manifest.study_start < kMsPerDay)
            throw ParseError(path, line_no, "study window shorter than one day");
    }

    if (!std::getline(in, line)) throw ParseError(path, line_no, "missing header row");
    ++line_no;
    if (line.rfind(kManifestHeaderPrefix, 0) != 0)
        throw ParseError(path, line_no, "unexpected manifest header");

    std::set<std::string> ids;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto fields = split_csv(line);
        // id..tz_offset (7) + 50 responses + log_path
        if (fields.size() != 7 + kQuestionnaireItems + 1)
            throw ParseError(path, line_no,
                             "expected " + std::to_string(7 + kQuestionnaireItems + 1) +
                                 " fields, got " + std::to_string(fields.size()));
        ManifestEntry entry;
        Participant& p = entry.participant;
        p.id = fields[0];
        try {
            p.country = country_from_string(fields[1]);
            p.gender = gender_from_string(fields[2]);
            p.age_range = age_range_from_string(fields[3]);
            p.education = education_from_string(fields[4]);
            p.employment = employment_from_string(fields[5]);
        } catch (const Error& e) {
            throw ParseError(path, line_no, e.what());
        }
        p.tz_offset_minutes = parse_int(fields[6], path, line_no);
        for (int i = 0; i < kQuestionnaireItems; ++i)
            p.responses[i] = parse_int(fields[7 + i], path, line_no);
        entry.log_path = fields[7 + kQuestionnaireItems];
        try {
            p.validate();
        } catch (const Error& e) {
            throw ParseError(path, line_no, e.what());
        }
        if (!ids.insert(p.id).second)
            throw DuplicateId("duplicate participant id '" + p.id + "' at " + path + ":" +
                              std::to_string(line_no));
        manifest.entries.push_back(std::move(entry));
    }
    return manifest;
}

void write_manifest(const CohortManifest& manifest, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write manifest: " + path);
    out << "#window," << format_iso8601_utc(manifest.study_start) << ','
        << format_iso8601_utc(manifest.study_end) << '\n';
    out << kManifestHeaderPrefix;
    for (int i = 1; i <= kQuestionnaireItems; ++i) {
        char buf[8];
        std::snprintf(buf, sizeof(buf), ",q%02d", i);
        out << buf;
    }
    out << ",log_path\n";
    for (const auto& e : manifest.entries) {
        const Participant& p = e.participant;
        out << p.id << ',' << to_string(p.country) << ',' << to_string(p.gender) << ','
            << to_string(p.age_range) << ',' << to_string(p.education) << ','
            << to_string(p.employment) << ',' << p.tz_offset_minutes;
        for (int r : p.responses) out << ',' << r;
        out << ',' << e.log_path << '\n';
    }
}

namespace {

SensorEvent event_from_json(const json& j) {
    SensorEvent event;
    event.category = category_from_string(j.at("cat").get<std::string>());
    auto t = parse_iso8601(j.at("t").get<std::string>());
    if (!t) throw Error("bad timestamp");
    event.timestamp_utc = *t;

    switch (event.category) {
        case Category::Accelerometer: {
            AccelBurst burst;
            for (const auto& s : j.at("samples")) {
                if (!s.is_array() || s.size() != 4) throw Error("bad accel sample");
                burst.samples.push_back(AccelSample{s[0].get<std::int32_t>(),
                                                    s[1].get<double>(), s[2].get<double>(),
                                                    s[3].get<double>()});
            }
            event.payload = std::move(burst);
            break;
        }
        case Category::Battery: {
            BatteryState b;
            b.level = j.at("level").get<double>();
            b.charging = j.at("charging").get<bool>();
            if (b.level < 0 || b.level > 100) throw Error("battery level out of [0,100]");
            event.payload = b;
            break;
        }
        case Category::Calls: {
            CallEvent c;
            c.direction = call_direction_from_string(j.at("direction").get<std::string>());
            c.duration_s = j.at("duration_s").get<double>();
            c.correspondent = j.at("peer").get<std::string>();
            if (c.duration_s < 0) throw Error("negative call duration");
            event.payload = std::move(c);
            break;
        }
        case Category::Unlocks: {
            ScreenEvent sev;
            sev.kind = screen_kind_from_string(j.at("kind").get<std::string>());
            event.payload = sev;
            break;
        }
        case Category::Light: {
            LightSample l{j.at("lux").get<double>()};
            if (l.lux < 0) throw Error("negative illuminance");
            event.payload = l;
            break;
        }
        case Category::Location: {
            LocationFix f;
            f.latitude = j.at("lat").get<double>();
            f.longitude = j.at("lon").get<double>();
            f.accuracy_m = j.at("acc_m").get<double>();
            if (std::abs(f.latitude) > 90 || std::abs(f.longitude) > 180)
                throw Error("coordinates out of range");
            event.payload = f;
            break;
        }
        case Category::Noise: {
            NoiseSample n{j.at("db").get<double>()};
            if (n.db < 0) throw Error("negative noise level");
            event.payload = n;
            break;
        }
        case Category::Pedometer: {
            PedometerBurst pb{j.at("steps").get<long>()};
            if (pb.steps < 0) throw Error("negative step count");
            event.payload = pb;
            break;
        }
    }
    return event;
}

}  // namespace

std::string serialize_event(const SensorEvent& event) {
    std::string out = "{\"cat\":\"";
    out += to_string(event.category);
    out += "\",\"t\":\"";
    out += format_iso8601_utc(event.timestamp_utc);
    out += '"';
    auto field = [&out](const char* name, const std::string& value, bool quote) {
        out += ",\"";
        out += name;
        out += "\":";
        if (quote) out += '"';
        out += value;
        if (quote) out += '"';
    };
    std::visit(
        [&](const auto& payload) {
            using T = std::decay_t<decltype(payload)>;
            if constexpr (std::is_same_v<T, AccelBurst>) {
                out += ",\"samples\":[";
                for (std::size_t i = 0; i < payload.samples.size(); ++i) {
                    const auto& s = payload.samples[i];
                    if (i) out += ',';
                    out += '[' + std::to_string(s.dt_ms) + ',' + format_double(s.x) + ',' +
                           format_double(s.y) + ',' + format_double(s.z) + ']';
                }
                out += ']';
            } else if constexpr (std::is_same_v<T, BatteryState>) {
                field("level", format_double(payload.level), false);
                field("charging", payload.charging ? "true" : "false", false);
            } else if constexpr (std::is_same_v<T, CallEvent>) {
                field("direction", std::string(to_string(payload.direction)), true);
                field("duration_s", format_double(payload.duration_s), false);
                field("peer", payload.correspondent, true);
            } else if constexpr (std::is_same_v<T, ScreenEvent>) {
                field("kind", std::string(to_string(payload.kind)), true);
            } else if constexpr (std::is_same_v<T, LightSample>) {
                field("lux", format_double(payload.lux), false);
            } else if constexpr (std::is_same_v<T, LocationFix>) {
                field("lat", format_double(payload.latitude), false);
                field("lon", format_double(payload.longitude), false);
                field("acc_m", format_double(payload.accuracy_m), false);
            } else if constexpr (std::is_same_v<T, NoiseSample>) {
                field("db", format_double(payload.db), false);
            } else if constexpr (std::is_same_v<T, PedometerBurst>) {
                field("steps", std::to_string(payload.steps), false);
            }
        },
        event.payload);
    out += '}';
    return out;
}

void write_event_log(const std::vector<SensorEvent>& events, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write event log: " + path);
    for (const auto& e : events) out << serialize_event(e) << '\n';
}

bool event_before(const SensorEvent& a, const SensorEvent& b) {
    if (a.timestamp_utc != b.timestamp_utc) return a.timestamp_utc < b.timestamp_utc;
    if (a.category != b.category) return a.category < b.category;
    return serialize_event(a) < serialize_event(b);
}

EventLog ingest_events(std::vector<SensorEvent> events, const std::string& participant_id,
                       InstantMs study_start, InstantMs study_end) {
    EventLog log;
    log.participant_id = participant_id;
    log.events.reserve(events.size());
    for (auto& e : events) {
        if (e.timestamp_utc < study_start || e.timestamp_utc >= study_end) {
            ++log.dropped_outside_window;
            continue;
        }
        log.events.push_back(std::move(e));
    }
    std::sort(log.events.begin(), log.events.end(), event_before);
    for (const auto& e : log.events)
        log.category_present[static_cast<int>(e.category)] = true;
    return log;
}

EventLog parse_event_log(const std::string& path, const std::string& participant_id,
                         InstantMs study_start, InstantMs study_end,
                         double malformed_tolerance) {
    std::ifstream in(path);
    if (!in) throw ParseError(path, 0, "cannot open event log");

    std::vector<SensorEvent> events;
    long total_lines = 0;
    long malformed = 0;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        ++total_lines;
        try {
            json j = json::parse(line);
            SensorEvent event = event_from_json(j);
            if (!event.payload_matches_category()) throw Error("payload/category mismatch");
            events.push_back(std::move(event));
        } catch (const std::exception&) {
            ++malformed;
        }
    }
    if (total_lines > 0 &&
        static_cast<double>(malformed) / static_cast<double>(total_lines) > malformed_tolerance)
        throw ParseError(path, 0,
                         "malformed line fraction " + std::to_string(malformed) + "/" +
                             std::to_string(total_lines) + " exceeds tolerance");

    EventLog log = ingest_events(std::move(events), participant_id, study_start, study_end);
    log.malformed_lines = malformed;
    return log;
}

}  // namespace bigfive
