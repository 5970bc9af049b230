#pragma once

#include <array>
#include <string>
#include <vector>

#include "bigfive/core_types.hpp"

namespace bigfive {

struct ManifestEntry {
    Participant participant;
    std::string log_path;  // relative paths resolve against the manifest's directory
};

struct CohortManifest {
    std::vector<ManifestEntry> entries;
    InstantMs study_start = 0;
    InstantMs study_end = 0;  // exclusive

    std::vector<Participant> participants() const;
};

// Manifest file layout:
//   #window,<start ISO-8601>,<end ISO-8601>
//   id,country,gender,age_range,education,employment,tz_offset,q01..q50,log_path
//   <one row per participant>
CohortManifest parse_manifest(const std::string& path);
void write_manifest(const CohortManifest& manifest, const std::string& path);

struct EventLog {
    std::string participant_id;
    std::vector<SensorEvent> events;  // sorted by (timestamp, category, payload)
    std::array<bool, kCategoryCount> category_present{};
    long dropped_outside_window = 0;
    long malformed_lines = 0;

    bool has(Category c) const { return category_present[static_cast<int>(c)]; }
};

// One JSON object per line, e.g.
//   {"cat":"noise","t":"2018-03-05T09:30:00Z","db":41.5}
// Events outside [study_start, study_end) are dropped and counted. Malformed
// lines are skipped and counted; if their share of all lines exceeds
// `malformed_tolerance` the whole parse fails with ParseError.
EventLog parse_event_log(const std::string& path, const std::string& participant_id,
                         InstantMs study_start, InstantMs study_end,
                         double malformed_tolerance = 0.01);

// In-memory variant shared by the file parser and tests.
EventLog ingest_events(std::vector<SensorEvent> events, const std::string& participant_id,
                       InstantMs study_start, InstantMs study_end);

std::string serialize_event(const SensorEvent& event);
void write_event_log(const std::vector<SensorEvent>& events, const std::string& path);

// Deterministic total order used by ingestion sorting; ties on timestamp
// break by category, then by serialized payload, so any permutation of the
// input lines produces the identical EventLog.
bool event_before(const SensorEvent& a, const SensorEvent& b);

}  // namespace bigfive
