// Copyright 2026 The CampusTrace Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// CSV, KML 2.2 and GeoJSON serialization. Output bytes depend only on the
// inputs. Times are UTC ISO-8601.

#ifndef CAMPUSTRACE_EXPORTERS_H_
#define CAMPUSTRACE_EXPORTERS_H_

#include <span>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "absl/strings/string_view.h"
#include "campustrace/contact_models.h"
#include "campustrace/contact_tracer.h"
#include "campustrace/epidemic.h"
#include "campustrace/proximity.h"
#include "campustrace/takeout.h"
#include "campustrace/trajectory_store.h"

namespace campustrace {

inline constexpr absl::string_view kSegmentsCsvHeader =
    "UserID,start_location_Lat,start_location_Long,end_location_Lat,"
    "end_location_Long,duration_Start,duration_End,distance,activityType,"
    "confidence";

// Degrees at 6 decimals.
std::string FormatDegrees(double deg);

// Shortest decimal that is exact at E7 resolution (at least one decimal).
// Used where E7 inputs must survive a round trip.
std::string FormatDegreesE7(double deg);

// RFC 4180 splitting of one record; quoted fields may contain commas and
// doubled quotes. Newlines inside quotes are not supported.
absl::StatusOr<std::vector<std::string>> SplitCsvLine(absl::string_view line);

// Segments in input order.
std::string SegmentsToCsv(std::span<const ActivitySegment> segments);
absl::StatusOr<std::vector<ActivitySegment>> ParseSegmentsCsv(
    absl::string_view csv);

// One line-string placemark per trajectory (a point for single-sample
// trajectories, nothing for empty ones) and one point placemark per event.
std::string TracksToKml(std::span<const Trajectory> tracks,
                        std::span<const ContactEvent> events);

// FeatureCollection of track line strings, event points and, when given,
// common-location cell polygons.
std::string TracksToGeoJson(std::span<const Trajectory> tracks,
                            std::span<const ContactEvent> events,
                            std::span<const SiteCell> common_cells = {},
                            const SiteGrid* sites = nullptr);

struct ReportRow {
  UserId user_id;
  std::string date;
  std::string time;
  double latitude = 0.0;
  double longitude = 0.0;
  std::string visited_location;
  int contact_level = 1;

  friend bool operator==(const ReportRow&, const ReportRow&) = default;
};

// One row per record, in screening order, located at the record's event.
// Internal error if an event_ref does not resolve.
absl::StatusOr<std::vector<ReportRow>> LevelReport(
    std::span<const ContactLevelRecord> records,
    std::span<const ContactEvent> events);

std::string ReportToCsv(std::span<const ReportRow> rows);
std::string EventsToCsv(std::span<const ContactEvent> events);
std::string ScoresToCsv(std::span<const ContactScore> scores);
// Columns t,s,e,i,r.
std::string SeriesToCsv(const EpidemicSeries& series);

}  // namespace campustrace

#endif  // CAMPUSTRACE_EXPORTERS_H_
