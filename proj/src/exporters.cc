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

#include "campustrace/exporters.h"

#include <cmath>
#include <cstdlib>
#include <map>
#include <string>
#include <utility>

#include "absl/status/status.h"
#include "absl/strings/numbers.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "absl/strings/str_split.h"
#include "absl/strings/strip.h"
#include "campustrace/status_macros.h"
#include "campustrace/time_util.h"
#include "json.hpp"

namespace campustrace {
namespace {

using nlohmann::ordered_json;

double Round6(double v) { return std::round(v * 1e6) / 1e6; }

std::string XmlEscape(absl::string_view in) {
  std::string out;
  out.reserve(in.size());
  for (char c : in) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string CsvField(absl::string_view v) {
  if (v.find_first_of(",\"\r\n") == absl::string_view::npos) {
    return std::string(v);
  }
  std::string out = "\"";
  for (char c : v) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string EventName(const ContactEvent& e) {
  return absl::StrCat(e.user_a, "-", e.user_b, " ", FormatIsoUtc(e.t_start));
}

std::string KmlCoord(const GeoPoint& p) {
  return absl::StrCat(FormatDegrees(p.lon_deg), ",", FormatDegrees(p.lat_deg));
}

ordered_json JsonCoord(const GeoPoint& p) {
  return ordered_json::array({Round6(p.lon_deg), Round6(p.lat_deg)});
}

}  // namespace

std::string FormatDegrees(double deg) { return absl::StrFormat("%.6f", deg); }

std::string FormatDegreesE7(double deg) {
  const int64_t e7 = EncodeE7(deg);
  const uint64_t mag = static_cast<uint64_t>(e7 < 0 ? -e7 : e7);
  std::string frac = absl::StrFormat("%07d", mag % 10000000);
  while (frac.size() > 1 && frac.back() == '0') frac.pop_back();
  return absl::StrCat(e7 < 0 ? "-" : "", mag / 10000000, ".", frac);
}

absl::StatusOr<std::vector<std::string>> SplitCsvLine(absl::string_view line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  bool was_quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c != '"') {
        cur += c;
      } else if (i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else {
        quoted = false;
      }
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
      was_quoted = false;
    } else if (c == '"' && cur.empty() && !was_quoted) {
      quoted = true;
      was_quoted = true;
    } else {
      cur += c;
    }
  }
  if (quoted) {
    return absl::InvalidArgumentError(
        absl::StrCat("unterminated quoted field in '", line, "'"));
  }
  fields.push_back(std::move(cur));
  return fields;
}

std::string SegmentsToCsv(std::span<const ActivitySegment> segments) {
  std::string out = absl::StrCat(kSegmentsCsvHeader, "\n");
  for (const ActivitySegment& s : segments) {
    absl::StrAppend(&out, CsvField(s.user_id), ",",
                    FormatDegreesE7(s.start_point.lat_deg), ",",
                    FormatDegreesE7(s.start_point.lon_deg), ",",
                    FormatDegreesE7(s.end_point.lat_deg), ",",
                    FormatDegreesE7(s.end_point.lon_deg), ",",
                    FormatIsoUtc(s.start_time), ",", FormatIsoUtc(s.end_time),
                    ",", s.distance_m, ",", CsvField(s.activity_type), ",",
                    ConfidenceName(s.confidence), "\n");
  }
  return out;
}

absl::StatusOr<std::vector<ActivitySegment>> ParseSegmentsCsv(
    absl::string_view csv) {
  std::vector<absl::string_view> lines = absl::StrSplit(csv, '\n');
  while (!lines.empty() && absl::StripTrailingAsciiWhitespace(lines.back()).empty()) {
    lines.pop_back();
  }
  if (lines.empty() ||
      absl::StripTrailingAsciiWhitespace(lines[0]) != kSegmentsCsvHeader) {
    return absl::InvalidArgumentError("missing or unexpected segments header");
  }
  std::vector<ActivitySegment> out;
  for (std::size_t n = 1; n < lines.size(); ++n) {
    const absl::string_view line = absl::StripTrailingAsciiWhitespace(lines[n]);
    ASSIGN_OR_RETURN(std::vector<std::string> f, SplitCsvLine(line));
    const auto bad = [&](absl::string_view what) {
      return absl::InvalidArgumentError(
          absl::StrCat("line ", n + 1, ": bad ", what));
    };
    if (f.size() != 10) return bad("field count");
    ActivitySegment s;
    s.user_id = f[0];
    if (!absl::SimpleAtod(f[1], &s.start_point.lat_deg) ||
        !absl::SimpleAtod(f[2], &s.start_point.lon_deg) ||
        !absl::SimpleAtod(f[3], &s.end_point.lat_deg) ||
        !absl::SimpleAtod(f[4], &s.end_point.lon_deg)) {
      return bad("coordinate");
    }
    if (!IsValid(s.start_point) || !IsValid(s.end_point)) {
      return bad("coordinate range");
    }
    auto start = ParseIsoTime(f[5]);
    auto end = ParseIsoTime(f[6]);
    if (!start.ok() || !end.ok()) return bad("timestamp");
    s.start_time = *start;
    s.end_time = *end;
    if (!absl::SimpleAtoi(f[7], &s.distance_m)) return bad("distance");
    s.activity_type = f[8];
    auto confidence = ParseConfidence(f[9]);
    if (!confidence.ok()) return bad("confidence");
    s.confidence = *confidence;
    s.anomalous = s.end_time < s.start_time;
    out.push_back(std::move(s));
  }
  return out;
}

std::string TracksToKml(std::span<const Trajectory> tracks,
                        std::span<const ContactEvent> events) {
  std::string out =
      "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      "<kml xmlns=\"http://www.opengis.net/kml/2.2\">\n"
      "<Document>\n"
      "<name>campustrace</name>\n";
  absl::StrAppend(&out, "<Folder>\n<name>tracks</name>\n");
  for (const Trajectory& t : tracks) {
    if (t.samples.empty()) continue;
    absl::StrAppend(&out, "<Placemark>\n<name>", XmlEscape(t.user_id),
                    "</name>\n");
    if (t.samples.size() == 1) {
      absl::StrAppend(&out, "<Point><coordinates>",
                      KmlCoord(t.samples[0].point),
                      "</coordinates></Point>\n");
    } else {
      absl::StrAppend(&out, "<LineString><coordinates>");
      for (std::size_t k = 0; k < t.samples.size(); ++k) {
        absl::StrAppend(&out, k == 0 ? "" : " ", KmlCoord(t.samples[k].point));
      }
      absl::StrAppend(&out, "</coordinates></LineString>\n");
    }
    absl::StrAppend(&out, "</Placemark>\n");
  }
  absl::StrAppend(&out, "</Folder>\n<Folder>\n<name>contacts</name>\n");
  for (const ContactEvent& e : events) {
    absl::StrAppend(&out, "<Placemark>\n<name>", XmlEscape(EventName(e)),
                    "</name>\n<TimeSpan><begin>", FormatIsoUtc(e.t_start),
                    "</begin><end>", FormatIsoUtc(e.t_end),
                    "</end></TimeSpan>\n<Point><coordinates>",
                    KmlCoord(e.midpoint), "</coordinates></Point>\n",
                    "</Placemark>\n");
  }
  absl::StrAppend(&out, "</Folder>\n</Document>\n</kml>\n");
  return out;
}

std::string TracksToGeoJson(std::span<const Trajectory> tracks,
                            std::span<const ContactEvent> events,
                            std::span<const SiteCell> common_cells,
                            const SiteGrid* sites) {
  ordered_json features = ordered_json::array();
  for (const Trajectory& t : tracks) {
    if (t.samples.empty()) continue;
    ordered_json coords = ordered_json::array();
    for (const LocationSample& s : t.samples) coords.push_back(JsonCoord(s.point));
    ordered_json geometry;
    if (t.samples.size() == 1) {
      geometry = {{"type", "Point"}, {"coordinates", coords[0]}};
    } else {
      geometry = {{"type", "LineString"}, {"coordinates", std::move(coords)}};
    }
    features.push_back(
        {{"type", "Feature"},
         {"geometry", std::move(geometry)},
         {"properties",
          {{"kind", "track"},
           {"user_id", t.user_id},
           {"first", FormatIsoUtc(t.samples.front().time)},
           {"last", FormatIsoUtc(t.samples.back().time)}}}});
  }
  for (const ContactEvent& e : events) {
    features.push_back(
        {{"type", "Feature"},
         {"geometry", {{"type", "Point"}, {"coordinates", JsonCoord(e.midpoint)}}},
         {"properties",
          {{"kind", "contact"},
           {"event_id", e.id},
           {"name", EventName(e)},
           {"user_a", e.user_a},
           {"user_b", e.user_b},
           {"t_start", FormatIsoUtc(e.t_start)},
           {"t_end", FormatIsoUtc(e.t_end)},
           {"duration_s", e.duration_s},
           {"min_distance_m", Round6(e.min_distance_m)},
           {"site_cell", e.site_cell.Label()}}}});
  }
  if (sites != nullptr) {
    for (const SiteCell& c : common_cells) {
      const CellId& id = c.cell;
      const GeoPoint center = sites->CellCenter(id);
      const GeoPoint sw_n = sites->CellCenter({id.row - 1, id.col - 1});
      const GeoPoint sw{(center.lat_deg + sw_n.lat_deg) / 2.0,
                        (center.lon_deg + sw_n.lon_deg) / 2.0};
      const GeoPoint ne{2.0 * center.lat_deg - sw.lat_deg,
                        2.0 * center.lon_deg - sw.lon_deg};
      ordered_json ring = ordered_json::array(
          {JsonCoord(sw), JsonCoord({sw.lat_deg, ne.lon_deg}), JsonCoord(ne),
           JsonCoord({ne.lat_deg, sw.lon_deg}), JsonCoord(sw)});
      features.push_back(
          {{"type", "Feature"},
           {"geometry",
            {{"type", "Polygon"},
             {"coordinates", ordered_json::array({std::move(ring)})}}},
           {"properties",
            {{"kind", "common_location"},
             {"site_cell", id.Label()},
             {"visitors", c.visitors},
             {"total_visits", c.total_visits}}}});
    }
  }
  ordered_json doc = {{"type", "FeatureCollection"},
                      {"features", std::move(features)}};
  return doc.dump() + "\n";
}

absl::StatusOr<std::vector<ReportRow>> LevelReport(
    std::span<const ContactLevelRecord> records,
    std::span<const ContactEvent> events) {
  std::map<uint64_t, const ContactEvent*> by_id;
  for (const ContactEvent& e : events) by_id[e.id] = &e;
  ScreeningPlan plan = ScreeningOrder(
      std::vector<ContactLevelRecord>(records.begin(), records.end()));
  std::vector<ReportRow> rows;
  rows.reserve(plan.order.size());
  for (const ContactLevelRecord& r : plan.order) {
    const auto it = by_id.find(r.event_ref);
    if (it == by_id.end()) {
      return absl::InternalError(absl::StrCat(
          "record for '", r.user_id, "' references unknown event ",
          r.event_ref));
    }
    const ContactEvent& e = *it->second;
    ReportRow row;
    row.user_id = r.user_id;
    row.date = FormatDateUtc(e.t_start);
    row.time = FormatTimeOfDayUtc(e.t_start);
    row.latitude = e.midpoint.lat_deg;
    row.longitude = e.midpoint.lon_deg;
    row.visited_location = e.site_cell.Label();
    row.contact_level = r.level;
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string ReportToCsv(std::span<const ReportRow> rows) {
  std::string out =
      "user_id,date,time,latitude,longitude,visited_location,contact_level\n";
  for (const ReportRow& r : rows) {
    absl::StrAppend(&out, CsvField(r.user_id), ",", r.date, ",", r.time, ",",
                    FormatDegrees(r.latitude), ",", FormatDegrees(r.longitude),
                    ",", r.visited_location, ",", r.contact_level, "\n");
  }
  return out;
}

std::string EventsToCsv(std::span<const ContactEvent> events) {
  std::string out =
      "id,user_a,user_b,t_start,t_end,duration_s,tick_start,tick_end,"
      "min_distance_m,mean_distance_m,latitude,longitude,site_cell,"
      "mean_accuracy_m\n";
  for (const ContactEvent& e : events) {
    absl::StrAppend(&out, e.id, ",", CsvField(e.user_a), ",",
                    CsvField(e.user_b), ",", FormatIsoUtc(e.t_start), ",",
                    FormatIsoUtc(e.t_end), ",", e.duration_s, ",",
                    e.tick_start, ",", e.tick_end, ",",
                    absl::StrFormat("%.6f", e.min_distance_m), ",",
                    absl::StrFormat("%.6f", e.mean_distance_m), ",",
                    FormatDegrees(e.midpoint.lat_deg), ",",
                    FormatDegrees(e.midpoint.lon_deg), ",",
                    e.site_cell.Label(), ",",
                    absl::StrFormat("%.3f", e.mean_accuracy_m), "\n");
  }
  return out;
}

std::string ScoresToCsv(std::span<const ContactScore> scores) {
  std::string out =
      "subject,kind,value,numerator_sum,area_m2,mean_distance_m\n";
  for (const ContactScore& s : scores) {
    absl::StrAppend(&out, CsvField(s.subject), ",", ScoreKindName(s.kind), ",",
                    absl::StrFormat("%.9g", s.value), ",",
                    absl::StrFormat("%.9g", s.numerator_sum), ",",
                    absl::StrFormat("%.9g", s.area_m2), ",",
                    absl::StrFormat("%.6f", s.mean_distance_m), "\n");
  }
  return out;
}

std::string SeriesToCsv(const EpidemicSeries& series) {
  std::string out = "t,s,e,i,r\n";
  for (const EpidemicState& x : series.states) {
    absl::StrAppend(&out, absl::StrFormat("%.4f,%.12f,%.12f,%.12f,%.12f\n", x.t,
                                          x.s, x.e, x.i, x.r));
  }
  return out;
}

}  // namespace campustrace
