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

#include "campustrace/takeout.h"

#include <charconv>
#include <cmath>
#include <utility>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"
#include "campustrace/status_macros.h"
#include "campustrace/time_util.h"
#include "json.hpp"

namespace campustrace {
namespace {

using nlohmann::json;

absl::StatusOr<json> ParseDocument(absl::string_view input) {
  try {
    return json::parse(input.begin(), input.end());
  } catch (const json::parse_error& e) {
    return absl::InvalidArgumentError(absl::StrCat(
        "malformed JSON at byte ", e.byte, ": ", e.what()));
  }
}

// Integers may appear as JSON numbers or as decimal strings (Takeout writes
// timestampMs as a string).
std::optional<int64_t> AsInt(const json& v) {
  if (v.is_number_integer()) return v.get<int64_t>();
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (std::isfinite(d) && std::floor(d) == d) {
      return static_cast<int64_t>(d);
    }
    return std::nullopt;
  }
  if (v.is_string()) {
    const std::string& s = v.get_ref<const std::string&>();
    int64_t out = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    if (ec == std::errc() && ptr == s.data() + s.size() && !s.empty()) {
      return out;
    }
  }
  return std::nullopt;
}

std::optional<int64_t> IntField(const json& obj, const char* key) {
  const auto it = obj.find(key);
  if (it == obj.end()) return std::nullopt;
  return AsInt(*it);
}

// Accepts "<prefix>TimestampMs" (or "timestampMs") as well as the RFC 3339
// "<prefix>Timestamp" / "timestamp" variant.
std::optional<int64_t> TimestampField(const json& obj, const char* ms_key,
                                      const char* iso_key) {
  if (auto ms = IntField(obj, ms_key)) return ms;
  const auto it = obj.find(iso_key);
  if (it != obj.end() && it->is_string()) {
    auto t = ParseIsoTime(it->get_ref<const std::string&>());
    if (t.ok()) return absl::ToUnixMillis(*t);
  }
  return std::nullopt;
}

void ReadActivity(const json& entry, RawLocationRecord& record) {
  const auto it = entry.find("activity");
  if (it == entry.end() || !it->is_array() || it->empty()) return;
  const json& first = it->front();
  const auto inner = first.find("activity");
  if (inner == first.end() || !inner->is_array() || inner->empty()) return;
  const json& best = inner->front();
  if (auto type = best.find("type"); type != best.end() && type->is_string()) {
    record.activity_type = type->get<std::string>();
  }
  record.activity_confidence = IntField(best, "confidence");
}

}  // namespace

absl::StatusOr<LocationParseResult> ParseLocationRecords(
    absl::string_view input) {
  ASSIGN_OR_RETURN(json doc, ParseDocument(input));
  if (!doc.is_object()) {
    return absl::InvalidArgumentError("top-level value is not an object");
  }
  const auto locations = doc.find("locations");
  if (locations == doc.end() || !locations->is_array()) {
    return absl::InvalidArgumentError("document has no \"locations\" array");
  }

  LocationParseResult result;
  result.total = locations->size();
  result.records.reserve(locations->size());
  for (const json& entry : *locations) {
    if (!entry.is_object()) {
      ++result.skipped;
      continue;
    }
    const auto lat = IntField(entry, "latitudeE7");
    const auto lon = IntField(entry, "longitudeE7");
    const auto ts = TimestampField(entry, "timestampMs", "timestamp");
    if (!lat || !lon || !ts) {
      ++result.skipped;
      continue;
    }
    RawLocationRecord record;
    record.latitude_e7 = *lat;
    record.longitude_e7 = *lon;
    record.timestamp_ms = *ts;
    record.accuracy_m = IntField(entry, "accuracy").value_or(0);
    record.heading_deg = IntField(entry, "heading");
    record.altitude_m = IntField(entry, "altitude");
    ReadActivity(entry, record);
    result.records.push_back(std::move(record));
  }
  return result;
}

AccuracyBand BandForAccuracy(int64_t accuracy_m) {
  if (accuracy_m < kHighAccuracyBelowM) return AccuracyBand::kHigh;
  if (accuracy_m > kPoorAccuracyAboveM) return AccuracyBand::kPoor;
  return AccuracyBand::kMedium;
}

absl::string_view AccuracyBandName(AccuracyBand band) {
  switch (band) {
    case AccuracyBand::kHigh:
      return "high";
    case AccuracyBand::kMedium:
      return "medium";
    case AccuracyBand::kPoor:
      return "poor";
  }
  return "unknown";
}

int64_t EncodeE7(double degrees) { return std::llround(degrees * kE7Scale); }

absl::StatusOr<LocationSample> Normalize(const RawLocationRecord& record,
                                         absl::string_view user_id) {
  if (record.latitude_e7 < -kMaxLatitudeE7 ||
      record.latitude_e7 > kMaxLatitudeE7) {
    return absl::InvalidArgumentError(
        absl::StrCat("latitude_e7 out of range: ", record.latitude_e7));
  }
  if (record.longitude_e7 < -kMaxLongitudeE7 ||
      record.longitude_e7 > kMaxLongitudeE7) {
    return absl::InvalidArgumentError(
        absl::StrCat("longitude_e7 out of range: ", record.longitude_e7));
  }
  if (record.timestamp_ms < kMinTimestampMs ||
      record.timestamp_ms > kMaxTimestampMs) {
    return absl::InvalidArgumentError(absl::StrCat(
        "timestamp_ms is not a 13-digit value: ", record.timestamp_ms));
  }
  if (record.accuracy_m < 0) {
    return absl::InvalidArgumentError(
        absl::StrCat("accuracy_m is negative: ", record.accuracy_m));
  }
  LocationSample sample;
  sample.user_id = std::string(user_id);
  sample.time = absl::FromUnixMillis(record.timestamp_ms);
  sample.point = {DecodeE7(record.latitude_e7), DecodeE7(record.longitude_e7)};
  sample.accuracy_m = record.accuracy_m;
  sample.accuracy_band = BandForAccuracy(record.accuracy_m);
  sample.activity_type = record.activity_type;
  return sample;
}

absl::StatusOr<std::vector<LocationSample>> NormalizeAll(
    const std::vector<RawLocationRecord>& records, absl::string_view user_id) {
  std::vector<LocationSample> out;
  out.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    auto sample = Normalize(records[i], user_id);
    if (!sample.ok()) {
      return absl::InvalidArgumentError(
          absl::StrCat("record ", i, ": ", sample.status().message()));
    }
    out.push_back(*std::move(sample));
  }
  return out;
}

FilterResult FilterByAccuracy(std::vector<LocationSample> samples,
                              AccuracyPolicy policy) {
  FilterResult result;
  result.samples.reserve(samples.size());
  for (LocationSample& s : samples) {
    bool keep = true;
    switch (policy) {
      case AccuracyPolicy::kKeepAll:
        break;
      case AccuracyPolicy::kDropPoor:
        keep = s.accuracy_band != AccuracyBand::kPoor;
        break;
      case AccuracyPolicy::kHighOnly:
        keep = s.accuracy_band == AccuracyBand::kHigh;
        break;
    }
    if (keep) {
      result.samples.push_back(std::move(s));
    } else {
      ++result.dropped;
    }
  }
  result.kept = result.samples.size();
  return result;
}

absl::StatusOr<AccuracyPolicy> ParseAccuracyPolicy(absl::string_view name) {
  if (name == "drop_poor") return AccuracyPolicy::kDropPoor;
  if (name == "keep_all") return AccuracyPolicy::kKeepAll;
  if (name == "high_only") return AccuracyPolicy::kHighOnly;
  return absl::InvalidArgumentError(
      absl::StrCat("unknown accuracy policy '", name,
                   "' (expected drop_poor, keep_all or high_only)"));
}

absl::StatusOr<Confidence> ParseConfidence(absl::string_view label) {
  if (label == "LOW") return Confidence::kLow;
  if (label == "MEDIUM") return Confidence::kMedium;
  if (label == "HIGH") return Confidence::kHigh;
  return absl::InvalidArgumentError(
      absl::StrCat("unknown confidence label '", label, "'"));
}

absl::string_view ConfidenceName(Confidence c) {
  switch (c) {
    case Confidence::kLow:
      return "LOW";
    case Confidence::kMedium:
      return "MEDIUM";
    case Confidence::kHigh:
      return "HIGH";
  }
  return "UNKNOWN";
}

namespace {

absl::StatusOr<GeoPoint> SegmentPoint(const json& seg, const char* key,
                                      std::size_t index) {
  const auto it = seg.find(key);
  if (it == seg.end() || !it->is_object()) {
    return absl::InvalidArgumentError(
        absl::StrCat("segment ", index, ": missing ", key));
  }
  const auto lat = IntField(*it, "latitudeE7");
  const auto lon = IntField(*it, "longitudeE7");
  if (!lat || !lon) {
    return absl::InvalidArgumentError(
        absl::StrCat("segment ", index, ": ", key, " lacks E7 coordinates"));
  }
  if (*lat < -kMaxLatitudeE7 || *lat > kMaxLatitudeE7) {
    return absl::InvalidArgumentError(absl::StrCat(
        "segment ", index, ": ", key, ".latitudeE7 out of range: ", *lat));
  }
  if (*lon < -kMaxLongitudeE7 || *lon > kMaxLongitudeE7) {
    return absl::InvalidArgumentError(absl::StrCat(
        "segment ", index, ": ", key, ".longitudeE7 out of range: ", *lon));
  }
  return GeoPoint{DecodeE7(*lat), DecodeE7(*lon)};
}

}  // namespace

absl::StatusOr<std::vector<ActivitySegment>> ParseActivitySegments(
    absl::string_view input, absl::string_view user_id) {
  ASSIGN_OR_RETURN(json doc, ParseDocument(input));
  if (!doc.is_object()) {
    return absl::InvalidArgumentError("top-level value is not an object");
  }
  const auto objects = doc.find("timelineObjects");
  if (objects == doc.end() || !objects->is_array()) {
    return absl::InvalidArgumentError(
        "document has no \"timelineObjects\" array");
  }

  std::vector<ActivitySegment> segments;
  std::size_t index = 0;
  for (const json& object : *objects) {
    if (!object.is_object()) continue;
    const auto it = object.find("activitySegment");
    if (it == object.end()) continue;
    const json& seg = *it;
    const std::size_t i = index++;

    ActivitySegment s;
    s.user_id = std::string(user_id);
    ASSIGN_OR_RETURN(s.start_point, SegmentPoint(seg, "startLocation", i));
    ASSIGN_OR_RETURN(s.end_point, SegmentPoint(seg, "endLocation", i));

    const auto duration = seg.find("duration");
    if (duration == seg.end() || !duration->is_object()) {
      return absl::InvalidArgumentError(
          absl::StrCat("segment ", i, ": missing duration"));
    }
    const auto start_ms =
        TimestampField(*duration, "startTimestampMs", "startTimestamp");
    const auto end_ms =
        TimestampField(*duration, "endTimestampMs", "endTimestamp");
    if (!start_ms || !end_ms) {
      return absl::InvalidArgumentError(
          absl::StrCat("segment ", i, ": duration lacks start/end timestamps"));
    }
    s.start_time = absl::FromUnixMillis(*start_ms);
    s.end_time = absl::FromUnixMillis(*end_ms);
    s.anomalous = s.end_time < s.start_time;

    s.distance_m = IntField(seg, "distance").value_or(0);
    if (s.distance_m < 0) {
      return absl::InvalidArgumentError(
          absl::StrCat("segment ", i, ": negative distance ", s.distance_m));
    }
    if (auto type = seg.find("activityType");
        type != seg.end() && type->is_string()) {
      s.activity_type = type->get<std::string>();
    } else {
      s.activity_type = "UNKNOWN_ACTIVITY_TYPE";
    }
    const auto conf = seg.find("confidence");
    const std::string label = (conf != seg.end() && conf->is_string())
                                  ? conf->get<std::string>()
                                  : std::string();
    auto confidence = ParseConfidence(label);
    if (!confidence.ok()) {
      return absl::InvalidArgumentError(absl::StrCat(
          "segment ", i, ": ", confidence.status().message()));
    }
    s.confidence = *confidence;
    segments.push_back(std::move(s));
  }
  return segments;
}

}  // namespace campustrace
