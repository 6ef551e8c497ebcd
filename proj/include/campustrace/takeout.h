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

// Readers for Google Takeout location-history exports.
//
// Two document shapes are understood:
//
//   * Raw records: {"locations": [{"latitudeE7": ..., "longitudeE7": ...,
//     "timestampMs": "..." | "timestamp": "<RFC 3339>", "accuracy": ...}]}
//   * Semantic history: {"timelineObjects": [{"activitySegment": {...}}]}
//
// Coordinates arrive as E7 fixed point (degrees * 10^7). Timestamps are kept
// as UTC instants; local-time display is left to callers.

#ifndef CAMPUSTRACE_TAKEOUT_H_
#define CAMPUSTRACE_TAKEOUT_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include "absl/strings/string_view.h"
#include <vector>

#include "absl/status/statusor.h"
#include "absl/time/time.h"
#include "campustrace/geo.h"

namespace campustrace {

using UserId = std::string;

inline constexpr double kE7Scale = 1e7;
inline constexpr int64_t kMaxLatitudeE7 = 900000000;
inline constexpr int64_t kMaxLongitudeE7 = 1800000000;
// 13-digit millisecond timestamps: 2001-09-09 through 2286-11-20.
inline constexpr int64_t kMinTimestampMs = 1000000000000;
inline constexpr int64_t kMaxTimestampMs = 9999999999999;

inline constexpr int64_t kHighAccuracyBelowM = 800;
inline constexpr int64_t kPoorAccuracyAboveM = 5000;

struct RawLocationRecord {
  int64_t latitude_e7 = 0;
  int64_t longitude_e7 = 0;
  int64_t timestamp_ms = 0;
  // Missing in the source document is read as 0.
  int64_t accuracy_m = 0;
  std::optional<int64_t> heading_deg;
  std::optional<int64_t> altitude_m;
  std::optional<std::string> activity_type;
  std::optional<int64_t> activity_confidence;

  friend bool operator==(const RawLocationRecord&,
                         const RawLocationRecord&) = default;
};

struct LocationParseResult {
  std::vector<RawLocationRecord> records;
  // Entries lacking latitudeE7, longitudeE7 or a timestamp.
  std::size_t skipped = 0;
  std::size_t total = 0;
};

// Malformed JSON yields InvalidArgument carrying the byte offset.
absl::StatusOr<LocationParseResult> ParseLocationRecords(absl::string_view input);

enum class AccuracyBand { kHigh, kMedium, kPoor };

// high below 800, poor above 5000, medium in between (both ends inclusive).
AccuracyBand BandForAccuracy(int64_t accuracy_m);
absl::string_view AccuracyBandName(AccuracyBand band);

struct LocationSample {
  UserId user_id;
  absl::Time time;
  GeoPoint point;
  int64_t accuracy_m = 0;
  AccuracyBand accuracy_band = AccuracyBand::kHigh;
  std::optional<std::string> activity_type;

  friend bool operator==(const LocationSample&,
                         const LocationSample&) = default;
};

inline double DecodeE7(int64_t e7) { return static_cast<double>(e7) / kE7Scale; }
int64_t EncodeE7(double degrees);

// Validates ranges (naming the offending field) and decodes E7 to degrees.
absl::StatusOr<LocationSample> Normalize(const RawLocationRecord& record,
                                         absl::string_view user_id);

// Normalize() over a batch; stops at the first invalid record.
absl::StatusOr<std::vector<LocationSample>> NormalizeAll(
    const std::vector<RawLocationRecord>& records, absl::string_view user_id);

enum class AccuracyPolicy { kDropPoor, kKeepAll, kHighOnly };

struct FilterResult {
  std::vector<LocationSample> samples;
  std::size_t kept = 0;
  std::size_t dropped = 0;
};

FilterResult FilterByAccuracy(std::vector<LocationSample> samples,
                              AccuracyPolicy policy = AccuracyPolicy::kDropPoor);

absl::StatusOr<AccuracyPolicy> ParseAccuracyPolicy(absl::string_view name);

enum class Confidence { kLow, kMedium, kHigh };

absl::StatusOr<Confidence> ParseConfidence(absl::string_view label);
absl::string_view ConfidenceName(Confidence c);

struct ActivitySegment {
  UserId user_id;
  GeoPoint start_point;
  GeoPoint end_point;
  absl::Time start_time;
  absl::Time end_time;
  // Stored verbatim from the export; the unit is assumed to be meters.
  int64_t distance_m = 0;
  std::string activity_type;
  Confidence confidence = Confidence::kMedium;
  // end_time earlier than start_time. Kept, never reordered.
  bool anomalous = false;

  friend bool operator==(const ActivitySegment&,
                         const ActivitySegment&) = default;
};

// Every "activitySegment" timeline object becomes one segment attributed to
// `user_id`; other timeline objects (place visits) are ignored.
absl::StatusOr<std::vector<ActivitySegment>> ParseActivitySegments(
    absl::string_view input, absl::string_view user_id);

}  // namespace campustrace

#endif  // CAMPUSTRACE_TAKEOUT_H_
