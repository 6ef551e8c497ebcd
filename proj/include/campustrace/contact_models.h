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

// Direct and indirect contact scores built from a per-site, per-day mobility
// matrix of one subject.
//
// For a subject with visits V(p, d) to site p on day d and neighbours n with
// contact ticks C(n, p, d) the score is
//
//   sum_d sum_p V(p, d) * sum_n C(n, p, d)  *  area  /  max(D, d_min)
//
// where D is the tick-weighted mean separation over the counted contact
// ticks. The direct score uses a confirmed case as subject; the indirect
// score uses one of its level-1 contacts. Both share this functional form.

#ifndef CAMPUSTRACE_CONTACT_MODELS_H_
#define CAMPUSTRACE_CONTACT_MODELS_H_

#include <cstdint>
#include <map>
#include <numbers>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "absl/status/statusor.h"
#include "absl/time/time.h"
#include "campustrace/proximity.h"
#include "campustrace/trajectory_store.h"

namespace campustrace {

struct ContactLevelRecord;

inline constexpr int kDefaultIncubationDays = 15;
inline constexpr double kDefaultMinDistanceM = 0.5;

struct ScoreParams {
  int incubation_days = kDefaultIncubationDays;
  // Interaction disc of the default 1 m collision distance.
  double area_m2 = std::numbers::pi;
  // Floor on the mean distance in the denominator.
  double d_min_m = kDefaultMinDistanceM;
};

// Area of the interaction disc for `collision_distance_m`.
ScoreParams DefaultScoreParams(double collision_distance_m);

absl::Status Validate(const ScoreParams& params);

struct MobilityMatrix {
  UserId subject;
  int incubation_days = kDefaultIncubationDays;
  // Day 1 starts here.
  absl::Time horizon_start;
  // (site, day) -> subject's present ticks.
  std::map<std::pair<CellId, int>, int64_t> subject_visits;
  // (neighbour, site, day) -> ticks in contact with the subject; site is
  // the subject's own cell at the tick.
  std::map<std::tuple<UserId, CellId, int>, int64_t> contact_ticks;
  // Sum of mean_distance_m * ticks over the counted event ticks.
  double weighted_distance_sum = 0.0;
  int64_t counted_event_ticks = 0;

  int64_t SubjectVisits(const CellId& p, int day) const;
  int64_t ContactTicks(const UserId& n, const CellId& p, int day) const;
  // Sum over neighbours of contact ticks at (p, day).
  int64_t NeighbourTicks(const CellId& p, int day) const;
  double MeanDistanceM() const;
};

// Day index (1-based) of `t` relative to `horizon_start`; values < 1 precede
// the horizon.
int DayIndex(absl::Time horizon_start, absl::Time t);

// Counts the subject's resampled presence per (cell, day) and the ticks of
// every event involving the subject per (partner, event cell, day). Only days
// 1..incubation_days contribute.
absl::StatusOr<MobilityMatrix> BuildMobilityMatrix(
    const UserId& subject, std::span<const ContactEvent> events,
    std::span<const ResampledTrack> tracks, const SiteGrid& sites,
    const ScoreParams& params);

enum class ScoreKind { kDirect, kIndirect };

struct ContactScore {
  UserId subject;
  ScoreKind kind = ScoreKind::kDirect;
  double value = 0.0;
  double numerator_sum = 0.0;
  double area_m2 = 0.0;
  double mean_distance_m = 0.0;
};

absl::string_view ScoreKindName(ScoreKind kind);

// The matrix's own horizon decides which days are counted.
ContactScore DirectContactScore(const MobilityMatrix& matrix,
                                const ScoreParams& params);

// FailedPrecondition unless the subject is a level-1 contact in `levels`.
absl::StatusOr<ContactScore> IndirectContactScore(
    const MobilityMatrix& matrix, const ScoreParams& params,
    std::span<const ContactLevelRecord> levels);

// Highest score first; equal scores ordered by subject id.
std::vector<ContactScore> RankScores(std::vector<ContactScore> scores);

}  // namespace campustrace

#endif  // CAMPUSTRACE_CONTACT_MODELS_H_
