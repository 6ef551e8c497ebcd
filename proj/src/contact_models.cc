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

#include "campustrace/contact_models.h"

#include <algorithm>
#include <cmath>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"
#include "campustrace/contact_tracer.h"
#include "campustrace/status_macros.h"

namespace campustrace {

ScoreParams DefaultScoreParams(double collision_distance_m) {
  ScoreParams p;
  p.area_m2 = std::numbers::pi * collision_distance_m * collision_distance_m;
  return p;
}

absl::Status Validate(const ScoreParams& params) {
  if (params.incubation_days < 1) {
    return absl::InvalidArgumentError(absl::StrCat(
        "incubation_days must be at least 1, got ", params.incubation_days));
  }
  if (!(params.area_m2 > 0.0)) {
    return absl::InvalidArgumentError("area_m2 must be positive");
  }
  if (!(params.d_min_m > 0.0)) {
    return absl::InvalidArgumentError("d_min_m must be positive");
  }
  return absl::OkStatus();
}

int64_t MobilityMatrix::SubjectVisits(const CellId& p, int day) const {
  const auto it = subject_visits.find({p, day});
  return it == subject_visits.end() ? 0 : it->second;
}

int64_t MobilityMatrix::ContactTicks(const UserId& n, const CellId& p,
                                     int day) const {
  const auto it = contact_ticks.find({n, p, day});
  return it == contact_ticks.end() ? 0 : it->second;
}

int64_t MobilityMatrix::NeighbourTicks(const CellId& p, int day) const {
  int64_t sum = 0;
  for (const auto& [key, ticks] : contact_ticks) {
    if (std::get<1>(key) == p && std::get<2>(key) == day) sum += ticks;
  }
  return sum;
}

double MobilityMatrix::MeanDistanceM() const {
  if (counted_event_ticks == 0) return 0.0;
  return weighted_distance_sum / static_cast<double>(counted_event_ticks);
}

int DayIndex(absl::Time horizon_start, absl::Time t) {
  const int64_t seconds = absl::ToInt64Seconds(t - horizon_start);
  // Floor division so instants before the horizon map below day 1.
  int64_t day = seconds / 86400;
  if (seconds < 0 && seconds % 86400 != 0) --day;
  return static_cast<int>(day + 1);
}

absl::StatusOr<MobilityMatrix> BuildMobilityMatrix(
    const UserId& subject, std::span<const ContactEvent> events,
    std::span<const ResampledTrack> tracks, const SiteGrid& sites,
    const ScoreParams& params) {
  RETURN_IF_ERROR(Validate(params));
  const auto track_it =
      std::find_if(tracks.begin(), tracks.end(),
                   [&](const ResampledTrack& t) { return t.user_id == subject; });
  if (track_it == tracks.end()) {
    return absl::NotFoundError(
        absl::StrCat("subject '", subject, "' has no track"));
  }
  const ResampledTrack& track = *track_it;

  MobilityMatrix m;
  m.subject = subject;
  m.incubation_days = params.incubation_days;
  m.horizon_start = track.grid_start;
  const auto in_horizon = [&](int day) {
    return day >= 1 && day <= params.incubation_days;
  };

  for (std::size_t k = 0; k < track.size(); ++k) {
    if (!track.positions[k]) continue;
    const int day = DayIndex(m.horizon_start, track.TickTime(k));
    if (!in_horizon(day)) continue;
    ++m.subject_visits[{sites.CellOf(*track.positions[k]), day}];
  }

  for (const ContactEvent& e : events) {
    if (!e.Involves(subject)) continue;
    const UserId& partner = e.Partner(subject);
    for (int64_t k = e.tick_start; k <= e.tick_end; ++k) {
      const auto slot = static_cast<std::size_t>(k);
      const int day = DayIndex(m.horizon_start, track.TickTime(slot));
      if (!in_horizon(day)) continue;
      // The subject's own cell, so each contact tick meets a visit even when
      // the event midpoint falls across a cell edge.
      const CellId site = (slot < track.size() && track.positions[slot])
                              ? sites.CellOf(*track.positions[slot])
                              : e.site_cell;
      ++m.contact_ticks[{partner, site, day}];
      m.weighted_distance_sum += e.mean_distance_m;
      ++m.counted_event_ticks;
    }
  }
  return m;
}

absl::string_view ScoreKindName(ScoreKind kind) {
  return kind == ScoreKind::kDirect ? "direct" : "indirect";
}

namespace {

ContactScore Evaluate(const MobilityMatrix& matrix, const ScoreParams& params,
                      ScoreKind kind) {
  const int horizon = std::min(matrix.incubation_days, params.incubation_days);
  // Neighbour ticks summed per (site, day).
  std::map<std::pair<CellId, int>, int64_t> neighbours;
  for (const auto& [key, ticks] : matrix.contact_ticks) {
    const int day = std::get<2>(key);
    if (day < 1 || day > horizon) continue;
    neighbours[{std::get<1>(key), day}] += ticks;
  }
  double numerator = 0.0;
  for (const auto& [site_day, ticks] : neighbours) {
    numerator += static_cast<double>(matrix.SubjectVisits(site_day.first,
                                                          site_day.second)) *
                 static_cast<double>(ticks);
  }

  ContactScore score;
  score.subject = matrix.subject;
  score.kind = kind;
  score.numerator_sum = numerator;
  score.area_m2 = params.area_m2;
  score.mean_distance_m = matrix.MeanDistanceM();
  if (numerator > 0.0) {
    score.value = numerator * params.area_m2 /
                  std::max(score.mean_distance_m, params.d_min_m);
  }
  return score;
}

}  // namespace

ContactScore DirectContactScore(const MobilityMatrix& matrix,
                                const ScoreParams& params) {
  return Evaluate(matrix, params, ScoreKind::kDirect);
}

absl::StatusOr<ContactScore> IndirectContactScore(
    const MobilityMatrix& matrix, const ScoreParams& params,
    std::span<const ContactLevelRecord> levels) {
  const bool suspected =
      std::any_of(levels.begin(), levels.end(), [&](const ContactLevelRecord& r) {
        return r.user_id == matrix.subject && r.level == 1;
      });
  if (!suspected) {
    return absl::FailedPreconditionError(absl::StrCat(
        "subject '", matrix.subject,
        "' is not a level-1 contact; indirect scores need a suspected case"));
  }
  return Evaluate(matrix, params, ScoreKind::kIndirect);
}

std::vector<ContactScore> RankScores(std::vector<ContactScore> scores) {
  std::stable_sort(scores.begin(), scores.end(),
                   [](const ContactScore& a, const ContactScore& b) {
                     if (a.value != b.value) return a.value > b.value;
                     return a.subject < b.subject;
                   });
  return scores;
}

}  // namespace campustrace
