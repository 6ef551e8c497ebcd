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

#include "campustrace/proximity.h"

#include <algorithm>
#include <cmath>
#include <future>
#include <map>
#include <numeric>
#include <thread>
#include <utility>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"
#include "campustrace/status_macros.h"
#include "campustrace/time_util.h"

namespace campustrace {

absl::Status Validate(const ProximityConfig& config) {
  if (config.step_s <= 0) {
    return absl::InvalidArgumentError(
        absl::StrCat("step_s must be positive, got ", config.step_s));
  }
  if (!(config.collision_distance_m > 0.0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("collision_distance_m must be positive, got ",
                     config.collision_distance_m));
  }
  if (config.collision_interval_s < config.step_s) {
    return absl::InvalidArgumentError(absl::StrCat(
        "collision_interval_s (", config.collision_interval_s,
        ") must be at least step_s (", config.step_s, ")"));
  }
  if (config.window_days < 1) {
    return absl::InvalidArgumentError(
        absl::StrCat("window_days must be at least 1, got ",
                     config.window_days));
  }
  if (config.index_user && config.index_user->empty()) {
    return absl::InvalidArgumentError("index_user is empty");
  }
  return GridStart(config).status();
}

absl::StatusOr<absl::Time> GridStart(const ProximityConfig& config) {
  return ParseDateAndTime(config.start_date, config.start_time);
}

absl::Duration Window(const ProximityConfig& config) {
  return absl::Hours(24 * config.window_days);
}

std::size_t TickCount(const ProximityConfig& config) {
  const int64_t window_s = config.window_days * 86400;
  return static_cast<std::size_t>((window_s + config.step_s - 1) /
                                  config.step_s);
}

// Margin absorbing floating-point slop at cell boundaries and the small-angle
// approximation in the longitude width.
constexpr double kCellMargin = 1.01;
// Beyond this longitude width a single column spans the globe.
constexpr double kMaxLonWidthDeg = 10.0;

CandidateGrid::CandidateGrid(double cell_m, double max_abs_lat_deg) {
  lat_width_deg_ = cell_m * kCellMargin / kMetersPerDegreeLat;
  const double worst_lat =
      std::min(90.0, std::fabs(max_abs_lat_deg) + lat_width_deg_);
  const double cos_lat = std::cos(worst_lat * kDegToRad);
  const double lon_width = cos_lat > 0.0 ? lat_width_deg_ / cos_lat : 360.0;
  if (!(lon_width <= kMaxLonWidthDeg)) {
    lon_width_deg_ = 360.0;
    cols_ = 1;
  } else {
    lon_width_deg_ = lon_width;
    cols_ = static_cast<int64_t>(std::ceil(360.0 / lon_width_deg_));
  }
}

void CandidateGrid::Build(std::span<const std::optional<GeoPoint>> positions) {
  cells_.clear();
  present_.clear();
  cell_of_.assign(positions.size(), {0, 0});
  for (std::size_t i = 0; i < positions.size(); ++i) {
    if (!positions[i]) continue;
    const GeoPoint& p = *positions[i];
    const auto row =
        static_cast<int64_t>(std::floor((p.lat_deg + 90.0) / lat_width_deg_));
    auto col =
        static_cast<int64_t>(std::floor((p.lon_deg + 180.0) / lon_width_deg_));
    col = std::clamp<int64_t>(col, 0, cols_ - 1);
    cell_of_[i] = {row, col};
    present_.push_back(i);
    cells_[KeyOf(row, col)].push_back(i);
  }
}

std::size_t CandidateGrid::CountCandidatePairs() const {
  std::size_t n = 0;
  ForEachCandidatePair([&n](std::size_t, std::size_t) { ++n; });
  return n;
}

namespace {

absl::Status CheckSharedGrid(std::span<const ResampledTrack> tracks) {
  for (const ResampledTrack& t : tracks) {
    if (t.grid_start != tracks.front().grid_start ||
        t.step_s != tracks.front().step_s ||
        t.size() != tracks.front().size()) {
      return absl::InvalidArgumentError(absl::StrCat(
          "track for '", t.user_id, "' is on a different grid than '",
          tracks.front().user_id, "'"));
    }
  }
  return absl::OkStatus();
}

double MaxAbsLatitude(std::span<const ResampledTrack> tracks) {
  double m = 0.0;
  for (const ResampledTrack& t : tracks) {
    for (const auto& p : t.positions) {
      if (p) m = std::max(m, std::fabs(p->lat_deg));
    }
  }
  return m;
}

struct Hit {
  int64_t tick;
  double distance_m;
  GeoPoint midpoint;
  double accuracy_m;
};

// Hits per ordered pair key (i * n + j), in tick order.
using HitMap = std::map<uint64_t, std::vector<Hit>>;

struct PartitionOutput {
  HitMap hits;
  DetectionStats stats;
};

struct PartitionInput {
  std::span<const ResampledTrack* const> tracks;  // sorted by user id
  std::optional<std::size_t> index_user;
  double threshold_m;
  double candidate_cell_m;
  double max_abs_lat;
  PairPruning pruning;
};

PartitionOutput ScanTicks(const PartitionInput& in, std::size_t begin,
                          std::size_t end) {
  PartitionOutput out;
  const std::size_t n = in.tracks.size();
  std::vector<std::optional<GeoPoint>> positions(n);
  CandidateGrid grid(in.candidate_cell_m, in.max_abs_lat);

  for (std::size_t k = begin; k < end; ++k) {
    for (std::size_t u = 0; u < n; ++u) positions[u] = in.tracks[u]->positions[k];
    ++out.stats.ticks;

    const auto test = [&](std::size_t i, std::size_t j) {
      if (in.index_user && i != *in.index_user && j != *in.index_user) return;
      ++out.stats.distance_tests;
      const GeoPoint& a = *positions[i];
      const GeoPoint& b = *positions[j];
      const double d = HaversineKm(a, b) * 1000.0;
      if (d > in.threshold_m) return;
      ++out.stats.contact_ticks;
      const GeoPoint mid{(a.lat_deg + b.lat_deg) / 2.0,
                         (a.lon_deg + b.lon_deg) / 2.0};
      const double acc =
          (in.tracks[i]->accuracy_m[k] + in.tracks[j]->accuracy_m[k]) / 2.0;
      out.hits[static_cast<uint64_t>(i) * n + j].push_back(
          Hit{static_cast<int64_t>(k), d, mid, acc});
    };

    if (in.pruning == PairPruning::kNone) {
      for (std::size_t i = 0; i < n; ++i) {
        if (!positions[i]) continue;
        for (std::size_t j = i + 1; j < n; ++j) {
          if (positions[j]) test(i, j);
        }
      }
    } else {
      grid.Build(positions);
      grid.ForEachCandidatePair(test);
    }
  }
  return out;
}

void EmitRuns(const std::vector<Hit>& hits, const ResampledTrack& a,
              const ResampledTrack& b, int64_t min_span_s,
              const SiteGrid& sites, std::vector<ContactEvent>& events) {
  std::size_t start = 0;
  while (start < hits.size()) {
    std::size_t stop = start;
    while (stop + 1 < hits.size() && hits[stop + 1].tick == hits[stop].tick + 1) {
      ++stop;
    }
    const int64_t span_s = (hits[stop].tick - hits[start].tick) * a.step_s;
    if (span_s >= min_span_s) {
      ContactEvent e;
      e.user_a = a.user_id;
      e.user_b = b.user_id;
      e.tick_start = hits[start].tick;
      e.tick_end = hits[stop].tick;
      e.t_start = a.TickTime(static_cast<std::size_t>(e.tick_start));
      e.t_end = a.TickTime(static_cast<std::size_t>(e.tick_end));
      e.duration_s = span_s;
      std::size_t best = start;
      double sum_d = 0.0;
      double sum_acc = 0.0;
      for (std::size_t h = start; h <= stop; ++h) {
        if (hits[h].distance_m < hits[best].distance_m) best = h;
        sum_d += hits[h].distance_m;
        sum_acc += hits[h].accuracy_m;
      }
      const double count = static_cast<double>(stop - start + 1);
      e.min_distance_m = hits[best].distance_m;
      e.mean_distance_m = sum_d / count;
      e.mean_accuracy_m = sum_acc / count;
      e.midpoint = hits[best].midpoint;
      e.site_cell = sites.CellOf(e.midpoint);
      events.push_back(std::move(e));
    }
    start = stop + 1;
  }
}

}  // namespace

absl::StatusOr<CandidateGrid> BuildCandidateGrid(
    std::span<const ResampledTrack> tracks, std::size_t tick, double cell_m) {
  if (!(cell_m > 0.0)) {
    return absl::InvalidArgumentError("cell_m must be positive");
  }
  if (tracks.empty()) return CandidateGrid(cell_m, 0.0);
  RETURN_IF_ERROR(CheckSharedGrid(tracks));
  if (tick >= tracks.front().size()) {
    return absl::OutOfRangeError(absl::StrCat("tick ", tick, " out of range"));
  }
  CandidateGrid grid(cell_m, MaxAbsLatitude(tracks));
  std::vector<std::optional<GeoPoint>> positions;
  positions.reserve(tracks.size());
  for (const ResampledTrack& t : tracks) positions.push_back(t.positions[tick]);
  grid.Build(positions);
  return grid;
}

absl::StatusOr<DetectionResult> DetectCollisions(
    const ProximityConfig& config, std::span<const ResampledTrack> tracks,
    const SiteGrid& sites, const DetectionOptions& options) {
  RETURN_IF_ERROR(Validate(config));
  const double cell_m = options.candidate_cell_m > 0.0
                            ? options.candidate_cell_m
                            : config.collision_distance_m;
  if (cell_m < config.collision_distance_m) {
    return absl::InvalidArgumentError(absl::StrCat(
        "candidate_cell_m (", cell_m, ") is smaller than collision_distance_m (",
        config.collision_distance_m, ")"));
  }

  ASSIGN_OR_RETURN(const absl::Time grid_start, GridStart(config));
  const std::size_t ticks = TickCount(config);
  for (const ResampledTrack& t : tracks) {
    if (t.grid_start != grid_start || t.step_s != config.step_s ||
        t.size() != ticks) {
      return absl::InvalidArgumentError(absl::StrCat(
          "track for '", t.user_id, "' is not on the configured grid (start ",
          FormatIsoUtc(grid_start), ", step ", config.step_s, " s, ", ticks,
          " ticks)"));
    }
  }

  std::vector<const ResampledTrack*> sorted;
  sorted.reserve(tracks.size());
  for (const ResampledTrack& t : tracks) sorted.push_back(&t);
  std::sort(sorted.begin(), sorted.end(),
            [](const ResampledTrack* a, const ResampledTrack* b) {
              return a->user_id < b->user_id;
            });
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (sorted[i]->user_id == sorted[i - 1]->user_id) {
      return absl::InvalidArgumentError(
          absl::StrCat("duplicate track for user '", sorted[i]->user_id, "'"));
    }
  }

  PartitionInput input;
  input.tracks = sorted;
  input.threshold_m = config.collision_distance_m;
  input.candidate_cell_m = cell_m;
  input.max_abs_lat = MaxAbsLatitude(tracks);
  input.pruning = options.pruning;
  if (config.index_user) {
    const auto it = std::find_if(sorted.begin(), sorted.end(),
                                 [&](const ResampledTrack* t) {
                                   return t->user_id == *config.index_user;
                                 });
    if (it == sorted.end()) {
      return absl::NotFoundError(
          absl::StrCat("index_user '", *config.index_user, "' has no track"));
    }
    input.index_user = static_cast<std::size_t>(it - sorted.begin());
  }

  // Partition ticks by day; partitions are merged in order so the result
  // does not depend on scheduling.
  const std::size_t ticks_per_day =
      std::max<std::size_t>(1, static_cast<std::size_t>(86400 / config.step_s));
  std::vector<std::pair<std::size_t, std::size_t>> ranges;
  for (std::size_t b = 0; b < ticks; b += ticks_per_day) {
    ranges.emplace_back(b, std::min(ticks, b + ticks_per_day));
  }
  int threads = options.threads > 0
                    ? options.threads
                    : static_cast<int>(std::thread::hardware_concurrency());
  threads = std::max(1, threads);

  std::vector<PartitionOutput> parts(ranges.size());
  if (threads == 1 || ranges.size() <= 1) {
    for (std::size_t p = 0; p < ranges.size(); ++p) {
      parts[p] = ScanTicks(input, ranges[p].first, ranges[p].second);
    }
  } else {
    std::size_t next = 0;
    while (next < ranges.size()) {
      std::vector<std::future<PartitionOutput>> batch;
      const std::size_t batch_end =
          std::min(ranges.size(), next + static_cast<std::size_t>(threads));
      for (std::size_t p = next; p < batch_end; ++p) {
        batch.push_back(std::async(std::launch::async, ScanTicks,
                                   std::cref(input), ranges[p].first,
                                   ranges[p].second));
      }
      for (std::size_t p = next; p < batch_end; ++p) {
        parts[p] = batch[p - next].get();
      }
      next = batch_end;
    }
  }

  DetectionResult result;
  HitMap merged;
  for (PartitionOutput& part : parts) {
    result.stats.distance_tests += part.stats.distance_tests;
    result.stats.ticks += part.stats.ticks;
    result.stats.contact_ticks += part.stats.contact_ticks;
    for (auto& [key, hits] : part.hits) {
      auto& dst = merged[key];
      dst.insert(dst.end(), hits.begin(), hits.end());
    }
  }

  const std::size_t n = sorted.size();
  for (const auto& [key, hits] : merged) {
    const std::size_t i = key / n;
    const std::size_t j = key % n;
    EmitRuns(hits, *sorted[i], *sorted[j], config.collision_interval_s, sites,
             result.events);
  }
  std::sort(result.events.begin(), result.events.end(),
            [](const ContactEvent& a, const ContactEvent& b) {
              if (a.t_start != b.t_start) return a.t_start < b.t_start;
              if (a.user_a != b.user_a) return a.user_a < b.user_a;
              return a.user_b < b.user_b;
            });
  for (std::size_t i = 0; i < result.events.size(); ++i) {
    result.events[i].id = i;
  }
  return result;
}

absl::StatusOr<std::vector<std::optional<double>>> PairwiseDistanceSeries(
    absl::string_view user_a, absl::string_view user_b,
    std::span<const ResampledTrack> tracks) {
  const auto find = [&](absl::string_view id) -> const ResampledTrack* {
    for (const ResampledTrack& t : tracks) {
      if (t.user_id == id) return &t;
    }
    return nullptr;
  };
  const ResampledTrack* a = find(user_a);
  const ResampledTrack* b = find(user_b);
  if (a == nullptr || b == nullptr) {
    return absl::NotFoundError(absl::StrCat(
        "no track for '", a == nullptr ? user_a : user_b, "'"));
  }
  if (a->grid_start != b->grid_start || a->step_s != b->step_s ||
      a->size() != b->size()) {
    return absl::InvalidArgumentError("tracks are on different grids");
  }
  std::vector<std::optional<double>> series(a->size());
  for (std::size_t k = 0; k < a->size(); ++k) {
    if (a->positions[k] && b->positions[k]) {
      series[k] = HaversineKm(*a->positions[k], *b->positions[k]) * 1000.0;
    }
  }
  return series;
}

absl::StatusOr<std::vector<ResampledTrack>> ResampleAll(
    const TrajectoryStore& store, const ProximityConfig& config,
    int64_t max_gap_s) {
  RETURN_IF_ERROR(Validate(config));
  ASSIGN_OR_RETURN(const absl::Time grid_start, GridStart(config));
  std::vector<ResampledTrack> tracks;
  for (const UserId& id : store.Users()) {
    ASSIGN_OR_RETURN(ResampledTrack t,
                     store.Resample(id, grid_start, config.step_s,
                                    Window(config), max_gap_s));
    tracks.push_back(std::move(t));
  }
  return tracks;
}

}  // namespace campustrace
