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

// Collision detection: which pairs of users stayed within a distance of each
// other for long enough, evaluated on a shared tick grid.

#ifndef CAMPUSTRACE_PROXIMITY_H_
#define CAMPUSTRACE_PROXIMITY_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/time/time.h"
#include "campustrace/geo.h"
#include "campustrace/takeout.h"
#include "campustrace/trajectory_store.h"

namespace campustrace {

struct ProximityConfig {
  std::string start_date = "2022-04-14";
  std::string start_time = "00:00:00";
  int64_t window_days = 14;
  // Tick spacing of the shared grid.
  int64_t step_s = 60;
  double collision_distance_m = 1.0;
  // Minimum t_end - t_start of a contact run.
  int64_t collision_interval_s = 300;
  // When set, only pairs involving this user are reported.
  std::optional<UserId> index_user;

  friend bool operator==(const ProximityConfig&,
                         const ProximityConfig&) = default;
};

absl::Status Validate(const ProximityConfig& config);
absl::StatusOr<absl::Time> GridStart(const ProximityConfig& config);
std::size_t TickCount(const ProximityConfig& config);
absl::Duration Window(const ProximityConfig& config);

struct ContactEvent {
  // Position in the detector's sorted output.
  uint64_t id = 0;
  // user_a < user_b.
  UserId user_a;
  UserId user_b;
  absl::Time t_start;
  absl::Time t_end;
  int64_t duration_s = 0;
  // Inclusive tick indices on the analysis grid.
  int64_t tick_start = 0;
  int64_t tick_end = 0;
  double min_distance_m = 0.0;
  double mean_distance_m = 0.0;
  // Midpoint of the two positions at the (first) minimum-distance tick.
  GeoPoint midpoint;
  CellId site_cell;
  // Mean of the two users' interpolated accuracies over the run.
  double mean_accuracy_m = 0.0;

  int64_t tick_count() const { return tick_end - tick_start + 1; }
  bool Involves(const UserId& u) const { return u == user_a || u == user_b; }
  const UserId& Partner(const UserId& u) const {
    return u == user_a ? user_b : user_a;
  }

  friend bool operator==(const ContactEvent&, const ContactEvent&) = default;
};

// Spatial hash over one tick's positions. Cells are at least cell_m wide in
// every direction (with margin), so any two positions within cell_m of each
// other land in the same or 8-neighbouring cells. Columns wrap at the
// antimeridian.
class CandidateGrid {
 public:
  // `max_abs_lat_deg` bounds |latitude| over every position that will ever
  // be inserted; it fixes the longitude width of a cell.
  CandidateGrid(double cell_m, double max_abs_lat_deg);

  // Indexes positions[i] for every present entry, replacing prior content.
  void Build(std::span<const std::optional<GeoPoint>> positions);

  // Calls fn(i, j) with i < j once for each pair in the same or adjacent
  // cells.
  template <typename Fn>
  void ForEachCandidatePair(Fn&& fn) const;

  std::size_t CountCandidatePairs() const;

 private:
  int64_t KeyOf(int64_t row, int64_t col) const { return row * cols_ + col; }

  double lat_width_deg_;
  double lon_width_deg_;
  int64_t cols_;
  std::vector<std::pair<int64_t, int64_t>> cell_of_;  // per indexed user
  std::vector<std::size_t> present_;
  std::unordered_map<int64_t, std::vector<std::size_t>> cells_;
};

// Builds the index for a single tick of `tracks` (which must share a grid).
absl::StatusOr<CandidateGrid> BuildCandidateGrid(
    std::span<const ResampledTrack> tracks, std::size_t tick, double cell_m);

enum class PairPruning {
  // Test every present pair at every tick.
  kNone,
  kSpatialHash,
};

struct DetectionOptions {
  PairPruning pruning = PairPruning::kSpatialHash;
  // Candidate cell size; 0 means the collision distance. Must not be smaller
  // than the collision distance.
  double candidate_cell_m = 0.0;
  // Worker threads for tick partitions; 0 picks hardware concurrency.
  int threads = 0;
};

struct DetectionStats {
  uint64_t distance_tests = 0;
  uint64_t ticks = 0;
  uint64_t contact_ticks = 0;
};

struct DetectionResult {
  std::vector<ContactEvent> events;
  DetectionStats stats;
};

// A tick is in contact when both users are present and their haversine
// separation is at most collision_distance_m. Events are maximal runs of
// consecutive in-contact ticks whose span reaches collision_interval_s, sorted
// by (t_start, user_a, user_b). A single absent tick ends a run.
absl::StatusOr<DetectionResult> DetectCollisions(
    const ProximityConfig& config, std::span<const ResampledTrack> tracks,
    const SiteGrid& sites, const DetectionOptions& options = {});

// Per-tick separation in meters, nullopt where either user is absent.
absl::StatusOr<std::vector<std::optional<double>>> PairwiseDistanceSeries(
    absl::string_view user_a, absl::string_view user_b,
    std::span<const ResampledTrack> tracks);

// Resamples every stored user onto the grid described by `config`.
absl::StatusOr<std::vector<ResampledTrack>> ResampleAll(
    const TrajectoryStore& store, const ProximityConfig& config,
    int64_t max_gap_s = kDefaultMaxGapS);

template <typename Fn>
void CandidateGrid::ForEachCandidatePair(Fn&& fn) const {
  for (std::size_t i : present_) {
    const auto [row, col] = cell_of_[i];
    int64_t cols[3] = {col, (col + 1) % cols_, (col - 1 + cols_) % cols_};
    const int ncols = cols_ >= 3 ? 3 : static_cast<int>(cols_);
    for (int64_t r = row - 1; r <= row + 1; ++r) {
      for (int c = 0; c < ncols; ++c) {
        const auto it = cells_.find(KeyOf(r, cols[c]));
        if (it == cells_.end()) continue;
        for (std::size_t j : it->second) {
          if (j > i) fn(i, j);
        }
      }
    }
  }
}

}  // namespace campustrace

#endif  // CAMPUSTRACE_PROXIMITY_H_
