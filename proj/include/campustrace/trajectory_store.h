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

#ifndef CAMPUSTRACE_TRAJECTORY_STORE_H_
#define CAMPUSTRACE_TRAJECTORY_STORE_H_

#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include "absl/strings/string_view.h"
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/time/time.h"
#include "campustrace/geo.h"
#include "campustrace/takeout.h"

namespace campustrace {

inline constexpr int64_t kDefaultMaxGapS = 600;
inline constexpr double kDefaultSiteCellM = 10.0;

struct TimeSpan {
  absl::Time first = absl::InfinitePast();
  absl::Time last = absl::InfinitePast();

  friend bool operator==(const TimeSpan&, const TimeSpan&) = default;
};

// Samples strictly increasing in time.
struct Trajectory {
  UserId user_id;
  std::vector<LocationSample> samples;

  TimeSpan span() const;
};

struct IngestSummary {
  UserId user_id;
  std::size_t received = 0;
  std::size_t stored = 0;
  // Samples discarded because another sample shared their timestamp.
  std::size_t duplicates = 0;
  TimeSpan span;
};

// Positions on the tick grid grid_start + k * step_s. Absent ticks carry
// std::nullopt; accuracy_m is meaningful only where a position is present.
struct ResampledTrack {
  UserId user_id;
  absl::Time grid_start;
  int64_t step_s = 60;
  std::vector<std::optional<GeoPoint>> positions;
  std::vector<double> accuracy_m;

  std::size_t size() const { return positions.size(); }
  absl::Time TickTime(std::size_t k) const {
    return grid_start + absl::Seconds(step_s * static_cast<int64_t>(k));
  }
};

struct CellId {
  int64_t row = 0;
  int64_t col = 0;

  friend auto operator<=>(const CellId&, const CellId&) = default;
  std::string Label() const;
};

// Axis-aligned square grid of side cell_m meters anchored at `origin`.
// Longitude spacing uses the origin's latitude.
class SiteGrid {
 public:
  SiteGrid() = default;
  SiteGrid(GeoPoint origin, double cell_m);

  CellId CellOf(const GeoPoint& p) const;
  GeoPoint CellCenter(const CellId& cell) const;

  const GeoPoint& origin() const { return origin_; }
  double cell_m() const { return cell_m_; }

 private:
  GeoPoint origin_;
  double cell_m_ = kDefaultSiteCellM;
  double meters_per_deg_lon_ = kMetersPerDegreeLat;
};

struct SiteCell {
  CellId cell;
  // Sorted, never empty.
  std::vector<UserId> visitors;
  std::map<UserId, int64_t> visit_count;
  int64_t total_visits = 0;
};

// In-memory store of per-user trajectories with a directory-bundle
// persistence format. Readers receive immutable snapshots.
class TrajectoryStore {
 public:
  TrajectoryStore() = default;
  TrajectoryStore(const TrajectoryStore&) = delete;
  TrajectoryStore& operator=(const TrajectoryStore&) = delete;

  // Merges `samples` into the user's trajectory, sorting and removing
  // same-timestamp duplicates (best accuracy wins, ties keep the earlier
  // one). Re-ingesting identical data leaves the store unchanged.
  absl::StatusOr<IngestSummary> Ingest(absl::string_view user_id,
                                       std::vector<LocationSample> samples);

  absl::StatusOr<std::shared_ptr<const Trajectory>> Get(
      absl::string_view user_id) const;

  // Sorted user ids.
  std::vector<UserId> Users() const;
  std::size_t user_count() const;

  // Samples with from <= time < to.
  absl::StatusOr<std::vector<LocationSample>> QueryWindow(
      absl::string_view user_id, absl::Time from, absl::Time to) const;

  // Linear interpolation (per coordinate, in degrees) onto
  // ceil(window / step) ticks. A tick is present only when it falls on a
  // sample or between two samples at most max_gap_s apart.
  absl::StatusOr<ResampledTrack> Resample(
      absl::string_view user_id, absl::Time grid_start, int64_t step_s,
      absl::Duration window, int64_t max_gap_s = kDefaultMaxGapS) const;

  // Minimum latitude / longitude over every stored sample.
  std::optional<GeoPoint> GridOrigin() const;
  SiteGrid DefaultSiteGrid(double cell_m = kDefaultSiteCellM) const;

  TimeSpan DatasetSpan() const;

  // Cells visited by at least `min_users` of `user_ids`, most distinct
  // visitors first, then most visits, then by cell id. Unknown ids are
  // ignored.
  std::vector<SiteCell> CommonLocations(const std::vector<UserId>& user_ids,
                                        const SiteGrid& grid,
                                        std::size_t min_users) const;

  // Directory bundle: metadata.json plus one samples_NNNN.csv per user.
  absl::Status Save(const std::string& dir) const;
  static absl::StatusOr<std::unique_ptr<TrajectoryStore>> Load(
      const std::string& dir);

 private:
  std::mutex& UserLock(const UserId& user_id);

  mutable std::shared_mutex mu_;
  std::map<UserId, std::shared_ptr<const Trajectory>> trajectories_;
  std::mutex locks_mu_;
  std::map<UserId, std::unique_ptr<std::mutex>> user_locks_;
};

}  // namespace campustrace

#endif  // CAMPUSTRACE_TRAJECTORY_STORE_H_
