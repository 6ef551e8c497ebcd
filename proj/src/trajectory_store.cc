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

#include "campustrace/trajectory_store.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <utility>

#include "absl/strings/numbers.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "absl/strings/str_split.h"
#include "campustrace/status_macros.h"
#include "campustrace/time_util.h"
#include "json.hpp"

namespace campustrace {

namespace fs = std::filesystem;
using nlohmann::json;

TimeSpan Trajectory::span() const {
  if (samples.empty()) return {};
  return {samples.front().time, samples.back().time};
}

std::string CellId::Label() const { return absl::StrCat("r", row, "c", col); }

SiteGrid::SiteGrid(GeoPoint origin, double cell_m)
    : origin_(origin),
      cell_m_(cell_m),
      meters_per_deg_lon_(kMetersPerDegreeLat *
                          std::cos(origin.lat_deg * kDegToRad)) {}

CellId SiteGrid::CellOf(const GeoPoint& p) const {
  const double north_m = (p.lat_deg - origin_.lat_deg) * kMetersPerDegreeLat;
  const double east_m = (p.lon_deg - origin_.lon_deg) * meters_per_deg_lon_;
  return CellId{static_cast<int64_t>(std::floor(north_m / cell_m_)),
                static_cast<int64_t>(std::floor(east_m / cell_m_))};
}

GeoPoint SiteGrid::CellCenter(const CellId& cell) const {
  const double north_m = (static_cast<double>(cell.row) + 0.5) * cell_m_;
  const double east_m = (static_cast<double>(cell.col) + 0.5) * cell_m_;
  return GeoPoint{origin_.lat_deg + north_m / kMetersPerDegreeLat,
                  origin_.lon_deg + east_m / meters_per_deg_lon_};
}

std::mutex& TrajectoryStore::UserLock(const UserId& user_id) {
  std::lock_guard<std::mutex> lock(locks_mu_);
  auto& slot = user_locks_[user_id];
  if (!slot) slot = std::make_unique<std::mutex>();
  return *slot;
}

absl::StatusOr<IngestSummary> TrajectoryStore::Ingest(
    absl::string_view user_id, std::vector<LocationSample> samples) {
  if (user_id.empty()) return absl::InvalidArgumentError("empty user_id");
  for (const LocationSample& s : samples) {
    if (s.user_id != user_id) {
      return absl::InvalidArgumentError(
          absl::StrCat("batch for user '", user_id,
                       "' contains a sample for user '", s.user_id, "'"));
    }
    if (!IsValid(s.point)) {
      return absl::InvalidArgumentError(absl::StrCat(
          "sample at ", FormatIsoUtc(s.time), " has invalid coordinates"));
    }
  }

  const UserId id(user_id);
  std::lock_guard<std::mutex> writer(UserLock(id));

  std::vector<LocationSample> merged;
  {
    std::shared_lock<std::shared_mutex> read(mu_);
    if (auto it = trajectories_.find(id); it != trajectories_.end()) {
      merged = it->second->samples;
    }
  }
  const std::size_t received = samples.size();
  merged.insert(merged.end(), std::make_move_iterator(samples.begin()),
                std::make_move_iterator(samples.end()));
  std::stable_sort(merged.begin(), merged.end(),
                   [](const LocationSample& a, const LocationSample& b) {
                     return a.time < b.time;
                   });

  std::vector<LocationSample> deduped;
  deduped.reserve(merged.size());
  for (LocationSample& s : merged) {
    if (!deduped.empty() && deduped.back().time == s.time) {
      if (s.accuracy_m < deduped.back().accuracy_m) {
        deduped.back() = std::move(s);
      }
      continue;
    }
    deduped.push_back(std::move(s));
  }

  auto trajectory = std::make_shared<Trajectory>();
  trajectory->user_id = id;
  trajectory->samples = std::move(deduped);

  IngestSummary summary;
  summary.user_id = id;
  summary.received = received;
  summary.stored = trajectory->samples.size();
  summary.duplicates = merged.size() - summary.stored;
  summary.span = trajectory->span();

  std::unique_lock<std::shared_mutex> write(mu_);
  trajectories_[id] = std::move(trajectory);
  return summary;
}

absl::StatusOr<std::shared_ptr<const Trajectory>> TrajectoryStore::Get(
    absl::string_view user_id) const {
  std::shared_lock<std::shared_mutex> read(mu_);
  const auto it = trajectories_.find(UserId(user_id));
  if (it == trajectories_.end()) {
    return absl::NotFoundError(absl::StrCat("unknown user '", user_id, "'"));
  }
  return it->second;
}

std::vector<UserId> TrajectoryStore::Users() const {
  std::shared_lock<std::shared_mutex> read(mu_);
  std::vector<UserId> users;
  users.reserve(trajectories_.size());
  for (const auto& [id, _] : trajectories_) users.push_back(id);
  return users;
}

std::size_t TrajectoryStore::user_count() const {
  std::shared_lock<std::shared_mutex> read(mu_);
  return trajectories_.size();
}

absl::StatusOr<std::vector<LocationSample>> TrajectoryStore::QueryWindow(
    absl::string_view user_id, absl::Time from, absl::Time to) const {
  ASSIGN_OR_RETURN(auto trajectory, Get(user_id));
  const auto& s = trajectory->samples;
  const auto by_time = [](const LocationSample& a, absl::Time t) {
    return a.time < t;
  };
  const auto lo = std::lower_bound(s.begin(), s.end(), from, by_time);
  const auto hi = std::lower_bound(lo, s.end(), to, by_time);
  return std::vector<LocationSample>(lo, hi);
}

absl::StatusOr<ResampledTrack> TrajectoryStore::Resample(
    absl::string_view user_id, absl::Time grid_start, int64_t step_s,
    absl::Duration window, int64_t max_gap_s) const {
  if (step_s <= 0) {
    return absl::InvalidArgumentError(
        absl::StrCat("step_s must be positive, got ", step_s));
  }
  if (window < absl::ZeroDuration()) {
    return absl::InvalidArgumentError("negative resampling window");
  }
  ASSIGN_OR_RETURN(auto trajectory, Get(user_id));

  const int64_t window_ms = absl::ToInt64Milliseconds(window);
  const int64_t step_ms = step_s * 1000;
  const int64_t ticks = (window_ms + step_ms - 1) / step_ms;
  const int64_t start_ms = absl::ToUnixMillis(grid_start);
  const int64_t max_gap_ms = max_gap_s * 1000;

  ResampledTrack track;
  track.user_id = trajectory->user_id;
  track.grid_start = grid_start;
  track.step_s = step_s;
  track.positions.assign(static_cast<std::size_t>(ticks), std::nullopt);
  track.accuracy_m.assign(static_cast<std::size_t>(ticks), 0.0);

  const auto& s = trajectory->samples;
  if (s.empty()) return track;
  std::vector<int64_t> times(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    times[i] = absl::ToUnixMillis(s[i].time);
  }

  std::size_t next = 0;  // first sample with time > tick
  for (int64_t k = 0; k < ticks; ++k) {
    const int64_t t = start_ms + k * step_ms;
    while (next < times.size() && times[next] <= t) ++next;
    if (next == 0) continue;  // before the first sample
    const std::size_t prev = next - 1;
    const auto slot = static_cast<std::size_t>(k);
    if (times[prev] == t) {
      track.positions[slot] = s[prev].point;
      track.accuracy_m[slot] = static_cast<double>(s[prev].accuracy_m);
      continue;
    }
    if (next == times.size()) continue;  // after the last sample
    const int64_t gap = times[next] - times[prev];
    if (gap > max_gap_ms) continue;

    const double f = static_cast<double>(t - times[prev]) /
                     static_cast<double>(gap);
    const GeoPoint& a = s[prev].point;
    const GeoPoint& b = s[next].point;
    const auto lerp = [f](double x, double y) {
      const double v = x + (y - x) * f;
      return std::clamp(v, std::min(x, y), std::max(x, y));
    };
    track.positions[slot] =
        GeoPoint{lerp(a.lat_deg, b.lat_deg), lerp(a.lon_deg, b.lon_deg)};
    track.accuracy_m[slot] =
        lerp(static_cast<double>(s[prev].accuracy_m),
             static_cast<double>(s[next].accuracy_m));
  }
  return track;
}

std::optional<GeoPoint> TrajectoryStore::GridOrigin() const {
  std::shared_lock<std::shared_mutex> read(mu_);
  std::optional<GeoPoint> origin;
  for (const auto& [_, t] : trajectories_) {
    for (const LocationSample& s : t->samples) {
      if (!origin) {
        origin = s.point;
        continue;
      }
      origin->lat_deg = std::min(origin->lat_deg, s.point.lat_deg);
      origin->lon_deg = std::min(origin->lon_deg, s.point.lon_deg);
    }
  }
  return origin;
}

SiteGrid TrajectoryStore::DefaultSiteGrid(double cell_m) const {
  return SiteGrid(GridOrigin().value_or(GeoPoint{}), cell_m);
}

TimeSpan TrajectoryStore::DatasetSpan() const {
  std::shared_lock<std::shared_mutex> read(mu_);
  TimeSpan span;
  bool any = false;
  for (const auto& [_, t] : trajectories_) {
    if (t->samples.empty()) continue;
    const TimeSpan s = t->span();
    if (!any) {
      span = s;
      any = true;
      continue;
    }
    span.first = std::min(span.first, s.first);
    span.last = std::max(span.last, s.last);
  }
  return span;
}

std::vector<SiteCell> TrajectoryStore::CommonLocations(
    const std::vector<UserId>& user_ids, const SiteGrid& grid,
    std::size_t min_users) const {
  std::map<CellId, std::map<UserId, int64_t>> visits;
  for (const UserId& id : user_ids) {
    auto trajectory = Get(id);
    if (!trajectory.ok()) continue;
    for (const LocationSample& s : (*trajectory)->samples) {
      ++visits[grid.CellOf(s.point)][id];
    }
  }

  std::vector<SiteCell> cells;
  for (auto& [cell, per_user] : visits) {
    if (per_user.size() < min_users) continue;
    SiteCell site;
    site.cell = cell;
    for (const auto& [id, count] : per_user) {
      site.visitors.push_back(id);
      site.total_visits += count;
    }
    site.visit_count = std::move(per_user);
    cells.push_back(std::move(site));
  }
  std::sort(cells.begin(), cells.end(),
            [](const SiteCell& a, const SiteCell& b) {
              if (a.visitors.size() != b.visitors.size()) {
                return a.visitors.size() > b.visitors.size();
              }
              if (a.total_visits != b.total_visits) {
                return a.total_visits > b.total_visits;
              }
              return a.cell < b.cell;
            });
  return cells;
}

namespace {

constexpr int kBundleSchemaVersion = 1;
constexpr char kSamplesHeader[] =
    "timestamp_ms,lat_deg,lon_deg,accuracy_m,activity_type";

absl::Status WriteFile(const fs::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    return absl::UnavailableError(
        absl::StrCat("cannot open ", path.string(), " for writing"));
  }
  out << contents;
  out.close();
  if (!out) {
    return absl::DataLossError(absl::StrCat("short write to ", path.string()));
  }
  return absl::OkStatus();
}

absl::StatusOr<std::string> ReadFile(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    return absl::NotFoundError(absl::StrCat("cannot open ", path.string()));
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

absl::Status TrajectoryStore::Save(const std::string& dir) const {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    return absl::UnavailableError(
        absl::StrCat("cannot create ", dir, ": ", ec.message()));
  }

  std::map<UserId, std::shared_ptr<const Trajectory>> snapshot;
  {
    std::shared_lock<std::shared_mutex> read(mu_);
    snapshot = trajectories_;
  }

  json meta;
  meta["schema_version"] = kBundleSchemaVersion;
  const auto origin = GridOrigin().value_or(GeoPoint{});
  meta["grid_origin"] = {{"lat_deg", origin.lat_deg},
                         {"lon_deg", origin.lon_deg}};
  const TimeSpan span = DatasetSpan();
  if (!snapshot.empty()) {
    meta["time_span"] = {{"first", FormatIsoUtc(span.first)},
                         {"last", FormatIsoUtc(span.last)}};
  }
  json users = json::array();
  int index = 0;
  for (const auto& [id, t] : snapshot) {
    const std::string file = absl::StrFormat("samples_%04d.csv", index++);
    std::string csv = absl::StrCat(kSamplesHeader, "\n");
    for (const LocationSample& s : t->samples) {
      absl::StrAppend(&csv, absl::ToUnixMillis(s.time), ",",
                      absl::StrFormat("%.17g,%.17g", s.point.lat_deg,
                                      s.point.lon_deg),
                      ",", s.accuracy_m, ",", s.activity_type.value_or(""),
                      "\n");
    }
    RETURN_IF_ERROR(WriteFile(fs::path(dir) / file, csv));
    json u = {{"user_id", id},
              {"file", file},
              {"sample_count", t->samples.size()}};
    if (!t->samples.empty()) {
      u["first"] = FormatIsoUtc(t->span().first);
      u["last"] = FormatIsoUtc(t->span().last);
    }
    users.push_back(std::move(u));
  }
  meta["users"] = std::move(users);
  return WriteFile(fs::path(dir) / "metadata.json", meta.dump(2) + "\n");
}

absl::StatusOr<std::unique_ptr<TrajectoryStore>> TrajectoryStore::Load(
    const std::string& dir) {
  ASSIGN_OR_RETURN(std::string meta_text,
                   ReadFile(fs::path(dir) / "metadata.json"));
  json meta;
  try {
    meta = json::parse(meta_text);
  } catch (const json::parse_error& e) {
    return absl::DataLossError(
        absl::StrCat("corrupt metadata.json at byte ", e.byte));
  }
  if (meta.value("schema_version", 0) != kBundleSchemaVersion) {
    return absl::FailedPreconditionError(
        "unsupported dataset bundle schema version");
  }

  auto store = std::make_unique<TrajectoryStore>();
  for (const json& u : meta.at("users")) {
    const std::string id = u.at("user_id").get<std::string>();
    const std::string file = u.at("file").get<std::string>();
    ASSIGN_OR_RETURN(std::string csv, ReadFile(fs::path(dir) / file));
    std::vector<LocationSample> samples;
    int line_no = 0;
    for (absl::string_view line : absl::StrSplit(csv, '\n')) {
      if (line_no++ == 0 || line.empty()) continue;
      std::vector<absl::string_view> f = absl::StrSplit(line, ',');
      int64_t ms = 0;
      LocationSample s;
      if (f.size() != 5 || !absl::SimpleAtoi(f[0], &ms) ||
          !absl::SimpleAtod(f[1], &s.point.lat_deg) ||
          !absl::SimpleAtod(f[2], &s.point.lon_deg) ||
          !absl::SimpleAtoi(f[3], &s.accuracy_m)) {
        return absl::DataLossError(
            absl::StrCat(file, ":", line_no, ": malformed sample row"));
      }
      s.user_id = id;
      s.time = absl::FromUnixMillis(ms);
      s.accuracy_band = BandForAccuracy(s.accuracy_m);
      if (!f[4].empty()) s.activity_type = std::string(f[4]);
      samples.push_back(std::move(s));
    }
    RETURN_IF_ERROR(store->Ingest(id, std::move(samples)).status());
  }
  return store;
}

}  // namespace campustrace
