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
#include <filesystem>
#include <map>
#include <random>
#include <set>
#include <thread>

#include "absl/time/time.h"
#include "gtest/gtest.h"

namespace campustrace {
namespace {

const absl::Time kT0 = absl::FromUnixSeconds(1649894400);  // 2022-04-14

LocationSample Sample(const UserId& user, int64_t offset_s, double lat,
                      double lon, int64_t accuracy = 10) {
  LocationSample s;
  s.user_id = user;
  s.time = kT0 + absl::Seconds(offset_s);
  s.point = {lat, lon};
  s.accuracy_m = accuracy;
  return s;
}

TEST(TrajectoryStoreTest, IngestSortsAndDeduplicates) {
  TrajectoryStore store;
  const auto summary = store.Ingest(
      "a", {Sample("a", 120, 3.0, 101.0, 30), Sample("a", 0, 3.1, 101.1),
            Sample("a", 120, 3.2, 101.2, 5), Sample("a", 120, 3.3, 101.3, 5)});
  ASSERT_TRUE(summary.ok()) << summary.status();
  EXPECT_EQ(summary->received, 4u);
  EXPECT_EQ(summary->stored, 2u);
  EXPECT_EQ(summary->duplicates, 2u);
  const auto t = store.Get("a");
  ASSERT_TRUE(t.ok());
  ASSERT_EQ((*t)->samples.size(), 2u);
  EXPECT_EQ((*t)->samples[0].time, kT0);
  // Best accuracy wins; the tie keeps the earlier-received sample.
  EXPECT_EQ((*t)->samples[1].point, (GeoPoint{3.2, 101.2}));
  EXPECT_EQ((*t)->span().last, kT0 + absl::Seconds(120));
}

TEST(TrajectoryStoreTest, IngestIsIdempotent) {
  TrajectoryStore store;
  std::vector<LocationSample> batch = {Sample("a", 0, 3.0, 101.0),
                                       Sample("a", 60, 3.0001, 101.0)};
  ASSERT_TRUE(store.Ingest("a", batch).ok());
  const auto before = (*store.Get("a"))->samples;
  ASSERT_TRUE(store.Ingest("a", batch).ok());
  EXPECT_EQ((*store.Get("a"))->samples, before);
}

TEST(TrajectoryStoreTest, RejectsMismatchedOrInvalid) {
  TrajectoryStore store;
  EXPECT_FALSE(store.Ingest("a", {Sample("b", 0, 3, 101)}).ok());
  EXPECT_FALSE(store.Ingest("a", {Sample("a", 0, 91, 101)}).ok());
  EXPECT_FALSE(store.Ingest("", {}).ok());
  EXPECT_EQ(store.Get("nobody").status().code(), absl::StatusCode::kNotFound);
}

TEST(TrajectoryStoreTest, QueryWindowIsHalfOpenAndStable) {
  TrajectoryStore store;
  ASSERT_TRUE(store.Ingest("a", {Sample("a", 0, 3, 101), Sample("a", 60, 3, 101),
                                 Sample("a", 120, 3, 101)})
                  .ok());
  const auto w = store.QueryWindow("a", kT0, kT0 + absl::Seconds(120));
  ASSERT_TRUE(w.ok());
  EXPECT_EQ(w->size(), 2u);
  EXPECT_EQ(*w, *store.QueryWindow("a", kT0, kT0 + absl::Seconds(120)));
}

TEST(ResampleTest, InterpolatesOnlyAcrossShortGaps) {
  TrajectoryStore store;
  ASSERT_TRUE(store.Ingest("a", {Sample("a", 60, 3.0, 101.0, 10),
                                 Sample("a", 180, 3.002, 101.004, 30),
                                 Sample("a", 1000, 3.1, 101.1)})
                  .ok());
  const auto track = store.Resample("a", kT0, 60, absl::Seconds(1200));
  ASSERT_TRUE(track.ok()) << track.status();
  ASSERT_EQ(track->size(), 20u);
  EXPECT_FALSE(track->positions[0].has_value());
  EXPECT_EQ(*track->positions[1], (GeoPoint{3.0, 101.0}));
  ASSERT_TRUE(track->positions[2].has_value());
  EXPECT_NEAR(track->positions[2]->lat_deg, 3.001, 1e-12);
  EXPECT_NEAR(track->positions[2]->lon_deg, 101.002, 1e-12);
  EXPECT_NEAR(track->accuracy_m[2], 20.0, 1e-12);
  EXPECT_EQ(*track->positions[3], (GeoPoint{3.002, 101.004}));
  // 820 s between the second and third sample exceeds the 600 s gap.
  for (std::size_t k = 4; k < 20; ++k) EXPECT_FALSE(track->positions[k].has_value()) << k;
  EXPECT_EQ(track->TickTime(3), kT0 + absl::Seconds(180));
  EXPECT_FALSE(store.Resample("a", kT0, 0, absl::Seconds(60)).ok());
}

TEST(ResampleTest, NeverInventsPresenceAndStaysInBoundingBox) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int64_t> gap(1, 900);
  std::uniform_real_distribution<double> jitter(-0.001, 0.001);
  TrajectoryStore store;
  std::vector<LocationSample> samples;
  int64_t t = 7;
  for (int k = 0; k < 400; ++k) {
    samples.push_back(Sample("a", t, 3.0 + jitter(rng), 101.0 + jitter(rng)));
    t += gap(rng);
  }
  ASSERT_TRUE(store.Ingest("a", samples).ok());
  const auto track = store.Resample("a", kT0, 60, absl::Seconds(t + 600));
  ASSERT_TRUE(track.ok());
  std::size_t present = 0;
  for (std::size_t k = 0; k < track->size(); ++k) {
    if (!track->positions[k]) continue;
    ++present;
    const int64_t tick = static_cast<int64_t>(k) * 60;
    const LocationSample* before = nullptr;
    const LocationSample* after = nullptr;
    for (const LocationSample& s : samples) {
      const int64_t st = absl::ToInt64Seconds(s.time - kT0);
      if (st <= tick) before = &s;
      if (st >= tick && after == nullptr) after = &s;
    }
    ASSERT_NE(before, nullptr);
    ASSERT_NE(after, nullptr);
    EXPECT_LE(absl::ToInt64Seconds(after->time - before->time), 600);
    const GeoPoint& p = *track->positions[k];
    EXPECT_GE(p.lat_deg, std::min(before->point.lat_deg, after->point.lat_deg) - 1e-12);
    EXPECT_LE(p.lat_deg, std::max(before->point.lat_deg, after->point.lat_deg) + 1e-12);
    EXPECT_GE(p.lon_deg, std::min(before->point.lon_deg, after->point.lon_deg) - 1e-12);
    EXPECT_LE(p.lon_deg, std::max(before->point.lon_deg, after->point.lon_deg) + 1e-12);
  }
  EXPECT_GT(present, 0u);
}

TEST(SiteGridTest, OriginCellAndCenters) {
  TrajectoryStore store;
  ASSERT_TRUE(store.Ingest("a", {Sample("a", 0, 3.0, 101.0)}).ok());
  ASSERT_TRUE(store.Ingest("b", {Sample("b", 0, 3.001, 100.999)}).ok());
  EXPECT_EQ(*store.GridOrigin(), (GeoPoint{3.0, 100.999}));
  const SiteGrid grid = store.DefaultSiteGrid();
  EXPECT_EQ(grid.CellOf(grid.origin()), (CellId{0, 0}));
  const CellId c{4, 7};
  EXPECT_EQ(grid.CellOf(grid.CellCenter(c)), c);
  EXPECT_EQ(c.Label(), "r4c7");
  // Neighbouring centers are one cell apart.
  EXPECT_NEAR(HaversineKm(grid.CellCenter({0, 0}), grid.CellCenter({1, 0})) * 1000, 10.0, 1e-6);
  EXPECT_NEAR(HaversineKm(grid.CellCenter({0, 0}), grid.CellCenter({0, 1})) * 1000, 10.0, 1e-3);
}

TEST(CommonLocationsTest, MatchesBruteForceUnion) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> d(0.0, 0.0004);
  TrajectoryStore store;
  std::vector<UserId> users = {"a", "b", "c", "d"};
  for (const UserId& u : users) {
    std::vector<LocationSample> s;
    for (int k = 0; k < 200; ++k) s.push_back(Sample(u, k * 60, 3.0 + d(rng), 101.0 + d(rng)));
    ASSERT_TRUE(store.Ingest(u, s).ok());
  }
  const SiteGrid grid = store.DefaultSiteGrid();
  std::map<CellId, std::set<UserId>> brute;
  std::map<CellId, int64_t> totals;
  for (const UserId& u : {UserId("a"), UserId("c")}) {
    for (const LocationSample& s : (*store.Get(u))->samples) {
      brute[grid.CellOf(s.point)].insert(u);
      ++totals[grid.CellOf(s.point)];
    }
  }
  const auto cells = store.CommonLocations({"a", "c", "ghost"}, grid, 1);
  ASSERT_EQ(cells.size(), brute.size());
  for (std::size_t k = 0; k < cells.size(); ++k) {
    const SiteCell& c = cells[k];
    EXPECT_EQ(std::set<UserId>(c.visitors.begin(), c.visitors.end()), brute.at(c.cell));
    EXPECT_EQ(c.total_visits, totals.at(c.cell));
    if (k > 0) EXPECT_GE(cells[k - 1].visitors.size(), c.visitors.size());
  }
  for (const SiteCell& c : store.CommonLocations({"a", "c"}, grid, 2)) {
    EXPECT_EQ(c.visitors, (std::vector<UserId>{"a", "c"}));
  }
}

TEST(TrajectoryStoreTest, SaveLoadRoundTrip) {
  TrajectoryStore store;
  LocationSample s = Sample("a", 0, 3.0242070, 101.6122210, 12);
  s.accuracy_band = AccuracyBand::kHigh;
  s.activity_type = "STILL";
  LocationSample t = Sample("a", 61, -33.9999999, -180.0, 900);
  t.accuracy_band = AccuracyBand::kMedium;
  ASSERT_TRUE(store.Ingest("a", {s, t}).ok());
  ASSERT_TRUE(store.Ingest("b,odd", {Sample("b,odd", 5, 1.0, 2.0)}).ok());
  const std::string dir = ::testing::TempDir() + "/store_roundtrip";
  std::filesystem::remove_all(dir);
  ASSERT_TRUE(store.Save(dir).ok());
  const auto loaded = TrajectoryStore::Load(dir);
  ASSERT_TRUE(loaded.ok()) << loaded.status();
  EXPECT_EQ((*loaded)->Users(), store.Users());
  for (const UserId& u : store.Users()) {
    EXPECT_EQ((*(*loaded)->Get(u))->samples, (*store.Get(u))->samples) << u;
  }
  EXPECT_EQ((*loaded)->GridOrigin(), store.GridOrigin());
  EXPECT_FALSE(TrajectoryStore::Load(dir + "/missing").ok());
}

TEST(TrajectoryStoreTest, ConcurrentIngestOfDistinctUsers) {
  TrajectoryStore store;
  std::vector<std::thread> threads;
  for (int u = 0; u < 8; ++u) {
    threads.emplace_back([&store, u] {
      const UserId id = "u" + std::to_string(u);
      for (int k = 0; k < 50; ++k) {
        ASSERT_TRUE(store.Ingest(id, {Sample(id, k * 60, 3.0, 101.0)}).ok());
        (void)store.Users();
      }
    });
  }
  for (auto& th : threads) th.join();
  EXPECT_EQ(store.user_count(), 8u);
  for (const UserId& u : store.Users()) EXPECT_EQ((*store.Get(u))->samples.size(), 50u);
}

}  // namespace
}  // namespace campustrace
