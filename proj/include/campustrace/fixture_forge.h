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

// Synthetic campus datasets with scripted encounters.
//
// Every user owns an exclusive rectangular zone and wanders inside it. Each
// scripted encounter gets its own meeting spot; both users stand still there
// for the whole encounter, one of them distance_m north of the other. Users
// are silent (no fixes) for longer than the resampling gap limit while in
// transit, so no interpolated position ever leaves a zone or a spot. Zones
// and spots are far enough apart that unscripted pairs never come close.

#ifndef CAMPUSTRACE_FIXTURE_FORGE_H_
#define CAMPUSTRACE_FIXTURE_FORGE_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/time/time.h"
#include "campustrace/geo.h"
#include "campustrace/proximity.h"
#include "campustrace/takeout.h"
#include "campustrace/trajectory_store.h"

namespace campustrace {

struct ScriptedEncounter {
  UserId user_a;
  UserId user_b;
  // Must fall on the step grid.
  absl::Time t_start;
  // Multiple of the step.
  int64_t duration_s = 600;
  double distance_m = 0.5;
};

struct MotionModel {
  // South-west corner of the campus.
  GeoPoint campus_origin{3.0020, 101.6100};
  double zone_m = 30.0;
  // Zone-to-zone pitch; zones are zone_pitch_m - zone_m apart.
  double zone_pitch_m = 100.0;
  double spot_pitch_m = 70.0;
  double max_encounter_distance_m = 10.0;
  // Gap between consecutive fixes while dwelling, in steps.
  int64_t min_fix_gap_steps = 1;
  int64_t max_fix_gap_steps = 8;
  // Chance that a dwelling gap becomes an outage instead.
  double outage_probability = 0.01;
  int64_t outage_s = 1800;
  // Silence before and after each encounter.
  int64_t transit_s = 900;
  int64_t min_accuracy_m = 5;
  int64_t max_accuracy_m = 60;
};

struct EncounterScript {
  uint64_t seed = 1;
  int users = 50;
  std::string start_date = "2022-04-14";
  int64_t days = 14;
  int64_t step_s = 60;
  std::vector<ScriptedEncounter> encounters;
  MotionModel motion;
};

// "u001", "u002", ... for k = 1, 2, ...
UserId ForgeUserId(int k);

// Index case u001 meets u002 on day 1, u002 meets u003 on day 2, u003 meets
// u004 on day 3 (levels 1/2/3), plus `random_encounters` seeded encounters
// among users outside the chain.
EncounterScript DefaultScript(uint64_t seed = 1, int users = 50,
                              int random_encounters = 40);

struct ManifestEncounter {
  UserId user_a;  // user_a < user_b
  UserId user_b;
  absl::Time t_start;
  absl::Time t_end;
  int64_t duration_s = 0;
  int64_t tick_start = 0;
  int64_t tick_end = 0;
  // Haversine separation of the emitted (E7-rounded) positions.
  double distance_m = 0.0;
  GeoPoint site;
};

struct ForgedUser {
  UserId user_id;
  std::string takeout_json;
  std::size_t sample_count = 0;
  GeoPoint zone_south_west;
};

struct ForgedDataset {
  EncounterScript script;
  std::vector<ForgedUser> users;
  // Sorted by (t_start, user_a, user_b).
  std::vector<ManifestEncounter> encounters;
  std::string manifest_json;
};

// InvalidArgument naming the conflict when an encounter cannot be realized.
absl::StatusOr<ForgedDataset> Generate(const EncounterScript& script);

// Files <user_id>.json plus manifest.json.
absl::Status WriteDataset(const ForgedDataset& dataset, const std::string& dir);

// Ingests every forged user into `store`.
absl::Status IngestDataset(const ForgedDataset& dataset, TrajectoryStore& store);

// Analysis window matching the script.
ProximityConfig ConfigForScript(const EncounterScript& script,
                                double collision_distance_m = 1.0,
                                int64_t collision_interval_s = 300);

// Encounters a detector must report under `config`: those within the
// collision distance whose span reaches the collision interval.
std::vector<ManifestEncounter> ExpectedEncounters(
    std::span<const ManifestEncounter> encounters,
    const ProximityConfig& config);

}  // namespace campustrace

#endif  // CAMPUSTRACE_FIXTURE_FORGE_H_
