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

#include "campustrace/fixture_forge.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <utility>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "campustrace/analysis.h"
#include "campustrace/status_macros.h"
#include "campustrace/time_util.h"
#include "json.hpp"

namespace campustrace {
namespace {

using nlohmann::ordered_json;

// Raw engine output only: distribution classes are implementation-defined.
class Rng {
 public:
  Rng(uint64_t seed, uint64_t stream) {
    std::seed_seq seq{static_cast<uint32_t>(seed), static_cast<uint32_t>(seed >> 32),
                      static_cast<uint32_t>(stream),
                      static_cast<uint32_t>(stream >> 32)};
    engine_.seed(seq);
  }

  // Inclusive.
  int64_t Int(int64_t lo, int64_t hi) {
    const auto span = static_cast<uint64_t>(hi - lo) + 1;
    return lo + static_cast<int64_t>(engine_() % span);
  }

  double Unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 engine_;
};

GeoPoint Offset(const GeoPoint& base, double north_m, double east_m) {
  const double lon_scale =
      kMetersPerDegreeLat * std::cos(base.lat_deg * kDegToRad);
  return {base.lat_deg + north_m / kMetersPerDegreeLat,
          base.lon_deg + east_m / lon_scale};
}

GeoPoint Quantize(const GeoPoint& p) {
  return {DecodeE7(EncodeE7(p.lat_deg)), DecodeE7(EncodeE7(p.lon_deg))};
}

struct Fix {
  int64_t t_s;  // seconds from the window start
  GeoPoint point;
  int64_t accuracy_m;
};

// One user's stay at a meeting spot.
struct Stay {
  int64_t start_s;
  int64_t end_s;
  GeoPoint point;
  std::size_t encounter;
};

int GridCols(int n) {
  return std::max(1, static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n)))));
}

absl::Status Check(bool ok, const std::string& message) {
  return ok ? absl::OkStatus() : absl::InvalidArgumentError(message);
}

std::string DescribeEncounter(std::size_t k, const ScriptedEncounter& e) {
  return absl::StrCat("encounter ", k, " (", e.user_a, "-", e.user_b, " at ",
                      FormatIsoUtc(e.t_start), ")");
}

}  // namespace

UserId ForgeUserId(int k) { return absl::StrFormat("u%03d", k); }

EncounterScript DefaultScript(uint64_t seed, int users, int random_encounters) {
  EncounterScript script;
  script.seed = seed;
  script.users = users;
  const absl::Time start =
      ParseDateAndTime(script.start_date, "00:00:00").value();
  const int chain = std::min(users, 4);
  for (int k = 1; k < chain; ++k) {
    ScriptedEncounter e;
    e.user_a = ForgeUserId(k);
    e.user_b = ForgeUserId(k + 1);
    e.t_start = start + absl::Hours(24 * (k - 1) + 10);
    e.duration_s = 900;
    e.distance_m = 0.4 + 0.1 * k;
    script.encounters.push_back(e);
  }

  const int first_free = chain + 1;
  if (users - first_free + 1 < 2) return script;
  Rng rng(seed, 0xC0FFEE);
  const auto conflicts = [&](const ScriptedEncounter& c) {
    for (const ScriptedEncounter& e : script.encounters) {
      const bool shared = e.user_a == c.user_a || e.user_a == c.user_b ||
                          e.user_b == c.user_a || e.user_b == c.user_b;
      if (!shared) continue;
      const absl::Time c_end = c.t_start + absl::Seconds(c.duration_s);
      const absl::Time e_end = e.t_start + absl::Seconds(e.duration_s);
      const absl::Duration margin = absl::Seconds(2 * script.motion.transit_s);
      if (c.t_start < e_end + margin && e.t_start < c_end + margin) return true;
    }
    return false;
  };
  for (int n = 0; n < random_encounters; ++n) {
    for (int attempt = 0; attempt < 100; ++attempt) {
      const int a = static_cast<int>(rng.Int(first_free, users));
      const int b = static_cast<int>(rng.Int(first_free, users));
      if (a == b) continue;
      ScriptedEncounter e;
      e.user_a = ForgeUserId(a);
      e.user_b = ForgeUserId(b);
      const int64_t day = rng.Int(0, script.days - 1);
      const int64_t minute = rng.Int(8 * 60, 20 * 60);
      e.t_start = start + absl::Minutes(day * 1440 + minute);
      e.duration_s = 60 * rng.Int(5, 30);
      e.distance_m = static_cast<double>(rng.Int(10, 90)) / 100.0;
      if (conflicts(e)) continue;
      script.encounters.push_back(e);
      break;
    }
  }
  return script;
}

absl::StatusOr<ForgedDataset> Generate(const EncounterScript& script) {
  const MotionModel& m = script.motion;
  RETURN_IF_ERROR(Check(script.users >= 1, "users must be at least 1"));
  RETURN_IF_ERROR(Check(script.days >= 1, "days must be at least 1"));
  RETURN_IF_ERROR(Check(script.step_s >= 1, "step_s must be positive"));
  RETURN_IF_ERROR(Check(m.zone_pitch_m > m.zone_m && m.zone_m > 0.0,
                        "zone_pitch_m must exceed zone_m"));
  RETURN_IF_ERROR(Check(m.spot_pitch_m > m.max_encounter_distance_m,
                        "spot_pitch_m must exceed max_encounter_distance_m"));
  RETURN_IF_ERROR(Check(m.min_fix_gap_steps >= 1 &&
                            m.max_fix_gap_steps >= m.min_fix_gap_steps &&
                            m.max_fix_gap_steps * script.step_s <= kDefaultMaxGapS,
                        "fix gaps must lie in [1 step, max resampling gap]"));
  RETURN_IF_ERROR(Check(m.transit_s > kDefaultMaxGapS && m.outage_s > kDefaultMaxGapS,
                        "transit_s and outage_s must exceed the resampling gap"));
  ASSIGN_OR_RETURN(const absl::Time start,
                   ParseDateAndTime(script.start_date, "00:00:00"));
  const int64_t step = script.step_s;
  const int64_t window_s = script.days * 86400;
  const int64_t last_tick_s = (window_s - 1) / step * step;

  // Zones on a square grid north-east of the campus origin; meeting spots on
  // a second grid north of the zones.
  const int zone_cols = GridCols(script.users);
  const int zone_rows = (script.users + zone_cols - 1) / zone_cols;
  std::vector<GeoPoint> zones;
  for (int k = 0; k < script.users; ++k) {
    zones.push_back(Offset(m.campus_origin, (k / zone_cols) * m.zone_pitch_m,
                           (k % zone_cols) * m.zone_pitch_m));
  }
  const std::size_t n_enc = script.encounters.size();
  const int spot_cols = GridCols(static_cast<int>(n_enc));
  const double spot_north0 = zone_rows * m.zone_pitch_m + m.spot_pitch_m;

  std::vector<std::vector<Stay>> stays(static_cast<std::size_t>(script.users));
  std::vector<ManifestEncounter> manifest;
  for (std::size_t k = 0; k < n_enc; ++k) {
    const ScriptedEncounter& e = script.encounters[k];
    const std::string what = DescribeEncounter(k, e);
    int ia = -1;
    int ib = -1;
    for (int u = 0; u < script.users; ++u) {
      if (ForgeUserId(u + 1) == e.user_a) ia = u;
      if (ForgeUserId(u + 1) == e.user_b) ib = u;
    }
    RETURN_IF_ERROR(Check(ia >= 0 && ib >= 0, absl::StrCat(what, ": unknown user")));
    RETURN_IF_ERROR(Check(ia != ib, absl::StrCat(what, ": a user cannot meet itself")));
    const int64_t offset_s = absl::ToInt64Seconds(e.t_start - start);
    RETURN_IF_ERROR(Check(e.t_start == start + absl::Seconds(offset_s) &&
                              offset_s >= 0 && offset_s % step == 0,
                          absl::StrCat(what, ": start is not on the step grid")));
    RETURN_IF_ERROR(Check(e.duration_s > 0 && e.duration_s % step == 0,
                          absl::StrCat(what, ": duration must be a positive multiple of the step")));
    RETURN_IF_ERROR(Check(offset_s + e.duration_s <= last_tick_s,
                          absl::StrCat(what, ": runs past the window")));
    RETURN_IF_ERROR(Check(e.distance_m >= 0.0 && e.distance_m <= m.max_encounter_distance_m,
                          absl::StrCat(what, ": distance ", e.distance_m,
                                       " m outside [0, ", m.max_encounter_distance_m,
                                       "] m")));

    const GeoPoint spot = Quantize(Offset(
        m.campus_origin,
        spot_north0 + static_cast<double>(k / static_cast<std::size_t>(spot_cols)) * m.spot_pitch_m,
        static_cast<double>(k % static_cast<std::size_t>(spot_cols)) * m.spot_pitch_m));
    const GeoPoint north = Quantize(OffsetNorth(spot, e.distance_m));
    stays[static_cast<std::size_t>(ia)].push_back(
        {offset_s, offset_s + e.duration_s, spot, k});
    stays[static_cast<std::size_t>(ib)].push_back(
        {offset_s, offset_s + e.duration_s, north, k});

    ManifestEncounter me;
    me.user_a = std::min(e.user_a, e.user_b);
    me.user_b = std::max(e.user_a, e.user_b);
    me.t_start = e.t_start;
    me.t_end = e.t_start + absl::Seconds(e.duration_s);
    me.duration_s = e.duration_s;
    me.tick_start = offset_s / step;
    me.tick_end = (offset_s + e.duration_s) / step;
    me.distance_m = HaversineKm(spot, north) * 1000.0;
    me.site = spot;
    manifest.push_back(std::move(me));
  }

  // Consecutive stays of a user need a silent gap the resampler will not
  // bridge.
  for (int u = 0; u < script.users; ++u) {
    auto& mine = stays[static_cast<std::size_t>(u)];
    std::sort(mine.begin(), mine.end(),
              [](const Stay& a, const Stay& b) { return a.start_s < b.start_s; });
    for (std::size_t k = 1; k < mine.size(); ++k) {
      if (mine[k].start_s - mine[k - 1].end_s <= kDefaultMaxGapS) {
        return absl::InvalidArgumentError(absl::StrCat(
            DescribeEncounter(mine[k - 1].encounter,
                              script.encounters[mine[k - 1].encounter]),
            " and ",
            DescribeEncounter(mine[k].encounter, script.encounters[mine[k].encounter]),
            " leave user ", ForgeUserId(u + 1), " only ",
            mine[k].start_s - mine[k - 1].end_s,
            " s to travel; more than ", kDefaultMaxGapS, " s is required"));
      }
    }
  }

  ForgedDataset out;
  out.script = script;
  for (int u = 0; u < script.users; ++u) {
    Rng rng(script.seed, static_cast<uint64_t>(u) + 1);
    const GeoPoint zone = zones[static_cast<std::size_t>(u)];
    std::vector<Fix> fixes;
    const auto accuracy = [&] { return rng.Int(m.min_accuracy_m, m.max_accuracy_m); };
    const auto dwell = [&](int64_t from, int64_t to) {
      int64_t t = from;
      while (t <= to) {
        fixes.push_back({t, Quantize(Offset(zone, rng.Unit() * m.zone_m,
                                            rng.Unit() * m.zone_m)),
                         accuracy()});
        int64_t gap = step * rng.Int(m.min_fix_gap_steps, m.max_fix_gap_steps);
        if (rng.Unit() < m.outage_probability) {
          gap = (m.outage_s + step - 1) / step * step;
        }
        t += gap;
      }
    };
    const auto stay = [&](const Stay& s) {
      int64_t t = s.start_s;
      while (t < s.end_s) {
        fixes.push_back({t, s.point, accuracy()});
        t += step * rng.Int(m.min_fix_gap_steps, m.max_fix_gap_steps);
      }
      fixes.push_back({s.end_s, s.point, accuracy()});
    };
    const int64_t transit = (m.transit_s + step - 1) / step * step;
    int64_t free_from = 0;
    for (const Stay& s : stays[static_cast<std::size_t>(u)]) {
      const int64_t home_to = s.start_s - transit;
      if (home_to >= free_from) dwell(free_from, home_to);
      stay(s);
      free_from = s.end_s + transit;
    }
    if (free_from <= last_tick_s) dwell(free_from, last_tick_s);

    ordered_json locations = ordered_json::array();
    for (const Fix& f : fixes) {
      locations.push_back(
          {{"timestampMs",
            absl::StrCat(absl::ToUnixMillis(start + absl::Seconds(f.t_s)))},
           {"latitudeE7", EncodeE7(f.point.lat_deg)},
           {"longitudeE7", EncodeE7(f.point.lon_deg)},
           {"accuracy", f.accuracy_m}});
    }
    ForgedUser fu;
    fu.user_id = ForgeUserId(u + 1);
    fu.sample_count = fixes.size();
    fu.zone_south_west = zone;
    fu.takeout_json = ordered_json{{"locations", std::move(locations)}}.dump(1) + "\n";
    out.users.push_back(std::move(fu));
  }

  std::sort(manifest.begin(), manifest.end(),
            [](const ManifestEncounter& a, const ManifestEncounter& b) {
              return std::tie(a.t_start, a.user_a, a.user_b) <
                     std::tie(b.t_start, b.user_a, b.user_b);
            });
  out.encounters = std::move(manifest);

  ordered_json users = ordered_json::array();
  for (const ForgedUser& u : out.users) {
    users.push_back({{"user_id", u.user_id},
                     {"file", absl::StrCat(u.user_id, ".json")},
                     {"sample_count", u.sample_count},
                     {"zone_south_west",
                      {{"lat", u.zone_south_west.lat_deg},
                       {"lon", u.zone_south_west.lon_deg}}},
                     {"zone_m", m.zone_m}});
  }
  ordered_json encounters = ordered_json::array();
  for (const ManifestEncounter& e : out.encounters) {
    encounters.push_back({{"user_a", e.user_a},
                          {"user_b", e.user_b},
                          {"t_start", FormatIsoUtc(e.t_start)},
                          {"t_end", FormatIsoUtc(e.t_end)},
                          {"duration_s", e.duration_s},
                          {"tick_start", e.tick_start},
                          {"tick_end", e.tick_end},
                          {"distance_m", e.distance_m},
                          {"site", {{"lat", e.site.lat_deg}, {"lon", e.site.lon_deg}}}});
  }
  out.manifest_json =
      ordered_json{{"schema_version", 1},
                   {"seed", script.seed},
                   {"window",
                    {{"start_date", script.start_date},
                     {"days", script.days},
                     {"step_s", script.step_s}}},
                   {"users", std::move(users)},
                   {"encounters", std::move(encounters)}}
          .dump(2) +
      "\n";
  return out;
}

absl::Status WriteDataset(const ForgedDataset& dataset, const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    return absl::InternalError(absl::StrCat("cannot create ", dir, ": ", ec.message()));
  }
  const auto write = [&](const std::string& name, const std::string& bytes) {
    const std::string path = (std::filesystem::path(dir) / name).string();
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    f << bytes;
    f.close();
    return f ? absl::OkStatus()
             : absl::InternalError(absl::StrCat("cannot write ", path));
  };
  for (const ForgedUser& u : dataset.users) {
    RETURN_IF_ERROR(write(absl::StrCat(u.user_id, ".json"), u.takeout_json));
  }
  return write("manifest.json", dataset.manifest_json);
}

absl::Status IngestDataset(const ForgedDataset& dataset, TrajectoryStore& store) {
  for (const ForgedUser& u : dataset.users) {
    RETURN_IF_ERROR(IngestTakeoutJson(store, u.user_id, u.takeout_json).status());
  }
  return absl::OkStatus();
}

ProximityConfig ConfigForScript(const EncounterScript& script,
                                double collision_distance_m,
                                int64_t collision_interval_s) {
  ProximityConfig c;
  c.start_date = script.start_date;
  c.start_time = "00:00:00";
  c.window_days = script.days;
  c.step_s = script.step_s;
  c.collision_distance_m = collision_distance_m;
  c.collision_interval_s = collision_interval_s;
  return c;
}

std::vector<ManifestEncounter> ExpectedEncounters(
    std::span<const ManifestEncounter> encounters,
    const ProximityConfig& config) {
  std::vector<ManifestEncounter> out;
  for (const ManifestEncounter& e : encounters) {
    if (e.distance_m <= config.collision_distance_m &&
        e.duration_s >= config.collision_interval_s) {
      out.push_back(e);
    }
  }
  return out;
}

}  // namespace campustrace
