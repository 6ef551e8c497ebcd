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

// Shared forged datasets for tests.

#ifndef CAMPUSTRACE_TESTS_FIXTURES_H_
#define CAMPUSTRACE_TESTS_FIXTURES_H_

#include <memory>
#include <string>
#include <vector>

#include "campustrace/fixture_forge.h"
#include "campustrace/proximity.h"
#include "campustrace/trajectory_store.h"
#include "gtest/gtest.h"

namespace campustrace::testing_fixtures {

// Default script whose every third random encounter is pushed out to
// 2..8 m, so 1 m and 10 m thresholds see different event sets.
inline EncounterScript MixedDistanceScript(uint64_t seed, int users,
                                           int random_encounters) {
  EncounterScript script = DefaultScript(seed, users, random_encounters);
  for (std::size_t k = 3; k < script.encounters.size(); k += 3) {
    script.encounters[k].distance_m = 2.0 + static_cast<double>(k % 7);
  }
  return script;
}

struct Fixture {
  ForgedDataset dataset;
  std::unique_ptr<TrajectoryStore> store = std::make_unique<TrajectoryStore>();
};

inline Fixture MakeFixture(const EncounterScript& script) {
  Fixture f;
  auto generated = Generate(script);
  EXPECT_TRUE(generated.ok()) << generated.status();
  if (!generated.ok()) return f;
  f.dataset = *std::move(generated);
  const absl::Status ingested = IngestDataset(f.dataset, *f.store);
  EXPECT_TRUE(ingested.ok()) << ingested;
  return f;
}

}  // namespace campustrace::testing_fixtures

#endif  // CAMPUSTRACE_TESTS_FIXTURES_H_
