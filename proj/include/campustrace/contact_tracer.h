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

// Level-1/2/3 contact classification over time-respecting contact chains.
//
// A chain index -> u1 -> ... -> uk is a sequence of contact events with
// strictly increasing start times, the first involving the index case. A
// user's level is the fewest hops over all such chains (capped at
// max_level). Simultaneous events never chain.

#ifndef CAMPUSTRACE_CONTACT_TRACER_H_
#define CAMPUSTRACE_CONTACT_TRACER_H_

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "absl/status/statusor.h"
#include "absl/time/time.h"
#include "campustrace/proximity.h"

namespace campustrace {

inline constexpr int kDefaultMaxLevel = 3;

struct ChainLink {
  UserId user_id;
  absl::Time contact_time;
  uint64_t event_id = 0;

  friend bool operator==(const ChainLink&, const ChainLink&) = default;
};

struct ContactLevelRecord {
  UserId user_id;
  int level = 1;
  // Predecessor on the witnessing chain; the index case for level 1.
  UserId via_user;
  // Earliest arrival over all chains of `level` hops.
  absl::Time first_contact_time;
  // ContactEvent::id of the final hop.
  uint64_t event_ref = 0;
  // Witnessing chain from the first hop after the index case to this user;
  // contact times strictly increase along it and its size equals `level`.
  std::vector<ChainLink> chain;

  friend bool operator==(const ContactLevelRecord&,
                         const ContactLevelRecord&) = default;
};

// `events` may be in any order. `dataset_users` lists every user of the
// dataset; an index case outside it is NotFound. The index case itself is
// never reported. Output is in screening order.
absl::StatusOr<std::vector<ContactLevelRecord>> TraceLevels(
    const UserId& index_user, std::span<const ContactEvent> events,
    std::span<const UserId> dataset_users, int max_level = kDefaultMaxLevel);

struct ScreeningPlan {
  // Level ascending, then first contact time, then user id.
  std::vector<ContactLevelRecord> order;
  // per_level[k - 1] = number of level-k users.
  std::vector<std::size_t> per_level;
};

ScreeningPlan ScreeningOrder(std::vector<ContactLevelRecord> records);

}  // namespace campustrace

#endif  // CAMPUSTRACE_CONTACT_TRACER_H_
