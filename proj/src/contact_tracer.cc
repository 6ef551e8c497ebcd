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

#include "campustrace/contact_tracer.h"

#include <algorithm>
#include <map>
#include <optional>
#include <utility>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"

namespace campustrace {
namespace {

// Earliest arrival at a user using at most k hops, and the hop that achieved
// it when the k-th round improved on round k - 1.
struct Arrival {
  absl::Time time = absl::InfiniteFuture();
  bool improved = false;
  std::size_t via = 0;           // user index
  const ContactEvent* event = nullptr;
};

bool EarlierHop(const ContactEvent& a, const ContactEvent& b) {
  if (a.t_start != b.t_start) return a.t_start < b.t_start;
  return a.id < b.id;
}

}  // namespace

absl::StatusOr<std::vector<ContactLevelRecord>> TraceLevels(
    const UserId& index_user, std::span<const ContactEvent> events,
    std::span<const UserId> dataset_users, int max_level) {
  if (std::find(dataset_users.begin(), dataset_users.end(), index_user) ==
      dataset_users.end()) {
    return absl::NotFoundError(
        absl::StrCat("index user '", index_user, "' is not in the dataset"));
  }
  if (max_level < 1) {
    return absl::InvalidArgumentError(
        absl::StrCat("max_level must be at least 1, got ", max_level));
  }

  std::map<UserId, std::size_t> index_of;
  std::vector<UserId> users;
  const auto intern = [&](const UserId& u) {
    const auto [it, inserted] = index_of.emplace(u, users.size());
    if (inserted) users.push_back(u);
    return it->second;
  };
  const std::size_t index = intern(index_user);
  struct Edge {
    std::size_t a, b;
    const ContactEvent* event;
  };
  std::vector<Edge> edges;
  edges.reserve(events.size());
  for (const ContactEvent& e : events) {
    edges.push_back({intern(e.user_a), intern(e.user_b), &e});
  }
  const std::size_t n = users.size();

  // rounds[k][u]: arrival using at most k hops.
  std::vector<std::vector<Arrival>> rounds(
      static_cast<std::size_t>(max_level) + 1, std::vector<Arrival>(n));
  rounds[0][index].time = absl::InfinitePast();

  for (std::size_t k = 1; k <= static_cast<std::size_t>(max_level); ++k) {
    const auto& prev = rounds[k - 1];
    auto& cur = rounds[k];
    for (std::size_t u = 0; u < n; ++u) cur[u].time = prev[u].time;

    const auto relax = [&](std::size_t from, std::size_t to,
                           const ContactEvent& e) {
      if (to == index) return;
      if (!(e.t_start > prev[from].time)) return;
      Arrival& slot = cur[to];
      const bool better =
          e.t_start < slot.time ||
          (slot.improved && e.t_start == slot.time &&
           (EarlierHop(e, *slot.event) ||
            (e.id == slot.event->id && users[from] < users[slot.via])));
      if (!better) return;
      slot.time = e.t_start;
      slot.improved = true;
      slot.via = from;
      slot.event = &e;
    };
    for (const Edge& edge : edges) {
      relax(edge.a, edge.b, *edge.event);
      relax(edge.b, edge.a, *edge.event);
    }
  }

  std::vector<ContactLevelRecord> records;
  for (std::size_t u = 0; u < n; ++u) {
    if (u == index) continue;
    std::optional<std::size_t> level;
    for (std::size_t k = 1; k <= static_cast<std::size_t>(max_level); ++k) {
      if (rounds[k][u].time != absl::InfiniteFuture()) {
        level = k;
        break;
      }
    }
    if (!level) continue;

    // Walk predecessors back to the index case.
    std::vector<ChainLink> chain;
    std::size_t node = u;
    std::size_t k = *level;
    while (node != index) {
      while (!rounds[k][node].improved) --k;
      const Arrival& a = rounds[k][node];
      chain.push_back({users[node], a.event->t_start, a.event->id});
      node = a.via;
      --k;
    }
    std::reverse(chain.begin(), chain.end());

    const Arrival& last = rounds[*level][u];
    ContactLevelRecord r;
    r.user_id = users[u];
    r.level = static_cast<int>(*level);
    r.via_user = users[last.via];
    r.first_contact_time = last.time;
    r.event_ref = last.event->id;
    r.chain = std::move(chain);
    records.push_back(std::move(r));
  }
  return ScreeningOrder(std::move(records)).order;
}

ScreeningPlan ScreeningOrder(std::vector<ContactLevelRecord> records) {
  std::sort(records.begin(), records.end(),
            [](const ContactLevelRecord& a, const ContactLevelRecord& b) {
              if (a.level != b.level) return a.level < b.level;
              if (a.first_contact_time != b.first_contact_time) {
                return a.first_contact_time < b.first_contact_time;
              }
              return a.user_id < b.user_id;
            });
  ScreeningPlan plan;
  for (const ContactLevelRecord& r : records) {
    const auto level = static_cast<std::size_t>(r.level);
    if (plan.per_level.size() < level) plan.per_level.resize(level, 0);
    ++plan.per_level[level - 1];
  }
  plan.order = std::move(records);
  return plan;
}

}  // namespace campustrace
