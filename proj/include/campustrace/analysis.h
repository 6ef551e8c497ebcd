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

// End-to-end proximity analysis over a store: resample, detect, and, when an
// index case is known, trace levels and score contacts.

#ifndef CAMPUSTRACE_ANALYSIS_H_
#define CAMPUSTRACE_ANALYSIS_H_

#include <optional>
#include <span>
#include <vector>

#include "absl/status/statusor.h"
#include "campustrace/contact_models.h"
#include "campustrace/contact_tracer.h"
#include "campustrace/exporters.h"
#include "campustrace/proximity.h"
#include "campustrace/trajectory_store.h"

namespace campustrace {

struct AnalysisOptions {
  ProximityConfig config;
  DetectionOptions detection;
  int64_t max_gap_s = kDefaultMaxGapS;
  double site_cell_m = kDefaultSiteCellM;
  int max_level = kDefaultMaxLevel;
  // Defaults to DefaultScoreParams(config.collision_distance_m).
  std::optional<ScoreParams> score_params;
};

struct TraceResult {
  UserId index_user;
  std::vector<ContactLevelRecord> levels;
  ScreeningPlan plan;
  std::vector<ReportRow> report;
  // Direct score of the index case, then indirect scores of its level-1
  // contacts, ranked.
  std::vector<ContactScore> scores;
};

struct AnalysisResult {
  ProximityConfig config;
  SiteGrid sites;
  std::vector<UserId> users;
  // Exactly what DetectCollisions(config) reports: with an index case, only
  // its pairs, renumbered.
  std::vector<ContactEvent> events;
  // Every pair's events when an index case filtered `events`; empty
  // otherwise.
  std::vector<ContactEvent> graph_events;
  DetectionStats stats;
  // Direct score of every user against its own contacts, ranked. Filled
  // only without an index case.
  std::vector<ContactScore> scores;
  // Present when config.index_user is set.
  std::optional<TraceResult> trace;

  // The all-pairs contact graph that tracing runs on.
  std::span<const ContactEvent> TracingEvents() const {
    return graph_events.empty() ? std::span<const ContactEvent>(events)
                                : std::span<const ContactEvent>(graph_events);
  }
};

struct TakeoutIngestSummary {
  IngestSummary store;
  // Location entries lacking coordinates or a timestamp.
  std::size_t skipped = 0;
  // Samples removed by the accuracy policy.
  std::size_t filtered = 0;
};

// Parse, normalize, filter by accuracy and ingest one user's Takeout
// location document.
absl::StatusOr<TakeoutIngestSummary> IngestTakeoutJson(
    TrajectoryStore& store, const UserId& user_id, absl::string_view json,
    AccuracyPolicy policy = AccuracyPolicy::kDropPoor);

absl::StatusOr<AnalysisResult> RunAnalysis(const TrajectoryStore& store,
                                           const AnalysisOptions& options);

// Tracing and scoring against a finished detection. `tracks` are the
// resampled tracks the events came from.
absl::StatusOr<TraceResult> TraceFromEvents(
    const UserId& index_user, std::span<const ContactEvent> events,
    std::span<const ResampledTrack> tracks, const SiteGrid& sites,
    std::span<const UserId> users, const ScoreParams& params,
    int max_level = kDefaultMaxLevel);

// Traces against a finished analysis, resampling only what scoring needs.
absl::StatusOr<TraceResult> TraceAnalysis(const TrajectoryStore& store,
                                          const AnalysisResult& analysis,
                                          const UserId& index_user,
                                          const AnalysisOptions& options);

}  // namespace campustrace

#endif  // CAMPUSTRACE_ANALYSIS_H_
