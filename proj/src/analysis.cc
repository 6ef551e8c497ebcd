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

#include "campustrace/analysis.h"

#include <algorithm>
#include <set>
#include <utility>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"
#include "campustrace/status_macros.h"

namespace campustrace {
namespace {

ScoreParams ParamsFor(const AnalysisOptions& options) {
  return options.score_params.value_or(
      DefaultScoreParams(options.config.collision_distance_m));
}

}  // namespace

absl::StatusOr<TakeoutIngestSummary> IngestTakeoutJson(
    TrajectoryStore& store, const UserId& user_id, absl::string_view json,
    AccuracyPolicy policy) {
  ASSIGN_OR_RETURN(LocationParseResult parsed, ParseLocationRecords(json));
  ASSIGN_OR_RETURN(std::vector<LocationSample> samples,
                   NormalizeAll(parsed.records, user_id));
  FilterResult filtered = FilterByAccuracy(std::move(samples), policy);
  TakeoutIngestSummary out;
  out.skipped = parsed.skipped;
  out.filtered = filtered.dropped;
  ASSIGN_OR_RETURN(out.store, store.Ingest(user_id, std::move(filtered.samples)));
  return out;
}

absl::StatusOr<TraceResult> TraceFromEvents(
    const UserId& index_user, std::span<const ContactEvent> events,
    std::span<const ResampledTrack> tracks, const SiteGrid& sites,
    std::span<const UserId> users, const ScoreParams& params, int max_level) {
  TraceResult out;
  out.index_user = index_user;
  ASSIGN_OR_RETURN(out.levels,
                   TraceLevels(index_user, events, users, max_level));
  out.plan = ScreeningOrder(out.levels);
  ASSIGN_OR_RETURN(out.report, LevelReport(out.levels, events));

  ASSIGN_OR_RETURN(MobilityMatrix index_matrix,
                   BuildMobilityMatrix(index_user, events, tracks, sites, params));
  std::vector<ContactScore> scores;
  scores.push_back(DirectContactScore(index_matrix, params));
  for (const ContactLevelRecord& r : out.levels) {
    if (r.level != 1) continue;
    ASSIGN_OR_RETURN(MobilityMatrix m,
                     BuildMobilityMatrix(r.user_id, events, tracks, sites, params));
    ASSIGN_OR_RETURN(ContactScore s, IndirectContactScore(m, params, out.levels));
    scores.push_back(std::move(s));
  }
  // The index case's direct score stays first.
  std::vector<ContactScore> indirect =
      RankScores(std::vector<ContactScore>(scores.begin() + 1, scores.end()));
  scores.resize(1);
  scores.insert(scores.end(), indirect.begin(), indirect.end());
  out.scores = std::move(scores);
  return out;
}

absl::StatusOr<AnalysisResult> RunAnalysis(const TrajectoryStore& store,
                                           const AnalysisOptions& options) {
  RETURN_IF_ERROR(Validate(options.config));
  const ScoreParams params = ParamsFor(options);
  RETURN_IF_ERROR(Validate(params));

  AnalysisResult result;
  result.config = options.config;
  result.users = store.Users();
  result.sites = store.DefaultSiteGrid(options.site_cell_m);
  if (options.config.index_user &&
      !std::binary_search(result.users.begin(), result.users.end(),
                          *options.config.index_user)) {
    return absl::NotFoundError(absl::StrCat(
        "index user '", *options.config.index_user, "' is not in the dataset"));
  }

  ASSIGN_OR_RETURN(std::vector<ResampledTrack> tracks,
                   ResampleAll(store, options.config, options.max_gap_s));

  ProximityConfig all_pairs = options.config;
  all_pairs.index_user.reset();
  ASSIGN_OR_RETURN(DetectionResult detected,
                   DetectCollisions(all_pairs, tracks, result.sites,
                                    options.detection));
  result.stats = detected.stats;

  if (!options.config.index_user) {
    result.events = std::move(detected.events);
    for (const UserId& u : result.users) {
      ASSIGN_OR_RETURN(MobilityMatrix m,
                       BuildMobilityMatrix(u, result.events, tracks,
                                           result.sites, params));
      result.scores.push_back(DirectContactScore(m, params));
    }
    result.scores = RankScores(std::move(result.scores));
    return result;
  }

  const UserId& index = *options.config.index_user;
  uint64_t next_id = 0;
  for (const ContactEvent& e : detected.events) {
    if (!e.Involves(index)) continue;
    ContactEvent copy = e;
    copy.id = next_id++;
    result.events.push_back(std::move(copy));
  }
  result.graph_events = std::move(detected.events);
  ASSIGN_OR_RETURN(TraceResult trace,
                   TraceFromEvents(index, result.graph_events, tracks,
                                   result.sites, result.users, params,
                                   options.max_level));
  result.trace = std::move(trace);
  return result;
}

absl::StatusOr<TraceResult> TraceAnalysis(const TrajectoryStore& store,
                                          const AnalysisResult& analysis,
                                          const UserId& index_user,
                                          const AnalysisOptions& options) {
  const ScoreParams params = ParamsFor(options);
  RETURN_IF_ERROR(Validate(params));
  const std::span<const ContactEvent> events = analysis.TracingEvents();
  ASSIGN_OR_RETURN(std::vector<ContactLevelRecord> levels,
                   TraceLevels(index_user, events, analysis.users,
                               options.max_level));

  // Scoring needs the index case and its level-1 contacts only.
  std::set<UserId> needed = {index_user};
  for (const ContactLevelRecord& r : levels) {
    if (r.level == 1) needed.insert(r.user_id);
  }
  ASSIGN_OR_RETURN(absl::Time grid_start, GridStart(analysis.config));
  std::vector<ResampledTrack> tracks;
  for (const UserId& u : needed) {
    ASSIGN_OR_RETURN(ResampledTrack t,
                     store.Resample(u, grid_start, analysis.config.step_s,
                                    Window(analysis.config), options.max_gap_s));
    tracks.push_back(std::move(t));
  }
  return TraceFromEvents(index_user, events, tracks, analysis.sites,
                         analysis.users, params, options.max_level);
}

}  // namespace campustrace
