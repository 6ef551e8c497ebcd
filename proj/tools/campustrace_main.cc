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

// Offline command-line front end. Every service endpoint has a subcommand
// that runs the same library code without the service.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "campustrace/analysis.h"
#include "campustrace/api_service.h"
#include "campustrace/epidemic.h"
#include "campustrace/exporters.h"
#include "campustrace/fixture_forge.h"
#include "campustrace/http_server.h"
#include "campustrace/status_macros.h"
#include "campustrace/takeout.h"
#include "campustrace/trajectory_store.h"
#include "json.hpp"

namespace campustrace {
namespace {

namespace fs = std::filesystem;

absl::StatusOr<std::string> ReadFile(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) return absl::NotFoundError(absl::StrCat("cannot read ", path));
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

absl::Status WriteFile(const fs::path& path, const std::string& bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  f << bytes;
  f.close();
  return f ? absl::OkStatus()
           : absl::InternalError(absl::StrCat("cannot write ", path.string()));
}

void AddConfigFlags(CLI::App* cmd, ProximityConfig* c, std::string* index_user) {
  cmd->add_option("--start_date", c->start_date, "analysis start date, YYYY-MM-DD (UTC)")
      ->capture_default_str();
  cmd->add_option("--start_time", c->start_time, "analysis start time, HH:MM[:SS]")
      ->capture_default_str();
  cmd->add_option("--window_days", c->window_days, "analysis window in days")
      ->capture_default_str();
  cmd->add_option("--step_s", c->step_s, "tick interval in seconds")
      ->capture_default_str();
  cmd->add_option("--collision_distance_m", c->collision_distance_m,
                  "contact distance threshold in meters")
      ->capture_default_str();
  cmd->add_option("--collision_interval_s", c->collision_interval_s,
                  "minimum contact duration in seconds")
      ->capture_default_str();
  cmd->add_option("--index_user", *index_user, "confirmed case to trace from");
}

ProximityConfig WithIndex(ProximityConfig c, const std::string& index_user) {
  if (!index_user.empty()) c.index_user = index_user;
  return c;
}

// Accepts "user=path" or a bare path whose stem is the user id.
std::pair<std::string, std::string> SplitInput(const std::string& arg) {
  const auto eq = arg.find('=');
  if (eq != std::string::npos) return {arg.substr(0, eq), arg.substr(eq + 1)};
  return {fs::path(arg).stem().string(), arg};
}

absl::Status RunIngest(const std::vector<std::string>& inputs,
                       const std::string& policy_name, const std::string& out) {
  ASSIGN_OR_RETURN(AccuracyPolicy policy, ParseAccuracyPolicy(policy_name));
  TrajectoryStore store;
  if (fs::exists(fs::path(out) / "metadata.json")) {
    ASSIGN_OR_RETURN(std::unique_ptr<TrajectoryStore> existing, TrajectoryStore::Load(out));
    for (const UserId& u : existing->Users()) {
      ASSIGN_OR_RETURN(auto t, existing->Get(u));
      RETURN_IF_ERROR(store.Ingest(u, t->samples).status());
    }
  }
  nlohmann::ordered_json files = nlohmann::ordered_json::array();
  for (const std::string& arg : inputs) {
    const auto [user, path] = SplitInput(arg);
    ASSIGN_OR_RETURN(std::string text, ReadFile(path));
    absl::StatusOr<TakeoutIngestSummary> s = IngestTakeoutJson(store, user, text, policy);
    if (!s.ok()) {
      return absl::Status(s.status().code(),
                          absl::StrCat(path, ": ", s.status().message()));
    }
    files.push_back({{"file", path},
                     {"user_id", user},
                     {"received", s->store.received},
                     {"stored", s->store.stored},
                     {"duplicates", s->store.duplicates},
                     {"skipped", s->skipped},
                     {"filtered", s->filtered}});
  }
  RETURN_IF_ERROR(store.Save(out));
  std::cout << nlohmann::ordered_json{{"store", out},
                                      {"user_count", store.user_count()},
                                      {"files", files}}
                   .dump(2)
            << "\n";
  return absl::OkStatus();
}

absl::Status RunAnalyze(const std::string& store_dir, const ProximityConfig& config,
                        const std::string& pruning, int threads,
                        const std::string& out) {
  ASSIGN_OR_RETURN(std::unique_ptr<TrajectoryStore> store, TrajectoryStore::Load(store_dir));
  AnalysisOptions options;
  options.config = config;
  options.detection.threads = threads;
  if (pruning == "none") {
    options.detection.pruning = PairPruning::kNone;
  } else if (pruning != "grid") {
    return absl::InvalidArgumentError("--pruning must be grid or none");
  }
  ASSIGN_OR_RETURN(AnalysisResult result, RunAnalysis(*store, options));
  const fs::path dir(out);
  RETURN_IF_ERROR(WriteFile(dir / "events.csv", EventsToCsv(result.events)));
  if (result.trace) {
    RETURN_IF_ERROR(WriteFile(dir / "report.csv", ReportToCsv(result.trace->report)));
    RETURN_IF_ERROR(WriteFile(dir / "scores.csv", ScoresToCsv(result.trace->scores)));
  } else {
    RETURN_IF_ERROR(WriteFile(dir / "scores.csv", ScoresToCsv(result.scores)));
  }
  nlohmann::ordered_json summary = {
      {"config", ToJson(config)},
      {"users", result.users.size()},
      {"events", result.events.size()},
      {"distance_tests", result.stats.distance_tests},
      {"ticks", result.stats.ticks},
      {"contact_ticks", result.stats.contact_ticks}};
  if (result.trace) summary["per_level"] = result.trace->plan.per_level;
  std::cout << summary.dump(2) << "\n";
  return absl::OkStatus();
}

absl::Status RunTrace(const std::string& store_dir, const ProximityConfig& config,
                      const std::string& out) {
  if (!config.index_user) {
    return absl::InvalidArgumentError("--index_user is required for trace");
  }
  ASSIGN_OR_RETURN(std::unique_ptr<TrajectoryStore> store, TrajectoryStore::Load(store_dir));
  AnalysisOptions options;
  options.config = config;
  ASSIGN_OR_RETURN(AnalysisResult result, RunAnalysis(*store, options));
  const TraceResult& trace = *result.trace;
  const fs::path dir(out);
  RETURN_IF_ERROR(WriteFile(dir / "report.csv", ReportToCsv(trace.report)));
  RETURN_IF_ERROR(WriteFile(dir / "scores.csv", ScoresToCsv(trace.scores)));
  std::cout << ReportToCsv(trace.report);
  return absl::OkStatus();
}

struct SimulateFlags {
  EpidemicParams params;
  std::string model = "SEIR";
  EpidemicState initial{0.99, 0.0, 0.01, 0.0, 0.0};
  SimulationOptions sim;
  std::vector<double> mu = {0.0};
  std::string out;
};

absl::Status RunSimulate(SimulateFlags f) {
  ASSIGN_OR_RETURN(f.params.model_kind, ParseModelKind(f.model));
  RETURN_IF_ERROR(Validate(f.params));
  ASSIGN_OR_RETURN(std::vector<EpidemicSeries> runs,
                   MuSweep(f.params, f.initial, f.mu, f.sim));
  nlohmann::ordered_json summaries = nlohmann::ordered_json::array();
  for (const EpidemicSeries& s : runs) {
    if (!f.out.empty()) {
      RETURN_IF_ERROR(WriteFile(
          fs::path(f.out) / absl::StrFormat("series_mu_%.4f.csv", s.summary.mu),
          SeriesToCsv(s)));
    }
    summaries.push_back({{"mu", s.summary.mu},
                         {"peak_i", s.summary.peak_i},
                         {"peak_time", s.summary.peak_time},
                         {"final_r", s.summary.final_r}});
  }
  std::cout << nlohmann::ordered_json{{"model_kind", f.model},
                                      {"population_n", f.params.population_n},
                                      {"runs", summaries}}
                   .dump(2)
            << "\n";
  return absl::OkStatus();
}

absl::Status RunExport(const std::string& store_dir, const ProximityConfig& config,
                       const std::string& format, const std::string& timeline,
                       const std::string& user, const std::string& out) {
  std::string bytes;
  if (format == "segments") {
    if (timeline.empty()) return absl::InvalidArgumentError("--timeline is required");
    ASSIGN_OR_RETURN(std::string text, ReadFile(timeline));
    const std::string uid = user.empty() ? fs::path(timeline).stem().string() : user;
    ASSIGN_OR_RETURN(std::vector<ActivitySegment> segs, ParseActivitySegments(text, uid));
    bytes = SegmentsToCsv(segs);
  } else {
    ASSIGN_OR_RETURN(std::unique_ptr<TrajectoryStore> store,
                     TrajectoryStore::Load(store_dir));
    std::vector<Trajectory> tracks;
    for (const UserId& u : store->Users()) {
      ASSIGN_OR_RETURN(auto t, store->Get(u));
      tracks.push_back(*t);
    }
    AnalysisOptions options;
    options.config = config;
    ASSIGN_OR_RETURN(AnalysisResult result, RunAnalysis(*store, options));
    if (format == "kml") {
      bytes = TracksToKml(tracks, result.events);
    } else if (format == "geojson") {
      const std::vector<SiteCell> cells =
          store->CommonLocations(store->Users(), result.sites, 2);
      bytes = TracksToGeoJson(tracks, result.events, cells, &result.sites);
    } else if (format == "csv") {
      bytes = EventsToCsv(result.events);
    } else if (format == "report") {
      if (!result.trace) return absl::InvalidArgumentError("--index_user is required");
      bytes = ReportToCsv(result.trace->report);
    } else {
      return absl::InvalidArgumentError(
          "--format must be segments, csv, kml, geojson or report");
    }
  }
  if (out.empty() || out == "-") {
    std::cout << bytes;
    return absl::OkStatus();
  }
  return WriteFile(out, bytes);
}

absl::Status RunGenerate(uint64_t seed, int users, int random_encounters,
                         const std::string& out) {
  ASSIGN_OR_RETURN(ForgedDataset ds,
                   Generate(DefaultScript(seed, users, random_encounters)));
  RETURN_IF_ERROR(WriteDataset(ds, out));
  std::cout << "wrote " << ds.users.size() << " users and "
            << ds.encounters.size() << " scripted encounters to " << out << "\n";
  return absl::OkStatus();
}

absl::Status RunServe(const std::string& data_dir, const std::string& host, int port) {
  ApiServiceOptions options;
  options.data_dir = data_dir;
  ASSIGN_OR_RETURN(std::unique_ptr<ApiService> service, ApiService::Create(options));
  HttpServer server(*service);
  ASSIGN_OR_RETURN(int bound, server.Bind(host, port));
  std::cout << "listening on http://" << host << ":" << bound << "\n" << std::flush;
  return server.Listen();
}

int Main(int argc, char** argv) {
  CLI::App app{"Campus contact tracing from location histories"};
  app.require_subcommand(1);

  std::vector<std::string> ingest_inputs;
  std::string ingest_policy = "drop_poor";
  std::string ingest_out;
  CLI::App* ingest = app.add_subcommand("ingest", "Load Takeout location files into a store");
  ingest->add_option("inputs", ingest_inputs, "user=path.json or path.json (user = file stem)")
      ->required();
  ingest->add_option("--accuracy_policy", ingest_policy, "drop_poor, keep_all or high_only")
      ->capture_default_str();
  ingest->add_option("--out", ingest_out, "store directory (merged if it exists)")->required();

  ProximityConfig config;
  std::string index_user;
  std::string store_dir;
  std::string out_dir;
  std::string pruning = "grid";
  int threads = 0;
  CLI::App* analyze = app.add_subcommand("analyze", "Detect contact events");
  analyze->add_option("--store", store_dir, "store directory")->required();
  AddConfigFlags(analyze, &config, &index_user);
  analyze->add_option("--pruning", pruning, "grid or none")->capture_default_str();
  analyze->add_option("--threads", threads, "worker threads, 0 = all cores");
  analyze->add_option("--out", out_dir, "output directory")->required();

  CLI::App* trace = app.add_subcommand("trace", "Contact levels from an index case");
  trace->add_option("--store", store_dir, "store directory")->required();
  AddConfigFlags(trace, &config, &index_user);
  trace->add_option("--out", out_dir, "output directory")->required();

  SimulateFlags sim;
  CLI::App* simulate = app.add_subcommand("simulate", "Integrate the SIR/SEIR model");
  simulate->add_option("--model_kind", sim.model, "SIR or SEIR")->capture_default_str();
  simulate->add_option("--beta", sim.params.beta, "transmission rate, 1/day")
      ->capture_default_str();
  simulate->add_option("--alpha", sim.params.alpha, "progression rate, 1/day")
      ->capture_default_str();
  simulate->add_option("--gamma", sim.params.gamma, "recovery rate, 1/day")
      ->capture_default_str();
  simulate->add_option("--population_n", sim.params.population_n, "population size")
      ->capture_default_str();
  simulate->add_option("--s0", sim.initial.s)->capture_default_str();
  simulate->add_option("--e0", sim.initial.e)->capture_default_str();
  simulate->add_option("--i0", sim.initial.i)->capture_default_str();
  simulate->add_option("--r0", sim.initial.r)->capture_default_str();
  simulate->add_option("--t_end_days", sim.sim.t_end_days)->capture_default_str();
  simulate->add_option("--dt_days", sim.sim.dt_days)->capture_default_str();
  simulate->add_option("--output_stride", sim.sim.output_stride)->capture_default_str();
  simulate->add_option("--mu", sim.mu, "control values in [0, 1]")->capture_default_str();
  simulate->add_option("--out", sim.out, "directory for per-mu series CSV");

  std::string format = "geojson";
  std::string timeline;
  std::string segment_user;
  std::string out_file;
  CLI::App* exp = app.add_subcommand("export", "Write CSV, KML or GeoJSON");
  exp->add_option("--format", format, "segments, csv, kml, geojson or report")
      ->capture_default_str();
  exp->add_option("--store", store_dir, "store directory");
  exp->add_option("--timeline", timeline, "Takeout timeline file (segments format)");
  exp->add_option("--user", segment_user, "user id for --timeline");
  AddConfigFlags(exp, &config, &index_user);
  exp->add_option("--out", out_file, "output file, - for stdout");

  uint64_t seed = 1;
  int users = 50;
  int random_encounters = 40;
  CLI::App* generate = app.add_subcommand("generate", "Write a synthetic dataset");
  generate->add_option("--seed", seed)->capture_default_str();
  generate->add_option("--users", users)->capture_default_str();
  generate->add_option("--random_encounters", random_encounters)->capture_default_str();
  generate->add_option("--out", out_dir, "output directory")->required();

  std::string data_dir;
  std::string host = "127.0.0.1";
  int port = 8080;
  CLI::App* serve = app.add_subcommand("serve", "Run the HTTP/JSON service");
  serve->add_option("--data_dir", data_dir, "persistence directory")->required();
  serve->add_option("--host", host)->capture_default_str();
  serve->add_option("--port", port)->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  absl::Status status;
  const ProximityConfig cfg = WithIndex(config, index_user);
  if (*ingest) {
    status = RunIngest(ingest_inputs, ingest_policy, ingest_out);
  } else if (*analyze) {
    status = RunAnalyze(store_dir, cfg, pruning, threads, out_dir);
  } else if (*trace) {
    status = RunTrace(store_dir, cfg, out_dir);
  } else if (*simulate) {
    status = RunSimulate(sim);
  } else if (*exp) {
    if (format != "segments" && store_dir.empty()) {
      status = absl::InvalidArgumentError("--store is required");
    } else {
      status = RunExport(store_dir, cfg, format, timeline, segment_user, out_file);
    }
  } else if (*generate) {
    status = RunGenerate(seed, users, random_encounters, out_dir);
  } else if (*serve) {
    status = RunServe(data_dir, host, port);
  }
  if (!status.ok()) {
    std::cerr << "error: " << status.message() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace
}  // namespace campustrace

int main(int argc, char** argv) { return campustrace::Main(argc, argv); }
