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

#include "campustrace/api_service.h"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <utility>

#include "absl/strings/numbers.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "absl/strings/str_split.h"
#include "absl/time/clock.h"
#include "campustrace/exporters.h"
#include "campustrace/status_macros.h"
#include "campustrace/time_util.h"

namespace campustrace {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

absl::string_view StatusName(int code) {
  switch (code) {
    case 400: return "INVALID_ARGUMENT";
    case 404: return "NOT_FOUND";
    case 405: return "METHOD_NOT_ALLOWED";
    case 409: return "CONFLICT";
    case 413: return "PAYLOAD_TOO_LARGE";
    case 422: return "UNPROCESSABLE_ENTITY";
    default: return "INTERNAL";
  }
}

ApiResponse Envelope(int status, absl::string_view kind, json data) {
  json doc = {{"schema_version", kApiSchemaVersion},
              {"kind", std::string(kind)},
              {"data", std::move(data)}};
  ApiResponse r;
  r.status = status;
  r.body = doc.dump();
  return r;
}

ApiResponse Error(int status, absl::string_view message) {
  json doc = {{"schema_version", kApiSchemaVersion},
              {"error",
               {{"code", status},
                {"status", std::string(StatusName(status))},
                {"message", std::string(message)}}}};
  ApiResponse r;
  r.status = status;
  r.body = doc.dump();
  return r;
}

// NotFound -> 404, FailedPrecondition -> 409, `invalid_code` for
// InvalidArgument, 500 otherwise.
ApiResponse FromStatus(const absl::Status& s, int invalid_code = 400) {
  switch (s.code()) {
    case absl::StatusCode::kNotFound: return Error(404, s.message());
    case absl::StatusCode::kFailedPrecondition: return Error(409, s.message());
    case absl::StatusCode::kInvalidArgument: return Error(invalid_code, s.message());
    default: return Error(500, s.message());
  }
}

absl::StatusOr<json> ParseBody(absl::string_view body) {
  try {
    return json::parse(body.begin(), body.end());
  } catch (const json::parse_error& e) {
    return absl::InvalidArgumentError(
        absl::StrCat("malformed JSON at byte ", e.byte));
  }
}

absl::Status CheckObject(const json& j, std::initializer_list<absl::string_view> allowed,
                         absl::string_view what) {
  if (!j.is_object()) {
    return absl::InvalidArgumentError(absl::StrCat(what, " must be a JSON object"));
  }
  for (const auto& item : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end()) {
      return absl::InvalidArgumentError(
          absl::StrCat("unknown field '", item.key(), "' in ", what));
    }
  }
  return absl::OkStatus();
}

absl::Status TypeError(absl::string_view key, absl::string_view type) {
  return absl::InvalidArgumentError(
      absl::StrCat("field '", key, "' must be ", type));
}

absl::Status ReadInt(const json& j, const char* key, int64_t* out) {
  if (!j.contains(key)) return absl::OkStatus();
  if (!j[key].is_number_integer()) return TypeError(key, "an integer");
  *out = j[key].get<int64_t>();
  return absl::OkStatus();
}

absl::Status ReadDouble(const json& j, const char* key, double* out) {
  if (!j.contains(key)) return absl::OkStatus();
  if (!j[key].is_number()) return TypeError(key, "a number");
  *out = j[key].get<double>();
  return absl::OkStatus();
}

absl::Status ReadString(const json& j, const char* key, std::string* out) {
  if (!j.contains(key)) return absl::OkStatus();
  if (!j[key].is_string()) return TypeError(key, "a string");
  *out = j[key].get<std::string>();
  return absl::OkStatus();
}

std::vector<std::string> PathParts(absl::string_view path) {
  std::vector<std::string> parts =
      absl::StrSplit(path, '/', absl::SkipEmpty());
  return parts;
}

std::string FormatId(absl::string_view prefix, uint64_t n) {
  return absl::StrFormat("%s-%06d", prefix, n);
}

uint64_t IdNumber(absl::string_view id) {
  const auto dash = id.find('-');
  uint64_t n = 0;
  if (dash == absl::string_view::npos ||
      !absl::SimpleAtoi(id.substr(dash + 1), &n)) {
    return 0;
  }
  return n;
}

absl::string_view RunStatusName(RunStatus s) {
  switch (s) {
    case RunStatus::kPending: return "pending";
    case RunStatus::kRunning: return "running";
    case RunStatus::kDone: return "done";
    case RunStatus::kFailed: return "failed";
  }
  return "failed";
}

absl::StatusOr<RunStatus> ParseRunStatus(absl::string_view s) {
  for (RunStatus r : {RunStatus::kPending, RunStatus::kRunning, RunStatus::kDone,
                      RunStatus::kFailed}) {
    if (RunStatusName(r) == s) return r;
  }
  return absl::InvalidArgumentError(absl::StrCat("unknown run status '", s, "'"));
}

json SpanJson(const TimeSpan& span) {
  if (span.first == absl::InfinitePast()) return nullptr;
  return {{"first", FormatIsoUtc(span.first)}, {"last", FormatIsoUtc(span.last)}};
}

json StatsJson(const DetectionStats& s) {
  return {{"distance_tests", s.distance_tests},
          {"ticks", s.ticks},
          {"contact_ticks", s.contact_ticks}};
}

json ScoreJson(const ContactScore& s) {
  return {{"subject", s.subject},
          {"kind", std::string(ScoreKindName(s.kind))},
          {"value", s.value},
          {"numerator_sum", s.numerator_sum},
          {"area_m2", s.area_m2},
          {"mean_distance_m", s.mean_distance_m}};
}

absl::StatusOr<ContactScore> ScoreFromJson(const json& j) {
  ContactScore s;
  std::string kind;
  RETURN_IF_ERROR(ReadString(j, "subject", &s.subject));
  RETURN_IF_ERROR(ReadString(j, "kind", &kind));
  s.kind = kind == "indirect" ? ScoreKind::kIndirect : ScoreKind::kDirect;
  RETURN_IF_ERROR(ReadDouble(j, "value", &s.value));
  RETURN_IF_ERROR(ReadDouble(j, "numerator_sum", &s.numerator_sum));
  RETURN_IF_ERROR(ReadDouble(j, "area_m2", &s.area_m2));
  RETURN_IF_ERROR(ReadDouble(j, "mean_distance_m", &s.mean_distance_m));
  return s;
}

json LevelJson(const ContactLevelRecord& r) {
  json chain = json::array();
  for (const ChainLink& l : r.chain) {
    chain.push_back({{"user_id", l.user_id},
                     {"contact_time", FormatIsoUtc(l.contact_time)},
                     {"event_id", l.event_id}});
  }
  return {{"user_id", r.user_id},
          {"level", r.level},
          {"via_user", r.via_user},
          {"first_contact_time", FormatIsoUtc(r.first_contact_time)},
          {"event_ref", r.event_ref},
          {"chain", std::move(chain)}};
}

json ReportRowJson(const ReportRow& r) {
  return {{"user_id", r.user_id},
          {"date", r.date},
          {"time", r.time},
          {"latitude", r.latitude},
          {"longitude", r.longitude},
          {"visited_location", r.visited_location},
          {"contact_level", r.contact_level}};
}

absl::StatusOr<std::string> ReadFile(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) return absl::NotFoundError(absl::StrCat("cannot read ", path.string()));
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

absl::Status WriteFileAtomic(const fs::path& path, const std::string& bytes) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    f << bytes;
    if (!f) return absl::InternalError(absl::StrCat("cannot write ", tmp.string()));
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) return absl::InternalError(absl::StrCat("cannot rename ", tmp.string()));
  return absl::OkStatus();
}

absl::StatusOr<std::size_t> QuerySize(const ApiRequest& request,
                                      const std::string& key, std::size_t dflt) {
  const auto it = request.query.find(key);
  if (it == request.query.end()) return dflt;
  std::size_t v = 0;
  if (!absl::SimpleAtoi(it->second, &v)) {
    return absl::InvalidArgumentError(
        absl::StrCat("query parameter '", key, "' must be a non-negative integer"));
  }
  return v;
}

}  // namespace

json ToJson(const ProximityConfig& c) {
  json j = {{"start_date", c.start_date},
            {"start_time", c.start_time},
            {"window_days", c.window_days},
            {"step_s", c.step_s},
            {"collision_distance_m", c.collision_distance_m},
            {"collision_interval_s", c.collision_interval_s}};
  j["index_user"] = c.index_user ? json(*c.index_user) : json(nullptr);
  return j;
}

absl::StatusOr<ProximityConfig> ProximityConfigFromJson(const json& j) {
  RETURN_IF_ERROR(CheckObject(j,
                              {"start_date", "start_time", "window_days", "step_s",
                               "collision_distance_m", "collision_interval_s",
                               "index_user"},
                              "analysis config"));
  ProximityConfig c;
  RETURN_IF_ERROR(ReadString(j, "start_date", &c.start_date));
  RETURN_IF_ERROR(ReadString(j, "start_time", &c.start_time));
  RETURN_IF_ERROR(ReadInt(j, "window_days", &c.window_days));
  RETURN_IF_ERROR(ReadInt(j, "step_s", &c.step_s));
  RETURN_IF_ERROR(ReadDouble(j, "collision_distance_m", &c.collision_distance_m));
  RETURN_IF_ERROR(ReadInt(j, "collision_interval_s", &c.collision_interval_s));
  if (j.contains("index_user") && !j["index_user"].is_null()) {
    if (!j["index_user"].is_string()) return TypeError("index_user", "a string");
    c.index_user = j["index_user"].get<std::string>();
  }
  return c;
}

json ToJson(const ContactEvent& e) {
  return {{"id", e.id},
          {"user_a", e.user_a},
          {"user_b", e.user_b},
          {"t_start", FormatIsoUtc(e.t_start)},
          {"t_end", FormatIsoUtc(e.t_end)},
          {"duration_s", e.duration_s},
          {"tick_start", e.tick_start},
          {"tick_end", e.tick_end},
          {"min_distance_m", e.min_distance_m},
          {"mean_distance_m", e.mean_distance_m},
          {"midpoint", {{"lat", e.midpoint.lat_deg}, {"lon", e.midpoint.lon_deg}}},
          {"site_cell",
           {{"row", e.site_cell.row},
            {"col", e.site_cell.col},
            {"label", e.site_cell.Label()}}},
          {"mean_accuracy_m", e.mean_accuracy_m}};
}

absl::StatusOr<ContactEvent> ContactEventFromJson(const json& j) {
  if (!j.is_object()) return absl::InvalidArgumentError("event must be an object");
  ContactEvent e;
  int64_t id = 0;
  std::string t_start;
  std::string t_end;
  RETURN_IF_ERROR(ReadInt(j, "id", &id));
  e.id = static_cast<uint64_t>(id);
  RETURN_IF_ERROR(ReadString(j, "user_a", &e.user_a));
  RETURN_IF_ERROR(ReadString(j, "user_b", &e.user_b));
  RETURN_IF_ERROR(ReadString(j, "t_start", &t_start));
  RETURN_IF_ERROR(ReadString(j, "t_end", &t_end));
  ASSIGN_OR_RETURN(e.t_start, ParseIsoTime(t_start));
  ASSIGN_OR_RETURN(e.t_end, ParseIsoTime(t_end));
  RETURN_IF_ERROR(ReadInt(j, "duration_s", &e.duration_s));
  RETURN_IF_ERROR(ReadInt(j, "tick_start", &e.tick_start));
  RETURN_IF_ERROR(ReadInt(j, "tick_end", &e.tick_end));
  RETURN_IF_ERROR(ReadDouble(j, "min_distance_m", &e.min_distance_m));
  RETURN_IF_ERROR(ReadDouble(j, "mean_distance_m", &e.mean_distance_m));
  RETURN_IF_ERROR(ReadDouble(j, "mean_accuracy_m", &e.mean_accuracy_m));
  if (j.contains("midpoint")) {
    RETURN_IF_ERROR(ReadDouble(j["midpoint"], "lat", &e.midpoint.lat_deg));
    RETURN_IF_ERROR(ReadDouble(j["midpoint"], "lon", &e.midpoint.lon_deg));
  }
  if (j.contains("site_cell")) {
    RETURN_IF_ERROR(ReadInt(j["site_cell"], "row", &e.site_cell.row));
    RETURN_IF_ERROR(ReadInt(j["site_cell"], "col", &e.site_cell.col));
  }
  return e;
}

WorkerPool::WorkerPool(int workers) {
  for (int k = 0; k < std::max(1, workers); ++k) {
    threads_.emplace_back([this] { Loop(); });
  }
}

WorkerPool::~WorkerPool() {
  {
    std::lock_guard<std::mutex> lock(mu_);
    stopping_ = true;
  }
  wake_.notify_all();
  for (std::thread& t : threads_) t.join();
}

void WorkerPool::Submit(std::function<void()> task) {
  {
    std::lock_guard<std::mutex> lock(mu_);
    queue_.push_back(std::move(task));
  }
  wake_.notify_one();
}

void WorkerPool::WaitIdle() {
  std::unique_lock<std::mutex> lock(mu_);
  idle_.wait(lock, [this] { return queue_.empty() && running_ == 0; });
}

void WorkerPool::Loop() {
  for (;;) {
    std::function<void()> task;
    {
      std::unique_lock<std::mutex> lock(mu_);
      wake_.wait(lock, [this] { return stopping_ || !queue_.empty(); });
      // Drain the queue before stopping.
      if (queue_.empty()) return;
      task = std::move(queue_.front());
      queue_.pop_front();
      ++running_;
    }
    task();
    {
      std::lock_guard<std::mutex> lock(mu_);
      --running_;
    }
    idle_.notify_all();
  }
}

ApiService::ApiService(ApiServiceOptions options)
    : options_(std::move(options)),
      pool_(std::make_unique<WorkerPool>(options_.workers)) {}

ApiService::~ApiService() { pool_.reset(); }

absl::StatusOr<std::unique_ptr<ApiService>> ApiService::Create(
    ApiServiceOptions options) {
  if (options.data_dir.empty()) {
    return absl::InvalidArgumentError("data_dir is required");
  }
  std::error_code ec;
  fs::create_directories(fs::path(options.data_dir) / "datasets", ec);
  fs::create_directories(fs::path(options.data_dir) / "analyses", ec);
  if (ec) {
    return absl::InternalError(
        absl::StrCat("cannot create ", options.data_dir, ": ", ec.message()));
  }
  std::unique_ptr<ApiService> service(new ApiService(std::move(options)));
  RETURN_IF_ERROR(service->LoadPersisted());
  return service;
}

absl::Status ApiService::LoadPersisted() {
  const fs::path root(options_.data_dir);
  std::vector<fs::path> dataset_dirs;
  for (const auto& entry : fs::directory_iterator(root / "datasets")) {
    if (entry.is_directory()) dataset_dirs.push_back(entry.path());
  }
  std::sort(dataset_dirs.begin(), dataset_dirs.end());
  for (const fs::path& dir : dataset_dirs) {
    ASSIGN_OR_RETURN(std::string summary_text, ReadFile(dir / "summary.json"));
    ASSIGN_OR_RETURN(json summary, ParseBody(summary_text));
    ASSIGN_OR_RETURN(std::unique_ptr<TrajectoryStore> store,
                     TrajectoryStore::Load((dir / "store").string()));
    auto ds = std::make_shared<Dataset>();
    ds->id = dir.filename().string();
    ds->store = std::move(store);
    ds->summary = std::move(summary);
    next_dataset_ = std::max(next_dataset_, IdNumber(ds->id) + 1);
    datasets_[ds->id] = std::move(ds);
  }

  std::vector<fs::path> run_files;
  for (const auto& entry : fs::directory_iterator(root / "analyses")) {
    if (entry.path().extension() == ".json") run_files.push_back(entry.path());
  }
  std::sort(run_files.begin(), run_files.end());
  for (const fs::path& file : run_files) {
    ASSIGN_OR_RETURN(std::string text, ReadFile(file));
    ASSIGN_OR_RETURN(json j, ParseBody(text));
    auto run = std::make_shared<Run>();
    run->id = j.at("run_id").get<std::string>();
    run->dataset_id = j.at("dataset_id").get<std::string>();
    ASSIGN_OR_RETURN(run->config, ProximityConfigFromJson(j.at("config")));
    ASSIGN_OR_RETURN(run->status,
                     ParseRunStatus(j.at("status").get<std::string>()));
    ASSIGN_OR_RETURN(run->created_at,
                     ParseIsoTime(j.at("created_at").get<std::string>()));
    run->error = j.value("error", "");
    next_run_ = std::max(next_run_, IdNumber(run->id) + 1);
    const auto ds = datasets_.find(run->dataset_id);
    if (run->status != RunStatus::kDone || ds == datasets_.end()) {
      // Interrupted runs are not resumed.
      if (run->status != RunStatus::kDone) {
        run->status = RunStatus::kFailed;
        if (run->error.empty()) run->error = "interrupted by a service restart";
      }
      runs_[run->id] = std::move(run);
      continue;
    }
    auto result = std::make_shared<AnalysisResult>();
    result->config = run->config;
    result->users = ds->second->store->Users();
    result->sites = ds->second->store->DefaultSiteGrid();
    for (const json& e : j.at("events")) {
      ASSIGN_OR_RETURN(ContactEvent ev, ContactEventFromJson(e));
      result->events.push_back(std::move(ev));
    }
    for (const json& e : j.at("graph_events")) {
      ASSIGN_OR_RETURN(ContactEvent ev, ContactEventFromJson(e));
      result->graph_events.push_back(std::move(ev));
    }
    for (const json& s : j.at("scores")) {
      ASSIGN_OR_RETURN(ContactScore sc, ScoreFromJson(s));
      result->scores.push_back(std::move(sc));
    }
    const json& stats = j.at("stats");
    result->stats.distance_tests = stats.at("distance_tests").get<uint64_t>();
    result->stats.ticks = stats.at("ticks").get<uint64_t>();
    result->stats.contact_ticks = stats.at("contact_ticks").get<uint64_t>();
    run->result = std::move(result);
    runs_[run->id] = std::move(run);
  }
  return absl::OkStatus();
}

void ApiService::WaitIdle() { pool_->WaitIdle(); }

ApiResponse ApiService::Handle(const ApiRequest& request) {
  if (request.body.size() > options_.max_upload_bytes) {
    return Error(413, absl::StrCat("request body exceeds ",
                                   options_.max_upload_bytes, " bytes"));
  }
  std::size_t part_bytes = 0;
  for (const UploadPart& p : request.parts) part_bytes += p.content.size();
  if (part_bytes > options_.max_upload_bytes) {
    return Error(413, absl::StrCat("upload exceeds ", options_.max_upload_bytes,
                                   " bytes"));
  }

  const std::vector<std::string> p = PathParts(request.path);
  const bool get = request.method == "GET";
  const bool post = request.method == "POST";
  const auto wrong_method = [&] {
    return Error(405, absl::StrCat(request.method, " not allowed on ", request.path));
  };
  if (p.size() == 1 && p[0] == "datasets") {
    return post ? PostDataset(request) : wrong_method();
  }
  if (p.size() == 2 && p[0] == "datasets") {
    return get ? GetDataset(p[1]) : wrong_method();
  }
  if (p.size() == 3 && p[0] == "datasets" && p[2] == "geojson") {
    return get ? GetGeoJson(p[1], request) : wrong_method();
  }
  if (p.size() == 3 && p[0] == "datasets" && p[2] == "analyses") {
    return post ? PostAnalysis(p[1], request) : wrong_method();
  }
  if (p.size() == 2 && p[0] == "analyses") {
    return get ? GetRun(p[1]) : wrong_method();
  }
  if (p.size() == 3 && p[0] == "analyses") {
    if (!get) return wrong_method();
    if (p[2] == "events") return GetEvents(p[1], request);
    if (p[2] == "levels" || p[2] == "scores" || p[2] == "report") {
      return GetTraceView(p[1], request, p[2]);
    }
  }
  if (p.size() == 1 && p[0] == "simulations") {
    return post ? PostSimulation(request) : wrong_method();
  }
  return Error(404, absl::StrCat("no route for ", request.path));
}

absl::StatusOr<std::shared_ptr<const ApiService::Dataset>> ApiService::FindDataset(
    const std::string& id) const {
  std::lock_guard<std::mutex> lock(mu_);
  const auto it = datasets_.find(id);
  if (it == datasets_.end()) {
    return absl::NotFoundError(absl::StrCat("unknown dataset '", id, "'"));
  }
  return it->second;
}

ApiResponse ApiService::PostDataset(const ApiRequest& request) {
  // (user id, file label, document)
  std::vector<std::tuple<std::string, std::string, std::string>> files;
  if (!request.parts.empty()) {
    for (const UploadPart& part : request.parts) {
      std::string user = part.name;
      if (user.empty() || user == "file" || user == "files") {
        user = fs::path(part.filename).stem().string();
      }
      if (user.empty()) return Error(400, "upload part without a user id");
      files.emplace_back(user, part.filename.empty() ? user : part.filename,
                         part.content);
    }
  } else {
    auto body = ParseBody(request.body);
    if (!body.ok()) return Error(400, body.status().message());
    if (auto s = CheckObject(*body, {"files"}, "upload"); !s.ok()) {
      return Error(400, s.message());
    }
    if (!body->contains("files") || !(*body)["files"].is_array()) {
      return Error(400, "upload requires a 'files' array");
    }
    for (const json& f : (*body)["files"]) {
      if (auto s = CheckObject(f, {"user_id", "takeout"}, "upload file"); !s.ok()) {
        return Error(400, s.message());
      }
      if (!f.contains("user_id") || !f["user_id"].is_string() ||
          !f.contains("takeout")) {
        return Error(400, "each file needs 'user_id' and 'takeout'");
      }
      const std::string user = f["user_id"].get<std::string>();
      files.emplace_back(user, user,
                         f["takeout"].is_string() ? f["takeout"].get<std::string>()
                                                  : f["takeout"].dump());
    }
  }
  if (files.empty()) return Error(400, "upload contains no files");

  auto store = std::make_shared<TrajectoryStore>();
  std::string base_id;
  if (const auto it = request.query.find("base"); it != request.query.end()) {
    auto base = FindDataset(it->second);
    if (!base.ok()) return FromStatus(base.status());
    base_id = it->second;
    for (const UserId& u : (*base)->store->Users()) {
      auto t = (*base)->store->Get(u);
      if (!t.ok()) return FromStatus(t.status());
      if (auto s = store->Ingest(u, (*t)->samples); !s.ok()) return FromStatus(s.status());
    }
  }

  json file_stats = json::array();
  for (const auto& [user, label, content] : files) {
    auto summary = IngestTakeoutJson(*store, user, content);
    if (!summary.ok()) {
      return Error(400, absl::StrCat("file '", label, "' (user ", user,
                                     "): ", summary.status().message()));
    }
    file_stats.push_back({{"file", label},
                          {"user_id", user},
                          {"received", summary->store.received},
                          {"stored", summary->store.stored},
                          {"duplicates", summary->store.duplicates},
                          {"skipped", summary->skipped},
                          {"filtered", summary->filtered}});
  }

  json users = json::array();
  for (const UserId& u : store->Users()) {
    const auto t = store->Get(u);
    users.push_back({{"user_id", u},
                     {"sample_count", (*t)->samples.size()},
                     {"span", SpanJson((*t)->span())}});
  }

  auto ds = std::make_shared<Dataset>();
  {
    std::lock_guard<std::mutex> lock(mu_);
    ds->id = FormatId("ds", next_dataset_++);
  }
  ds->summary = {{"dataset_id", ds->id},
                 {"base", base_id.empty() ? json(nullptr) : json(base_id)},
                 {"user_count", store->user_count()},
                 {"span", SpanJson(store->DatasetSpan())},
                 {"users", std::move(users)},
                 {"files", std::move(file_stats)}};
  const fs::path dir = fs::path(options_.data_dir) / "datasets" / ds->id;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (auto s = store->Save((dir / "store").string()); !s.ok()) return FromStatus(s);
  if (auto s = WriteFileAtomic(dir / "summary.json", ds->summary.dump(2)); !s.ok()) {
    return FromStatus(s);
  }
  ds->store = std::move(store);
  json summary = ds->summary;
  {
    std::lock_guard<std::mutex> lock(mu_);
    datasets_[ds->id] = std::move(ds);
  }
  return Envelope(201, "dataset", std::move(summary));
}

ApiResponse ApiService::GetDataset(const std::string& id) {
  auto ds = FindDataset(id);
  if (!ds.ok()) return FromStatus(ds.status());
  return Envelope(200, "dataset", (*ds)->summary);
}

ApiResponse ApiService::GetGeoJson(const std::string& id, const ApiRequest& request) {
  auto ds = FindDataset(id);
  if (!ds.ok()) return FromStatus(ds.status());
  const TrajectoryStore& store = *(*ds)->store;
  std::vector<Trajectory> tracks;
  for (const UserId& u : store.Users()) tracks.push_back(*store.Get(u).value());
  std::vector<ContactEvent> events;
  if (const auto it = request.query.find("analysis"); it != request.query.end()) {
    auto run = FinishedRun(it->second);
    if (!run.ok()) return FromStatus(run.status());
    if ((*run)->dataset_id != id) {
      return Error(404, absl::StrCat("analysis '", it->second,
                                     "' does not belong to dataset '", id, "'"));
    }
    events = (*run)->result->events;
  }
  auto min_users = QuerySize(request, "min_users", 2);
  if (!min_users.ok()) return FromStatus(min_users.status());
  auto limit = QuerySize(request, "cell_limit", 100);
  if (!limit.ok()) return FromStatus(limit.status());
  const SiteGrid sites = store.DefaultSiteGrid();
  std::vector<SiteCell> cells =
      store.CommonLocations(store.Users(), sites, std::max<std::size_t>(1, *min_users));
  if (cells.size() > *limit) cells.resize(*limit);
  return Envelope(200, "geojson",
                  json::parse(TracksToGeoJson(tracks, events, cells, &sites)));
}

ApiResponse ApiService::PostAnalysis(const std::string& dataset_id,
                                     const ApiRequest& request) {
  auto ds = FindDataset(dataset_id);
  if (!ds.ok()) return FromStatus(ds.status());
  auto body = ParseBody(request.body.empty() ? "{}" : request.body);
  if (!body.ok()) return Error(400, body.status().message());
  auto config = ProximityConfigFromJson(*body);
  if (!config.ok()) return Error(400, config.status().message());
  if (auto s = Validate(*config); !s.ok()) return Error(422, s.message());
  if (config->index_user) {
    const std::vector<UserId> users = (*ds)->store->Users();
    if (!std::binary_search(users.begin(), users.end(), *config->index_user)) {
      return Error(404, absl::StrCat("unknown user '", *config->index_user, "'"));
    }
  }

  auto run = std::make_shared<Run>();
  run->dataset_id = dataset_id;
  run->config = *config;
  run->created_at = absl::Now();
  {
    std::lock_guard<std::mutex> lock(mu_);
    run->id = FormatId("an", next_run_++);
    runs_[run->id] = run;
  }
  const std::string id = run->id;
  if (auto s = PersistRun(*run); !s.ok()) return FromStatus(s);
  if ((*ds)->store->user_count() < options_.sync_user_limit) {
    Execute(id);
    std::lock_guard<std::mutex> lock(mu_);
    return Envelope(201, "analysis", RunJson(*runs_.at(id)));
  }
  pool_->Submit([this, id] { Execute(id); });
  std::lock_guard<std::mutex> lock(mu_);
  return Envelope(202, "analysis", RunJson(*runs_.at(id)));
}

void ApiService::Execute(const std::string& run_id) {
  std::shared_ptr<const Run> pending;
  std::shared_ptr<const Dataset> ds;
  {
    std::lock_guard<std::mutex> lock(mu_);
    pending = runs_.at(run_id);
    ds = datasets_.at(pending->dataset_id);
    auto running = std::make_shared<Run>(*pending);
    running->status = RunStatus::kRunning;
    runs_[run_id] = running;
  }
  AnalysisOptions options;
  options.config = pending->config;
  auto result = RunAnalysis(*ds->store, options);
  auto finished = std::make_shared<Run>(*pending);
  if (result.ok()) {
    finished->status = RunStatus::kDone;
    finished->result = std::make_shared<const AnalysisResult>(*std::move(result));
  } else {
    finished->status = RunStatus::kFailed;
    finished->error = std::string(result.status().message());
  }
  if (auto s = PersistRun(*finished); !s.ok() && finished->status == RunStatus::kDone) {
    finished->status = RunStatus::kFailed;
    finished->error = std::string(s.message());
    finished->result.reset();
  }
  std::lock_guard<std::mutex> lock(mu_);
  runs_[run_id] = std::move(finished);
}

json ApiService::RunJson(const Run& run) const {
  json j = {{"run_id", run.id},
            {"dataset_id", run.dataset_id},
            {"status", std::string(RunStatusName(run.status))},
            {"created_at", FormatIsoUtc(run.created_at)},
            {"config", ToJson(run.config)}};
  if (!run.error.empty()) j["error"] = run.error;
  if (run.result) {
    j["event_count"] = run.result->events.size();
    j["stats"] = StatsJson(run.result->stats);
  }
  return j;
}

absl::Status ApiService::PersistRun(const Run& run) const {
  json j = RunJson(run);
  if (run.result) {
    json events = json::array();
    for (const ContactEvent& e : run.result->events) events.push_back(ToJson(e));
    json graph = json::array();
    for (const ContactEvent& e : run.result->graph_events) graph.push_back(ToJson(e));
    json scores = json::array();
    for (const ContactScore& s : run.result->scores) scores.push_back(ScoreJson(s));
    j["events"] = std::move(events);
    j["graph_events"] = std::move(graph);
    j["scores"] = std::move(scores);
  }
  return WriteFileAtomic(
      fs::path(options_.data_dir) / "analyses" / absl::StrCat(run.id, ".json"),
      j.dump());
}

ApiResponse ApiService::GetRun(const std::string& id) {
  std::lock_guard<std::mutex> lock(mu_);
  const auto it = runs_.find(id);
  if (it == runs_.end()) return Error(404, absl::StrCat("unknown analysis '", id, "'"));
  return Envelope(200, "analysis", RunJson(*it->second));
}

absl::StatusOr<std::shared_ptr<const ApiService::Run>> ApiService::FinishedRun(
    const std::string& id) const {
  std::lock_guard<std::mutex> lock(mu_);
  const auto it = runs_.find(id);
  if (it == runs_.end()) {
    return absl::NotFoundError(absl::StrCat("unknown analysis '", id, "'"));
  }
  if (it->second->status != RunStatus::kDone) {
    return absl::FailedPreconditionError(
        absl::StrCat("analysis '", id, "' is ",
                     RunStatusName(it->second->status),
                     it->second->error.empty() ? "" : ": ", it->second->error));
  }
  return it->second;
}

ApiResponse ApiService::GetEvents(const std::string& id, const ApiRequest& request) {
  auto run = FinishedRun(id);
  if (!run.ok()) return FromStatus(run.status());
  auto offset = QuerySize(request, "offset", 0);
  if (!offset.ok()) return FromStatus(offset.status());
  auto limit = QuerySize(request, "limit", options_.default_page_size);
  if (!limit.ok()) return FromStatus(limit.status());
  if (*limit == 0 || *limit > options_.max_page_size) {
    return Error(400, absl::StrCat("limit must lie in [1, ",
                                   options_.max_page_size, "]"));
  }
  const std::vector<ContactEvent>& all = (*run)->result->events;
  const std::size_t begin = std::min(*offset, all.size());
  const std::size_t end = std::min(all.size(), begin + *limit);
  json items = json::array();
  for (std::size_t k = begin; k < end; ++k) items.push_back(ToJson(all[k]));
  return Envelope(200, "events",
                  {{"run_id", id},
                   {"total", all.size()},
                   {"offset", begin},
                   {"limit", *limit},
                   {"next_offset", end < all.size() ? json(end) : json(nullptr)},
                   {"events", std::move(items)}});
}

ApiResponse ApiService::GetTraceView(const std::string& id, const ApiRequest& request,
                                     const std::string& view) {
  auto run = FinishedRun(id);
  if (!run.ok()) return FromStatus(run.status());
  const AnalysisResult& result = *(*run)->result;
  std::optional<UserId> index = result.config.index_user;
  if (const auto it = request.query.find("index_user"); it != request.query.end()) {
    index = it->second;
  }
  if (!index) {
    if (view == "scores") {
      json scores = json::array();
      for (const ContactScore& s : result.scores) scores.push_back(ScoreJson(s));
      return Envelope(200, "scores",
                      {{"run_id", id}, {"index_user", nullptr}, {"scores", scores}});
    }
    return Error(422, "index_user is required: set it in the analysis config or "
                      "pass ?index_user=");
  }

  TraceResult trace;
  if (result.trace && result.trace->index_user == *index) {
    trace = *result.trace;
  } else {
    auto ds = FindDataset((*run)->dataset_id);
    if (!ds.ok()) return FromStatus(ds.status());
    AnalysisOptions options;
    options.config = result.config;
    auto traced = TraceAnalysis(*(*ds)->store, result, *index, options);
    if (!traced.ok()) return FromStatus(traced.status());
    trace = *std::move(traced);
  }

  if (view == "levels") {
    json levels = json::array();
    for (const ContactLevelRecord& r : trace.plan.order) levels.push_back(LevelJson(r));
    return Envelope(200, "levels",
                    {{"run_id", id},
                     {"index_user", *index},
                     {"per_level", trace.plan.per_level},
                     {"levels", std::move(levels)}});
  }
  if (view == "scores") {
    json scores = json::array();
    for (const ContactScore& s : trace.scores) scores.push_back(ScoreJson(s));
    return Envelope(200, "scores",
                    {{"run_id", id}, {"index_user", *index}, {"scores", scores}});
  }
  if (const auto it = request.query.find("format");
      it != request.query.end() && it->second == "csv") {
    ApiResponse r;
    r.content_type = "text/csv";
    r.body = ReportToCsv(trace.report);
    return r;
  }
  json rows = json::array();
  for (const ReportRow& r : trace.report) rows.push_back(ReportRowJson(r));
  return Envelope(200, "report",
                  {{"run_id", id}, {"index_user", *index}, {"rows", std::move(rows)}});
}

ApiResponse ApiService::PostSimulation(const ApiRequest& request) {
  auto body = ParseBody(request.body);
  if (!body.ok()) return Error(400, body.status().message());
  const json& j = *body;
  const auto bad = [](const absl::Status& s) { return Error(400, s.message()); };
  if (auto s = CheckObject(j,
                           {"params", "initial", "t_end_days", "dt_days",
                            "output_stride", "mu"},
                           "simulation request");
      !s.ok()) {
    return bad(s);
  }
  EpidemicParams params;
  if (j.contains("params")) {
    const json& p = j["params"];
    if (auto s = CheckObject(p, {"beta", "alpha", "gamma", "population_n", "model_kind"},
                             "params");
        !s.ok()) {
      return bad(s);
    }
    int64_t population = params.population_n;
    std::string kind(ModelKindName(params.model_kind));
    for (const absl::Status& s :
         {ReadDouble(p, "beta", &params.beta), ReadDouble(p, "alpha", &params.alpha),
          ReadDouble(p, "gamma", &params.gamma),
          ReadInt(p, "population_n", &population), ReadString(p, "model_kind", &kind)}) {
      if (!s.ok()) return bad(s);
    }
    params.population_n = static_cast<int>(population);
    auto model = ParseModelKind(kind);
    if (!model.ok()) return Error(422, model.status().message());
    params.model_kind = *model;
  }
  EpidemicState initial{0.99, 0.0, 0.01, 0.0, 0.0};
  if (j.contains("initial")) {
    const json& x = j["initial"];
    if (auto s = CheckObject(x, {"s", "e", "i", "r"}, "initial"); !s.ok()) return bad(s);
    for (const absl::Status& s :
         {ReadDouble(x, "s", &initial.s), ReadDouble(x, "e", &initial.e),
          ReadDouble(x, "i", &initial.i), ReadDouble(x, "r", &initial.r)}) {
      if (!s.ok()) return bad(s);
    }
  }
  SimulationOptions sim;
  int64_t stride = sim.output_stride;
  for (const absl::Status& s : {ReadDouble(j, "t_end_days", &sim.t_end_days),
                                ReadDouble(j, "dt_days", &sim.dt_days),
                                ReadInt(j, "output_stride", &stride)}) {
    if (!s.ok()) return bad(s);
  }
  sim.output_stride = static_cast<int>(stride);
  std::vector<double> mus = {0.0};
  if (j.contains("mu")) {
    if (!j["mu"].is_array() || j["mu"].empty()) {
      return Error(400, "field 'mu' must be a non-empty array of numbers");
    }
    mus.clear();
    for (const json& v : j["mu"]) {
      if (!v.is_number()) return Error(400, "field 'mu' must contain numbers");
      mus.push_back(v.get<double>());
    }
  }
  if (auto s = Validate(params); !s.ok()) return Error(422, s.message());
  if (auto s = Validate(initial); !s.ok()) return Error(422, s.message());
  auto runs = MuSweep(params, initial, mus, sim);
  if (!runs.ok()) return FromStatus(runs.status(), 422);

  json out = json::array();
  for (const EpidemicSeries& series : *runs) {
    json t = json::array(), s = json::array(), e = json::array(),
         i = json::array(), r = json::array();
    for (const EpidemicState& x : series.states) {
      t.push_back(x.t);
      s.push_back(x.s);
      e.push_back(x.e);
      i.push_back(x.i);
      r.push_back(x.r);
    }
    out.push_back(
        {{"mu", series.summary.mu},
         {"summary",
          {{"peak_i", series.summary.peak_i},
           {"peak_time", series.summary.peak_time},
           {"final_r", series.summary.final_r},
           {"peak_infected_count", series.summary.peak_i * params.population_n},
           {"final_recovered_count", series.summary.final_r * params.population_n}}},
         {"series",
          {{"t", std::move(t)},
           {"s", std::move(s)},
           {"e", std::move(e)},
           {"i", std::move(i)},
           {"r", std::move(r)}}}});
  }
  return Envelope(200, "simulation",
                  {{"model_kind", std::string(ModelKindName(params.model_kind))},
                   {"population_n", params.population_n},
                   {"dt_days", sim.dt_days},
                   {"output_stride", sim.output_stride},
                   {"runs", std::move(out)}});
}

}  // namespace campustrace
