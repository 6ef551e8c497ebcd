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

// Transport-independent HTTP/JSON service. Routes:
//
//   POST /datasets                       upload Takeout files
//   GET  /datasets/{id}                  dataset summary
//   GET  /datasets/{id}/geojson          tracks, contacts, common cells
//   POST /datasets/{id}/analyses         start a proximity analysis
//   GET  /analyses/{id}                  run status
//   GET  /analyses/{id}/events           paginated contact events
//   GET  /analyses/{id}/levels           contact levels (?index_user=)
//   GET  /analyses/{id}/scores           contact scores (?index_user=)
//   GET  /analyses/{id}/report           screening report (?index_user=)
//   POST /simulations                    epidemic runs per mu
//
// Every JSON response is {"schema_version": 1, "kind": ..., "data": ...} or
// {"schema_version": 1, "error": {"code", "status", "message"}}. Request
// bodies are strict: unknown fields are rejected.

#ifndef CAMPUSTRACE_API_SERVICE_H_
#define CAMPUSTRACE_API_SERVICE_H_

#include <condition_variable>
#include <cstddef>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/time/time.h"
#include "campustrace/analysis.h"
#include "campustrace/epidemic.h"
#include "campustrace/proximity.h"
#include "campustrace/trajectory_store.h"
#include "json.hpp"

namespace campustrace {

inline constexpr int kApiSchemaVersion = 1;

struct UploadPart {
  // Form field name; carries the user id.
  std::string name;
  std::string filename;
  std::string content;
};

struct ApiRequest {
  std::string method;
  std::string path;
  std::map<std::string, std::string> query;
  std::string body;
  std::vector<UploadPart> parts;
};

struct ApiResponse {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;

  nlohmann::json Json() const { return nlohmann::json::parse(body); }
};

struct ApiServiceOptions {
  // Persistence root; created if missing.
  std::string data_dir;
  std::size_t max_upload_bytes = 256u << 20;
  // Datasets with fewer users run analyses inside the request.
  std::size_t sync_user_limit = 10;
  int workers = 2;
  std::size_t default_page_size = 100;
  std::size_t max_page_size = 1000;
};

nlohmann::json ToJson(const ProximityConfig& config);
// Strict: unknown fields and wrong types are InvalidArgument.
absl::StatusOr<ProximityConfig> ProximityConfigFromJson(const nlohmann::json& j);

nlohmann::json ToJson(const ContactEvent& event);
absl::StatusOr<ContactEvent> ContactEventFromJson(const nlohmann::json& j);

// Fixed-size worker pool; Submit never blocks.
class WorkerPool {
 public:
  explicit WorkerPool(int workers);
  ~WorkerPool();
  WorkerPool(const WorkerPool&) = delete;
  WorkerPool& operator=(const WorkerPool&) = delete;

  void Submit(std::function<void()> task);
  // Blocks until the queue is empty and no task is running.
  void WaitIdle();

 private:
  void Loop();

  std::mutex mu_;
  std::condition_variable wake_;
  std::condition_variable idle_;
  std::deque<std::function<void()>> queue_;
  int running_ = 0;
  bool stopping_ = false;
  std::vector<std::thread> threads_;
};

enum class RunStatus { kPending, kRunning, kDone, kFailed };

class ApiService {
 public:
  // Reloads datasets and finished analyses found under data_dir.
  static absl::StatusOr<std::unique_ptr<ApiService>> Create(
      ApiServiceOptions options);
  ~ApiService();

  ApiResponse Handle(const ApiRequest& request);

  // Waits for queued analyses to finish.
  void WaitIdle();

  const ApiServiceOptions& options() const { return options_; }

 private:
  struct Dataset {
    std::string id;
    std::shared_ptr<const TrajectoryStore> store;
    nlohmann::json summary;
  };
  struct Run {
    std::string id;
    std::string dataset_id;
    ProximityConfig config;
    RunStatus status = RunStatus::kPending;
    absl::Time created_at;
    std::string error;
    std::shared_ptr<const AnalysisResult> result;
  };

  explicit ApiService(ApiServiceOptions options);
  absl::Status LoadPersisted();

  ApiResponse PostDataset(const ApiRequest& request);
  ApiResponse GetDataset(const std::string& id);
  ApiResponse GetGeoJson(const std::string& id, const ApiRequest& request);
  ApiResponse PostAnalysis(const std::string& dataset_id,
                           const ApiRequest& request);
  ApiResponse GetRun(const std::string& id);
  ApiResponse GetEvents(const std::string& id, const ApiRequest& request);
  ApiResponse GetTraceView(const std::string& id, const ApiRequest& request,
                           const std::string& view);
  ApiResponse PostSimulation(const ApiRequest& request);

  absl::StatusOr<std::shared_ptr<const Dataset>> FindDataset(
      const std::string& id) const;
  absl::StatusOr<std::shared_ptr<const Run>> FinishedRun(
      const std::string& id) const;
  void Execute(const std::string& run_id);
  nlohmann::json RunJson(const Run& run) const;
  absl::Status PersistRun(const Run& run) const;

  ApiServiceOptions options_;
  mutable std::mutex mu_;
  uint64_t next_dataset_ = 1;
  uint64_t next_run_ = 1;
  std::map<std::string, std::shared_ptr<const Dataset>> datasets_;
  // Runs are replaced, never mutated, once published.
  std::map<std::string, std::shared_ptr<const Run>> runs_;
  std::unique_ptr<WorkerPool> pool_;
};

}  // namespace campustrace

#endif  // CAMPUSTRACE_API_SERVICE_H_
