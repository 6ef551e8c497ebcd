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

// HTTP transport for ApiService.

#ifndef CAMPUSTRACE_HTTP_SERVER_H_
#define CAMPUSTRACE_HTTP_SERVER_H_

#include <memory>
#include <string>
#include <thread>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "campustrace/api_service.h"

namespace httplib {
class Server;
}  // namespace httplib

namespace campustrace {

class HttpServer {
 public:
  explicit HttpServer(ApiService& service);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  // Port 0 binds an ephemeral port. Returns the bound port.
  absl::StatusOr<int> Bind(const std::string& host, int port);
  // Blocks until Stop().
  absl::Status Listen();
  // Bind + Listen on a background thread.
  absl::StatusOr<int> Start(const std::string& host, int port);
  void Stop();

 private:
  ApiService& service_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
};

}  // namespace campustrace

#endif  // CAMPUSTRACE_HTTP_SERVER_H_
