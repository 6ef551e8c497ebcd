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

#include "campustrace/http_server.h"

#include <utility>

#include "absl/strings/str_cat.h"
#include "httplib.h"

namespace campustrace {
namespace {

void Dispatch(ApiService& service, const httplib::Request& req,
              httplib::Response& res) {
  ApiRequest request;
  request.method = req.method;
  request.path = req.path;
  for (const auto& [k, v] : req.params) request.query[k] = v;
  if (req.is_multipart_form_data()) {
    for (const auto& [name, file] : req.files) {
      request.parts.push_back({file.name, file.filename, file.content});
    }
  } else {
    request.body = req.body;
  }
  const ApiResponse response = service.Handle(request);
  res.status = response.status;
  res.set_content(response.body, response.content_type);
}

}  // namespace

HttpServer::HttpServer(ApiService& service)
    : service_(service), server_(std::make_unique<httplib::Server>()) {
  server_->set_payload_max_length(service_.options().max_upload_bytes);
  const auto handler = [this](const httplib::Request& req, httplib::Response& res) {
    Dispatch(service_, req, res);
  };
  server_->Get(".*", handler);
  server_->Post(".*", handler);
  server_->Put(".*", handler);
  server_->Delete(".*", handler);
}

HttpServer::~HttpServer() { Stop(); }

absl::StatusOr<int> HttpServer::Bind(const std::string& host, int port) {
  const int bound = port == 0 ? server_->bind_to_any_port(host)
                              : (server_->bind_to_port(host, port) ? port : -1);
  if (bound < 0) {
    return absl::UnavailableError(absl::StrCat("cannot bind ", host, ":", port));
  }
  return bound;
}

absl::Status HttpServer::Listen() {
  if (!server_->listen_after_bind()) {
    return absl::UnavailableError("HTTP server stopped with an error");
  }
  return absl::OkStatus();
}

absl::StatusOr<int> HttpServer::Start(const std::string& host, int port) {
  absl::StatusOr<int> bound = Bind(host, port);
  if (!bound.ok()) return bound;
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return bound;
}

void HttpServer::Stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace campustrace
