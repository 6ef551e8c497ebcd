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

#include "api_test_util.h"
#include "campustrace/analysis.h"
#include "fixtures.h"
#include "gtest/gtest.h"
#include "httplib.h"
#include "json.hpp"

namespace campustrace {
namespace {

using nlohmann::json;

TEST(HttpServerTest, EndToEndOverLoopback) {
  ApiServiceOptions options;
  options.data_dir = testing_api::FreshDir("http_e2e");
  auto service = ApiService::Create(options);
  ASSERT_TRUE(service.ok());
  HttpServer server(**service);
  const auto port = server.Start("127.0.0.1", 0);
  ASSERT_TRUE(port.ok()) << port.status();
  ASSERT_GT(*port, 0);
  httplib::Client client("127.0.0.1", *port);

  auto fixture = testing_fixtures::MakeFixture(DefaultScript(2, 4, 0));
  httplib::MultipartFormDataItems items;
  for (const ForgedUser& u : fixture.dataset.users) {
    items.push_back({u.user_id, u.takeout_json, u.user_id + ".json", "application/json"});
  }
  auto up = client.Post("/datasets", items);
  ASSERT_TRUE(up);
  ASSERT_EQ(up->status, 201) << up->body;
  const json dataset = json::parse(up->body)["data"];
  EXPECT_EQ(dataset["user_count"], 4);
  const std::string ds = dataset["dataset_id"];

  const ProximityConfig config = ConfigForScript(fixture.dataset.script);
  auto created = client.Post("/datasets/" + ds + "/analyses", ToJson(config).dump(),
                             "application/json");
  ASSERT_TRUE(created);
  ASSERT_EQ(created->status, 201) << created->body;
  const std::string run = json::parse(created->body)["data"]["run_id"];

  auto events = client.Get("/analyses/" + run + "/events?offset=0&limit=50");
  ASSERT_TRUE(events);
  ASSERT_EQ(events->status, 200);
  AnalysisOptions analysis;
  analysis.config = config;
  const auto library = RunAnalysis(*fixture.store, analysis);
  ASSERT_TRUE(library.ok());
  std::vector<ContactEvent> got;
  const json page = json::parse(events->body);
  for (const json& e : page["data"]["events"]) got.push_back(*ContactEventFromJson(e));
  EXPECT_EQ(got, library->events);

  auto csv = client.Get("/analyses/" + run + "/report?index_user=u001&format=csv");
  ASSERT_TRUE(csv);
  EXPECT_EQ(csv->get_header_value("Content-Type").rfind("text/csv", 0), 0u);

  json bad = ToJson(config);
  bad["collision_interval_s"] = 10;
  auto rejected = client.Post("/datasets/" + ds + "/analyses", bad.dump(), "application/json");
  ASSERT_TRUE(rejected);
  EXPECT_EQ(rejected->status, 422);
  auto missing = client.Get("/analyses/an-777777");
  ASSERT_TRUE(missing);
  EXPECT_EQ(missing->status, 404);
  EXPECT_EQ(json::parse(missing->body)["error"]["code"], 404);

  server.Stop();
}

TEST(WorkerPoolTest, RunsEverythingAndDrains) {
  WorkerPool pool(3);
  std::atomic<int> done = 0;
  for (int k = 0; k < 100; ++k) pool.Submit([&] { ++done; });
  pool.WaitIdle();
  EXPECT_EQ(done.load(), 100);
  pool.WaitIdle();
}

}  // namespace
}  // namespace campustrace
