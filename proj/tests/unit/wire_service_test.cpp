// Copyright 2026 The clinsim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <thread>

#include "httplib.h"

#include "clinsim/service.hpp"
#include "clinsim/wire.hpp"
#include "test_support.hpp"

namespace clinsim {
namespace {

using testing::reference_case;

std::shared_ptr<CaseLibrary> library() {
  auto lib = std::make_shared<CaseLibrary>();
  lib->add(*reference_case());
  return lib;
}

class ServiceTest : public ::testing::Test {
 protected:
  Service service{library(), make_backend("script"), ServiceConfig{"sesame"}};

  ApiResponse call(std::string method, std::string path, std::string body = {},
                   std::map<std::string, std::string> query = {}, std::string auth = {}) {
    const auto r = service.handle({std::move(method), std::move(path), std::move(query), std::move(body), std::move(auth)});
    EXPECT_TRUE(r.body.contains("ok"));
    EXPECT_NE(r.body.contains("data"), r.body.contains("error")) << r.body.dump();
    return r;
  }

  std::string start() {
    const auto r = call("POST", "/sessions", R"({"case_id": "chestpain-01"})");
    EXPECT_EQ(r.status, 201);
    return r.body["data"]["session"]["session_id"].get<std::string>();
  }

  ApiResponse act(const std::string& id, const Json& action) {
    return call("POST", "/sessions/" + id + "/actions", action.dump());
  }
};

TEST(Wire, ActionRoundTrip) {
  for (const auto& a : testing::load_script("scripts/full_session.json")) EXPECT_EQ(action_from_json(Json(a)), a);
}

TEST(Wire, UnknownKindNamesField) {
  try {
    action_from_json(Json{{"kind", "foo"}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::malformed_request);
    EXPECT_EQ(e.detail(), "kind");
  }
}

TEST(Wire, MissingAndExtraFields) {
  try {
    action_from_json(Json{{"kind", "order_test"}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.detail(), "test_id");
  }
  try {
    action_from_json(Json{{"kind", "order_test"}, {"test_id", "ekg"}, {"stat", true}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.detail(), "stat");
  }
}

TEST(Wire, LogEntryRoundTrip) {
  const auto s = replay_actions("t-1", reference_case(), testing::load_script("scripts/full_session.json"));
  for (const auto& e : s.log()) EXPECT_EQ(log_entry_from_json(Json(e)), e) << e.seq;
  EXPECT_EQ(report_from_json(Json(*s.report())), *s.report());
}

TEST(Wire, ExplanationFieldNames) {
  const auto s = Session::start("t-1", reference_case());
  const Json j = s.log()[0].response.explanation();
  for (const char* key : {"decision_id", "agent_id", "kind", "reason_codes", "contributions", "rule_ids", "narrative", "elapsed"})
    EXPECT_TRUE(j.contains(key)) << key;
  EXPECT_EQ(j.size(), 8u);
}

TEST(Wire, ScriptFormats) {
  const auto actions = testing::load_script("scripts/good_student.json");
  Json arr = Json::array();
  for (const auto& a : actions) arr.push_back(a);
  EXPECT_EQ(parse_action_script(arr.dump()), actions);
  const auto s = replay_actions("t-1", reference_case(), actions);
  EXPECT_EQ(parse_action_script(export_session(s)), actions);
}

TEST(Wire, StripTimingRemovesTimeFields) {
  const Json j = {{"issued_at", 5}, {"a", {{"elapsed", 1.0}, {"b", 2}}}, {"list", {{{"started", 1}}}}};
  EXPECT_EQ(strip_timing(j), (Json{{"a", {{"b", 2}}}, {"list", {Json::object()}}}));
}

TEST_F(ServiceTest, ListAndShowCases) {
  const auto list = call("GET", "/cases");
  EXPECT_EQ(list.status, 200);
  EXPECT_EQ(list.body["data"]["cases"][0]["case_id"], "chestpain-01");
  const auto show = call("GET", "/cases/chestpain-01");
  EXPECT_EQ(show.status, 200);
  const auto& data = show.body["data"];
  EXPECT_FALSE(data.contains("hidden_diagnosis"));
  EXPECT_FALSE(data.contains("rubric"));
  EXPECT_FALSE(data.contains("evidence_links"));
  EXPECT_EQ(data["personas"].size(), 6u);
  const auto text = data.dump();
  EXPECT_EQ(text.find("\"angina"), std::string::npos);
  EXPECT_EQ(call("GET", "/cases/nope").status, 404);
}

TEST_F(ServiceTest, TroponinActionReturnsExplainedEntry) {
  const auto id = start();
  const auto r = act(id, {{"kind", "order_test"}, {"test_id", "troponin"}});
  ASSERT_EQ(r.status, 200);
  const auto& entry = r.body["data"];
  EXPECT_EQ(entry["route"]["routed_to"], "diagnostic");
  EXPECT_EQ(entry["response"]["explanation"]["kind"], "test_utility");
  EXPECT_FALSE(entry["response"]["explanation"]["reason_codes"].empty());
  EXPECT_EQ(entry["seq"], 2);
}

TEST_F(ServiceTest, ActionErrors) {
  const auto id = start();
  const auto bad = act(id, {{"kind", "foo"}});
  EXPECT_EQ(bad.status, 422);
  EXPECT_EQ(bad.body["error"]["code"], "malformed_request");
  EXPECT_EQ(bad.body["error"]["details"]["detail"], "kind");
  EXPECT_EQ(call("POST", "/sessions/" + id + "/actions", "{not json").status, 422);
  EXPECT_EQ(act("nope-1", {{"kind", "ask_patient"}, {"text", "hi"}}).status, 404);
  ASSERT_EQ(call("POST", "/sessions/" + id + "/conclude", R"({"diagnosis": "stable_angina"})").status, 200);
  const auto closed = act(id, {{"kind", "ask_patient"}, {"text", "hi"}});
  EXPECT_EQ(closed.status, 409);
  EXPECT_EQ(closed.body["error"]["code"], "session_not_active");
}

TEST_F(ServiceTest, LogSince) {
  const auto id = start();
  act(id, {{"kind", "ask_patient"}, {"text", "where does it hurt"}});
  act(id, {{"kind", "request_exam"}, {"exam_id", "vitals"}});
  const auto all = call("GET", "/sessions/" + id + "/log");
  EXPECT_EQ(all.body["data"]["entries"].size(), 3u);
  const auto tail = call("GET", "/sessions/" + id + "/log", {}, {{"since", "2"}});
  ASSERT_EQ(tail.body["data"]["entries"].size(), 1u);
  EXPECT_EQ(tail.body["data"]["entries"][0]["seq"], 3);
  EXPECT_EQ(call("GET", "/sessions/" + id + "/log", {}, {{"since", "x"}}).status, 422);
}

TEST_F(ServiceTest, ExplanationsCoverEveryEntry) {
  const auto id = start();
  for (const auto& a : testing::load_script("scripts/full_session.json")) act(id, Json(a));
  const auto r = call("GET", "/sessions/" + id + "/explanations");
  const auto log = call("GET", "/sessions/" + id + "/log");
  ASSERT_EQ(r.body["data"]["items"].size(), log.body["data"]["entries"].size());
  for (const auto& item : r.body["data"]["items"]) {
    const auto& e = item["explanation"];
    EXPECT_TRUE(!e["reason_codes"].empty() || !e["contributions"].empty() || !e["rule_ids"].empty());
    EXPECT_LT(e["elapsed"].get<double>(), 500.0);
  }
}

TEST_F(ServiceTest, ConcludeAndReport) {
  const auto id = start();
  EXPECT_EQ(call("GET", "/sessions/" + id + "/report").status, 409);
  EXPECT_EQ(call("POST", "/sessions/" + id + "/conclude", R"({"diagnosis": "dragon_pox"})").status, 422);
  EXPECT_EQ(call("POST", "/sessions/" + id + "/conclude", R"({})").status, 422);
  const auto r = call("POST", "/sessions/" + id + "/conclude", R"({"diagnosis": "stable_angina"})");
  ASSERT_EQ(r.status, 200);
  EXPECT_EQ(r.body["data"]["session"]["state"], "evaluated");
  EXPECT_EQ(r.body["data"]["entries"].size(), 2u);
  const auto report = call("GET", "/sessions/" + id + "/report");
  EXPECT_EQ(report.status, 200);
  EXPECT_EQ(report.body["data"], r.body["data"]["report"]);
  EXPECT_EQ(call("POST", "/sessions/" + id + "/conclude", R"({"diagnosis": "stable_angina"})").status, 409);
}

TEST_F(ServiceTest, ExportIsByteStable) {
  const auto id = start();
  for (const auto& a : testing::load_script("scripts/good_student.json")) act(id, Json(a));
  const auto a = service.export_session(id);
  EXPECT_EQ(a, service.export_session(id));
  const auto doc = Json::parse(a);
  EXPECT_EQ(doc["log"].size(), 12u);
  EXPECT_TRUE(doc["report"].is_object());
  EXPECT_EQ(call("GET", "/sessions/" + id + "/export").body["data"], doc);
  EXPECT_EQ(call("GET", "/sessions/nope-1/export").status, 404);
}

TEST_F(ServiceTest, DashboardRequiresToken) {
  const auto id = start();
  act(id, {{"kind", "order_test"}, {"test_id", "ekg"}});
  EXPECT_EQ(call("GET", "/dashboard/sessions/" + id).status, 401);
  EXPECT_EQ(call("GET", "/dashboard/sessions/" + id, {}, {}, "Bearer wrong").status, 401);
  const auto r = call("GET", "/dashboard/sessions/" + id, {}, {}, "Bearer sesame");
  ASSERT_EQ(r.status, 200);
  const auto& rows = r.body["data"]["rows"];
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0]["seq"], 1);
  EXPECT_EQ(rows[1]["seq"], 2);
  EXPECT_EQ(rows[1]["trigger"], "order_test:ekg");
  EXPECT_EQ(rows[1]["agent_id"], "diagnostic");
  EXPECT_FALSE(rows[1]["rule_ids"].empty());
  EXPECT_TRUE(rows[1].contains("elapsed"));
}

TEST_F(ServiceTest, UnknownRoute) {
  const auto r = call("GET", "/teapot");
  EXPECT_EQ(r.status, 404);
  EXPECT_EQ(r.body["error"]["code"], "not_found");
  EXPECT_EQ(call("DELETE", "/cases").status, 404);
}

TEST_F(ServiceTest, ReadsArePureFunctionsOfState) {
  const auto id = start();
  act(id, {{"kind", "ask_patient"}, {"text", "do you smoke"}});
  for (const char* leaf : {"/log", "/explanations", "/export"}) {
    const auto path = "/sessions/" + id + leaf;
    EXPECT_EQ(call("GET", path).body.dump(), call("GET", path).body.dump()) << leaf;
  }
}

TEST(HttpStatus, Mapping) {
  EXPECT_EQ(http_status_for(ErrorCode::unknown_session), 404);
  EXPECT_EQ(http_status_for(ErrorCode::session_not_active), 409);
  EXPECT_EQ(http_status_for(ErrorCode::malformed_request), 422);
  EXPECT_EQ(http_status_for(ErrorCode::unauthorized), 401);
}

TEST(HttpServer, ServesOverTcp) {
  Service service(library(), make_backend("script"));
  HttpServer server(service);
  const int port = server.bind("127.0.0.1", 0);
  ASSERT_GT(port, 0);
  std::thread loop([&] { server.listen(); });

  httplib::Client client("127.0.0.1", port);
  auto created = client.Post("/sessions", R"({"case_id": "chestpain-01"})", "application/json");
  ASSERT_TRUE(created);
  EXPECT_EQ(created->status, 201);
  const auto id = Json::parse(created->body)["data"]["session"]["session_id"].get<std::string>();
  auto acted = client.Post("/sessions/" + id + "/actions", R"({"kind": "order_test", "test_id": "troponin"})",
                           "application/json");
  ASSERT_TRUE(acted);
  EXPECT_EQ(acted->status, 200);
  EXPECT_EQ(acted->get_header_value("Access-Control-Allow-Origin"), "*");

  const auto remote = fetch_remote_export("127.0.0.1", port, id);
  EXPECT_EQ(Json::parse(remote), Json::parse(service.export_session(id)));
  try {
    fetch_remote_export("127.0.0.1", port, "nope-1");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::unknown_session);
  }

  server.stop();
  loop.join();
}

}  // namespace
}  // namespace clinsim
