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

#include <random>
#include <thread>
#include <utility>

#include <fmt/format.h>

#include "clinsim/supervisor.hpp"
#include "clinsim/wire.hpp"
#include "test_support.hpp"

namespace clinsim {
namespace {

using testing::reference_case;

bool has_code(const ExplanationRecord& e, std::string_view code) {
  return std::find(e.reason_codes.begin(), e.reason_codes.end(), code) != e.reason_codes.end();
}

std::shared_ptr<CaseLibrary> library() {
  auto lib = std::make_shared<CaseLibrary>();
  lib->add(*reference_case());
  return lib;
}

TEST(Session, StartLogsInitEntry) {
  const auto s = Session::start("t-1", reference_case());
  EXPECT_EQ(s.state(), SessionState::active);
  ASSERT_EQ(s.log().size(), 1u);
  const auto& e = s.log()[0];
  EXPECT_EQ(e.seq, 1u);
  EXPECT_EQ(e.event, SystemEvent::session_start);
  EXPECT_FALSE(e.action);
  EXPECT_EQ(e.response.explanation().kind, ExplanationKind::scenario_flow);
  EXPECT_EQ(e.response.explanation().decision_id, "d1");
  for (auto id : kAllAgents)
    if (id != AgentId::supervisor)
      EXPECT_TRUE(has_code(e.response.explanation(), "initialized:" + std::string(to_string(id))));
  EXPECT_EQ(s.transitions(), (std::vector<StateTransition>{{SessionState::created, SessionState::active}}));
}

TEST(Session, InvalidCaseRefusesToStart) {
  auto c = std::make_shared<ClinicalCase>(*reference_case());
  c->title.clear();
  try {
    Session::start("t-1", c);
    FAIL();
  } catch (const InvalidCaseError& e) {
    EXPECT_EQ(e.code(), ErrorCode::invalid_case);
    EXPECT_EQ(e.diagnostics().size(), 1u);
  }
}

TEST(Session, TroponinRoutesToDiagnostic) {
  auto s = Session::start("t-1", reference_case());
  const auto& e = s.route_action(testing::test("troponin"));
  EXPECT_EQ(e.route.routed_to, AgentId::diagnostic);
  EXPECT_EQ(e.route.action_ref, e.seq);
  EXPECT_EQ(e.response.agent_id(), AgentId::diagnostic);
  EXPECT_EQ(e.response.content(), order_test(*reference_case(), {}, "troponin").content());
}

TEST(Session, RoutingIsTotal) {
  const std::vector<std::pair<StudentAction, AgentId>> table = {
      {testing::ask("hi"), AgentId::patient},
      {testing::exam("vitals"), AgentId::physical_exam},
      {testing::test("ekg"), AgentId::diagnostic},
      {testing::treat("aspirin"), AgentId::intervention},
      {testing::supervise("hi"), AgentId::supervisor},
      {testing::explain(AgentId::evaluation), AgentId::evaluation},
      {testing::explain(AgentId::patient), AgentId::patient},
      {testing::finish("stable_angina"), AgentId::evaluation},
  };
  for (const auto& [action, agent] : table) EXPECT_EQ(route_target(action), agent) << action.trigger_label();
}

TEST(Session, ActionAfterConcludeIsRejected) {
  auto s = Session::start("t-1", reference_case());
  s.conclude("stable_angina");
  try {
    s.route_action(testing::ask("hello?"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::session_not_active);
  }
}

TEST(Session, BatchOfActionsGivesConsecutiveSeq) {
  const auto& c = *reference_case();
  std::mt19937 rng(1);
  for (int round = 0; round < 50; ++round) {
    auto s = Session::start("t-1", reference_case());
    const int n = std::uniform_int_distribution<int>(0, 25)(rng);
    for (int i = 0; i < n; ++i) s.route_action(testing::random_action(c, rng, false));
    ASSERT_EQ(s.log().size(), static_cast<size_t>(n) + 1);
    for (size_t i = 0; i < s.log().size(); ++i) {
      EXPECT_EQ(s.log()[i].seq, i + 1);
      EXPECT_EQ(s.log()[i].response.explanation().decision_id, decision_id_for(i + 1));
      EXPECT_TRUE(s.log()[i].response.explanation().has_content());
    }
  }
}

TEST(Session, AgentErrorsBecomeErrorEntries) {
  auto s = Session::start("t-1", reference_case());
  const auto& e = s.route_action(testing::exam("xray_vision"));
  EXPECT_EQ(e.status, EntryStatus::error);
  EXPECT_EQ(e.route.routed_to, AgentId::physical_exam);
  EXPECT_TRUE(has_code(e.response.explanation(), "unknown_exam"));
  EXPECT_EQ(s.state(), SessionState::active);
}

TEST(Session, EndCaseWithUnknownDiseaseStaysActive) {
  auto s = Session::start("t-1", reference_case());
  const auto& e = s.route_action(testing::finish("dragon_pox"));
  EXPECT_EQ(e.status, EntryStatus::error);
  EXPECT_EQ(s.state(), SessionState::active);
}

TEST(Supervisor, FreshSessionShowsNothingDone) {
  const auto s = Session::start("t-1", reference_case());
  const auto r = s.supervisor_reply("how am I doing?");
  EXPECT_EQ(r.explanation().kind, ExplanationKind::scenario_flow);
  EXPECT_TRUE(has_code(r.explanation(), "count.request_exam=0"));
  EXPECT_TRUE(has_code(r.explanation(), "count.order_test=0"));
  EXPECT_TRUE(has_code(r.explanation(), "phase=history"));
  EXPECT_EQ(s.log().size(), 1u);
}

TEST(Supervisor, CountsMatchTheLog) {
  auto s = Session::start("t-1", reference_case());
  s.route_action(testing::ask("where does it hurt"));
  s.route_action(testing::exam("vitals"));
  s.route_action(testing::test("ekg"));
  const auto r = s.supervisor_reply("progress?");
  std::map<ActionKind, int> recount;
  for (const auto& e : s.log())
    if (e.action) ++recount[e.action->kind()];
  for (auto k : kAllActionKinds)
    EXPECT_TRUE(has_code(r.explanation(), fmt::format("count.{}={}", to_string(k), recount[k]))) << to_string(k);
  EXPECT_EQ(recount[ActionKind::ask_patient], 1);
  EXPECT_EQ(recount[ActionKind::request_exam], 1);
  EXPECT_EQ(recount[ActionKind::order_test], 1);
}

TEST(Supervisor, ReplyPassesGuard) {
  const auto& c = *reference_case();
  auto s = replay_actions("t-1", reference_case(), testing::load_script("scripts/full_session.json"));
  const auto r = s.supervisor_reply("Is it stable angina?");
  EXPECT_TRUE(guard_disclosure(r.content(), c.forbidden_terms).passed);
  EXPECT_TRUE(guard_disclosure(r.explanation().narrative, c.forbidden_terms).passed);
}

TEST(Conclude, CorrectDiagnosisEvaluates) {
  auto s = Session::start("t-1", reference_case());
  s.route_action(testing::test("troponin"));
  const auto before = s.log();
  s.conclude("stable_angina");
  EXPECT_EQ(s.state(), SessionState::evaluated);
  ASSERT_TRUE(s.report());
  EXPECT_EQ(s.report()->session_id, "t-1");
  ASSERT_EQ(s.log().size(), before.size() + 2);
  for (size_t i = 0; i < before.size(); ++i) EXPECT_EQ(s.log()[i], before[i]);
  const auto& conclusion = s.log()[before.size()];
  const auto& report = s.log()[before.size() + 1];
  EXPECT_EQ(conclusion.action->kind(), ActionKind::end_case);
  EXPECT_EQ(report.event, SystemEvent::evaluation_report);
  EXPECT_EQ(report.route.action_ref, conclusion.seq);
  EXPECT_EQ(s.report()->explanation.decision_id, report.response.explanation().decision_id);
  EXPECT_EQ(s.transitions().size(), 3u);
  for (const auto& t : s.transitions()) EXPECT_TRUE(is_legal_transition(t.from, t.to));
}

TEST(Conclude, TwiceIsRejected) {
  auto s = Session::start("t-1", reference_case());
  s.conclude("stable_angina");
  try {
    s.conclude("stable_angina");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::session_not_active);
  }
}

TEST(Conclude, UnknownDiseaseLogsNothing) {
  auto s = Session::start("t-1", reference_case());
  try {
    s.conclude("dragon_pox");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::unknown_disease);
  }
  EXPECT_EQ(s.log().size(), 1u);
  EXPECT_EQ(s.state(), SessionState::active);
}

TEST(StateMachine, OnlyForwardSteps) {
  const SessionState all[] = {SessionState::created, SessionState::active, SessionState::concluded,
                              SessionState::evaluated};
  for (auto a : all)
    for (auto b : all)
      EXPECT_EQ(is_legal_transition(a, b), static_cast<int>(b) == static_cast<int>(a) + 1);
}

TEST(Replay, ExportedScriptReplaysEqual) {
  const auto& c = *reference_case();
  std::mt19937 rng(17);
  for (int round = 0; round < 5; ++round) {
    auto s = Session::start("t-1", reference_case());
    for (int i = 0; i < 20 && s.state() == SessionState::active; ++i)
      s.route_action(testing::random_action(c, rng, i > 10));
    const auto doc = export_session(s);
    const auto again = replay_actions("t-1", reference_case(), parse_action_script(doc));
    ASSERT_EQ(again.log().size(), s.log().size());
    for (size_t i = 0; i < s.log().size(); ++i) EXPECT_TRUE(equal_modulo_time(s.log()[i], again.log()[i])) << i;
    EXPECT_EQ(strip_timing(Json::parse(export_session(again))), strip_timing(Json::parse(doc)));
  }
}

TEST(Store, UnknownCase) {
  SessionStore store(library());
  try {
    store.start_session("nope");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::unknown_case);
  }
  EXPECT_THROW(store.with_session("nope-1", [](Session&) {}), Error);
}

TEST(Store, SessionIdsCountUp) {
  SessionStore store(library());
  EXPECT_EQ(store.start_session("chestpain-01"), "chestpain-01-1");
  EXPECT_EQ(store.start_session("chestpain-01"), "chestpain-01-2");
  EXPECT_EQ(store.session_ids().size(), 2u);
}

TEST(Store, InterleavedSessionsMatchSoloRuns) {
  const auto script = testing::load_script("scripts/full_session.json");
  std::vector<StudentAction> other = {testing::exam("lungs"), testing::ask("do you smoke"),
                                      testing::treat("thrombolysis"), testing::test("d_dimer")};
  SessionStore store(library());
  const auto a = store.start_session("chestpain-01");
  const auto b = store.start_session("chestpain-01");
  for (size_t i = 0; i < std::max(script.size(), other.size()); ++i) {
    if (i < script.size()) store.with_session(a, [&](Session& s) { s.route_action(script[i]); });
    if (i < other.size()) store.with_session(b, [&](Session& s) { s.route_action(other[i]); });
  }
  const auto solo_a = replay_actions(a, reference_case(), script);
  const auto solo_b = replay_actions(b, reference_case(), other);
  std::as_const(store).with_session(a, [&](const Session& s) {
    ASSERT_EQ(s.log().size(), solo_a.log().size());
    for (size_t i = 0; i < s.log().size(); ++i) EXPECT_TRUE(equal_modulo_time(s.log()[i], solo_a.log()[i]));
  });
  std::as_const(store).with_session(b, [&](const Session& s) {
    ASSERT_EQ(s.log().size(), solo_b.log().size());
    for (size_t i = 0; i < s.log().size(); ++i) EXPECT_TRUE(equal_modulo_time(s.log()[i], solo_b.log()[i]));
  });
}

TEST(Store, ConcurrentWritersKeepSeqDense) {
  SessionStore store(library());
  const auto id = store.start_session("chestpain-01");
  std::vector<std::thread> threads;
  for (int t = 0; t < 4; ++t)
    threads.emplace_back([&store, &id, t] {
      for (int i = 0; i < 50; ++i)
        store.with_session(id, [&](Session& s) { s.route_action(testing::ask(fmt::format("q{} {}", t, i))); });
    });
  for (auto& t : threads) t.join();
  std::as_const(store).with_session(id, [](const Session& s) {
    ASSERT_EQ(s.log().size(), 201u);
    for (size_t i = 0; i < s.log().size(); ++i) EXPECT_EQ(s.log()[i].seq, i + 1);
  });
}

TEST(Library, LoadsBundledCases) {
  CaseLibrary lib;
  EXPECT_GE(lib.load_directory(testing::data_path("cases")), 1u);
  EXPECT_TRUE(lib.find("chestpain-01"));
  EXPECT_FALSE(lib.find("nope"));
  EXPECT_THROW(lib.load_directory("/nonexistent/cases"), Error);
}

}  // namespace
}  // namespace clinsim
