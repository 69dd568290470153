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

#include "clinsim/wire.hpp"

#include <fmt/format.h>

namespace clinsim {

namespace {

[[noreturn]] void malformed(const std::string& field, const std::string& message) {
  throw Error(ErrorCode::malformed_request, message, field);
}

const Json& require(const Json& j, const char* key) {
  if (!j.is_object()) malformed(key, "expected a JSON object");
  auto it = j.find(key);
  if (it == j.end()) malformed(key, fmt::format("missing field '{}'", key));
  return *it;
}

std::string require_string(const Json& j, const char* key) {
  const Json& v = require(j, key);
  if (!v.is_string()) malformed(key, fmt::format("field '{}' must be a string", key));
  return v.get<std::string>();
}

double require_number(const Json& j, const char* key) {
  const Json& v = require(j, key);
  if (!v.is_number()) malformed(key, fmt::format("field '{}' must be a number", key));
  return v.get<double>();
}

std::uint64_t require_uint(const Json& j, const char* key) {
  const Json& v = require(j, key);
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
    malformed(key, fmt::format("field '{}' must be a non-negative integer", key));
  return v.get<std::uint64_t>();
}

std::vector<std::string> require_strings(const Json& j, const char* key) {
  const Json& v = require(j, key);
  if (!v.is_array()) malformed(key, fmt::format("field '{}' must be an array of strings", key));
  std::vector<std::string> out;
  for (const auto& item : v) {
    if (!item.is_string()) malformed(key, fmt::format("field '{}' must be an array of strings", key));
    out.push_back(item.get<std::string>());
  }
  return out;
}

AgentId require_agent(const Json& j, const char* key) {
  auto id = agent_id_from_string(require_string(j, key));
  if (!id) malformed(key, fmt::format("field '{}' does not name an agent", key));
  return *id;
}

Json optional_to_json(const auto& opt) { return opt ? Json(*opt) : Json(nullptr); }

}  // namespace

void to_json(Json& j, const Diagnostic& d) {
  j = Json{{"severity", to_string(d.severity)}, {"path", d.path}, {"message", d.message}, {"rule_id", d.rule_id}};
}

void to_json(Json& j, const Contribution& c) { j = Json{{"feature", c.feature}, {"weight", c.weight}}; }

void to_json(Json& j, const ExplanationRecord& e) {
  j = Json{{"decision_id", e.decision_id},   {"agent_id", to_string(e.agent_id)},
           {"kind", to_string(e.kind)},      {"reason_codes", e.reason_codes},
           {"contributions", e.contributions}, {"rule_ids", e.rule_ids},
           {"narrative", e.narrative},       {"elapsed", e.elapsed}};
}

void to_json(Json& j, const AgentResponse& r) {
  j = Json{{"agent_id", to_string(r.agent_id())},
           {"content", r.content()},
           {"revealed_findings", r.revealed_findings()},
           {"explanation", r.explanation()}};
}

void to_json(Json& j, const StudentAction& a) {
  j = Json{{"kind", to_string(a.kind())}, {"issued_at", a.issued_at}};
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, AskPatient> || std::is_same_v<T, AskSupervisor>) {
          j["text"] = p.text;
        } else if constexpr (std::is_same_v<T, RequestExam>) {
          j["exam_id"] = p.exam_id;
        } else if constexpr (std::is_same_v<T, OrderTest>) {
          j["test_id"] = p.test_id;
        } else if constexpr (std::is_same_v<T, Intervene>) {
          j["intervention_id"] = p.intervention_id;
        } else if constexpr (std::is_same_v<T, RequestExplanation>) {
          j["agent"] = to_string(p.agent);
          j["subject"] = p.subject;
        } else {
          j["diagnosis"] = p.diagnosis;
        }
      },
      a.payload);
}

void to_json(Json& j, const RouteDecision& r) {
  j = Json{{"action_ref", r.action_ref},
           {"routed_to", to_string(r.routed_to)},
           {"reason", r.reason},
           {"rule_id", r.rule_id}};
}

void to_json(Json& j, const LogEntry& e) {
  j = Json{{"seq", e.seq},
           {"action", optional_to_json(e.action)},
           {"event", e.event ? Json(to_string(*e.event)) : Json(nullptr)},
           {"trigger", e.trigger_label()},
           {"route", e.route},
           {"response", e.response},
           {"status", to_string(e.status)}};
}

void to_json(Json& j, const DiseaseScore& s) {
  j = Json{{"disease", s.disease},
           {"score", s.score},
           {"contributions", s.contributions},
           {"status", to_string(s.status)}};
}

void to_json(Json& j, const MatcherResult& m) {
  j = Json{{"matcher", m.matcher}, {"matched", m.matched}, {"seq", m.seq}, {"decision_id", m.decision_id}};
}

void to_json(Json& j, const ItemScore& s) {
  j = Json{{"item_id", s.item_id},   {"satisfied", s.satisfied},
           {"required", s.required}, {"fraction", s.fraction},
           {"weighted_points", s.weighted_points}, {"matches", s.matches}};
}

void to_json(Json& j, const KeyFactor& k) {
  j = Json{{"item_id", k.item_id}, {"direction", to_string(k.direction)}, {"evidence", k.evidence}};
}

void to_json(Json& j, const FeedbackReport& r) {
  j = Json{{"session_id", r.session_id}, {"item_scores", r.item_scores}, {"total_score", r.total_score},
           {"key_factors", r.key_factors}, {"narrative", r.narrative},    {"explanation", r.explanation}};
}

void to_json(Json& j, const AgentPersona& p) {
  Json triggers = Json::array();
  for (auto t : p.decision_triggers) triggers.push_back(to_string(t));
  Json profile = Json::array();
  for (auto k : p.explainability_profile) profile.push_back(to_string(k));
  j = Json{{"agent_id", to_string(p.agent_id)},
           {"display_name", p.display_name},
           {"goal", p.goal},
           {"model_descriptor", p.model_descriptor},
           {"knowledge_base_refs", p.knowledge_base_refs},
           {"decision_triggers", triggers},
           {"explainability_profile", profile},
           {"card", format_persona_card(p)}};
}

ExplanationRecord explanation_from_json(const Json& j) {
  ExplanationRecord e;
  e.decision_id = require_string(j, "decision_id");
  e.agent_id = require_agent(j, "agent_id");
  auto kind = explanation_kind_from_string(require_string(j, "kind"));
  if (!kind) malformed("kind", "unknown explanation kind");
  e.kind = *kind;
  e.reason_codes = require_strings(j, "reason_codes");
  const Json& contributions = require(j, "contributions");
  if (!contributions.is_array()) malformed("contributions", "field 'contributions' must be an array");
  for (const auto& c : contributions)
    e.contributions.push_back({require_string(c, "feature"), require_number(c, "weight")});
  e.rule_ids = require_strings(j, "rule_ids");
  e.narrative = require_string(j, "narrative");
  e.elapsed = require_number(j, "elapsed");
  return e;
}

AgentResponse response_from_json(const Json& j) {
  try {
    return AgentResponse(require_agent(j, "agent_id"), require_string(j, "content"),
                         require_strings(j, "revealed_findings"), explanation_from_json(require(j, "explanation")));
  } catch (const std::invalid_argument& e) {
    malformed("explanation", e.what());
  }
}

StudentAction action_from_json(const Json& j) {
  if (!j.is_object()) malformed("action", "action must be a JSON object");
  const std::string kind_name = require_string(j, "kind");
  auto kind = action_kind_from_string(kind_name);
  if (!kind) malformed("kind", fmt::format("unknown action kind '{}'", kind_name));

  StudentAction a;
  if (auto it = j.find("issued_at"); it != j.end() && !it->is_null()) {
    if (!it->is_number_integer()) malformed("issued_at", "field 'issued_at' must be an integer");
    a.issued_at = it->get<Timestamp>();
  }
  std::vector<std::string> allowed{"kind", "issued_at"};
  switch (*kind) {
    case ActionKind::ask_patient:
      a.payload = AskPatient{require_string(j, "text")};
      allowed.push_back("text");
      break;
    case ActionKind::request_exam:
      a.payload = RequestExam{require_string(j, "exam_id")};
      allowed.push_back("exam_id");
      break;
    case ActionKind::order_test:
      a.payload = OrderTest{require_string(j, "test_id")};
      allowed.push_back("test_id");
      break;
    case ActionKind::intervene:
      a.payload = Intervene{require_string(j, "intervention_id")};
      allowed.push_back("intervention_id");
      break;
    case ActionKind::ask_supervisor:
      a.payload = AskSupervisor{require_string(j, "text")};
      allowed.push_back("text");
      break;
    case ActionKind::request_explanation: {
      RequestExplanation r{require_agent(j, "agent"), {}};
      if (j.contains("subject")) r.subject = require_string(j, "subject");
      a.payload = std::move(r);
      allowed.insert(allowed.end(), {"agent", "subject"});
      break;
    }
    case ActionKind::end_case:
      a.payload = EndCase{require_string(j, "diagnosis")};
      allowed.push_back("diagnosis");
      break;
  }
  for (const auto& [key, value] : j.items())
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      malformed(key, fmt::format("unexpected field '{}' for {}", key, kind_name));
  return a;
}

LogEntry log_entry_from_json(const Json& j) {
  std::optional<StudentAction> action;
  if (const Json& a = require(j, "action"); !a.is_null()) action = action_from_json(a);
  std::optional<SystemEvent> event;
  if (const Json& ev = require(j, "event"); !ev.is_null()) {
    if (!ev.is_string()) malformed("event", "field 'event' must be a string or null");
    event = system_event_from_string(ev.get<std::string>());
    if (!event) malformed("event", "unknown system event");
  }
  const Json& r = require(j, "route");
  RouteDecision route{require_uint(r, "action_ref"), require_agent(r, "routed_to"), require_string(r, "reason"),
                      require_string(r, "rule_id")};
  const std::string status = require_string(j, "status");
  if (status != "ok" && status != "error") malformed("status", "field 'status' must be ok or error");
  return LogEntry{require_uint(j, "seq"), std::move(action), event, std::move(route),
                  response_from_json(require(j, "response")),
                  status == "ok" ? EntryStatus::ok : EntryStatus::error};
}

FeedbackReport report_from_json(const Json& j) {
  FeedbackReport r;
  r.session_id = require_string(j, "session_id");
  for (const auto& s : require(j, "item_scores")) {
    ItemScore item;
    item.item_id = require_string(s, "item_id");
    item.satisfied = static_cast<int>(require_uint(s, "satisfied"));
    item.required = static_cast<int>(require_uint(s, "required"));
    item.fraction = require_number(s, "fraction");
    item.weighted_points = require_number(s, "weighted_points");
    for (const auto& m : require(s, "matches"))
      item.matches.push_back({require_string(m, "matcher"), require(m, "matched").get<bool>(),
                              require_uint(m, "seq"), require_string(m, "decision_id")});
    r.item_scores.push_back(std::move(item));
  }
  r.total_score = require_number(j, "total_score");
  for (const auto& k : require(j, "key_factors")) {
    const std::string dir = require_string(k, "direction");
    r.key_factors.push_back({require_string(k, "item_id"),
                             dir == "strength" ? FactorDirection::strength : FactorDirection::improvement,
                             require_strings(k, "evidence")});
  }
  r.narrative = require_string(j, "narrative");
  r.explanation = explanation_from_json(require(j, "explanation"));
  return r;
}

Json envelope_ok(Json data) { return Json{{"ok", true}, {"data", std::move(data)}}; }

Json envelope_error(std::string_view code, std::string_view message, Json details) {
  return Json{{"ok", false},
              {"error", {{"code", std::string(code)}, {"message", std::string(message)}, {"details", std::move(details)}}}};
}

Json session_summary(const Session& s) {
  return Json{{"session_id", s.id()},
              {"case_id", s.case_id()},
              {"state", to_string(s.state())},
              {"entries", s.log().size()},
              {"findings", s.observations().size()},
              {"total_score", s.report() ? Json(s.report()->total_score) : Json(nullptr)},
              {"started", s.started()},
              {"ended", s.ended()}};
}

std::string export_session(const Session& s) {
  Json doc{{"format", kExportFormatVersion},
           {"session", session_summary(s)},
           {"case_id", s.case_id()},
           {"log", s.log()},
           {"report", optional_to_json(s.report())}};
  return doc.dump(2) + "\n";
}

std::vector<StudentAction> parse_action_script(std::string_view document) {
  Json doc = Json::parse(document, nullptr, false);
  if (doc.is_discarded()) malformed("document", "action script is not valid JSON");

  std::vector<StudentAction> actions;
  const Json* list = nullptr;
  bool from_log = false;
  if (doc.is_array()) {
    list = &doc;
  } else if (doc.is_object() && doc.contains("log")) {
    list = &doc["log"];
    from_log = true;
  } else if (doc.is_object() && doc.contains("actions")) {
    list = &doc["actions"];
  } else {
    malformed("actions", "expected an export document, {\"actions\": [...]}, or an array of actions");
  }
  if (!list->is_array()) malformed(from_log ? "log" : "actions", "expected an array");
  for (const auto& item : *list) {
    if (from_log) {
      const Json& a = require(item, "action");
      if (!a.is_null()) actions.push_back(action_from_json(a));
    } else {
      actions.push_back(action_from_json(item));
    }
  }
  return actions;
}

Json dashboard_view(const Session& s) {
  Json rows = Json::array();
  for (const auto& e : s.log()) {
    const auto& x = e.response.explanation();
    rows.push_back(Json{{"seq", e.seq},
                        {"decision_id", x.decision_id},
                        {"agent_id", to_string(x.agent_id)},
                        {"trigger", e.trigger_label()},
                        {"status", to_string(e.status)},
                        {"reason_codes", x.reason_codes},
                        {"rule_ids", x.rule_ids},
                        {"elapsed", x.elapsed}});
  }
  return Json{{"session", session_summary(s)}, {"rows", rows}, {"report", optional_to_json(s.report())}};
}

Json public_case_view(const ClinicalCase& c) {
  Json exams = Json::array();
  for (const auto& [id, e] : c.exam_findings) exams.push_back({{"exam_id", id}, {"label", e.label}});
  Json tests = Json::array();
  for (const auto& [id, t] : c.test_catalog)
    tests.push_back({{"test_id", id}, {"label", t.label}, {"modality", to_string(t.modality)}});
  Json interventions = Json::array();
  for (const auto& r : c.intervention_protocol)
    interventions.push_back({{"intervention_id", r.intervention_id}, {"label", r.label}});
  return Json{{"case_id", c.case_id},
              {"title", c.title},
              {"demographics",
               {{"age", c.demographics.age},
                {"sex", to_string(c.demographics.sex)},
                {"history", c.demographics.history}}},
              {"chief_complaint", c.chief_complaint},
              {"differential", c.differential},
              {"exams", exams},
              {"tests", tests},
              {"interventions", interventions}};
}

Json strip_timing(Json j) {
  if (j.is_object()) {
    for (const char* key : {"issued_at", "elapsed", "started", "ended"}) j.erase(key);
    for (auto& [key, value] : j.items()) value = strip_timing(std::move(value));
  } else if (j.is_array()) {
    for (auto& value : j) value = strip_timing(std::move(value));
  }
  return j;
}

}  // namespace clinsim
