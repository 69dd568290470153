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

#include "clinsim/agent_core.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <stdexcept>

#include <fmt/format.h>

#include "httplib.h"
#include "json.hpp"

namespace clinsim {

namespace {

constexpr std::string_view kAgentNames[] = {"patient",      "physical_exam", "diagnostic",
                                            "intervention", "evaluation",    "supervisor"};

constexpr std::string_view kExplanationNames[] = {"interaction_history", "procedural",
                                                  "test_utility",        "guideline_rationale",
                                                  "rubric_based",        "scenario_flow"};

std::string_view capability_text(ExplanationKind k) {
  switch (k) {
    case ExplanationKind::interaction_history:
      return "cites the script keywords a question matched and related earlier questions";
    case ExplanationKind::procedural:
      return "lists the body areas each exam covered and the findings it returned";
    case ExplanationKind::test_utility:
      return "shows signed evidence weights linking test results to candidate diseases";
    case ExplanationKind::guideline_rationale:
      return "cites the protocol rule behind each intervention and flags safety concerns with reason codes";
    case ExplanationKind::rubric_based:
      return "shows which rubric events matched and the key factors behind the score";
    case ExplanationKind::scenario_flow:
      return "explains scenario-flow decisions: routing of each action and case progression";
  }
  return "";
}

}  // namespace

std::string_view to_string(AgentId id) { return kAgentNames[static_cast<size_t>(id)]; }

std::optional<AgentId> agent_id_from_string(std::string_view s) {
  for (auto id : kAllAgents)
    if (to_string(id) == s) return id;
  return std::nullopt;
}

std::string_view to_string(ExplanationKind k) { return kExplanationNames[static_cast<size_t>(k)]; }

std::optional<ExplanationKind> explanation_kind_from_string(std::string_view s) {
  for (size_t i = 0; i < std::size(kExplanationNames); ++i)
    if (kExplanationNames[i] == s) return static_cast<ExplanationKind>(i);
  return std::nullopt;
}

ExplanationKind explanation_kind_for(AgentId id) {
  switch (id) {
    case AgentId::patient: return ExplanationKind::interaction_history;
    case AgentId::physical_exam: return ExplanationKind::procedural;
    case AgentId::diagnostic: return ExplanationKind::test_utility;
    case AgentId::intervention: return ExplanationKind::guideline_rationale;
    case AgentId::evaluation: return ExplanationKind::rubric_based;
    case AgentId::supervisor: return ExplanationKind::scenario_flow;
  }
  return ExplanationKind::scenario_flow;
}

AgentRegistry::AgentRegistry(std::array<AgentPersona, 6> personas) : personas_(std::move(personas)) {
  for (size_t i = 0; i < personas_.size(); ++i) {
    if (personas_[i].agent_id != static_cast<AgentId>(i))
      throw std::invalid_argument("registry personas must be ordered by agent id");
    if (personas_[i].agent_id != AgentId::evaluation && personas_[i].decision_triggers.empty())
      throw std::invalid_argument(
          fmt::format("persona '{}' has no decision triggers", to_string(personas_[i].agent_id)));
  }
}

AgentRegistry build_agent_registry(const ClinicalCase& c) {
  const std::string ref = "case:" + c.case_id;
  auto persona = [](AgentId id, std::string name, std::string goal, std::string model,
                    std::vector<std::string> kb, std::vector<ActionKind> triggers) {
    return AgentPersona{id,
                        std::move(name),
                        std::move(goal),
                        std::move(model),
                        std::move(kb),
                        std::move(triggers),
                        {explanation_kind_for(id)}};
  };
  return AgentRegistry({
      persona(AgentId::patient, "Alex",
              "Answer the student's questions about symptoms and history from the case script, "
              "without disclosing the underlying diagnosis before the case concludes.",
              "Keyword-matched case script behind a pluggable dialogue backend",
              {ref + "/symptom_script", ref + "/demographics"}, {ActionKind::ask_patient}),
      persona(AgentId::physical_exam, "Dr. Eva",
              "Perform requested physical examinations and return structured findings, "
              "including vital signs.",
              "Rule-based exam table lookup", {ref + "/exam_findings"},
              {ActionKind::request_exam}),
      persona(AgentId::diagnostic, "Brian",
              "Order investigations, report results immediately, and support differential "
              "reasoning.",
              "Test catalog with additive signed-weight evidence scoring",
              {ref + "/test_catalog", ref + "/evidence_links"},
              {ActionKind::order_test, ActionKind::request_explanation}),
      persona(AgentId::intervention, "Clair",
              "Review therapeutic choices against the case protocol, simulate their outcome, "
              "and flag unsafe orders.",
              "Rule-based treatment protocol engine",
              {ref + "/intervention_protocol", "session:interaction_log"},
              {ActionKind::intervene}),
      persona(AgentId::evaluation, "Dr. Eval",
              "Score the completed interaction log against the educator rubric and produce a "
              "structured feedback report.",
              "Deterministic rubric matcher; the dialogue backend may reword the narrative only",
              {ref + "/rubric", "session:interaction_log"}, {ActionKind::end_case}),
      persona(AgentId::supervisor, "Sam",
              "Run the session state machine, route each student action to exactly one agent, "
              "and report case progress.",
              "Structural routing table over action kinds",
              {"session:interaction_log", "session:agent_status", "routing_table"},
              {ActionKind::ask_supervisor}),
  });
}

std::string format_persona_card(const AgentPersona& p) {
  std::string out = fmt::format("{} ({})\n", p.display_name, to_string(p.agent_id));
  out += fmt::format("Goal: {}\n", p.goal);
  out += fmt::format("Model: {}\n", p.model_descriptor);
  out += "Knowledge Base: ";
  for (size_t i = 0; i < p.knowledge_base_refs.size(); ++i)
    out += (i ? ", " : "") + p.knowledge_base_refs[i];
  out += "\nDecision Triggers: ";
  for (size_t i = 0; i < p.decision_triggers.size(); ++i)
    out += fmt::format("{}{}", i ? ", " : "", to_string(p.decision_triggers[i]));
  out += "\nExplainability: ";
  for (size_t i = 0; i < p.explainability_profile.size(); ++i)
    out += fmt::format("{}{} ({})", i ? "; " : "", to_string(p.explainability_profile[i]),
                       capability_text(p.explainability_profile[i]));
  out += "\n";
  return out;
}

AgentResponse::AgentResponse(AgentId agent, std::string content, std::vector<FindingId> revealed,
                             ExplanationRecord explanation)
    : agent_(agent),
      content_(std::move(content)),
      revealed_(std::move(revealed)),
      explanation_(std::move(explanation)) {
  if (!explanation_.has_content())
    throw std::invalid_argument("agent response requires an explanation with content");
  if (explanation_.elapsed < 0.0) throw std::invalid_argument("elapsed must be non-negative");
  explanation_.agent_id = agent_;
}

void AgentResponse::stamp(std::string decision_id, double elapsed_ms) {
  explanation_.decision_id = std::move(decision_id);
  explanation_.elapsed = std::max(0.0, elapsed_ms);
}

GuardResult guard_disclosure(std::string_view text, const std::vector<std::string>& forbidden_terms) {
  std::string folded(text);
  std::transform(folded.begin(), folded.end(), folded.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });

  GuardResult result;
  std::vector<bool> covered(text.size(), false);
  for (const auto& term : forbidden_terms) {
    if (term.empty()) continue;
    for (size_t pos = folded.find(term); pos != std::string::npos; pos = folded.find(term, pos + 1)) {
      result.violations.push_back({term, pos});
      std::fill(covered.begin() + pos, covered.begin() + pos + term.size(), true);
    }
  }
  if (result.violations.empty()) {
    result.text = std::string(text);
    return result;
  }
  result.passed = false;
  std::sort(result.violations.begin(), result.violations.end(),
            [](const auto& a, const auto& b) { return std::tie(a.position, a.term) < std::tie(b.position, b.term); });
  for (size_t i = 0; i < text.size();) {
    if (!covered[i]) {
      result.text += text[i++];
      continue;
    }
    result.text += kRedaction;
    while (i < text.size() && covered[i]) ++i;
  }
  return result;
}

std::string ScriptBackend::reply(const DialogueRequest& request) const {
  if (request.matched == nullptr) return std::string(kNoMatchUtterance);
  return request.matched->response_text;
}

ExternalBackend::ExternalBackend(std::string url) : url_(std::move(url)) {
  // scheme://host[:port][/path]
  const auto scheme_end = url_.find("://");
  if (scheme_end == std::string::npos)
    throw Error(ErrorCode::malformed_request, fmt::format("backend url '{}' lacks a scheme", url_), url_);
  const auto path_start = url_.find('/', scheme_end + 3);
  host_ = url_.substr(0, path_start);
  path_ = path_start == std::string::npos ? "/" : url_.substr(path_start);
}

std::string ExternalBackend::reply(const DialogueRequest& request) const {
  const std::string fallback = ScriptBackend().reply(request);
  nlohmann::json body{{"agent_id", to_string(request.persona.agent_id)},
                      {"case_id", request.clinical_case.case_id},
                      {"utterance", std::string(request.utterance)},
                      {"script_text", fallback}};
  httplib::Client client(host_);
  client.set_connection_timeout(2);
  client.set_read_timeout(10);
  auto res = client.Post(path_, body.dump(), "application/json");
  if (!res || res->status != 200) return fallback;
  auto parsed = nlohmann::json::parse(res->body, nullptr, /*allow_exceptions=*/false);
  if (!parsed.is_object() || !parsed.contains("text") || !parsed["text"].is_string()) return fallback;
  return parsed["text"].get<std::string>();
}

std::string ExternalBackend::polish_narrative(std::string narrative) const {
  nlohmann::json body{{"task", "polish_narrative"}, {"text", narrative}};
  httplib::Client client(host_);
  client.set_connection_timeout(2);
  client.set_read_timeout(10);
  auto res = client.Post(path_, body.dump(), "application/json");
  if (!res || res->status != 200) return narrative;
  auto parsed = nlohmann::json::parse(res->body, nullptr, false);
  if (!parsed.is_object() || !parsed.contains("text") || !parsed["text"].is_string()) return narrative;
  return parsed["text"].get<std::string>();
}

std::shared_ptr<const DialogueBackend> make_backend(std::string_view selector) {
  if (selector.empty() || selector == "script") return std::make_shared<ScriptBackend>();
  constexpr std::string_view kExternal = "external:";
  if (selector.substr(0, kExternal.size()) == kExternal)
    return std::make_shared<ExternalBackend>(std::string(selector.substr(kExternal.size())));
  throw Error(ErrorCode::malformed_request,
              fmt::format("unknown dialogue backend '{}'; expected 'script' or 'external:<url>'", selector),
              std::string(selector));
}

std::shared_ptr<const DialogueBackend> backend_from_environment() {
  const char* selector = std::getenv("CLINSIM_BACKEND");
  return make_backend(selector ? selector : "script");
}

}  // namespace clinsim
