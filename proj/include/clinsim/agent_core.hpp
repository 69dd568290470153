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

#pragma once

#include <array>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "clinsim/case_model.hpp"

namespace clinsim {

enum class AgentId { patient, physical_exam, diagnostic, intervention, evaluation, supervisor };

inline constexpr std::array<AgentId, 6> kAllAgents = {
    AgentId::patient,    AgentId::physical_exam, AgentId::diagnostic,
    AgentId::intervention, AgentId::evaluation,  AgentId::supervisor,
};

std::string_view to_string(AgentId id);
std::optional<AgentId> agent_id_from_string(std::string_view s);

enum class ExplanationKind {
  interaction_history,
  procedural,
  test_utility,
  guideline_rationale,
  rubric_based,
  scenario_flow,
};

std::string_view to_string(ExplanationKind k);
std::optional<ExplanationKind> explanation_kind_from_string(std::string_view s);

/// The explanation kind each agent emits.
ExplanationKind explanation_kind_for(AgentId id);

struct AgentPersona {
  AgentId agent_id = AgentId::patient;
  std::string display_name;
  std::string goal;
  std::string model_descriptor;
  std::vector<std::string> knowledge_base_refs;
  std::vector<ActionKind> decision_triggers;
  std::vector<ExplanationKind> explainability_profile;

  bool operator==(const AgentPersona&) const = default;
};

/// One persona per AgentId. Immutable once built.
class AgentRegistry {
 public:
  explicit AgentRegistry(std::array<AgentPersona, 6> personas);

  const AgentPersona& at(AgentId id) const { return personas_[static_cast<size_t>(id)]; }
  size_t size() const { return personas_.size(); }
  auto begin() const { return personas_.begin(); }
  auto end() const { return personas_.end(); }

  bool operator==(const AgentRegistry&) const = default;

 private:
  std::array<AgentPersona, 6> personas_;
};

AgentRegistry build_agent_registry(const ClinicalCase& c);

/// Goal, Model, Knowledge Base, Decision Triggers, Explainability, in that order.
std::string format_persona_card(const AgentPersona& persona);

struct Contribution {
  std::string feature;
  double weight = 0.0;

  bool operator==(const Contribution&) const = default;
};

struct ExplanationRecord {
  std::string decision_id;
  AgentId agent_id = AgentId::supervisor;
  ExplanationKind kind = ExplanationKind::scenario_flow;
  std::vector<std::string> reason_codes;
  std::vector<Contribution> contributions;
  std::vector<std::string> rule_ids;
  std::string narrative;
  /// Milliseconds spent producing the decision.
  double elapsed = 0.0;

  bool operator==(const ExplanationRecord&) const = default;

  /// reason_codes, contributions, or rule_ids is non-empty.
  bool has_content() const {
    return !reason_codes.empty() || !contributions.empty() || !rule_ids.empty();
  }
};

/// A reply from one agent. Cannot exist without an explanation with content.
class AgentResponse {
 public:
  /// Throws std::invalid_argument if the explanation has no content.
  AgentResponse(AgentId agent, std::string content, std::vector<FindingId> revealed,
                ExplanationRecord explanation);

  AgentId agent_id() const { return agent_; }
  const std::string& content() const { return content_; }
  const std::vector<FindingId>& revealed_findings() const { return revealed_; }
  const ExplanationRecord& explanation() const { return explanation_; }

  void stamp(std::string decision_id, double elapsed_ms);
  void set_content(std::string content) { content_ = std::move(content); }
  void set_narrative(std::string narrative) { explanation_.narrative = std::move(narrative); }
  void add_reason_code(std::string code) { explanation_.reason_codes.push_back(std::move(code)); }

  bool operator==(const AgentResponse&) const = default;

 private:
  AgentId agent_;
  std::string content_;
  std::vector<FindingId> revealed_;
  ExplanationRecord explanation_;
};

struct DisclosureViolation {
  std::string term;
  size_t position = 0;

  bool operator==(const DisclosureViolation&) const = default;
};

struct GuardResult {
  bool passed = true;
  std::string text;
  std::vector<DisclosureViolation> violations;
};

inline constexpr std::string_view kRedaction = "[withheld]";

/// Case-insensitive substring scan. On any hit every covered span is replaced
/// by "[withheld]". Terms must already be lowercase.
GuardResult guard_disclosure(std::string_view text, const std::vector<std::string>& forbidden_terms);

/// Input to a dialogue backend. `matched` is the script entry the script
/// matcher selected, or null when nothing matched.
struct DialogueRequest {
  const AgentPersona& persona;
  const ClinicalCase& clinical_case;
  std::string_view utterance;
  const SymptomScriptEntry* matched = nullptr;
};

class DialogueBackend {
 public:
  virtual ~DialogueBackend() = default;

  virtual std::string name() const = 0;
  /// Candidate response text. Callers run guard_disclosure on it.
  virtual std::string reply(const DialogueRequest& request) const = 0;
  /// May reword an evaluation narrative. Never sees scores.
  virtual std::string polish_narrative(std::string narrative) const { return narrative; }
};

inline constexpr std::string_view kNoMatchUtterance =
    "I'm sorry, I'm not sure what you mean. Could you ask me that another way?";

/// Deterministic: returns the matched entry's scripted text, or the fixed
/// fallback utterance.
class ScriptBackend final : public DialogueBackend {
 public:
  std::string name() const override { return "script"; }
  std::string reply(const DialogueRequest& request) const override;
};

/// Posts the request to an external text generator. Falls back to the script
/// text when the service is unreachable or answers with garbage.
class ExternalBackend final : public DialogueBackend {
 public:
  explicit ExternalBackend(std::string url);

  std::string name() const override { return "external:" + url_; }
  std::string reply(const DialogueRequest& request) const override;
  std::string polish_narrative(std::string narrative) const override;

 private:
  std::string url_;
  std::string host_;
  std::string path_;
};

/// "script" or "external:<url>". Throws Error(malformed_request) otherwise.
std::shared_ptr<const DialogueBackend> make_backend(std::string_view selector);

/// Reads CLINSIM_BACKEND; defaults to the script backend.
std::shared_ptr<const DialogueBackend> backend_from_environment();

}  // namespace clinsim
