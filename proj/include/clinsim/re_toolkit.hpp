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

// Requirements-engineering documents for explainability: personas,
// scenarios, user stories, requirements, and the traceability graph that
// ties them together.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "clinsim/agent_core.hpp"
#include "clinsim/errors.hpp"

namespace clinsim::re {

enum class HumanRole { medical_student, medical_educator };
std::string_view to_string(HumanRole r);

struct HumanPersona {
  std::string persona_id;
  std::string name;
  HumanRole role = HumanRole::medical_student;
  std::vector<std::string> goals;
  std::string knowledge_level;
};

struct AIPersonaSpec {
  std::string persona_id;
  AgentId agent_id = AgentId::patient;
  std::string name;
  /// Extra names a story may use for this persona ("AI patient", "Alex").
  std::vector<std::string> aliases;
  std::string role_goal;
  std::string model_architecture;
  std::string knowledge_base;
  std::string decision_triggers;
  std::string explainability_profile;
};

struct ScenarioDoc {
  std::string scenario_id;
  std::string title;
  /// Human persona ids, AI persona ids, or agent ids.
  std::vector<std::string> participants;
  std::vector<std::string> steps;
  /// 1-based indices into steps.
  std::vector<int> explainability_moments;
};

enum class Interrogative { why, what, how };
std::string_view to_string(Interrogative q);

struct XaiUserStory {
  std::string story_id;
  std::string human_persona_id;
  Interrogative question = Interrogative::why;
  AgentId ai_agent = AgentId::patient;
  std::string decision_clause;
  std::string goal_clause;
  int clinical_risk = 0;
  int learning_value = 0;
  int complexity = 0;

  bool operator==(const XaiUserStory&) const = default;
};

enum class RequirementKind { functional, non_functional };
std::string_view to_string(RequirementKind k);

struct RequirementSpec {
  std::string req_id;
  RequirementKind kind = RequirementKind::functional;
  std::string statement;
  std::string acceptance;
  std::vector<std::string> linked_stories;
};

/// A story document as stored on disk; the sentence is parsed on demand.
struct StoryDoc {
  std::string story_id;
  std::string text;
  int clinical_risk = 0;
  int learning_value = 0;
  int complexity = 0;
};

struct Corpus {
  std::vector<HumanPersona> humans;
  std::vector<AIPersonaSpec> ai_personas;
  std::vector<ScenarioDoc> scenarios;
  std::vector<StoryDoc> stories;
  std::vector<RequirementSpec> requirements;

  const HumanPersona* find_human(std::string_view id) const;
  const AIPersonaSpec* find_ai(std::string_view persona_or_agent_id) const;
};

/// Reads personas/, scenarios/, stories/, requirements/ (one JSON document
/// per file, loaded in file name order). Throws ParseError on malformed
/// documents and Error(io_error) when the directory is missing.
Corpus load_corpus(const std::string& dir);

/// Parses "As a <human>, I want to understand <why|what|how> the <ai>
/// <decision>, so that I can <goal>." Persona names match case-insensitively.
/// Throws ParseError whose path names the first missing slot ("human
/// persona", "question", "ai persona", "decision clause", "goal clause"), or
/// Error(unknown_persona).
XaiUserStory parse_user_story(std::string_view text, const Corpus& corpus);

/// Inverse of parse_user_story for the sentence fields.
std::string render_user_story(const XaiUserStory& story, const Corpus& corpus);

/// Parses a stored story and attaches its id and ratings.
XaiUserStory resolve_story(const StoryDoc& doc, const Corpus& corpus);

struct PriorityWeights {
  double clinical_risk = 0.5;
  double learning_value = 0.3;
  double complexity = 0.2;  // applied to (6 - complexity)
};

double story_priority(const XaiUserStory& story, const PriorityWeights& weights = {});

struct RankedStory {
  XaiUserStory story;
  double priority = 0.0;
};

/// Highest priority first, ties by story id.
std::vector<RankedStory> prioritize_stories(std::vector<XaiUserStory> stories,
                                            const PriorityWeights& weights = {});

enum class NodeKind { human_persona, ai_persona, scenario, story, requirement };
enum class EdgeKind { persona_story, story_requirement, persona_scenario };

struct TraceNode {
  NodeKind kind;
  std::string id;
  bool operator==(const TraceNode&) const = default;
};

struct TraceEdge {
  EdgeKind kind;
  std::string from;
  std::string to;
  bool operator==(const TraceEdge&) const = default;
};

struct TraceGraph {
  std::vector<TraceNode> nodes;
  std::vector<TraceEdge> edges;
};

/// Edges are only added between resolvable nodes.
TraceGraph build_trace_graph(const Corpus& corpus);

/// R1 story personas resolve; R2 every story is linked by a requirement;
/// R3 every requirement links at least one existing story; R4 every agent
/// has an AI persona document; R5 every AI persona takes part in a
/// scenario; R6 non-functional statements carry a numeric bound. G1 covers
/// document integrity (unparseable stories, dangling scenario participants,
/// empty persona attributes, bad ratings). Sorted by path.
std::vector<Diagnostic> validate_traceability(const Corpus& corpus);

}  // namespace clinsim::re
