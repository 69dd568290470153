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

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include "clinsim/agent_core.hpp"
#include "clinsim/case_model.hpp"

namespace clinsim {

/// Milliseconds since the Unix epoch.
using Timestamp = std::int64_t;

Timestamp now_ms();

struct AskPatient {
  std::string text;
  bool operator==(const AskPatient&) const = default;
};
struct RequestExam {
  std::string exam_id;
  bool operator==(const RequestExam&) const = default;
};
struct OrderTest {
  std::string test_id;
  bool operator==(const OrderTest&) const = default;
};
struct Intervene {
  std::string intervention_id;
  bool operator==(const Intervene&) const = default;
};
struct AskSupervisor {
  std::string text;
  bool operator==(const AskSupervisor&) const = default;
};
/// `subject` names what to explain: a disease for the diagnostic agent, an
/// exam, intervention, or rubric item for the others. May be empty.
struct RequestExplanation {
  AgentId agent = AgentId::supervisor;
  std::string subject;
  bool operator==(const RequestExplanation&) const = default;
};
struct EndCase {
  DiseaseId diagnosis;
  bool operator==(const EndCase&) const = default;
};

using ActionPayload = std::variant<AskPatient, RequestExam, OrderTest, Intervene, AskSupervisor,
                                   RequestExplanation, EndCase>;

struct StudentAction {
  ActionPayload payload;
  Timestamp issued_at = 0;

  ActionKind kind() const;
  /// The id or text argument of the action.
  std::string argument() const;
  /// "order_test:troponin"; free text is omitted for ask_* actions.
  std::string trigger_label() const;

  bool same_content(const StudentAction& other) const { return payload == other.payload; }
  bool operator==(const StudentAction&) const = default;
};

/// Entries the system writes on its own, without a student action.
enum class SystemEvent { session_start, evaluation_report };
std::string_view to_string(SystemEvent e);
std::optional<SystemEvent> system_event_from_string(std::string_view s);

struct RouteDecision {
  std::uint64_t action_ref = 0;  // seq of the entry carrying the action
  AgentId routed_to = AgentId::supervisor;
  std::string reason;
  std::string rule_id;

  bool operator==(const RouteDecision&) const = default;
};

enum class EntryStatus { ok, error };
std::string_view to_string(EntryStatus s);

struct LogEntry {
  std::uint64_t seq = 0;
  std::optional<StudentAction> action;
  std::optional<SystemEvent> event;
  RouteDecision route;
  AgentResponse response;
  EntryStatus status = EntryStatus::ok;

  bool is_student_action() const { return action.has_value(); }
  std::string trigger_label() const;

  bool operator==(const LogEntry&) const = default;
};

/// Equality ignoring action timestamps and explanation elapsed times.
bool equal_modulo_time(const LogEntry& a, const LogEntry& b);

}  // namespace clinsim
