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

#include "clinsim/interaction_log.hpp"

#include <chrono>

namespace clinsim {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

LogEntry without_time(LogEntry e) {
  if (e.action) e.action->issued_at = 0;
  e.response.stamp(e.response.explanation().decision_id, 0.0);
  return e;
}

}  // namespace

Timestamp now_ms() {
  using namespace std::chrono;
  return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

ActionKind StudentAction::kind() const {
  // Payload alternatives are declared in ActionKind order.
  return static_cast<ActionKind>(payload.index());
}

std::string StudentAction::argument() const {
  return std::visit(Overloaded{
                        [](const AskPatient& a) { return a.text; },
                        [](const RequestExam& a) { return a.exam_id; },
                        [](const OrderTest& a) { return a.test_id; },
                        [](const Intervene& a) { return a.intervention_id; },
                        [](const AskSupervisor& a) { return a.text; },
                        [](const RequestExplanation& a) {
                          std::string s(to_string(a.agent));
                          if (!a.subject.empty()) s += "/" + a.subject;
                          return s;
                        },
                        [](const EndCase& a) { return a.diagnosis; },
                    },
                    payload);
}

std::string StudentAction::trigger_label() const {
  const std::string kind_name(to_string(kind()));
  if (std::holds_alternative<AskPatient>(payload) || std::holds_alternative<AskSupervisor>(payload))
    return kind_name;
  return kind_name + ":" + argument();
}

std::string_view to_string(SystemEvent e) {
  return e == SystemEvent::session_start ? "session_start" : "evaluation_report";
}

std::optional<SystemEvent> system_event_from_string(std::string_view s) {
  if (s == "session_start") return SystemEvent::session_start;
  if (s == "evaluation_report") return SystemEvent::evaluation_report;
  return std::nullopt;
}

std::string_view to_string(EntryStatus s) { return s == EntryStatus::ok ? "ok" : "error"; }

std::string LogEntry::trigger_label() const {
  if (action) return action->trigger_label();
  if (event) return "system:" + std::string(to_string(*event));
  return "system";
}

bool equal_modulo_time(const LogEntry& a, const LogEntry& b) {
  return without_time(a) == without_time(b);
}

}  // namespace clinsim
