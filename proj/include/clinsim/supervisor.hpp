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

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "clinsim/agent_core.hpp"
#include "clinsim/case_model.hpp"
#include "clinsim/clinical_agents.hpp"
#include "clinsim/evaluation.hpp"
#include "clinsim/interaction_log.hpp"

namespace clinsim {

enum class SessionState { created, active, concluded, evaluated };
std::string_view to_string(SessionState s);

/// Only created->active->concluded->evaluated is legal.
bool is_legal_transition(SessionState from, SessionState to);

class InvalidCaseError : public Error {
 public:
  InvalidCaseError(const std::string& case_id, std::vector<Diagnostic> diagnostics);
  const std::vector<Diagnostic>& diagnostics() const noexcept { return diagnostics_; }

 private:
  std::vector<Diagnostic> diagnostics_;
};

struct StateTransition {
  SessionState from;
  SessionState to;
  bool operator==(const StateTransition&) const = default;
};

/// "d<seq>"; unique within a session and stable across replays.
std::string decision_id_for(std::uint64_t seq);

/// Agent each action kind is routed to. request_explanation goes to the
/// agent it names.
AgentId route_target(const StudentAction& action);

/// One simulated encounter. Single writer; the store serializes access.
class Session {
 public:
  /// Validates the case, builds the agent registry, and logs the start entry.
  /// Throws InvalidCaseError when validation reports anything.
  static Session start(std::string session_id, std::shared_ptr<const ClinicalCase> clinical_case,
                       std::shared_ptr<const DialogueBackend> backend = nullptr);

  /// Routes, dispatches, and appends. Agent failures become error entries.
  /// end_case concludes the session and appends the report entry as well.
  /// Throws Error(session_not_active) outside the active state.
  const LogEntry& route_action(StudentAction action);

  /// Case progression summary. Does not log.
  AgentResponse supervisor_reply(std::string_view text) const;

  /// Logs the diagnosis, scores the transcript, and attaches the report.
  /// Throws Error(session_not_active) or Error(unknown_disease); nothing is
  /// logged on failure.
  void conclude(const DiseaseId& submitted_diagnosis, Timestamp issued_at = 0);

  const std::string& id() const { return id_; }
  const std::string& case_id() const { return case_->case_id; }
  const ClinicalCase& clinical_case() const { return *case_; }
  SessionState state() const { return state_; }
  const ObservationSet& observations() const { return observations_; }
  const std::vector<LogEntry>& log() const { return log_; }
  const AgentRegistry& registry() const { return registry_; }
  const std::optional<FeedbackReport>& report() const { return report_; }
  const std::vector<StateTransition>& transitions() const { return transitions_; }
  Timestamp started() const { return started_; }
  Timestamp ended() const { return ended_; }

  /// Log entries with seq > since.
  std::vector<LogEntry> log_since(std::uint64_t since) const;

 private:
  Session(std::string id, std::shared_ptr<const ClinicalCase> c,
          std::shared_ptr<const DialogueBackend> backend);

  void transition(SessionState to);
  AgentResponse dispatch(const StudentAction& action, std::uint64_t seq);
  AgentResponse explain_on_request(const RequestExplanation& request) const;
  AgentResponse progression_reply(std::string_view text, bool after_conclusion) const;
  const LogEntry& append(std::optional<StudentAction> action, std::optional<SystemEvent> event,
                         RouteDecision route, AgentResponse response, EntryStatus status,
                         double elapsed_ms);
  std::vector<PatientTurn> patient_history() const;

  std::string id_;
  std::shared_ptr<const ClinicalCase> case_;
  std::shared_ptr<const DialogueBackend> backend_;
  AgentRegistry registry_;
  SessionState state_ = SessionState::created;
  ObservationSet observations_;
  std::vector<LogEntry> log_;
  std::optional<FeedbackReport> report_;
  std::vector<StateTransition> transitions_;
  Timestamp started_ = 0;
  Timestamp ended_ = 0;
};

/// Loaded cases by id. Cases are immutable and shared across sessions.
class CaseLibrary {
 public:
  void add(ClinicalCase c);
  /// Loads every *.json file; returns the number loaded.
  size_t load_directory(const std::string& dir);
  std::shared_ptr<const ClinicalCase> find(std::string_view case_id) const;
  std::vector<std::shared_ptr<const ClinicalCase>> all() const;

 private:
  std::map<std::string, std::shared_ptr<const ClinicalCase>, std::less<>> cases_;
};

/// Concurrent session registry. Calls for one session run one at a time in
/// lock order; different sessions proceed in parallel.
class SessionStore {
 public:
  explicit SessionStore(std::shared_ptr<const CaseLibrary> cases,
                        std::shared_ptr<const DialogueBackend> backend = nullptr);

  /// Session ids are "<case_id>-<n>" with n counting up from 1 per store.
  /// Throws Error(unknown_case) or InvalidCaseError.
  std::string start_session(std::string_view case_id);

  /// Runs `fn` with exclusive access. Throws Error(unknown_session).
  void with_session(std::string_view session_id, const std::function<void(Session&)>& fn);
  void with_session(std::string_view session_id,
                    const std::function<void(const Session&)>& fn) const;

  bool contains(std::string_view session_id) const;
  std::vector<std::string> session_ids() const;
  const CaseLibrary& cases() const { return *cases_; }

 private:
  struct Slot {
    std::mutex mutex;
    Session session;
    explicit Slot(Session s) : session(std::move(s)) {}
  };
  std::shared_ptr<Slot> slot(std::string_view session_id) const;

  std::shared_ptr<const CaseLibrary> cases_;
  std::shared_ptr<const DialogueBackend> backend_;
  mutable std::shared_mutex mutex_;
  std::map<std::string, std::shared_ptr<Slot>, std::less<>> sessions_;
  std::map<std::string, std::uint64_t, std::less<>> counters_;
};

/// Runs `actions` in a fresh session over `clinical_case`. Actions after the
/// session leaves the active state are ignored.
Session replay_actions(std::string session_id, std::shared_ptr<const ClinicalCase> clinical_case,
                       std::span<const StudentAction> actions,
                       std::shared_ptr<const DialogueBackend> backend = nullptr);

}  // namespace clinsim
