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

#include "clinsim/supervisor.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <map>
#include <stdexcept>

#include <fmt/format.h>

namespace clinsim {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

std::string agent_noun(AgentId id) {
  switch (id) {
    case AgentId::patient: return "the patient agent";
    case AgentId::physical_exam: return "the physical exam agent";
    case AgentId::diagnostic: return "the diagnostic agent";
    case AgentId::intervention: return "the intervention agent";
    case AgentId::evaluation: return "the evaluation agent";
    case AgentId::supervisor: return "the supervisor";
  }
  return "the supervisor";
}

std::string route_rule_id(const StudentAction& action) {
  std::string id = fmt::format("route.{}", to_string(action.kind()));
  if (const auto* req = std::get_if<RequestExplanation>(&action.payload))
    id += fmt::format(".{}", to_string(req->agent));
  return id;
}

AgentResponse error_response(AgentId agent, const Error& e) {
  ExplanationRecord x;
  x.kind = explanation_kind_for(agent);
  x.reason_codes.push_back(std::string(to_string(e.code())));
  if (!e.detail().empty()) x.reason_codes.push_back("subject:" + e.detail());
  x.rule_ids.push_back(fmt::format("error.{}", to_string(e.code())));
  x.narrative = fmt::format("{} could not act on the request: {}.", agent_noun(agent), e.what());
  return AgentResponse(agent, fmt::format("Request not completed: {}.", e.what()), {}, std::move(x));
}

void redact_strings(std::vector<std::string>& items, const std::vector<std::string>& terms) {
  for (auto& s : items) s = guard_disclosure(s, terms).text;
}

// Rubric matchers name the expected diagnosis, so provisional evaluation
// explanations are redacted field by field.
void redact_record(ExplanationRecord& e, const std::vector<std::string>& terms) {
  redact_strings(e.reason_codes, terms);
  redact_strings(e.rule_ids, terms);
  for (auto& c : e.contributions) c.feature = guard_disclosure(c.feature, terms).text;
  e.narrative = guard_disclosure(e.narrative, terms).text;
}

}  // namespace

std::string_view to_string(SessionState s) {
  switch (s) {
    case SessionState::created: return "created";
    case SessionState::active: return "active";
    case SessionState::concluded: return "concluded";
    case SessionState::evaluated: return "evaluated";
  }
  return "created";
}

bool is_legal_transition(SessionState from, SessionState to) {
  return static_cast<int>(to) == static_cast<int>(from) + 1;
}

InvalidCaseError::InvalidCaseError(const std::string& case_id, std::vector<Diagnostic> diagnostics)
    : Error(ErrorCode::invalid_case,
            fmt::format("case '{}' failed validation with {} diagnostic(s)", case_id, diagnostics.size()),
            case_id),
      diagnostics_(std::move(diagnostics)) {}

std::string decision_id_for(std::uint64_t seq) { return fmt::format("d{}", seq); }

AgentId route_target(const StudentAction& action) {
  switch (action.kind()) {
    case ActionKind::ask_patient: return AgentId::patient;
    case ActionKind::request_exam: return AgentId::physical_exam;
    case ActionKind::order_test: return AgentId::diagnostic;
    case ActionKind::intervene: return AgentId::intervention;
    case ActionKind::ask_supervisor: return AgentId::supervisor;
    case ActionKind::request_explanation: return std::get<RequestExplanation>(action.payload).agent;
    case ActionKind::end_case: return AgentId::evaluation;
  }
  return AgentId::supervisor;
}

Session::Session(std::string id, std::shared_ptr<const ClinicalCase> c,
                 std::shared_ptr<const DialogueBackend> backend)
    : id_(std::move(id)),
      case_(std::move(c)),
      backend_(backend ? std::move(backend) : std::make_shared<ScriptBackend>()),
      registry_(build_agent_registry(*case_)) {}

Session Session::start(std::string session_id, std::shared_ptr<const ClinicalCase> clinical_case,
                       std::shared_ptr<const DialogueBackend> backend) {
  if (!clinical_case) throw std::invalid_argument("session requires a case");
  auto diags = validate_case(*clinical_case);
  if (!diags.empty()) throw InvalidCaseError(clinical_case->case_id, std::move(diags));

  const auto t0 = Clock::now();
  Session s(std::move(session_id), std::move(clinical_case), std::move(backend));
  s.started_ = now_ms();
  s.transition(SessionState::active);

  ExplanationRecord e;
  e.kind = ExplanationKind::scenario_flow;
  e.reason_codes.push_back("case:" + s.case_->case_id);
  for (const auto& persona : s.registry_) e.reason_codes.push_back(fmt::format("initialized:{}", to_string(persona.agent_id)));
  e.rule_ids.push_back("lifecycle.created_to_active");
  e.narrative = fmt::format("The supervisor opened case {} and initialized all {} agents.", s.case_->case_id,
                            s.registry_.size());
  AgentResponse response(AgentId::supervisor,
                         fmt::format("New case: {}. Chief complaint: {}.", s.case_->title, s.case_->chief_complaint),
                         {}, std::move(e));
  s.append(std::nullopt, SystemEvent::session_start,
           RouteDecision{0, AgentId::supervisor, "session start initializes every agent", "route.session_start"},
           std::move(response), EntryStatus::ok, ms_since(t0));
  return s;
}

void Session::transition(SessionState to) {
  if (!is_legal_transition(state_, to))
    throw std::logic_error(fmt::format("illegal transition {} -> {}", to_string(state_), to_string(to)));
  transitions_.push_back({state_, to});
  state_ = to;
}

const LogEntry& Session::append(std::optional<StudentAction> action, std::optional<SystemEvent> event,
                                RouteDecision route, AgentResponse response, EntryStatus status,
                                double elapsed_ms) {
  const std::uint64_t seq = log_.size() + 1;
  if (route.action_ref == 0) route.action_ref = seq;
  response.stamp(decision_id_for(seq), elapsed_ms);

  GuardResult content = guard_disclosure(response.content(), case_->forbidden_terms);
  GuardResult narrative = guard_disclosure(response.explanation().narrative, case_->forbidden_terms);
  if (!content.passed || !narrative.passed) {
    const auto& codes = response.explanation().reason_codes;
    if (std::find(codes.begin(), codes.end(), "disclosure_redacted") == codes.end())
      response.add_reason_code("disclosure_redacted");
    response.set_content(std::move(content.text));
    response.set_narrative(std::move(narrative.text));
  }
  if (status == EntryStatus::ok) observations_.record(response.revealed_findings(), decision_id_for(seq));

  log_.push_back(LogEntry{seq, std::move(action), event, std::move(route), std::move(response), status});
  return log_.back();
}

std::vector<PatientTurn> Session::patient_history() const {
  std::vector<PatientTurn> turns;
  for (const auto& entry : log_) {
    if (!entry.action || entry.status != EntryStatus::ok) continue;
    const auto* ask = std::get_if<AskPatient>(&entry.action->payload);
    if (ask == nullptr) continue;
    PatientTurn turn{entry.response.explanation().decision_id, ask->text, {}};
    for (const auto& code : entry.response.explanation().reason_codes)
      if (code.rfind("entry:", 0) == 0) turn.entry_id = code.substr(6);
    turns.push_back(std::move(turn));
  }
  return turns;
}

AgentResponse Session::progression_reply(std::string_view /*text*/, bool after_conclusion) const {
  std::map<ActionKind, int> counts;
  for (auto k : kAllActionKinds) counts[k] = 0;
  for (const auto& entry : log_)
    if (entry.action) ++counts[entry.action->kind()];

  const size_t discoverable = case_->discoverable_findings().size();
  std::string phase;
  std::string focus;
  if (after_conclusion) {
    phase = "concluded";
    focus = "review the feedback report";
  } else if (counts[ActionKind::ask_patient] == 0) {
    phase = "history";
    focus = "take a history from the patient";
  } else if (counts[ActionKind::request_exam] == 0) {
    phase = "exam";
    focus = "examine the patient";
  } else if (counts[ActionKind::order_test] == 0) {
    phase = "tests";
    focus = "order investigations";
  } else if (counts[ActionKind::intervene] == 0) {
    phase = "intervention";
    focus = "decide on initial management";
  } else {
    phase = "ready_to_conclude";
    focus = "submit a final diagnosis when ready";
  }

  ExplanationRecord e;
  e.kind = ExplanationKind::scenario_flow;
  for (auto k : kAllActionKinds) e.reason_codes.push_back(fmt::format("count.{}={}", to_string(k), counts[k]));
  e.reason_codes.push_back(fmt::format("findings={}/{}", observations_.size(), discoverable));
  e.reason_codes.push_back("phase=" + phase);
  e.rule_ids.push_back("progress.phase_order");
  e.narrative = fmt::format(
      "So far: {} patient question(s), {} exam(s), {} test(s), {} intervention(s). Findings gathered: {} of {}. "
      "Next: {}.",
      counts[ActionKind::ask_patient], counts[ActionKind::request_exam], counts[ActionKind::order_test],
      counts[ActionKind::intervene], observations_.size(), discoverable, focus);
  std::string content = e.narrative;
  return AgentResponse(AgentId::supervisor, std::move(content), {}, std::move(e));
}

AgentResponse Session::supervisor_reply(std::string_view text) const {
  AgentResponse r = progression_reply(text, state_ != SessionState::active);
  GuardResult g = guard_disclosure(r.content(), case_->forbidden_terms);
  if (!g.passed) {
    r.set_content(std::move(g.text));
    r.set_narrative(guard_disclosure(r.explanation().narrative, case_->forbidden_terms).text);
    r.add_reason_code("disclosure_redacted");
  }
  return r;
}

AgentResponse Session::explain_on_request(const RequestExplanation& request) const {
  const ClinicalCase& c = *case_;
  const std::string& subject = request.subject;
  switch (request.agent) {
    case AgentId::patient: {
      ExplanationRecord e;
      const auto history = patient_history();
      for (const auto& turn : history)
        e.reason_codes.push_back(fmt::format("question:{}:{}", turn.decision_id,
                                             turn.entry_id.empty() ? "no_script_match" : turn.entry_id));
      if (history.empty()) e.reason_codes.push_back("no_questions_yet");
      e.rule_ids.push_back("history.patient");
      e.narrative = fmt::format("The patient has answered {} question(s); each answer came from the case script.",
                                history.size());
      return AgentResponse(AgentId::patient, e.narrative, {}, std::move(e));
    }
    case AgentId::physical_exam: {
      ExplanationRecord e;
      std::vector<std::string> targets;
      if (!subject.empty()) {
        if (!c.exam_findings.contains(subject))
          throw Error(ErrorCode::unknown_exam, fmt::format("unknown exam '{}'", subject), subject);
        targets.push_back(subject);
      } else {
        for (const auto& entry : log_)
          if (entry.status == EntryStatus::ok && entry.action)
            if (const auto* ex = std::get_if<RequestExam>(&entry.action->payload))
              if (std::find(targets.begin(), targets.end(), ex->exam_id) == targets.end())
                targets.push_back(ex->exam_id);
      }
      if (targets.empty()) e.reason_codes.push_back("no_exams_yet");
      for (const auto& id : targets) {
        const auto& exam = c.exam_findings.at(id);
        bool performed = false;
        for (const auto& entry : log_)
          if (entry.status == EntryStatus::ok && entry.action &&
              entry.action->same_content(StudentAction{RequestExam{id}}))
            performed = true;
        e.reason_codes.push_back(fmt::format("{}:{}", performed ? "performed" : "not_performed", id));
        for (const auto& area : exam.coverage) e.reason_codes.push_back("coverage:" + area);
        e.rule_ids.push_back("exam." + id);
      }
      e.narrative = fmt::format("Explained {} exam(s) by the body areas they cover.", targets.size());
      return AgentResponse(AgentId::physical_exam, e.narrative, {}, std::move(e));
    }
    case AgentId::diagnostic: {
      std::string disease = subject;
      if (disease.empty()) disease = score_evidence(c, observations_).front().disease;
      ExplanationRecord e = explain_diagnosis(c, observations_, disease);
      const std::string content = fmt::format("Evidence review for {}.", disease);
      return AgentResponse(AgentId::diagnostic, content, {}, std::move(e));
    }
    case AgentId::intervention: {
      if (subject.empty())
        throw Error(ErrorCode::missing_subject, "name an intervention to explain", "subject");
      const InterventionRule* rule = c.find_intervention(subject);
      if (rule == nullptr)
        throw Error(ErrorCode::unknown_intervention, fmt::format("unknown intervention '{}'", subject), subject);
      const auto a = assess_intervention(*rule, observations_);
      ExplanationRecord e;
      e.reason_codes.push_back(fmt::format("status:{}", to_string(a.status)));
      for (const auto& f : a.contraindicating) e.reason_codes.push_back("contraindicated_by:" + f);
      for (const auto& f : a.missing) e.reason_codes.push_back("missing:" + f);
      e.rule_ids.push_back(protocol_rule_id(rule->intervention_id));
      e.narrative = fmt::format("{} is currently {} under the protocol.", rule->label, to_string(a.status));
      return AgentResponse(AgentId::intervention, e.narrative, {}, std::move(e));
    }
    case AgentId::evaluation: {
      FeedbackReport provisional = score_transcript(c, log_);
      provisional.session_id = id_;
      ExplanationRecord e =
          subject.empty() ? provisional.explanation : explain_evaluation(provisional, subject);
      redact_record(e, c.forbidden_terms);
      const std::string content =
          fmt::format("Provisional rubric score: {:.1f}%.", provisional.total_score * 100.0);
      return AgentResponse(AgentId::evaluation, content, {}, std::move(e));
    }
    case AgentId::supervisor:
      return progression_reply(subject, false);
  }
  throw Error(ErrorCode::malformed_request, "unknown agent");
}

AgentResponse Session::dispatch(const StudentAction& action, std::uint64_t /*seq*/) {
  const ClinicalCase& c = *case_;
  return std::visit(
      [&](const auto& p) -> AgentResponse {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, AskPatient>) {
          const auto history = patient_history();
          return patient_reply(c, observations_, p.text, history, backend_.get());
        } else if constexpr (std::is_same_v<T, RequestExam>) {
          return exam_perform(c, observations_, p.exam_id);
        } else if constexpr (std::is_same_v<T, OrderTest>) {
          return order_test(c, observations_, p.test_id);
        } else if constexpr (std::is_same_v<T, Intervene>) {
          return apply_intervention(c, observations_, p.intervention_id);
        } else if constexpr (std::is_same_v<T, AskSupervisor>) {
          return progression_reply(p.text, false);
        } else if constexpr (std::is_same_v<T, RequestExplanation>) {
          return explain_on_request(p);
        } else {
          throw std::logic_error("end_case is not dispatched to an agent");
        }
      },
      action.payload);
}

const LogEntry& Session::route_action(StudentAction action) {
  if (state_ != SessionState::active)
    throw Error(ErrorCode::session_not_active,
                fmt::format("session '{}' is {}, not active", id_, to_string(state_)), id_);
  const auto t0 = Clock::now();
  const AgentId target = route_target(action);
  RouteDecision route{0, target,
                      fmt::format("{} actions are routed to {}", to_string(action.kind()), agent_noun(target)),
                      route_rule_id(action)};

  if (const auto* end = std::get_if<EndCase>(&action.payload)) {
    if (case_->has_disease(end->diagnosis)) {
      const size_t index = log_.size();
      conclude(end->diagnosis, action.issued_at);
      return log_[index];
    }
    Error err(ErrorCode::unknown_disease, fmt::format("'{}' is not in the differential", end->diagnosis),
              end->diagnosis);
    return append(std::move(action), std::nullopt, std::move(route), error_response(target, err),
                  EntryStatus::error, ms_since(t0));
  }

  std::optional<AgentResponse> response;
  EntryStatus status = EntryStatus::ok;
  try {
    response.emplace(dispatch(action, log_.size() + 1));
  } catch (const Error& e) {
    response.emplace(error_response(target, e));
    status = EntryStatus::error;
  }
  return append(std::move(action), std::nullopt, std::move(route), std::move(*response), status, ms_since(t0));
}

void Session::conclude(const DiseaseId& submitted_diagnosis, Timestamp issued_at) {
  if (state_ != SessionState::active)
    throw Error(ErrorCode::session_not_active,
                fmt::format("session '{}' is {}, not active", id_, to_string(state_)), id_);
  if (!case_->has_disease(submitted_diagnosis))
    throw Error(ErrorCode::unknown_disease, fmt::format("'{}' is not in the differential", submitted_diagnosis),
                submitted_diagnosis);

  auto t0 = Clock::now();
  transition(SessionState::concluded);
  ExplanationRecord ack;
  ack.kind = ExplanationKind::rubric_based;
  ack.reason_codes.push_back("diagnosis_recorded");
  ack.rule_ids.push_back("lifecycle.active_to_concluded");
  ack.narrative = "The supervisor handed the completed log to the evaluation agent.";
  StudentAction action{EndCase{submitted_diagnosis}, issued_at};
  RouteDecision route{0, AgentId::evaluation, "end_case actions are routed to the evaluation agent",
                      "route.end_case"};
  const std::uint64_t action_seq =
      append(std::move(action), std::nullopt, route,
             AgentResponse(AgentId::evaluation, "Final diagnosis recorded. The evaluation report follows.", {},
                           std::move(ack)),
             EntryStatus::ok, ms_since(t0))
          .seq;

  t0 = Clock::now();
  FeedbackReport report = score_transcript(*case_, log_);
  report.session_id = id_;
  report.explanation.decision_id = decision_id_for(log_.size() + 1);
  report.narrative = guard_disclosure(backend_->polish_narrative(report.narrative), case_->forbidden_terms).text;
  report.explanation.narrative = report.narrative;

  RouteDecision report_route{action_seq, AgentId::evaluation, "the concluded log is scored against the rubric",
                             "route.evaluation_report"};
  append(std::nullopt, SystemEvent::evaluation_report, report_route,
         AgentResponse(AgentId::evaluation, report.narrative, {}, report.explanation), EntryStatus::ok,
         ms_since(t0));
  report_ = std::move(report);
  transition(SessionState::evaluated);
  ended_ = now_ms();
}

std::vector<LogEntry> Session::log_since(std::uint64_t since) const {
  std::vector<LogEntry> out;
  if (since < log_.size()) out.assign(log_.begin() + static_cast<std::ptrdiff_t>(since), log_.end());
  return out;
}

void CaseLibrary::add(ClinicalCase c) {
  auto id = c.case_id;
  cases_[id] = std::make_shared<const ClinicalCase>(std::move(c));
}

size_t CaseLibrary::load_directory(const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (!fs::is_directory(dir, ec))
    throw Error(ErrorCode::io_error, fmt::format("'{}' is not a directory", dir), dir);
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  for (const auto& f : files) add(load_case_file(f.string()));
  return files.size();
}

std::shared_ptr<const ClinicalCase> CaseLibrary::find(std::string_view case_id) const {
  auto it = cases_.find(case_id);
  return it == cases_.end() ? nullptr : it->second;
}

std::vector<std::shared_ptr<const ClinicalCase>> CaseLibrary::all() const {
  std::vector<std::shared_ptr<const ClinicalCase>> out;
  for (const auto& [id, c] : cases_) out.push_back(c);
  return out;
}

SessionStore::SessionStore(std::shared_ptr<const CaseLibrary> cases,
                           std::shared_ptr<const DialogueBackend> backend)
    : cases_(std::move(cases)), backend_(std::move(backend)) {
  if (!cases_) throw std::invalid_argument("session store requires a case library");
}

std::string SessionStore::start_session(std::string_view case_id) {
  auto c = cases_->find(case_id);
  if (!c) throw Error(ErrorCode::unknown_case, fmt::format("unknown case '{}'", case_id), std::string(case_id));
  std::unique_lock lock(mutex_);
  auto& counter = counters_[std::string(case_id)];
  std::string id = fmt::format("{}-{}", case_id, counter + 1);
  auto slot = std::make_shared<Slot>(Session::start(id, std::move(c), backend_));
  ++counter;
  sessions_.emplace(id, std::move(slot));
  return id;
}

std::shared_ptr<SessionStore::Slot> SessionStore::slot(std::string_view session_id) const {
  std::shared_lock lock(mutex_);
  auto it = sessions_.find(session_id);
  if (it == sessions_.end())
    throw Error(ErrorCode::unknown_session, fmt::format("unknown session '{}'", session_id),
                std::string(session_id));
  return it->second;
}

void SessionStore::with_session(std::string_view session_id, const std::function<void(Session&)>& fn) {
  auto s = slot(session_id);
  std::lock_guard lock(s->mutex);
  fn(s->session);
}

void SessionStore::with_session(std::string_view session_id,
                                const std::function<void(const Session&)>& fn) const {
  auto s = slot(session_id);
  std::lock_guard lock(s->mutex);
  fn(s->session);
}

bool SessionStore::contains(std::string_view session_id) const {
  std::shared_lock lock(mutex_);
  return sessions_.find(session_id) != sessions_.end();
}

std::vector<std::string> SessionStore::session_ids() const {
  std::shared_lock lock(mutex_);
  std::vector<std::string> ids;
  for (const auto& [id, slot] : sessions_) ids.push_back(id);
  return ids;
}

Session replay_actions(std::string session_id, std::shared_ptr<const ClinicalCase> clinical_case,
                       std::span<const StudentAction> actions, std::shared_ptr<const DialogueBackend> backend) {
  Session s = Session::start(std::move(session_id), std::move(clinical_case), std::move(backend));
  for (const auto& a : actions) {
    if (s.state() != SessionState::active) break;
    s.route_action(a);
  }
  return s;
}

}  // namespace clinsim
