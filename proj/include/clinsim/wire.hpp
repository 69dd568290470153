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

// JSON wire format shared by the HTTP API, session export, and the CLI.

#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "clinsim/agent_core.hpp"
#include "clinsim/clinical_agents.hpp"
#include "clinsim/evaluation.hpp"
#include "clinsim/interaction_log.hpp"
#include "clinsim/supervisor.hpp"

namespace clinsim {

using Json = nlohmann::json;

/// Version tag written into exported session documents.
inline constexpr int kExportFormatVersion = 1;

void to_json(Json& j, const Diagnostic& d);
void to_json(Json& j, const Contribution& c);
void to_json(Json& j, const ExplanationRecord& e);
void to_json(Json& j, const AgentResponse& r);
void to_json(Json& j, const StudentAction& a);
void to_json(Json& j, const RouteDecision& r);
void to_json(Json& j, const LogEntry& e);
void to_json(Json& j, const DiseaseScore& s);
void to_json(Json& j, const MatcherResult& m);
void to_json(Json& j, const ItemScore& s);
void to_json(Json& j, const KeyFactor& k);
void to_json(Json& j, const FeedbackReport& r);
void to_json(Json& j, const AgentPersona& p);

// Readers throw Error(malformed_request) with the offending field as detail.
ExplanationRecord explanation_from_json(const Json& j);
AgentResponse response_from_json(const Json& j);
StudentAction action_from_json(const Json& j);
LogEntry log_entry_from_json(const Json& j);
FeedbackReport report_from_json(const Json& j);

/// {"ok": true, "data": ...}
Json envelope_ok(Json data);
/// {"ok": false, "error": {"code", "message", "details"}}
Json envelope_error(std::string_view code, std::string_view message, Json details = Json::object());

/// Summary row used by session listings and the dashboard.
Json session_summary(const Session& s);

/// Full log plus report, pretty printed. Byte-stable for a given session.
std::string export_session(const Session& s);

/// Student actions from an export document, from {"actions": [...]}, or from
/// a bare array of actions. Entries without an action are skipped.
std::vector<StudentAction> parse_action_script(std::string_view document);

/// Educator view: one row per log entry in seq order.
Json dashboard_view(const Session& s);

/// Case data safe to show a student: no hidden diagnosis, evidence, rubric.
Json public_case_view(const ClinicalCase& c);

/// Drops fields that legitimately differ between a run and its replay
/// (issued_at, elapsed, started, ended).
Json strip_timing(Json j);

}  // namespace clinsim
