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

#include "clinsim/errors.hpp"

#include <algorithm>
#include <tuple>

namespace clinsim {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::parse_error: return "parse_error";
    case ErrorCode::reference_error: return "reference_error";
    case ErrorCode::invalid_case: return "invalid_case";
    case ErrorCode::unknown_case: return "unknown_case";
    case ErrorCode::unknown_session: return "unknown_session";
    case ErrorCode::session_not_active: return "session_not_active";
    case ErrorCode::unknown_exam: return "unknown_exam";
    case ErrorCode::unknown_test: return "unknown_test";
    case ErrorCode::unknown_intervention: return "unknown_intervention";
    case ErrorCode::unknown_disease: return "unknown_disease";
    case ErrorCode::unknown_item: return "unknown_item";
    case ErrorCode::unknown_persona: return "unknown_persona";
    case ErrorCode::missing_subject: return "missing_subject";
    case ErrorCode::report_not_available: return "report_not_available";
    case ErrorCode::malformed_request: return "malformed_request";
    case ErrorCode::unauthorized: return "unauthorized";
    case ErrorCode::io_error: return "io_error";
  }
  return "unknown";
}

std::string_view to_string(Severity s) {
  return s == Severity::error ? "error" : "warning";
}

void sort_diagnostics(std::vector<Diagnostic>& diags) {
  std::stable_sort(diags.begin(), diags.end(), [](const Diagnostic& a, const Diagnostic& b) {
    return std::tie(a.path, a.rule_id, a.message) < std::tie(b.path, b.rule_id, b.message);
  });
}

}  // namespace clinsim
