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

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace clinsim {

enum class ErrorCode {
  parse_error,
  reference_error,
  invalid_case,
  unknown_case,
  unknown_session,
  session_not_active,
  unknown_exam,
  unknown_test,
  unknown_intervention,
  unknown_disease,
  unknown_item,
  unknown_persona,
  missing_subject,
  report_not_available,
  malformed_request,
  unauthorized,
  io_error,
};

std::string_view to_string(ErrorCode code);

/// Base error for everything the library throws. Carries a machine code so
/// the service and C API layers can map it without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::string detail = {})
      : std::runtime_error(message), code_(code), detail_(std::move(detail)) {}

  ErrorCode code() const noexcept { return code_; }
  /// Offending id, field, or path. May be empty.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

/// Malformed document. `line` is 1-based and 0 when the failure is
/// structural rather than syntactic; `path` is a JSON pointer.
class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::string path, int line = 0)
      : Error(ErrorCode::parse_error, message, path), path_(std::move(path)), line_(line) {}

  const std::string& path() const noexcept { return path_; }
  int line() const noexcept { return line_; }

 private:
  std::string path_;
  int line_;
};

class ReferenceError : public Error {
 public:
  ReferenceError(const std::string& message, std::string dangling_id, std::string path)
      : Error(ErrorCode::reference_error, message, dangling_id),
        id_(std::move(dangling_id)),
        path_(std::move(path)) {}

  const std::string& dangling_id() const noexcept { return id_; }
  const std::string& path() const noexcept { return path_; }

 private:
  std::string id_;
  std::string path_;
};

enum class Severity { error, warning };

struct Diagnostic {
  Severity severity = Severity::error;
  std::string path;
  std::string message;
  /// Rule identifier for lint-style checks; empty for case validation.
  std::string rule_id;

  bool operator==(const Diagnostic&) const = default;
};

std::string_view to_string(Severity s);

/// Path-lexicographic, then rule, then message.
void sort_diagnostics(std::vector<Diagnostic>& diags);

}  // namespace clinsim
