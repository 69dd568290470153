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

#include <map>
#include <memory>
#include <string>
#include <string_view>

#include "clinsim/supervisor.hpp"
#include "clinsim/wire.hpp"

namespace clinsim {

struct ApiRequest {
  std::string method;
  std::string path;
  std::map<std::string, std::string> query;
  std::string body;
  /// Raw Authorization header, if any.
  std::string authorization;
};

struct ApiResponse {
  int status = 200;
  Json body;  // always a WireEnvelope
};

struct ServiceConfig {
  /// When set, dashboard endpoints require "Authorization: Bearer <token>".
  std::string educator_token;
};

/// Transport-independent HTTP API. Responses are a function of the session
/// store and the request only.
///
///   GET  /cases                      GET  /cases/{id}
///   POST /sessions {case_id}         POST /sessions/{id}/actions
///   GET  /sessions/{id}/log?since=n  GET  /sessions/{id}/explanations
///   POST /sessions/{id}/conclude     GET  /sessions/{id}/report
///   GET  /sessions/{id}/export       GET  /dashboard/sessions/{id}
class Service {
 public:
  Service(std::shared_ptr<const CaseLibrary> cases, std::shared_ptr<const DialogueBackend> backend,
          ServiceConfig config = {});

  ApiResponse handle(const ApiRequest& request);

  /// POST /sessions/{id}/actions. 404 unknown session, 409 not active,
  /// 422 malformed action.
  ApiResponse handle_action_request(std::string_view session_id, std::string_view action_document);

  /// Export document text. Throws Error(unknown_session).
  std::string export_session(std::string_view session_id) const;

  SessionStore& store() { return store_; }
  const SessionStore& store() const { return store_; }

 private:
  ApiResponse list_cases() const;
  ApiResponse get_case(std::string_view case_id) const;
  ApiResponse create_session(std::string_view body);
  ApiResponse get_log(std::string_view session_id, const std::map<std::string, std::string>& query) const;
  ApiResponse get_explanations(std::string_view session_id) const;
  ApiResponse conclude(std::string_view session_id, std::string_view body);
  ApiResponse get_report(std::string_view session_id) const;
  ApiResponse get_export(std::string_view session_id) const;
  ApiResponse get_dashboard(std::string_view session_id, const ApiRequest& request) const;

  std::shared_ptr<const CaseLibrary> cases_;
  SessionStore store_;
  ServiceConfig config_;
};

/// HTTP status for a library error code.
int http_status_for(ErrorCode code);

/// Binds a Service to a TCP listener.
class HttpServer {
 public:
  explicit HttpServer(Service& service);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds to `port` (0 picks a free port); returns the bound port or -1.
  int bind(const std::string& host, int port);
  /// Blocks until stop().
  bool listen();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// GET <base>/sessions/{id}/export from a running server.
/// Throws Error(io_error) or the server's error.
std::string fetch_remote_export(const std::string& host, int port, std::string_view session_id);

}  // namespace clinsim
