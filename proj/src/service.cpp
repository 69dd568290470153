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

#include "clinsim/service.hpp"

#include <charconv>

#include <fmt/format.h>

#include "httplib.h"

namespace clinsim {

namespace {

constexpr ErrorCode kAllErrorCodes[] = {
    ErrorCode::parse_error,        ErrorCode::reference_error,     ErrorCode::invalid_case,
    ErrorCode::unknown_case,       ErrorCode::unknown_session,     ErrorCode::session_not_active,
    ErrorCode::unknown_exam,       ErrorCode::unknown_test,        ErrorCode::unknown_intervention,
    ErrorCode::unknown_disease,    ErrorCode::unknown_item,        ErrorCode::unknown_persona,
    ErrorCode::missing_subject,    ErrorCode::report_not_available, ErrorCode::malformed_request,
    ErrorCode::unauthorized,       ErrorCode::io_error,
};

std::vector<std::string_view> split_path(std::string_view path) {
  std::vector<std::string_view> parts;
  size_t start = 0;
  while (start <= path.size()) {
    size_t end = path.find('/', start);
    if (end == std::string_view::npos) end = path.size();
    if (end > start) parts.push_back(path.substr(start, end - start));
    start = end + 1;
  }
  return parts;
}

ApiResponse ok(Json data, int status = 200) { return {status, envelope_ok(std::move(data))}; }

ApiResponse failure(const Error& e) {
  Json details = Json::object();
  if (!e.detail().empty()) details["detail"] = e.detail();
  if (const auto* invalid = dynamic_cast<const InvalidCaseError*>(&e)) details["diagnostics"] = invalid->diagnostics();
  if (const auto* parse = dynamic_cast<const ParseError*>(&e)) {
    details["path"] = parse->path();
    details["line"] = parse->line();
  }
  return {http_status_for(e.code()), envelope_error(to_string(e.code()), e.what(), std::move(details))};
}

ApiResponse not_found(std::string_view method, std::string_view path) {
  return {404, envelope_error("not_found", fmt::format("no route for {} {}", method, path))};
}

Json parse_body(std::string_view body) {
  Json j = Json::parse(body, nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::malformed_request, "request body is not valid JSON", "body");
  return j;
}

std::string body_string(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key) || !j[key].is_string())
    throw Error(ErrorCode::malformed_request, fmt::format("request body needs string field '{}'", key), key);
  return j[key].get<std::string>();
}

}  // namespace

int http_status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::unknown_case:
    case ErrorCode::unknown_session: return 404;
    case ErrorCode::session_not_active:
    case ErrorCode::report_not_available: return 409;
    case ErrorCode::unauthorized: return 401;
    case ErrorCode::io_error: return 500;
    case ErrorCode::parse_error:
    case ErrorCode::reference_error:
    case ErrorCode::invalid_case:
    case ErrorCode::unknown_exam:
    case ErrorCode::unknown_test:
    case ErrorCode::unknown_intervention:
    case ErrorCode::unknown_disease:
    case ErrorCode::unknown_item:
    case ErrorCode::unknown_persona:
    case ErrorCode::missing_subject:
    case ErrorCode::malformed_request: return 422;
  }
  return 500;
}

Service::Service(std::shared_ptr<const CaseLibrary> cases, std::shared_ptr<const DialogueBackend> backend,
                 ServiceConfig config)
    : cases_(cases), store_(std::move(cases), std::move(backend)), config_(std::move(config)) {}

ApiResponse Service::handle(const ApiRequest& request) {
  const auto parts = split_path(request.path);
  const std::string& m = request.method;
  try {
    if (parts.size() == 1 && parts[0] == "cases" && m == "GET") return list_cases();
    if (parts.size() == 2 && parts[0] == "cases" && m == "GET") return get_case(parts[1]);
    if (parts.size() == 1 && parts[0] == "sessions" && m == "POST") return create_session(request.body);
    if (parts.size() == 3 && parts[0] == "sessions") {
      const auto id = parts[1];
      const auto leaf = parts[2];
      if (leaf == "actions" && m == "POST") return handle_action_request(id, request.body);
      if (leaf == "log" && m == "GET") return get_log(id, request.query);
      if (leaf == "explanations" && m == "GET") return get_explanations(id);
      if (leaf == "conclude" && m == "POST") return conclude(id, request.body);
      if (leaf == "report" && m == "GET") return get_report(id);
      if (leaf == "export" && m == "GET") return get_export(id);
    }
    if (parts.size() == 3 && parts[0] == "dashboard" && parts[1] == "sessions" && m == "GET")
      return get_dashboard(parts[2], request);
    return not_found(m, request.path);
  } catch (const Error& e) {
    return failure(e);
  } catch (const std::exception& e) {
    return {500, envelope_error("internal", e.what())};
  }
}

ApiResponse Service::list_cases() const {
  Json items = Json::array();
  for (const auto& c : cases_->all())
    items.push_back({{"case_id", c->case_id}, {"title", c->title}, {"chief_complaint", c->chief_complaint}});
  return ok(Json{{"cases", items}});
}

ApiResponse Service::get_case(std::string_view case_id) const {
  auto c = cases_->find(case_id);
  if (!c) throw Error(ErrorCode::unknown_case, fmt::format("unknown case '{}'", case_id), std::string(case_id));
  Json view = public_case_view(*c);
  Json personas = Json::array();
  for (const auto& p : build_agent_registry(*c)) personas.push_back(p);
  view["personas"] = personas;
  return ok(view);
}

ApiResponse Service::create_session(std::string_view body) {
  const std::string case_id = body_string(parse_body(body), "case_id");
  const std::string id = store_.start_session(case_id);
  Json data;
  store_.with_session(id, [&](const Session& s) {
    data = Json{{"session", session_summary(s)}, {"entries", s.log()}};
  });
  return ok(std::move(data), 201);
}

ApiResponse Service::handle_action_request(std::string_view session_id, std::string_view action_document) {
  try {
    if (!store_.contains(session_id))
      throw Error(ErrorCode::unknown_session, fmt::format("unknown session '{}'", session_id),
                  std::string(session_id));
    StudentAction action = action_from_json(parse_body(action_document));
    Json data;
    store_.with_session(session_id, [&](Session& s) { data = s.route_action(std::move(action)); });
    return ok(std::move(data));
  } catch (const Error& e) {
    return failure(e);
  }
}

ApiResponse Service::get_log(std::string_view session_id, const std::map<std::string, std::string>& query) const {
  std::uint64_t since = 0;
  if (auto it = query.find("since"); it != query.end()) {
    const auto& text = it->second;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), since);
    if (ec != std::errc() || ptr != text.data() + text.size() || text.empty())
      throw Error(ErrorCode::malformed_request, "'since' must be a non-negative integer", "since");
  }
  Json data;
  store_.with_session(session_id, [&](const Session& s) {
    data = Json{{"session", session_summary(s)}, {"entries", s.log_since(since)}};
  });
  return ok(std::move(data));
}

ApiResponse Service::get_explanations(std::string_view session_id) const {
  Json items = Json::array();
  store_.with_session(session_id, [&](const Session& s) {
    for (const auto& e : s.log())
      items.push_back(
          Json{{"seq", e.seq}, {"trigger", e.trigger_label()}, {"explanation", e.response.explanation()}});
  });
  return ok(Json{{"items", items}});
}

ApiResponse Service::conclude(std::string_view session_id, std::string_view body) {
  const std::string diagnosis = body_string(parse_body(body), "diagnosis");
  Json data;
  store_.with_session(session_id, [&](Session& s) {
    const auto before = s.log().size();
    s.conclude(diagnosis);
    data = Json{{"session", session_summary(s)}, {"entries", s.log_since(before)}, {"report", *s.report()}};
  });
  return ok(std::move(data));
}

ApiResponse Service::get_report(std::string_view session_id) const {
  Json data;
  store_.with_session(session_id, [&](const Session& s) {
    if (!s.report())
      throw Error(ErrorCode::report_not_available,
                  fmt::format("session '{}' has not been evaluated", session_id), std::string(session_id));
    data = *s.report();
  });
  return ok(std::move(data));
}

ApiResponse Service::get_export(std::string_view session_id) const {
  return ok(Json::parse(export_session(session_id)));
}

ApiResponse Service::get_dashboard(std::string_view session_id, const ApiRequest& request) const {
  if (!config_.educator_token.empty() && request.authorization != "Bearer " + config_.educator_token)
    throw Error(ErrorCode::unauthorized, "educator token required", "authorization");
  Json data;
  store_.with_session(session_id, [&](const Session& s) { data = dashboard_view(s); });
  return ok(std::move(data));
}

std::string Service::export_session(std::string_view session_id) const {
  std::string doc;
  store_.with_session(session_id, [&](const Session& s) { doc = clinsim::export_session(s); });
  return doc;
}

struct HttpServer::Impl {
  Service& service;
  httplib::Server server;

  explicit Impl(Service& s) : service(s) {
    auto handler = [this](const httplib::Request& req, httplib::Response& res) {
      ApiRequest api{req.method, req.path, {}, req.body, req.get_header_value("Authorization")};
      for (const auto& [key, value] : req.params) api.query.emplace(key, value);
      ApiResponse out = service.handle(api);
      res.status = out.status;
      res.set_header("Access-Control-Allow-Origin", "*");
      res.set_content(out.body.dump(), "application/json");
    };
    server.Get(".*", handler);
    server.Post(".*", handler);
    server.Options(".*", [](const httplib::Request&, httplib::Response& res) {
      res.set_header("Access-Control-Allow-Origin", "*");
      res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
      res.set_header("Access-Control-Allow-Headers", "Content-Type, Authorization");
      res.status = 204;
    });
  }
};

HttpServer::HttpServer(Service& service) : impl_(std::make_unique<Impl>(service)) {}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  if (port == 0) return impl_->server.bind_to_any_port(host);
  return impl_->server.bind_to_port(host, port) ? port : -1;
}

bool HttpServer::listen() { return impl_->server.listen_after_bind(); }

void HttpServer::stop() {
  if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

std::string fetch_remote_export(const std::string& host, int port, std::string_view session_id) {
  httplib::Client client(host, port);
  client.set_connection_timeout(5);
  auto res = client.Get(fmt::format("/sessions/{}/export", session_id));
  if (!res)
    throw Error(ErrorCode::io_error,
                fmt::format("could not reach {}:{} ({})", host, port, httplib::to_string(res.error())), host);
  Json body = Json::parse(res->body, nullptr, false);
  if (body.is_discarded() || !body.is_object() || !body.contains("ok"))
    throw Error(ErrorCode::io_error, "server returned a non-envelope response", host);
  if (!body["ok"].get<bool>()) {
    const auto& err = body["error"];
    const std::string code = err.value("code", "");
    const std::string message = err.value("message", "remote error");
    const std::string detail = err.contains("details") ? err["details"].value("detail", "") : "";
    for (auto c : kAllErrorCodes)
      if (to_string(c) == code) throw Error(c, message, detail);
    throw Error(ErrorCode::io_error, message, detail);
  }
  return body["data"].dump(2) + "\n";
}

}  // namespace clinsim
