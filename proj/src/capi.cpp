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

#include "clinsim/clinsim.h"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <string>

#include <fmt/format.h>

#include "clinsim/case_model.hpp"
#include "clinsim/re_toolkit.hpp"
#include "clinsim/service.hpp"
#include "clinsim/supervisor.hpp"
#include "clinsim/wire.hpp"

struct clinsim_case {
  clinsim::ClinicalCase value;
};

struct clinsim_engine {
  std::shared_ptr<clinsim::CaseLibrary> library = std::make_shared<clinsim::CaseLibrary>();
  std::shared_ptr<const clinsim::DialogueBackend> backend;
  clinsim::ServiceConfig config;
  std::unique_ptr<clinsim::Service> service;

  clinsim::Service& ensure_service() {
    if (!service) {
      if (!backend) backend = clinsim::backend_from_environment();
      service = std::make_unique<clinsim::Service>(library, backend, config);
    }
    return *service;
  }
};

namespace {

thread_local std::string g_last_error;

clinsim_status status_for(clinsim::ErrorCode code) {
  using clinsim::ErrorCode;
  switch (code) {
    case ErrorCode::parse_error: return CLINSIM_E_PARSE;
    case ErrorCode::reference_error: return CLINSIM_E_REFERENCE;
    case ErrorCode::invalid_case: return CLINSIM_E_INVALID_CASE;
    case ErrorCode::unknown_case:
    case ErrorCode::unknown_session:
    case ErrorCode::unknown_exam:
    case ErrorCode::unknown_test:
    case ErrorCode::unknown_intervention:
    case ErrorCode::unknown_disease:
    case ErrorCode::unknown_item:
    case ErrorCode::unknown_persona: return CLINSIM_E_NOT_FOUND;
    case ErrorCode::session_not_active:
    case ErrorCode::report_not_available: return CLINSIM_E_NOT_ACTIVE;
    case ErrorCode::missing_subject:
    case ErrorCode::malformed_request: return CLINSIM_E_MALFORMED;
    case ErrorCode::unauthorized: return CLINSIM_E_INVALID_ARGUMENT;
    case ErrorCode::io_error: return CLINSIM_E_IO;
  }
  return CLINSIM_E_INTERNAL;
}

std::string describe_error(const clinsim::Error& e) {
  if (const auto* p = dynamic_cast<const clinsim::ParseError*>(&e)) {
    if (p->line() > 0) return fmt::format("{} (line {})", e.what(), p->line());
    if (!p->path().empty()) return fmt::format("{} (at {})", e.what(), p->path());
  }
  if (const auto* r = dynamic_cast<const clinsim::ReferenceError*>(&e))
    return fmt::format("{} (at {})", e.what(), r->path());
  if (const auto* v = dynamic_cast<const clinsim::InvalidCaseError*>(&e)) {
    std::string msg = e.what();
    for (const auto& d : v->diagnostics()) msg += fmt::format("\n  {}: {}", d.path, d.message);
    return msg;
  }
  return e.what();
}

template <class F>
clinsim_status guarded(F&& f) {
  try {
    f();
    g_last_error.clear();
    return CLINSIM_OK;
  } catch (const clinsim::Error& e) {
    g_last_error = describe_error(e);
    return status_for(e.code());
  } catch (const std::invalid_argument& e) {
    g_last_error = e.what();
    return CLINSIM_E_INVALID_ARGUMENT;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return CLINSIM_E_INTERNAL;
  } catch (...) {
    g_last_error = "unknown failure";
    return CLINSIM_E_INTERNAL;
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void require(bool condition, const char* what) {
  if (!condition) throw std::invalid_argument(what);
}

std::map<std::string, std::string> parse_query(std::string_view q) {
  std::map<std::string, std::string> out;
  while (!q.empty()) {
    const size_t amp = q.find('&');
    const std::string_view pair = q.substr(0, amp);
    const size_t eq = pair.find('=');
    if (!pair.empty())
      out[std::string(pair.substr(0, eq))] = eq == std::string_view::npos ? "" : std::string(pair.substr(eq + 1));
    if (amp == std::string_view::npos) break;
    q.remove_prefix(amp + 1);
  }
  return out;
}

}  // namespace

extern "C" {

const char* clinsim_version(void) { return "0.1.0"; }

const char* clinsim_status_name(clinsim_status status) {
  switch (status) {
    case CLINSIM_OK: return "ok";
    case CLINSIM_E_INVALID_ARGUMENT: return "invalid_argument";
    case CLINSIM_E_PARSE: return "parse_error";
    case CLINSIM_E_REFERENCE: return "reference_error";
    case CLINSIM_E_INVALID_CASE: return "invalid_case";
    case CLINSIM_E_NOT_FOUND: return "not_found";
    case CLINSIM_E_NOT_ACTIVE: return "not_active";
    case CLINSIM_E_MALFORMED: return "malformed";
    case CLINSIM_E_IO: return "io_error";
    case CLINSIM_E_INTERNAL: return "internal";
  }
  return "unknown";
}

const char* clinsim_last_error(void) { return g_last_error.c_str(); }

void clinsim_string_free(char* s) { std::free(s); }

clinsim_status clinsim_case_parse(const char* json, clinsim_case** out) {
  return guarded([&] {
    require(json != nullptr && out != nullptr, "json and out must be non-null");
    *out = nullptr;
    *out = new clinsim_case{clinsim::parse_case(json)};
  });
}

clinsim_status clinsim_case_load(const char* path, clinsim_case** out) {
  return guarded([&] {
    require(path != nullptr && out != nullptr, "path and out must be non-null");
    *out = nullptr;
    *out = new clinsim_case{clinsim::load_case_file(path)};
  });
}

void clinsim_case_free(clinsim_case* c) { delete c; }

const char* clinsim_case_id(const clinsim_case* c) { return c ? c->value.case_id.c_str() : ""; }

clinsim_status clinsim_case_validate(const clinsim_case* c, char** diagnostics_json, size_t* count) {
  return guarded([&] {
    require(c != nullptr && diagnostics_json != nullptr, "case and output must be non-null");
    const auto diags = clinsim::validate_case(c->value);
    *diagnostics_json = dup_string(clinsim::Json(diags).dump(2));
    if (count) *count = diags.size();
  });
}

clinsim_status clinsim_case_serialize(const clinsim_case* c, char** json) {
  return guarded([&] {
    require(c != nullptr && json != nullptr, "case and output must be non-null");
    *json = dup_string(clinsim::serialize_case(c->value));
  });
}

clinsim_status clinsim_simulate(const clinsim_case* c, const char* script_json, char** export_json) {
  return guarded([&] {
    require(c != nullptr && script_json != nullptr && export_json != nullptr, "arguments must be non-null");
    const auto actions = clinsim::parse_action_script(script_json);
    auto shared = std::make_shared<const clinsim::ClinicalCase>(c->value);
    clinsim::Session s = clinsim::replay_actions(c->value.case_id + "-1", shared, actions,
                                                 clinsim::backend_from_environment());
    *export_json = dup_string(clinsim::export_session(s));
  });
}

clinsim_status clinsim_engine_create(clinsim_engine** out) {
  return guarded([&] {
    require(out != nullptr, "out must be non-null");
    *out = new clinsim_engine();
  });
}

void clinsim_engine_free(clinsim_engine* e) { delete e; }

clinsim_status clinsim_engine_set_backend(clinsim_engine* e, const char* selector) {
  return guarded([&] {
    require(e != nullptr, "engine must be non-null");
    require(!e->service, "backend must be set before the first request");
    e->backend = selector ? clinsim::make_backend(selector) : clinsim::backend_from_environment();
  });
}

clinsim_status clinsim_engine_set_educator_token(clinsim_engine* e, const char* token) {
  return guarded([&] {
    require(e != nullptr, "engine must be non-null");
    require(!e->service, "token must be set before the first request");
    e->config.educator_token = token ? token : "";
  });
}

clinsim_status clinsim_engine_add_case(clinsim_engine* e, const clinsim_case* c) {
  return guarded([&] {
    require(e != nullptr && c != nullptr, "engine and case must be non-null");
    require(!e->service, "cases must be added before the first request");
    e->library->add(c->value);
  });
}

clinsim_status clinsim_engine_load_cases(clinsim_engine* e, const char* dir, size_t* loaded) {
  return guarded([&] {
    require(e != nullptr && dir != nullptr, "engine and dir must be non-null");
    require(!e->service, "cases must be loaded before the first request");
    const size_t n = e->library->load_directory(dir);
    if (loaded) *loaded = n;
  });
}

clinsim_status clinsim_engine_request(clinsim_engine* e, const char* method, const char* path, const char* body,
                                      int* http_status, char** response_json) {
  return clinsim_engine_request_auth(e, method, path, body, nullptr, http_status, response_json);
}

clinsim_status clinsim_engine_request_auth(clinsim_engine* e, const char* method, const char* path,
                                           const char* body, const char* authorization, int* http_status,
                                           char** response_json) {
  return guarded([&] {
    require(e != nullptr && method != nullptr && path != nullptr && response_json != nullptr,
            "engine, method, path, and output must be non-null");
    std::string_view full(path);
    clinsim::ApiRequest req;
    req.method = method;
    const size_t q = full.find('?');
    req.path = std::string(full.substr(0, q));
    if (q != std::string_view::npos) req.query = parse_query(full.substr(q + 1));
    req.body = body ? body : "";
    req.authorization = authorization ? authorization : "";
    clinsim::ApiResponse res = e->ensure_service().handle(req);
    if (http_status) *http_status = res.status;
    *response_json = dup_string(res.body.dump());
  });
}

clinsim_status clinsim_engine_serve(clinsim_engine* e, const char* host, int port) {
  return guarded([&] {
    require(e != nullptr && host != nullptr, "engine and host must be non-null");
    clinsim::HttpServer server(e->ensure_service());
    if (server.bind(host, port) < 0)
      throw clinsim::Error(clinsim::ErrorCode::io_error, fmt::format("cannot bind {}:{}", host, port));
    if (!server.listen()) throw clinsim::Error(clinsim::ErrorCode::io_error, "server stopped unexpectedly");
  });
}

clinsim_status clinsim_remote_export(const char* host, int port, const char* session_id, char** export_json) {
  return guarded([&] {
    require(host != nullptr && session_id != nullptr && export_json != nullptr, "arguments must be non-null");
    *export_json = dup_string(clinsim::fetch_remote_export(host, port, session_id));
  });
}

clinsim_status clinsim_re_lint(const char* corpus_dir, char** diagnostics_json, size_t* count) {
  return guarded([&] {
    require(corpus_dir != nullptr && diagnostics_json != nullptr, "arguments must be non-null");
    const auto diags = clinsim::re::validate_traceability(clinsim::re::load_corpus(corpus_dir));
    *diagnostics_json = dup_string(clinsim::Json(diags).dump(2));
    if (count) *count = diags.size();
  });
}

clinsim_status clinsim_re_prioritize(const char* corpus_dir, const double* weights, char** ranking_json) {
  return guarded([&] {
    require(corpus_dir != nullptr && ranking_json != nullptr, "arguments must be non-null");
    const auto corpus = clinsim::re::load_corpus(corpus_dir);
    clinsim::re::PriorityWeights w;
    if (weights) w = {weights[0], weights[1], weights[2]};
    std::vector<clinsim::re::XaiUserStory> stories;
    std::map<std::string, std::string> texts;
    for (const auto& doc : corpus.stories) {
      stories.push_back(clinsim::re::resolve_story(doc, corpus));
      texts[doc.story_id] = doc.text;
    }
    clinsim::Json out = clinsim::Json::array();
    int rank = 0;
    for (const auto& r : clinsim::re::prioritize_stories(std::move(stories), w)) {
      out.push_back({{"rank", ++rank},
                     {"story_id", r.story.story_id},
                     {"priority", r.priority},
                     {"clinical_risk", r.story.clinical_risk},
                     {"learning_value", r.story.learning_value},
                     {"complexity", r.story.complexity},
                     {"text", texts[r.story.story_id]}});
    }
    *ranking_json = dup_string(out.dump(2));
  });
}

clinsim_status clinsim_re_story_parse(const char* corpus_dir, const char* text, char** story_json) {
  return guarded([&] {
    require(corpus_dir != nullptr && text != nullptr && story_json != nullptr, "arguments must be non-null");
    const auto corpus = clinsim::re::load_corpus(corpus_dir);
    const auto story = clinsim::re::parse_user_story(text, corpus);
    clinsim::Json out{{"human_persona_id", story.human_persona_id},
                      {"question", clinsim::re::to_string(story.question)},
                      {"ai_agent", clinsim::to_string(story.ai_agent)},
                      {"decision_clause", story.decision_clause},
                      {"goal_clause", story.goal_clause},
                      {"rendered", clinsim::re::render_user_story(story, corpus)}};
    *story_json = dup_string(out.dump(2));
  });
}

}  // extern "C"
