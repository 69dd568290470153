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

// Command-line front end. Talks to the library only through the C API.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "clinsim/clinsim.h"

namespace {

using Json = nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitFindings = 1;
constexpr int kExitError = 2;

// Owns a string handed out by the C API.
class CString {
 public:
  CString() = default;
  ~CString() { clinsim_string_free(ptr_); }
  CString(const CString&) = delete;
  CString& operator=(const CString&) = delete;

  char** out() { return &ptr_; }
  std::string str() const { return ptr_ ? ptr_ : ""; }

 private:
  char* ptr_ = nullptr;
};

int fail(clinsim_status status) {
  std::cerr << "error [" << clinsim_status_name(status) << "]: " << clinsim_last_error() << "\n";
  return kExitError;
}

bool read_file(const std::string& path, std::string& out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return false;
  std::stringstream ss;
  ss << in.rdbuf();
  out = ss.str();
  return true;
}

int write_output(const std::string& text, const std::string& path) {
  if (path.empty()) {
    std::cout << text;
    if (!text.empty() && text.back() != '\n') std::cout << "\n";
    return kExitOk;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    std::cerr << "error: cannot write " << path << "\n";
    return kExitError;
  }
  out << text;
  return kExitOk;
}

void print_diagnostics(const std::string& json_text) {
  for (const auto& d : Json::parse(json_text)) {
    std::cout << d["severity"].get<std::string>() << " " << d["path"].get<std::string>();
    const auto rule = d["rule_id"].get<std::string>();
    if (!rule.empty()) std::cout << " [" << rule << "]";
    std::cout << ": " << d["message"].get<std::string>() << "\n";
  }
}

int case_validate(const std::string& file, bool as_json) {
  clinsim_case* c = nullptr;
  if (auto st = clinsim_case_load(file.c_str(), &c); st != CLINSIM_OK) return fail(st);
  CString diags;
  size_t count = 0;
  const auto st = clinsim_case_validate(c, diags.out(), &count);
  const std::string id = clinsim_case_id(c);
  clinsim_case_free(c);
  if (st != CLINSIM_OK) return fail(st);
  if (as_json) {
    std::cout << diags.str() << "\n";
  } else if (count == 0) {
    std::cout << id << ": valid\n";
  } else {
    print_diagnostics(diags.str());
  }
  return count == 0 ? kExitOk : kExitFindings;
}

int simulate_run(const std::string& case_file, const std::string& script_file, const std::string& out) {
  std::string script;
  if (!read_file(script_file, script)) {
    std::cerr << "error: cannot read " << script_file << "\n";
    return kExitError;
  }
  clinsim_case* c = nullptr;
  if (auto st = clinsim_case_load(case_file.c_str(), &c); st != CLINSIM_OK) return fail(st);
  CString doc;
  const auto st = clinsim_simulate(c, script.c_str(), doc.out());
  clinsim_case_free(c);
  if (st != CLINSIM_OK) return fail(st);
  return write_output(doc.str(), out);
}

int session_export(const std::string& id, const std::string& host, int port, const std::string& out) {
  CString doc;
  if (auto st = clinsim_remote_export(host.c_str(), port, id.c_str(), doc.out()); st != CLINSIM_OK) return fail(st);
  return write_output(doc.str(), out);
}

int re_lint(const std::string& dir, bool as_json) {
  CString diags;
  size_t count = 0;
  if (auto st = clinsim_re_lint(dir.c_str(), diags.out(), &count); st != CLINSIM_OK) return fail(st);
  if (as_json) std::cout << diags.str() << "\n";
  else if (count == 0) std::cout << dir << ": traceability clean\n";
  else print_diagnostics(diags.str());
  return count == 0 ? kExitOk : kExitFindings;
}

int re_prioritize(const std::string& dir, const std::vector<double>& weights, bool as_json) {
  if (!weights.empty() && weights.size() != 3) {
    std::cerr << "error: --weights takes exactly three values\n";
    return kExitError;
  }
  CString ranking;
  const double* w = weights.empty() ? nullptr : weights.data();
  if (auto st = clinsim_re_prioritize(dir.c_str(), w, ranking.out()); st != CLINSIM_OK) return fail(st);
  if (as_json) {
    std::cout << ranking.str() << "\n";
    return kExitOk;
  }
  for (const auto& r : Json::parse(ranking.str())) {
    std::printf("%2d  %-8s %5.2f  (risk %d, learning %d, complexity %d)\n", r["rank"].get<int>(),
                r["story_id"].get<std::string>().c_str(), r["priority"].get<double>(), r["clinical_risk"].get<int>(),
                r["learning_value"].get<int>(), r["complexity"].get<int>());
  }
  return kExitOk;
}

int re_story_parse(const std::string& dir, const std::string& text) {
  CString story;
  if (auto st = clinsim_re_story_parse(dir.c_str(), text.c_str(), story.out()); st != CLINSIM_OK) return fail(st);
  std::cout << story.str() << "\n";
  return kExitOk;
}

int serve(const std::string& host, int port, const std::string& cases, const std::string& token,
          const std::string& backend) {
  clinsim_engine* e = nullptr;
  if (auto st = clinsim_engine_create(&e); st != CLINSIM_OK) return fail(st);
  auto finish = [&](clinsim_status st) {
    const int code = st == CLINSIM_OK ? kExitOk : fail(st);
    clinsim_engine_free(e);
    return code;
  };
  size_t loaded = 0;
  if (auto st = clinsim_engine_load_cases(e, cases.c_str(), &loaded); st != CLINSIM_OK) return finish(st);
  if (auto st = clinsim_engine_set_backend(e, backend.empty() ? nullptr : backend.c_str()); st != CLINSIM_OK)
    return finish(st);
  if (!token.empty())
    if (auto st = clinsim_engine_set_educator_token(e, token.c_str()); st != CLINSIM_OK) return finish(st);
  std::cerr << "serving " << loaded << " case(s) on " << host << ":" << port << "\n";
  return finish(clinsim_engine_serve(e, host.c_str(), port));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Clinical scenario simulator"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(clinsim_version()));
  int code = kExitOk;

  auto* case_cmd = app.add_subcommand("case", "Case documents")->require_subcommand(1);
  auto* validate = case_cmd->add_subcommand("validate", "Check a case file against its invariants");
  std::string case_file;
  bool json_out = false;
  validate->add_option("file", case_file, "Case file")->required();
  validate->add_flag("--json", json_out, "Print diagnostics as JSON");
  validate->callback([&] { code = case_validate(case_file, json_out); });

  auto* sim_cmd = app.add_subcommand("simulate", "Headless sessions")->require_subcommand(1);
  auto* run = sim_cmd->add_subcommand("run", "Replay an action script and print the session export");
  std::string script_file;
  std::string out_file;
  run->add_option("--case", case_file, "Case file")->required();
  run->add_option("--script", script_file, "Action script")->required();
  run->add_option("--out", out_file, "Write the export here instead of stdout");
  run->callback([&] { code = simulate_run(case_file, script_file, out_file); });

  auto* session_cmd = app.add_subcommand("session", "Sessions on a running server")->require_subcommand(1);
  auto* export_cmd = session_cmd->add_subcommand("export", "Fetch a session export document");
  std::string session_id;
  std::string host = "127.0.0.1";
  int port = 8080;
  export_cmd->add_option("id", session_id, "Session id")->required();
  export_cmd->add_option("--host", host, "Server host");
  export_cmd->add_option("--port", port, "Server port");
  export_cmd->add_option("--out", out_file, "Write the export here instead of stdout");
  export_cmd->callback([&] { code = session_export(session_id, host, port, out_file); });

  auto* re_cmd = app.add_subcommand("re", "Requirements toolkit")->require_subcommand(1);
  std::string corpus_dir;
  auto* lint = re_cmd->add_subcommand("lint", "Check corpus traceability");
  lint->add_option("dir", corpus_dir, "Corpus directory")->required();
  lint->add_flag("--json", json_out, "Print diagnostics as JSON");
  lint->callback([&] { code = re_lint(corpus_dir, json_out); });

  auto* prioritize = re_cmd->add_subcommand("prioritize", "Rank user stories");
  std::vector<double> weights;
  prioritize->add_option("dir", corpus_dir, "Corpus directory")->required();
  prioritize->add_option("--weights", weights, "clinical_risk,learning_value,complexity")->delimiter(',');
  prioritize->add_flag("--json", json_out, "Print the ranking as JSON");
  prioritize->callback([&] { code = re_prioritize(corpus_dir, weights, json_out); });

  auto* story = re_cmd->add_subcommand("story", "User stories")->require_subcommand(1);
  auto* parse = story->add_subcommand("parse", "Parse one user story sentence");
  std::string story_text;
  parse->add_option("dir", corpus_dir, "Corpus directory")->required();
  parse->add_option("text", story_text, "Story sentence")->required();
  parse->callback([&] { code = re_story_parse(corpus_dir, story_text); });

  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP API");
  std::string cases_dir;
  std::string token;
  std::string backend;
  std::string bind_host = "127.0.0.1";
  serve_cmd->add_option("--port", port, "Port")->required();
  serve_cmd->add_option("--cases", cases_dir, "Directory of case files")->required();
  serve_cmd->add_option("--host", bind_host, "Bind address");
  serve_cmd->add_option("--educator-token", token, "Bearer token for dashboard endpoints");
  serve_cmd->add_option("--backend", backend, "Dialogue backend; defaults to CLINSIM_BACKEND or script");
  serve_cmd->callback([&] { code = serve(bind_host, port, cases_dir, token, backend); });

  CLI11_PARSE(app, argc, argv);
  return code;
}
