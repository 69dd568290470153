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

#include "clinsim/case_model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "json.hpp"

namespace clinsim {

namespace {

using Json = nlohmann::json;
using OrderedJson = nlohmann::ordered_json;

constexpr std::string_view kTopLevelKeys[] = {
    "format",          "case_id",      "title",          "demographics",
    "chief_complaint", "hidden_diagnosis", "differential", "symptom_script",
    "exam_findings",   "test_catalog", "evidence_links", "intervention_protocol",
    "rubric",          "forbidden_terms", "rule_out_threshold",
};

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  return out;
}

std::string child(const std::string& path, std::string_view key) {
  return path + "/" + std::string(key);
}
std::string child(const std::string& path, size_t index) {
  return path + "/" + std::to_string(index);
}

// Schema reader that reports JSON pointer paths.
class Reader {
 public:
  Reader(const Json& obj, std::string path, std::initializer_list<std::string_view> allowed)
      : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw ParseError("expected an object", path_.empty() ? "/" : path_);
    for (const auto& [key, _] : obj_.items()) {
      if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
        throw ParseError(fmt::format("unknown key '{}'", key), child(path_, key));
    }
  }

  const std::string& path() const { return path_; }
  std::string at(std::string_view key) const { return child(path_, key); }
  bool has(std::string_view key) const { return obj_.contains(std::string(key)); }

  const Json& value(std::string_view key) const {
    auto it = obj_.find(std::string(key));
    if (it == obj_.end()) throw ParseError(fmt::format("missing key '{}'", key), at(key));
    return *it;
  }

  std::string str(std::string_view key) const {
    const Json& v = value(key);
    if (!v.is_string()) throw ParseError(fmt::format("'{}' must be a string", key), at(key));
    return v.get<std::string>();
  }

  double number(std::string_view key) const {
    const Json& v = value(key);
    if (!v.is_number()) throw ParseError(fmt::format("'{}' must be a number", key), at(key));
    return v.get<double>();
  }

  int integer(std::string_view key) const {
    const Json& v = value(key);
    if (!v.is_number_integer()) throw ParseError(fmt::format("'{}' must be an integer", key), at(key));
    return v.get<int>();
  }

  const Json& array(std::string_view key) const {
    const Json& v = value(key);
    if (!v.is_array()) throw ParseError(fmt::format("'{}' must be an array", key), at(key));
    return v;
  }

  const Json& object(std::string_view key) const {
    const Json& v = value(key);
    if (!v.is_object()) throw ParseError(fmt::format("'{}' must be an object", key), at(key));
    return v;
  }

  std::vector<std::string> strings(std::string_view key) const {
    std::vector<std::string> out;
    const Json& arr = array(key);
    for (size_t i = 0; i < arr.size(); ++i) {
      if (!arr[i].is_string()) throw ParseError("expected a string", child(at(key), i));
      out.push_back(arr[i].get<std::string>());
    }
    return out;
  }

  std::set<std::string> string_set(std::string_view key, bool lowercase = false) const {
    std::set<std::string> out;
    for (auto& s : strings(key)) out.insert(lowercase ? lower(s) : s);
    return out;
  }

 private:
  const Json& obj_;
  std::string path_;
};

template <typename Enum, size_t N>
Enum parse_enum(const std::string& value, const std::pair<std::string_view, Enum> (&table)[N],
                const std::string& path) {
  for (const auto& [name, e] : table)
    if (name == value) return e;
  throw ParseError(fmt::format("unknown value '{}'", value), path);
}

constexpr std::pair<std::string_view, Sex> kSexNames[] = {
    {"female", Sex::female}, {"male", Sex::male}, {"other", Sex::other}};
constexpr std::pair<std::string_view, Modality> kModalityNames[] = {
    {"laboratory", Modality::laboratory}, {"imaging", Modality::imaging},
    {"procedure", Modality::procedure}};
constexpr std::pair<std::string_view, RubricCategory> kCategoryNames[] = {
    {"history", RubricCategory::history},           {"exam", RubricCategory::exam},
    {"diagnostics", RubricCategory::diagnostics},   {"intervention", RubricCategory::intervention},
    {"communication", RubricCategory::communication}};
constexpr std::pair<std::string_view, Turnaround> kTurnaroundNames[] = {
    {"immediate", Turnaround::immediate}};

Demographics read_demographics(const Json& j, const std::string& path) {
  Reader r(j, path, {"age", "sex", "history"});
  Demographics d;
  d.age = r.integer("age");
  d.sex = parse_enum(r.str("sex"), kSexNames, r.at("sex"));
  d.history = r.strings("history");
  return d;
}

SymptomScriptEntry read_script_entry(const Json& j, const std::string& path) {
  Reader r(j, path, {"entry_id", "keywords", "response_text", "reveals"});
  SymptomScriptEntry e;
  e.entry_id = r.str("entry_id");
  e.keywords = r.string_set("keywords", /*lowercase=*/true);
  e.response_text = r.str("response_text");
  e.reveals = r.strings("reveals");
  return e;
}

ExamFinding read_exam(const Json& j, const std::string& path, const std::string& key) {
  Reader r(j, path, {"exam_id", "label", "result_text", "finding_ids", "vitals", "coverage"});
  ExamFinding e;
  e.exam_id = r.str("exam_id");
  if (e.exam_id != key)
    throw ParseError(fmt::format("exam_id '{}' does not match its key '{}'", e.exam_id, key),
                     r.at("exam_id"));
  e.label = r.str("label");
  e.result_text = r.str("result_text");
  e.finding_ids = r.strings("finding_ids");
  if (r.has("vitals")) {
    std::map<std::string, VitalSign> vitals;
    for (const auto& [name, v] : r.object("vitals").items()) {
      Reader vr(v, child(r.at("vitals"), name), {"value", "unit"});
      vitals[name] = VitalSign{vr.number("value"), vr.str("unit")};
    }
    e.vitals = std::move(vitals);
  }
  if (r.has("coverage")) e.coverage = r.strings("coverage");
  return e;
}

TestCatalogEntry read_test(const Json& j, const std::string& path, const std::string& key) {
  Reader r(j, path, {"test_id", "modality", "label", "result_text", "finding_ids", "turnaround"});
  TestCatalogEntry t;
  t.test_id = r.str("test_id");
  if (t.test_id != key)
    throw ParseError(fmt::format("test_id '{}' does not match its key '{}'", t.test_id, key),
                     r.at("test_id"));
  t.modality = parse_enum(r.str("modality"), kModalityNames, r.at("modality"));
  t.label = r.str("label");
  t.result_text = r.str("result_text");
  t.finding_ids = r.strings("finding_ids");
  if (r.has("turnaround"))
    t.turnaround = parse_enum(r.str("turnaround"), kTurnaroundNames, r.at("turnaround"));
  return t;
}

EvidenceLink read_link(const Json& j, const std::string& path) {
  Reader r(j, path, {"disease", "finding", "weight"});
  return EvidenceLink{r.str("disease"), r.str("finding"), r.number("weight")};
}

InterventionRule read_intervention(const Json& j, const std::string& path) {
  Reader r(j, path,
           {"intervention_id", "label", "indicated_if", "contraindicated_if", "reason_code",
            "outcome_text"});
  InterventionRule rule;
  rule.intervention_id = r.str("intervention_id");
  rule.label = r.str("label");
  rule.indicated_if = r.string_set("indicated_if");
  rule.contraindicated_if = r.string_set("contraindicated_if");
  rule.reason_code = r.str("reason_code");
  rule.outcome_text = r.str("outcome_text");
  return rule;
}

EventMatcher read_matcher(const Json& j, const std::string& path) {
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string())
    throw ParseError("event matcher needs a string 'kind'", child(path, "kind"));
  const std::string kind = j["kind"].get<std::string>();
  if (kind == "action_of_kind") {
    Reader r(j, path, {"kind", "action", "target"});
    auto action = action_kind_from_string(r.str("action"));
    if (!action) throw ParseError(fmt::format("unknown action '{}'", r.str("action")), r.at("action"));
    return ActionOfKind{*action, r.has("target") ? r.str("target") : std::string{}};
  }
  if (kind == "patient_question_containing") {
    Reader r(j, path, {"kind", "keywords"});
    auto keywords = r.string_set("keywords", /*lowercase=*/true);
    if (keywords.empty()) throw ParseError("keyword set must be non-empty", r.at("keywords"));
    return PatientQuestionContaining{std::move(keywords)};
  }
  if (kind == "finding_observed") {
    Reader r(j, path, {"kind", "finding"});
    return FindingObserved{r.str("finding")};
  }
  if (kind == "diagnosis_submitted") {
    Reader r(j, path, {"kind", "disease"});
    return DiagnosisSubmitted{r.str("disease")};
  }
  throw ParseError(fmt::format("unknown matcher kind '{}'", kind), child(path, "kind"));
}

RubricItem read_rubric_item(const Json& j, const std::string& path) {
  Reader r(j, path, {"item_id", "description", "category", "required_events", "weight"});
  RubricItem item;
  item.item_id = r.str("item_id");
  item.description = r.str("description");
  item.category = parse_enum(r.str("category"), kCategoryNames, r.at("category"));
  item.weight = r.number("weight");
  const Json& events = r.array("required_events");
  for (size_t i = 0; i < events.size(); ++i)
    item.required_events.push_back(read_matcher(events[i], child(r.at("required_events"), i)));
  return item;
}

// First dangling id, in document order.
void check_references(const ClinicalCase& c) {
  if (!c.has_disease(c.hidden_diagnosis))
    throw ReferenceError(
        fmt::format("hidden_diagnosis '{}' is not in the differential", c.hidden_diagnosis),
        c.hidden_diagnosis, "/hidden_diagnosis");
  for (size_t i = 0; i < c.evidence_links.size(); ++i) {
    const auto& link = c.evidence_links[i];
    if (!c.has_disease(link.disease))
      throw ReferenceError(fmt::format("evidence link names unknown disease '{}'", link.disease),
                           link.disease, fmt::format("/evidence_links/{}/disease", i));
  }
  for (size_t i = 0; i < c.rubric.size(); ++i) {
    const auto& events = c.rubric[i].required_events;
    for (size_t k = 0; k < events.size(); ++k) {
      const std::string path = fmt::format("/rubric/{}/required_events/{}", i, k);
      if (const auto* a = std::get_if<ActionOfKind>(&events[k]); a && !a->target.empty()) {
        bool known = true;
        if (a->action == ActionKind::request_exam) known = c.exam_findings.contains(a->target);
        if (a->action == ActionKind::order_test) known = c.test_catalog.contains(a->target);
        if (a->action == ActionKind::intervene) known = c.find_intervention(a->target) != nullptr;
        if (!known)
          throw ReferenceError(fmt::format("rubric event names unknown target '{}'", a->target),
                               a->target, path + "/target");
      }
      if (const auto* d = std::get_if<DiagnosisSubmitted>(&events[k]); d && !c.has_disease(d->disease))
        throw ReferenceError(fmt::format("rubric event names unknown disease '{}'", d->disease),
                             d->disease, path + "/disease");
    }
  }
}

int line_of(std::string_view source, size_t byte) {
  byte = std::min(byte, source.size());
  return 1 + static_cast<int>(std::count(source.begin(), source.begin() + byte, '\n'));
}

bool is_snake_id(std::string_view id) {
  if (id.empty()) return false;
  return std::all_of(id.begin(), id.end(), [](unsigned char ch) {
    return std::islower(ch) || std::isdigit(ch) || ch == '_';
  });
}

std::vector<std::string> leaked_terms(std::string_view text, const std::vector<std::string>& terms) {
  const std::string haystack = lower(text);
  std::vector<std::string> hits;
  for (const auto& term : terms)
    if (!term.empty() && haystack.find(lower(term)) != std::string::npos) hits.push_back(term);
  return hits;
}

std::string join(const std::vector<std::string>& items, std::string_view sep) {
  std::string out;
  for (size_t i = 0; i < items.size(); ++i) {
    if (i) out += sep;
    out += items[i];
  }
  return out;
}

}  // namespace

std::string_view to_string(ActionKind k) {
  switch (k) {
    case ActionKind::ask_patient: return "ask_patient";
    case ActionKind::request_exam: return "request_exam";
    case ActionKind::order_test: return "order_test";
    case ActionKind::intervene: return "intervene";
    case ActionKind::ask_supervisor: return "ask_supervisor";
    case ActionKind::request_explanation: return "request_explanation";
    case ActionKind::end_case: return "end_case";
  }
  return "unknown";
}

std::optional<ActionKind> action_kind_from_string(std::string_view s) {
  for (auto k : kAllActionKinds)
    if (to_string(k) == s) return k;
  return std::nullopt;
}

std::string_view to_string(Sex s) {
  for (const auto& [name, v] : kSexNames)
    if (v == s) return name;
  return "other";
}

std::string_view to_string(Modality m) {
  for (const auto& [name, v] : kModalityNames)
    if (v == m) return name;
  return "laboratory";
}

std::string_view to_string(RubricCategory c) {
  for (const auto& [name, v] : kCategoryNames)
    if (v == c) return name;
  return "history";
}

std::string describe(const EventMatcher& m) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, ActionOfKind>) {
          return v.target.empty() ? std::string(to_string(v.action))
                                  : fmt::format("{}:{}", to_string(v.action), v.target);
        } else if constexpr (std::is_same_v<T, PatientQuestionContaining>) {
          return "question:" + join({v.keywords.begin(), v.keywords.end()}, "|");
        } else if constexpr (std::is_same_v<T, FindingObserved>) {
          return "finding:" + v.finding;
        } else {
          return "diagnosis:" + v.disease;
        }
      },
      m);
}

bool ClinicalCase::has_disease(std::string_view id) const {
  return std::find(differential.begin(), differential.end(), id) != differential.end();
}

const InterventionRule* ClinicalCase::find_intervention(std::string_view id) const {
  for (const auto& rule : intervention_protocol)
    if (rule.intervention_id == id) return &rule;
  return nullptr;
}

std::set<FindingId> ClinicalCase::discoverable_findings() const {
  std::set<FindingId> out;
  for (const auto& e : symptom_script) out.insert(e.reveals.begin(), e.reveals.end());
  for (const auto& [_, exam] : exam_findings) out.insert(exam.finding_ids.begin(), exam.finding_ids.end());
  for (const auto& [_, test] : test_catalog) out.insert(test.finding_ids.begin(), test.finding_ids.end());
  return out;
}

std::string display_name(std::string_view disease_id) {
  std::string out(disease_id);
  std::replace(out.begin(), out.end(), '_', ' ');
  return out;
}

ClinicalCase parse_case(std::string_view source) {
  Json doc;
  try {
    doc = Json::parse(source.begin(), source.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(e.what(), "", line_of(source, e.byte == 0 ? 0 : e.byte - 1));
  }
  if (!doc.is_object()) throw ParseError("case document must be a JSON object", "/");

  if (!doc.contains("format")) throw ParseError("missing key 'format'", "/format");
  if (!doc["format"].is_number_integer() || doc["format"].get<int>() != kCaseFormatVersion)
    throw ParseError(fmt::format("unsupported format {}", doc["format"].dump()), "/format");
  for (const auto& [key, _] : doc.items())
    if (std::find(std::begin(kTopLevelKeys), std::end(kTopLevelKeys), key) == std::end(kTopLevelKeys))
      throw ParseError(fmt::format("unknown key '{}'", key), "/" + key);
  for (auto key : kTopLevelKeys)
    if (!doc.contains(std::string(key)))
      throw ParseError(fmt::format("missing key '{}'", key), "/" + std::string(key));

  Reader r(doc, "",
           {"format", "case_id", "title", "demographics", "chief_complaint", "hidden_diagnosis",
            "differential", "symptom_script", "exam_findings", "test_catalog", "evidence_links",
            "intervention_protocol", "rubric", "forbidden_terms", "rule_out_threshold"});

  ClinicalCase c;
  c.case_id = r.str("case_id");
  c.title = r.str("title");
  c.demographics = read_demographics(r.object("demographics"), "/demographics");
  c.chief_complaint = r.str("chief_complaint");
  c.hidden_diagnosis = r.str("hidden_diagnosis");
  c.differential = r.strings("differential");
  if (c.differential.empty()) throw ParseError("differential must be non-empty", "/differential");

  const Json& script = r.array("symptom_script");
  for (size_t i = 0; i < script.size(); ++i)
    c.symptom_script.push_back(read_script_entry(script[i], child("/symptom_script", i)));

  for (const auto& [key, value] : r.object("exam_findings").items())
    c.exam_findings.emplace(key, read_exam(value, child("/exam_findings", key), key));
  for (const auto& [key, value] : r.object("test_catalog").items())
    c.test_catalog.emplace(key, read_test(value, child("/test_catalog", key), key));

  const Json& links = r.array("evidence_links");
  for (size_t i = 0; i < links.size(); ++i)
    c.evidence_links.push_back(read_link(links[i], child("/evidence_links", i)));

  const Json& protocol = r.array("intervention_protocol");
  for (size_t i = 0; i < protocol.size(); ++i)
    c.intervention_protocol.push_back(read_intervention(protocol[i], child("/intervention_protocol", i)));

  const Json& rubric = r.array("rubric");
  if (rubric.empty()) throw ParseError("rubric must be non-empty", "/rubric");
  for (size_t i = 0; i < rubric.size(); ++i)
    c.rubric.push_back(read_rubric_item(rubric[i], child("/rubric", i)));

  for (auto& term : r.strings("forbidden_terms")) c.forbidden_terms.push_back(lower(term));
  const std::string hidden_name = display_name(c.hidden_diagnosis);
  if (std::find(c.forbidden_terms.begin(), c.forbidden_terms.end(), hidden_name) ==
      c.forbidden_terms.end())
    c.forbidden_terms.push_back(hidden_name);

  c.rule_out_threshold = r.number("rule_out_threshold");

  check_references(c);
  return c;
}

std::string serialize_case(const ClinicalCase& c) {
  OrderedJson doc;
  doc["format"] = kCaseFormatVersion;
  doc["case_id"] = c.case_id;
  doc["title"] = c.title;
  doc["demographics"] = OrderedJson{{"age", c.demographics.age},
                                    {"sex", to_string(c.demographics.sex)},
                                    {"history", c.demographics.history}};
  doc["chief_complaint"] = c.chief_complaint;
  doc["hidden_diagnosis"] = c.hidden_diagnosis;
  doc["differential"] = c.differential;

  OrderedJson script = OrderedJson::array();
  for (const auto& e : c.symptom_script)
    script.push_back(OrderedJson{{"entry_id", e.entry_id},
                                 {"keywords", e.keywords},
                                 {"response_text", e.response_text},
                                 {"reveals", e.reveals}});
  doc["symptom_script"] = std::move(script);

  OrderedJson exams = OrderedJson::object();
  for (const auto& [id, e] : c.exam_findings) {
    OrderedJson exam{{"exam_id", e.exam_id},
                     {"label", e.label},
                     {"result_text", e.result_text},
                     {"finding_ids", e.finding_ids}};
    if (e.vitals) {
      OrderedJson vitals = OrderedJson::object();
      for (const auto& [name, v] : *e.vitals) vitals[name] = OrderedJson{{"value", v.value}, {"unit", v.unit}};
      exam["vitals"] = std::move(vitals);
    }
    if (!e.coverage.empty()) exam["coverage"] = e.coverage;
    exams[id] = std::move(exam);
  }
  doc["exam_findings"] = std::move(exams);

  OrderedJson tests = OrderedJson::object();
  for (const auto& [id, t] : c.test_catalog)
    tests[id] = OrderedJson{{"test_id", t.test_id},
                            {"modality", to_string(t.modality)},
                            {"label", t.label},
                            {"result_text", t.result_text},
                            {"finding_ids", t.finding_ids},
                            {"turnaround", "immediate"}};
  doc["test_catalog"] = std::move(tests);

  OrderedJson links = OrderedJson::array();
  for (const auto& l : c.evidence_links)
    links.push_back(OrderedJson{{"disease", l.disease}, {"finding", l.finding}, {"weight", l.weight}});
  doc["evidence_links"] = std::move(links);

  OrderedJson protocol = OrderedJson::array();
  for (const auto& rule : c.intervention_protocol)
    protocol.push_back(OrderedJson{{"intervention_id", rule.intervention_id},
                                   {"label", rule.label},
                                   {"indicated_if", rule.indicated_if},
                                   {"contraindicated_if", rule.contraindicated_if},
                                   {"reason_code", rule.reason_code},
                                   {"outcome_text", rule.outcome_text}});
  doc["intervention_protocol"] = std::move(protocol);

  OrderedJson rubric = OrderedJson::array();
  for (const auto& item : c.rubric) {
    OrderedJson events = OrderedJson::array();
    for (const auto& m : item.required_events) {
      std::visit(
          [&events](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, ActionOfKind>) {
              OrderedJson e{{"kind", "action_of_kind"}, {"action", to_string(v.action)}};
              if (!v.target.empty()) e["target"] = v.target;
              events.push_back(std::move(e));
            } else if constexpr (std::is_same_v<T, PatientQuestionContaining>) {
              events.push_back(OrderedJson{{"kind", "patient_question_containing"}, {"keywords", v.keywords}});
            } else if constexpr (std::is_same_v<T, FindingObserved>) {
              events.push_back(OrderedJson{{"kind", "finding_observed"}, {"finding", v.finding}});
            } else {
              events.push_back(OrderedJson{{"kind", "diagnosis_submitted"}, {"disease", v.disease}});
            }
          },
          m);
    }
    rubric.push_back(OrderedJson{{"item_id", item.item_id},
                                 {"description", item.description},
                                 {"category", to_string(item.category)},
                                 {"weight", item.weight},
                                 {"required_events", std::move(events)}});
  }
  doc["rubric"] = std::move(rubric);
  doc["forbidden_terms"] = c.forbidden_terms;
  doc["rule_out_threshold"] = c.rule_out_threshold;
  return doc.dump(2) + "\n";
}

ClinicalCase load_case_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io_error, fmt::format("cannot open '{}'", path), path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_case(buf.str());
}

std::vector<Diagnostic> validate_case(const ClinicalCase& c) {
  std::vector<Diagnostic> out;
  auto error = [&out](std::string path, std::string message) {
    out.push_back(Diagnostic{Severity::error, std::move(path), std::move(message), {}});
  };
  auto check_leak = [&](std::string_view text, std::string path) {
    auto hits = leaked_terms(text, c.forbidden_terms);
    if (!hits.empty())
      error(std::move(path), fmt::format("text discloses forbidden term(s): {}", join(hits, ", ")));
  };
  auto check_id = [&](std::string_view id, std::string path) {
    if (!is_snake_id(id)) error(std::move(path), fmt::format("'{}' is not a lowercase snake_case id", id));
  };

  if (c.case_id.empty()) error("/case_id", "case_id must be non-empty");
  if (c.title.empty()) error("/title", "title must be non-empty");
  if (c.chief_complaint.empty()) error("/chief_complaint", "chief_complaint must be non-empty");
  if (c.demographics.age < 0) error("/demographics/age", "age must be non-negative");

  if (c.differential.empty()) error("/differential", "differential must be non-empty");
  std::set<std::string> seen;
  for (size_t i = 0; i < c.differential.size(); ++i) {
    check_id(c.differential[i], child("/differential", i));
    if (!seen.insert(c.differential[i]).second)
      error(child("/differential", i), fmt::format("duplicate disease '{}'", c.differential[i]));
  }
  if (!c.has_disease(c.hidden_diagnosis))
    error("/hidden_diagnosis",
          fmt::format("hidden_diagnosis '{}' is not in the differential", c.hidden_diagnosis));

  const std::string hidden_name = display_name(c.hidden_diagnosis);
  if (std::find(c.forbidden_terms.begin(), c.forbidden_terms.end(), hidden_name) ==
      c.forbidden_terms.end())
    error("/forbidden_terms", fmt::format("must include the hidden diagnosis name '{}'", hidden_name));
  for (size_t i = 0; i < c.forbidden_terms.size(); ++i) {
    const auto& term = c.forbidden_terms[i];
    if (term.empty()) error(child("/forbidden_terms", i), "forbidden term must be non-empty");
    else if (term != lower(term)) error(child("/forbidden_terms", i), fmt::format("'{}' must be lowercase", term));
  }

  seen.clear();
  for (size_t i = 0; i < c.symptom_script.size(); ++i) {
    const auto& e = c.symptom_script[i];
    const std::string path = child("/symptom_script", i);
    check_id(e.entry_id, path + "/entry_id");
    if (!seen.insert(e.entry_id).second)
      error(path + "/entry_id", fmt::format("duplicate entry '{}'", e.entry_id));
    if (e.keywords.empty()) error(path + "/keywords", "keywords must be non-empty");
    if (e.response_text.empty()) error(path + "/response_text", "response_text must be non-empty");
    check_leak(e.response_text, path + "/response_text");
  }

  for (const auto& [id, exam] : c.exam_findings) {
    const std::string path = child("/exam_findings", id);
    check_id(id, path);
    if (exam.exam_id != id) error(path + "/exam_id", "exam_id does not match its key");
    if (exam.result_text.empty()) error(path + "/result_text", "result_text must be non-empty");
    check_leak(exam.result_text, path + "/result_text");
  }

  for (const auto& [id, test] : c.test_catalog) {
    const std::string path = child("/test_catalog", id);
    check_id(id, path);
    if (test.test_id != id) error(path + "/test_id", "test_id does not match its key");
    if (test.result_text.empty()) error(path + "/result_text", "result_text must be non-empty");
    check_leak(test.result_text, path + "/result_text");
  }

  std::set<std::pair<std::string, std::string>> pairs;
  for (size_t i = 0; i < c.evidence_links.size(); ++i) {
    const auto& l = c.evidence_links[i];
    const std::string path = child("/evidence_links", i);
    if (!c.has_disease(l.disease))
      error(path + "/disease", fmt::format("unknown disease '{}' (not in the differential)", l.disease));
    if (!pairs.emplace(l.disease, l.finding).second)
      error(path, fmt::format("duplicate link ({}, {})", l.disease, l.finding));
    if (!std::isfinite(l.weight)) error(path + "/weight", "weight must be finite");
  }

  seen.clear();
  for (size_t i = 0; i < c.intervention_protocol.size(); ++i) {
    const auto& rule = c.intervention_protocol[i];
    const std::string path = child("/intervention_protocol", i);
    check_id(rule.intervention_id, path + "/intervention_id");
    if (!seen.insert(rule.intervention_id).second)
      error(path + "/intervention_id", fmt::format("duplicate intervention '{}'", rule.intervention_id));
    std::vector<std::string> overlap;
    std::set_intersection(rule.indicated_if.begin(), rule.indicated_if.end(),
                          rule.contraindicated_if.begin(), rule.contraindicated_if.end(),
                          std::back_inserter(overlap));
    if (!overlap.empty())
      error(path, fmt::format("findings both indicate and contraindicate: {}", join(overlap, ", ")));
    if (rule.reason_code.empty()) error(path + "/reason_code", "reason_code must be non-empty");
    check_leak(rule.outcome_text, path + "/outcome_text");
  }

  if (c.rubric.empty()) error("/rubric", "rubric must be non-empty");
  double total_weight = 0.0;
  seen.clear();
  for (size_t i = 0; i < c.rubric.size(); ++i) {
    const auto& item = c.rubric[i];
    const std::string path = child("/rubric", i);
    check_id(item.item_id, path + "/item_id");
    if (!seen.insert(item.item_id).second)
      error(path + "/item_id", fmt::format("duplicate rubric item '{}'", item.item_id));
    if (!(item.weight > 0.0) || !std::isfinite(item.weight))
      error(path + "/weight", "weight must be a positive finite number");
    else
      total_weight += item.weight;
    if (item.required_events.empty()) error(path + "/required_events", "required_events must be non-empty");
    for (size_t k = 0; k < item.required_events.size(); ++k) {
      const std::string epath = child(path + "/required_events", k);
      const auto& m = item.required_events[k];
      if (const auto* a = std::get_if<ActionOfKind>(&m); a && !a->target.empty()) {
        bool known = true;
        if (a->action == ActionKind::request_exam) known = c.exam_findings.contains(a->target);
        if (a->action == ActionKind::order_test) known = c.test_catalog.contains(a->target);
        if (a->action == ActionKind::intervene) known = c.find_intervention(a->target) != nullptr;
        if (!known) error(epath + "/target", fmt::format("unknown target '{}'", a->target));
      } else if (const auto* q = std::get_if<PatientQuestionContaining>(&m); q && q->keywords.empty()) {
        error(epath + "/keywords", "keyword set must be non-empty");
      } else if (const auto* d = std::get_if<DiagnosisSubmitted>(&m); d && !c.has_disease(d->disease)) {
        error(epath + "/disease", fmt::format("unknown disease '{}'", d->disease));
      }
    }
  }
  if (!c.rubric.empty() && !(total_weight > 0.0)) error("/rubric", "rubric weights must sum to a positive value");

  if (!(c.rule_out_threshold < 0.0) || !std::isfinite(c.rule_out_threshold))
    error("/rule_out_threshold", "rule_out_threshold must be a finite negative number");

  sort_diagnostics(out);
  return out;
}

}  // namespace clinsim
