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

#include "clinsim/clinical_agents.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>

#include <fmt/format.h>

namespace clinsim {

namespace {

std::string join(const std::vector<std::string>& items, std::string_view sep) {
  std::string out;
  for (size_t i = 0; i < items.size(); ++i) {
    if (i) out += sep;
    out += items[i];
  }
  return out;
}

ExplanationRecord make_explanation(AgentId agent) {
  ExplanationRecord e;
  e.agent_id = agent;
  e.kind = explanation_kind_for(agent);
  return e;
}

// (disease, finding) -> weight
using LinkIndex = std::map<std::pair<std::string, std::string>, double>;

LinkIndex index_links(const ClinicalCase& c) {
  LinkIndex index;
  for (const auto& l : c.evidence_links) index.emplace(std::pair{l.disease, l.finding}, l.weight);
  return index;
}

DiseaseScore score_one(const ClinicalCase& c, const LinkIndex& links, const ObservationSet& obs,
                       const DiseaseId& disease) {
  DiseaseScore s;
  s.disease = disease;
  for (const auto& f : obs.findings()) {
    auto it = links.find({disease, f});
    if (it != links.end()) s.contributions.push_back({f, it->second});
  }
  s.score = sum_contributions(s.contributions);
  s.status = s.score < c.rule_out_threshold ? DiseaseStatus::ruled_out : DiseaseStatus::candidate;
  return s;
}

}  // namespace

ObservationSet::ObservationSet(std::initializer_list<FindingId> findings, std::string decision_id) {
  for (const auto& f : findings) record(f, decision_id);
}

void ObservationSet::record(const FindingId& finding, const std::string& decision_id) {
  if (findings_.insert(finding).second) provenance_.emplace(finding, decision_id);
}

void ObservationSet::record(std::span<const FindingId> findings, const std::string& decision_id) {
  for (const auto& f : findings) record(f, decision_id);
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (unsigned char ch : text) {
    if (std::isalnum(ch)) {
      current += static_cast<char>(std::tolower(ch));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

bool keyword_in_text(std::string_view keyword, std::span<const std::string> text_tokens) {
  const auto needle = tokenize(keyword);
  if (needle.empty() || needle.size() > text_tokens.size()) return false;
  return std::search(text_tokens.begin(), text_tokens.end(), needle.begin(), needle.end()) !=
         text_tokens.end();
}

ScriptMatch match_script_entry(const ClinicalCase& c, std::string_view question) {
  const auto tokens = tokenize(question);
  ScriptMatch best;
  if (tokens.empty()) return best;
  for (const auto& entry : c.symptom_script) {
    std::vector<std::string> matched;
    for (const auto& kw : entry.keywords)
      if (keyword_in_text(kw, tokens)) matched.push_back(kw);
    // Strictly greater keeps the earliest entry on ties.
    if (matched.size() > best.matched_keywords.size()) {
      best.entry = &entry;
      best.matched_keywords = std::move(matched);
    }
  }
  return best;
}

AgentResponse patient_reply(const ClinicalCase& c, const ObservationSet& observations,
                            std::string_view question, std::span<const PatientTurn> history,
                            const DialogueBackend* backend) {
  static const ScriptBackend kDefaultBackend;
  if (backend == nullptr) backend = &kDefaultBackend;

  const auto match = match_script_entry(c, question);
  const AgentRegistry registry = build_agent_registry(c);
  const std::string candidate =
      backend->reply(DialogueRequest{registry.at(AgentId::patient), c, question, match.entry});
  GuardResult guarded = guard_disclosure(candidate, c.forbidden_terms);

  ExplanationRecord e = make_explanation(AgentId::patient);
  std::vector<FindingId> revealed;
  if (match.entry == nullptr) {
    e.reason_codes.push_back("no_script_match");
    e.reason_codes.push_back(fmt::format("prior_questions:{}", history.size()));
    e.narrative = "The question did not match any scripted topic, so the patient asked for a rephrase.";
  } else {
    const auto& entry = *match.entry;
    e.reason_codes.push_back("entry:" + entry.entry_id);
    for (const auto& kw : match.matched_keywords) e.reason_codes.push_back("matched:" + kw);
    std::vector<std::string> related;
    for (const auto& turn : history) {
      if (turn.entry_id == entry.entry_id) {
        e.reason_codes.push_back("related_prior:" + turn.decision_id);
        related.push_back(turn.decision_id);
      }
    }
    revealed = entry.reveals;
    for (const auto& f : revealed)
      if (!observations.contains(f)) e.reason_codes.push_back("new_finding:" + f);
    e.rule_ids.push_back("script." + entry.entry_id);
    e.narrative = fmt::format("Answered from script topic '{}' because the question mentioned: {}.",
                              entry.entry_id, join(match.matched_keywords, ", "));
    if (!related.empty())
      e.narrative += fmt::format(" The same topic came up earlier in {}.", join(related, ", "));
  }
  if (!guarded.passed) e.reason_codes.push_back("disclosure_redacted");
  return AgentResponse(AgentId::patient, std::move(guarded.text), std::move(revealed), std::move(e));
}

AgentResponse exam_perform(const ClinicalCase& c, const ObservationSet& observations,
                           std::string_view exam_id) {
  auto it = c.exam_findings.find(std::string(exam_id));
  if (it == c.exam_findings.end())
    throw Error(ErrorCode::unknown_exam, fmt::format("unknown exam '{}'", exam_id), std::string(exam_id));
  const ExamFinding& exam = it->second;

  std::string content = fmt::format("{}: {}", exam.label, exam.result_text);
  if (exam.vitals) {
    std::vector<std::string> parts;
    for (const auto& [name, v] : *exam.vitals) parts.push_back(fmt::format("{} {} {}", name, v.value, v.unit));
    content += "\nVitals: " + join(parts, "; ");
  }

  ExplanationRecord e = make_explanation(AgentId::physical_exam);
  if (exam.coverage.empty()) {
    e.reason_codes.push_back("coverage:" + exam.exam_id);
  } else {
    for (const auto& area : exam.coverage) e.reason_codes.push_back("coverage:" + area);
  }
  for (const auto& f : exam.finding_ids) {
    e.reason_codes.push_back("finding:" + f);
    if (observations.contains(f)) e.reason_codes.push_back("already_observed:" + f);
  }
  e.rule_ids.push_back("exam." + exam.exam_id);
  e.narrative = fmt::format("{} covered {} and returned {} finding(s).", exam.label,
                            exam.coverage.empty() ? exam.exam_id : join(exam.coverage, ", "),
                            exam.finding_ids.size());
  return AgentResponse(AgentId::physical_exam, std::move(content), exam.finding_ids, std::move(e));
}

AgentResponse order_test(const ClinicalCase& c, const ObservationSet& observations,
                         std::string_view test_id) {
  auto it = c.test_catalog.find(std::string(test_id));
  if (it == c.test_catalog.end())
    throw Error(ErrorCode::unknown_test, fmt::format("unknown test '{}'", test_id), std::string(test_id));
  const TestCatalogEntry& test = it->second;

  // Signed weight of this test's findings per disease, and the |weight| used for ranking.
  struct Utility {
    DiseaseId disease;
    double signed_weight = 0.0;
    double magnitude = 0.0;
  };
  std::vector<Utility> utilities;
  for (const auto& disease : c.differential) {
    Utility u{disease};
    bool linked = false;
    for (const auto& l : c.evidence_links) {
      if (l.disease != disease) continue;
      if (std::find(test.finding_ids.begin(), test.finding_ids.end(), l.finding) == test.finding_ids.end())
        continue;
      u.signed_weight += l.weight;
      u.magnitude += std::fabs(l.weight);
      linked = true;
    }
    if (linked) utilities.push_back(u);
  }
  std::stable_sort(utilities.begin(), utilities.end(), [](const Utility& a, const Utility& b) {
    if (a.magnitude != b.magnitude) return a.magnitude > b.magnitude;
    return a.disease < b.disease;
  });

  ExplanationRecord e = make_explanation(AgentId::diagnostic);
  e.reason_codes.push_back(fmt::format("modality:{}", to_string(test.modality)));
  if (utilities.empty()) e.reason_codes.push_back("no_linked_disease");
  std::vector<std::string> named;
  for (const auto& u : utilities) {
    e.reason_codes.push_back("informs:" + u.disease);
    e.contributions.push_back({u.disease, u.signed_weight});
    named.push_back(fmt::format("{} ({:+})", u.disease, u.signed_weight));
  }
  for (const auto& f : test.finding_ids)
    if (observations.contains(f)) e.reason_codes.push_back("already_observed:" + f);
  e.rule_ids.push_back("catalog." + test.test_id);
  e.narrative = utilities.empty()
                    ? fmt::format("{} result has no encoded link to the differential.", test.label)
                    : fmt::format("{} result shifts the evidence for: {}.", test.label, join(named, ", "));
  return AgentResponse(AgentId::diagnostic, fmt::format("{}: {}", test.label, test.result_text),
                       test.finding_ids, std::move(e));
}

std::string_view to_string(DiseaseStatus s) {
  return s == DiseaseStatus::candidate ? "candidate" : "ruled_out";
}

double sum_contributions(std::span<const Contribution> contributions) {
  double total = 0.0;
  for (const auto& c : contributions) total += c.weight;
  return total;
}

std::vector<DiseaseScore> score_evidence(const ClinicalCase& c, const ObservationSet& observations) {
  const LinkIndex links = index_links(c);
  std::vector<DiseaseScore> scores;
  scores.reserve(c.differential.size());
  for (const auto& disease : c.differential) scores.push_back(score_one(c, links, observations, disease));
  std::sort(scores.begin(), scores.end(), [](const DiseaseScore& a, const DiseaseScore& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.disease < b.disease;
  });
  return scores;
}

ExplanationRecord explain_diagnosis(const ClinicalCase& c, const ObservationSet& observations,
                                    std::string_view disease) {
  if (!c.has_disease(disease))
    throw Error(ErrorCode::unknown_disease, fmt::format("'{}' is not in the differential", disease),
                std::string(disease));
  const DiseaseScore s = score_one(c, index_links(c), observations, DiseaseId(disease));

  ExplanationRecord e = make_explanation(AgentId::diagnostic);
  e.contributions = s.contributions;
  std::stable_sort(e.contributions.begin(), e.contributions.end(),
                   [](const Contribution& a, const Contribution& b) {
                     if (std::fabs(a.weight) != std::fabs(b.weight))
                       return std::fabs(a.weight) > std::fabs(b.weight);
                     return a.feature < b.feature;
                   });
  e.reason_codes.push_back(fmt::format("status:{}", to_string(s.status)));
  if (e.contributions.empty()) e.reason_codes.push_back("no_evidence_observed");
  std::vector<std::string> against;
  for (const auto& contrib : e.contributions) {
    if (contrib.weight < 0.0) {
      e.reason_codes.push_back("against:" + contrib.feature);
      against.push_back(fmt::format("{} ({})", contrib.feature, contrib.weight));
    } else {
      e.reason_codes.push_back("supports:" + contrib.feature);
    }
    e.rule_ids.push_back(fmt::format("evidence.{}.{}", disease, contrib.feature));
  }
  if (s.status == DiseaseStatus::ruled_out) e.rule_ids.push_back("rule_out_threshold");

  e.narrative = fmt::format("{} scores {} against a rule-out threshold of {}", disease, s.score,
                            c.rule_out_threshold);
  if (s.status == DiseaseStatus::ruled_out) {
    e.narrative += fmt::format(", so it is ruled out. Evidence against: {}.", join(against, ", "));
  } else if (e.contributions.empty()) {
    e.narrative += "; no linked findings have been observed yet.";
  } else {
    e.narrative += fmt::format(", so it remains a candidate. Strongest factor: {}.",
                               e.contributions.front().feature);
  }
  return e;
}

std::string_view to_string(InterventionStatus s) {
  switch (s) {
    case InterventionStatus::indicated: return "indicated";
    case InterventionStatus::contraindicated: return "contraindicated";
    case InterventionStatus::not_indicated_yet: return "not_indicated_yet";
  }
  return "not_indicated_yet";
}

InterventionAssessment assess_intervention(const InterventionRule& rule, const ObservationSet& observations) {
  InterventionAssessment a;
  for (const auto& f : rule.contraindicated_if)
    if (observations.contains(f)) a.contraindicating.push_back(f);
  for (const auto& f : rule.indicated_if)
    if (!observations.contains(f)) a.missing.push_back(f);
  if (!a.contraindicating.empty()) a.status = InterventionStatus::contraindicated;
  else if (a.missing.empty()) a.status = InterventionStatus::indicated;
  else a.status = InterventionStatus::not_indicated_yet;
  return a;
}

std::string protocol_rule_id(std::string_view intervention_id) {
  return fmt::format("protocol.{}", intervention_id);
}

AgentResponse apply_intervention(const ClinicalCase& c, const ObservationSet& observations,
                                 std::string_view intervention_id) {
  const InterventionRule* rule = c.find_intervention(intervention_id);
  if (rule == nullptr)
    throw Error(ErrorCode::unknown_intervention, fmt::format("unknown intervention '{}'", intervention_id),
                std::string(intervention_id));
  const InterventionAssessment a = assess_intervention(*rule, observations);

  ExplanationRecord e = make_explanation(AgentId::intervention);
  e.rule_ids.push_back(protocol_rule_id(rule->intervention_id));
  std::string content;
  switch (a.status) {
    case InterventionStatus::contraindicated:
      e.reason_codes.push_back(rule->reason_code);
      for (const auto& f : a.contraindicating) e.reason_codes.push_back("contraindicated_by:" + f);
      content = fmt::format("Safety concern: {} was not given ({}).", rule->label, rule->reason_code);
      e.narrative = fmt::format("Withheld because the patient has {}.", join(a.contraindicating, ", "));
      break;
    case InterventionStatus::indicated:
      e.reason_codes.push_back("indicated");
      for (const auto& f : rule->indicated_if) e.reason_codes.push_back("indicated_by:" + f);
      content = rule->outcome_text;
      e.narrative = rule->indicated_if.empty()
                        ? fmt::format("{} is part of the protocol for this case.", rule->label)
                        : fmt::format("{} follows the protocol because {} {} observed.", rule->label,
                                      join({rule->indicated_if.begin(), rule->indicated_if.end()}, ", "),
                                      rule->indicated_if.size() == 1 ? "was" : "were");
      break;
    case InterventionStatus::not_indicated_yet:
      e.reason_codes.push_back("not_indicated_yet");
      for (const auto& f : a.missing) e.reason_codes.push_back("missing:" + f);
      content = fmt::format("{} is not indicated yet.", rule->label);
      e.narrative = fmt::format("The protocol asks for {} before {}.", join(a.missing, ", "), rule->label);
      break;
  }
  return AgentResponse(AgentId::intervention, std::move(content), {}, std::move(e));
}

}  // namespace clinsim
