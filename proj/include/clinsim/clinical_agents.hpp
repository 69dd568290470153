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
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "clinsim/agent_core.hpp"
#include "clinsim/case_model.hpp"

namespace clinsim {

/// Findings gathered during a session. Grows only; the first decision that
/// revealed a finding is kept as its provenance.
class ObservationSet {
 public:
  ObservationSet() = default;
  /// Convenience for tests and offline scoring; provenance is `decision_id`.
  ObservationSet(std::initializer_list<FindingId> findings, std::string decision_id = "given");

  void record(std::span<const FindingId> findings, const std::string& decision_id);
  void record(const FindingId& finding, const std::string& decision_id);

  bool contains(const FindingId& f) const { return findings_.contains(f); }
  const std::set<FindingId>& findings() const { return findings_; }
  const std::map<FindingId, std::string>& provenance() const { return provenance_; }
  size_t size() const { return findings_.size(); }
  bool empty() const { return findings_.empty(); }

  bool operator==(const ObservationSet&) const = default;

 private:
  std::set<FindingId> findings_;
  std::map<FindingId, std::string> provenance_;
};

/// Lowercase alphanumeric tokens.
std::vector<std::string> tokenize(std::string_view text);

/// True when the keyword's tokens occur contiguously in the text's tokens.
bool keyword_in_text(std::string_view keyword, std::span<const std::string> text_tokens);

/// A prior patient question, used to cite related history in explanations.
struct PatientTurn {
  std::string decision_id;
  std::string question;
  std::string entry_id;  // empty when the question matched nothing
};

struct ScriptMatch {
  const SymptomScriptEntry* entry = nullptr;
  std::vector<std::string> matched_keywords;  // sorted
};

/// Entry with the largest keyword overlap; earlier entries win ties. A
/// keyword matches when its token sequence occurs contiguously in the
/// question. No entry when the best overlap is zero.
ScriptMatch match_script_entry(const ClinicalCase& c, std::string_view question);

AgentResponse patient_reply(const ClinicalCase& c, const ObservationSet& observations,
                            std::string_view question, std::span<const PatientTurn> history = {},
                            const DialogueBackend* backend = nullptr);

/// Throws Error(unknown_exam).
AgentResponse exam_perform(const ClinicalCase& c, const ObservationSet& observations,
                           std::string_view exam_id);

/// Throws Error(unknown_test).
AgentResponse order_test(const ClinicalCase& c, const ObservationSet& observations,
                         std::string_view test_id);

enum class DiseaseStatus { candidate, ruled_out };
std::string_view to_string(DiseaseStatus s);

struct DiseaseScore {
  DiseaseId disease;
  double score = 0.0;
  /// One entry per observed finding linked to the disease, ordered by finding id.
  std::vector<Contribution> contributions;
  DiseaseStatus status = DiseaseStatus::candidate;

  bool operator==(const DiseaseScore&) const = default;
};

/// Sums contributions in list order. Shared by scoring and reconciliation so
/// both follow the same summation path.
double sum_contributions(std::span<const Contribution> contributions);

/// Score per differential disease, highest first, ties by disease id.
std::vector<DiseaseScore> score_evidence(const ClinicalCase& c, const ObservationSet& observations);

/// Contributions ordered by |weight| desc. Throws Error(unknown_disease).
ExplanationRecord explain_diagnosis(const ClinicalCase& c, const ObservationSet& observations,
                                    std::string_view disease);

enum class InterventionStatus { indicated, contraindicated, not_indicated_yet };
std::string_view to_string(InterventionStatus s);

struct InterventionAssessment {
  InterventionStatus status = InterventionStatus::not_indicated_yet;
  std::vector<FindingId> contraindicating;  // contraindicated_if ∩ observations
  std::vector<FindingId> missing;           // indicated_if \ observations
};

InterventionAssessment assess_intervention(const InterventionRule& rule,
                                           const ObservationSet& observations);

/// Throws Error(unknown_intervention).
AgentResponse apply_intervention(const ClinicalCase& c, const ObservationSet& observations,
                                 std::string_view intervention_id);

/// Rule id used for a protocol entry in explanations.
std::string protocol_rule_id(std::string_view intervention_id);

}  // namespace clinsim
