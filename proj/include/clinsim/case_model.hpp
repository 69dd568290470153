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
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "clinsim/errors.hpp"

namespace clinsim {

using FindingId = std::string;
using DiseaseId = std::string;

/// Supported case document version.
inline constexpr int kCaseFormatVersion = 1;

enum class Sex { female, male, other };

/// Student action channels. Shared by the case rubric and the supervisor.
enum class ActionKind {
  ask_patient,
  request_exam,
  order_test,
  intervene,
  ask_supervisor,
  request_explanation,
  end_case,
};

inline constexpr ActionKind kAllActionKinds[] = {
    ActionKind::ask_patient,    ActionKind::request_exam,        ActionKind::order_test,
    ActionKind::intervene,      ActionKind::ask_supervisor,      ActionKind::request_explanation,
    ActionKind::end_case,
};

std::string_view to_string(ActionKind k);
std::optional<ActionKind> action_kind_from_string(std::string_view s);

struct Demographics {
  int age = 0;
  Sex sex = Sex::other;
  std::vector<std::string> history;

  bool operator==(const Demographics&) const = default;
};

struct SymptomScriptEntry {
  std::string entry_id;
  std::set<std::string> keywords;
  std::string response_text;
  std::vector<FindingId> reveals;

  bool operator==(const SymptomScriptEntry&) const = default;
};

struct VitalSign {
  double value = 0.0;
  std::string unit;

  bool operator==(const VitalSign&) const = default;
};

struct ExamFinding {
  std::string exam_id;
  std::string label;
  std::string result_text;
  std::vector<FindingId> finding_ids;
  std::optional<std::map<std::string, VitalSign>> vitals;
  /// Body areas the exam covers; reported in procedural explanations.
  std::vector<std::string> coverage;

  bool operator==(const ExamFinding&) const = default;
};

enum class Modality { laboratory, imaging, procedure };
enum class Turnaround { immediate };

struct TestCatalogEntry {
  std::string test_id;
  Modality modality = Modality::laboratory;
  std::string label;
  std::string result_text;
  std::vector<FindingId> finding_ids;
  Turnaround turnaround = Turnaround::immediate;

  bool operator==(const TestCatalogEntry&) const = default;
};

/// Signed log-odds style contribution of an observed finding to a disease.
struct EvidenceLink {
  DiseaseId disease;
  FindingId finding;
  double weight = 0.0;

  bool operator==(const EvidenceLink&) const = default;
};

struct InterventionRule {
  std::string intervention_id;
  std::string label;
  std::set<FindingId> indicated_if;
  std::set<FindingId> contraindicated_if;
  std::string reason_code;
  std::string outcome_text;

  bool operator==(const InterventionRule&) const = default;
};

// Rubric event matchers. Each is evaluable against the interaction log alone.
struct ActionOfKind {
  ActionKind action = ActionKind::ask_patient;
  /// Exam, test, or intervention id; empty matches any target.
  std::string target;
  bool operator==(const ActionOfKind&) const = default;
};
struct PatientQuestionContaining {
  std::set<std::string> keywords;
  bool operator==(const PatientQuestionContaining&) const = default;
};
struct FindingObserved {
  FindingId finding;
  bool operator==(const FindingObserved&) const = default;
};
struct DiagnosisSubmitted {
  DiseaseId disease;
  bool operator==(const DiagnosisSubmitted&) const = default;
};

using EventMatcher =
    std::variant<ActionOfKind, PatientQuestionContaining, FindingObserved, DiagnosisSubmitted>;

/// Short stable label, e.g. "order_test:troponin" or "finding:troponin_normal".
std::string describe(const EventMatcher& m);

enum class RubricCategory { history, exam, diagnostics, intervention, communication };

struct RubricItem {
  std::string item_id;
  std::string description;
  RubricCategory category = RubricCategory::history;
  std::vector<EventMatcher> required_events;
  double weight = 1.0;

  bool operator==(const RubricItem&) const = default;
};

struct ClinicalCase {
  std::string case_id;
  std::string title;
  Demographics demographics;
  std::string chief_complaint;
  DiseaseId hidden_diagnosis;
  std::vector<DiseaseId> differential;
  std::vector<SymptomScriptEntry> symptom_script;
  std::map<std::string, ExamFinding> exam_findings;
  std::map<std::string, TestCatalogEntry> test_catalog;
  std::vector<EvidenceLink> evidence_links;
  std::vector<InterventionRule> intervention_protocol;
  std::vector<RubricItem> rubric;
  std::vector<std::string> forbidden_terms;
  double rule_out_threshold = -1.0;

  bool operator==(const ClinicalCase&) const = default;

  bool has_disease(std::string_view id) const;
  const InterventionRule* find_intervention(std::string_view id) const;
  /// Every finding some script entry, exam, or test can reveal.
  std::set<FindingId> discoverable_findings() const;
};

/// "myocardial_infarction" -> "myocardial infarction".
std::string display_name(std::string_view disease_id);

/// Parses a case document. Pure. Adds the hidden diagnosis display name to
/// forbidden_terms when absent.
/// Throws ParseError on syntax or schema problems, ReferenceError on the first
/// dangling id.
ClinicalCase parse_case(std::string_view source);

/// Canonical JSON text; parse_case(serialize_case(c)) == c for valid cases.
std::string serialize_case(const ClinicalCase& c);

ClinicalCase load_case_file(const std::string& path);

/// All invariant violations, sorted by path. Empty iff the case is valid.
std::vector<Diagnostic> validate_case(const ClinicalCase& c);

std::string_view to_string(Sex s);
std::string_view to_string(Modality m);
std::string_view to_string(RubricCategory c);

}  // namespace clinsim
