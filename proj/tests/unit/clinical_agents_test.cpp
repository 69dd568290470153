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

#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "clinsim/clinical_agents.hpp"
#include "test_support.hpp"

namespace clinsim {
namespace {

using testing::reference_case;

bool has_code(const ExplanationRecord& e, std::string_view code) {
  return std::find(e.reason_codes.begin(), e.reason_codes.end(), code) != e.reason_codes.end();
}

// Brute-force scan: count keywords whose words appear consecutively in the
// question, keep the first entry with the highest count.
std::string overlap_oracle(const ClinicalCase& c, const std::string& question) {
  std::vector<std::string> words;
  std::string cur;
  for (char ch : question + " ") {
    if (std::isalnum(static_cast<unsigned char>(ch))) {
      cur += static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    } else if (!cur.empty()) {
      words.push_back(cur);
      cur.clear();
    }
  }
  std::string best;
  size_t best_count = 0;
  for (const auto& e : c.symptom_script) {
    size_t count = 0;
    for (const auto& kw : e.keywords) {
      std::vector<std::string> kw_words;
      std::string w;
      for (char ch : kw + " ") {
        if (ch == ' ') {
          if (!w.empty()) kw_words.push_back(w);
          w.clear();
        } else {
          w += ch;
        }
      }
      for (size_t i = 0; i + kw_words.size() <= words.size(); ++i)
        if (std::equal(kw_words.begin(), kw_words.end(), words.begin() + i)) {
          ++count;
          break;
        }
    }
    if (count > best_count) {
      best_count = count;
      best = e.entry_id;
    }
  }
  return best;
}

TEST(Tokenize, LowercaseAlphanumeric) {
  EXPECT_EQ(tokenize("Where does it HURT?!"), (std::vector<std::string>{"where", "does", "it", "hurt"}));
  EXPECT_TRUE(tokenize("").empty());
}

TEST(PatientReply, WhereDoesItHurt) {
  const auto& c = *reference_case();
  ASSERT_EQ(overlap_oracle(c, "where does it hurt?"), "pain_location");
  const auto r = patient_reply(c, {}, "where does it hurt?");
  EXPECT_EQ(r.revealed_findings(), std::vector<FindingId>{"chest_pain_pressure"});
  EXPECT_EQ(r.explanation().kind, ExplanationKind::interaction_history);
  EXPECT_TRUE(has_code(r.explanation(), "entry:pain_location"));
  EXPECT_TRUE(has_code(r.explanation(), "matched:where"));
  EXPECT_TRUE(has_code(r.explanation(), "matched:hurt"));
}

TEST(PatientReply, MatchAgreesWithOverlapOracle) {
  const auto& c = *reference_case();
  std::mt19937 rng(11);
  for (int i = 0; i < 500; ++i) {
    const auto q = testing::random_question(c, rng);
    const auto m = match_script_entry(c, q);
    EXPECT_EQ(m.entry ? m.entry->entry_id : "", overlap_oracle(c, q)) << q;
  }
}

TEST(PatientReply, DiagnosisQuestionIsGuarded) {
  const auto& c = *reference_case();
  for (const char* q : {"what is your diagnosis?", "Is it stable angina?", "ANGINA?"}) {
    const auto r = patient_reply(c, {}, q);
    EXPECT_TRUE(guard_disclosure(r.content(), c.forbidden_terms).passed) << q;
    EXPECT_TRUE(guard_disclosure(r.explanation().narrative, c.forbidden_terms).passed) << q;
  }
}

TEST(PatientReply, EmptyQuestionFallsBack) {
  const auto r = patient_reply(*reference_case(), {}, "");
  EXPECT_EQ(r.content(), kNoMatchUtterance);
  EXPECT_TRUE(has_code(r.explanation(), "no_script_match"));
  EXPECT_TRUE(r.revealed_findings().empty());
}

TEST(PatientReply, TieGoesToEarlierEntry) {
  ClinicalCase c = *reference_case();
  c.symptom_script[1].keywords.insert("zebra");
  c.symptom_script[4].keywords.insert("zebra");
  const auto m = match_script_entry(c, "zebra");
  ASSERT_NE(m.entry, nullptr);
  EXPECT_EQ(m.entry->entry_id, c.symptom_script[1].entry_id);
}

TEST(PatientReply, CitesRelatedPriorQuestion) {
  const auto& c = *reference_case();
  std::vector<PatientTurn> history = {{"d2", "where does it hurt", "pain_location"}};
  const auto r = patient_reply(c, {}, "can you describe the pain again", history);
  EXPECT_TRUE(has_code(r.explanation(), "related_prior:d2"));
}

TEST(ExamPerform, VitalsCarryUnits) {
  const auto r = exam_perform(*reference_case(), {}, "vitals");
  EXPECT_NE(r.content().find("Vitals:"), std::string::npos);
  EXPECT_NE(r.content().find("mmHg"), std::string::npos);
  EXPECT_EQ(r.explanation().kind, ExplanationKind::procedural);
  EXPECT_TRUE(has_code(r.explanation(), "coverage:vital_signs"));
}

TEST(ExamPerform, UnknownExam) {
  try {
    exam_perform(*reference_case(), {}, "xray_vision");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::unknown_exam);
    EXPECT_EQ(e.detail(), "xray_vision");
  }
}

TEST(ExamPerform, RepeatIsIdempotent) {
  const auto& c = *reference_case();
  ObservationSet obs;
  const auto a = exam_perform(c, obs, "cardiac");
  obs.record(a.revealed_findings(), "d1");
  const auto size = obs.size();
  const auto b = exam_perform(c, obs, "cardiac");
  obs.record(b.revealed_findings(), "d2");
  EXPECT_EQ(a.content(), b.content());
  EXPECT_EQ(obs.size(), size);
  EXPECT_EQ(obs.provenance().at("heart_sounds_normal"), "d1");
}

TEST(OrderTest, TroponinNamesInfarction) {
  const auto r = order_test(*reference_case(), {}, "troponin");
  EXPECT_EQ(r.explanation().kind, ExplanationKind::test_utility);
  EXPECT_TRUE(has_code(r.explanation(), "informs:myocardial_infarction"));
  EXPECT_EQ(r.revealed_findings(), std::vector<FindingId>{"troponin_normal"});
}

TEST(OrderTest, LinkedDiseasesOrderedByWeight) {
  const auto r = order_test(*reference_case(), {}, "troponin");
  const auto& codes = r.explanation().reason_codes;
  const auto mi = std::find(codes.begin(), codes.end(), "informs:myocardial_infarction");
  const auto sa = std::find(codes.begin(), codes.end(), "informs:stable_angina");
  ASSERT_NE(sa, codes.end());
  EXPECT_LT(mi, sa);
}

TEST(OrderTest, EkgReportsNoAcuteChange) {
  const auto r = order_test(*reference_case(), {}, "ekg");
  EXPECT_NE(r.content().find("No ST-segment"), std::string::npos);
}

TEST(OrderTest, UnknownTest) {
  try {
    order_test(*reference_case(), {}, "blood_magic");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::unknown_test);
  }
}

TEST(ScoreEvidence, EmptyObservationsAllZero) {
  const auto& c = *reference_case();
  const auto scores = score_evidence(c, {});
  auto ids = c.differential;
  std::sort(ids.begin(), ids.end());
  ASSERT_EQ(scores.size(), ids.size());
  for (size_t i = 0; i < scores.size(); ++i) {
    EXPECT_EQ(scores[i].disease, ids[i]);
    EXPECT_EQ(scores[i].score, 0.0);
    EXPECT_EQ(scores[i].status, DiseaseStatus::candidate);
    EXPECT_TRUE(scores[i].contributions.empty());
  }
}

TEST(ScoreEvidence, NegativeTestsRuleOutInfarction) {
  const auto scores = score_evidence(*reference_case(), {"ekg_no_st_changes", "troponin_normal"});
  const auto mi = std::find_if(scores.begin(), scores.end(),
                               [](const DiseaseScore& s) { return s.disease == "myocardial_infarction"; });
  ASSERT_NE(mi, scores.end());
  // -1.5 (ekg) + -2.5 (troponin), read from the case file.
  EXPECT_EQ(mi->score, -4.0);
  EXPECT_EQ(mi->status, DiseaseStatus::ruled_out);
  ASSERT_EQ(mi->contributions.size(), 2u);
  for (const auto& k : mi->contributions) EXPECT_LT(k.weight, 0.0);
}

TEST(ScoreEvidence, MatchesNaiveBayesOnToyCase) {
  const auto c = testing::toy_case(testing::kToyLikelihoods);
  for (unsigned mask = 0; mask < 64; ++mask) {
    ObservationSet obs;
    for (int f = 0; f < 6; ++f)
      if (mask & (1u << f)) obs.record("f" + std::to_string(f), "given");
    std::vector<std::string> ranking;
    for (const auto& s : score_evidence(c, obs)) ranking.push_back(s.disease);
    EXPECT_EQ(ranking, testing::naive_bayes_ranking(testing::kToyLikelihoods, mask)) << mask;
  }
}

TEST(ScoreEvidence, Monotonicity) {
  const auto& c = *reference_case();
  const auto findings = testing::all_findings(c);
  std::mt19937 rng(3);
  for (int i = 0; i < 300; ++i) {
    ObservationSet obs;
    for (const auto& f : findings)
      if (std::bernoulli_distribution(0.3)(rng)) obs.record(f, "given");
    const auto& extra = findings[std::uniform_int_distribution<size_t>(0, findings.size() - 1)(rng)];
    if (obs.contains(extra)) continue;
    ObservationSet more = obs;
    more.record(extra, "given");
    auto by_id = [](const std::vector<DiseaseScore>& v) {
      std::map<std::string, double> m;
      for (const auto& s : v) m[s.disease] = s.score;
      return m;
    };
    const auto before = by_id(score_evidence(c, obs));
    const auto after = by_id(score_evidence(c, more));
    for (const auto& l : c.evidence_links) {
      if (l.finding != extra) continue;
      if (l.weight > 0) EXPECT_GE(after.at(l.disease), before.at(l.disease));
      if (l.weight < 0) EXPECT_LE(after.at(l.disease), before.at(l.disease));
    }
  }
}

TEST(ScoreEvidence, RankingIgnoresPositiveScale) {
  const auto& base = *reference_case();
  const auto findings = testing::all_findings(base);
  std::mt19937 rng(5);
  for (double k : {0.5, 2.0, 3.0, 10.0}) {
    ClinicalCase scaled = base;
    for (auto& l : scaled.evidence_links) l.weight *= k;
    scaled.rule_out_threshold *= k;
    for (int i = 0; i < 100; ++i) {
      ObservationSet obs;
      for (const auto& f : findings)
        if (std::bernoulli_distribution(0.4)(rng)) obs.record(f, "given");
      std::vector<std::string> a, b;
      for (const auto& s : score_evidence(base, obs)) a.push_back(s.disease);
      for (const auto& s : score_evidence(scaled, obs)) b.push_back(s.disease);
      EXPECT_EQ(a, b);
    }
  }
}

TEST(ExplainDiagnosis, NegativeFindingsLeadForRuledOutInfarction) {
  const auto& c = *reference_case();
  const ObservationSet obs{"chest_pain_pressure", "smoker_history", "ekg_no_st_changes", "troponin_normal"};
  const auto e = explain_diagnosis(c, obs, "myocardial_infarction");
  ASSERT_GE(e.contributions.size(), 2u);
  EXPECT_EQ(e.contributions[0], (Contribution{"troponin_normal", -2.5}));
  EXPECT_EQ(e.contributions[1], (Contribution{"ekg_no_st_changes", -1.5}));
  EXPECT_EQ(e.kind, ExplanationKind::test_utility);
  EXPECT_TRUE(has_code(e, "against:troponin_normal"));
}

TEST(ExplainDiagnosis, NoEvidence) {
  const auto e = explain_diagnosis(*reference_case(), {"troponin_normal"}, "costochondritis");
  EXPECT_TRUE(e.contributions.empty());
  EXPECT_TRUE(has_code(e, "no_evidence_observed"));
}

TEST(ExplainDiagnosis, ReconcilesWithScore) {
  const auto& c = *reference_case();
  const ObservationSet obs{"chest_pain_pressure", "pain_exertional", "pain_relieved_by_rest", "troponin_normal"};
  for (const auto& s : score_evidence(c, obs)) {
    auto contributions = explain_diagnosis(c, obs, s.disease).contributions;
    std::sort(contributions.begin(), contributions.end(),
              [](const Contribution& a, const Contribution& b) { return a.feature < b.feature; });
    EXPECT_EQ(sum_contributions(contributions), s.score) << s.disease;
  }
}

TEST(ExplainDiagnosis, UnknownDisease) {
  try {
    explain_diagnosis(*reference_case(), {}, "dragon_pox");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::unknown_disease);
  }
}

TEST(Intervention, IndicatedGivesOutcome) {
  const auto& c = *reference_case();
  const auto r = apply_intervention(c, {"chest_pain_pressure"}, "aspirin");
  EXPECT_EQ(r.content(), c.find_intervention("aspirin")->outcome_text);
  EXPECT_EQ(r.explanation().kind, ExplanationKind::guideline_rationale);
  EXPECT_EQ(r.explanation().rule_ids, std::vector<std::string>{protocol_rule_id("aspirin")});
}

TEST(Intervention, ContraindicatedIsFlagged) {
  const auto& c = *reference_case();
  const auto r = apply_intervention(c, {"ekg_no_st_changes"}, "thrombolysis");
  EXPECT_TRUE(has_code(r.explanation(), "thrombolysis_without_st_elevation"));
  EXPECT_EQ(r.content().find(c.find_intervention("thrombolysis")->outcome_text), std::string::npos);
}

TEST(Intervention, MissingIsSetDifference) {
  const auto& c = *reference_case();
  const auto& rule = *c.find_intervention("nitroglycerin");
  std::mt19937 rng(9);
  const auto findings = testing::all_findings(c);
  for (int i = 0; i < 200; ++i) {
    ObservationSet obs;
    for (const auto& f : findings)
      if (std::bernoulli_distribution(0.3)(rng)) obs.record(f, "given");
    const auto a = assess_intervention(rule, obs);
    std::vector<FindingId> contra, missing;
    for (const auto& f : rule.contraindicated_if)
      if (obs.contains(f)) contra.push_back(f);
    for (const auto& f : rule.indicated_if)
      if (!obs.contains(f)) missing.push_back(f);
    EXPECT_EQ(a.contraindicating, contra);
    if (!contra.empty()) {
      EXPECT_EQ(a.status, InterventionStatus::contraindicated);
    } else if (missing.empty()) {
      EXPECT_EQ(a.status, InterventionStatus::indicated);
    } else {
      EXPECT_EQ(a.status, InterventionStatus::not_indicated_yet);
      EXPECT_EQ(a.missing, missing);
      const auto r = apply_intervention(c, obs, "nitroglycerin");
      for (const auto& f : missing) EXPECT_TRUE(has_code(r.explanation(), "missing:" + f));
    }
  }
}

TEST(Intervention, Unknown) {
  try {
    apply_intervention(*reference_case(), {}, "leeches");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::unknown_intervention);
  }
}

TEST(Agents, DefaultBackendIsReplayDeterministic) {
  const auto& c = *reference_case();
  const ObservationSet obs{"chest_pain_pressure"};
  EXPECT_EQ(patient_reply(c, obs, "where does it hurt"), patient_reply(c, obs, "where does it hurt"));
  EXPECT_EQ(exam_perform(c, obs, "vitals"), exam_perform(c, obs, "vitals"));
  EXPECT_EQ(order_test(c, obs, "ekg"), order_test(c, obs, "ekg"));
  EXPECT_EQ(apply_intervention(c, obs, "aspirin"), apply_intervention(c, obs, "aspirin"));
  EXPECT_EQ(score_evidence(c, obs), score_evidence(c, obs));
}

TEST(Agents, ResultTextNeverLeaks) {
  const auto& c = *reference_case();
  const auto all = testing::all_findings(c);
  ObservationSet obs;
  for (const auto& f : all) obs.record(f, "given");
  std::vector<AgentResponse> responses;
  for (const auto& [id, _] : c.exam_findings) responses.push_back(exam_perform(c, obs, id));
  for (const auto& [id, _] : c.test_catalog) responses.push_back(order_test(c, obs, id));
  for (const auto& r : c.intervention_protocol) responses.push_back(apply_intervention(c, obs, r.intervention_id));
  for (const auto& r : responses)
    EXPECT_TRUE(guard_disclosure(r.content(), c.forbidden_terms).passed) << r.content();
}

}  // namespace
}  // namespace clinsim
