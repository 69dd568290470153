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

#include "clinsim/evaluation.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "clinsim/clinical_agents.hpp"

namespace clinsim {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::vector<KeyFactor> pick_factors(const ClinicalCase& c, const std::vector<ItemScore>& scores,
                                    FactorDirection direction) {
  std::vector<std::pair<const RubricItem*, const ItemScore*>> picked;
  for (size_t i = 0; i < scores.size(); ++i) {
    const bool full = scores[i].satisfied == scores[i].required;
    if (full == (direction == FactorDirection::strength)) picked.emplace_back(&c.rubric[i], &scores[i]);
  }
  std::sort(picked.begin(), picked.end(), [](const auto& a, const auto& b) {
    if (a.first->weight != b.first->weight) return a.first->weight > b.first->weight;
    return a.first->item_id < b.first->item_id;
  });
  if (picked.size() > kKeyFactorsPerDirection) picked.resize(kKeyFactorsPerDirection);

  std::vector<KeyFactor> factors;
  for (const auto& [item, score] : picked) {
    KeyFactor f{item->item_id, direction, {}};
    for (const auto& m : score->matches)
      if (m.matched) f.evidence.push_back(m.decision_id);
    factors.push_back(std::move(f));
  }
  return factors;
}

std::string list_ids(const std::vector<KeyFactor>& factors, FactorDirection d) {
  std::string out;
  for (const auto& f : factors) {
    if (f.direction != d) continue;
    if (!out.empty()) out += ", ";
    out += f.item_id;
  }
  return out.empty() ? "none" : out;
}

}  // namespace

std::string_view to_string(FactorDirection d) {
  return d == FactorDirection::strength ? "strength" : "improvement";
}

bool event_matches(const EventMatcher& matcher, const LogEntry& entry) {
  if (entry.status != EntryStatus::ok) return false;
  return std::visit(
      Overloaded{
          [&](const ActionOfKind& m) {
            if (!entry.action || entry.action->kind() != m.action) return false;
            if (m.target.empty()) return true;
            if (const auto* req = std::get_if<RequestExplanation>(&entry.action->payload))
              return to_string(req->agent) == m.target;
            return entry.action->argument() == m.target;
          },
          [&](const PatientQuestionContaining& m) {
            if (!entry.action) return false;
            const auto* ask = std::get_if<AskPatient>(&entry.action->payload);
            if (ask == nullptr) return false;
            const auto tokens = tokenize(ask->text);
            return std::any_of(m.keywords.begin(), m.keywords.end(),
                               [&](const std::string& kw) { return keyword_in_text(kw, tokens); });
          },
          [&](const FindingObserved& m) {
            const auto& revealed = entry.response.revealed_findings();
            return std::find(revealed.begin(), revealed.end(), m.finding) != revealed.end();
          },
          [&](const DiagnosisSubmitted& m) {
            if (!entry.action) return false;
            const auto* end = std::get_if<EndCase>(&entry.action->payload);
            return end != nullptr && end->diagnosis == m.disease;
          },
      },
      matcher);
}

FeedbackReport score_transcript(const ClinicalCase& c, std::span<const LogEntry> log) {
  FeedbackReport report;
  const bool any_action =
      std::any_of(log.begin(), log.end(), [](const LogEntry& e) { return e.is_student_action(); });

  double weighted_sum = 0.0;
  double weight_sum = 0.0;
  for (const auto& item : c.rubric) {
    ItemScore s;
    s.item_id = item.item_id;
    s.required = static_cast<int>(item.required_events.size());
    for (const auto& matcher : item.required_events) {
      MatcherResult r;
      r.matcher = describe(matcher);
      if (any_action) {
        for (const auto& entry : log) {
          if (!event_matches(matcher, entry)) continue;
          r.matched = true;
          r.seq = entry.seq;
          r.decision_id = entry.response.explanation().decision_id;
          break;
        }
      }
      if (r.matched) ++s.satisfied;
      s.matches.push_back(std::move(r));
    }
    s.fraction = s.required > 0 ? static_cast<double>(s.satisfied) / s.required : 0.0;
    s.weighted_points = item.weight * s.fraction;
    weighted_sum += s.weighted_points;
    weight_sum += item.weight;
    report.item_scores.push_back(std::move(s));
  }
  report.total_score = weight_sum > 0.0 ? weighted_sum / weight_sum : 0.0;

  report.key_factors = pick_factors(c, report.item_scores, FactorDirection::strength);
  auto improvements = pick_factors(c, report.item_scores, FactorDirection::improvement);
  report.key_factors.insert(report.key_factors.end(), improvements.begin(), improvements.end());

  ExplanationRecord& e = report.explanation;
  e.decision_id = "report";
  e.agent_id = AgentId::evaluation;
  e.kind = ExplanationKind::rubric_based;
  if (!any_action) e.reason_codes.push_back("no_interaction");
  for (const auto& f : report.key_factors)
    e.reason_codes.push_back(fmt::format("{}:{}", to_string(f.direction), f.item_id));
  for (const auto& s : report.item_scores) {
    e.contributions.push_back({s.item_id, s.weighted_points});
    e.rule_ids.push_back("rubric." + s.item_id);
  }
  e.narrative = fmt::format("Earned {} of {} rubric points ({:.1f}%). Strengths: {}. To improve: {}.",
                            weighted_sum, weight_sum, report.total_score * 100.0,
                            list_ids(report.key_factors, FactorDirection::strength),
                            list_ids(report.key_factors, FactorDirection::improvement));
  if (!any_action) e.narrative += " No student actions were recorded.";
  report.narrative = e.narrative;
  return report;
}

ExplanationRecord explain_evaluation(const FeedbackReport& report, std::string_view item_id) {
  auto it = std::find_if(report.item_scores.begin(), report.item_scores.end(),
                         [&](const ItemScore& s) { return s.item_id == item_id; });
  if (it == report.item_scores.end())
    throw Error(ErrorCode::unknown_item, fmt::format("unknown rubric item '{}'", item_id),
                std::string(item_id));

  ExplanationRecord e;
  e.decision_id = fmt::format("{}/{}", report.explanation.decision_id, item_id);
  e.agent_id = AgentId::evaluation;
  e.kind = ExplanationKind::rubric_based;
  std::vector<std::string> missing;
  for (const auto& m : it->matches) {
    if (m.matched) {
      e.reason_codes.push_back(fmt::format("matched:{}@{}", m.matcher, m.decision_id));
    } else {
      e.reason_codes.push_back("missing:" + m.matcher);
      missing.push_back(m.matcher);
    }
    e.contributions.push_back({m.matcher, m.matched ? 1.0 : 0.0});
  }
  e.rule_ids.push_back(fmt::format("rubric.{}", item_id));
  e.narrative = fmt::format("{} matched {} of {} required events (fraction {}).", item_id, it->satisfied,
                            it->required, it->fraction);
  if (!missing.empty()) {
    e.narrative += " Not yet observed: ";
    for (size_t i = 0; i < missing.size(); ++i) e.narrative += (i ? ", " : "") + missing[i];
    e.narrative += ".";
  }
  return e;
}

}  // namespace clinsim
