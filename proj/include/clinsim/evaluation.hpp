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

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "clinsim/case_model.hpp"
#include "clinsim/interaction_log.hpp"

namespace clinsim {

inline constexpr size_t kKeyFactorsPerDirection = 3;

struct MatcherResult {
  std::string matcher;  // describe(EventMatcher)
  bool matched = false;
  std::uint64_t seq = 0;  // first matching entry, 0 when unmatched
  std::string decision_id;

  bool operator==(const MatcherResult&) const = default;
};

struct ItemScore {
  std::string item_id;
  int satisfied = 0;
  int required = 0;
  double fraction = 0.0;
  double weighted_points = 0.0;
  std::vector<MatcherResult> matches;

  bool operator==(const ItemScore&) const = default;
};

enum class FactorDirection { strength, improvement };
std::string_view to_string(FactorDirection d);

struct KeyFactor {
  std::string item_id;
  FactorDirection direction = FactorDirection::strength;
  std::vector<std::string> evidence;  // decision ids

  bool operator==(const KeyFactor&) const = default;
};

struct FeedbackReport {
  std::string session_id;
  std::vector<ItemScore> item_scores;  // rubric order
  double total_score = 0.0;
  std::vector<KeyFactor> key_factors;
  std::string narrative;
  ExplanationRecord explanation;

  bool operator==(const FeedbackReport&) const = default;
};

/// Whether a log entry satisfies a rubric event. Error entries never match.
bool event_matches(const EventMatcher& matcher, const LogEntry& entry);

/// Rule-based rubric scoring over the log. Pure.
///
/// Per item, fraction = matched events / required events. The total is
/// sum(weight * fraction) / sum(weight). Strengths are fully satisfied items,
/// improvements are the rest; up to three of each, by weight desc then id.
/// A log without student actions yields all-zero fractions and the reason
/// code "no_interaction".
FeedbackReport score_transcript(const ClinicalCase& c, std::span<const LogEntry> log);

/// Per-event breakdown for one rubric item. Throws Error(unknown_item).
ExplanationRecord explain_evaluation(const FeedbackReport& report, std::string_view item_id);

}  // namespace clinsim
