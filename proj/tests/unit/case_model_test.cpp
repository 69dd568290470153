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

#include "json.hpp"

#include "clinsim/case_model.hpp"
#include "test_support.hpp"

namespace clinsim {
namespace {

using testing::data_path;
using testing::read_text;
using testing::reference_case;

nlohmann::json reference_json() { return nlohmann::json::parse(read_text(data_path("cases/chestpain-01.json"))); }

TEST(ParseCase, ReferenceCaseLoads) {
  const auto& c = *reference_case();
  EXPECT_EQ(c.case_id, "chestpain-01");
  EXPECT_GE(c.test_catalog.size(), 2u);
  EXPECT_TRUE(c.test_catalog.contains("ekg"));
  EXPECT_TRUE(c.test_catalog.contains("troponin"));
  EXPECT_TRUE(c.has_disease("myocardial_infarction"));
  EXPECT_TRUE(validate_case(c).empty());
}

TEST(ParseCase, EmptyRubricIsRejected) {
  auto j = reference_json();
  j["rubric"] = nlohmann::json::array();
  try {
    parse_case(j.dump());
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_STREQ(e.what(), "rubric must be non-empty");
    EXPECT_EQ(e.path(), "/rubric");
  }
}

TEST(ParseCase, RoundTripIsIdentity) {
  const auto& c = *reference_case();
  const auto again = parse_case(serialize_case(c));
  EXPECT_EQ(again, c);
  EXPECT_EQ(serialize_case(again), serialize_case(c));
}

TEST(ParseCase, SyntaxErrorReportsLine) {
  try {
    parse_case("{\n  \"format\": 1,\n  \"case_id\": oops\n}");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3);
  }
}

TEST(ParseCase, FormatVersionIsRequired) {
  auto j = reference_json();
  j.erase("format");
  EXPECT_THROW(parse_case(j.dump()), ParseError);
  j["format"] = 2;
  EXPECT_THROW(parse_case(j.dump()), ParseError);
}

TEST(ParseCase, UnknownTopLevelKeyIsRejected) {
  auto j = reference_json();
  j["notes"] = "x";
  try {
    parse_case(j.dump());
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.path(), "/notes");
  }
}

TEST(ParseCase, DanglingDiseaseIsReferenceError) {
  auto j = reference_json();
  j["evidence_links"].push_back({{"disease", "aortic_dissection"}, {"finding", "bp_elevated"}, {"weight", 1.0}});
  try {
    parse_case(j.dump());
    FAIL();
  } catch (const ReferenceError& e) {
    EXPECT_EQ(e.dangling_id(), "aortic_dissection");
  }
}

TEST(ParseCase, HiddenDiagnosisNameIsAddedToForbiddenTerms) {
  auto j = reference_json();
  j["forbidden_terms"] = nlohmann::json::array({"angina"});
  const auto c = parse_case(j.dump());
  EXPECT_NE(std::find(c.forbidden_terms.begin(), c.forbidden_terms.end(), "stable angina"),
            c.forbidden_terms.end());
}

TEST(ValidateCase, LeakInScriptEntryIsFlaggedOnce) {
  ClinicalCase c = *reference_case();
  c.symptom_script[2].response_text += " The doctor said it was stable angina.";
  const auto diags = validate_case(c);
  ASSERT_EQ(diags.size(), 1u);
  EXPECT_EQ(diags[0].path, "/symptom_script/2/response_text");
  EXPECT_EQ(diags[0].severity, Severity::error);
}

TEST(ValidateCase, LeakCheckIgnoresCase) {
  ClinicalCase c = *reference_case();
  c.test_catalog.at("ekg").result_text = "Pattern typical of ANGINA.";
  const auto diags = validate_case(c);
  ASSERT_EQ(diags.size(), 1u);
  EXPECT_EQ(diags[0].path, "/test_catalog/ekg/result_text");
}

TEST(ValidateCase, LinkToUnknownDiseaseNamesIt) {
  ClinicalCase c = *reference_case();
  c.evidence_links.push_back({"aortic_dissection", "bp_elevated", 1.0});
  const auto diags = validate_case(c);
  ASSERT_EQ(diags.size(), 1u);
  EXPECT_NE(diags[0].message.find("aortic_dissection"), std::string::npos);
}

TEST(ValidateCase, OrderIsPathLexicographic) {
  ClinicalCase c = *reference_case();
  c.title.clear();
  c.chief_complaint.clear();
  c.evidence_links.push_back({"zzz", "bp_elevated", 1.0});
  const auto diags = validate_case(c);
  ASSERT_EQ(diags.size(), 3u);
  for (size_t i = 1; i < diags.size(); ++i) EXPECT_LE(diags[i - 1].path, diags[i].path);
}

TEST(ValidateCase, ReferenceTextsCarryNoForbiddenTerm) {
  const auto& c = *reference_case();
  auto lower = [](std::string s) {
    for (auto& ch : s) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    return s;
  };
  std::vector<std::string> texts;
  for (const auto& e : c.symptom_script) texts.push_back(e.response_text);
  for (const auto& [_, e] : c.exam_findings) texts.push_back(e.result_text);
  for (const auto& [_, t] : c.test_catalog) texts.push_back(t.result_text);
  for (const auto& t : texts)
    for (const auto& term : c.forbidden_terms) EXPECT_EQ(lower(t).find(term), std::string::npos) << t;
}

TEST(CaseModel, DisplayName) {
  EXPECT_EQ(display_name("myocardial_infarction"), "myocardial infarction");
  EXPECT_EQ(display_name("gerd"), "gerd");
}

TEST(CaseModel, DescribeMatchers) {
  EXPECT_EQ(describe(EventMatcher{ActionOfKind{ActionKind::order_test, "troponin"}}), "order_test:troponin");
  EXPECT_EQ(describe(EventMatcher{FindingObserved{"troponin_normal"}}), "finding:troponin_normal");
}

TEST(CaseModel, ActionKindNamesRoundTrip) {
  for (auto k : kAllActionKinds) EXPECT_EQ(action_kind_from_string(to_string(k)), k);
  EXPECT_FALSE(action_kind_from_string("foo"));
}

TEST(CaseModel, LoadMissingFileIsIoError) {
  try {
    load_case_file("/nonexistent/case.json");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::io_error);
  }
}

}  // namespace
}  // namespace clinsim
