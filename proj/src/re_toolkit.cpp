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

#include "clinsim/re_toolkit.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "json.hpp"

namespace clinsim::re {

namespace {

namespace fs = std::filesystem;
using Json = nlohmann::json;

struct BuiltinAlias {
  AgentId agent;
  std::string_view name;
};

// Names the registry personas answer to when a corpus does not define them.
// The first entry per agent is the canonical rendering.
constexpr BuiltinAlias kBuiltinAliases[] = {
    {AgentId::patient, "AI Patient Agent"},
    {AgentId::patient, "AI patient"},
    {AgentId::patient, "Alex"},
    {AgentId::physical_exam, "AI Physical Exam Agent"},
    {AgentId::physical_exam, "Dr. Eva"},
    {AgentId::diagnostic, "AI Diagnostic Agent"},
    {AgentId::diagnostic, "Brian"},
    {AgentId::diagnostic, "Brain"},
    {AgentId::intervention, "AI Clinical Intervention Agent"},
    {AgentId::intervention, "AI Intervention Agent"},
    {AgentId::intervention, "Clair"},
    {AgentId::evaluation, "AI Evaluation Agent"},
    {AgentId::evaluation, "Dr. Eval"},
    {AgentId::supervisor, "AI Supervisor Agent"},
    {AgentId::supervisor, "Sam"},
};

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool starts_with_ci(std::string_view text, std::string_view prefix) {
  return text.size() >= prefix.size() && lower(text.substr(0, prefix.size())) == lower(prefix);
}

// Reader over one corpus document; every failure names file and key.
class DocReader {
 public:
  DocReader(const Json& j, std::string file) : j_(j), file_(std::move(file)) {
    if (!j_.is_object()) throw ParseError("document must be a JSON object", file_);
  }

  void allow_only(std::initializer_list<std::string_view> keys) const {
    for (const auto& [key, value] : j_.items())
      if (std::find(keys.begin(), keys.end(), key) == keys.end())
        throw ParseError(fmt::format("unexpected key '{}'", key), path(key));
  }

  std::string str(const char* key) const {
    const Json& v = get(key);
    if (!v.is_string()) throw ParseError(fmt::format("'{}' must be a string", key), path(key));
    return v.get<std::string>();
  }

  std::vector<std::string> strs(const char* key) const {
    const Json& v = get(key);
    if (!v.is_array()) throw ParseError(fmt::format("'{}' must be an array of strings", key), path(key));
    std::vector<std::string> out;
    for (const auto& item : v) {
      if (!item.is_string()) throw ParseError(fmt::format("'{}' must be an array of strings", key), path(key));
      out.push_back(item.get<std::string>());
    }
    return out;
  }

  int integer(const char* key) const {
    const Json& v = get(key);
    if (!v.is_number_integer()) throw ParseError(fmt::format("'{}' must be an integer", key), path(key));
    return v.get<int>();
  }

  std::vector<int> integers(const char* key) const {
    const Json& v = get(key);
    if (!v.is_array()) throw ParseError(fmt::format("'{}' must be an array of integers", key), path(key));
    std::vector<int> out;
    for (const auto& item : v) {
      if (!item.is_number_integer())
        throw ParseError(fmt::format("'{}' must be an array of integers", key), path(key));
      out.push_back(item.get<int>());
    }
    return out;
  }

  bool has(const char* key) const { return j_.contains(key); }
  std::string path(std::string_view key) const { return fmt::format("{}#/{}", file_, key); }

 private:
  const Json& get(const char* key) const {
    auto it = j_.find(key);
    if (it == j_.end()) throw ParseError(fmt::format("missing key '{}'", key), path(key));
    return *it;
  }

  const Json& j_;
  std::string file_;
};

std::vector<std::pair<std::string, Json>> read_dir(const fs::path& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec))
    throw Error(ErrorCode::io_error, fmt::format("corpus directory '{}' is missing", dir.string()), dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
  std::sort(files.begin(), files.end());

  std::vector<std::pair<std::string, Json>> docs;
  for (const auto& f : files) {
    std::ifstream in(f);
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string rel = (dir.filename() / f.filename()).string();
    try {
      docs.emplace_back(rel, Json::parse(ss.str()));
    } catch (const Json::parse_error& e) {
      throw ParseError(fmt::format("invalid JSON: {}", e.what()), rel);
    }
  }
  return docs;
}

HumanRole parse_role(const DocReader& r) {
  const std::string role = r.str("role");
  if (role == "medical_student") return HumanRole::medical_student;
  if (role == "medical_educator") return HumanRole::medical_educator;
  throw ParseError(fmt::format("unknown role '{}'", role), r.path("role"));
}

struct Alias {
  std::string text;
  AgentId agent;
};

// Corpus names and aliases first, then the built-in names; longest first so
// "AI patient agent" wins over "AI patient".
std::vector<Alias> ai_aliases(const Corpus& corpus) {
  std::vector<Alias> aliases;
  for (const auto& p : corpus.ai_personas) {
    aliases.push_back({p.name, p.agent_id});
    for (const auto& a : p.aliases) aliases.push_back({a, p.agent_id});
    aliases.push_back({p.persona_id, p.agent_id});
  }
  for (const auto& b : kBuiltinAliases) aliases.push_back({std::string(b.name), b.agent});
  for (auto id : kAllAgents) aliases.push_back({std::string(to_string(id)), id});
  std::stable_sort(aliases.begin(), aliases.end(),
                   [](const Alias& a, const Alias& b) { return a.text.size() > b.text.size(); });
  return aliases;
}

const HumanPersona* resolve_human(std::string_view name, const Corpus& corpus) {
  const std::string key = lower(trim(name));
  for (const auto& h : corpus.humans) {
    std::string role_name(to_string(h.role));
    std::replace(role_name.begin(), role_name.end(), '_', ' ');
    if (lower(h.name) == key || lower(h.persona_id) == key || role_name == key) return &h;
  }
  return nullptr;
}

std::string canonical_ai_name(AgentId agent, const Corpus& corpus) {
  if (const auto* p = corpus.find_ai(to_string(agent))) return p->name;
  for (const auto& b : kBuiltinAliases)
    if (b.agent == agent) return std::string(b.name);
  return std::string(to_string(agent));
}

bool has_digit(std::string_view s) {
  return std::any_of(s.begin(), s.end(), [](unsigned char ch) { return std::isdigit(ch); });
}

Diagnostic diag(std::string path, std::string rule, std::string message) {
  return Diagnostic{Severity::error, std::move(path), std::move(message), std::move(rule)};
}

}  // namespace

std::string_view to_string(HumanRole r) {
  return r == HumanRole::medical_student ? "medical_student" : "medical_educator";
}

std::string_view to_string(Interrogative q) {
  switch (q) {
    case Interrogative::why: return "why";
    case Interrogative::what: return "what";
    case Interrogative::how: return "how";
  }
  return "why";
}

std::string_view to_string(RequirementKind k) {
  return k == RequirementKind::functional ? "functional" : "non_functional";
}

const HumanPersona* Corpus::find_human(std::string_view id) const {
  for (const auto& h : humans)
    if (h.persona_id == id) return &h;
  return nullptr;
}

const AIPersonaSpec* Corpus::find_ai(std::string_view persona_or_agent_id) const {
  for (const auto& p : ai_personas)
    if (p.persona_id == persona_or_agent_id || to_string(p.agent_id) == persona_or_agent_id) return &p;
  return nullptr;
}

Corpus load_corpus(const std::string& dir) {
  const fs::path root(dir);
  std::error_code ec;
  if (!fs::is_directory(root, ec))
    throw Error(ErrorCode::io_error, fmt::format("corpus directory '{}' does not exist", dir), dir);

  Corpus corpus;
  for (const auto& [file, j] : read_dir(root / "personas")) {
    DocReader r(j, file);
    const std::string type = r.str("type");
    if (type == "human") {
      r.allow_only({"type", "persona_id", "name", "role", "goals", "knowledge_level"});
      corpus.humans.push_back(
          {r.str("persona_id"), r.str("name"), parse_role(r), r.strs("goals"), r.str("knowledge_level")});
    } else if (type == "ai") {
      r.allow_only({"type", "persona_id", "agent_id", "name", "aliases", "role_goal", "model_architecture",
                    "knowledge_base", "decision_triggers", "explainability_profile"});
      AIPersonaSpec p;
      p.persona_id = r.str("persona_id");
      auto agent = agent_id_from_string(r.str("agent_id"));
      if (!agent) throw ParseError("agent_id does not name a registry agent", r.path("agent_id"));
      p.agent_id = *agent;
      p.name = r.str("name");
      if (r.has("aliases")) p.aliases = r.strs("aliases");
      p.role_goal = r.str("role_goal");
      p.model_architecture = r.str("model_architecture");
      p.knowledge_base = r.str("knowledge_base");
      p.decision_triggers = r.str("decision_triggers");
      p.explainability_profile = r.str("explainability_profile");
      corpus.ai_personas.push_back(std::move(p));
    } else {
      throw ParseError(fmt::format("unknown persona type '{}'", type), r.path("type"));
    }
  }
  for (const auto& [file, j] : read_dir(root / "scenarios")) {
    DocReader r(j, file);
    r.allow_only({"scenario_id", "title", "participants", "steps", "explainability_moments"});
    corpus.scenarios.push_back({r.str("scenario_id"), r.str("title"), r.strs("participants"), r.strs("steps"),
                                r.integers("explainability_moments")});
  }
  for (const auto& [file, j] : read_dir(root / "stories")) {
    DocReader r(j, file);
    r.allow_only({"story_id", "text", "clinical_risk", "learning_value", "complexity"});
    corpus.stories.push_back({r.str("story_id"), r.str("text"), r.integer("clinical_risk"),
                              r.integer("learning_value"), r.integer("complexity")});
  }
  for (const auto& [file, j] : read_dir(root / "requirements")) {
    DocReader r(j, file);
    r.allow_only({"req_id", "kind", "statement", "acceptance", "linked_stories"});
    RequirementSpec req;
    req.req_id = r.str("req_id");
    const std::string kind = r.str("kind");
    if (kind == "functional") req.kind = RequirementKind::functional;
    else if (kind == "non_functional") req.kind = RequirementKind::non_functional;
    else throw ParseError(fmt::format("unknown requirement kind '{}'", kind), r.path("kind"));
    req.statement = r.str("statement");
    req.acceptance = r.str("acceptance");
    req.linked_stories = r.strs("linked_stories");
    corpus.requirements.push_back(std::move(req));
  }
  return corpus;
}

XaiUserStory parse_user_story(std::string_view text, const Corpus& corpus) {
  std::string_view s = trim(text);
  const std::string folded = lower(s);

  // Human persona slot.
  size_t pos;
  if (starts_with_ci(s, "as an ")) pos = 6;
  else if (starts_with_ci(s, "as a ")) pos = 5;
  else throw ParseError("story must start with 'As a <human persona>,'", "human persona");
  constexpr std::string_view kWant = ", i want to understand ";
  const size_t want = folded.find(kWant, pos);
  const size_t comma = folded.find(',', pos);
  const std::string_view human_text = trim(s.substr(pos, (want != std::string::npos ? want : comma) - pos));
  if (human_text.empty() || (want == std::string::npos && comma == std::string::npos))
    throw ParseError("missing human persona", "human persona");
  if (want == std::string::npos) throw ParseError("missing 'I want to understand <why|what|how>'", "question");
  pos = want + kWant.size();

  // Question slot.
  XaiUserStory story;
  const size_t word_end = folded.find(' ', pos);
  const std::string word = folded.substr(pos, word_end == std::string::npos ? std::string::npos : word_end - pos);
  if (word == "why") story.question = Interrogative::why;
  else if (word == "what") story.question = Interrogative::what;
  else if (word == "how") story.question = Interrogative::how;
  else throw ParseError(fmt::format("question must be why, what, or how, not '{}'", word), "question");
  pos = word_end == std::string::npos ? folded.size() : word_end + 1;

  // AI persona and decision slots run up to the goal marker.
  constexpr std::string_view kGoal = ", so that i can ";
  const size_t goal = folded.find(kGoal, pos);
  size_t middle_end = goal;
  if (middle_end == std::string::npos) {
    middle_end = folded.size();
    if (middle_end > pos && folded[middle_end - 1] == '.') --middle_end;
  }
  if (!starts_with_ci(s.substr(pos), "the ")) throw ParseError("missing 'the <ai persona>'", "ai persona");
  pos += 4;
  const std::string_view middle = trim(s.substr(pos, middle_end - pos));
  if (middle.empty()) throw ParseError("missing ai persona", "ai persona");

  const Alias* hit = nullptr;
  const auto aliases = ai_aliases(corpus);
  for (const auto& a : aliases) {
    if (a.text.empty() || !starts_with_ci(middle, a.text)) continue;
    if (middle.size() == a.text.size() || middle[a.text.size()] == ' ') {
      hit = &a;
      break;
    }
  }
  if (hit == nullptr)
    throw Error(ErrorCode::unknown_persona, fmt::format("no AI persona matches '{}'", middle), std::string(middle));
  story.ai_agent = hit->agent;
  story.decision_clause = std::string(trim(middle.substr(hit->text.size())));
  if (story.decision_clause.empty()) throw ParseError("missing decision clause", "decision clause");

  if (goal == std::string::npos) throw ParseError("missing ', so that I can <goal>'", "goal clause");
  std::string_view goal_text = trim(s.substr(goal + kGoal.size()));
  if (!goal_text.empty() && goal_text.back() == '.') goal_text.remove_suffix(1);
  goal_text = trim(goal_text);
  if (goal_text.empty()) throw ParseError("missing goal clause", "goal clause");
  story.goal_clause = std::string(goal_text);

  const HumanPersona* human = resolve_human(human_text, corpus);
  if (human == nullptr)
    throw Error(ErrorCode::unknown_persona, fmt::format("no human persona matches '{}'", human_text),
                std::string(human_text));
  story.human_persona_id = human->persona_id;
  return story;
}

std::string render_user_story(const XaiUserStory& story, const Corpus& corpus) {
  const HumanPersona* human = corpus.find_human(story.human_persona_id);
  const std::string human_name = human ? human->name : story.human_persona_id;
  return fmt::format("As a {}, I want to understand {} the {} {}, so that I can {}.", human_name,
                     to_string(story.question), canonical_ai_name(story.ai_agent, corpus), story.decision_clause,
                     story.goal_clause);
}

XaiUserStory resolve_story(const StoryDoc& doc, const Corpus& corpus) {
  XaiUserStory story = parse_user_story(doc.text, corpus);
  story.story_id = doc.story_id;
  story.clinical_risk = doc.clinical_risk;
  story.learning_value = doc.learning_value;
  story.complexity = doc.complexity;
  return story;
}

double story_priority(const XaiUserStory& story, const PriorityWeights& w) {
  return w.clinical_risk * story.clinical_risk + w.learning_value * story.learning_value +
         w.complexity * (6 - story.complexity);
}

std::vector<RankedStory> prioritize_stories(std::vector<XaiUserStory> stories, const PriorityWeights& weights) {
  std::vector<RankedStory> ranked;
  ranked.reserve(stories.size());
  for (auto& s : stories) {
    const double p = story_priority(s, weights);
    ranked.push_back({std::move(s), p});
  }
  std::sort(ranked.begin(), ranked.end(), [](const RankedStory& a, const RankedStory& b) {
    if (a.priority != b.priority) return a.priority > b.priority;
    return a.story.story_id < b.story.story_id;
  });
  return ranked;
}

TraceGraph build_trace_graph(const Corpus& corpus) {
  TraceGraph g;
  for (const auto& h : corpus.humans) g.nodes.push_back({NodeKind::human_persona, h.persona_id});
  for (const auto& p : corpus.ai_personas) g.nodes.push_back({NodeKind::ai_persona, p.persona_id});
  for (const auto& s : corpus.scenarios) g.nodes.push_back({NodeKind::scenario, s.scenario_id});
  for (const auto& s : corpus.stories) g.nodes.push_back({NodeKind::story, s.story_id});
  for (const auto& r : corpus.requirements) g.nodes.push_back({NodeKind::requirement, r.req_id});

  for (const auto& doc : corpus.stories) {
    try {
      const XaiUserStory story = resolve_story(doc, corpus);
      g.edges.push_back({EdgeKind::persona_story, story.human_persona_id, doc.story_id});
      if (const auto* ai = corpus.find_ai(to_string(story.ai_agent)))
        g.edges.push_back({EdgeKind::persona_story, ai->persona_id, doc.story_id});
    } catch (const Error&) {
      // Unresolvable stories get no persona edges.
    }
  }
  std::set<std::string> story_ids;
  for (const auto& s : corpus.stories) story_ids.insert(s.story_id);
  for (const auto& r : corpus.requirements)
    for (const auto& sid : r.linked_stories)
      if (story_ids.contains(sid)) g.edges.push_back({EdgeKind::story_requirement, sid, r.req_id});
  for (const auto& sc : corpus.scenarios) {
    for (const auto& p : sc.participants) {
      if (const auto* h = corpus.find_human(p)) g.edges.push_back({EdgeKind::persona_scenario, h->persona_id, sc.scenario_id});
      else if (const auto* ai = corpus.find_ai(p))
        g.edges.push_back({EdgeKind::persona_scenario, ai->persona_id, sc.scenario_id});
    }
  }
  return g;
}

std::vector<Diagnostic> validate_traceability(const Corpus& corpus) {
  std::vector<Diagnostic> out;

  // Document integrity.
  std::map<std::string, int> id_counts;
  for (const auto& h : corpus.humans) ++id_counts["personas/" + h.persona_id];
  for (const auto& p : corpus.ai_personas) ++id_counts["personas/" + p.persona_id];
  for (const auto& s : corpus.scenarios) ++id_counts["scenarios/" + s.scenario_id];
  for (const auto& s : corpus.stories) ++id_counts["stories/" + s.story_id];
  for (const auto& r : corpus.requirements) ++id_counts["requirements/" + r.req_id];
  for (const auto& [path, n] : id_counts)
    if (n > 1) out.push_back(diag(path, "G1", fmt::format("id defined {} times", n)));

  for (const auto& p : corpus.ai_personas) {
    const std::pair<const char*, const std::string*> attrs[] = {
        {"role_goal", &p.role_goal},
        {"model_architecture", &p.model_architecture},
        {"knowledge_base", &p.knowledge_base},
        {"decision_triggers", &p.decision_triggers},
        {"explainability_profile", &p.explainability_profile},
    };
    for (const auto& [name, value] : attrs)
      if (trim(*value).empty())
        out.push_back(diag("personas/" + p.persona_id, "G1", fmt::format("attribute '{}' is empty", name)));
  }

  for (const auto& sc : corpus.scenarios) {
    const std::string path = "scenarios/" + sc.scenario_id;
    int humans = 0;
    int ais = 0;
    for (const auto& p : sc.participants) {
      if (corpus.find_human(p)) ++humans;
      else if (corpus.find_ai(p) || agent_id_from_string(p)) ++ais;
      else out.push_back(diag(path, "G1", fmt::format("participant '{}' does not resolve", p)));
    }
    if (humans == 0) out.push_back(diag(path, "G1", "scenario has no human participant"));
    if (ais == 0) out.push_back(diag(path, "G1", "scenario has no AI participant"));
    if (sc.explainability_moments.empty()) out.push_back(diag(path, "G1", "scenario marks no explainability moment"));
    for (int m : sc.explainability_moments)
      if (m < 1 || m > static_cast<int>(sc.steps.size()))
        out.push_back(diag(path, "G1", fmt::format("explainability moment {} is not a step", m)));
  }

  // R1 and rating ranges.
  for (const auto& doc : corpus.stories) {
    const std::string path = "stories/" + doc.story_id;
    try {
      resolve_story(doc, corpus);
    } catch (const ParseError& e) {
      out.push_back(diag(path, "G1", fmt::format("story does not parse ({}): {}", e.path(), e.what())));
    } catch (const Error& e) {
      out.push_back(diag(path, "R1", fmt::format("persona does not resolve: {}", e.what())));
    }
    const std::pair<const char*, int> ratings[] = {
        {"clinical_risk", doc.clinical_risk}, {"learning_value", doc.learning_value}, {"complexity", doc.complexity}};
    for (const auto& [name, value] : ratings)
      if (value < 1 || value > 5)
        out.push_back(diag(path, "G1", fmt::format("{} {} is outside 1-5", name, value)));
  }

  // R2 / R3.
  std::set<std::string> story_ids;
  for (const auto& s : corpus.stories) story_ids.insert(s.story_id);
  std::set<std::string> linked;
  for (const auto& r : corpus.requirements) {
    const std::string path = "requirements/" + r.req_id;
    if (r.linked_stories.empty()) out.push_back(diag(path, "R3", "requirement links no story"));
    for (const auto& sid : r.linked_stories) {
      if (story_ids.contains(sid)) linked.insert(sid);
      else out.push_back(diag(path, "R3", fmt::format("linked story '{}' does not exist", sid)));
    }
    // R6.
    if (r.kind == RequirementKind::non_functional && !has_digit(r.statement))
      out.push_back(diag(path, "R6", "non-functional statement has no numeric bound"));
  }
  for (const auto& s : corpus.stories)
    if (!linked.contains(s.story_id))
      out.push_back(diag("stories/" + s.story_id, "R2", fmt::format("story '{}' is not linked by any requirement", s.story_id)));

  // R4.
  for (auto agent : kAllAgents) {
    const bool covered = std::any_of(corpus.ai_personas.begin(), corpus.ai_personas.end(),
                                     [&](const AIPersonaSpec& p) { return p.agent_id == agent; });
    if (!covered)
      out.push_back(diag(fmt::format("personas/{}", to_string(agent)), "R4",
                         fmt::format("agent '{}' has no AI persona document", to_string(agent))));
  }

  // R5.
  for (const auto& p : corpus.ai_personas) {
    const bool appears = std::any_of(corpus.scenarios.begin(), corpus.scenarios.end(), [&](const ScenarioDoc& sc) {
      return std::any_of(sc.participants.begin(), sc.participants.end(), [&](const std::string& id) {
        return id == p.persona_id || id == to_string(p.agent_id);
      });
    });
    if (!appears)
      out.push_back(diag("personas/" + p.persona_id, "R5",
                         fmt::format("AI persona '{}' appears in no scenario", p.persona_id)));
  }

  sort_diagnostics(out);
  return out;
}

}  // namespace clinsim::re
