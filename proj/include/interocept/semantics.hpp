#pragma once

// Rule-based triple extraction from operator rationale, lexicon
// classification into terrain / task-sequence / episodic knowledge, and
// attachment of the declarative classes to the task hypergraph.

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "interocept/error.hpp"
#include "interocept/grid_map.hpp"
#include "interocept/task_hypergraph.hpp"

namespace interocept {

inline constexpr std::size_t kMaxFeedbackChars = 1000;

struct Triple {
  std::string subject;
  std::string relation;
  std::string object;
  std::string raw_text;
  long tick = 0;

  bool operator==(const Triple&) const = default;
};

enum class AttributeKind { TerrainFeature, TaskSequence, Episodic };

struct AttributeClass {
  AttributeKind kind = AttributeKind::Episodic;
  std::vector<std::string> confidence_keywords;
};

using Lexicon = std::set<std::string, std::less<>>;

struct TaggingLexicons {
  Lexicon verbs;
  Lexicon prepositions;
  Lexicon particles;
  Lexicon modals;
  Lexicon stopwords;
};

inline const TaggingLexicons& default_tagging_lexicons() {
  static const TaggingLexicons lex{
      {"is", "are", "was", "were", "be", "been", "becomes", "became", "seems", "looks", "has",
       "have", "had", "needs", "need", "requires", "require", "blocks", "block", "blocked",
       "slows", "deliver", "delivers", "delivered", "unload", "unloads", "load", "loads", "wait",
       "waits", "clear", "clears", "install", "installs", "move", "moves", "avoid", "avoids",
       "stop", "stops", "go", "goes", "enter", "enters", "exit", "exits", "reverse", "reverses",
       "carry", "carries", "stack", "stacks", "flip", "flips", "drive", "drives", "turn", "turns",
       "check", "put", "place", "places", "keep", "keeps", "take", "takes", "bring", "brings",
       "yield", "yields", "pass", "passes", "cross", "crosses", "approach", "approaches",
       "follow", "follows", "leave", "leaves", "park", "parks", "hold", "holds", "gets", "get"},
      {"before", "after", "near", "on", "in", "at", "to", "from", "by", "with", "through", "into",
       "onto", "until", "behind", "beside", "between", "over", "under", "along", "across",
       "around", "past", "toward", "towards", "for", "of", "off", "up", "down", "out"},
      {"up", "down", "off", "out", "over", "in", "on", "away", "back", "through", "around"},
      {"must", "should", "can", "will", "may", "might", "could", "would", "shall"},
      {"the", "a", "an", "this", "that", "these", "those", "please", "it", "its", "there", "here",
       "very", "really", "just", "so", "also", "then"}};
  return lex;
}

inline const Lexicon& default_terrain_lexicon() {
  static const Lexicon lex{"mud", "gravel", "slope", "ramp", "wet", "slippery", "rough", "soft", "ice"};
  return lex;
}

inline const Lexicon& default_sequence_lexicon() {
  static const Lexicon lex{"before", "after", "wait", "until", "deliver", "unload", "load", "clear",
                           "first", "then"};
  return lex;
}

/// Lowercased word tokens; any byte that is not alphanumeric, '-', '\'' or
/// part of a multibyte UTF-8 sequence separates words.
inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char ch : text) {
    const auto u = static_cast<unsigned char>(ch);
    if (std::isalnum(u) || ch == '-' || ch == '\'' || u >= 0x80) {
      current.push_back(static_cast<char>(std::tolower(u)));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

namespace detail {

inline std::string join(const std::vector<std::string>& tokens, std::size_t begin, std::size_t end) {
  std::string out;
  for (std::size_t i = begin; i < end; ++i) {
    if (!out.empty()) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

inline std::size_t skip_stopwords(const std::vector<std::string>& tokens, std::size_t i,
                                  std::size_t end, const TaggingLexicons& lex) {
  while (i < end && lex.stopwords.count(tokens[i]) != 0) ++i;
  return i;
}

inline std::vector<std::string_view> split_sentences(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= text.size(); ++i) {
    if (i == text.size() || text[i] == '.' || text[i] == ';') {
      if (i > start) out.push_back(text.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

}  // namespace detail

/// Rules per sentence (sentences split on '.' and ';'):
///  - imperative (first content token is a verb): subject = the verb,
///    relation = first preposition after it, object = what follows; with no
///    preposition the relation is "acts_on" and the object is the remainder.
///  - declarative: subject = tokens before the first verb (leading stopwords
///    and modals dropped), relation = modals + verb + optional particle,
///    object = remainder without leading stopwords.
/// Sentences without a verb, or with an empty slot, yield nothing.
inline std::vector<Triple> extract_triples(std::string_view text, long tick = 0,
                                           const TaggingLexicons& lex = default_tagging_lexicons()) {
  bool blank = true;
  for (char ch : text) {
    if (!std::isspace(static_cast<unsigned char>(ch))) blank = false;
  }
  if (blank) throw Error(ErrorCode::EmptyText, "feedback text is empty");
  if (text.size() > kMaxFeedbackChars) {
    throw Error(ErrorCode::InvalidArgument, "feedback longer than 1000 characters");
  }

  std::vector<Triple> out;
  for (std::string_view sentence : detail::split_sentences(text)) {
    const std::vector<std::string> tokens = tokenize(sentence);
    const std::size_t n = tokens.size();
    const std::size_t first = detail::skip_stopwords(tokens, 0, n, lex);
    if (first >= n) continue;

    Triple t;
    t.raw_text = std::string(text);
    t.tick = tick;

    if (lex.verbs.count(tokens[first]) != 0) {
      t.subject = tokens[first];
      std::size_t prep = first + 1;
      while (prep < n && lex.prepositions.count(tokens[prep]) == 0) ++prep;
      if (prep < n) {
        t.relation = tokens[prep];
        t.object = detail::join(tokens, detail::skip_stopwords(tokens, prep + 1, n, lex), n);
      } else {
        t.relation = "acts_on";
        t.object = detail::join(tokens, detail::skip_stopwords(tokens, first + 1, n, lex), n);
      }
    } else {
      std::size_t verb = first;
      while (verb < n && lex.verbs.count(tokens[verb]) == 0) ++verb;
      if (verb >= n) continue;
      std::size_t subject_end = verb;
      while (subject_end > first && lex.modals.count(tokens[subject_end - 1]) != 0) --subject_end;
      t.subject = detail::join(tokens, first, subject_end);
      std::size_t rel_end = verb + 1;
      if (rel_end < n && lex.particles.count(tokens[rel_end]) != 0) ++rel_end;
      t.relation = detail::join(tokens, subject_end, rel_end);
      t.object = detail::join(tokens, detail::skip_stopwords(tokens, rel_end, n, lex), n);
    }
    if (t.subject.empty() || t.relation.empty() || t.object.empty()) continue;
    out.push_back(std::move(t));
  }
  return out;
}

/// Terrain wins over task sequence when both lexicons match.
inline AttributeClass classify_attribute(const Triple& triple,
                                         const Lexicon& terrain_lexicon = default_terrain_lexicon(),
                                         const Lexicon& sequence_lexicon = default_sequence_lexicon()) {
  if (terrain_lexicon.empty() || sequence_lexicon.empty()) {
    throw Error(ErrorCode::InvalidArgument, "lexicons must be nonempty");
  }
  std::vector<std::string> tokens = tokenize(triple.subject);
  for (auto& tok : tokenize(triple.relation)) tokens.push_back(std::move(tok));
  for (auto& tok : tokenize(triple.object)) tokens.push_back(std::move(tok));

  auto matches = [&tokens](const Lexicon& lexicon) {
    std::vector<std::string> found;
    for (const auto& tok : tokens) {
      if (lexicon.count(tok) != 0 && std::find(found.begin(), found.end(), tok) == found.end()) {
        found.push_back(tok);
      }
    }
    return found;
  };
  if (auto terrain = matches(terrain_lexicon); !terrain.empty()) {
    return {AttributeKind::TerrainFeature, std::move(terrain)};
  }
  if (auto sequence = matches(sequence_lexicon); !sequence.empty()) {
    return {AttributeKind::TaskSequence, std::move(sequence)};
  }
  return {AttributeKind::Episodic, {}};
}

struct EncodeParams {
  double default_terrain_multiplier = 2.0;
  std::map<std::string, double, std::less<>> keyword_multipliers;
  double sequence_penalty = kInfiniteCost;
};

struct EpisodicRecord {
  long tick = 0;
  std::string raw_text;
  std::optional<Triple> triple;
};

/// Append-only store of knowledge that is not mapped onto the graph.
class EpisodicArchive {
 public:
  std::size_t append(EpisodicRecord record) {
    records_.push_back(std::move(record));
    return records_.size() - 1;
  }

  const std::vector<EpisodicRecord>& records() const noexcept { return records_; }
  std::size_t size() const noexcept { return records_.size(); }

  static nlohmann::json to_json(const EpisodicRecord& r) {
    nlohmann::json triple = nullptr;
    if (r.triple) {
      triple = {{"subject", r.triple->subject},
                {"relation", r.triple->relation},
                {"object", r.triple->object}};
    }
    return {{"tick", r.tick}, {"raw_text", r.raw_text}, {"triple", triple}};
  }

  std::string to_jsonl() const {
    std::string out;
    for (const auto& r : records_) out += to_json(r).dump() + "\n";
    return out;
  }

  void append_to_file(const std::string& path, const EpisodicRecord& r) const {
    std::ofstream f(path, std::ios::app);
    f << to_json(r).dump() << '\n';
  }

 private:
  std::vector<EpisodicRecord> records_;
};

struct EpisodicArchived {
  std::size_t index = 0;
};

using EncodeResult = std::variant<int, EpisodicArchived>;

inline EncodeResult encode_to_hypergraph(TaskHypergraph& hg, const AttributeClass& attr,
                                         const Triple& triple,
                                         const std::vector<CellCoord>& anchor_cells,
                                         EpisodicArchive& archive, const EncodeParams& params = {}) {
  if (attr.kind == AttributeKind::Episodic) {
    return EpisodicArchived{archive.append({triple.tick, triple.raw_text, triple})};
  }
  if (anchor_cells.empty()) {
    throw Error(ErrorCode::MissingAnchor, "declarative feedback needs at least one anchor cell");
  }
  std::vector<int> members;
  members.reserve(anchor_cells.size());
  for (const auto& c : anchor_cells) members.push_back(hg.ensure_spatial_vertex(c));

  if (attr.kind == AttributeKind::TerrainFeature) {
    double multiplier = 0.0;
    std::string label;
    for (const auto& kw : attr.confidence_keywords) {
      auto it = params.keyword_multipliers.find(kw);
      multiplier = std::max(multiplier, it != params.keyword_multipliers.end()
                                            ? it->second
                                            : params.default_terrain_multiplier);
      if (!label.empty()) label += ',';
      label += kw;
    }
    if (attr.confidence_keywords.empty()) multiplier = params.default_terrain_multiplier;
    return hg.add_hyperedge(std::move(members), TerrainFeature{label, multiplier});
  }
  return hg.add_hyperedge(std::move(members),
                          TaskPrecondition{AvailabilityRequirement::Any, OccupancyRequirement::Clear,
                                           params.sequence_penalty});
}

inline const char* to_string(AttributeKind k) {
  switch (k) {
    case AttributeKind::TerrainFeature: return "TerrainFeature";
    case AttributeKind::TaskSequence: return "TaskSequence";
    case AttributeKind::Episodic: return "Episodic";
  }
  return "Episodic";
}

inline Lexicon lexicon_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw Error(ErrorCode::ParseError, "lexicon must be a JSON array of strings");
  Lexicon lex;
  for (const auto& item : j) {
    if (!item.is_string()) throw Error(ErrorCode::ParseError, "lexicon entries must be strings");
    for (auto& tok : tokenize(item.get<std::string>())) lex.insert(std::move(tok));
  }
  return lex;
}

}  // namespace interocept
