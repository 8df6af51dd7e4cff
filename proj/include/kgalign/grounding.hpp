// Copyright 2026 The kgalign Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef KGALIGN_GROUNDING_HPP
#define KGALIGN_GROUNDING_HPP

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "kgalign/common.hpp"
#include "kgalign/kg.hpp"

namespace kgalign {

// Stands in for every lexeme whose corpus frequency is below min-freq.
inline constexpr std::string_view kRareToken = "<rare>";

// Token-level completion trie from surface forms to entity indices.
class SurfaceFormIndex {
 public:
  explicit SurfaceFormIndex(bool case_fold = true);

  // Inserts a whitespace-tokenized surface form. Returns false (and counts a
  // collision) when the exact token sequence is already mapped.
  bool insert(std::string_view surface_form, Index entity);

  // Entity of the longest surface form that is a prefix of `tokens`, with its
  // length in tokens.
  struct Match {
    Index entity;
    std::size_t length;
  };
  std::optional<Match> longest_prefix(std::span<const std::string> tokens) const;

  // Greedy left-to-right segmentation: a matched span [begin, end) carries its
  // entity, every unmatched token is its own span without one.
  struct Segment {
    std::size_t begin;
    std::size_t end;
    std::optional<Index> entity;
  };
  std::vector<Segment> segment(std::span<const std::string> tokens) const;

  bool case_fold() const { return case_fold_; }
  std::size_t size() const { return forms_; }
  std::size_t collisions() const { return collisions_; }
  // Lines skipped by build_index because their entity id is not in the KG.
  std::size_t unknown_entities() const { return unknown_; }

 private:
  friend SurfaceFormIndex build_index(std::istream&, const KnowledgeGraph&, bool);

  std::string normalize(std::string_view token) const;

  struct Node {
    std::unordered_map<std::string, std::size_t> children;
    std::optional<Index> entity;
  };
  bool case_fold_;
  std::vector<Node> nodes_;
  std::size_t forms_ = 0;
  std::size_t collisions_ = 0;
  std::size_t unknown_ = 0;
};

/// Reads `entity-id<TAB>surface form` lines. Unknown ids are skipped and
/// counted; an empty surface form or a line without a tab is an InputError.
SurfaceFormIndex build_index(std::istream& in, const KnowledgeGraph& kg, bool case_fold = true);
SurfaceFormIndex build_index(const std::filesystem::path& path, const KnowledgeGraph& kg,
                             bool case_fold = true);

struct Token {
  enum class Kind : std::uint8_t { kLexeme, kEntity };
  Kind kind = Kind::kLexeme;
  Index index = 0;  // into the KG entities or the corpus lexicon
  bool is_entity() const { return kind == Kind::kEntity; }
  bool operator==(const Token&) const = default;
};

// Lexemes ordered by descending frequency (ties: first appearance).
struct Lexicon {
  Vocabulary words;
  std::vector<Index> frequencies;
};

struct GroundedCorpus {
  std::string lang;
  std::vector<std::vector<Token>> documents;
  Lexicon lexicon;

  std::size_t num_tokens() const;
  // Token text: `@ent:<id>` for entities, the lexeme otherwise.
  std::string token_text(const Token& t, const KnowledgeGraph& kg) const;
};

struct GroundingStats {
  double coverage = 0;   // fraction of KG entities mentioned at least once
  double avg_match = 0;  // mentions per covered entity
  std::size_t mentions = 0;
};

GroundingStats grounding_stats(const GroundedCorpus& corpus, const KnowledgeGraph& kg);

struct GroundingResult {
  GroundedCorpus corpus;
  GroundingStats stats;
};

/// Replaces longest surface-form matches with entity tokens, then prunes
/// lexemes rarer than `min_freq` to kRareToken. Entities are never pruned.
GroundingResult ground_corpus(std::istream& in, const SurfaceFormIndex& index,
                              const KnowledgeGraph& kg, Index min_freq = 5);
GroundingResult ground_corpus(const std::filesystem::path& path, const SurfaceFormIndex& index,
                              const KnowledgeGraph& kg, Index min_freq = 5);

struct PregroundedResult {
  GroundedCorpus corpus;
  std::size_t demoted = 0;  // markers with ids missing from the KG
};

// Reads the `@ent:<id>` token format. Throws InputError on an empty marker id.
PregroundedResult load_pregrounded(std::istream& in, const KnowledgeGraph& kg);
PregroundedResult load_pregrounded(const std::filesystem::path& path, const KnowledgeGraph& kg);

void write_grounded(std::ostream& out, const GroundedCorpus& corpus, const KnowledgeGraph& kg);

}  // namespace kgalign

#endif  // KGALIGN_GROUNDING_HPP
