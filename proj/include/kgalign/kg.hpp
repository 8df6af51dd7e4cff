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

#ifndef KGALIGN_KG_HPP
#define KGALIGN_KG_HPP

#include <compare>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "kgalign/common.hpp"

namespace kgalign {

// Ordered set of string ids; indices follow insertion order.
class Vocabulary {
 public:
  Vocabulary() = default;
  explicit Vocabulary(std::vector<std::string> ids);

  // Returns the index of `id`, inserting it at the end if new.
  Index add(const std::string& id);
  std::optional<Index> find(std::string_view id) const;
  bool contains(std::string_view id) const { return find(id).has_value(); }

  const std::string& at(Index i) const { return ids_.at(static_cast<std::size_t>(i)); }
  Index size() const { return static_cast<Index>(ids_.size()); }
  bool empty() const { return ids_.empty(); }
  const std::vector<std::string>& ids() const { return ids_; }

 private:
  struct Hash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const { return std::hash<std::string_view>{}(s); }
  };
  std::vector<std::string> ids_;
  std::unordered_map<std::string, Index, Hash, std::equal_to<>> index_;
};

struct Triple {
  Index head = 0;
  Index relation = 0;
  Index tail = 0;
  auto operator<=>(const Triple&) const = default;
};

struct TripleHash {
  std::size_t operator()(const Triple& t) const noexcept;
};

// A language-specific KG: entity and relation vocabularies plus a
// duplicate-free triple list. Immutable once built.
class KnowledgeGraph {
 public:
  KnowledgeGraph() = default;

  // Validates index bounds and rejects duplicate triples.
  KnowledgeGraph(std::string lang, Vocabulary entities, Vocabulary relations,
                 std::vector<Triple> triples);

  const std::string& lang() const { return lang_; }
  const Vocabulary& entities() const { return entities_; }
  const Vocabulary& relations() const { return relations_; }
  const std::vector<Triple>& triples() const { return triples_; }
  Index num_entities() const { return entities_.size(); }
  Index num_relations() const { return relations_.size(); }

  bool contains(const Triple& t) const;

 private:
  std::string lang_;
  Vocabulary entities_;
  Vocabulary relations_;
  std::vector<Triple> triples_;
  std::vector<Triple> sorted_;  // for membership queries
};

struct LoadedKg {
  KnowledgeGraph kg;
  std::size_t duplicates = 0;
};

/// Parses `head<TAB>relation<TAB>tail` lines. Vocabularies are built in
/// first-appearance order; repeated triples are dropped and counted.
/// Throws InputError on a malformed line (with its 1-based number) or when
/// no triple is present.
LoadedKg parse_kg(std::istream& in, const std::string& lang);
LoadedKg load_kg(const std::filesystem::path& path, const std::string& lang);

void write_kg(std::ostream& out, const KnowledgeGraph& kg);

// Undirected, untyped view of a KG for the GCN encoder.
struct GraphStructure {
  SparseMatrixXr adjacency;       // A, 0/1, symmetric, zero diagonal
  SparseMatrixXr self_looped;     // A + I
  VectorXr degree;                // row sums of A + I
  SparseMatrixXr norm_adjacency;  // D^-1/2 (A + I) D^-1/2
};

GraphStructure build_graph_structure(const KnowledgeGraph& kg);

// Mean tails-per-head and heads-per-tail of each relation, indexed by
// relation id.
struct RelationStats {
  std::vector<double> tails_per_head;
  std::vector<double> heads_per_tail;

  // Probability of corrupting the head in Bernoulli negative sampling.
  double head_corruption_probability(Index relation) const;
};

RelationStats relation_stats(const KnowledgeGraph& kg);

}  // namespace kgalign

#endif  // KGALIGN_KG_HPP
