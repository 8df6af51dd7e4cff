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

#include "kgalign/kg.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <unordered_set>

namespace kgalign {

Vocabulary::Vocabulary(std::vector<std::string> ids) {
  for (auto& id : ids) {
    if (!index_.emplace(id, static_cast<Index>(ids_.size())).second) {
      throw InputError("duplicate vocabulary id: " + id);
    }
    ids_.push_back(std::move(id));
  }
}

Index Vocabulary::add(const std::string& id) {
  auto [it, inserted] = index_.emplace(id, static_cast<Index>(ids_.size()));
  if (inserted) ids_.push_back(id);
  return it->second;
}

std::optional<Index> Vocabulary::find(std::string_view id) const {
  auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t TripleHash::operator()(const Triple& t) const noexcept {
  std::size_t h = std::hash<Index>{}(t.head);
  h = h * 1000003u ^ std::hash<Index>{}(t.relation);
  h = h * 1000003u ^ std::hash<Index>{}(t.tail);
  return h;
}

KnowledgeGraph::KnowledgeGraph(std::string lang, Vocabulary entities, Vocabulary relations,
                               std::vector<Triple> triples)
    : lang_(std::move(lang)),
      entities_(std::move(entities)),
      relations_(std::move(relations)),
      triples_(std::move(triples)) {
  for (const auto& t : triples_) {
    if (t.head < 0 || t.head >= entities_.size() || t.tail < 0 || t.tail >= entities_.size() ||
        t.relation < 0 || t.relation >= relations_.size()) {
      throw InputError("triple index out of range");
    }
  }
  sorted_ = triples_;
  std::sort(sorted_.begin(), sorted_.end());
  if (std::adjacent_find(sorted_.begin(), sorted_.end()) != sorted_.end()) {
    throw InputError("duplicate triple in knowledge graph");
  }
}

bool KnowledgeGraph::contains(const Triple& t) const {
  return std::binary_search(sorted_.begin(), sorted_.end(), t);
}

LoadedKg parse_kg(std::istream& in, const std::string& lang) {
  Vocabulary entities;
  Vocabulary relations;
  std::vector<Triple> triples;
  std::unordered_set<Triple, TripleHash> seen;
  std::size_t duplicates = 0;

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::string_view view(line);
    auto first = view.find('\t');
    auto second = first == std::string_view::npos ? first : view.find('\t', first + 1);
    if (second == std::string_view::npos || view.find('\t', second + 1) != std::string_view::npos) {
      throw InputError("line " + std::to_string(line_no) + ": expected 3 tab-separated fields");
    }
    std::string head(view.substr(0, first));
    std::string rel(view.substr(first + 1, second - first - 1));
    std::string tail(view.substr(second + 1));
    if (head.empty() || rel.empty() || tail.empty()) {
      throw InputError("line " + std::to_string(line_no) + ": empty field");
    }
    Triple t{entities.add(head), relations.add(rel), entities.add(tail)};
    if (seen.insert(t).second) {
      triples.push_back(t);
    } else {
      ++duplicates;
    }
  }
  if (triples.empty()) throw InputError("knowledge graph file has no triples");
  return {KnowledgeGraph(lang, std::move(entities), std::move(relations), std::move(triples)),
          duplicates};
}

LoadedKg load_kg(const std::filesystem::path& path, const std::string& lang) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open triples file: " + path.string());
  return parse_kg(in, lang);
}

void write_kg(std::ostream& out, const KnowledgeGraph& kg) {
  for (const auto& t : kg.triples()) {
    out << kg.entities().at(t.head) << '\t' << kg.relations().at(t.relation) << '\t'
        << kg.entities().at(t.tail) << '\n';
  }
}

namespace {

SparseMatrixXr from_entries(Index n, const std::set<std::pair<Index, Index>>& entries) {
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(entries.size());
  for (auto [i, j] : entries) triplets.emplace_back(i, j, 1.0);
  SparseMatrixXr m(n, n);
  m.setFromTriplets(triplets.begin(), triplets.end());
  return m;
}

}  // namespace

GraphStructure build_graph_structure(const KnowledgeGraph& kg) {
  const Index n = kg.num_entities();
  std::set<std::pair<Index, Index>> edges;
  for (const auto& t : kg.triples()) {
    if (t.head == t.tail) continue;
    edges.emplace(t.head, t.tail);
    edges.emplace(t.tail, t.head);
  }
  GraphStructure g;
  g.adjacency = from_entries(n, edges);
  for (Index i = 0; i < n; ++i) edges.emplace(i, i);
  g.self_looped = from_entries(n, edges);

  g.degree = VectorXr::Zero(n);
  for (auto [i, j] : edges) g.degree(i) += 1.0;
  VectorXr inv_sqrt = g.degree.array().rsqrt();

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(edges.size());
  for (auto [i, j] : edges) triplets.emplace_back(i, j, inv_sqrt(i) * inv_sqrt(j));
  g.norm_adjacency.resize(n, n);
  g.norm_adjacency.setFromTriplets(triplets.begin(), triplets.end());
  return g;
}

double RelationStats::head_corruption_probability(Index relation) const {
  const auto r = static_cast<std::size_t>(relation);
  return tails_per_head.at(r) / (tails_per_head.at(r) + heads_per_tail.at(r));
}

RelationStats relation_stats(const KnowledgeGraph& kg) {
  const auto nr = static_cast<std::size_t>(kg.num_relations());
  // Triples are unique, so counting per (relation, head) gives distinct tails.
  std::vector<std::unordered_map<Index, Index>> tails_of(nr), heads_of(nr);
  for (const auto& t : kg.triples()) {
    ++tails_of[static_cast<std::size_t>(t.relation)][t.head];
    ++heads_of[static_cast<std::size_t>(t.relation)][t.tail];
  }
  RelationStats stats;
  stats.tails_per_head.resize(nr, 1.0);
  stats.heads_per_tail.resize(nr, 1.0);
  for (std::size_t r = 0; r < nr; ++r) {
    if (tails_of[r].empty()) continue;
    double total = 0;
    for (const auto& [h, c] : tails_of[r]) total += static_cast<double>(c);
    stats.tails_per_head[r] = total / static_cast<double>(tails_of[r].size());
    stats.heads_per_tail[r] = total / static_cast<double>(heads_of[r].size());
  }
  return stats;
}

}  // namespace kgalign
