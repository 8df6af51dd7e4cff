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

#include "kgalign/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "kgalign/embedding.hpp"

namespace kgalign {

void SyntheticParams::validate() const {
  auto fail = [](const std::string& what) { throw InputError("infeasible benchmark: " + what); };
  if (entities < 20) fail("entity count must be >= 20");
  if (triples < entities) fail("triple count must be >= entity count");
  if (relations < 1 || relations > triples) fail("relation count must be in [1, triples]");
  if (!(edge_drop >= 0 && edge_drop < 1)) fail("edge drop must be in [0, 1)");
  if (lexemes < 1 || lexemes_per_entity < 0) fail("lexeme counts must be positive");
  if (walks_per_entity < 1 || walk_length < 1) fail("walk counts must be >= 1");
  if (!(filler_rate >= 0 && filler_rate <= 1)) fail("filler rate must be in [0, 1]");
  if (!(word_rate >= 0 && word_rate <= 1)) fail("word rate must be in [0, 1]");
  // Preferential attachment draws at most one edge per distinct entity pair
  // and relation.
  const double capacity = static_cast<double>(entities) * static_cast<double>(entities - 1) *
                          static_cast<double>(relations) / 4.0;
  if (static_cast<double>(triples) > capacity) fail("too many triples for the entity count");
}

namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::discrete_distribution<Index> zipf(Index n, double exponent = 1.0) {
  std::vector<double> w(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) w[static_cast<std::size_t>(i)] = 1.0 / std::pow(i + 1.0, exponent);
  return {w.begin(), w.end()};
}

std::vector<Index> permutation(Index n, Rng& rng) {
  std::vector<Index> p(static_cast<std::size_t>(n));
  std::iota(p.begin(), p.end(), Index{0});
  std::shuffle(p.begin(), p.end(), rng);
  return p;
}

// Source KG structure over entity indices 0..n-1.
std::vector<Triple> grow_source(const SyntheticParams& params, Rng& rng) {
  const Index n = params.entities;
  auto pick_relation = zipf(params.relations, 0.7);
  std::set<Triple> seen;
  std::vector<Triple> triples;
  // Every node appears once as a base weight plus once per incident edge.
  std::vector<Index> ends;
  std::bernoulli_distribution flip(0.5);

  auto add = [&](Index a, Index b) {
    if (a == b) return false;
    Index r = static_cast<Index>(triples.size()) < params.relations
                  ? static_cast<Index>(triples.size())
                  : pick_relation(rng);
    Triple t = flip(rng) ? Triple{a, r, b} : Triple{b, r, a};
    if (!seen.insert(t).second) return false;
    triples.push_back(t);
    ends.push_back(a);
    ends.push_back(b);
    return true;
  };

  const Index m0 = 3;
  for (Index i = 0; i < m0; ++i) ends.push_back(i);
  add(0, 1);
  add(1, 2);
  add(2, 0);
  const Index per_node = std::max<Index>(1, (params.triples - 3) / (n - m0));
  for (Index i = m0; i < n; ++i) {
    const auto existing = ends;  // draw only among nodes present before i
    ends.push_back(i);
    std::uniform_int_distribution<std::size_t> pick(0, existing.size() - 1);
    std::set<Index> chosen;
    for (int attempt = 0; static_cast<Index>(chosen.size()) < std::min(per_node, i) &&
                          attempt < 1000;
         ++attempt) {
      const Index j = existing[pick(rng)];
      if (chosen.insert(j).second && !add(i, j)) chosen.erase(j);
    }
    if (chosen.empty()) throw InputError("infeasible benchmark: could not attach entity");
  }
  for (long attempt = 0; static_cast<Index>(triples.size()) < params.triples; ++attempt) {
    if (attempt > 100 * params.triples) throw InputError("infeasible benchmark: triple count");
    std::uniform_int_distribution<std::size_t> pick(0, ends.size() - 1);
    add(ends[pick(rng)], ends[pick(rng)]);
  }
  triples.resize(static_cast<std::size_t>(params.triples));
  return triples;
}

// Swaps `count` triples for random new ones, never isolating an entity.
std::vector<Triple> perturb(std::vector<Triple> triples, Index n, Index relations, Index count,
                            Rng& rng) {
  if (count == 0) return triples;
  std::vector<Index> degree(static_cast<std::size_t>(n), 0);
  for (const auto& t : triples) {
    ++degree[static_cast<std::size_t>(t.head)];
    ++degree[static_cast<std::size_t>(t.tail)];
  }
  std::vector<std::size_t> order(triples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<char> drop(triples.size(), 0);
  Index dropped = 0;
  for (auto i : order) {
    if (dropped == count) break;
    auto& h = degree[static_cast<std::size_t>(triples[i].head)];
    auto& t = degree[static_cast<std::size_t>(triples[i].tail)];
    if (h > 1 && t > 1) {
      --h;
      --t;
      drop[i] = 1;
      ++dropped;
    }
  }
  if (dropped < count) throw InputError("infeasible benchmark: edge drop isolates entities");

  std::set<Triple> taken(triples.begin(), triples.end());  // includes dropped ones
  std::vector<Triple> out;
  for (std::size_t i = 0; i < triples.size(); ++i) {
    if (!drop[i]) out.push_back(triples[i]);
  }
  auto pick_relation = zipf(relations, 0.7);
  std::uniform_int_distribution<Index> pick(0, n - 1);
  for (Index added = 0, attempt = 0; added < count; ++attempt) {
    if (attempt > 1000 * count) throw InputError("infeasible benchmark: no room for new triples");
    Triple t{pick(rng), pick_relation(rng), pick(rng)};
    if (t.head == t.tail || !taken.insert(t).second) continue;
    out.push_back(t);
    ++added;
  }
  return out;
}

// Vocabulary shared (by translation) between the two sides.
struct WordPlan {
  Index words;
  Index relation_words;
  Index fillers;
  std::vector<std::vector<Index>> entity_words;  // by source entity index
};

struct SideNames {
  std::string prefix;            // "s" or "t"
  std::vector<Index> entity_id;  // source index -> printed entity number
  std::vector<Index> word_id;    // lexicon word -> printed number
  std::vector<Index> rel_word_id;
  std::vector<Index> filler_id;
};

std::string entity_name(const SideNames& s, Index e) {
  return s.prefix + "_e" + std::to_string(s.entity_id[static_cast<std::size_t>(e)]);
}

// Surface form as it is listed in the forms file (lower case).
std::string surface_form(const SideNames& s, Index e) {
  std::string form = s.prefix + "n" + std::to_string(s.entity_id[static_cast<std::size_t>(e)]);
  if (e % 3 == 0) form += " " + s.prefix + "x";
  return form;
}

std::string capitalize(std::string s) {
  if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  return s;
}

// Entities are indexed by source index; `triples` use those indices too.
SyntheticSide render_side(const std::vector<Triple>& triples, const SideNames& names,
                          const WordPlan& lex, const SyntheticParams& params, Rng& rng) {
  const Index n = params.entities;
  SyntheticSide side;
  {
    std::vector<Triple> shuffled = triples;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    std::ostringstream out;
    for (const auto& t : shuffled) {
      out << entity_name(names, t.head) << '\t' << names.prefix << "_r" << t.relation << '\t'
          << entity_name(names, t.tail) << '\n';
    }
    side.triples = out.str();
  }
  {
    std::ostringstream out;
    for (Index e : permutation(n, rng)) out << entity_name(names, e) << '\t' << surface_form(names, e) << '\n';
    side.forms = out.str();
  }

  std::vector<std::vector<std::pair<Index, Index>>> incident(static_cast<std::size_t>(n));
  for (const auto& t : triples) {
    incident[static_cast<std::size_t>(t.head)].emplace_back(t.relation, t.tail);
    incident[static_cast<std::size_t>(t.tail)].emplace_back(t.relation, t.head);
  }
  std::bernoulli_distribution emit_word(params.word_rate);
  std::bernoulli_distribution emit_filler(params.filler_rate);
  auto pick_filler = zipf(lex.fillers);
  std::ostringstream out;
  std::vector<Index> starts;
  for (Index w = 0; w < params.walks_per_entity; ++w) {
    for (Index e = 0; e < n; ++e) starts.push_back(e);
  }
  std::shuffle(starts.begin(), starts.end(), rng);
  for (Index start : starts) {
    Index cur = start;
    std::string line;
    auto emit = [&](const std::string& tok) {
      if (!line.empty()) line += ' ';
      line += tok;
    };
    for (Index step = 0; step < params.walk_length; ++step) {
      std::istringstream form(surface_form(names, cur));
      std::string tok;
      while (form >> tok) emit(capitalize(tok));
      const auto& words = lex.entity_words[static_cast<std::size_t>(cur)];
      if (!words.empty() && emit_word(rng)) {
        std::uniform_int_distribution<std::size_t> pick(0, words.size() - 1);
        emit(names.prefix + "w" + std::to_string(names.word_id[static_cast<std::size_t>(words[pick(rng)])]));
      }
      if (emit_filler(rng)) {
        emit(names.prefix + "f" + std::to_string(names.filler_id[static_cast<std::size_t>(pick_filler(rng))]));
      }
      const auto& nbrs = incident[static_cast<std::size_t>(cur)];
      if (nbrs.empty() || step + 1 == params.walk_length) break;
      std::uniform_int_distribution<std::size_t> pick(0, nbrs.size() - 1);
      auto [rel, next] = nbrs[pick(rng)];
      emit(names.prefix + "r" + std::to_string(names.rel_word_id[static_cast<std::size_t>(rel)]));
      cur = next;
    }
    out << line << '\n';
  }
  side.corpus = out.str();
  return side;
}

}  // namespace

SyntheticBenchmark generate_benchmark(const SyntheticParams& params, std::uint64_t seed) {
  params.validate();
  Rng structure_rng(splitmix(seed ^ 0x1));
  Rng naming_rng(splitmix(seed ^ 0x2));
  Rng source_rng(splitmix(seed ^ 0x3));
  Rng target_rng(splitmix(seed ^ 0x4));

  const Index n = params.entities;
  const auto source_triples = grow_source(params, structure_rng);
  const auto drop = static_cast<Index>(std::llround(params.edge_drop * static_cast<double>(params.triples)));
  const auto target_triples = perturb(source_triples, n, params.relations, drop, structure_rng);

  WordPlan lex;
  lex.words = params.lexemes;
  lex.relation_words = params.relations;
  lex.fillers = 20;
  {
    auto pick_word = zipf(lex.words, 0.8);
    for (Index e = 0; e < n; ++e) {
      std::set<Index> chosen;
      for (int attempt = 0; static_cast<Index>(chosen.size()) <
                                std::min(params.lexemes_per_entity, lex.words) && attempt < 1000;
           ++attempt) {
        chosen.insert(pick_word(structure_rng));
      }
      lex.entity_words.emplace_back(chosen.begin(), chosen.end());
    }
  }

  SideNames src{"s", permutation(n, naming_rng), permutation(lex.words, naming_rng),
                permutation(lex.relation_words, naming_rng), permutation(lex.fillers, naming_rng)};
  // Source names follow the source index; the printed id order is irrelevant
  // there, but target ids must not reveal the bijection.
  std::iota(src.entity_id.begin(), src.entity_id.end(), Index{0});
  SideNames tgt{"t", permutation(n, naming_rng), permutation(lex.words, naming_rng),
                permutation(lex.relation_words, naming_rng), permutation(lex.fillers, naming_rng)};

  SyntheticBenchmark bench;
  bench.params = params;
  bench.source = render_side(source_triples, src, lex, params, source_rng);
  bench.target = render_side(target_triples, tgt, lex, params, target_rng);
  for (Index e = 0; e < n; ++e) bench.gold_entities.emplace_back(entity_name(src, e), entity_name(tgt, e));
  auto word_pairs = [&](const char* kind, const std::vector<Index>& s, const std::vector<Index>& t) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      bench.gold_lexemes.emplace_back(src.prefix + kind + std::to_string(s[i]),
                                      tgt.prefix + kind + std::to_string(t[i]));
    }
  };
  word_pairs("w", src.word_id, tgt.word_id);
  word_pairs("r", src.rel_word_id, tgt.rel_word_id);
  word_pairs("f", src.filler_id, tgt.filler_id);
  return bench;
}

namespace {

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << content;
}

std::string pairs_text(const StringPairs& pairs) {
  std::string out;
  for (const auto& [a, b] : pairs) out += a + '\t' + b + '\n';
  return out;
}

}  // namespace

void write_benchmark(const std::filesystem::path& dir, const SyntheticBenchmark& bench) {
  std::filesystem::create_directories(dir);
  write_file(dir / BenchmarkFiles::kSourceTriples, bench.source.triples);
  write_file(dir / BenchmarkFiles::kSourceForms, bench.source.forms);
  write_file(dir / BenchmarkFiles::kSourceCorpus, bench.source.corpus);
  write_file(dir / BenchmarkFiles::kTargetTriples, bench.target.triples);
  write_file(dir / BenchmarkFiles::kTargetForms, bench.target.forms);
  write_file(dir / BenchmarkFiles::kTargetCorpus, bench.target.corpus);
  write_file(dir / BenchmarkFiles::kGoldEntities, pairs_text(bench.gold_entities));
  write_file(dir / BenchmarkFiles::kGoldLexemes, pairs_text(bench.gold_lexemes));
}

}  // namespace kgalign
