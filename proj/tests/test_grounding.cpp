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

#include <doctest.h>

#include <cctype>
#include <map>
#include <random>
#include <sstream>

#include "kgalign/grounding.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace kgalign;
using kgalign::testing::kg_from;
using kgalign::oracle::FormList;
using kgalign::oracle::lower;
using kgalign::oracle::words;

namespace {

SurfaceFormIndex index_from(const std::string& forms, const KnowledgeGraph& kg, bool fold = true) {
  std::istringstream in(forms);
  return build_index(in, kg, fold);
}

GroundedCorpus ground(const std::string& corpus, const SurfaceFormIndex& index,
                      const KnowledgeGraph& kg, Index min_freq = 1) {
  std::istringstream in(corpus);
  return ground_corpus(in, index, kg, min_freq).corpus;
}

std::vector<std::string> texts(const GroundedCorpus& c, const KnowledgeGraph& kg, std::size_t doc = 0) {
  std::vector<std::string> out;
  for (const auto& t : c.documents.at(doc)) out.push_back(c.token_text(t, kg));
  return out;
}

}  // namespace

TEST_SUITE("grounding") {

TEST_CASE("case-folded form is found through the trie") {
  auto kg = kg_from("e1\tr\te2\n");
  auto idx = index_from("e1\tNew York\n", kg);
  auto toks = words("new YORK");
  auto m = idx.longest_prefix(toks);
  REQUIRE(m);
  CHECK(m->entity == 0);
  CHECK(m->length == 2);
  CHECK(idx.size() == 1);
}

TEST_CASE("without case folding the case must match") {
  auto kg = kg_from("e1\tr\te2\n");
  auto idx = index_from("e1\tNew York\n", kg, false);
  CHECK_FALSE(idx.longest_prefix(words("new york")));
  CHECK(idx.longest_prefix(words("New York")));
}

TEST_CASE("identical forms keep the first entity") {
  auto kg = kg_from("e1\tr\te2\n");
  auto idx = index_from("e1\tparis\ne2\tParis\n", kg);
  CHECK(idx.collisions() == 1);
  CHECK(idx.longest_prefix(words("paris"))->entity == 0);
}

TEST_CASE("unknown entity ids are skipped and counted") {
  auto kg = kg_from("e1\tr\te2\n");
  auto idx = index_from("e1\tone\nnope\ttwo\n", kg);
  CHECK(idx.unknown_entities() == 1);
  CHECK(idx.size() == 1);
  CHECK_FALSE(idx.longest_prefix(words("two")));
}

TEST_CASE("empty surface form and missing tab are errors") {
  auto kg = kg_from("e1\tr\te2\n");
  CHECK_THROWS_AS(index_from("e1\t  \n", kg), InputError);
  CHECK_THROWS_AS(index_from("e1 one\n", kg), InputError);
}

TEST_CASE("longest match wins") {
  auto kg = kg_from("e1\tr\te2\n");
  auto idx = index_from("e1\tnew york\ne2\tnew york city\n", kg);
  auto c = ground("new york city is big\n", idx, kg);
  CHECK(texts(c, kg) == std::vector<std::string>{"@ent:e2", "is", "big"});
}

TEST_CASE("greedy scan resumes after a match") {
  auto kg = kg_from("e1\tr\te2\n");
  auto idx = index_from("e1\ta b\ne2\ta\n", kg);
  auto c = ground("a b a\n", idx, kg);
  CHECK(texts(c, kg) == std::vector<std::string>{"@ent:e1", "@ent:e2"});
}

TEST_CASE("no match leaves only lexemes") {
  auto kg = kg_from("e1\tr\te2\n");
  auto idx = index_from("e1\tzzz\n", kg);
  std::istringstream in("a b c\n");
  auto result = ground_corpus(in, idx, kg, 1);
  CHECK(result.stats.coverage == 0.0);
  CHECK(result.stats.mentions == 0);
  for (const auto& t : result.corpus.documents[0]) CHECK_FALSE(t.is_entity());
}

TEST_CASE("lexemes keep their case and rare ones are pruned") {
  auto kg = kg_from("e1\tr\te2\n");
  auto idx = index_from("e1\tone\n", kg);
  auto c = ground("The cat the cat the One\nthe Cat\n", idx, kg, 2);
  // the x3, cat x2, The + Cat -> <rare> x2; ties keep first-seen order and
  // <rare> takes the slot of "The".
  CHECK(c.lexicon.words.ids() == std::vector<std::string>{"the", std::string(kRareToken), "cat"});
  CHECK(c.lexicon.frequencies == std::vector<Index>{3, 2, 2});
  CHECK(texts(c, kg, 0) ==
        std::vector<std::string>{"<rare>", "cat", "the", "cat", "the", "@ent:e1"});
}

TEST_CASE("lexicon frequencies equal corpus counts") {
  auto kg = kg_from("e1\tr\te2\n");
  auto idx = index_from("e1\tx y\n", kg);
  auto c = ground("a b a x y c\nb b x\n\na\n", idx, kg, 1);
  std::map<std::string, Index> counts;
  for (const auto& doc : c.documents) {
    for (const auto& t : doc) {
      if (!t.is_entity()) ++counts[c.token_text(t, kg)];
    }
  }
  for (Index i = 0; i < c.lexicon.words.size(); ++i) {
    CHECK(counts[c.lexicon.words.at(i)] == c.lexicon.frequencies[static_cast<std::size_t>(i)]);
  }
  CHECK(c.documents.size() == 4);
  CHECK(c.documents[2].empty());
}

TEST_CASE("raw lexeme with the entity marker is rejected") {
  auto kg = kg_from("e1\tr\te2\n");
  auto idx = index_from("e1\tone\n", kg);
  std::istringstream in("hello @ent:e1\n");
  CHECK_THROWS_AS(ground_corpus(in, idx, kg, 1), InputError);
}

TEST_CASE("pregrounded input resolves and demotes markers") {
  auto kg = kg_from("e1\tr\te2\n");
  std::istringstream in("@ent:e1 is big\n@ent:unknown x\n\n");
  auto r = load_pregrounded(in, kg);
  CHECK(r.demoted == 1);
  REQUIRE(r.corpus.documents.size() == 3);
  CHECK(r.corpus.documents[0][0] == Token{Token::Kind::kEntity, 0});
  CHECK(texts(r.corpus, kg, 0) == std::vector<std::string>{"@ent:e1", "is", "big"});
  CHECK_FALSE(r.corpus.documents[1][0].is_entity());
  CHECK(texts(r.corpus, kg, 1) == std::vector<std::string>{"@ent:unknown", "x"});
  CHECK(r.corpus.documents[2].empty());

  std::istringstream bad("@ent: x\n");
  CHECK_THROWS_AS(load_pregrounded(bad, kg), InputError);
}

TEST_CASE("grounded output reloads to the same corpus") {
  auto kg = kg_from("e1\tr\te2\ne2\tr\te3\n");
  auto idx = index_from("e1\tred fox\ne3\tfox\n", kg);
  auto c = ground("the red fox saw a fox\n\nfox fox red\n", idx, kg, 1);
  std::ostringstream out;
  write_grounded(out, c, kg);
  std::istringstream in(out.str());
  auto back = load_pregrounded(in, kg).corpus;
  REQUIRE(back.documents.size() == c.documents.size());
  for (std::size_t d = 0; d < c.documents.size(); ++d) CHECK(texts(back, kg, d) == texts(c, kg, d));
  std::ostringstream again;
  write_grounded(again, back, kg);
  CHECK(again.str() == out.str());
}

TEST_CASE("nested forms: longest match dominates") {
  // Forms over a 2-letter alphabet, heavily nested: every prefix of "a b a b
  // a" and "b a a" is its own form.
  std::vector<std::string> ents;
  for (int i = 0; i < 12; ++i) ents.push_back("n" + std::to_string(i));
  std::string triples;
  for (std::size_t i = 0; i + 1 < ents.size(); ++i) triples += ents[i] + "\tr\t" + ents[i + 1] + "\n";
  auto kg = kg_from(triples);
  const std::vector<std::string> form_text = {"a", "a b", "a b a", "a b a b", "a b a b a",
                                              "b", "b a", "b a a", "A B B", "b b b b"};
  std::string forms;
  FormList list;
  for (std::size_t i = 0; i < form_text.size(); ++i) {
    forms += ents[i] + "\t" + form_text[i] + "\n";
    list.emplace_back(*kg.entities().find(ents[i]), words(lower(form_text[i])));
  }
  auto idx = index_from(forms, kg);
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> coin(0, 2);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<std::string> toks;
    for (int i = 0; i < 20; ++i) toks.push_back(coin(rng) == 0 ? "A" : coin(rng) == 1 ? "b" : "a");
    auto segs = idx.segment(toks);
    auto expected = oracle::longest_match_scan(toks, list);
    REQUIRE(segs.size() == expected.size());
    for (std::size_t s = 0; s < segs.size(); ++s) {
      CHECK(segs[s].end - segs[s].begin == expected[s].first);
      CHECK(segs[s].entity == expected[s].second);
    }
  }
}

TEST_CASE("round trip on a 10k-token corpus and oracle statistics") {
  // 40 entities with 1-3 token forms drawn from a small alphabet so that
  // forms overlap and nest.
  std::mt19937_64 rng(42);
  const std::vector<std::string> alphabet = {"la", "Le", "de", "du", "Rio", "san", "mar", "Do"};
  std::uniform_int_distribution<std::size_t> letter(0, alphabet.size() - 1);
  std::uniform_int_distribution<int> len(1, 3);
  std::string triples;
  for (int i = 0; i < 40; ++i) triples += "q" + std::to_string(i) + "\tr\tq" + std::to_string((i + 1) % 40) + "\n";
  auto kg = kg_from(triples);
  std::string forms;
  FormList list;
  std::map<std::vector<std::string>, Index> first_owner;
  for (int i = 0; i < 40; ++i) {
    std::vector<std::string> f;
    for (int k = len(rng); k > 0; --k) f.push_back(alphabet[letter(rng)]);
    std::string text;
    for (const auto& w : f) text += (text.empty() ? "" : " ") + w;
    forms += "q" + std::to_string(i) + "\t" + text + "\n";
    std::vector<std::string> folded;
    for (const auto& w : f) folded.push_back(lower(w));
    const Index e = *kg.entities().find("q" + std::to_string(i));
    if (first_owner.emplace(folded, e).second) list.emplace_back(e, folded);
  }
  auto idx = index_from(forms, kg);

  std::vector<std::string> vocab = alphabet;
  for (int i = 0; i < 30; ++i) vocab.push_back("w" + std::to_string(i));
  std::uniform_int_distribution<std::size_t> pick(0, vocab.size() - 1);
  std::vector<std::vector<std::string>> docs;
  std::string corpus;
  std::size_t total = 0;
  while (total < 10000) {
    std::vector<std::string> doc;
    for (int k = 0; k < 50; ++k) doc.push_back(vocab[pick(rng)]);
    total += doc.size();
    for (const auto& w : doc) corpus += w + " ";
    corpus += "\n";
    docs.push_back(doc);
  }
  std::istringstream in(corpus);
  auto result = ground_corpus(in, idx, kg, 1);
  REQUIRE(result.corpus.documents.size() == docs.size());

  std::vector<std::size_t> mentions(40, 0);
  std::size_t total_mentions = 0;
  for (std::size_t d = 0; d < docs.size(); ++d) {
    // Expand every entity token back to the tokens of its longest form that
    // matches the original text at that point.
    const auto& doc = docs[d];
    std::vector<std::string> rebuilt;
    std::size_t pos = 0;
    for (const auto& t : result.corpus.documents[d]) {
      if (!t.is_entity()) {
        rebuilt.push_back(result.corpus.token_text(t, kg));
        ++pos;
        continue;
      }
      std::size_t best = 0;
      for (const auto& [e, f] : list) {
        if (e != t.index || f.size() <= best || pos + f.size() > doc.size()) continue;
        bool ok = true;
        for (std::size_t k = 0; k < f.size() && ok; ++k) ok = lower(doc[pos + k]) == f[k];
        if (ok) best = f.size();
      }
      REQUIRE(best > 0);
      for (std::size_t k = 0; k < best; ++k) rebuilt.push_back(doc[pos + k]);
      pos += best;
    }
    CHECK(rebuilt == doc);

    for (const auto& [length, ent] : oracle::longest_match_scan(doc, list)) {
      if (ent) {
        ++mentions[static_cast<std::size_t>(*ent)];
        ++total_mentions;
      }
    }
  }
  std::size_t covered = 0;
  for (auto m : mentions) covered += m > 0;
  CHECK(result.stats.mentions == total_mentions);
  CHECK(result.stats.coverage == static_cast<double>(covered) / 40.0);
  CHECK(result.stats.avg_match == static_cast<double>(total_mentions) / static_cast<double>(covered));

  // Determinism: grounding again gives byte-identical output.
  std::istringstream in2(corpus);
  auto again = ground_corpus(in2, idx, kg, 1);
  std::ostringstream a, b;
  write_grounded(a, result.corpus, kg);
  write_grounded(b, again.corpus, kg);
  CHECK(a.str() == b.str());
}

}  // TEST_SUITE
