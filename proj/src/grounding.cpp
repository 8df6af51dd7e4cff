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

#include "kgalign/grounding.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

namespace kgalign {

namespace {

std::vector<std::string> split_whitespace(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    if (j > i) out.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return out;
}

// A document token before lexicon indices are assigned.
struct RawToken {
  std::optional<Index> entity;
  std::string lexeme;
};

// Builds the frequency-ordered lexicon and converts raw tokens. Lexemes with
// frequency below `min_freq` collapse into kRareToken.
GroundedCorpus finalize(std::string lang, std::vector<std::vector<RawToken>> raw, Index min_freq) {
  Vocabulary first_seen;
  std::vector<Index> counts;
  for (const auto& doc : raw) {
    for (const auto& t : doc) {
      if (t.entity) continue;
      Index i = first_seen.add(t.lexeme);
      if (i == static_cast<Index>(counts.size())) counts.push_back(0);
      ++counts[static_cast<std::size_t>(i)];
    }
  }

  // Map each first-seen lexeme to its surviving word (itself or <rare>).
  std::vector<std::string> words;
  std::vector<Index> freq;
  std::vector<Index> survivor(counts.size());
  std::optional<Index> rare_slot;
  for (Index i = 0; i < first_seen.size(); ++i) {
    const auto c = counts[static_cast<std::size_t>(i)];
    if (c >= min_freq && first_seen.at(i) != kRareToken) {
      survivor[static_cast<std::size_t>(i)] = static_cast<Index>(words.size());
      words.push_back(first_seen.at(i));
      freq.push_back(c);
    } else {
      if (!rare_slot) {
        rare_slot = static_cast<Index>(words.size());
        words.emplace_back(kRareToken);
        freq.push_back(0);
      }
      survivor[static_cast<std::size_t>(i)] = *rare_slot;
      freq[static_cast<std::size_t>(*rare_slot)] += c;
    }
  }

  std::vector<Index> order(words.size());
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
    return freq[static_cast<std::size_t>(a)] > freq[static_cast<std::size_t>(b)];
  });
  std::vector<Index> rank(words.size());
  GroundedCorpus corpus;
  corpus.lang = std::move(lang);
  for (std::size_t r = 0; r < order.size(); ++r) {
    const auto w = static_cast<std::size_t>(order[r]);
    rank[w] = static_cast<Index>(r);
    corpus.lexicon.words.add(words[w]);
    corpus.lexicon.frequencies.push_back(freq[w]);
  }

  corpus.documents.reserve(raw.size());
  for (const auto& doc : raw) {
    auto& out = corpus.documents.emplace_back();
    out.reserve(doc.size());
    for (const auto& t : doc) {
      if (t.entity) {
        out.push_back({Token::Kind::kEntity, *t.entity});
      } else {
        const auto i = static_cast<std::size_t>(*first_seen.find(t.lexeme));
        out.push_back({Token::Kind::kLexeme, rank[static_cast<std::size_t>(survivor[i])]});
      }
    }
  }
  return corpus;
}

}  // namespace

SurfaceFormIndex::SurfaceFormIndex(bool case_fold) : case_fold_(case_fold), nodes_(1) {}

std::string SurfaceFormIndex::normalize(std::string_view token) const {
  std::string out(token);
  if (case_fold_) {
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

bool SurfaceFormIndex::insert(std::string_view surface_form, Index entity) {
  auto tokens = split_whitespace(surface_form);
  if (tokens.empty()) throw InputError("empty surface form");
  std::size_t node = 0;
  for (const auto& tok : tokens) {
    auto key = normalize(tok);
    auto it = nodes_[node].children.find(key);
    if (it == nodes_[node].children.end()) {
      nodes_.emplace_back();
      it = nodes_[node].children.emplace(std::move(key), nodes_.size() - 1).first;
    }
    node = it->second;
  }
  if (nodes_[node].entity) {
    ++collisions_;
    return false;
  }
  nodes_[node].entity = entity;
  ++forms_;
  return true;
}

std::optional<SurfaceFormIndex::Match> SurfaceFormIndex::longest_prefix(
    std::span<const std::string> tokens) const {
  std::optional<Match> best;
  std::size_t node = 0;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    auto it = nodes_[node].children.find(normalize(tokens[i]));
    if (it == nodes_[node].children.end()) break;
    node = it->second;
    if (nodes_[node].entity) best = Match{*nodes_[node].entity, i + 1};
  }
  return best;
}

std::vector<SurfaceFormIndex::Segment> SurfaceFormIndex::segment(
    std::span<const std::string> tokens) const {
  std::vector<Segment> out;
  std::size_t pos = 0;
  while (pos < tokens.size()) {
    if (auto m = longest_prefix(tokens.subspan(pos))) {
      out.push_back({pos, pos + m->length, m->entity});
      pos += m->length;
    } else {
      out.push_back({pos, pos + 1, std::nullopt});
      ++pos;
    }
  }
  return out;
}

SurfaceFormIndex build_index(std::istream& in, const KnowledgeGraph& kg, bool case_fold) {
  SurfaceFormIndex index(case_fold);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw InputError("surface forms line " + std::to_string(line_no) + ": missing tab");
    }
    auto entity = kg.entities().find(std::string_view(line).substr(0, tab));
    if (!entity) {
      ++index.unknown_;
      continue;
    }
    auto form = std::string_view(line).substr(tab + 1);
    if (split_whitespace(form).empty()) {
      throw InputError("surface forms line " + std::to_string(line_no) + ": empty surface form");
    }
    index.insert(form, *entity);
  }
  return index;
}

SurfaceFormIndex build_index(const std::filesystem::path& path, const KnowledgeGraph& kg,
                             bool case_fold) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open surface forms file: " + path.string());
  return build_index(in, kg, case_fold);
}

std::size_t GroundedCorpus::num_tokens() const {
  std::size_t n = 0;
  for (const auto& d : documents) n += d.size();
  return n;
}

std::string GroundedCorpus::token_text(const Token& t, const KnowledgeGraph& kg) const {
  if (t.is_entity()) return std::string(kEntityMarker) + kg.entities().at(t.index);
  return lexicon.words.at(t.index);
}

GroundingStats grounding_stats(const GroundedCorpus& corpus, const KnowledgeGraph& kg) {
  std::vector<std::size_t> mentions(static_cast<std::size_t>(kg.num_entities()), 0);
  GroundingStats stats;
  for (const auto& doc : corpus.documents) {
    for (const auto& t : doc) {
      if (!t.is_entity()) continue;
      ++mentions[static_cast<std::size_t>(t.index)];
      ++stats.mentions;
    }
  }
  const auto covered = std::count_if(mentions.begin(), mentions.end(),
                                     [](std::size_t m) { return m > 0; });
  if (kg.num_entities() > 0) {
    stats.coverage = static_cast<double>(covered) / static_cast<double>(kg.num_entities());
  }
  if (covered > 0) {
    stats.avg_match = static_cast<double>(stats.mentions) / static_cast<double>(covered);
  }
  return stats;
}

GroundingResult ground_corpus(std::istream& in, const SurfaceFormIndex& index,
                              const KnowledgeGraph& kg, Index min_freq) {
  std::vector<std::vector<RawToken>> raw;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto tokens = split_whitespace(line);
    auto& doc = raw.emplace_back();
    for (const auto& seg : index.segment(tokens)) {
      if (seg.entity) {
        doc.push_back({seg.entity, {}});
        continue;
      }
      if (tokens[seg.begin].starts_with(kEntityMarker)) {
        throw InputError("corpus line " + std::to_string(line_no) +
                         ": lexeme must not start with the entity marker");
      }
      doc.push_back({std::nullopt, tokens[seg.begin]});
    }
  }
  if (in.bad()) throw InputError("error reading corpus");
  GroundingResult result{finalize(kg.lang(), std::move(raw), min_freq), {}};
  result.stats = grounding_stats(result.corpus, kg);
  return result;
}

GroundingResult ground_corpus(const std::filesystem::path& path, const SurfaceFormIndex& index,
                              const KnowledgeGraph& kg, Index min_freq) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open corpus file: " + path.string());
  return ground_corpus(in, index, kg, min_freq);
}

PregroundedResult load_pregrounded(std::istream& in, const KnowledgeGraph& kg) {
  std::vector<std::vector<RawToken>> raw;
  std::size_t demoted = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto& doc = raw.emplace_back();
    for (auto& tok : split_whitespace(line)) {
      if (!tok.starts_with(kEntityMarker)) {
        doc.push_back({std::nullopt, std::move(tok)});
        continue;
      }
      auto id = std::string_view(tok).substr(kEntityMarker.size());
      if (id.empty()) {
        throw InputError("grounded corpus line " + std::to_string(line_no) +
                         ": entity marker without id");
      }
      if (auto e = kg.entities().find(id)) {
        doc.push_back({e, {}});
      } else {
        ++demoted;
        doc.push_back({std::nullopt, std::move(tok)});
      }
    }
  }
  return {finalize(kg.lang(), std::move(raw), 1), demoted};
}

PregroundedResult load_pregrounded(const std::filesystem::path& path, const KnowledgeGraph& kg) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open grounded corpus: " + path.string());
  return load_pregrounded(in, kg);
}

void write_grounded(std::ostream& out, const GroundedCorpus& corpus, const KnowledgeGraph& kg) {
  for (const auto& doc : corpus.documents) {
    for (std::size_t i = 0; i < doc.size(); ++i) {
      if (i) out << ' ';
      out << corpus.token_text(doc[i], kg);
    }
    out << '\n';
  }
}

}  // namespace kgalign
