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

#ifndef KGALIGN_SYNTH_HPP
#define KGALIGN_SYNTH_HPP

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "kgalign/common.hpp"

namespace kgalign {

struct SyntheticParams {
  Index entities = 500;
  Index triples = 2000;
  Index relations = 20;
  double edge_drop = 0.1;  // fraction of target triples replaced by random ones
  Index lexemes = 400;     // size of the translated word list
  Index lexemes_per_entity = 2;
  double word_rate = 1.0;  // chance of one of the entity's words after its mention
  Index walks_per_entity = 4;
  Index walk_length = 12;
  double filler_rate = 0.3;  // chance of a common word after each walk step

  void validate() const;
};

// One language of a benchmark, as the text files the pipeline reads.
struct SyntheticSide {
  std::string triples;
  std::string forms;
  std::string corpus;
};

using StringPairs = std::vector<std::pair<std::string, std::string>>;

struct SyntheticBenchmark {
  SyntheticParams params;
  SyntheticSide source;
  SyntheticSide target;
  StringPairs gold_entities;  // bijection, source id -> target id
  StringPairs gold_lexemes;   // word translations
};

/// Random source KG grown by preferential attachment; the target is a
/// relabelled copy in which round(edge_drop·|T|) triples are swapped for
/// random new ones without isolating any entity. Corpora are random walks
/// emitting entity surface forms, relation words, entity-associated words and
/// fillers; associated words of counterparts are translations of each other.
SyntheticBenchmark generate_benchmark(const SyntheticParams& params, std::uint64_t seed);

// File names inside a benchmark directory.
struct BenchmarkFiles {
  static constexpr const char* kSourceTriples = "src.triples";
  static constexpr const char* kSourceForms = "src.forms";
  static constexpr const char* kSourceCorpus = "src.corpus";
  static constexpr const char* kTargetTriples = "tgt.triples";
  static constexpr const char* kTargetForms = "tgt.forms";
  static constexpr const char* kTargetCorpus = "tgt.corpus";
  static constexpr const char* kGoldEntities = "gold_entities.tsv";
  static constexpr const char* kGoldLexemes = "gold_lexemes.tsv";
};

void write_benchmark(const std::filesystem::path& dir, const SyntheticBenchmark& bench);

}  // namespace kgalign

#endif  // KGALIGN_SYNTH_HPP
