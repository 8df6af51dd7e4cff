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

#ifndef KGALIGN_PIPELINE_HPP
#define KGALIGN_PIPELINE_HPP

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "kgalign/config.hpp"
#include "kgalign/eval.hpp"
#include "kgalign/grounding.hpp"

namespace kgalign {

enum class Stage { kGround = 0, kTrain = 1, kAlign = 2, kEval = 3 };

Stage parse_stage(std::string_view name);
std::string_view stage_name(Stage s);

// Artifacts written into a run's work directory.
struct WorkFiles {
  static constexpr const char* kSourceGrounded = "src.grounded";
  static constexpr const char* kTargetGrounded = "tgt.grounded";
  static constexpr const char* kSourceEmbedding = "src";  // prefix
  static constexpr const char* kTargetEmbedding = "tgt";  // prefix
  static constexpr const char* kSeedEntities = "seed_entities.tsv";
  static constexpr const char* kTestPairs = "test.tsv";
  static constexpr const char* kSeedLexicon = "seed_lexicon.tsv";
  static constexpr const char* kState = "state";
  static constexpr const char* kPredictions = "predictions.tsv";
  static constexpr const char* kReport = "report.tsv";
};

struct RunOptions {
  std::filesystem::path data_dir;  // benchmark layout, see BenchmarkFiles
  std::filesystem::path work_dir;
  std::uint64_t seed = 0;
  Stage from = Stage::kGround;  // earlier stages are read back from work_dir
};

struct PipelineResult {
  EvalReport report;
  std::optional<GroundingStats> source_grounding;
  std::optional<GroundingStats> target_grounding;
  Index self_learning_iterations = 0;
  // FNV-1a digests of each stage's persisted outputs.
  std::map<std::string, std::uint64_t> stage_hashes;
};

std::uint64_t file_digest(const std::filesystem::path& path);

/// ground both sides -> train both spaces -> seeded alignment (self-learning
/// unless disabled) -> evaluation on held-out gold pairs. Errors are rethrown
/// with the stage name prepended. When the data directory holds
/// seed_entities.tsv and test.tsv those splits are used; otherwise the gold
/// alignment is split by seed_frac with the run seed.
PipelineResult run_pipeline(const PipelineConfig& cfg, const RunOptions& options);

struct AblationVariant {
  std::string name;
  PipelineConfig config;
  bool reuses_embeddings;  // alignment-only change: embeddings come from "full"
};

// Full model plus the single-component ablations and the seed-lexicon run.
std::vector<AblationVariant> ablation_grid(const PipelineConfig& base);

struct AblationRow {
  std::string name;
  EvalReport report;
};

// Runs `variants` in work_dir/<name>; variants that only change alignment
// copy the grounded corpora and embeddings of the "full" variant.
std::vector<AblationRow> run_ablation(const std::vector<AblationVariant>& variants,
                                      const RunOptions& options);

void print_ablation_table(std::ostream& out, const std::vector<AblationRow>& rows, Index p);

}  // namespace kgalign

#endif  // KGALIGN_PIPELINE_HPP
