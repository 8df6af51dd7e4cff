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

#ifndef KGALIGN_EMBEDDING_HPP
#define KGALIGN_EMBEDDING_HPP

#include <filesystem>
#include <functional>
#include <random>
#include <utility>
#include <vector>

#include "kgalign/common.hpp"
#include "kgalign/gcn.hpp"
#include "kgalign/grounding.hpp"
#include "kgalign/kg.hpp"

namespace kgalign {

using Rng = std::mt19937_64;

struct OptimizerConfig {
  Index dim = 300;
  Index gcn_layers = 2;
  Activation activation = Activation::kIdentity;
  Index neg_samples = 5;
  Index context_radius = 5;  // per side
  double bias_b = 2.0;
  Index batch_size = 512;       // triples per KG step
  Index text_batch_size = 512;  // context pairs per text step
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  Index epochs = 300;

  bool gcn_enabled = true;
  bool use_kg = true;
  bool use_text = true;
  bool unigram_negatives = false;  // unigram^0.75 instead of uniform

  // Throws InputError when a hyperparameter is out of range.
  void validate() const;

  // k = 32, KG batch 64, lr 0.01; everything else at the defaults above.
  static OptimizerConfig desk_scale();
};

// Trainable tables of one language. Rows of `lexemes` follow the corpus
// lexicon; entity tokens of the corpus share the entity rows.
struct EmbeddingSpace {
  MatrixXr base_entities;  // E^(0)
  MatrixXr relations;
  MatrixXr lexemes;
  std::vector<MatrixXr> gcn_weights;  // M^(0..n-1)
  MatrixXr entities;                  // materialized E = E^(n)
  Activation activation = Activation::kIdentity;
  bool gcn_enabled = true;

  Index dim() const { return base_entities.cols(); }
  bool all_finite() const;

  // Recomputes `entities` from the base table (through the GCN if enabled).
  void materialize(const GraphStructure& graph);
  MatrixXr entity_output(const GraphStructure& graph) const;
};

// Xavier-uniform initialization of every table.
EmbeddingSpace init_space(Index num_entities, Index num_relations, Index num_lexemes,
                          const OptimizerConfig& cfg, Rng& rng);

template <typename DH, typename DR, typename DT>
typename DH::Scalar triple_score(const Eigen::MatrixBase<DH>& h, const Eigen::MatrixBase<DR>& r,
                                 const Eigen::MatrixBase<DT>& t) {
  return (h + r - t).norm();
}

struct KgBatch {
  std::vector<Triple> positives;
  std::vector<std::vector<Triple>> negatives;  // one list per positive
};

using TokenPair = std::pair<Token, Token>;

struct TextBatch {
  std::vector<TokenPair> pairs;               // (center, context)
  std::vector<std::vector<Token>> negatives;  // one list per pair
};

struct Gradients {
  MatrixXr base_entities;
  MatrixXr relations;
  MatrixXr lexemes;
  std::vector<MatrixXr> gcn_weights;

  static Gradients zeros_like(const EmbeddingSpace& space);
};

struct LossGradient {
  double value = 0;
  Gradients grad;
};

// Sampled-softmax translational loss over a KG batch, averaged per positive.
// Entity vectors come from the GCN output when the space has it enabled.
LossGradient kg_loss(const KgBatch& batch, const EmbeddingSpace& space, const GraphStructure& graph,
                     double bias);

// Skip-gram loss with negative L2 distance as the logit, averaged per pair.
LossGradient text_loss(const TextBatch& batch, const EmbeddingSpace& space,
                       const GraphStructure& graph);

// Bernoulli corruption: the head is replaced with probability
// tph / (tph + hpt), the tail otherwise. Corruptions that land on an observed
// triple are redrawn. Throws InputError when the KG has fewer than 2 entities.
std::vector<Triple> negative_triples(const Triple& positive, const RelationStats& stats,
                                     const KnowledgeGraph& kg, Index count, Rng& rng);

// All (x_i, x_j) with 0 < |i - j| <= radius inside each document.
std::vector<TokenPair> context_pairs(const GroundedCorpus& corpus, Index radius);

// Draws negative tokens from E_L ∪ W_L, uniformly or by unigram^0.75.
class TokenSampler {
 public:
  TokenSampler(const GroundedCorpus& corpus, Index num_entities, bool unigram);
  Token operator()(Rng& rng);

 private:
  Index num_entities_;
  Index num_lexemes_;
  bool unigram_;
  std::discrete_distribution<Index> unigram_dist_;
};

struct TrainingLog {
  std::vector<double> kg_loss;    // mean per epoch
  std::vector<double> text_loss;  // mean per epoch
  Index kg_steps = 0;
  Index text_steps = 0;

  std::vector<double> total_loss() const;
};

enum class StepKind { kKg, kText };
using StepObserver = std::function<void(StepKind, const EmbeddingSpace&)>;

struct TrainResult {
  EmbeddingSpace space;
  TrainingLog log;
};

/// Trains one language. Each epoch runs ceil(|T| / batch_size) iterations;
/// each iteration takes one KG step on the next slice of shuffled triples and
/// one text step on text_batch_size uniformly drawn context pairs. Deterministic
/// for a fixed seed. Throws NumericalError on a non-finite loss or parameter.
TrainResult train(const KnowledgeGraph& kg, const GroundedCorpus& corpus,
                  const OptimizerConfig& cfg, std::uint64_t seed,
                  const StepObserver& observer = {});

// Writes `<prefix>.vec` (entities as @ent:<id>, then lexemes in lexicon
// order) and `<prefix>.rel.vec`.
void save_embeddings(const std::filesystem::path& prefix, const EmbeddingSpace& space,
                     const KnowledgeGraph& kg, const GroundedCorpus& corpus);

struct EmbeddingTable {
  std::vector<std::string> tokens;
  MatrixXr vectors;
};

void write_table(std::ostream& out, const EmbeddingTable& table);
EmbeddingTable read_table(std::istream& in);
EmbeddingTable read_table(const std::filesystem::path& path);

std::filesystem::path vectors_path(const std::filesystem::path& prefix);
std::filesystem::path relations_path(const std::filesystem::path& prefix);

}  // namespace kgalign

#endif  // KGALIGN_EMBEDDING_HPP
