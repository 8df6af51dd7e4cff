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

#ifndef KGALIGN_ALIGNMENT_HPP
#define KGALIGN_ALIGNMENT_HPP

#include <algorithm>
#include <filesystem>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/SVD>

#include "kgalign/common.hpp"
#include "kgalign/embedding.hpp"
#include "kgalign/kg.hpp"

namespace kgalign {

// Copy of `m` with every nonzero row scaled to unit L2 norm. Zero rows stay zero.
template <typename Derived>
Matrix<typename Derived::Scalar> normalize_rows(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  Matrix<Scalar> out = m;
  for (Index i = 0; i < out.rows(); ++i) {
    const Scalar n = out.row(i).norm();
    if (n > Scalar(0)) out.row(i) /= n;
  }
  return out;
}

template <typename Scalar>
struct ProcrustesSolution {
  Matrix<Scalar> map;  // M with M·x ≈ y
  bool rank_deficient = false;
};

/// Orthogonal M minimizing Σ‖M x_i − y_i‖² over unit-normalized pairs, where
/// x_i and y_i are the i-th rows of `sources` and `targets`. With
/// U S Vᵀ = svd(XᵀY) the minimizer is M = V Uᵀ. A rank-deficient XᵀY leaves
/// the minimizer ambiguous; any SVD branch is returned and the flag is set.
template <typename DX, typename DY>
ProcrustesSolution<typename DX::Scalar> procrustes_solve(const Eigen::MatrixBase<DX>& sources,
                                                         const Eigen::MatrixBase<DY>& targets) {
  using Scalar = typename DX::Scalar;
  if (sources.rows() < 1) throw InputError("procrustes: no pairs");
  if (sources.rows() != targets.rows() || sources.cols() != targets.cols()) {
    throw InputError("procrustes: source/target shape mismatch");
  }
  const Matrix<Scalar> x = normalize_rows(sources);
  const Matrix<Scalar> y = normalize_rows(targets);
  const Matrix<Scalar> cross = x.transpose() * y;
  Eigen::JacobiSVD<Matrix<Scalar>> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
  ProcrustesSolution<Scalar> out;
  out.map = svd.matrixV() * svd.matrixU().transpose();
  const auto& s = svd.singularValues();
  const Scalar tol = Scalar(1e-10) * std::max(Scalar(1), s.size() ? s(0) : Scalar(0));
  out.rank_deficient = s.size() == 0 || s(s.size() - 1) <= tol;
  return out;
}

enum class Metric { kCsls, kL2 };

Metric parse_metric(std::string_view name);
std::string_view metric_name(Metric m);

// Proposals always use the mutual 1-NN check.
struct NeighborQuery {
  Metric metric = Metric::kCsls;
  Index csls_k = 10;

  void validate() const;
};

/// Mean cosine of each row of `queries` to its `k` most similar rows of
/// `cloud` (k is capped at the cloud size). Rows are expected unit-norm.
template <typename DQ, typename DC>
Vector<typename DQ::Scalar> csls_penalty(const Eigen::MatrixBase<DQ>& queries,
                                         const Eigen::MatrixBase<DC>& cloud, Index k) {
  using Scalar = typename DQ::Scalar;
  Vector<Scalar> out = Vector<Scalar>::Zero(queries.rows());
  const Index kk = std::min<Index>(k, cloud.rows());
  if (kk < 1) return out;
  constexpr Index kBlock = 256;
  std::vector<Scalar> row;
  for (Index start = 0; start < queries.rows(); start += kBlock) {
    const Index len = std::min(kBlock, queries.rows() - start);
    const Matrix<Scalar> sims = queries.middleRows(start, len) * cloud.transpose();
    for (Index i = 0; i < len; ++i) {
      row.assign(sims.row(i).data(), sims.row(i).data() + sims.cols());
      std::nth_element(row.begin(), row.begin() + (kk - 1), row.end(), std::greater<>());
      Scalar sum = 0;
      for (Index j = 0; j < kk; ++j) sum += row[static_cast<std::size_t>(j)];
      out(start + i) = sum / static_cast<Scalar>(kk);
    }
  }
  return out;
}

template <typename Scalar>
struct CslsContext {
  Vector<Scalar> source_penalty;  // r_T(M x_i) over the target cloud
  Vector<Scalar> target_penalty;  // r_S(y_j) over the mapped-source cloud
};

template <typename DS, typename DT>
CslsContext<typename DS::Scalar> csls_context(const Eigen::MatrixBase<DS>& mapped_sources,
                                              const Eigen::MatrixBase<DT>& targets, Index k) {
  return {csls_penalty(mapped_sources, targets, k), csls_penalty(targets, mapped_sources, k)};
}

/// 2·cos(u, v) − r_T(u) − r_S(v). Throws InputError on a zero vector.
template <typename DU, typename DV>
typename DU::Scalar csls_score(const Eigen::MatrixBase<DU>& mapped_source,
                               const Eigen::MatrixBase<DV>& target,
                               typename DU::Scalar source_penalty,
                               typename DU::Scalar target_penalty) {
  using Scalar = typename DU::Scalar;
  const Scalar nu = mapped_source.norm();
  const Scalar nv = target.norm();
  if (nu == Scalar(0) || nv == Scalar(0)) throw InputError("csls: zero-norm vector");
  const Scalar cos = mapped_source.dot(target) / (nu * nv);
  return Scalar(2) * cos - source_penalty - target_penalty;
}

// Fixed, unit-normalized vectors of one language. Lexemes are in frequency
// order; the rare-token bucket is never a lexeme alignment candidate.
struct AlignmentSpace {
  Vocabulary entities;
  MatrixXr entity_vectors;
  Vocabulary lexemes;
  MatrixXr lexeme_vectors;
  std::filesystem::path prefix;  // where it was loaded from, if anywhere

  Index dim() const { return entity_vectors.cols(); }

  static AlignmentSpace from_table(const EmbeddingTable& table);
  static AlignmentSpace load(const std::filesystem::path& prefix);
};

using IndexPair = std::pair<Index, Index>;

struct AlignmentState {
  std::shared_ptr<const AlignmentSpace> source;
  std::shared_ptr<const AlignmentSpace> target;
  std::vector<IndexPair> entity_pairs;  // 1-to-1
  std::vector<IndexPair> lexeme_pairs;  // may be many-to-many
  MatrixXr transform;
  Index iterations = 0;
  std::vector<Index> entity_proposals;  // per iteration
  std::vector<Index> lexeme_proposals;
  bool rank_deficient = false;  // set if any solve hit an ambiguous minimizer

  // Throws InputError if a seed breaks the 1-to-1 entity constraint.
  static AlignmentState seeded(std::shared_ptr<const AlignmentSpace> source,
                               std::shared_ptr<const AlignmentSpace> target,
                               std::vector<IndexPair> entity_seeds,
                               std::vector<IndexPair> lexeme_seeds = {});

  bool entity_pairs_one_to_one() const;
};

// Solves M from the current entity and lexeme pairs (equal weights).
void solve_transform(AlignmentState& state);

struct Proposals {
  std::vector<IndexPair> entities;
  std::vector<IndexPair> lexemes;
};

struct SelfLearnOptions {
  double stop_fraction = 0.01;
  Index max_iterations = 50;
  Index lexeme_top_f = 10000;
  bool propose_lexemes = true;
};

/// Mutual 1-NN pairs under the query metric. Entities: nearest neighbors are
/// searched among items not yet in `state.entity_pairs` on either side.
/// Lexemes: among the top-F frequent lexemes, skipping pairs already present.
/// CSLS penalties are always computed over the full clouds of each type.
Proposals propose_pairs(const AlignmentState& state, const NeighborQuery& q,
                        const SelfLearnOptions& options = {});

/// Alternates Procrustes solves and mutual-NN proposals until an iteration
/// proposes fewer than stop_fraction·|E_source| entity pairs or the iteration
/// cap is reached. Throws InputError on an empty seed set.
AlignmentState self_learn(AlignmentState state, const NeighborQuery& q,
                          const SelfLearnOptions& options = {});

// Scores candidate target entities for mapped source entities. CSLS penalties
// are taken over all source and target entities, so scores do not depend on
// the candidate set.
class EntityRanker {
 public:
  EntityRanker(const AlignmentState& state, const NeighborQuery& q);

  double score(Index source, Index target) const;

  struct Ranked {
    Index target;
    double score;
  };
  // Candidates by descending score; ties by ascending target index.
  std::vector<Ranked> rank(Index source, const std::vector<Index>& candidates) const;
  // 1-based position `gold` would take in rank(source, candidates).
  Index rank_of(Index source, Index gold, const std::vector<Index>& candidates) const;

  Index num_sources() const { return mapped_.rows(); }
  Index num_targets() const { return targets_.rows(); }

 private:
  Metric metric_;
  MatrixXr mapped_;
  MatrixXr targets_;
  CslsContext<double> ctx_;
};

// Ranked candidate list for one source entity id. Throws InputError if the
// id is unknown.
std::vector<EntityRanker::Ranked> infer(const std::string& source_entity,
                                        const AlignmentState& state, const NeighborQuery& q,
                                        const std::vector<Index>& candidates);

std::vector<std::pair<std::string, std::string>> read_pairs(const std::filesystem::path& path);
std::vector<IndexPair> resolve_pairs(const std::vector<std::pair<std::string, std::string>>& pairs,
                                     const Vocabulary& source, const Vocabulary& target,
                                     const std::string& what);

// Text serialization; embedding prefixes are stored relative to the state
// file so that a work directory can be moved.
void save_state(const std::filesystem::path& path, const AlignmentState& state);
AlignmentState load_state(const std::filesystem::path& path);

// `source<TAB>top1<TAB>r1 .. rP<TAB>s1 .. sP` for every source entity,
// ranked over all target entities.
void write_predictions(std::ostream& out, const AlignmentState& state, const NeighborQuery& q,
                       Index p);

}  // namespace kgalign

#endif  // KGALIGN_ALIGNMENT_HPP
