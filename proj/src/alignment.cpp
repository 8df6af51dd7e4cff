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

#include "kgalign/alignment.hpp"

#include <charconv>
#include <fstream>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

#include "kgalign/grounding.hpp"

namespace kgalign {

Metric parse_metric(std::string_view name) {
  if (name == "csls") return Metric::kCsls;
  if (name == "l2") return Metric::kL2;
  throw InputError("unknown metric: " + std::string(name));
}

std::string_view metric_name(Metric m) { return m == Metric::kCsls ? "csls" : "l2"; }

void NeighborQuery::validate() const {
  if (csls_k < 1) throw InputError("csls_k must be >= 1");
}

AlignmentSpace AlignmentSpace::from_table(const EmbeddingTable& table) {
  AlignmentSpace space;
  std::vector<Index> ent_rows, lex_rows;
  for (std::size_t i = 0; i < table.tokens.size(); ++i) {
    const auto& tok = table.tokens[i];
    if (tok.starts_with(kEntityMarker)) {
      const auto before = space.entities.size();
      space.entities.add(tok.substr(kEntityMarker.size()));
      if (space.entities.size() == before) throw InputError("embedding file: duplicate token " + tok);
      ent_rows.push_back(static_cast<Index>(i));
    } else {
      const auto before = space.lexemes.size();
      space.lexemes.add(tok);
      if (space.lexemes.size() == before) throw InputError("embedding file: duplicate token " + tok);
      lex_rows.push_back(static_cast<Index>(i));
    }
  }
  space.entity_vectors = normalize_rows(table.vectors(ent_rows, Eigen::all));
  space.lexeme_vectors = normalize_rows(table.vectors(lex_rows, Eigen::all));
  return space;
}

AlignmentSpace AlignmentSpace::load(const std::filesystem::path& prefix) {
  auto space = from_table(read_table(vectors_path(prefix)));
  space.prefix = prefix;
  return space;
}

AlignmentState AlignmentState::seeded(std::shared_ptr<const AlignmentSpace> source,
                                      std::shared_ptr<const AlignmentSpace> target,
                                      std::vector<IndexPair> entity_seeds,
                                      std::vector<IndexPair> lexeme_seeds) {
  if (source->dim() != target->dim()) throw InputError("source and target dimensions differ");
  AlignmentState state;
  state.source = std::move(source);
  state.target = std::move(target);
  state.entity_pairs = std::move(entity_seeds);
  state.lexeme_pairs = std::move(lexeme_seeds);
  for (auto [s, t] : state.entity_pairs) {
    if (s < 0 || s >= state.source->entities.size() || t < 0 || t >= state.target->entities.size()) {
      throw InputError("entity seed index out of range");
    }
  }
  for (auto [s, t] : state.lexeme_pairs) {
    if (s < 0 || s >= state.source->lexemes.size() || t < 0 || t >= state.target->lexemes.size()) {
      throw InputError("lexeme seed index out of range");
    }
  }
  if (!state.entity_pairs_one_to_one()) throw InputError("entity seeds are not 1-to-1");
  std::sort(state.lexeme_pairs.begin(), state.lexeme_pairs.end());
  state.lexeme_pairs.erase(std::unique(state.lexeme_pairs.begin(), state.lexeme_pairs.end()),
                           state.lexeme_pairs.end());
  state.transform = MatrixXr::Identity(state.source->dim(), state.source->dim());
  return state;
}

bool AlignmentState::entity_pairs_one_to_one() const {
  std::set<Index> s, t;
  for (auto [a, b] : entity_pairs) {
    if (!s.insert(a).second || !t.insert(b).second) return false;
  }
  return true;
}

void solve_transform(AlignmentState& state) {
  const Index n = static_cast<Index>(state.entity_pairs.size() + state.lexeme_pairs.size());
  if (n == 0) throw InputError("alignment needs at least one seed pair");
  const Index k = state.source->dim();
  MatrixXr x(n, k), y(n, k);
  Index row = 0;
  for (auto [s, t] : state.entity_pairs) {
    x.row(row) = state.source->entity_vectors.row(s);
    y.row(row++) = state.target->entity_vectors.row(t);
  }
  for (auto [s, t] : state.lexeme_pairs) {
    x.row(row) = state.source->lexeme_vectors.row(s);
    y.row(row++) = state.target->lexeme_vectors.row(t);
  }
  auto sol = procrustes_solve(x, y);
  state.transform = std::move(sol.map);
  state.rank_deficient = state.rank_deficient || sol.rank_deficient;
}

namespace {

// Mapped sources as rows: (M x)ᵀ = xᵀ Mᵀ.
MatrixXr map_rows(const MatrixXr& rows, const MatrixXr& transform) {
  return rows * transform.transpose();
}

// Per-column offset c(j) such that argmax_j [2 a·b_j − c(j)] is the nearest
// neighbor under the metric. CSLS drops the query's own penalty (constant per
// row); L2 uses −‖a − b‖² = 2 a·b − ‖b‖² − ‖a‖².
VectorXr metric_offset(Metric metric, const MatrixXr& cloud, const VectorXr& penalty) {
  if (metric == Metric::kCsls) return penalty;
  return cloud.rowwise().squaredNorm();
}

// For every row of `a`, the best row of `b` by 2 a·b − offset_b.
std::vector<Index> best_rows(const MatrixXr& a, const MatrixXr& b, const VectorXr& offset_b) {
  std::vector<Index> best(static_cast<std::size_t>(a.rows()), -1);
  if (b.rows() == 0) return best;
  constexpr Index kBlock = 256;
  for (Index start = 0; start < a.rows(); start += kBlock) {
    const Index len = std::min(kBlock, a.rows() - start);
    MatrixXr scores = 2.0 * (a.middleRows(start, len) * b.transpose());
    scores.rowwise() -= offset_b.transpose();
    for (Index i = 0; i < len; ++i) {
      Index arg = 0;
      double top = scores(i, 0);
      for (Index j = 1; j < scores.cols(); ++j) {
        if (scores(i, j) > top) {
          top = scores(i, j);
          arg = j;
        }
      }
      best[static_cast<std::size_t>(start + i)] = arg;
    }
  }
  return best;
}

// Mutual nearest neighbors between the selected source and target rows.
// `src_pen` / `tgt_pen` are CSLS penalties indexed like the full clouds.
std::vector<IndexPair> mutual_nn(const MatrixXr& mapped, const MatrixXr& targets,
                                 const std::vector<Index>& src_sel,
                                 const std::vector<Index>& tgt_sel, const VectorXr& src_pen,
                                 const VectorXr& tgt_pen, Metric metric) {
  if (src_sel.empty() || tgt_sel.empty()) return {};
  const MatrixXr a = mapped(src_sel, Eigen::all);
  const MatrixXr b = targets(tgt_sel, Eigen::all);
  const VectorXr pa = metric == Metric::kCsls ? VectorXr(src_pen(src_sel)) : VectorXr();
  const VectorXr pb = metric == Metric::kCsls ? VectorXr(tgt_pen(tgt_sel)) : VectorXr();
  const auto fwd = best_rows(a, b, metric_offset(metric, b, pb));
  const auto bwd = best_rows(b, a, metric_offset(metric, a, pa));
  std::vector<IndexPair> out;
  for (std::size_t i = 0; i < fwd.size(); ++i) {
    const Index j = fwd[i];
    if (bwd[static_cast<std::size_t>(j)] == static_cast<Index>(i)) {
      out.emplace_back(src_sel[i], tgt_sel[static_cast<std::size_t>(j)]);
    }
  }
  return out;
}

std::vector<Index> lexeme_candidates(const AlignmentSpace& space, Index top_f) {
  std::vector<Index> out;
  for (Index i = 0; i < space.lexemes.size() && static_cast<Index>(out.size()) < top_f; ++i) {
    if (space.lexemes.at(i) == kRareToken) continue;
    if (space.lexeme_vectors.row(i).squaredNorm() == 0) continue;
    out.push_back(i);
  }
  return out;
}

}  // namespace

Proposals propose_pairs(const AlignmentState& state, const NeighborQuery& q,
                        const SelfLearnOptions& options) {
  q.validate();
  Proposals out;
  const auto& src = *state.source;
  const auto& tgt = *state.target;

  {
    const MatrixXr mapped = map_rows(src.entity_vectors, state.transform);
    CslsContext<double> ctx;
    if (q.metric == Metric::kCsls) ctx = csls_context(mapped, tgt.entity_vectors, q.csls_k);
    std::vector<char> src_used(static_cast<std::size_t>(src.entities.size()), 0);
    std::vector<char> tgt_used(static_cast<std::size_t>(tgt.entities.size()), 0);
    for (auto [s, t] : state.entity_pairs) {
      src_used[static_cast<std::size_t>(s)] = 1;
      tgt_used[static_cast<std::size_t>(t)] = 1;
    }
    std::vector<Index> src_sel, tgt_sel;
    for (Index i = 0; i < src.entities.size(); ++i) {
      if (!src_used[static_cast<std::size_t>(i)]) src_sel.push_back(i);
    }
    for (Index j = 0; j < tgt.entities.size(); ++j) {
      if (!tgt_used[static_cast<std::size_t>(j)]) tgt_sel.push_back(j);
    }
    out.entities = mutual_nn(mapped, tgt.entity_vectors, src_sel, tgt_sel, ctx.source_penalty,
                             ctx.target_penalty, q.metric);
  }

  if (options.propose_lexemes) {
    const auto src_sel = lexeme_candidates(src, options.lexeme_top_f);
    const auto tgt_sel = lexeme_candidates(tgt, options.lexeme_top_f);
    if (!src_sel.empty() && !tgt_sel.empty()) {
      // Penalties over the candidate lexeme clouds, scattered to full indexing.
      const MatrixXr mapped = map_rows(src.lexeme_vectors, state.transform);
      VectorXr src_pen = VectorXr::Zero(src.lexemes.size());
      VectorXr tgt_pen = VectorXr::Zero(tgt.lexemes.size());
      if (q.metric == Metric::kCsls) {
        const MatrixXr a = mapped(src_sel, Eigen::all);
        const MatrixXr b = tgt.lexeme_vectors(tgt_sel, Eigen::all);
        auto ctx = csls_context(a, b, q.csls_k);
        src_pen(src_sel) = ctx.source_penalty;
        tgt_pen(tgt_sel) = ctx.target_penalty;
      }
      const std::set<IndexPair> existing(state.lexeme_pairs.begin(), state.lexeme_pairs.end());
      for (const auto& p : mutual_nn(mapped, tgt.lexeme_vectors, src_sel, tgt_sel, src_pen,
                                     tgt_pen, q.metric)) {
        if (!existing.contains(p)) out.lexemes.push_back(p);
      }
    }
  }
  return out;
}

AlignmentState self_learn(AlignmentState state, const NeighborQuery& q,
                          const SelfLearnOptions& options) {
  if (state.entity_pairs.empty()) throw InputError("self-learning needs a non-empty entity seed set");
  if (!(options.stop_fraction > 0 && options.stop_fraction <= 1)) {
    throw InputError("stop fraction must be in (0, 1]");
  }
  if (options.max_iterations < 1) throw InputError("max iterations must be >= 1");
  const double threshold =
      options.stop_fraction * static_cast<double>(state.source->entities.size());
  for (Index it = 0; it < options.max_iterations; ++it) {
    solve_transform(state);
    ++state.iterations;
    auto proposals = propose_pairs(state, q, options);
    state.entity_pairs.insert(state.entity_pairs.end(), proposals.entities.begin(),
                              proposals.entities.end());
    state.lexeme_pairs.insert(state.lexeme_pairs.end(), proposals.lexemes.begin(),
                              proposals.lexemes.end());
    std::sort(state.lexeme_pairs.begin(), state.lexeme_pairs.end());
    state.entity_proposals.push_back(static_cast<Index>(proposals.entities.size()));
    state.lexeme_proposals.push_back(static_cast<Index>(proposals.lexemes.size()));
    if (static_cast<double>(proposals.entities.size()) < threshold) break;
  }
  return state;
}

EntityRanker::EntityRanker(const AlignmentState& state, const NeighborQuery& q)
    : metric_(q.metric),
      mapped_(map_rows(state.source->entity_vectors, state.transform)),
      targets_(state.target->entity_vectors) {
  q.validate();
  if (metric_ == Metric::kCsls) ctx_ = csls_context(mapped_, targets_, q.csls_k);
}

double EntityRanker::score(Index source, Index target) const {
  if (metric_ == Metric::kL2) return -(mapped_.row(source) - targets_.row(target)).norm();
  return 2.0 * mapped_.row(source).dot(targets_.row(target)) - ctx_.source_penalty(source) -
         ctx_.target_penalty(target);
}

std::vector<EntityRanker::Ranked> EntityRanker::rank(Index source,
                                                     const std::vector<Index>& candidates) const {
  std::vector<Ranked> out;
  out.reserve(candidates.size());
  for (Index c : candidates) out.push_back({c, score(source, c)});
  std::sort(out.begin(), out.end(), [](const Ranked& a, const Ranked& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.target < b.target;
  });
  return out;
}

Index EntityRanker::rank_of(Index source, Index gold, const std::vector<Index>& candidates) const {
  const double g = score(source, gold);
  Index rank = 1;
  bool present = false;
  for (Index c : candidates) {
    if (c == gold) {
      present = true;
      continue;
    }
    const double s = score(source, c);
    if (s > g || (s == g && c < gold)) ++rank;
  }
  if (!present) throw InputError("gold target missing from candidate set");
  return rank;
}

std::vector<EntityRanker::Ranked> infer(const std::string& source_entity,
                                        const AlignmentState& state, const NeighborQuery& q,
                                        const std::vector<Index>& candidates) {
  auto idx = state.source->entities.find(source_entity);
  if (!idx) throw InputError("unknown source entity: " + source_entity);
  return EntityRanker(state, q).rank(*idx, candidates);
}

std::vector<std::pair<std::string, std::string>> read_pairs(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open pairs file: " + path.string());
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos) {
      throw InputError(path.string() + " line " + std::to_string(line_no) +
                       ": expected 2 tab-separated fields");
    }
    out.emplace_back(line.substr(0, tab), line.substr(tab + 1));
  }
  return out;
}

std::vector<IndexPair> resolve_pairs(const std::vector<std::pair<std::string, std::string>>& pairs,
                                     const Vocabulary& source, const Vocabulary& target,
                                     const std::string& what) {
  std::vector<IndexPair> out;
  out.reserve(pairs.size());
  for (const auto& [s, t] : pairs) {
    auto si = source.find(s);
    auto ti = target.find(t);
    if (!si) throw InputError(what + ": unknown source id " + s);
    if (!ti) throw InputError(what + ": unknown target id " + t);
    out.emplace_back(*si, *ti);
  }
  return out;
}

namespace {

std::string format_double(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

std::filesystem::path relative_to_state(const std::filesystem::path& target,
                                        const std::filesystem::path& state_path) {
  auto base = std::filesystem::absolute(state_path).parent_path();
  return std::filesystem::absolute(target).lexically_normal().lexically_relative(base);
}

}  // namespace

void save_state(const std::filesystem::path& path, const AlignmentState& state) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write state file: " + path.string());
  const auto& src = *state.source;
  const auto& tgt = *state.target;
  out << "kgalign-state 1\n";
  out << "source\t" << relative_to_state(src.prefix, path).generic_string() << '\n';
  out << "target\t" << relative_to_state(tgt.prefix, path).generic_string() << '\n';
  out << "iterations\t" << state.iterations << '\n';
  out << "proposals";
  for (std::size_t i = 0; i < state.entity_proposals.size(); ++i) {
    out << '\t' << state.entity_proposals[i] << ',' << state.lexeme_proposals[i];
  }
  out << '\n';
  out << "transform\t" << state.transform.rows() << '\n';
  for (Index i = 0; i < state.transform.rows(); ++i) {
    for (Index j = 0; j < state.transform.cols(); ++j) {
      out << (j ? " " : "") << format_double(state.transform(i, j));
    }
    out << '\n';
  }
  out << "entity_pairs\t" << state.entity_pairs.size() << '\n';
  for (auto [s, t] : state.entity_pairs) {
    out << src.entities.at(s) << '\t' << tgt.entities.at(t) << '\n';
  }
  out << "lexeme_pairs\t" << state.lexeme_pairs.size() << '\n';
  for (auto [s, t] : state.lexeme_pairs) {
    out << src.lexemes.at(s) << '\t' << tgt.lexemes.at(t) << '\n';
  }
}

AlignmentState load_state(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open state file: " + path.string());
  auto fail = [&](const std::string& what) -> void {
    throw InputError("state file " + path.string() + ": " + what);
  };
  std::string line;
  auto next = [&]() -> std::string {
    if (!std::getline(in, line)) fail("unexpected end of file");
    return line;
  };
  auto field = [&](const std::string& key) -> std::string {
    next();
    if (!line.starts_with(key)) fail("expected '" + key + "'");
    return line.size() > key.size() ? line.substr(key.size() + 1) : std::string();
  };

  if (next() != "kgalign-state 1") fail("bad header");
  const auto base = std::filesystem::absolute(path).parent_path();
  auto src = std::make_shared<AlignmentSpace>(AlignmentSpace::load(base / field("source")));
  auto tgt = std::make_shared<AlignmentSpace>(AlignmentSpace::load(base / field("target")));
  AlignmentState state;
  state.source = src;
  state.target = tgt;
  state.iterations = std::stoll(field("iterations"));
  {
    std::istringstream ps(field("proposals"));
    std::string item;
    while (ps >> item) {
      auto comma = item.find(',');
      if (comma == std::string::npos) fail("bad proposals entry");
      state.entity_proposals.push_back(std::stoll(item.substr(0, comma)));
      state.lexeme_proposals.push_back(std::stoll(item.substr(comma + 1)));
    }
  }
  const Index k = std::stoll(field("transform"));
  if (k != src->dim()) fail("transform size does not match embeddings");
  state.transform.resize(k, k);
  for (Index i = 0; i < k; ++i) {
    std::istringstream rs(next());
    std::string tok;
    for (Index j = 0; j < k; ++j) {
      if (!(rs >> tok)) fail("short transform row");
      double v = 0;
      auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
      if (ec != std::errc{}) fail("bad transform value");
      state.transform(i, j) = v;
    }
  }
  auto read_block = [&](const std::string& key) {
    const auto n = std::stoull(field(key));
    std::vector<std::pair<std::string, std::string>> pairs;
    for (std::size_t i = 0; i < n; ++i) {
      next();
      auto tab = line.find('\t');
      if (tab == std::string::npos) fail("bad pair line");
      pairs.emplace_back(line.substr(0, tab), line.substr(tab + 1));
    }
    return pairs;
  };
  state.entity_pairs = resolve_pairs(read_block("entity_pairs"), src->entities, tgt->entities,
                                     "state entity pairs");
  state.lexeme_pairs = resolve_pairs(read_block("lexeme_pairs"), src->lexemes, tgt->lexemes,
                                     "state lexeme pairs");
  return state;
}

void write_predictions(std::ostream& out, const AlignmentState& state, const NeighborQuery& q,
                       Index p) {
  EntityRanker ranker(state, q);
  std::vector<Index> all(static_cast<std::size_t>(ranker.num_targets()));
  std::iota(all.begin(), all.end(), Index{0});
  const auto& src = state.source->entities;
  const auto& tgt = state.target->entities;
  for (Index s = 0; s < ranker.num_sources(); ++s) {
    const auto ranked = ranker.rank(s, all);
    const auto top = std::min<std::size_t>(static_cast<std::size_t>(p), ranked.size());
    out << src.at(s) << '\t' << (ranked.empty() ? "" : tgt.at(ranked[0].target)) << '\t';
    for (std::size_t i = 0; i < top; ++i) out << (i ? " " : "") << tgt.at(ranked[i].target);
    out << '\t';
    for (std::size_t i = 0; i < top; ++i) out << (i ? " " : "") << format_double(ranked[i].score);
    out << '\n';
  }
}

}  // namespace kgalign
