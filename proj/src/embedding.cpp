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

#include "kgalign/embedding.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "kgalign/amsgrad.hpp"

namespace kgalign {

Activation parse_activation(std::string_view name) {
  if (name == "relu") return Activation::kRelu;
  if (name == "identity") return Activation::kIdentity;
  if (name == "tanh") return Activation::kTanh;
  throw InputError("unknown activation: " + std::string(name));
}

std::string_view activation_name(Activation a) {
  switch (a) {
    case Activation::kRelu: return "relu";
    case Activation::kIdentity: return "identity";
    case Activation::kTanh: return "tanh";
  }
  return "relu";
}

void OptimizerConfig::validate() const {
  auto fail = [](const std::string& what) { throw InputError("invalid config: " + what); };
  if (dim < 1) fail("dim must be >= 1");
  if (gcn_enabled && gcn_layers < 1) fail("gcn_layers must be >= 1 when the GCN is enabled");
  if (neg_samples < 1) fail("neg_samples must be >= 1");
  if (context_radius < 1) fail("context_radius must be >= 1");
  if (!(bias_b > 0)) fail("bias_b must be > 0");
  if (batch_size < 1) fail("batch_size must be >= 1");
  if (text_batch_size < 1) fail("text_batch_size must be >= 1");
  if (!(lr > 0)) fail("lr must be > 0");
  if (!(beta1 >= 0 && beta1 < 1)) fail("beta1 must be in [0, 1)");
  if (!(beta2 >= 0 && beta2 < 1)) fail("beta2 must be in [0, 1)");
  if (epochs < 0) fail("epochs must be >= 0");
  if (!use_kg && !use_text) fail("both the KG and the text loss are disabled");
}

OptimizerConfig OptimizerConfig::desk_scale() {
  OptimizerConfig cfg;
  cfg.dim = 32;
  cfg.batch_size = 64;
  cfg.lr = 0.01;
  return cfg;
}

bool EmbeddingSpace::all_finite() const {
  if (!base_entities.allFinite() || !relations.allFinite() || !lexemes.allFinite() ||
      !entities.allFinite()) {
    return false;
  }
  return std::all_of(gcn_weights.begin(), gcn_weights.end(),
                     [](const MatrixXr& m) { return m.allFinite(); });
}

MatrixXr EmbeddingSpace::entity_output(const GraphStructure& graph) const {
  if (!gcn_enabled) return base_entities;
  return gcn_forward<double>(graph.norm_adjacency, base_entities, gcn_weights, activation);
}

void EmbeddingSpace::materialize(const GraphStructure& graph) { entities = entity_output(graph); }

namespace {

MatrixXr xavier(Index rows, Index cols, Rng& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> dist(-a, a);
  MatrixXr m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) m(i, j) = dist(rng);
  }
  return m;
}

}  // namespace

EmbeddingSpace init_space(Index num_entities, Index num_relations, Index num_lexemes,
                          const OptimizerConfig& cfg, Rng& rng) {
  EmbeddingSpace space;
  space.activation = cfg.activation;
  space.gcn_enabled = cfg.gcn_enabled;
  space.base_entities = xavier(num_entities, cfg.dim, rng);
  space.relations = xavier(num_relations, cfg.dim, rng);
  space.lexemes = xavier(num_lexemes, cfg.dim, rng);
  if (cfg.gcn_enabled) {
    for (Index l = 0; l < cfg.gcn_layers; ++l) space.gcn_weights.push_back(xavier(cfg.dim, cfg.dim, rng));
  }
  space.entities = space.base_entities;
  return space;
}

Gradients Gradients::zeros_like(const EmbeddingSpace& space) {
  Gradients g;
  g.base_entities = MatrixXr::Zero(space.base_entities.rows(), space.base_entities.cols());
  g.relations = MatrixXr::Zero(space.relations.rows(), space.relations.cols());
  g.lexemes = MatrixXr::Zero(space.lexemes.rows(), space.lexemes.cols());
  for (const auto& m : space.gcn_weights) g.gcn_weights.push_back(MatrixXr::Zero(m.rows(), m.cols()));
  return g;
}

namespace {

// Entity vectors for a loss evaluation plus what is needed to push entity
// gradients back into the base table.
struct EntityView {
  GcnTape<double> tape;
  const MatrixXr* vectors = nullptr;
};

EntityView view_entities(const EmbeddingSpace& space, const GraphStructure& graph) {
  EntityView v;
  if (space.gcn_enabled) {
    v.tape = gcn_forward_tape<double>(graph.norm_adjacency, space.base_entities, space.gcn_weights,
                                      space.activation);
    v.vectors = &v.tape.output;
  } else {
    v.vectors = &space.base_entities;
  }
  return v;
}

void backprop_entities(const EmbeddingSpace& space, const GraphStructure& graph,
                       const EntityView& view, MatrixXr grad_entities, Gradients& grad) {
  if (!space.gcn_enabled) {
    grad.base_entities = std::move(grad_entities);
    return;
  }
  auto back = gcn_backward<double>(graph.norm_adjacency, space.gcn_weights, view.tape,
                                   space.activation, std::move(grad_entities));
  grad.base_entities = std::move(back.input);
  grad.gcn_weights = std::move(back.weights);
}

// Softmax over `logits`; returns -log p[0] and fills d(loss)/d(logit).
double softmax_xent(const std::vector<double>& logits, std::vector<double>& dlogit) {
  const double top = *std::max_element(logits.begin(), logits.end());
  double sum = 0;
  for (double s : logits) sum += std::exp(s - top);
  const double lse = top + std::log(sum);
  dlogit.resize(logits.size());
  for (std::size_t j = 0; j < logits.size(); ++j) dlogit[j] = std::exp(logits[j] - lse);
  dlogit[0] -= 1.0;
  return lse - logits[0];
}

}  // namespace

LossGradient kg_loss(const KgBatch& batch, const EmbeddingSpace& space, const GraphStructure& graph,
                     double bias) {
  LossGradient out{0.0, Gradients::zeros_like(space)};
  if (batch.positives.empty()) return out;
  const auto view = view_entities(space, graph);
  const MatrixXr& ent = *view.vectors;
  MatrixXr grad_ent = MatrixXr::Zero(ent.rows(), ent.cols());
  const double scale = 1.0 / static_cast<double>(batch.positives.size());

  std::vector<const Triple*> triples;
  std::vector<double> logits, dlogit;
  MatrixXr units;  // one unit difference vector per scored triple
  for (std::size_t i = 0; i < batch.positives.size(); ++i) {
    triples.assign(1, &batch.positives[i]);
    for (const auto& neg : batch.negatives.at(i)) triples.push_back(&neg);
    logits.clear();
    units.resize(static_cast<Index>(triples.size()), ent.cols());
    for (std::size_t j = 0; j < triples.size(); ++j) {
      const Triple* t = triples[j];
      auto u = units.row(static_cast<Index>(j));
      u = ent.row(t->head) + space.relations.row(t->relation) - ent.row(t->tail);
      const double f = u.norm();
      logits.push_back(bias - f);
      if (f > 0) {
        u /= f;
      } else {
        u.setZero();
      }
    }
    out.value += softmax_xent(logits, dlogit);
    for (std::size_t j = 0; j < triples.size(); ++j) {
      // d(loss)/d(f) = -d(loss)/d(logit)
      const double c = -dlogit[j] * scale;
      const Triple& t = *triples[j];
      const auto u = units.row(static_cast<Index>(j));
      grad_ent.row(t.head) += c * u;
      out.grad.relations.row(t.relation) += c * u;
      grad_ent.row(t.tail) -= c * u;
    }
  }
  out.value *= scale;
  backprop_entities(space, graph, view, std::move(grad_ent), out.grad);
  return out;
}

LossGradient text_loss(const TextBatch& batch, const EmbeddingSpace& space,
                       const GraphStructure& graph) {
  LossGradient out{0.0, Gradients::zeros_like(space)};
  if (batch.pairs.empty()) return out;
  const auto view = view_entities(space, graph);
  const MatrixXr& ent = *view.vectors;
  MatrixXr grad_ent = MatrixXr::Zero(ent.rows(), ent.cols());
  const double scale = 1.0 / static_cast<double>(batch.pairs.size());

  auto vec = [&](const Token& t) {
    return t.is_entity() ? ent.row(t.index) : space.lexemes.row(t.index);
  };
  auto accumulate = [&](const Token& t, const auto& g) {
    if (t.is_entity()) {
      grad_ent.row(t.index) += g;
    } else {
      out.grad.lexemes.row(t.index) += g;
    }
  };

  std::vector<const Token*> others;
  std::vector<double> logits, dlogit;
  MatrixXr units;
  RowVector<double> x;
  for (std::size_t i = 0; i < batch.pairs.size(); ++i) {
    const Token& center = batch.pairs[i].first;
    others.assign(1, &batch.pairs[i].second);
    for (const auto& neg : batch.negatives.at(i)) others.push_back(&neg);
    logits.clear();
    units.resize(static_cast<Index>(others.size()), ent.cols());
    x = vec(center);
    for (std::size_t j = 0; j < others.size(); ++j) {
      auto u = units.row(static_cast<Index>(j));
      u = x - vec(*others[j]);
      const double d = u.norm();
      logits.push_back(-d);
      if (d > 0) {
        u /= d;
      } else {
        u.setZero();
      }
    }
    out.value += softmax_xent(logits, dlogit);
    for (std::size_t j = 0; j < others.size(); ++j) {
      // d(loss)/d(d) = -d(loss)/d(logit); d(d)/dx = unit, d(d)/dy = -unit
      const double c = -dlogit[j] * scale;
      const auto u = units.row(static_cast<Index>(j));
      accumulate(center, c * u);
      accumulate(*others[j], -c * u);
    }
  }
  out.value *= scale;
  backprop_entities(space, graph, view, std::move(grad_ent), out.grad);
  return out;
}

std::vector<Triple> negative_triples(const Triple& positive, const RelationStats& stats,
                                     const KnowledgeGraph& kg, Index count, Rng& rng) {
  const Index n = kg.num_entities();
  if (n < 2) throw InputError("negative sampling needs at least 2 entities");
  const double p_head = stats.head_corruption_probability(positive.relation);
  std::bernoulli_distribution corrupt_head(p_head);
  std::uniform_int_distribution<Index> pick(0, n - 1);
  constexpr int kMaxAttempts = 1000;

  std::vector<Triple> out;
  out.reserve(static_cast<std::size_t>(count));
  for (Index s = 0; s < count; ++s) {
    const bool head = corrupt_head(rng);
    bool found = false;
    for (int attempt = 0; attempt < kMaxAttempts && !found; ++attempt) {
      Triple t = positive;
      (head ? t.head : t.tail) = pick(rng);
      if (!kg.contains(t)) {
        out.push_back(t);
        found = true;
      }
    }
    if (!found) {
      throw InputError("cannot corrupt triple: every replacement is an observed triple");
    }
  }
  return out;
}

std::vector<TokenPair> context_pairs(const GroundedCorpus& corpus, Index radius) {
  std::vector<TokenPair> pairs;
  for (const auto& doc : corpus.documents) {
    const auto len = static_cast<Index>(doc.size());
    for (Index i = 0; i < len; ++i) {
      const Index lo = std::max<Index>(0, i - radius);
      const Index hi = std::min<Index>(len - 1, i + radius);
      for (Index j = lo; j <= hi; ++j) {
        if (j != i) pairs.emplace_back(doc[static_cast<std::size_t>(i)], doc[static_cast<std::size_t>(j)]);
      }
    }
  }
  return pairs;
}

TokenSampler::TokenSampler(const GroundedCorpus& corpus, Index num_entities, bool unigram)
    : num_entities_(num_entities), num_lexemes_(corpus.lexicon.words.size()), unigram_(unigram) {
  if (num_entities_ + num_lexemes_ < 1) throw InputError("no tokens to sample negatives from");
  if (!unigram_) return;
  std::vector<double> weights(static_cast<std::size_t>(num_entities_ + num_lexemes_), 0.0);
  for (const auto& doc : corpus.documents) {
    for (const auto& t : doc) {
      if (t.is_entity()) weights[static_cast<std::size_t>(t.index)] += 1.0;
    }
  }
  for (Index w = 0; w < num_lexemes_; ++w) {
    weights[static_cast<std::size_t>(num_entities_ + w)] =
        static_cast<double>(corpus.lexicon.frequencies[static_cast<std::size_t>(w)]);
  }
  for (auto& w : weights) w = std::pow(w, 0.75);
  if (std::accumulate(weights.begin(), weights.end(), 0.0) <= 0) {
    unigram_ = false;
    return;
  }
  unigram_dist_ = std::discrete_distribution<Index>(weights.begin(), weights.end());
}

Token TokenSampler::operator()(Rng& rng) {
  Index i = unigram_ ? unigram_dist_(rng)
                     : std::uniform_int_distribution<Index>(0, num_entities_ + num_lexemes_ - 1)(rng);
  if (i < num_entities_) return {Token::Kind::kEntity, i};
  return {Token::Kind::kLexeme, i - num_entities_};
}

std::vector<double> TrainingLog::total_loss() const {
  std::vector<double> out(std::max(kg_loss.size(), text_loss.size()), 0.0);
  for (std::size_t i = 0; i < kg_loss.size(); ++i) out[i] += kg_loss[i];
  for (std::size_t i = 0; i < text_loss.size(); ++i) out[i] += text_loss[i];
  return out;
}

namespace {

class Trainer {
 public:
  Trainer(EmbeddingSpace& space, const OptimizerConfig& cfg)
      : space_(space), opt_(cfg.lr, cfg.beta1, cfg.beta2) {
    base_ = opt_.add_slot(space.base_entities.rows(), space.base_entities.cols());
    rel_ = opt_.add_slot(space.relations.rows(), space.relations.cols());
    lex_ = opt_.add_slot(space.lexemes.rows(), space.lexemes.cols());
    for (const auto& m : space.gcn_weights) gcn_.push_back(opt_.add_slot(m.rows(), m.cols()));
  }

  void apply(const Gradients& g) {
    opt_.begin_step();
    opt_.update(base_, space_.base_entities, g.base_entities);
    opt_.update(rel_, space_.relations, g.relations);
    opt_.update(lex_, space_.lexemes, g.lexemes);
    for (std::size_t l = 0; l < gcn_.size(); ++l) {
      opt_.update(gcn_[l], space_.gcn_weights[l], g.gcn_weights[l]);
    }
    if (!space_.gcn_enabled) space_.entities = space_.base_entities;
  }

 private:
  EmbeddingSpace& space_;
  AmsGrad opt_;
  std::size_t base_, rel_, lex_;
  std::vector<std::size_t> gcn_;
};

void check_finite(double loss, const EmbeddingSpace& space, const char* what, Index epoch,
                  Index iteration) {
  const bool params_ok = space.base_entities.allFinite() && space.relations.allFinite() &&
                         space.lexemes.allFinite() &&
                         std::all_of(space.gcn_weights.begin(), space.gcn_weights.end(),
                                     [](const MatrixXr& m) { return m.allFinite(); });
  if (!std::isfinite(loss) || !params_ok) {
    std::ostringstream msg;
    msg << "non-finite " << (std::isfinite(loss) ? "parameters" : "loss") << " after " << what
        << " step (epoch " << epoch << ", iteration " << iteration << ", loss " << loss << ")";
    throw NumericalError(msg.str());
  }
}

}  // namespace

TrainResult train(const KnowledgeGraph& kg, const GroundedCorpus& corpus,
                  const OptimizerConfig& cfg, std::uint64_t seed, const StepObserver& observer) {
  cfg.validate();
  Rng rng(seed);
  TrainResult result;
  EmbeddingSpace& space = result.space;
  space = init_space(kg.num_entities(), kg.num_relations(), corpus.lexicon.words.size(), cfg, rng);
  const auto graph = build_graph_structure(kg);
  space.materialize(graph);
  if (cfg.epochs == 0) return result;

  const auto stats = relation_stats(kg);
  const auto pairs = cfg.use_text ? context_pairs(corpus, cfg.context_radius)
                                  : std::vector<TokenPair>{};
  TokenSampler sampler(corpus, kg.num_entities(), cfg.unigram_negatives);
  Trainer trainer(space, cfg);

  const auto& triples = kg.triples();
  const auto batch = static_cast<std::size_t>(cfg.batch_size);
  const std::size_t iterations = (triples.size() + batch - 1) / batch;
  std::vector<std::size_t> order(triples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::uniform_int_distribution<std::size_t> pick_pair(0, pairs.empty() ? 0 : pairs.size() - 1);

  KgBatch kg_batch;
  TextBatch text_batch;
  for (Index epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double kg_sum = 0, text_sum = 0;
    for (std::size_t it = 0; it < iterations; ++it) {
      if (cfg.use_kg) {
        kg_batch.positives.clear();
        kg_batch.negatives.clear();
        for (std::size_t i = it * batch; i < std::min(triples.size(), (it + 1) * batch); ++i) {
          const Triple& t = triples[order[i]];
          kg_batch.positives.push_back(t);
          kg_batch.negatives.push_back(negative_triples(t, stats, kg, cfg.neg_samples, rng));
        }
        auto lg = kg_loss(kg_batch, space, graph, cfg.bias_b);
        trainer.apply(lg.grad);
        check_finite(lg.value, space, "KG", epoch, static_cast<Index>(it));
        kg_sum += lg.value;
        ++result.log.kg_steps;
        if (observer) observer(StepKind::kKg, space);
      }
      if (cfg.use_text && !pairs.empty()) {
        text_batch.pairs.clear();
        text_batch.negatives.clear();
        for (Index i = 0; i < cfg.text_batch_size; ++i) {
          text_batch.pairs.push_back(pairs[pick_pair(rng)]);
          auto& negs = text_batch.negatives.emplace_back();
          for (Index s = 0; s < cfg.neg_samples; ++s) negs.push_back(sampler(rng));
        }
        auto lg = text_loss(text_batch, space, graph);
        trainer.apply(lg.grad);
        check_finite(lg.value, space, "text", epoch, static_cast<Index>(it));
        text_sum += lg.value;
        ++result.log.text_steps;
        if (observer) observer(StepKind::kText, space);
      }
    }
    result.log.kg_loss.push_back(cfg.use_kg ? kg_sum / static_cast<double>(iterations) : 0.0);
    result.log.text_loss.push_back(
        cfg.use_text && !pairs.empty() ? text_sum / static_cast<double>(iterations) : 0.0);
  }
  space.materialize(graph);
  if (!space.all_finite()) throw NumericalError("non-finite entity output after training");
  return result;
}

namespace {

void append_double(std::string& out, double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, end);
}

}  // namespace

void write_table(std::ostream& out, const EmbeddingTable& table) {
  out << table.vectors.rows() << ' ' << table.vectors.cols() << '\n';
  std::string line;
  for (Index i = 0; i < table.vectors.rows(); ++i) {
    line = table.tokens[static_cast<std::size_t>(i)];
    for (Index j = 0; j < table.vectors.cols(); ++j) {
      line += ' ';
      append_double(line, table.vectors(i, j));
    }
    line += '\n';
    out << line;
  }
}

EmbeddingTable read_table(std::istream& in) {
  Index count = 0, dim = 0;
  std::string header;
  if (!std::getline(in, header)) throw InputError("embedding file is empty");
  {
    std::istringstream hs(header);
    if (!(hs >> count >> dim) || count < 0 || dim < 1) {
      throw InputError("embedding file: bad header '" + header + "'");
    }
  }
  EmbeddingTable table;
  table.tokens.reserve(static_cast<std::size_t>(count));
  table.vectors.resize(count, dim);
  std::string line;
  for (Index i = 0; i < count; ++i) {
    if (!std::getline(in, line)) {
      throw InputError("embedding file: expected " + std::to_string(count) + " rows, got " +
                       std::to_string(i));
    }
    std::string_view rest(line);
    auto sp = rest.find(' ');
    if (sp == std::string_view::npos || sp == 0) {
      throw InputError("embedding file: malformed row " + std::to_string(i + 2));
    }
    table.tokens.emplace_back(rest.substr(0, sp));
    const char* p = line.data() + sp;
    const char* end = line.data() + line.size();
    for (Index j = 0; j < dim; ++j) {
      while (p < end && *p == ' ') ++p;
      double v = 0;
      auto [next, ec] = std::from_chars(p, end, v);
      if (ec != std::errc{}) {
        throw InputError("embedding file: bad number on row " + std::to_string(i + 2));
      }
      table.vectors(i, j) = v;
      p = next;
    }
    while (p < end && *p == ' ') ++p;
    if (p != end) throw InputError("embedding file: extra values on row " + std::to_string(i + 2));
  }
  return table;
}

EmbeddingTable read_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open embedding file: " + path.string());
  return read_table(in);
}

std::filesystem::path vectors_path(const std::filesystem::path& prefix) {
  return prefix.string() + ".vec";
}

std::filesystem::path relations_path(const std::filesystem::path& prefix) {
  return prefix.string() + ".rel.vec";
}

void save_embeddings(const std::filesystem::path& prefix, const EmbeddingSpace& space,
                     const KnowledgeGraph& kg, const GroundedCorpus& corpus) {
  EmbeddingTable tokens;
  const Index ne = space.entities.rows();
  const Index nl = space.lexemes.rows();
  tokens.vectors.resize(ne + nl, space.dim());
  for (Index i = 0; i < ne; ++i) tokens.tokens.push_back(std::string(kEntityMarker) + kg.entities().at(i));
  for (Index i = 0; i < nl; ++i) tokens.tokens.push_back(corpus.lexicon.words.at(i));
  tokens.vectors.topRows(ne) = space.entities;
  tokens.vectors.bottomRows(nl) = space.lexemes;

  EmbeddingTable rels{kg.relations().ids(), space.relations};

  std::ofstream out(vectors_path(prefix));
  if (!out) throw InputError("cannot write " + vectors_path(prefix).string());
  write_table(out, tokens);
  std::ofstream rout(relations_path(prefix));
  if (!rout) throw InputError("cannot write " + relations_path(prefix).string());
  write_table(rout, rels);
}

}  // namespace kgalign
