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

#include "kgalign/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <ostream>

#include "kgalign/synth.hpp"

namespace kgalign {

namespace fs = std::filesystem;

Stage parse_stage(std::string_view name) {
  if (name == "ground") return Stage::kGround;
  if (name == "train") return Stage::kTrain;
  if (name == "align") return Stage::kAlign;
  if (name == "eval") return Stage::kEval;
  throw InputError("unknown stage: " + std::string(name));
}

std::string_view stage_name(Stage s) {
  switch (s) {
    case Stage::kGround: return "ground";
    case Stage::kTrain: return "train";
    case Stage::kAlign: return "align";
    case Stage::kEval: return "eval";
  }
  return "ground";
}

std::uint64_t file_digest(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read " + path.string());
  std::uint64_t h = 14695981039346656037ULL;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ULL;
    }
  }
  return h;
}

namespace {

std::uint64_t combine(std::uint64_t seed, std::uint64_t h) {
  return seed ^ (h + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2));
}

std::uint64_t digest_files(const std::vector<fs::path>& files) {
  std::uint64_t h = 0;
  for (const auto& f : files) h = combine(h, file_digest(f));
  return h;
}

void write_pairs(const fs::path& path, const std::vector<std::pair<std::string, std::string>>& pairs) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  for (const auto& [a, b] : pairs) out << a << '\t' << b << '\n';
}

// Wraps a stage so that errors name it.
template <typename Fn>
auto in_stage(Stage stage, Fn&& fn) {
  try {
    return fn();
  } catch (const NumericalError& e) {
    throw NumericalError(std::string(stage_name(stage)) + ": " + e.what());
  } catch (const InputError& e) {
    throw InputError(std::string(stage_name(stage)) + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw InputError(std::string(stage_name(stage)) + ": " + e.what());
  }
}

struct Side {
  const char* triples;
  const char* forms;
  const char* corpus;
  const char* grounded;
  const char* embedding;
  std::uint64_t salt;
};

constexpr Side kSource{BenchmarkFiles::kSourceTriples, BenchmarkFiles::kSourceForms,
                       BenchmarkFiles::kSourceCorpus, WorkFiles::kSourceGrounded,
                       WorkFiles::kSourceEmbedding, 0x5a17};
constexpr Side kTarget{BenchmarkFiles::kTargetTriples, BenchmarkFiles::kTargetForms,
                       BenchmarkFiles::kTargetCorpus, WorkFiles::kTargetGrounded,
                       WorkFiles::kTargetEmbedding, 0x7a43};

KnowledgeGraph load_side_kg(const RunOptions& o, const Side& side, const std::string& lang) {
  return load_kg(o.data_dir / side.triples, lang).kg;
}

// Seed/test split: provided files win; otherwise a seeded shuffle of gold.
void prepare_splits(const PipelineConfig& cfg, const RunOptions& o) {
  const auto seed_file = o.data_dir / WorkFiles::kSeedEntities;
  const auto test_file = o.data_dir / WorkFiles::kTestPairs;
  if (fs::exists(seed_file) && fs::exists(test_file)) {
    fs::copy_file(seed_file, o.work_dir / WorkFiles::kSeedEntities,
                  fs::copy_options::overwrite_existing);
    fs::copy_file(test_file, o.work_dir / WorkFiles::kTestPairs,
                  fs::copy_options::overwrite_existing);
  } else {
    auto gold = read_pairs(o.data_dir / BenchmarkFiles::kGoldEntities);
    if (gold.size() < 2) throw InputError("gold alignment needs at least 2 pairs");
    Rng rng(o.seed ^ 0x5eedULL);
    std::shuffle(gold.begin(), gold.end(), rng);
    auto n_seed = static_cast<std::size_t>(std::llround(cfg.seed_fraction * static_cast<double>(gold.size())));
    n_seed = std::clamp<std::size_t>(n_seed, 1, gold.size() - 1);
    write_pairs(o.work_dir / WorkFiles::kSeedEntities, {gold.begin(), gold.begin() + static_cast<long>(n_seed)});
    write_pairs(o.work_dir / WorkFiles::kTestPairs, {gold.begin() + static_cast<long>(n_seed), gold.end()});
  }
  const auto lexicon = o.data_dir / BenchmarkFiles::kGoldLexemes;
  if (cfg.seed_lexicon) {
    if (!fs::exists(lexicon)) throw InputError("seed_lexicon is on but " + lexicon.string() + " is missing");
    fs::copy_file(lexicon, o.work_dir / WorkFiles::kSeedLexicon, fs::copy_options::overwrite_existing);
  }
}

// Keeps only lexicon pairs whose words both survived grounding.
std::vector<IndexPair> known_lexeme_pairs(const fs::path& path, const AlignmentSpace& src,
                                          const AlignmentSpace& tgt) {
  std::vector<IndexPair> out;
  for (const auto& [s, t] : read_pairs(path)) {
    auto si = src.lexemes.find(s);
    auto ti = tgt.lexemes.find(t);
    if (si && ti) out.emplace_back(*si, *ti);
  }
  return out;
}

}  // namespace

PipelineResult run_pipeline(const PipelineConfig& cfg, const RunOptions& o) {
  cfg.validate();
  fs::create_directories(o.work_dir);
  PipelineResult result;
  const auto work = [&](const char* name) { return o.work_dir / name; };

  if (o.from <= Stage::kGround) {
    in_stage(Stage::kGround, [&] {
      prepare_splits(cfg, o);
      for (const Side* side : {&kSource, &kTarget}) {
        const auto kg = load_side_kg(o, *side, side == &kSource ? "src" : "tgt");
        const auto index = build_index(o.data_dir / side->forms, kg, cfg.case_fold);
        auto grounded = ground_corpus(o.data_dir / side->corpus, index, kg, cfg.min_freq);
        std::ofstream out(work(side->grounded));
        if (!out) throw InputError("cannot write grounded corpus");
        write_grounded(out, grounded.corpus, kg);
        (side == &kSource ? result.source_grounding : result.target_grounding) = grounded.stats;
      }
      return 0;
    });
  }
  result.stage_hashes["ground"] = in_stage(Stage::kGround, [&] {
    return digest_files({work(WorkFiles::kSourceGrounded), work(WorkFiles::kTargetGrounded),
                         work(WorkFiles::kSeedEntities), work(WorkFiles::kTestPairs)});
  });

  if (o.from <= Stage::kTrain) {
    in_stage(Stage::kTrain, [&] {
      for (const Side* side : {&kSource, &kTarget}) {
        const auto kg = load_side_kg(o, *side, side == &kSource ? "src" : "tgt");
        const auto corpus = load_pregrounded(work(side->grounded), kg).corpus;
        auto trained = train(kg, corpus, cfg.optimizer, o.seed ^ side->salt);
        save_embeddings(work(side->embedding), trained.space, kg, corpus);
      }
      return 0;
    });
  }
  result.stage_hashes["train"] = in_stage(Stage::kTrain, [&] {
    return digest_files({vectors_path(work(WorkFiles::kSourceEmbedding)),
                         relations_path(work(WorkFiles::kSourceEmbedding)),
                         vectors_path(work(WorkFiles::kTargetEmbedding)),
                         relations_path(work(WorkFiles::kTargetEmbedding))});
  });

  if (o.from <= Stage::kAlign) {
    in_stage(Stage::kAlign, [&] {
      auto src = std::make_shared<AlignmentSpace>(AlignmentSpace::load(work(WorkFiles::kSourceEmbedding)));
      auto tgt = std::make_shared<AlignmentSpace>(AlignmentSpace::load(work(WorkFiles::kTargetEmbedding)));
      auto seeds = resolve_pairs(read_pairs(work(WorkFiles::kSeedEntities)), src->entities,
                                 tgt->entities, "seed entities");
      std::vector<IndexPair> lexicon;
      if (cfg.seed_lexicon) lexicon = known_lexeme_pairs(work(WorkFiles::kSeedLexicon), *src, *tgt);
      auto state = AlignmentState::seeded(src, tgt, std::move(seeds), std::move(lexicon));
      if (cfg.self_learning_enabled) {
        state = self_learn(std::move(state), cfg.query, cfg.self_learning);
      } else {
        solve_transform(state);
        state.iterations = 1;
      }
      save_state(work(WorkFiles::kState), state);
      std::ofstream pred(work(WorkFiles::kPredictions));
      write_predictions(pred, state, cfg.query, cfg.p);
      return 0;
    });
  }
  result.stage_hashes["align"] = in_stage(Stage::kAlign, [&] {
    return digest_files({work(WorkFiles::kState), work(WorkFiles::kPredictions)});
  });

  result.report = in_stage(Stage::kEval, [&] {
    auto state = load_state(work(WorkFiles::kState));
    result.self_learning_iterations = state.iterations;
    auto test = resolve_pairs(read_pairs(work(WorkFiles::kTestPairs)), state.source->entities,
                              state.target->entities, "test pairs");
    auto report = evaluate(test, state, cfg.query, cfg.p, cfg.candidates);
    std::ofstream out(work(WorkFiles::kReport));
    write_report(out, report);
    return report;
  });
  result.stage_hashes["eval"] =
      in_stage(Stage::kEval, [&] { return digest_files({work(WorkFiles::kReport)}); });
  return result;
}

std::vector<AblationVariant> ablation_grid(const PipelineConfig& base) {
  std::vector<AblationVariant> grid;
  grid.push_back({"full", base, false});
  auto variant = [&](const std::string& name, bool reuse, auto&& edit) {
    PipelineConfig cfg = base;
    edit(cfg);
    grid.push_back({name, cfg, reuse});
  };
  variant("no-self-learning", true, [](PipelineConfig& c) { c.self_learning_enabled = false; });
  variant("no-gcn", false, [](PipelineConfig& c) { c.optimizer.gcn_enabled = false; });
  variant("no-text", false, [](PipelineConfig& c) { c.optimizer.use_text = false; });
  variant("no-kg", false, [](PipelineConfig& c) { c.optimizer.use_kg = false; });
  variant("no-csls", true, [](PipelineConfig& c) { c.query.metric = Metric::kL2; });
  variant("seed-lexicon", true, [](PipelineConfig& c) { c.seed_lexicon = true; });
  return grid;
}

std::vector<AblationRow> run_ablation(const std::vector<AblationVariant>& variants,
                                      const RunOptions& options) {
  std::vector<AblationRow> rows;
  const fs::path full_dir = options.work_dir / "full";
  for (const auto& v : variants) {
    RunOptions o = options;
    o.work_dir = options.work_dir / v.name;
    if (v.reuses_embeddings && v.name != "full") {
      if (!fs::exists(vectors_path(full_dir / WorkFiles::kSourceEmbedding))) {
        throw InputError("ablation variant " + v.name + " needs the full variant to run first");
      }
      fs::create_directories(o.work_dir);
      // Same ground/train stages as "full"; only the split files and
      // lexicon may differ, so they are regenerated here.
      in_stage(Stage::kGround, [&] {
        prepare_splits(v.config, o);
        return 0;
      });
      for (const char* name : {WorkFiles::kSourceGrounded, WorkFiles::kTargetGrounded}) {
        fs::copy_file(full_dir / name, o.work_dir / name, fs::copy_options::overwrite_existing);
      }
      for (const char* prefix : {WorkFiles::kSourceEmbedding, WorkFiles::kTargetEmbedding}) {
        fs::copy_file(vectors_path(full_dir / prefix), vectors_path(o.work_dir / prefix),
                      fs::copy_options::overwrite_existing);
        fs::copy_file(relations_path(full_dir / prefix), relations_path(o.work_dir / prefix),
                      fs::copy_options::overwrite_existing);
      }
      o.from = Stage::kAlign;
    }
    rows.push_back({v.name, run_pipeline(v.config, o).report});
  }
  return rows;
}

void print_ablation_table(std::ostream& out, const std::vector<AblationRow>& rows, Index p) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-18s %8s %8s %8s\n", "setting", "H@1",
                ("H@" + std::to_string(p)).c_str(), "MRR");
  out << buf;
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%-18s %8.4f %8.4f %8.4f\n", r.name.c_str(), r.report.h_at_1,
                  r.report.h_at_p, r.report.mrr);
    out << buf;
  }
}

}  // namespace kgalign
