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

// kgalign: entity alignment between two KGs with grounded text corpora.

#include <cstdio>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "kgalign/alignment.hpp"
#include "kgalign/config.hpp"
#include "kgalign/embedding.hpp"
#include "kgalign/eval.hpp"
#include "kgalign/grounding.hpp"
#include "kgalign/kg.hpp"
#include "kgalign/pipeline.hpp"
#include "kgalign/synth.hpp"

namespace fs = std::filesystem;
using namespace kgalign;

namespace {

PipelineConfig config_or_default(const std::string& path) {
  return path.empty() ? PipelineConfig{} : load_config(path);
}

void print_report(const EvalReport& r) { write_report(std::cout, r); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Entity alignment with incidental supervision from text"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic two-language benchmark");
  std::string synth_out;
  std::uint64_t synth_seed = 0;
  SyntheticParams sp;
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--seed", synth_seed, "Random seed");
  synth->add_option("--entities", sp.entities, "Entities per KG")->capture_default_str();
  synth->add_option("--triples", sp.triples, "Triples per KG")->capture_default_str();
  synth->add_option("--relations", sp.relations)->capture_default_str();
  synth->add_option("--edge-drop", sp.edge_drop, "Fraction of target triples replaced")->capture_default_str();
  synth->add_option("--lexemes", sp.lexemes)->capture_default_str();
  synth->add_option("--words-per-entity", sp.lexemes_per_entity)->capture_default_str();
  synth->add_option("--word-rate", sp.word_rate, "Chance of an entity word after each mention")
      ->capture_default_str();
  synth->add_option("--filler-rate", sp.filler_rate)->capture_default_str();
  synth->add_option("--walks", sp.walks_per_entity, "Random walks started per entity")->capture_default_str();
  synth->add_option("--walk-length", sp.walk_length)->capture_default_str();

  // ground
  auto* ground = app.add_subcommand("ground", "Ground a corpus against a KG by surface forms");
  std::string g_kg, g_forms, g_corpus, g_out, g_lang = "xx";
  bool g_no_fold = false;
  Index g_min_freq = 5;
  ground->add_option("--kg", g_kg)->required();
  ground->add_option("--forms", g_forms)->required();
  ground->add_option("--corpus", g_corpus)->required();
  ground->add_option("--out", g_out)->required();
  ground->add_option("--lang", g_lang);
  ground->add_flag("--no-case-fold", g_no_fold);
  ground->add_option("--min-freq", g_min_freq)->capture_default_str();

  // train
  auto* trn = app.add_subcommand("train", "Train the joint KG and text embedding of one language");
  std::string t_kg, t_grounded, t_config, t_out, t_lang = "xx";
  std::uint64_t t_seed = 0;
  bool t_no_gcn = false, t_no_text = false, t_no_kg = false;
  trn->add_option("--kg", t_kg)->required();
  trn->add_option("--grounded", t_grounded)->required();
  trn->add_option("--config", t_config);
  trn->add_option("--seed", t_seed);
  trn->add_option("--out", t_out, "Embedding prefix")->required();
  trn->add_option("--lang", t_lang);
  trn->add_flag("--no-gcn", t_no_gcn);
  trn->add_flag("--no-text", t_no_text);
  trn->add_flag("--no-kg", t_no_kg);

  // align
  auto* aln = app.add_subcommand("align", "Induce the cross-space transform by self-learning");
  std::string a_src, a_tgt, a_seeds, a_lexicon, a_out, a_metric = "csls";
  Index a_csls_k = 10, a_max_iter = 50, a_p = 10, a_top_f = 10000;
  double a_stop = 0.01;
  bool a_no_sl = false;
  aln->add_option("--src-emb", a_src)->required();
  aln->add_option("--tgt-emb", a_tgt)->required();
  aln->add_option("--seed-entities", a_seeds)->required();
  aln->add_option("--seed-lexicon", a_lexicon);
  aln->add_option("--metric", a_metric)->check(CLI::IsMember({"csls", "l2"}))->capture_default_str();
  aln->add_option("--csls-k", a_csls_k)->capture_default_str();
  aln->add_option("--stop-frac", a_stop)->capture_default_str();
  aln->add_option("--max-iter", a_max_iter)->capture_default_str();
  aln->add_option("--lexeme-top-f", a_top_f)->capture_default_str();
  aln->add_option("--p", a_p, "Ranks written per prediction")->capture_default_str();
  aln->add_flag("--no-self-learning", a_no_sl);
  aln->add_option("--out", a_out, "State file")->required();

  // eval
  auto* ev = app.add_subcommand("eval", "Evaluate an alignment state on test pairs");
  std::string e_state, e_test, e_metric = "csls", e_cands = "test", e_out;
  Index e_p = 10, e_csls_k = 10;
  ev->add_option("--state", e_state)->required();
  ev->add_option("--test", e_test)->required();
  ev->add_option("--p", e_p)->capture_default_str();
  ev->add_option("--metric", e_metric)->check(CLI::IsMember({"csls", "l2"}))->capture_default_str();
  ev->add_option("--csls-k", e_csls_k)->capture_default_str();
  ev->add_option("--candidates", e_cands)->check(CLI::IsMember({"test", "all"}))->capture_default_str();
  ev->add_option("--out", e_out, "Also write the report here");

  // run / ablate
  auto* run = app.add_subcommand("run", "Run ground, train, align and eval end to end");
  auto* abl = app.add_subcommand("ablate", "Run the ablation grid and print a comparison table");
  std::string r_data, r_work, r_config, r_from = "ground";
  std::uint64_t r_seed = 0;
  bool r_no_gcn = false, r_no_text = false, r_no_kg = false, r_no_sl = false, r_lexicon = false;
  std::string r_metric;
  for (auto* sub : {run, abl}) {
    sub->add_option("--data", r_data, "Benchmark directory (see `synth`)")->required();
    sub->add_option("--work", r_work, "Work directory for stage outputs")->required();
    sub->add_option("--config", r_config);
    sub->add_option("--seed", r_seed);
  }
  run->add_option("--from", r_from, "First stage to recompute")
      ->check(CLI::IsMember({"ground", "train", "align", "eval"}));
  run->add_flag("--no-gcn", r_no_gcn);
  run->add_flag("--no-text", r_no_text);
  run->add_flag("--no-kg", r_no_kg);
  run->add_flag("--no-self-learning", r_no_sl);
  run->add_flag("--seed-lexicon", r_lexicon);
  run->add_option("--metric", r_metric)->check(CLI::IsMember({"csls", "l2"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // --help exits 0; any usage error is an input error.
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (*synth) {
      write_benchmark(synth_out, generate_benchmark(sp, synth_seed));
      std::cout << "wrote benchmark to " << synth_out << '\n';
    } else if (*ground) {
      auto loaded = load_kg(g_kg, g_lang);
      auto index = build_index(fs::path(g_forms), loaded.kg, !g_no_fold);
      if (index.unknown_entities()) {
        std::cerr << "warning: skipped " << index.unknown_entities()
                  << " surface forms with unknown entity ids\n";
      }
      if (index.collisions()) {
        std::cerr << "warning: " << index.collisions() << " ambiguous surface forms kept their first entity\n";
      }
      auto result = ground_corpus(fs::path(g_corpus), index, loaded.kg, g_min_freq);
      std::ofstream out(g_out);
      if (!out) throw InputError("cannot write " + g_out);
      write_grounded(out, result.corpus, loaded.kg);
      std::printf("coverage\t%.4f\navg_match\t%.4f\n", result.stats.coverage, result.stats.avg_match);
    } else if (*trn) {
      auto cfg = config_or_default(t_config);
      if (t_no_gcn) cfg.optimizer.gcn_enabled = false;
      if (t_no_text) cfg.optimizer.use_text = false;
      if (t_no_kg) cfg.optimizer.use_kg = false;
      cfg.validate();
      auto loaded = load_kg(t_kg, t_lang);
      auto grounded = load_pregrounded(fs::path(t_grounded), loaded.kg);
      if (grounded.demoted) {
        std::cerr << "warning: " << grounded.demoted << " entity markers not in the KG were kept as lexemes\n";
      }
      auto result = train(loaded.kg, grounded.corpus, cfg.optimizer, t_seed);
      save_embeddings(t_out, result.space, loaded.kg, grounded.corpus);
      const auto total = result.log.total_loss();
      if (!total.empty()) std::printf("final_loss\t%.4f\n", total.back());
    } else if (*aln) {
      NeighborQuery q{parse_metric(a_metric), a_csls_k};
      SelfLearnOptions opts;
      opts.stop_fraction = a_stop;
      opts.max_iterations = a_max_iter;
      opts.lexeme_top_f = a_top_f;
      auto src = std::make_shared<AlignmentSpace>(AlignmentSpace::load(a_src));
      auto tgt = std::make_shared<AlignmentSpace>(AlignmentSpace::load(a_tgt));
      auto seeds = resolve_pairs(read_pairs(a_seeds), src->entities, tgt->entities, "seed entities");
      std::vector<IndexPair> lexicon;
      if (!a_lexicon.empty()) {
        for (const auto& [s, t] : read_pairs(a_lexicon)) {
          auto si = src->lexemes.find(s);
          auto ti = tgt->lexemes.find(t);
          if (si && ti) lexicon.emplace_back(*si, *ti);
        }
      }
      auto state = AlignmentState::seeded(src, tgt, std::move(seeds), std::move(lexicon));
      if (a_no_sl) {
        solve_transform(state);
        state.iterations = 1;
      } else {
        state = self_learn(std::move(state), q, opts);
      }
      if (state.rank_deficient) std::cerr << "warning: rank-deficient Procrustes problem\n";
      save_state(a_out, state);
      std::ofstream pred(a_out + ".predictions.tsv");
      write_predictions(pred, state, q, a_p);
      std::printf("iterations\t%lld\nentity_pairs\t%zu\nlexeme_pairs\t%zu\n",
                  static_cast<long long>(state.iterations), state.entity_pairs.size(),
                  state.lexeme_pairs.size());
    } else if (*ev) {
      auto state = load_state(e_state);
      auto test = resolve_pairs(read_pairs(e_test), state.source->entities, state.target->entities,
                                "test pairs");
      auto report = evaluate(test, state, {parse_metric(e_metric), e_csls_k}, e_p,
                             parse_candidate_mode(e_cands));
      print_report(report);
      if (!e_out.empty()) {
        std::ofstream out(e_out);
        write_report(out, report);
      }
    } else if (*run) {
      auto cfg = config_or_default(r_config);
      if (r_no_gcn) cfg.optimizer.gcn_enabled = false;
      if (r_no_text) cfg.optimizer.use_text = false;
      if (r_no_kg) cfg.optimizer.use_kg = false;
      if (r_no_sl) cfg.self_learning_enabled = false;
      if (r_lexicon) cfg.seed_lexicon = true;
      if (!r_metric.empty()) cfg.query.metric = parse_metric(r_metric);
      auto result = run_pipeline(cfg, {r_data, r_work, r_seed, parse_stage(r_from)});
      if (result.source_grounding) {
        std::printf("src_coverage\t%.4f\nsrc_avg_match\t%.4f\n", result.source_grounding->coverage,
                    result.source_grounding->avg_match);
        std::printf("tgt_coverage\t%.4f\ntgt_avg_match\t%.4f\n", result.target_grounding->coverage,
                    result.target_grounding->avg_match);
      }
      print_report(result.report);
    } else if (*abl) {
      auto cfg = config_or_default(r_config);
      auto rows = run_ablation(ablation_grid(cfg), {r_data, r_work, r_seed, Stage::kGround});
      print_ablation_table(std::cout, rows, cfg.p);
    }
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 2;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
