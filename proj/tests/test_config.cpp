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

#include <sstream>

#include "kgalign/config.hpp"

using namespace kgalign;

namespace {

PipelineConfig parse(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

}  // namespace

TEST_SUITE("config") {

TEST_CASE("defaults") {
  PipelineConfig cfg;
  CHECK(cfg.optimizer.dim == 32);
  CHECK(cfg.optimizer.neg_samples == 5);
  CHECK(cfg.optimizer.context_radius == 5);
  CHECK(cfg.optimizer.bias_b == 2.0);
  CHECK(cfg.optimizer.epochs == 300);
  CHECK(cfg.min_freq == 5);
  CHECK(cfg.query.metric == Metric::kCsls);
  CHECK(cfg.query.csls_k == 10);
  CHECK(cfg.self_learning.stop_fraction == 0.01);
  CHECK(cfg.self_learning.max_iterations == 50);
  CHECK(cfg.seed_fraction == 0.3);
  CHECK(cfg.p == 10);
  CHECK(cfg.candidates == CandidateMode::kTestTargets);
  CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("parse values, comments and blanks") {
  auto cfg = parse(
      "# a run\n"
      "dim = 64\n"
      "\n"
      "activation = relu   # trailing comment\n"
      "gcn = false\n"
      "metric = l2\n"
      "seed_frac = 0.5\n"
      "candidates = all\n");
  CHECK(cfg.optimizer.dim == 64);
  CHECK(cfg.optimizer.activation == Activation::kRelu);
  CHECK_FALSE(cfg.optimizer.gcn_enabled);
  CHECK(cfg.query.metric == Metric::kL2);
  CHECK(cfg.seed_fraction == 0.5);
  CHECK(cfg.candidates == CandidateMode::kAllTargets);
}

TEST_CASE("unknown keys and bad values are rejected") {
  CHECK_THROWS_AS(parse("dimension = 3\n"), InputError);
  CHECK_THROWS_AS(parse("dim = three\n"), InputError);
  CHECK_THROWS_AS(parse("gcn = maybe\n"), InputError);
  CHECK_THROWS_AS(parse("lr = fast\n"), InputError);
  CHECK_THROWS_AS(parse("dim 3\n"), InputError);
  CHECK_THROWS_AS(parse("metric = cosine\n"), InputError);
}

TEST_CASE("disabling both losses is an error") {
  CHECK_THROWS_AS(parse("kg = false\ntext = false\n").validate(), InputError);
  CHECK_NOTHROW(parse("kg = false\n").validate());
}

TEST_CASE("range checks") {
  CHECK_THROWS_AS(parse("seed_frac = 1\n").validate(), InputError);
  CHECK_THROWS_AS(parse("stop_frac = 0\n").validate(), InputError);
  CHECK_THROWS_AS(parse("min_freq = 0\n").validate(), InputError);
  CHECK_THROWS_AS(parse("csls_k = 0\n").validate(), InputError);
}

TEST_CASE("write and parse round trip") {
  auto cfg = parse(
      "dim = 7\nactivation = tanh\nneg_samples = 3\ntext_batch_size = 9\nlr = 0.125\n"
      "unigram_negatives = true\ncase_fold = false\nself_learning = false\nseed_lexicon = true\n"
      "metric = l2\ncsls_k = 4\nstop_frac = 0.2\nmax_iter = 3\nlexeme_top_f = 11\np = 5\n");
  std::ostringstream out;
  write_config(out, cfg);
  auto back = parse(out.str());
  std::ostringstream again;
  write_config(again, back);
  CHECK(again.str() == out.str());
  CHECK(back.optimizer.dim == 7);
  CHECK(back.optimizer.activation == Activation::kTanh);
  CHECK(back.optimizer.text_batch_size == 9);
  CHECK(back.optimizer.lr == 0.125);
  CHECK(back.optimizer.unigram_negatives);
  CHECK_FALSE(back.case_fold);
  CHECK_FALSE(back.self_learning_enabled);
  CHECK(back.seed_lexicon);
  CHECK(back.self_learning.lexeme_top_f == 11);
  CHECK(back.p == 5);
  // Every known key is written.
  for (const auto& key : config_keys()) CHECK(out.str().find(key + " =") != std::string::npos);
}

}  // TEST_SUITE
