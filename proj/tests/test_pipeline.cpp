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

#include "kgalign/pipeline.hpp"
#include "kgalign/synth.hpp"
#include "test_util.hpp"

using namespace kgalign;
using kgalign::testing::read_text;
using kgalign::testing::TempDir;

namespace {

// One small benchmark shared by the suite.
const std::filesystem::path& small_benchmark() {
  static TempDir dir;
  static bool written = false;
  if (!written) {
    SyntheticParams p;
    p.entities = 120;
    p.triples = 480;
    p.relations = 6;
    p.lexemes = 100;
    write_benchmark(dir.path(), generate_benchmark(p, 3));
    written = true;
  }
  return dir.path();
}

PipelineConfig small_config() {
  PipelineConfig cfg;
  cfg.optimizer.dim = 24;
  cfg.optimizer.epochs = 60;
  return cfg;
}

RunOptions options(const std::filesystem::path& work, std::uint64_t seed = 2,
                   Stage from = Stage::kGround) {
  return {small_benchmark(), work, seed, from};
}

const std::vector<const char*> kArtifacts = {
    WorkFiles::kSourceGrounded, WorkFiles::kTargetGrounded, "src.vec", "src.rel.vec", "tgt.vec",
    "tgt.rel.vec", WorkFiles::kState, WorkFiles::kPredictions, WorkFiles::kReport};

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("identical config and seed give identical artifacts") {
  TempDir a, b;
  auto ra = run_pipeline(small_config(), options(a.path()));
  auto rb = run_pipeline(small_config(), options(b.path()));
  CHECK(ra.report == rb.report);
  CHECK(ra.stage_hashes == rb.stage_hashes);
  for (const char* f : kArtifacts) {
    CAPTURE(f);
    CHECK(read_text(a / f) == read_text(b / f));
  }
  REQUIRE(ra.source_grounding);
  CHECK(ra.source_grounding->coverage == 1.0);
  CHECK(ra.report.n_test == 84);  // 120 gold pairs, 36 seeds
  CHECK(read_text(a / WorkFiles::kReport).starts_with("h1\t"));

  TempDir c;
  auto rc = run_pipeline(small_config(), options(c.path(), 3));
  CHECK(rc.stage_hashes.at("ground") != ra.stage_hashes.at("ground"));
}

TEST_CASE("each ablation changes exactly one stage") {
  TempDir work;
  const auto grid = ablation_grid(small_config());
  REQUIRE(grid.size() == 7);
  CHECK(grid[0].name == "full");
  std::map<std::string, std::map<std::string, std::uint64_t>> hashes;
  for (const auto& v : grid) hashes[v.name] = run_pipeline(v.config, options(work / v.name)).stage_hashes;
  const auto& full = hashes.at("full");
  for (const auto& v : grid) {
    if (v.name == "full") continue;
    CAPTURE(v.name);
    const auto& h = hashes.at(v.name);
    const std::string first = v.reuses_embeddings ? "align" : "train";
    CHECK(h.at("ground") == full.at("ground"));
    if (first == "align") CHECK(h.at("train") == full.at("train"));
    CHECK(h.at(first) != full.at(first));
  }
}

TEST_CASE("reuse variants match a fresh run") {
  TempDir work, fresh;
  auto grid = ablation_grid(small_config());
  std::vector<AblationVariant> subset{grid[0], grid[1]};  // full, no-self-learning
  auto rows = run_ablation(subset, options(work.path()));
  REQUIRE(rows.size() == 2);
  auto direct = run_pipeline(grid[1].config, options(fresh.path()));
  CHECK(rows[1].report == direct.report);
  CHECK(rows[0].report.h_at_1 > rows[1].report.h_at_1);

  std::ostringstream table;
  print_ablation_table(table, rows, 10);
  CHECK(table.str().find("no-self-learning") != std::string::npos);

  TempDir empty;
  CHECK_THROWS_AS(run_ablation({grid[1]}, options(empty.path())), InputError);
}

TEST_CASE("rerunning from any stage reproduces the outputs") {
  TempDir work;
  const auto cfg = small_config();
  auto base = run_pipeline(cfg, options(work.path()));
  std::map<std::string, std::string> files;
  for (const char* f : kArtifacts) files[f] = read_text(work / f);
  for (Stage s : {Stage::kTrain, Stage::kAlign, Stage::kEval}) {
    CAPTURE(stage_name(s));
    auto again = run_pipeline(cfg, options(work.path(), 2, s));
    CHECK(again.stage_hashes == base.stage_hashes);
    CHECK(again.report == base.report);
    for (const char* f : kArtifacts) CHECK(read_text(work / f) == files[f]);
  }
}

TEST_CASE("provided splits are used") {
  TempDir data, work;
  for (const auto& e : std::filesystem::directory_iterator(small_benchmark())) {
    std::filesystem::copy_file(e.path(), data / e.path().filename().string());
  }
  const auto gold = read_text(data / BenchmarkFiles::kGoldEntities);
  std::istringstream in(gold);
  std::string seeds, test, line;
  for (int i = 0; std::getline(in, line); ++i) (i < 20 ? seeds : test) += line + "\n";
  testing::write_text(data / WorkFiles::kSeedEntities, seeds);
  testing::write_text(data / WorkFiles::kTestPairs, test);
  auto r = run_pipeline(small_config(), {data.path(), work.path(), 1, Stage::kGround});
  CHECK(r.report.n_test == 100);
  CHECK(read_text(work / WorkFiles::kSeedEntities) == seeds);
}

TEST_CASE("errors carry the stage name") {
  TempDir work;
  auto cfg = small_config();
  cfg.optimizer.use_kg = false;
  cfg.optimizer.use_text = false;
  CHECK_THROWS_AS(run_pipeline(cfg, options(work.path())), InputError);

  auto expect_stage = [](const auto& fn, const std::string& stage) {
    try {
      fn();
      FAIL("expected an error");
    } catch (const InputError& e) {
      const std::string msg = e.what();
      CAPTURE(msg);
      CHECK(std::string(e.what()).starts_with(stage + ": "));
    }
  };
  TempDir empty_data, w2;
  expect_stage([&] { run_pipeline(small_config(), {empty_data.path(), w2.path(), 1, Stage::kGround}); },
               "ground");
  // Starting late without the earlier artifacts names the stage that should
  // have written them.
  TempDir w3;
  expect_stage([&] { run_pipeline(small_config(), options(w3.path(), 1, Stage::kTrain)); }, "ground");

  TempDir w4;
  cfg = small_config();
  cfg.optimizer.epochs = 1;
  run_pipeline(cfg, options(w4.path()));
  testing::write_text(w4 / "src.vec", "garbage\n");
  expect_stage([&] { run_pipeline(cfg, options(w4.path(), 2, Stage::kAlign)); }, "align");
  testing::write_text(w4 / WorkFiles::kTestPairs, "only-one-field\n");
  expect_stage([&] { run_pipeline(cfg, options(w4.path(), 2, Stage::kEval)); }, "eval");
  std::filesystem::remove(w4 / WorkFiles::kState);
  expect_stage([&] { run_pipeline(cfg, options(w4.path(), 2, Stage::kEval)); }, "align");

  CHECK(parse_stage("align") == Stage::kAlign);
  CHECK_THROWS_AS(parse_stage("fly"), InputError);
}

}  // TEST_SUITE
