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

#include <algorithm>
#include <random>
#include <sstream>

#include "kgalign/eval.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace kgalign;
using kgalign::oracle::gaussian;

namespace {

std::shared_ptr<const AlignmentSpace> space_of(const MatrixXr& m) {
  EmbeddingTable t;
  t.vectors = m;
  for (Index i = 0; i < m.rows(); ++i) t.tokens.push_back("@ent:e" + std::to_string(i));
  return std::make_shared<const AlignmentSpace>(AlignmentSpace::from_table(t));
}

// Two unrelated random spaces, so ranks are spread out.
AlignmentState random_state(Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return AlignmentState::seeded(space_of(gaussian(n, 6, rng)), space_of(gaussian(n, 6, rng)), {});
}

}  // namespace

TEST_SUITE("eval") {

TEST_CASE("metrics from ranks") {
  auto r = summarize_ranks({1, 2, 4}, 2);
  CHECK(r.h_at_1 == doctest::Approx(1.0 / 3.0));
  CHECK(r.h_at_p == doctest::Approx(2.0 / 3.0));
  CHECK(r.mrr == doctest::Approx((1 + 0.5 + 0.25) / 3.0));
  std::ostringstream out;
  write_report(out, r);
  CHECK(out.str() == "h1\t0.3333\nh_p\t0.6667\nmrr\t0.5833\nn\t3\n");

  auto r10 = summarize_ranks({1, 2, 4}, 10);
  CHECK(r10.h_at_p == 1.0);

  auto perfect = summarize_ranks({1, 1, 1, 1}, 10);
  CHECK(perfect.h_at_1 == 1.0);
  CHECK(perfect.h_at_p == 1.0);
  CHECK(perfect.mrr == 1.0);
}

TEST_CASE("metric errors") {
  CHECK_THROWS_AS(summarize_ranks({}, 10), InputError);
  CHECK_THROWS_AS(summarize_ranks({0}, 10), InputError);
  CHECK_THROWS_AS(summarize_ranks({1}, 0), InputError);
  auto state = random_state(5, 1);
  CHECK_THROWS_AS(evaluate({}, state, {}, 10, CandidateMode::kTestTargets), InputError);
  EntityRanker ranker(state, {});
  CHECK_THROWS_AS(ranker.rank_of(0, 3, {0, 1, 2}), InputError);
  CHECK(parse_candidate_mode("all") == CandidateMode::kAllTargets);
  CHECK_THROWS_AS(parse_candidate_mode("some"), InputError);
}

TEST_CASE("ranks agree with a full sort") {
  auto state = random_state(200, 2);
  std::vector<IndexPair> test;
  for (Index i = 0; i < 200; i += 2) test.emplace_back(i, (i * 7 + 3) % 200);
  for (Metric m : {Metric::kCsls, Metric::kL2}) {
    NeighborQuery q{m, 10};
    auto rep = evaluate(test, state, q, 10, CandidateMode::kAllTargets);
    EntityRanker ranker(state, q);
    std::vector<Index> all(200);
    std::iota(all.begin(), all.end(), Index{0});
    std::vector<Index> ranks;
    for (auto [s, t] : test) {
      std::vector<std::pair<double, Index>> scored;
      for (Index c : all) scored.emplace_back(-ranker.score(s, c), c);
      std::sort(scored.begin(), scored.end());
      auto pos = std::find_if(scored.begin(), scored.end(), [&](const auto& x) { return x.second == t; });
      ranks.push_back(static_cast<Index>(pos - scored.begin()) + 1);
    }
    CHECK(rep.ranks == ranks);
    auto expected = summarize_ranks(ranks, 10);
    CHECK(rep == expected);
    CHECK(rep.h_at_1 <= rep.h_at_p);
    CHECK(rep.mrr >= rep.h_at_1);
  }
}

TEST_CASE("test-pair order does not change the metrics") {
  auto state = random_state(60, 3);
  std::vector<IndexPair> test;
  for (Index i = 0; i < 60; ++i) test.emplace_back(i, (i + 5) % 60);
  auto a = evaluate(test, state, {}, 5, CandidateMode::kTestTargets);
  std::mt19937_64 rng(4);
  std::shuffle(test.begin(), test.end(), rng);
  auto b = evaluate(test, state, {}, 5, CandidateMode::kTestTargets);
  CHECK(a.h_at_1 == b.h_at_1);
  CHECK(a.h_at_p == b.h_at_p);
  CHECK(a.mrr == doctest::Approx(b.mrr).epsilon(1e-14));
}

TEST_CASE("fewer candidates never hurt") {
  auto state = random_state(80, 5);
  std::vector<IndexPair> test;
  for (Index i = 0; i < 80; i += 4) test.emplace_back(i, 79 - i);
  auto sub = evaluate(test, state, {}, 10, CandidateMode::kTestTargets);
  auto all = evaluate(test, state, {}, 10, CandidateMode::kAllTargets);
  for (std::size_t i = 0; i < test.size(); ++i) CHECK(sub.ranks[i] <= all.ranks[i]);
  CHECK(sub.h_at_1 >= all.h_at_1);
  CHECK(sub.mrr >= all.mrr);
}

TEST_CASE("identical spaces under identity score perfectly") {
  std::mt19937_64 rng(6);
  auto sp = space_of(gaussian(30, 5, rng));
  auto state = AlignmentState::seeded(sp, sp, {});
  std::vector<IndexPair> test;
  for (Index i = 0; i < 30; ++i) test.emplace_back(i, i);
  auto rep = evaluate(test, state, {}, 10, CandidateMode::kAllTargets);
  CHECK(rep.h_at_1 == 1.0);
  CHECK(rep.mrr == 1.0);
}

}  // TEST_SUITE
