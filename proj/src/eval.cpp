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

#include "kgalign/eval.hpp"

#include <cstdio>
#include <numeric>
#include <ostream>
#include <set>

namespace kgalign {

CandidateMode parse_candidate_mode(std::string_view name) {
  if (name == "all") return CandidateMode::kAllTargets;
  if (name == "test") return CandidateMode::kTestTargets;
  throw InputError("unknown candidate mode: " + std::string(name));
}

std::string_view candidate_mode_name(CandidateMode m) {
  return m == CandidateMode::kAllTargets ? "all" : "test";
}

EvalReport summarize_ranks(std::vector<Index> ranks, Index p) {
  if (ranks.empty()) throw InputError("evaluation needs at least one test pair");
  if (p < 1) throw InputError("p must be >= 1");
  EvalReport r;
  r.p = p;
  r.n_test = static_cast<Index>(ranks.size());
  double h1 = 0, hp = 0, rr = 0;
  for (Index rank : ranks) {
    if (rank < 1) throw InputError("ranks are 1-based");
    h1 += rank == 1;
    hp += rank <= p;
    rr += 1.0 / static_cast<double>(rank);
  }
  const double n = static_cast<double>(ranks.size());
  r.h_at_1 = h1 / n;
  r.h_at_p = hp / n;
  r.mrr = rr / n;
  r.ranks = std::move(ranks);
  return r;
}

EvalReport evaluate(const std::vector<IndexPair>& test_pairs, const AlignmentState& state,
                    const NeighborQuery& q, Index p, CandidateMode mode) {
  if (test_pairs.empty()) throw InputError("evaluation needs at least one test pair");
  EntityRanker ranker(state, q);
  std::vector<Index> candidates;
  if (mode == CandidateMode::kAllTargets) {
    candidates.resize(static_cast<std::size_t>(ranker.num_targets()));
    std::iota(candidates.begin(), candidates.end(), Index{0});
  } else {
    std::set<Index> golds;
    for (auto [s, t] : test_pairs) golds.insert(t);
    candidates.assign(golds.begin(), golds.end());
  }
  std::vector<Index> ranks;
  ranks.reserve(test_pairs.size());
  for (auto [s, t] : test_pairs) ranks.push_back(ranker.rank_of(s, t, candidates));
  return summarize_ranks(std::move(ranks), p);
}

void write_report(std::ostream& out, const EvalReport& report) {
  char buf[64];
  auto line = [&](const char* key, double v) {
    std::snprintf(buf, sizeof buf, "%s\t%.4f\n", key, v);
    out << buf;
  };
  line("h1", report.h_at_1);
  line("h_p", report.h_at_p);
  line("mrr", report.mrr);
  out << "n\t" << report.n_test << '\n';
}

}  // namespace kgalign
