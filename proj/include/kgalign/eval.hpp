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

#ifndef KGALIGN_EVAL_HPP
#define KGALIGN_EVAL_HPP

#include <iosfwd>
#include <string_view>
#include <vector>

#include "kgalign/alignment.hpp"

namespace kgalign {

enum class CandidateMode { kAllTargets, kTestTargets };

CandidateMode parse_candidate_mode(std::string_view name);  // "all" | "test"
std::string_view candidate_mode_name(CandidateMode m);

struct EvalReport {
  double h_at_1 = 0;
  double h_at_p = 0;
  double mrr = 0;
  Index p = 10;
  Index n_test = 0;
  std::vector<Index> ranks;  // 1-based, in test-pair order

  bool operator==(const EvalReport&) const = default;
};

// H@1, H@p and MRR from 1-based ranks. Throws InputError if `ranks` is empty.
EvalReport summarize_ranks(std::vector<Index> ranks, Index p);

/// Ranks each gold target among the candidates via the entity ranker (ties by
/// target index). Throws InputError on an empty test set or when a gold target
/// is not a candidate.
EvalReport evaluate(const std::vector<IndexPair>& test_pairs, const AlignmentState& state,
                    const NeighborQuery& q, Index p, CandidateMode mode);

// `metric<TAB>value` lines for h1, h_p, mrr (4 decimals) and n.
void write_report(std::ostream& out, const EvalReport& report);

}  // namespace kgalign

#endif  // KGALIGN_EVAL_HPP
