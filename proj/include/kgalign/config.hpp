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

#ifndef KGALIGN_CONFIG_HPP
#define KGALIGN_CONFIG_HPP

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "kgalign/alignment.hpp"
#include "kgalign/embedding.hpp"
#include "kgalign/eval.hpp"

namespace kgalign {

// Every knob of a pipeline run. Read from `key = value` lines; `#` starts a
// comment. Unknown keys are rejected.
struct PipelineConfig {
  OptimizerConfig optimizer = OptimizerConfig::desk_scale();
  Index min_freq = 5;
  bool case_fold = true;

  NeighborQuery query;
  SelfLearnOptions self_learning;
  bool self_learning_enabled = true;
  bool seed_lexicon = false;
  double seed_fraction = 0.3;

  Index p = 10;
  CandidateMode candidates = CandidateMode::kTestTargets;

  void validate() const;
};

const std::vector<std::string>& config_keys();

// Applies one assignment; throws InputError on an unknown key or bad value.
void set_config_value(PipelineConfig& cfg, const std::string& key, const std::string& value);

PipelineConfig parse_config(std::istream& in);
PipelineConfig load_config(const std::filesystem::path& path);
void write_config(std::ostream& out, const PipelineConfig& cfg);

}  // namespace kgalign

#endif  // KGALIGN_CONFIG_HPP
