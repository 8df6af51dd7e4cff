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

#include "kgalign/config.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace kgalign {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

Index to_int(const std::string& key, const std::string& v) {
  Index out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size()) {
    throw InputError("config: " + key + " expects an integer, got '" + v + "'");
  }
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size()) {
    throw InputError("config: " + key + " expects a number, got '" + v + "'");
  }
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw InputError("config: " + key + " expects true/false, got '" + v + "'");
}

}  // namespace

void PipelineConfig::validate() const {
  optimizer.validate();
  query.validate();
  if (min_freq < 1) throw InputError("invalid config: min_freq must be >= 1");
  if (!(seed_fraction > 0 && seed_fraction < 1)) {
    throw InputError("invalid config: seed_frac must be in (0, 1)");
  }
  if (!(self_learning.stop_fraction > 0 && self_learning.stop_fraction <= 1)) {
    throw InputError("invalid config: stop_frac must be in (0, 1]");
  }
  if (self_learning.max_iterations < 1) throw InputError("invalid config: max_iter must be >= 1");
  if (self_learning.lexeme_top_f < 0) throw InputError("invalid config: lexeme_top_f must be >= 0");
  if (p < 1) throw InputError("invalid config: p must be >= 1");
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = {
      // embedding
      "dim", "gcn_layers", "activation", "neg_samples", "context_radius", "bias_b",
      "batch_size", "text_batch_size", "lr", "beta1", "beta2", "epochs", "min_freq",
      // ablations and pipeline
      "gcn", "kg", "text", "unigram_negatives", "case_fold", "self_learning", "seed_lexicon",
      "seed_frac", "metric", "csls_k", "stop_frac", "max_iter", "lexeme_top_f", "p",
      "candidates"};
  return keys;
}

void set_config_value(PipelineConfig& cfg, const std::string& key, const std::string& v) {
  auto& o = cfg.optimizer;
  if (key == "dim") o.dim = to_int(key, v);
  else if (key == "gcn_layers") o.gcn_layers = to_int(key, v);
  else if (key == "activation") o.activation = parse_activation(v);
  else if (key == "neg_samples") o.neg_samples = to_int(key, v);
  else if (key == "context_radius") o.context_radius = to_int(key, v);
  else if (key == "bias_b") o.bias_b = to_double(key, v);
  else if (key == "batch_size") o.batch_size = to_int(key, v);
  else if (key == "text_batch_size") o.text_batch_size = to_int(key, v);
  else if (key == "lr") o.lr = to_double(key, v);
  else if (key == "beta1") o.beta1 = to_double(key, v);
  else if (key == "beta2") o.beta2 = to_double(key, v);
  else if (key == "epochs") o.epochs = to_int(key, v);
  else if (key == "min_freq") cfg.min_freq = to_int(key, v);
  else if (key == "gcn") o.gcn_enabled = to_bool(key, v);
  else if (key == "kg") o.use_kg = to_bool(key, v);
  else if (key == "text") o.use_text = to_bool(key, v);
  else if (key == "unigram_negatives") o.unigram_negatives = to_bool(key, v);
  else if (key == "case_fold") cfg.case_fold = to_bool(key, v);
  else if (key == "self_learning") cfg.self_learning_enabled = to_bool(key, v);
  else if (key == "seed_lexicon") cfg.seed_lexicon = to_bool(key, v);
  else if (key == "seed_frac") cfg.seed_fraction = to_double(key, v);
  else if (key == "metric") cfg.query.metric = parse_metric(v);
  else if (key == "csls_k") cfg.query.csls_k = to_int(key, v);
  else if (key == "stop_frac") cfg.self_learning.stop_fraction = to_double(key, v);
  else if (key == "max_iter") cfg.self_learning.max_iterations = to_int(key, v);
  else if (key == "lexeme_top_f") cfg.self_learning.lexeme_top_f = to_int(key, v);
  else if (key == "p") cfg.p = to_int(key, v);
  else if (key == "candidates") cfg.candidates = parse_candidate_mode(v);
  else throw InputError("config: unknown key '" + key + "'");
}

PipelineConfig parse_config(std::istream& in) {
  PipelineConfig cfg;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw InputError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    set_config_value(cfg, trim(std::string_view(body).substr(0, eq)),
                     trim(std::string_view(body).substr(eq + 1)));
  }
  cfg.validate();
  return cfg;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config file: " + path.string());
  return parse_config(in);
}

void write_config(std::ostream& out, const PipelineConfig& cfg) {
  const auto& o = cfg.optimizer;
  auto b = [](bool v) { return v ? "true" : "false"; };
  out << "dim = " << o.dim << '\n'
      << "gcn_layers = " << o.gcn_layers << '\n'
      << "activation = " << activation_name(o.activation) << '\n'
      << "neg_samples = " << o.neg_samples << '\n'
      << "context_radius = " << o.context_radius << '\n'
      << "bias_b = " << o.bias_b << '\n'
      << "batch_size = " << o.batch_size << '\n'
      << "text_batch_size = " << o.text_batch_size << '\n'
      << "lr = " << o.lr << '\n'
      << "beta1 = " << o.beta1 << '\n'
      << "beta2 = " << o.beta2 << '\n'
      << "epochs = " << o.epochs << '\n'
      << "min_freq = " << cfg.min_freq << '\n'
      << "gcn = " << b(o.gcn_enabled) << '\n'
      << "kg = " << b(o.use_kg) << '\n'
      << "text = " << b(o.use_text) << '\n'
      << "unigram_negatives = " << b(o.unigram_negatives) << '\n'
      << "case_fold = " << b(cfg.case_fold) << '\n'
      << "self_learning = " << b(cfg.self_learning_enabled) << '\n'
      << "seed_lexicon = " << b(cfg.seed_lexicon) << '\n'
      << "seed_frac = " << cfg.seed_fraction << '\n'
      << "metric = " << metric_name(cfg.query.metric) << '\n'
      << "csls_k = " << cfg.query.csls_k << '\n'
      << "stop_frac = " << cfg.self_learning.stop_fraction << '\n'
      << "max_iter = " << cfg.self_learning.max_iterations << '\n'
      << "lexeme_top_f = " << cfg.self_learning.lexeme_top_f << '\n'
      << "p = " << cfg.p << '\n'
      << "candidates = " << candidate_mode_name(cfg.candidates) << '\n';
}

}  // namespace kgalign
