// Copyright 2026 The pqmdl Authors
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

#include "pqmdl/config.hpp"

#include <charconv>
#include <fstream>

namespace pqmdl {
namespace {

using nlohmann::json;

template <typename T>
T parse_value(const std::string& text, const std::string& what) {
  T out{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, out);
  if (text.empty() || ec != std::errc() || ptr != end) {
    throw Error("bad value for " + what + ": '" + text + "'");
  }
  return out;
}

// "key=value" after the colon of a strategy spec.
std::string parameter(const std::string& spec, const std::string& head, const std::string& key) {
  const std::string prefix = head + ":" + key + "=";
  if (spec.rfind(prefix, 0) != 0) {
    throw Error("strategy '" + spec + "' must look like " + prefix + "<value>");
  }
  return spec.substr(prefix.size());
}

std::vector<double> number_list(const json& j, const char* key, double fallback) {
  if (!j.contains(key)) return {fallback};
  const auto& v = j.at(key);
  std::vector<double> out;
  if (v.is_number()) {
    out.push_back(v.get<double>());
  } else if (v.is_array()) {
    for (const auto& x : v) {
      if (!x.is_number()) throw Error(std::string("grid field '") + key + "' must hold numbers");
      out.push_back(x.get<double>());
    }
  } else {
    throw Error(std::string("grid field '") + key + "' must be a number or a list");
  }
  if (out.empty()) throw Error(std::string("grid field '") + key + "' is empty");
  return out;
}

// "linear", "mlp<h>", "mlp<h>x<width>"
void parse_architecture_name(const std::string& s, ReadoutArchitecture& arch, bool& width_from_input) {
  if (s == "linear") {
    arch.hidden_layers = 0;
    return;
  }
  if (s.rfind("mlp", 0) != 0) throw Error("unknown architecture '" + s + "'");
  const std::string rest = s.substr(3);
  const auto x = rest.find('x');
  arch.hidden_layers = parse_value<int>(rest.substr(0, x), "hidden layers in '" + s + "'");
  if (x != std::string::npos) {
    arch.hidden_width = parse_value<int>(rest.substr(x + 1), "hidden width in '" + s + "'");
    width_from_input = false;
  }
}

Family parse_family(const std::string& s) {
  if (s == "bernoulli") return Family::kBernoulli;
  if (s == "categorical") return Family::kCategorical;
  if (s == "gaussian") return Family::kGaussianKnownVariance;
  throw Error("unknown family '" + s + "'");
}

}  // namespace

SwitchingStrategy parse_strategy(const std::string& text, std::size_t n_experts) {
  SwitchingStrategy s;
  if (text == "bayes") {
    s = SwitchingStrategy::bayesian_mixture(n_experts);
  } else if (text == "elementwise") {
    s = SwitchingStrategy::elementwise_mixture(n_experts);
  } else if (text.rfind("fixed-share-dec", 0) == 0) {
    s = SwitchingStrategy::fixed_share_decreasing(
        n_experts, parse_value<int>(parameter(text, "fixed-share-dec", "m"), "m"));
  } else if (text.rfind("fixed-share-const", 0) == 0) {
    s = SwitchingStrategy::fixed_share_constant(
        n_experts, parse_value<double>(parameter(text, "fixed-share-const", "alpha"), "alpha"));
  } else if (text.rfind("switch", 0) == 0) {
    s = SwitchingStrategy::switch_distribution(
        n_experts, parse_value<double>(parameter(text, "switch", "kappa"), "kappa"));
  } else {
    throw Error("unknown strategy '" + text +
                "' (expected fixed-share-dec:m=INT, fixed-share-const:alpha=F, bayes, "
                "elementwise or switch:kappa=F)");
  }
  s.validate();
  return s;
}

std::vector<SwitchingStrategy> parse_strategy_list(const std::string& text, std::size_t n_experts) {
  std::vector<SwitchingStrategy> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const std::string item = text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    if (item.empty()) throw Error("empty entry in strategy list '" + text + "'");
    out.push_back(parse_strategy(item, n_experts));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

GridSpec parse_grid(const json& j) {
  if (!j.is_object()) throw Error("grid spec must be a JSON object");
  GridSpec g;
  g.source = j;
  const Hyperparameters defaults;
  if (j.contains("architectures")) {
    const auto& archs = j.at("architectures");
    if (!archs.is_array() || archs.empty()) throw Error("'architectures' must be a non-empty list");
    for (const auto& a : archs) {
      ReadoutArchitecture arch;
      bool width_from_input = true;
      if (a.is_string()) {
        parse_architecture_name(a.get<std::string>(), arch, width_from_input);
      } else if (a.is_object()) {
        arch.hidden_layers = a.value("hidden_layers", 0);
        if (a.contains("hidden_width")) {
          arch.hidden_width = a.at("hidden_width").get<int>();
          width_from_input = false;
        }
      } else {
        throw Error("architecture entries must be strings or objects");
      }
      if (arch.hidden_layers < 0 || arch.hidden_layers > ReadoutArchitecture::kMaxHiddenLayers) {
        throw Error("hidden_layers must be in [0, 7]");
      }
      g.architectures.push_back(arch);
      g.width_from_input.push_back(width_from_input);
    }
  } else {
    g.architectures.push_back({});
    g.width_from_input.push_back(true);
  }
  g.learning_rates = number_list(j, "learning_rates", defaults.learning_rate);
  g.weight_decays = number_list(j, "weight_decays", defaults.weight_decay);
  g.beta1s = number_list(j, "beta1s", defaults.beta1);
  g.ema_step_sizes = number_list(j, "ema_step_sizes", defaults.ema_step_size);
  g.label_smoothings = number_list(j, "label_smoothings", defaults.label_smoothing);
  if (j.contains("trainer")) {
    const auto& t = j.at("trainer");
    g.trainer.batch_size = t.value("batch_size", g.trainer.batch_size);
    g.trainer.n_streams = t.value("n_streams", g.trainer.n_streams);
    g.trainer.reset_probability = t.value("reset_probability", g.trainer.reset_probability);
  }
  g.trainer.validate();
  // Each list is checked on its own so errors surface before the product is built.
  const auto check = [](const std::vector<double>& values, auto set) {
    for (double v : values) {
      Hyperparameters h;
      set(h, v);
      h.validate();
    }
  };
  check(g.learning_rates, [](Hyperparameters& h, double v) { h.learning_rate = v; });
  check(g.weight_decays, [](Hyperparameters& h, double v) { h.weight_decay = v; });
  check(g.beta1s, [](Hyperparameters& h, double v) { h.beta1 = v; });
  check(g.ema_step_sizes, [](Hyperparameters& h, double v) { h.ema_step_size = v; });
  check(g.label_smoothings, [](Hyperparameters& h, double v) { h.label_smoothing = v; });
  return g;
}

GridSpec load_grid(const std::string& text) {
  try {
    if (!text.empty() && text.front() == '{') return parse_grid(json::parse(text));
    return parse_grid(read_json_file(text));
  } catch (const json::exception& e) {
    throw Error("grid spec '" + text + "': " + e.what());
  }
}

std::vector<ExpertSpec> build_expert_pool(const GridSpec& grid, std::size_t dim,
                                          std::uint32_t n_classes) {
  std::vector<ExpertSpec> pool;
  for (std::size_t a = 0; a < grid.architectures.size(); ++a) {
    ReadoutArchitecture arch = grid.architectures[a];
    arch.input_dim = static_cast<int>(dim);
    arch.n_classes = static_cast<int>(n_classes);
    if (arch.hidden_layers > 0 && grid.width_from_input[a]) arch.hidden_width = static_cast<int>(dim);
    arch.validate();
    for (double lr : grid.learning_rates) {
      for (double wd : grid.weight_decays) {
        for (double b1 : grid.beta1s) {
          for (double ema : grid.ema_step_sizes) {
            for (double ls : grid.label_smoothings) {
              Hyperparameters h;
              h.learning_rate = lr;
              h.weight_decay = wd;
              h.beta1 = b1;
              h.ema_step_size = ema;
              h.label_smoothing = ls;
              h.validate();
              pool.push_back({arch, h, describe_expert(arch, h)});
            }
          }
        }
      }
    }
  }
  return pool;
}

RegretExperiment parse_regret_experiment(const json& j) {
  try {
    if (!j.is_object()) throw Error("experiment spec must be a JSON object");
    RegretExperiment e;
    if (j.contains("source")) {
      const auto& s = j.at("source");
      e.source_family = parse_family(s.value("family", std::string("bernoulli")));
      e.source_variance = s.value("variance", 1.0);
      if (s.contains("segments")) {
        e.segments.clear();
        for (const auto& seg : s.at("segments")) {
          e.segments.push_back({seg.at("start").get<std::size_t>(), seg.at("parameter").get<double>()});
        }
      }
    }
    e.horizon = j.value("horizon", e.horizon);
    if (j.contains("n_trials")) {
      const auto n = j.at("n_trials").get<long long>();
      if (n < 1) throw Error("n_trials must be ≥ 1");
      e.n_trials = static_cast<std::size_t>(n);
    }
    e.seed = j.value("seed", e.seed);
    e.grid_per_decade = j.value("grid_per_decade", e.grid_per_decade);
    if (j.contains("experts")) {
      e.experts.clear();
      for (const auto& x : j.at("experts")) {
        ExpFamSpec spec;
        spec.family = parse_family(x.value("family", std::string("bernoulli")));
        spec.n_categories = x.value("n_categories", spec.n_categories);
        spec.smoothing = x.value("smoothing", spec.smoothing);
        spec.variance = x.value("variance", spec.variance);
        spec.prior_mean = x.value("prior_mean", spec.prior_mean);
        spec.name = x.value("name", std::string());
        e.experts.push_back(spec);
      }
    }
    e.strategy = parse_strategy(j.value("strategy", std::string("bayes")), e.experts.size());
    if (j.contains("comparator_switches")) {
      e.comparator_max_switches = j.at("comparator_switches").get<std::size_t>();
    }
    e.validate();
    return e;
  } catch (const json::exception& ex) {
    throw Error(std::string("experiment spec: ") + ex.what());
  }
}

RegretExperiment load_regret_experiment(const std::string& path) {
  try {
    return parse_regret_experiment(read_json_file(path));
  } catch (const Error& e) {
    const std::string what = e.what();
    if (what.find(path) != std::string::npos) throw;
    throw Error(path + ": " + what);
  }
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(path + ": " + e.what());
  }
}

}  // namespace pqmdl
