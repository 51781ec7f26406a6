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

#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <random>

#include "CLI11.hpp"
#include "json.hpp"
#include "pqmdl/config.hpp"
#include "pqmdl/expfam.hpp"
#include "pqmdl/io.hpp"
#include "pqmdl/kernels.hpp"
#include "pqmdl/ranking.hpp"
#include "pqmdl/report.hpp"
#include "pqmdl/switching.hpp"
#include "pqmdl/trainer.hpp"

namespace pqmdl {
namespace {

using nlohmann::json;

constexpr double kDefaultQ = 3.12;

struct Options {
  std::uint64_t seed = 0;
  std::string kernels;
  std::string features;
  std::string losses;
  std::string grid;
  std::string strategy = "fixed-share-dec:m=2";
  std::string sweep;
  std::string out;
  std::string losses_out;
  std::string posterior;
  std::string curves;
  std::string spec;
  std::string scores;
  std::string orientation = "lower";
  std::optional<double> q;
  std::optional<double> gamma;
  std::optional<std::size_t> batch_size;
  std::optional<std::size_t> streams;
  std::size_t n = 1000;
  std::size_t dim = 16;
  std::uint32_t classes = 2;
  double separation = 1.0;
};

void write_json(const std::string& path, const json& j) { write_text_file(path, j.dump(2) + "\n"); }

TrainerConfig trainer_config(const GridSpec& grid, const Options& o) {
  TrainerConfig c = grid.trainer;
  if (o.batch_size) c.batch_size = *o.batch_size;
  if (o.streams) c.n_streams = *o.streams;
  c.seed = o.seed;
  c.validate();
  return c;
}

json trainer_json(const TrainerConfig& c) {
  return {{"batch_size", c.batch_size},
          {"n_streams", c.n_streams},
          {"reset_probability", c.reset_probability},
          {"seed", c.seed}};
}

void warn_diverged(const std::vector<bool>& diverged, const std::vector<std::string>& names,
                   std::ostream& err) {
  for (std::size_t k = 0; k < diverged.size(); ++k) {
    if (diverged[k]) err << "warning: expert '" << names[k] << "' diverged; reporting log C losses\n";
  }
}

// Fixed share with the primary strategy's m when it is one, else m = 2.
SwitchingStrategy fixed_share_baseline(const SwitchingStrategy& primary) {
  if (primary.kind == SwitchingStrategy::Kind::kFixedShareDecreasing) return primary;
  return SwitchingStrategy::fixed_share_decreasing(primary.n_experts, 2);
}

json codelength_report(const std::string& command, const LossMatrix& losses,
                       const SwitchingStrategy& primary, const CodelengthResult& primary_result,
                       const Options& o, const json& config) {
  json report;
  report["command"] = command;
  report["seed"] = o.seed;
  report["kernels"] = std::string(kernels::isa_name(kernels::active().isa));
  report["n_steps"] = losses.n_steps();
  report["n_experts"] = losses.n_experts();
  report["experts"] = losses.expert_names();
  report["config"] = config;
  report["result"] = codelength_section(primary_result, losses);

  if (!o.sweep.empty()) {
    const auto baseline_strategy = fixed_share_baseline(primary);
    const auto baseline = baseline_strategy.descriptor() == primary.descriptor()
                              ? primary_result
                              : forward_codelength(losses, baseline_strategy);
    json sections = json::array();
    for (const auto& s : parse_strategy_list(o.sweep, losses.n_experts())) {
      const auto r = forward_codelength(losses, s);
      auto section = codelength_section(r, losses);
      attach_regret_vs_baseline(section, r, baseline);
      sections.push_back(section);
    }
    report["sweep"] = sections;
  }
  return report;
}

void write_codelength_exports(const LossMatrix& losses, const CodelengthResult& result,
                              const Options& o) {
  if (!o.posterior.empty()) write_text_file(o.posterior, posterior_csv(result.trace, losses.expert_names()));
  if (!o.curves.empty()) {
    std::vector<CodelengthResult> all{result};
    if (!o.sweep.empty()) {
      for (const auto& s : parse_strategy_list(o.sweep, losses.n_experts())) {
        all.push_back(forward_codelength(losses, s));
      }
    }
    write_text_file(o.curves, codelength_curves_csv(all, losses));
  }
}

void print_summary(const json& report, std::ostream& out) {
  const auto& r = report.at("result");
  out << r.at("strategy").get<std::string>() << ": total " << r.at("total_nats").get<double>()
      << " nats, " << r.at("nats_per_example").get<double>() << " nats/example; most probable expert "
      << r.at("posterior").at("most_probable_expert").at("name").get<std::string>() << "\n";
}

int cmd_stage1(const Options& o, std::ostream& out, std::ostream& err) {
  const auto data = load_features(o.features);
  const auto grid = load_grid(o.grid);
  const auto pool = build_expert_pool(grid, data.dim, data.n_classes);
  const auto config = trainer_config(grid, o);
  const auto result = run_stage1(data, pool, config);
  warn_diverged(result.diverged, result.losses.expert_names(), err);
  write_loss_matrix_file(o.out, result.losses);
  out << "wrote " << result.losses.n_steps() << " x " << result.losses.n_experts() << " losses to "
      << o.out << "\n";
  return kExitOk;
}

int cmd_stage2(const Options& o, std::ostream& out, std::ostream&) {
  const auto losses = read_loss_matrix_file(o.losses);
  const auto strategy = parse_strategy(o.strategy, losses.n_experts());
  const auto result = forward_codelength(losses, strategy);
  const json config{{"losses", o.losses}, {"strategy", strategy.descriptor()}, {"sweep", o.sweep}};
  const auto report = codelength_report("stage2", losses, strategy, result, o, config);
  write_json(o.out, report);
  write_codelength_exports(losses, result, o);
  print_summary(report, out);
  return kExitOk;
}

int cmd_online(const Options& o, std::ostream& out, std::ostream& err) {
  const auto data = load_features(o.features);
  const auto grid = load_grid(o.grid);
  const auto pool = build_expert_pool(grid, data.dim, data.n_classes);
  const auto config = trainer_config(grid, o);
  const auto strategy = parse_strategy(o.strategy, pool.size());
  const auto result = run_online(data, pool, config, strategy);
  warn_diverged(result.diverged, result.losses.expert_names(), err);
  const json cfg{{"features", o.features},
                 {"grid", grid.source},
                 {"trainer", trainer_json(config)},
                 {"strategy", strategy.descriptor()},
                 {"sweep", o.sweep}};
  const auto report = codelength_report("online", result.losses, strategy, result.codelength, o, cfg);
  write_json(o.out, report);
  if (!o.losses_out.empty()) write_loss_matrix_file(o.losses_out, result.losses);
  write_codelength_exports(result.losses, result.codelength, o);
  print_summary(report, out);
  return kExitOk;
}

int cmd_synth_regret(const Options& o, std::ostream& out, std::ostream&) {
  auto exp = load_regret_experiment(o.spec);
  if (o.seed != 0) exp.seed = o.seed;
  const auto curve = run_regret_experiment(exp);
  json report{{"command", "synth-regret"},
              {"spec", read_json_file(o.spec)},
              {"seed", exp.seed},
              {"strategy", exp.strategy.descriptor()},
              {"curve", regret_curve_json(curve)}};
  write_json(o.out, report);
  if (!o.curves.empty()) write_text_file(o.curves, regret_curve_csv(curve));
  out << exp.strategy.descriptor() << ": slope " << curve.slope << " +/- " << curve.slope_stderr
      << ", R(N)/N " << curve.final_regret_per_step
      << (curve.constant_regret ? ", constant regret\n" : "\n");
  return kExitOk;
}

int cmd_rank(const Options& o, std::ostream& out, std::ostream&) {
  const auto table = read_score_table(o.scores, parse_orientation(o.orientation));
  const double gamma = o.gamma.value_or(0.1);
  const double q = o.q ? *o.q : o.gamma ? nemenyi_q(gamma, table.n_representations()) : kDefaultQ;
  const auto summary = summarize_ranks(table, q, gamma);
  auto report = rank_report(summary);
  report["command"] = "rank";
  report["scores"] = o.scores;
  report["orientation"] = o.orientation;
  write_json(o.out, report);
  for (const auto& r : report.at("average_ranks")) {
    out << r.at("representation").get<std::string>() << " " << r.at("average_rank").get<double>() << "\n";
  }
  out << "critical difference " << summary.critical_difference << " (q = " << q << ")\n";
  return kExitOk;
}

// Gaussian mixture: class means drawn once, unit-variance noise around them.
int cmd_make_synth(const Options& o, std::ostream& out, std::ostream&) {
  if (o.n < 1 || o.dim < 1 || o.classes < 2) throw Error("make-synth needs n >= 1, dim >= 1, classes >= 2");
  std::mt19937_64 rng(o.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> means(o.classes * o.dim);
  const double scale = o.separation / std::sqrt(static_cast<double>(o.dim));
  for (double& m : means) m = scale * normal(rng);
  std::uniform_int_distribution<std::uint32_t> pick(0, o.classes - 1);
  FeatureSequence seq;
  seq.dim = o.dim;
  seq.n_classes = o.classes;
  seq.name = std::filesystem::path(o.out).stem().string();
  seq.features.reserve(o.n * o.dim);
  seq.labels.reserve(o.n);
  for (std::size_t i = 0; i < o.n; ++i) {
    const std::uint32_t y = pick(rng);
    seq.labels.push_back(y);
    for (std::size_t j = 0; j < o.dim; ++j) {
      seq.features.push_back(static_cast<float>(means[y * o.dim + j] + normal(rng)));
    }
  }
  write_feature_file(o.out, seq, "gaussian-mixture seed=" + std::to_string(o.seed));
  out << "wrote " << o.n << " examples (d = " << o.dim << ", C = " << o.classes << ") to " << o.out << "\n";
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Prequential MDL of readout models with expert switching", "pqmdl"};
  app.require_subcommand(1);
  Options o;
  app.add_option("--seed", o.seed, "Global random seed");
  app.add_option("--kernels", o.kernels, "Kernel variant: auto, scalar or avx2");

  std::function<int(const Options&, std::ostream&, std::ostream&)> run;
  auto bind = [&](CLI::App* sub, auto fn) { sub->callback([&run, fn] { run = fn; }); };

  auto* stage1 = app.add_subcommand("stage1", "Train the expert grid and write the loss matrix");
  stage1->add_option("--features", o.features, "Feature file (.pqsf binary or .csv)")->required();
  stage1->add_option("--grid", o.grid, "Expert grid JSON file or inline JSON")->required();
  stage1->add_option("--out", o.out, "Output loss matrix file")->required();
  stage1->add_option("--batch-size", o.batch_size, "Mini-batch size");
  stage1->add_option("--streams", o.streams, "Number of replay streams");
  bind(stage1, cmd_stage1);

  auto* stage2 = app.add_subcommand("stage2", "Switching codelength from a loss matrix");
  stage2->add_option("--losses", o.losses, "Loss matrix file")->required();
  stage2->add_option("--strategy", o.strategy, "Switching strategy")->capture_default_str();
  stage2->add_option("--sweep", o.sweep, "Comma-separated strategies reported against fixed share");
  stage2->add_option("--out", o.out, "Output JSON report")->required();
  stage2->add_option("--posterior", o.posterior, "CSV export of the posterior trace");
  stage2->add_option("--curves", o.curves, "CSV export of cumulative codelength curves");
  bind(stage2, cmd_stage2);

  auto* online = app.add_subcommand("online", "Single pass interleaving training and switching");
  online->add_option("--features", o.features, "Feature file (.pqsf binary or .csv)")->required();
  online->add_option("--grid", o.grid, "Expert grid JSON file or inline JSON")->required();
  online->add_option("--strategy", o.strategy, "Switching strategy")->capture_default_str();
  online->add_option("--sweep", o.sweep, "Comma-separated strategies reported against fixed share");
  online->add_option("--out", o.out, "Output JSON report")->required();
  online->add_option("--losses-out", o.losses_out, "Also write the loss matrix");
  online->add_option("--posterior", o.posterior, "CSV export of the posterior trace");
  online->add_option("--curves", o.curves, "CSV export of cumulative codelength curves");
  online->add_option("--batch-size", o.batch_size, "Mini-batch size");
  online->add_option("--streams", o.streams, "Number of replay streams");
  bind(online, cmd_online);

  auto* synth = app.add_subcommand("synth-regret", "Regret curves on exponential-family sources");
  synth->add_option("spec,--spec", o.spec, "Experiment spec JSON")->required();
  synth->add_option("--out", o.out, "Output JSON report")->required();
  synth->add_option("--curves", o.curves, "CSV export of the mean regret curve");
  bind(synth, cmd_synth_regret);

  auto* rank = app.add_subcommand("rank", "Average ranks and Nemenyi critical difference");
  rank->add_option("--scores", o.scores, "Score table (CSV or TSV)")->required();
  rank->add_option("--orientation", o.orientation, "lower or higher is better")
      ->check(CLI::IsMember({"lower", "higher"}))
      ->capture_default_str();
  auto* q_opt = rank->add_option("--q-gamma", o.q, "Nemenyi q value (default 3.12)");
  rank->add_option("--gamma", o.gamma, "Use the built-in q table at this level (0.05 or 0.10)")
      ->excludes(q_opt);
  rank->add_option("--out", o.out, "Output JSON report")->required();
  bind(rank, cmd_rank);

  auto* synth_data = app.add_subcommand("make-synth", "Write a Gaussian-mixture feature file");
  synth_data->add_option("--out", o.out, "Output feature file")->required();
  synth_data->add_option("--n", o.n, "Number of examples")->capture_default_str();
  synth_data->add_option("--dim", o.dim, "Feature dimension")->capture_default_str();
  synth_data->add_option("--classes", o.classes, "Number of classes")->capture_default_str();
  synth_data->add_option("--separation", o.separation, "Scale of the class means")->capture_default_str();
  bind(synth_data, cmd_make_synth);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (!o.kernels.empty()) kernels::select_kernels(kernels::parse_isa(o.kernels));
    return run(o, out, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const nlohmann::json::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
}

}  // namespace pqmdl
