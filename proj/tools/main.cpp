// Copyright (c) 2026 The glucodg Authors. All rights reserved.
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
//
// Command-line front end. Four subcommands cover the whole workflow:
//
//   glucodg synth      --out data/            generate a raw sensor bundle
//   glucodg prepare    --in data/ --out prep/ align, normalize, balance
//   glucodg select     --in prep/ --out sel/  mixed-model feature screen
//   glucodg experiment --in prep/ --out exp/ --number 1..9
//
// A --config FILE (flat JSON, dotted keys for nested knobs) seeds any
// subcommand's options; explicit flags override it. All outputs except
// timing.json are byte-identical across reruns with the same inputs.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "glucodg/glucodg.hpp"

namespace {

namespace fs = std::filesystem;
using glucodg::Json;

constexpr const char* kVersion = "1.0.0";

// A config file is a single flat JSON object; every key must resolve to a
// known knob so typos fail loudly instead of silently running defaults.
using KeyTable = std::map<std::string, std::function<void(const Json&)>>;

void apply_config(const fs::path& path, const KeyTable& table) {
  const Json j = Json::parse(glucodg::read_text_file(path));
  glucodg::require(j.is_object(), "ParseError",
                   "config file must hold a JSON object");
  for (const auto& [key, value] : j.items()) {
    const auto it = table.find(key);
    if (it == table.end()) {
      std::string known;
      for (const auto& [k, fn] : table) {
        (void)fn;
        known += known.empty() ? k : ", " + k;
      }
      glucodg::fail("UnknownKey",
                    "config key '" + key + "' is not recognized; known keys: " + known);
    }
    it->second(value);
  }
}

// CLI11 only hands us the config path after parsing, at which point explicit
// flags would already be overwritten. Scanning argv up front keeps the
// precedence config < flags.
std::string scan_config_arg(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--config" && i + 1 < argc) return argv[i + 1];
    if (arg.rfind("--config=", 0) == 0) return arg.substr(9);
  }
  return "";
}

std::string scan_subcommand(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "synth" || arg == "prepare" || arg == "select" ||
        arg == "experiment")
      return arg;
    if (!arg.empty() && arg[0] != '-') break;
  }
  return "";
}

void write_provenance(const fs::path& dir, const std::string& subcommand,
                      Json inputs, Json options) {
  const Json j{{"tool", "glucodg"},
               {"version", kVersion},
               {"subcommand", subcommand},
               {"inputs", std::move(inputs)},
               {"options", std::move(options)}};
  glucodg::write_text_file(dir / "provenance.json", j.dump(2) + "\n");
}

struct SynthArgs {
  glucodg::SynthConfig cfg;
  glucodg::RawEmissionOptions emission;
  std::string out;
  std::uint64_t seed = 1;
};

struct PrepareArgs {
  glucodg::PrepareOptions opt;
  std::string in, out;
  std::uint64_t seed = 1;
};

struct SelectArgs {
  double threshold = 0.05;
  bool univariate = false;
  bool ml = false;  // maximum likelihood instead of REML
  std::string in, out;
};

struct ExperimentArgs {
  glucodg::ExperimentSpec spec;
  std::vector<double> ablate_portions;
  std::string in, out, selection_file;
  std::uint64_t seed = 1;
};

int run_synth(const SynthArgs& args) {
  glucodg::SynthConfig cfg = args.cfg;
  cfg.seed = glucodg::RngSeed{args.seed};
  const auto result = glucodg::generate(cfg);
  const fs::path out{args.out};
  glucodg::write_synth_bundle(out, result, cfg, args.emission);
  std::size_t total = 0;
  for (const auto& ds : result.datasets) total += ds.samples.size();
  write_provenance(
      out, "synth", Json::object(),
      Json{{"seed", args.seed},
           {"n_domains", cfg.n_domains},
           {"samples_per_domain", cfg.samples_per_domain},
           {"n_mmwave", cfg.n_mmwave},
           {"n_nir", cfg.n_nir},
           {"informative_indices", cfg.informative_indices},
           {"effect_sizes", cfg.effect_sizes},
           {"domain_intercept_sd", cfg.domain_intercept_sd},
           {"domain_shift_sd", cfg.domain_shift_sd},
           {"domain_effect_sd", cfg.domain_effect_sd},
           {"noise_sd", cfg.noise_sd},
           {"label_min", cfg.label_min},
           {"label_max", cfg.label_max},
           {"missing_rate", args.emission.missing_rate},
           {"decoys_per_gap", args.emission.decoys_per_gap}});
  std::printf("wrote %zu domains, %zu samples to %s\n", result.datasets.size(),
              total, args.out.c_str());
  return 0;
}

int run_prepare(const PrepareArgs& args) {
  glucodg::PrepareOptions opt = args.opt;
  opt.seed = glucodg::RngSeed{args.seed};
  const auto prepared = glucodg::prepare_bundle(args.in, opt);
  const fs::path out{args.out};
  glucodg::save_prepared(out, prepared);
  Json counts = Json::array();
  std::size_t total = 0;
  for (std::size_t d = 0; d < prepared.datasets.size(); ++d) {
    counts.push_back(Json{{"domain", prepared.datasets[d].domain_id},
                          {"aligned", prepared.aligned_counts[d]},
                          {"prepared", prepared.datasets[d].samples.size()}});
    total += prepared.datasets[d].samples.size();
  }
  write_provenance(out, "prepare", Json{{"bundle", args.in}},
                   Json{{"seed", args.seed},
                        {"normalize", opt.normalize},
                        {"augment", opt.augment},
                        {"target_per_domain", opt.target_per_domain},
                        {"mixup_alpha", opt.mixup_alpha},
                        {"dropped_features", prepared.stats.zero_variance},
                        {"domains", std::move(counts)}});
  std::printf("prepared %zu domains, %zu samples to %s\n",
              prepared.datasets.size(), total, args.out.c_str());
  return 0;
}

int run_select(const SelectArgs& args) {
  const auto prepared = glucodg::load_prepared(args.in);
  std::vector<std::string> candidates;
  for (auto i : prepared.schema.indices_of(glucodg::FeatureKind::kMmwaveS21))
    candidates.push_back(prepared.schema.names[i]);
  glucodg::MixedLMOptions opt;
  opt.reml = !args.ml;
  const auto selection =
      glucodg::select_features(prepared.datasets, prepared.schema, candidates,
                               args.threshold, args.univariate, opt);

  const fs::path out{args.out};
  fs::create_directories(out);
  glucodg::write_text_file(out / "selection.json",
                           glucodg::selection_to_json(selection).dump(2) + "\n");
  glucodg::write_text_file(out / "selection.csv",
                           glucodg::selection_table_csv(selection));

  std::vector<std::pair<std::string, glucodg::PearsonReport>> pearson;
  for (const auto& name : prepared.schema.names)
    pearson.emplace_back(name, glucodg::pearson_per_domain(prepared.datasets,
                                                           prepared.schema, name));
  glucodg::write_text_file(out / "pearson.csv",
                           glucodg::pearson_table_csv(pearson));

  write_provenance(out, "select", Json{{"prepared", args.in}},
                   Json{{"threshold", args.threshold},
                        {"univariate", args.univariate},
                        {"reml", !args.ml},
                        {"candidates", candidates}});
  std::printf("selected %zu of %zu features to %s\n", selection.selected.size(),
              candidates.size(), args.out.c_str());
  return 0;
}

int run_experiment(const ExperimentArgs& args) {
  const auto prepared = glucodg::load_prepared(args.in);
  glucodg::ExperimentSpec spec = args.spec;
  spec.seed = glucodg::RngSeed{args.seed};

  glucodg::FeatureSelection selection;
  const glucodg::FeatureSelection* selection_ptr = nullptr;
  if (!args.selection_file.empty()) {
    selection = glucodg::selection_from_json(
        Json::parse(glucodg::read_text_file(args.selection_file)));
    selection_ptr = &selection;
  }

  const fs::path out{args.out};
  fs::create_directories(out);
  const auto dump_models = [&](const glucodg::EvalReport& report,
                               const fs::path& dir) {
    if (!spec.capture_models) return;
    fs::create_directories(dir);
    for (const auto& fold : report.folds)
      glucodg::write_text_file(dir / (fold.target + ".json"),
                               fold.model_json + "\n");
  };

  if (!args.ablate_portions.empty()) {
    const auto results = glucodg::run_portion_ablation(
        prepared.datasets, prepared.schema, args.ablate_portions, spec,
        selection_ptr);
    glucodg::write_text_file(out / "ablation.json",
                             glucodg::ablation_to_json(results).dump(2) + "\n");
    glucodg::write_text_file(out / "ablation.csv",
                             glucodg::ablation_table_csv(results));
    Json timing = Json::array();
    for (const auto& r : results)
      timing.push_back(Json{{"portion", r.portion},
                            {"timing", glucodg::timing_to_json(r.report)}});
    glucodg::write_text_file(out / "timing.json", timing.dump(2) + "\n");
    for (const auto& r : results) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "models_p%.2f", r.portion);
      dump_models(r.report, out / buf);
    }
  } else {
    const auto report = glucodg::run_experiment(prepared.datasets,
                                                prepared.schema, spec,
                                                selection_ptr);
    glucodg::write_text_file(out / "report.json",
                             glucodg::eval_report_to_json(report).dump(2) + "\n");
    glucodg::write_text_file(out / "table.csv", glucodg::eval_table_csv(report));
    glucodg::write_text_file(out / "timing.json",
                             glucodg::timing_to_json(report).dump(2) + "\n");
    dump_models(report, out / "models");
    std::printf("experiment %d: mae %.3f rmse %.3f mape %.3f\n", spec.number,
                report.mean.mae, report.mean.rmse, report.mean.mape);
  }

  write_provenance(out, "experiment",
                   Json{{"prepared", args.in}, {"selection", args.selection_file}},
                   Json{{"seed", args.seed},
                        {"number", spec.number},
                        {"ablate_portions", args.ablate_portions},
                        {"threads", spec.threads},
                        {"capture_models", spec.capture_models},
                        {"refit_normalization_per_fold",
                         spec.refit_normalization_per_fold}});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-domain glucose regression toolkit"};
  app.require_subcommand(1);
  std::string config_dummy;

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic sensor bundle");
  synth_cmd->add_option("--out", synth.out, "Output directory")->required();
  synth_cmd->add_option("--seed", synth.seed, "Random seed");
  synth_cmd->add_option("--domains", synth.cfg.n_domains, "Number of subjects");
  synth_cmd->add_option("--samples", synth.cfg.samples_per_domain,
                        "Samples per subject");
  synth_cmd->add_option("--missing-rate", synth.emission.missing_rate,
                        "Fraction of sensor cells left empty");
  synth_cmd->add_option("--config", config_dummy, "JSON config file");

  PrepareArgs prepare;
  auto* prepare_cmd = app.add_subcommand("prepare", "Align, normalize, and balance a bundle");
  prepare_cmd->add_option("--in", prepare.in, "Bundle directory (manifest.json)")->required();
  prepare_cmd->add_option("--out", prepare.out, "Output directory")->required();
  prepare_cmd->add_option("--seed", prepare.seed, "Random seed for sample mixing");
  prepare_cmd->add_flag_callback("--no-augment",
                                 [&] { prepare.opt.augment = false; },
                                 "Skip domain balancing");
  prepare_cmd->add_flag_callback("--no-normalize",
                                 [&] { prepare.opt.normalize = false; },
                                 "Skip pooled z-score normalization");
  prepare_cmd->add_option("--target", prepare.opt.target_per_domain,
                          "Per-domain sample target (0 = largest domain)");
  prepare_cmd->add_option("--alpha", prepare.opt.mixup_alpha,
                          "Beta distribution shape for sample mixing");
  prepare_cmd->add_option("--config", config_dummy, "JSON config file");

  SelectArgs select;
  auto* select_cmd = app.add_subcommand("select", "Mixed-model feature screen");
  select_cmd->add_option("--in", select.in, "Prepared data directory")->required();
  select_cmd->add_option("--out", select.out, "Output directory")->required();
  select_cmd->add_option("--threshold", select.threshold, "p-value cutoff");
  select_cmd->add_flag("--univariate", select.univariate,
                       "Refit one candidate at a time");
  select_cmd->add_flag("--ml", select.ml, "Maximum likelihood instead of REML");
  select_cmd->add_option("--config", config_dummy, "JSON config file");

  ExperimentArgs exp;
  auto* exp_cmd = app.add_subcommand("experiment", "Run a numbered experiment");
  exp_cmd->add_option("--in", exp.in, "Prepared data directory")->required();
  exp_cmd->add_option("--out", exp.out, "Output directory")->required();
  int number = 0;
  exp_cmd->add_option("--number", number, "Experiment number (1-9)")->required();
  exp_cmd->add_option("--selection", exp.selection_file,
                      "selection.json from the select step");
  exp_cmd->add_option("--seed", exp.seed, "Random seed");
  exp_cmd->add_option("--threads", exp.spec.threads, "Worker threads");
  exp_cmd->add_option("--repeats", exp.spec.repeats,
                      "Splits for the generalized protocol");
  exp_cmd->add_option("--trees", exp.spec.forest.n_estimators, "Trees per forest");
  exp_cmd->add_option("--depth", exp.spec.forest.max_depth, "Maximum tree depth");
  exp_cmd->add_option("--portion", exp.spec.meta.portion,
                      "Per-domain subsample fraction (meta)");
  exp_cmd->add_option("--iterations", exp.spec.meta.iterations,
                      "Episodic iterations (meta)");
  exp_cmd->add_option("--ablate-portions", exp.ablate_portions,
                      "Portions to sweep, e.g. 0.1,0.3,0.5")->delimiter(',');
  exp_cmd->add_flag("--capture-models", exp.spec.capture_models,
                    "Write per-fold model JSON");
  exp_cmd->add_flag_callback(
      "--global-normalization",
      [&] { exp.spec.refit_normalization_per_fold = false; },
      "Trust the prepare-time pooled normalization instead of refitting on "
      "each fold's source domains");
  exp_cmd->add_option("--config", config_dummy, "JSON config file");

  // Config before flags, so explicit flags win.
  const std::string config_path = scan_config_arg(argc, argv);
  const std::string sub = scan_subcommand(argc, argv);
  try {
    if (!config_path.empty()) {
      KeyTable table;
      if (sub == "synth") {
        auto& c = synth.cfg;
        table = {
            {"domains", [&](const Json& v) { c.n_domains = v.get<std::size_t>(); }},
            {"samples", [&](const Json& v) { c.samples_per_domain = v.get<std::size_t>(); }},
            {"mmwave", [&](const Json& v) { c.n_mmwave = v.get<std::size_t>(); }},
            {"nir", [&](const Json& v) { c.n_nir = v.get<std::size_t>(); }},
            {"informative", [&](const Json& v) { c.informative_indices = v.get<std::vector<std::size_t>>(); }},
            {"effects", [&](const Json& v) { c.effect_sizes = v.get<std::vector<double>>(); }},
            {"intercept_sd", [&](const Json& v) { c.domain_intercept_sd = v.get<double>(); }},
            {"shift_sd", [&](const Json& v) { c.domain_shift_sd = v.get<double>(); }},
            {"effect_sd", [&](const Json& v) { c.domain_effect_sd = v.get<double>(); }},
            {"noise_sd", [&](const Json& v) { c.noise_sd = v.get<double>(); }},
            {"label_min", [&](const Json& v) { c.label_min = v.get<double>(); }},
            {"label_max", [&](const Json& v) { c.label_max = v.get<double>(); }},
            {"missing_rate", [&](const Json& v) { synth.emission.missing_rate = v.get<double>(); }},
            {"decoys_per_gap", [&](const Json& v) { synth.emission.decoys_per_gap = v.get<std::size_t>(); }},
            {"seed", [&](const Json& v) { synth.seed = v.get<std::uint64_t>(); }},
        };
      } else if (sub == "prepare") {
        table = {
            {"normalize", [&](const Json& v) { prepare.opt.normalize = v.get<bool>(); }},
            {"augment", [&](const Json& v) { prepare.opt.augment = v.get<bool>(); }},
            {"target", [&](const Json& v) { prepare.opt.target_per_domain = v.get<std::size_t>(); }},
            {"alpha", [&](const Json& v) { prepare.opt.mixup_alpha = v.get<double>(); }},
            {"seed", [&](const Json& v) { prepare.seed = v.get<std::uint64_t>(); }},
        };
      } else if (sub == "select") {
        table = {
            {"threshold", [&](const Json& v) { select.threshold = v.get<double>(); }},
            {"univariate", [&](const Json& v) { select.univariate = v.get<bool>(); }},
            {"reml", [&](const Json& v) { select.ml = !v.get<bool>(); }},
        };
      } else if (sub == "experiment") {
        auto& s = exp.spec;
        table = {
            {"number", [&](const Json& v) { number = v.get<int>(); }},
            {"repeats", [&](const Json& v) { s.repeats = v.get<std::size_t>(); }},
            {"train_fraction", [&](const Json& v) { s.train_fraction = v.get<double>(); }},
            {"refit_normalization_per_fold", [&](const Json& v) { s.refit_normalization_per_fold = v.get<bool>(); }},
            {"forest.n_estimators", [&](const Json& v) { s.forest.n_estimators = v.get<std::size_t>(); }},
            {"forest.max_depth", [&](const Json& v) { s.forest.max_depth = v.get<std::size_t>(); }},
            {"forest.min_samples_leaf", [&](const Json& v) { s.forest.min_samples_leaf = v.get<std::size_t>(); }},
            {"forest.features_per_split", [&](const Json& v) { s.forest.features_per_split = v.get<std::size_t>(); }},
            {"forest.bootstrap", [&](const Json& v) { s.forest.bootstrap = v.get<bool>(); }},
            {"meta.portion", [&](const Json& v) { s.meta.portion = v.get<double>(); }},
            {"meta.iterations", [&](const Json& v) { s.meta.iterations = v.get<std::size_t>(); }},
            {"meta.trees_per_iteration", [&](const Json& v) { s.meta.trees_per_iteration = v.get<std::size_t>(); }},
            {"meta.weight_temperature", [&](const Json& v) { s.meta.weight_temperature = v.get<double>(); }},
            {"mmd.fixed_sigma", [&](const Json& v) {
               s.mmd.bandwidth = glucodg::MmdConfig::Bandwidth::kFixed;
               s.mmd.fixed_sigma = v.get<double>();
             }},
            {"seed", [&](const Json& v) { exp.seed = v.get<std::uint64_t>(); }},
            {"threads", [&](const Json& v) { s.threads = v.get<unsigned>(); }},
        };
      } else {
        glucodg::fail("InvalidConfig", "--config needs a subcommand");
      }
      apply_config(config_path, table);
    }

    CLI11_PARSE(app, argc, argv);

    if (synth_cmd->parsed()) return run_synth(synth);
    if (prepare_cmd->parsed()) return run_prepare(prepare);
    if (select_cmd->parsed()) return run_select(select);
    if (exp_cmd->parsed()) {
      const glucodg::ExperimentSpec canonical = glucodg::canonical_experiment(number);
      exp.spec.number = canonical.number;
      exp.spec.series = canonical.series;
      exp.spec.feature_set = canonical.feature_set;
      exp.spec.model = canonical.model;
      return run_experiment(exp);
    }
  } catch (const glucodg::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  return 0;
}
