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

#include <catch2/catch_amalgamated.hpp>

#include "glucodg/glucodg.hpp"

TEST_CASE("umbrella header compiles and a tiny pipeline runs") {
  glucodg::SynthConfig cfg;
  cfg.n_domains = 3;
  cfg.samples_per_domain = 12;
  cfg.n_mmwave = 4;
  cfg.n_nir = 2;
  cfg.informative_indices = {0, 2};
  cfg.effect_sizes = {0.9, -0.7};
  cfg.seed = glucodg::RngSeed{7};
  const auto synth = glucodg::generate(cfg);
  REQUIRE(synth.datasets.size() == 3);

  glucodg::PrepareOptions opt;
  opt.seed = glucodg::RngSeed{7};
  const auto prepared = glucodg::prepare_datasets(synth.datasets, synth.schema, opt);
  REQUIRE(prepared.datasets.size() == 3);
  for (const auto& ds : prepared.datasets) REQUIRE(ds.samples.size() == 12);

  glucodg::ExperimentSpec spec = glucodg::canonical_experiment(4);
  spec.forest.n_estimators = 5;
  spec.seed = glucodg::RngSeed{7};
  const auto report = glucodg::run_lodo(prepared.datasets, prepared.schema, spec);
  REQUIRE(report.folds.size() == 3);
  REQUIRE(std::isfinite(report.mean.mae));
}
