// Copyright 2026 The Explore Authors
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

// explore: run, validate or grid-search an experiment config.
//
// Exit codes: 0 success, 2 config error, 3 simulator error, 4 numerical failure.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "explore/experiment.hpp"

namespace {

enum Exit { kOk = 0, kConfig = 2, kSimulator = 3, kNumerical = 4 };

template <typename Fn>
int guarded(Fn&& fn) {
  using namespace explore;
  try {
    fn();
    return kOk;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const ContractViolation& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const SimulatorError& e) {
    std::cerr << "simulator error: " << e.what() << '\n';
    if (!e.captured_stderr().empty()) std::cerr << "--- simulator stderr ---\n" << e.captured_stderr();
    if (!e.captured_stdout().empty()) std::cerr << "--- simulator stdout ---\n" << e.captured_stdout();
    return kSimulator;
  } catch (const InitializationError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  } catch (const KdeFitError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  } catch (const DomainError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  }
}

}  // namespace

int main(int argc, char** argv) {
  using namespace explore;
  CLI::App app{"Likelihood-free MCMC exploration of simulation experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  std::optional<std::string> out_dir;

  auto* run = app.add_subcommand("run", "chain, KDE, importance sampling, surface (and optional extras)");
  auto* validate = app.add_subcommand("validate", "check a config without running anything");
  auto* grid = app.add_subcommand("grid", "replicate grid baseline only");
  for (auto* sub : {run, validate, grid}) sub->add_option("config", config_path, "experiment JSON")->required();
  for (auto* sub : {run, grid}) {
    sub->add_option("--seed", seed, "override the master seed");
    sub->add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--out", out_dir, "output directory");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfig;
  }

  if (validate->parsed()) {
    return guarded([&] {
      const auto errors = validate_config(load_json_file(config_path));
      if (!errors.empty()) {
        std::string msg = config_path + " is invalid:";
        for (const auto& e : errors) msg += "\n  " + e;
        throw ConfigError(msg);
      }
      std::cout << config_path << ": ok\n";
    });
  }

  return guarded([&] {
    ExperimentConfig c = load_config(config_path);
    if (seed) c.seed = *seed;
    if (workers) c.workers = *workers;
    if (out_dir) c.output = *out_dir;
    const ExperimentResult r = run->parsed() ? run_experiment(c) : run_grid_only(c);
    std::cout << "config " << r.config_hash << ", seed " << c.seed << ", output " << c.output << '\n';
    if (run->parsed()) {
      std::cout << "P(R) = " << io::format_double(r.outcome.p_hat) << " +/- " << io::format_double(r.outcome.std_error)
                << " (M = " << r.outcome.draws << ")\n";
      if (r.complement) std::cout << "complement gap = " << io::format_double(r.complement->gap) << '\n';
    }
    for (const auto& a : r.artifacts) std::cout << "  " << a << '\n';
  });
}
