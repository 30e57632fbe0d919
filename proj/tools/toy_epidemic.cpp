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

// Reference simulator speaking the external line protocol.
//
//   toy-epidemic --strategy closure --seed 7 --param R0=2 --param f_v=0

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "explore/epidemic.hpp"
#include "explore/external.hpp"
#include "explore/io.hpp"

int main(int argc, char** argv) {
  using namespace explore;
  CLI::App app{"Toy household/school SEIR epidemic"};
  std::string strategy = "none";
  std::uint64_t seed = 0;
  std::vector<std::string> params;
  epidemic::EpidemicConfig config;
  app.add_option("--strategy", strategy, "none, closure or antiviral");
  app.add_option("--seed", seed)->required();
  app.add_option("--param", params, "name=value; R0 and f_v are required")->allow_extra_args(false);
  app.add_option("--population", config.population);
  app.add_option("--days", config.days);
  CLI11_PARSE(app, argc, argv);

  try {
    const auto s = epidemic::parse_strategy(strategy);
    const auto space = epidemic::epidemic_space();
    std::vector<double> theta(space.size());
    std::vector<bool> given(space.size(), false);
    for (const auto& p : params) {
      const auto eq = p.find('=');
      const auto idx = eq == std::string::npos ? std::nullopt : space.index_of(p.substr(0, eq));
      const auto value = idx ? io::parse_double(std::string_view(p).substr(eq + 1)) : std::nullopt;
      if (!value || given[*idx]) {
        std::cerr << "toy-epidemic: bad or repeated --param '" << p << "'\n";
        return 2;
      }
      theta[*idx] = *value;
      given[*idx] = true;
    }
    for (std::size_t i = 0; i < space.size(); ++i)
      if (!given[i]) {
        std::cerr << "toy-epidemic: missing --param " << space[i].name << "=<value>\n";
        return 2;
      }
    const epidemic::ToyEpidemic model(config);
    std::cout << format_protocol(epidemic::to_record(model.run(theta[0], theta[1], s, seed)));
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "toy-epidemic: " << e.what() << '\n';
    return 2;
  }
}
