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

#ifndef EXPLORE_EPIDEMIC_HPP
#define EXPLORE_EPIDEMIC_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "explore/errors.hpp"
#include "explore/external.hpp"
#include "explore/outcome.hpp"
#include "explore/params.hpp"
#include "explore/rng.hpp"

namespace explore::epidemic {

enum class Strategy { none, closure, antiviral };

inline std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::none: return "none";
    case Strategy::closure: return "closure";
    case Strategy::antiviral: return "antiviral";
  }
  return "none";
}

inline Strategy parse_strategy(std::string_view s) {
  if (s == "none") return Strategy::none;
  if (s == "closure") return Strategy::closure;
  if (s == "antiviral") return Strategy::antiviral;
  throw ContractViolation("unknown epidemic strategy '" + std::string(s) + "' (expected none, closure, antiviral)");
}

/**
 * \brief Fixed synthetic two-layer contact structure.
 *
 * Households of 1-6 people (first two members adults, the rest children),
 * children in schools, most adults in small workplaces. Built from a fixed seed
 * so every simulation shares one structure.
 */
struct ContactNetwork {
  std::size_t people = 0;
  std::vector<std::uint32_t> household;  // per person
  std::vector<std::int32_t> group;       // per person, -1 for none
  std::vector<bool> child;
  std::vector<std::vector<std::uint32_t>> household_members;
  std::vector<std::uint32_t> group_size;
  std::vector<bool> group_is_school;

  static ContactNetwork build(std::size_t people, std::uint64_t structure_seed = 20120101) {
    constexpr double kSizeWeights[6] = {0.26, 0.33, 0.16, 0.14, 0.07, 0.04};
    constexpr std::size_t kSchoolSize = 250;
    constexpr std::size_t kWorkplaceSize = 20;
    constexpr double kEmployed = 0.7;

    RngStream rng = RngStream::derive(structure_seed, "contact-network");
    ContactNetwork net;
    net.people = people;
    std::vector<std::uint32_t> children, workers;
    while (net.household.size() < people) {
      double u = rng.uniform();
      std::size_t size = 1;
      for (double w : kSizeWeights) {
        if (u < w) break;
        u -= w;
        ++size;
      }
      size = std::min({size, std::size_t{6}, people - net.household.size()});
      const auto h = static_cast<std::uint32_t>(net.household_members.size());
      net.household_members.emplace_back();
      for (std::size_t k = 0; k < size; ++k) {
        const auto id = static_cast<std::uint32_t>(net.household.size());
        net.household.push_back(h);
        net.household_members.back().push_back(id);
        const bool is_child = k >= 2;
        net.child.push_back(is_child);
        if (is_child) children.push_back(id);
        else if (rng.uniform() < kEmployed) workers.push_back(id);
      }
    }
    net.group.assign(people, -1);
    auto assign = [&](const std::vector<std::uint32_t>& members, std::size_t target, bool school) {
      const std::size_t groups = std::max<std::size_t>(1, (members.size() + target / 2) / target);
      const auto first = static_cast<std::uint32_t>(net.group_size.size());
      net.group_size.resize(net.group_size.size() + groups, 0);
      net.group_is_school.resize(net.group_size.size(), school);
      for (auto id : members) {
        const auto g = first + static_cast<std::uint32_t>(rng.uniform_index(groups));
        net.group[id] = static_cast<std::int32_t>(g);
        ++net.group_size[g];
      }
    };
    if (!children.empty()) assign(children, kSchoolSize, true);
    if (!workers.empty()) assign(workers, kWorkplaceSize, false);
    return net;
  }

  /// Person-averaged number of household contacts.
  [[nodiscard]] double mean_household_contacts() const {
    double s = 0.0;
    for (const auto& m : household_members) s += static_cast<double>(m.size() * (m.size() - 1));
    return s / static_cast<double>(people);
  }

  /// Fraction of people in a school (or, with schools=false, in a workplace).
  [[nodiscard]] double group_fraction(bool schools) const {
    std::size_t k = 0;
    for (auto g : group)
      if (g >= 0 && group_is_school[static_cast<std::size_t>(g)] == schools) ++k;
    return static_cast<double>(k) / static_cast<double>(people);
  }
};

struct EpidemicConfig {
  std::size_t population = 10000;
  std::size_t days = 180;
  std::size_t initial_infected = 10;
  std::size_t seeded_daily = 1;
  double latent_days = 1.5;      ///< mean, geometric
  double infectious_days = 3.0;  ///< mean, geometric
  double symptomatic_fraction = 0.67;
  double asymptomatic_infectiousness = 0.5;
  double household_share = 0.3;  ///< share of R0 carried by household contacts
  double school_share = 0.4;     ///< share of R0 carried by school contacts; workplaces take the rest
  double ascertainment_fraction = 0.8;
  std::size_t ascertainment_delay = 1;
  /// Response begins once the ascertained, currently symptomatic cases reach this fraction of the population.
  double response_threshold = 0.008;
  std::size_t closure_days = 14;
  double closure_household_boost = 1.5;    ///< children's household hazard while schools are closed
  double antiviral_infectiousness = 0.62;  ///< efficacy: reduction of a treated case's transmission
  double antiviral_susceptibility = 0.3;   ///< efficacy: reduction of a treated contact's susceptibility
  std::size_t antiviral_course_days = 10;
};

struct EpidemicMetrics {
  double peak = 0.0;   ///< maximum number of simultaneously symptomatic people
  double total = 0.0;  ///< cumulative symptomatic people
  double response_day = -1.0;

  friend bool operator==(const EpidemicMetrics&, const EpidemicMetrics&) = default;
};

/**
 * \brief Discrete-time stochastic SEIR on a household + school/workplace network.
 *
 * Day t draws from substream ("day", t) of the seed stream, so two strategies
 * run with one seed follow the same path until the response starts.
 * `closure` shuts school groups for closure_days after the trigger; `antiviral`
 * treats each ascertained case's household from the trigger onward, lowering
 * household transmission from and to treated members.
 */
class ToyEpidemic {
 public:
  explicit ToyEpidemic(EpidemicConfig config = {})
      : config_(config), net_(std::make_shared<const ContactNetwork>(ContactNetwork::build(config.population))) {}

  [[nodiscard]] const EpidemicConfig& config() const noexcept { return config_; }
  [[nodiscard]] const ContactNetwork& network() const noexcept { return *net_; }

  [[nodiscard]] EpidemicMetrics run(double r0, double vaccinated_fraction, Strategy strategy, std::uint64_t seed) const {
    const auto& net = *net_;
    const std::size_t N = net.people;
    const auto& c = config_;

    enum State : std::uint8_t { S, E, I, R };
    std::vector<State> state(N, S);
    std::vector<bool> symptomatic(N, false), ascertained(N, false);
    std::vector<std::int64_t> treated_until(net.household_members.size(), -1);
    std::vector<std::int32_t> ascertain_on(N, -1);

    const double mean_inf = c.symptomatic_fraction + (1.0 - c.symptomatic_fraction) * c.asymptomatic_infectiousness;
    const double per_day = r0 / (c.infectious_days * mean_inf);
    const double beta_h = c.household_share * per_day / std::max(1e-9, net.mean_household_contacts());
    const double beta_school = c.school_share * per_day / std::max(1e-9, net.group_fraction(true));
    const double beta_work =
        (1.0 - c.household_share - c.school_share) * per_day / std::max(1e-9, net.group_fraction(false));
    const double p_onset = 1.0 / c.latent_days;
    const double p_recover = 1.0 / c.infectious_days;

    RngStream setup = RngStream::derive(seed, "setup");
    {
      std::vector<std::uint32_t> order(N);
      for (std::uint32_t i = 0; i < N; ++i) order[i] = i;
      const auto vaccinated = static_cast<std::size_t>(std::llround(vaccinated_fraction * static_cast<double>(N)));
      for (std::size_t i = 0; i < vaccinated && i < N; ++i) {
        std::swap(order[i], order[i + setup.uniform_index(N - i)]);
        state[order[i]] = R;
      }
    }
    auto infect_random = [&](RngStream& rng, std::size_t count) {
      for (std::size_t k = 0; k < count; ++k) {
        for (int tries = 0; tries < 64; ++tries) {
          const auto id = rng.uniform_index(N);
          if (state[id] == S) {
            state[id] = E;
            break;
          }
        }
      }
    };
    infect_random(setup, c.initial_infected);

    EpidemicMetrics m;
    std::size_t current_symptomatic = 0, current_ascertained = 0;
    std::int64_t response_start = -1;
    const auto threshold = static_cast<std::size_t>(std::ceil(c.response_threshold * static_cast<double>(N)));

    std::vector<double> house_pressure(net.household_members.size()), group_pressure(net.group_size.size());
    std::vector<std::uint32_t> newly_exposed, newly_infectious, newly_recovered;

    for (std::size_t day = 0; day < c.days; ++day) {
      RngStream rng = RngStream::derive(seed, "day", day);
      const bool schools_closed = strategy == Strategy::closure && response_start >= 0 &&
                                  static_cast<std::int64_t>(day) < response_start + static_cast<std::int64_t>(c.closure_days);
      const bool antivirals = strategy == Strategy::antiviral && response_start >= 0;

      std::fill(house_pressure.begin(), house_pressure.end(), 0.0);
      std::fill(group_pressure.begin(), group_pressure.end(), 0.0);
      for (std::size_t i = 0; i < N; ++i) {
        if (state[i] != I) continue;
        const double inf = symptomatic[i] ? 1.0 : c.asymptomatic_infectiousness;
        const bool treated = treated_until[net.household[i]] >= static_cast<std::int64_t>(day);
        const double home = treated ? 1.0 - c.antiviral_infectiousness : 1.0;
        house_pressure[net.household[i]] += inf * home;
        const auto g = net.group[i];
        if (g >= 0 && !(schools_closed && net.group_is_school[static_cast<std::size_t>(g)]))
          group_pressure[static_cast<std::size_t>(g)] += inf;
      }

      newly_exposed.clear();
      newly_infectious.clear();
      newly_recovered.clear();
      for (std::size_t i = 0; i < N; ++i) {
        switch (state[i]) {
          case S: {
            const auto h = net.household[i];
            double home = beta_h * house_pressure[h];
            if (treated_until[h] >= static_cast<std::int64_t>(day)) home *= 1.0 - c.antiviral_susceptibility;
            if (schools_closed && net.child[i]) home *= c.closure_household_boost;
            double away = 0.0;
            const auto g = net.group[i];
            if (g >= 0) {
              const auto gi = static_cast<std::size_t>(g);
              away = (net.group_is_school[gi] ? beta_school : beta_work) * group_pressure[gi] /
                     static_cast<double>(net.group_size[gi]);
            }
            const double hazard = home + away;
            if (hazard > 0.0 && rng.uniform() < -std::expm1(-hazard)) newly_exposed.push_back(static_cast<std::uint32_t>(i));
            break;
          }
          case E:
            if (rng.uniform() < p_onset) newly_infectious.push_back(static_cast<std::uint32_t>(i));
            break;
          case I:
            if (rng.uniform() < p_recover) newly_recovered.push_back(static_cast<std::uint32_t>(i));
            break;
          case R: break;
        }
      }

      for (auto i : newly_recovered) {
        state[i] = R;
        if (symptomatic[i]) --current_symptomatic;
        if (ascertained[i]) --current_ascertained;
      }
      for (auto i : newly_infectious) {
        state[i] = I;
        if (rng.uniform() < c.symptomatic_fraction) {
          symptomatic[i] = true;
          ++current_symptomatic;
          m.total += 1.0;
          if (rng.uniform() < c.ascertainment_fraction)
            ascertain_on[i] = static_cast<std::int32_t>(day + c.ascertainment_delay);
        }
      }
      for (auto i : newly_exposed) state[i] = E;
      infect_random(rng, c.seeded_daily);

      for (std::size_t i = 0; i < N; ++i) {
        if (ascertain_on[i] != static_cast<std::int32_t>(day)) continue;
        if (state[i] != I) continue;
        ascertained[i] = true;
        ++current_ascertained;
        if (antivirals)
          treated_until[net.household[i]] = static_cast<std::int64_t>(day + c.antiviral_course_days);
      }
      if (response_start < 0 && current_ascertained >= threshold) {
        response_start = static_cast<std::int64_t>(day) + 1;
        m.response_day = static_cast<double>(response_start);
      }
      m.peak = std::max(m.peak, static_cast<double>(current_symptomatic));
    }
    return m;
  }

 private:
  EpidemicConfig config_;
  std::shared_ptr<const ContactNetwork> net_;
};

/// Bounds used for (R0, f_v).
inline ParameterSpace epidemic_space() { return ParameterSpace{{"R0", 1.2, 3.0, false}, {"f_v", 0.0, 0.7, false}}; }

inline OutcomeRecord to_record(const EpidemicMetrics& m) {
  OutcomeRecord r;
  r.outcome_holds = true;
  r.metrics["peak"] = m.peak;
  r.metrics["total"] = m.total;
  return r;
}

/// In-process counterpart of the toy-epidemic executable: same seed, same record.
inline SeededSimulator strategy_side(std::shared_ptr<const ToyEpidemic> model, Strategy strategy) {
  return [model = std::move(model), strategy](const ParameterVector& theta, std::uint64_t seed) {
    return to_record(model->run(theta[0], theta[1], strategy, seed));
  };
}

}  // namespace explore::epidemic

#endif
