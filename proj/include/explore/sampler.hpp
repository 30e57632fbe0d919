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

#ifndef EXPLORE_SAMPLER_HPP
#define EXPLORE_SAMPLER_HPP

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "explore/errors.hpp"
#include "explore/io.hpp"
#include "explore/outcome.hpp"
#include "explore/params.hpp"
#include "explore/rng.hpp"

namespace explore {

enum class TransitionKind : std::uint8_t { initial, accepted, rejected_by_prior_kernel, rejected_by_outcome };

inline std::string_view to_string(TransitionKind k) {
  switch (k) {
    case TransitionKind::initial: return "initial";
    case TransitionKind::accepted: return "accepted";
    case TransitionKind::rejected_by_prior_kernel: return "rejected_by_prior_kernel";
    case TransitionKind::rejected_by_outcome: return "rejected_by_outcome";
  }
  return "unknown";
}

struct ChainConfig {
  std::size_t n_steps = 0;
  std::size_t thin = 1;
  std::optional<std::size_t> burn_in;  ///< defaults to 10% of n_steps
  std::uint64_t master_seed = 0;
  std::size_t init_attempts = 10000;

  [[nodiscard]] std::size_t effective_burn_in() const { return burn_in.value_or(n_steps / 10); }

  void validate() const {
    if (thin == 0) throw ContractViolation("chain config: thin must be positive");
    if (n_steps > 0 && thin > n_steps) throw ContractViolation("chain config: thin exceeds n_steps");
    const std::size_t b = effective_burn_in();
    if (n_steps > 0 ? b >= n_steps : b != 0) throw ContractViolation("chain config: burn_in must be < n_steps");
    if (init_attempts == 0) throw ContractViolation("chain config: init_attempts must be positive");
  }
};

struct TransitionCounts {
  std::size_t accepted = 0;
  std::size_t rejected_by_prior_kernel = 0;
  std::size_t rejected_by_outcome = 0;

  [[nodiscard]] std::size_t total() const noexcept {
    return accepted + rejected_by_prior_kernel + rejected_by_outcome;
  }
};

/**
 * \brief Full history of a likelihood-free chain.
 *
 * State i is the chain position after step i (state 0 is the initial point).
 * Values are stored flat, row-major, one row per step.
 */
class ChainTrace {
 public:
  ChainTrace(ParameterSpace space, ChainConfig config) : space_(std::move(space)), config_(config) {}

  [[nodiscard]] const ParameterSpace& space() const noexcept { return space_; }
  [[nodiscard]] const ChainConfig& config() const noexcept { return config_; }
  [[nodiscard]] std::size_t size() const noexcept { return kinds_.size(); }
  [[nodiscard]] TransitionKind kind(std::size_t step) const { return kinds_.at(step); }
  [[nodiscard]] const TransitionCounts& counts() const noexcept { return counts_; }
  [[nodiscard]] std::size_t init_attempts() const noexcept { return init_attempts_; }
  [[nodiscard]] std::size_t simulator_calls() const noexcept { return simulator_calls_; }

  [[nodiscard]] ParameterVector state(std::size_t step) const {
    const std::size_t d = space_.size();
    const auto first = values_.begin() + static_cast<std::ptrdiff_t>(step * d);
    return ParameterVector(std::vector<double>(first, first + static_cast<std::ptrdiff_t>(d)));
  }

  /// Thinned post-burn-in states under the trace's own configuration.
  [[nodiscard]] std::vector<ParameterVector> retained() const;

  void push(const ParameterVector& theta, TransitionKind kind) {
    values_.insert(values_.end(), theta.begin(), theta.end());
    kinds_.push_back(kind);
    switch (kind) {
      case TransitionKind::accepted: ++counts_.accepted; break;
      case TransitionKind::rejected_by_prior_kernel: ++counts_.rejected_by_prior_kernel; break;
      case TransitionKind::rejected_by_outcome: ++counts_.rejected_by_outcome; break;
      case TransitionKind::initial: break;
    }
  }

  void set_init_attempts(std::size_t n) noexcept { init_attempts_ = n; }
  void set_simulator_calls(std::size_t n) noexcept { simulator_calls_ = n; }

  friend bool operator==(const ChainTrace& a, const ChainTrace& b) {
    return a.space_ == b.space_ && a.values_ == b.values_ && a.kinds_ == b.kinds_ &&
           a.init_attempts_ == b.init_attempts_;
  }

 private:
  ParameterSpace space_;
  ChainConfig config_;
  std::vector<double> values_;
  std::vector<TransitionKind> kinds_;
  TransitionCounts counts_;
  std::size_t init_attempts_ = 0;
  std::size_t simulator_calls_ = 0;
};

/**
 * Re-slices a stored trace: states at steps s >= max(1, burn_in) with
 * s % thin == 0. The initial state is never part of the sample.
 */
inline std::vector<ParameterVector> extract_samples(const ChainTrace& trace, std::size_t burn_in,
                                                    std::size_t thin) {
  if (thin == 0) throw ContractViolation("extract_samples: thin must be positive");
  if (trace.size() == 0) return {};
  const std::size_t last = trace.size() - 1;
  if (burn_in > last && last > 0) throw ContractViolation("extract_samples: burn_in beyond end of trace");
  std::vector<ParameterVector> out;
  std::size_t first = std::max<std::size_t>(1, burn_in);
  first = ((first + thin - 1) / thin) * thin;
  for (std::size_t s = first; s <= last; s += thin) out.push_back(trace.state(s));
  return out;
}

inline std::vector<ParameterVector> ChainTrace::retained() const {
  return extract_samples(*this, config_.effective_burn_in(), config_.thin);
}

struct AcceptanceRates {
  double accepted = 0.0;
  double rejected_by_prior_kernel = 0.0;
  double rejected_by_outcome = 0.0;
};

inline AcceptanceRates acceptance_report(const ChainTrace& trace) {
  const auto& c = trace.counts();
  const double n = static_cast<double>(c.total());
  if (n == 0.0) return {};
  return {static_cast<double>(c.accepted) / n, static_cast<double>(c.rejected_by_prior_kernel) / n,
          static_cast<double>(c.rejected_by_outcome) / n};
}

/**
 * \brief Likelihood-free Metropolis-Hastings chain targeting P(theta | outcome).
 *
 * Each step proposes theta', applies the prior/kernel Hastings test, and only if
 * that passes runs one simulation at theta'; the move is accepted iff the
 * outcome holds. Simulation k (by step) draws from substream ("sim", k) so the
 * chain is reproducible from the master seed alone.
 *
 * Without an explicit start, the initial state is drawn from the prior and
 * simulated until the outcome holds, up to config.init_attempts tries.
 */
template <OutcomeSimulator S, Prior P>
ChainTrace run_chain(const S& sim, const P& prior, const UniformWindowKernel& kernel, const ChainConfig& config,
                     const std::optional<ParameterVector>& initial = std::nullopt) {
  config.validate();
  const ParameterSpace& space = prior.space();
  space.require_dimension(kernel.half_widths().size(), "run_chain (kernel)");

  ChainTrace trace(space, config);
  std::size_t sim_calls = 0;

  RngStream init_rng = RngStream::derive(config.master_seed, "init");
  std::optional<ParameterVector> start;
  std::size_t attempt = 0;
  if (initial) {
    space.require_dimension(initial->size(), "run_chain (initial)");
    if (prior.density(*initial) <= 0.0) throw ContractViolation("run_chain: initial state outside prior support");
  }
  for (; attempt < config.init_attempts && !start; ++attempt) {
    ParameterVector candidate = initial ? *initial : prior.sample(init_rng);
    RngStream sim_rng = RngStream::derive(config.master_seed, "init-sim", attempt);
    ++sim_calls;
    if (sim(to_simulator_input(space, candidate), sim_rng).outcome_holds) start = std::move(candidate);
  }
  if (!start)
    throw InitializationError("chain initialization failed: outcome never held in " +
                                  std::to_string(config.init_attempts) + " attempts",
                              config.init_attempts);
  trace.set_init_attempts(attempt);

  ParameterVector current = *start;
  trace.push(current, TransitionKind::initial);

  RngStream chain_rng = RngStream::derive(config.master_seed, "chain");
  for (std::size_t step = 1; step <= config.n_steps; ++step) {
    ParameterVector proposed = kernel.propose(current, space, chain_rng);
    const double h = hastings_ratio(prior, kernel, current, proposed);
    if (h < 1.0 && !(chain_rng.uniform() < h)) {
      trace.push(current, TransitionKind::rejected_by_prior_kernel);
      continue;
    }
    RngStream sim_rng = RngStream::derive(config.master_seed, "sim", step);
    ++sim_calls;
    if (sim(to_simulator_input(space, proposed), sim_rng).outcome_holds) {
      current = std::move(proposed);
      trace.push(current, TransitionKind::accepted);
    } else {
      trace.push(current, TransitionKind::rejected_by_outcome);
    }
  }
  trace.set_simulator_calls(sim_calls);
  return trace;
}

/// CSV: `step,kind,<dim names...>`, one row per step.
inline void write_trace_csv(std::ostream& os, const ChainTrace& trace,
                            const std::optional<io::Provenance>& provenance = std::nullopt) {
  io::write_provenance(os, provenance);
  os << "step,kind";
  for (const auto& d : trace.space().dims()) os << ',' << d.name;
  os << '\n';
  for (std::size_t s = 0; s < trace.size(); ++s) {
    os << s << ',' << to_string(trace.kind(s));
    for (double v : trace.state(s)) os << ',' << io::format_double(v);
    os << '\n';
  }
}

/// CSV of parameter vectors with a header of dimension names.
inline void write_samples_csv(std::ostream& os, const ParameterSpace& space, const std::vector<ParameterVector>& pts,
                              const std::optional<io::Provenance>& provenance = std::nullopt) {
  io::write_provenance(os, provenance);
  for (std::size_t i = 0; i < space.size(); ++i) os << (i ? "," : "") << space[i].name;
  os << '\n';
  for (const auto& p : pts) {
    for (std::size_t i = 0; i < p.size(); ++i) os << (i ? "," : "") << io::format_double(p[i]);
    os << '\n';
  }
}

}  // namespace explore

#endif
