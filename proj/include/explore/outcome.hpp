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

#ifndef EXPLORE_OUTCOME_HPP
#define EXPLORE_OUTCOME_HPP

#include <concepts>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <utility>

#include "explore/params.hpp"
#include "explore/rng.hpp"

namespace explore {

/// Result of one simulation: whether the outcome event occurred, plus auxiliary observables.
struct OutcomeRecord {
  bool outcome_holds = false;
  std::map<std::string, double> metrics;

  friend bool operator==(const OutcomeRecord&, const OutcomeRecord&) = default;
};

/**
 * A simulator fused with its outcome predicate. Calls must be deterministic
 * given (theta, stream state) and safe to make concurrently on a const object.
 */
template <typename S>
concept OutcomeSimulator = requires(const S& sim, const ParameterVector& theta, RngStream& rng) {
  { sim(theta, rng) } -> std::convertible_to<OutcomeRecord>;
};

/// Type-erased simulator for run-time selection (CLI, configs).
class AnySimulator {
 public:
  using Fn = std::function<OutcomeRecord(const ParameterVector&, RngStream&)>;

  AnySimulator() = default;
  explicit AnySimulator(Fn fn) : fn_(std::make_shared<const Fn>(std::move(fn))) {}

  template <OutcomeSimulator S>
    requires(!std::same_as<std::remove_cvref_t<S>, AnySimulator>)
  explicit AnySimulator(S sim)
      : fn_(std::make_shared<const Fn>([s = std::move(sim)](const ParameterVector& t, RngStream& r) {
          return OutcomeRecord(s(t, r));
        })) {}

  OutcomeRecord operator()(const ParameterVector& theta, RngStream& rng) const { return (*fn_)(theta, rng); }

  [[nodiscard]] explicit operator bool() const noexcept { return fn_ != nullptr; }

 private:
  std::shared_ptr<const Fn> fn_;
};

/// The complement event: same simulation, negated predicate.
template <OutcomeSimulator S>
class Negated {
 public:
  explicit Negated(S sim) : sim_(std::move(sim)) {}

  OutcomeRecord operator()(const ParameterVector& theta, RngStream& rng) const {
    OutcomeRecord r = sim_(theta, rng);
    r.outcome_holds = !r.outcome_holds;
    return r;
  }

 private:
  S sim_;
};

/// Outcome holds with probability theta[0]; the analytic oracle used throughout the tests.
struct BernoulliOracle {
  OutcomeRecord operator()(const ParameterVector& theta, RngStream& rng) const {
    const double u = rng.uniform();
    OutcomeRecord r;
    r.outcome_holds = u < theta[0];
    r.metrics["u"] = u;
    return r;
  }
};

}  // namespace explore

#endif
