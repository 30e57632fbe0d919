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

#ifndef EXPLORE_PARAMS_HPP
#define EXPLORE_PARAMS_HPP

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <initializer_list>
#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "explore/errors.hpp"
#include "explore/rng.hpp"

namespace explore {

struct Dimension {
  std::string name;
  double lower = 0.0;
  double upper = 1.0;
  bool integer_valued = false;

  [[nodiscard]] double width() const noexcept { return upper - lower; }
  [[nodiscard]] bool contains(double x) const noexcept { return x >= lower && x <= upper; }
};

/// Ordered, named, bounded real dimensions.
class ParameterSpace {
 public:
  ParameterSpace() = default;

  explicit ParameterSpace(std::vector<Dimension> dims) : dims_(std::move(dims)) {
    std::unordered_set<std::string> seen;
    for (const auto& d : dims_) {
      if (d.name.empty()) throw ContractViolation("parameter space: empty dimension name");
      if (!seen.insert(d.name).second)
        throw ContractViolation("parameter space: duplicate dimension name '" + d.name + "'");
      if (!(std::isfinite(d.lower) && std::isfinite(d.upper)) || !(d.lower < d.upper))
        throw ContractViolation("parameter space: dimension '" + d.name + "' requires lower < upper");
      if (d.integer_valued && (d.lower != std::round(d.lower) || d.upper != std::round(d.upper)))
        throw ContractViolation("parameter space: integer dimension '" + d.name + "' needs integer bounds");
    }
  }

  ParameterSpace(std::initializer_list<Dimension> dims) : ParameterSpace(std::vector<Dimension>(dims)) {}

  [[nodiscard]] std::size_t size() const noexcept { return dims_.size(); }
  [[nodiscard]] const Dimension& operator[](std::size_t i) const { return dims_[i]; }
  [[nodiscard]] const std::vector<Dimension>& dims() const noexcept { return dims_; }

  [[nodiscard]] std::optional<std::size_t> index_of(std::string_view name) const {
    for (std::size_t i = 0; i < dims_.size(); ++i)
      if (dims_[i].name == name) return i;
    return std::nullopt;
  }

  [[nodiscard]] double volume() const noexcept {
    double v = 1.0;
    for (const auto& d : dims_) v *= d.width();
    return v;
  }

  [[nodiscard]] bool contains(std::span<const double> theta) const noexcept {
    if (theta.size() != dims_.size()) return false;
    for (std::size_t i = 0; i < dims_.size(); ++i)
      if (!dims_[i].contains(theta[i])) return false;
    return true;
  }

  void require_dimension(std::size_t n, const char* who) const {
    if (n != dims_.size())
      throw ContractViolation(std::string(who) + ": dimension mismatch (got " + std::to_string(n) +
                              ", space has " + std::to_string(dims_.size()) + ")");
  }

  friend bool operator==(const ParameterSpace& a, const ParameterSpace& b) {
    if (a.dims_.size() != b.dims_.size()) return false;
    for (std::size_t i = 0; i < a.dims_.size(); ++i) {
      const auto& x = a.dims_[i];
      const auto& y = b.dims_[i];
      if (x.name != y.name || x.lower != y.lower || x.upper != y.upper || x.integer_valued != y.integer_valued)
        return false;
    }
    return true;
  }

 private:
  std::vector<Dimension> dims_;
};

/// A point of a ParameterSpace. Chain states stay real-valued even on integer dimensions.
class ParameterVector {
 public:
  ParameterVector() = default;
  explicit ParameterVector(std::vector<double> values) : values_(std::move(values)) {}
  ParameterVector(std::initializer_list<double> values) : values_(values) {}

  [[nodiscard]] std::size_t size() const noexcept { return values_.size(); }
  [[nodiscard]] double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }
  [[nodiscard]] std::span<const double> values() const noexcept { return values_; }
  [[nodiscard]] auto begin() const noexcept { return values_.begin(); }
  [[nodiscard]] auto end() const noexcept { return values_.end(); }

  friend bool operator==(const ParameterVector&, const ParameterVector&) = default;

 private:
  std::vector<double> values_;
};

/// The vector handed to a simulator: integer dimensions rounded half away from zero.
inline ParameterVector to_simulator_input(const ParameterSpace& space, const ParameterVector& theta) {
  space.require_dimension(theta.size(), "to_simulator_input");
  ParameterVector out = theta;
  for (std::size_t i = 0; i < space.size(); ++i)
    if (space[i].integer_valued) out[i] = std::round(theta[i]);
  return out;
}

/// Anything usable as a prior over a ParameterSpace.
template <typename P>
concept Prior = requires(const P& p, const ParameterVector& theta, RngStream& rng) {
  { p.space() } -> std::convertible_to<const ParameterSpace&>;
  { p.density(theta) } -> std::convertible_to<double>;
  { p.sample(rng) } -> std::convertible_to<ParameterVector>;
};

class UniformBoxPrior {
 public:
  explicit UniformBoxPrior(ParameterSpace space) : space_(std::move(space)), density_(1.0 / space_.volume()) {}

  [[nodiscard]] const ParameterSpace& space() const noexcept { return space_; }

  /// 1/volume inside the box, 0 outside.
  [[nodiscard]] double density(const ParameterVector& theta) const {
    space_.require_dimension(theta.size(), "prior_density");
    return space_.contains(theta.values()) ? density_ : 0.0;
  }

  /// Uniform per dimension; integer dimensions uniform over their integer range.
  [[nodiscard]] ParameterVector sample(RngStream& rng) const {
    std::vector<double> v(space_.size());
    for (std::size_t i = 0; i < space_.size(); ++i) {
      const auto& d = space_[i];
      if (d.integer_valued) {
        v[i] = static_cast<double>(
            rng.uniform_int(static_cast<std::int64_t>(d.lower), static_cast<std::int64_t>(d.upper)));
      } else {
        v[i] = std::min(d.upper, rng.uniform(d.lower, d.upper));
      }
    }
    return ParameterVector(std::move(v));
  }

 private:
  ParameterSpace space_;
  double density_;
};

inline ParameterVector prior_sample(const UniformBoxPrior& prior, RngStream& rng) { return prior.sample(rng); }
inline double prior_density(const UniformBoxPrior& prior, const ParameterVector& theta) {
  return prior.density(theta);
}

/// Folds x back into [lower, upper] by repeated reflection at the walls.
inline double reflect_into(double x, double lower, double upper) noexcept {
  const double w = upper - lower;
  double y = std::fmod(x - lower, 2.0 * w);
  if (y < 0.0) y += 2.0 * w;
  if (y > w) y = 2.0 * w - y;
  return lower + y;
}

/**
 * \brief Uniform random-walk proposal on a box, reflected at the walls.
 *
 * theta' = reflect(theta + u), u uniform on the product of [-w_i, +w_i].
 * Reflection is a measure-preserving fold, so the kernel stays symmetric.
 */
class UniformWindowKernel {
 public:
  explicit UniformWindowKernel(std::vector<double> half_widths) : half_widths_(std::move(half_widths)) {
    for (double w : half_widths_)
      if (!(w >= 0.0) || !std::isfinite(w)) throw ContractViolation("proposal half-widths must be finite and >= 0");
  }

  /// Half-width set to a fraction of each dimension's width.
  static UniformWindowKernel relative(const ParameterSpace& space, double fraction) {
    std::vector<double> w(space.size());
    for (std::size_t i = 0; i < space.size(); ++i) w[i] = fraction * space[i].width();
    return UniformWindowKernel(std::move(w));
  }

  [[nodiscard]] const std::vector<double>& half_widths() const noexcept { return half_widths_; }

  [[nodiscard]] ParameterVector propose(const ParameterVector& theta, const ParameterSpace& space,
                                        RngStream& rng) const {
    space.require_dimension(theta.size(), "propose");
    space.require_dimension(half_widths_.size(), "propose (kernel)");
    ParameterVector out = theta;
    for (std::size_t i = 0; i < space.size(); ++i) {
      const double w = half_widths_[i];
      if (w == 0.0) continue;
      const double raw = theta[i] + rng.uniform(-w, w);
      out[i] = reflect_into(raw, space[i].lower, space[i].upper);
    }
    return out;
  }

  /**
   * Density of proposing `to` from `from`. Sums the uniform window over every
   * mirror image of `to`. Dimensions with zero half-width contribute a factor of
   * one when the coordinates agree and zero otherwise.
   */
  [[nodiscard]] double transition_density(const ParameterVector& from, const ParameterVector& to,
                                          const ParameterSpace& space) const {
    double q = 1.0;
    for (std::size_t i = 0; i < space.size(); ++i) {
      const double w = half_widths_[i];
      const double lo = space[i].lower;
      const double width = space[i].width();
      if (w == 0.0) {
        if (from[i] != to[i]) return 0.0;
        continue;
      }
      if (!space[i].contains(to[i])) return 0.0;
      const double a = from[i] - w;
      const double b = from[i] + w;
      int images = 0;
      const double period = 2.0 * width;
      const auto kmin = static_cast<long>(std::floor((a - lo - 2.0 * width) / period)) - 1;
      const auto kmax = static_cast<long>(std::ceil((b - lo) / period)) + 1;
      for (long k = kmin; k <= kmax; ++k) {
        const double shift = static_cast<double>(k) * period;
        const double direct = to[i] + shift;
        const double mirrored = 2.0 * lo - to[i] + shift;
        if (direct >= a && direct <= b) ++images;
        // A point on a wall is its own mirror; count it once.
        if (mirrored != direct && mirrored >= a && mirrored <= b) ++images;
      }
      q *= static_cast<double>(images) / (2.0 * w);
    }
    return q;
  }

 private:
  std::vector<double> half_widths_;
};

inline ParameterVector propose(const UniformWindowKernel& kernel, const ParameterVector& theta,
                               const ParameterSpace& space, RngStream& rng) {
  return kernel.propose(theta, space, rng);
}

/// min(1, P(theta') q(theta'->theta) / (P(theta) q(theta->theta'))).
template <Prior P>
double hastings_ratio(const P& prior, const UniformWindowKernel& kernel, const ParameterVector& current,
                      const ParameterVector& proposed) {
  const auto& space = prior.space();
  space.require_dimension(current.size(), "hastings_ratio");
  space.require_dimension(proposed.size(), "hastings_ratio");
  const double numerator_prior = prior.density(proposed);
  if (numerator_prior == 0.0) return 0.0;
  const double denominator = prior.density(current) * kernel.transition_density(current, proposed, space);
  if (!(denominator > 0.0))
    throw ContractViolation("hastings_ratio: current state has zero prior or transition density");
  const double numerator = numerator_prior * kernel.transition_density(proposed, current, space);
  return std::min(1.0, numerator / denominator);
}

}  // namespace explore

#endif
