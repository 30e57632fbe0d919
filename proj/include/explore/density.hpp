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

#ifndef EXPLORE_DENSITY_HPP
#define EXPLORE_DENSITY_HPP

#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "explore/errors.hpp"
#include "explore/params.hpp"
#include "explore/rng.hpp"
#include "json.hpp"

namespace explore {

namespace detail {

/// Pairwise (tree) summation; error grows as O(log n) and the result is far less order-sensitive.
inline double pairwise_sum(std::span<const double> xs) {
  if (xs.size() <= 8) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s;
  }
  const std::size_t half = xs.size() / 2;
  return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

inline double std_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

}  // namespace detail

struct KdeOptions {
  /// Truncate each Gaussian component to the support box and renormalise it.
  bool truncated = true;
  /// On zero variance, fall back to bandwidth = width / 100 instead of failing.
  bool allow_degenerate = false;
};

/**
 * \brief Product-Gaussian kernel density estimate with per-dimension bandwidths.
 *
 * Immutable once fitted; density() is safe to call concurrently.
 */
class KdeModel {
 public:
  KdeModel(ParameterSpace support, std::vector<double> points, std::vector<double> bandwidths, bool truncated,
           std::vector<std::string> degenerate_dims = {})
      : support_(std::move(support)),
        points_(std::move(points)),
        bandwidths_(std::move(bandwidths)),
        truncated_(truncated),
        degenerate_dims_(std::move(degenerate_dims)) {
    const std::size_t d = support_.size();
    if (d == 0 || bandwidths_.size() != d || points_.size() % d != 0 || points_.empty())
      throw ContractViolation("KdeModel: inconsistent dimensions");
    for (double h : bandwidths_)
      if (!(h > 0.0) || !std::isfinite(h)) throw ContractViolation("KdeModel: bandwidths must be positive");
    n_ = points_.size() / d;

    double log_norm = 0.0;
    for (double h : bandwidths_) log_norm -= std::log(h * std::sqrt(2.0 * std::numbers::pi));
    weights_.resize(n_);
    for (std::size_t i = 0; i < n_; ++i) {
      double w = std::exp(log_norm) / static_cast<double>(n_);
      if (truncated_) {
        for (std::size_t j = 0; j < d; ++j) {
          const double x = points_[i * d + j];
          const double h = bandwidths_[j];
          const double mass =
              detail::std_normal_cdf((support_[j].upper - x) / h) - detail::std_normal_cdf((support_[j].lower - x) / h);
          w /= mass;
        }
      }
      weights_[i] = w;
    }
  }

  [[nodiscard]] const ParameterSpace& support() const noexcept { return support_; }
  [[nodiscard]] const std::vector<double>& bandwidths() const noexcept { return bandwidths_; }
  [[nodiscard]] bool truncated() const noexcept { return truncated_; }
  [[nodiscard]] std::size_t size() const noexcept { return n_; }
  [[nodiscard]] std::size_t dimension() const noexcept { return support_.size(); }
  [[nodiscard]] const std::vector<std::string>& degenerate_dims() const noexcept { return degenerate_dims_; }

  [[nodiscard]] ParameterVector point(std::size_t i) const {
    const std::size_t d = dimension();
    return ParameterVector(std::vector<double>(points_.begin() + static_cast<std::ptrdiff_t>(i * d),
                                               points_.begin() + static_cast<std::ptrdiff_t>((i + 1) * d)));
  }

  /// Per-component normalising weight (1/n times the truncation correction).
  [[nodiscard]] double component_weight(std::size_t i) const { return weights_[i]; }

  [[nodiscard]] double density(const ParameterVector& theta) const {
    support_.require_dimension(theta.size(), "kde_density");
    if (truncated_ && !support_.contains(theta.values())) return 0.0;
    const std::size_t d = dimension();
    std::vector<double> terms(n_);
    for (std::size_t i = 0; i < n_; ++i) {
      double q = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        const double z = (theta[j] - points_[i * d + j]) / bandwidths_[j];
        q += z * z;
      }
      terms[i] = weights_[i] * std::exp(-0.5 * q);
    }
    return detail::pairwise_sum(terms);
  }

  /// Uniform component choice, then a (truncated) Gaussian draw around it.
  [[nodiscard]] ParameterVector sample(RngStream& rng) const {
    const std::size_t d = dimension();
    const std::size_t i = rng.uniform_index(n_);
    std::vector<double> out(d);
    for (std::size_t j = 0; j < d; ++j) {
      const double mu = points_[i * d + j];
      const double h = bandwidths_[j];
      out[j] = truncated_ ? sample_truncated(mu, h, support_[j], rng) : rng.normal(mu, h);
    }
    return ParameterVector(std::move(out));
  }

 private:
  /// Normal(mu, h) restricted to the dimension's interval; mu lies inside it.
  static double sample_truncated(double mu, double h, const Dimension& dim, RngStream& rng) {
    const double mass =
        detail::std_normal_cdf((dim.upper - mu) / h) - detail::std_normal_cdf((dim.lower - mu) / h);
    if (mass >= 0.3) {
      double x = rng.normal(mu, h);
      while (!dim.contains(x)) x = rng.normal(mu, h);
      return x;
    }
    // Wide kernel: propose uniformly on the interval and accept against the Gaussian shape.
    for (;;) {
      const double x = rng.uniform(dim.lower, dim.upper);
      const double z = (x - mu) / h;
      if (rng.uniform() < std::exp(-0.5 * z * z)) return x;
    }
  }

  ParameterSpace support_;
  std::vector<double> points_;
  std::vector<double> bandwidths_;
  bool truncated_;
  std::vector<std::string> degenerate_dims_;
  std::size_t n_ = 0;
  std::vector<double> weights_;
};

/// Scott's rule per dimension: h_j = sd_j * n^(-1/(d+4)).
inline std::vector<double> scott_bandwidths(const std::vector<ParameterVector>& samples, const ParameterSpace& space,
                                            bool allow_degenerate, std::vector<std::string>* degenerate = nullptr) {
  const std::size_t n = samples.size();
  const std::size_t d = space.size();
  const double factor = std::pow(static_cast<double>(n), -1.0 / (static_cast<double>(d) + 4.0));
  std::vector<double> h(d);
  for (std::size_t j = 0; j < d; ++j) {
    double mean = 0.0;
    for (const auto& s : samples) mean += s[j];
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (const auto& s : samples) ss += (s[j] - mean) * (s[j] - mean);
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    if (sd > 0.0) {
      h[j] = sd * factor;
    } else if (allow_degenerate) {
      h[j] = space[j].width() / 100.0;
      if (degenerate) degenerate->push_back(space[j].name);
    } else {
      throw KdeFitError("fit_kde: zero sample variance in dimension '" + space[j].name + "'");
    }
  }
  return h;
}

inline KdeModel fit_kde(const std::vector<ParameterVector>& samples, const ParameterSpace& space,
                        const KdeOptions& options = {}) {
  if (samples.size() < 2)
    throw KdeFitError("fit_kde: need at least 2 samples, got " + std::to_string(samples.size()));
  std::vector<double> flat;
  flat.reserve(samples.size() * space.size());
  for (const auto& s : samples) {
    space.require_dimension(s.size(), "fit_kde");
    if (!space.contains(s.values())) throw ContractViolation("fit_kde: sample outside the support box");
    flat.insert(flat.end(), s.begin(), s.end());
  }
  std::vector<std::string> degenerate;
  auto h = scott_bandwidths(samples, space, options.allow_degenerate, &degenerate);
  return KdeModel(space, std::move(flat), std::move(h), options.truncated, std::move(degenerate));
}

inline double kde_density(const KdeModel& model, const ParameterVector& theta) { return model.density(theta); }
inline ParameterVector kde_sample(const KdeModel& model, RngStream& rng) { return model.sample(rng); }

/// Bandwidths and options for external plotting; the points go to a CSV alongside.
inline nlohmann::json kde_to_json(const KdeModel& model) {
  nlohmann::json j;
  j["n_points"] = model.size();
  j["truncated"] = model.truncated();
  j["degenerate_dims"] = model.degenerate_dims();
  nlohmann::json bw = nlohmann::json::object();
  for (std::size_t i = 0; i < model.dimension(); ++i) bw[model.support()[i].name] = model.bandwidths()[i];
  j["bandwidths"] = bw;
  return j;
}

}  // namespace explore

#endif
