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

#ifndef EXPLORE_ESTIMATOR_HPP
#define EXPLORE_ESTIMATOR_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <ostream>
#include <vector>

#include "explore/density.hpp"
#include "explore/errors.hpp"
#include "explore/grid.hpp"
#include "explore/io.hpp"
#include "explore/outcome.hpp"
#include "explore/parallel.hpp"
#include "explore/params.hpp"
#include "explore/rng.hpp"
#include "json.hpp"

namespace explore {

/// Importance-sampling estimate of P(R): mean of weights and its i.i.d. standard error.
struct MarginalEstimate {
  double p_hat = 0.0;
  double std_error = 0.0;
  std::size_t draws = 0;
  std::size_t nonzero_weight_count = 0;
};

/**
 * \brief Estimates P(R) = integral of P(R|theta) P(theta) by importance sampling from K.
 *
 * Draw i uses substream ("is", i) of `rng` for both the KDE draw and the
 * simulation, so the result is independent of `workers`.
 * w_i = P(theta_i) / K(theta_i) when the outcome holds, else 0.
 */
template <OutcomeSimulator S, Prior P>
MarginalEstimate estimate_marginal(const KdeModel& kde, const P& prior, const S& sim, std::size_t draws,
                                   const RngStream& rng, std::size_t workers = 1) {
  if (!(kde.support() == prior.space()))
    throw ContractViolation("estimate_marginal: KDE and prior live on different spaces");
  if (draws == 0) throw ContractViolation("estimate_marginal: need at least one draw");

  std::vector<double> weights(draws, 0.0);
  parallel_for(draws, workers, [&](std::size_t i) {
    RngStream draw_rng = rng.substream("is", i);
    const ParameterVector theta = kde.sample(draw_rng);
    const double prior_d = prior.density(theta);
    if (prior_d == 0.0) return;  // unbounded KDE may place mass outside the box
    RngStream sim_rng = draw_rng.substream("sim");
    if (!sim(to_simulator_input(prior.space(), theta), sim_rng).outcome_holds) return;
    weights[i] = prior_d / kde.density(theta);
  });

  MarginalEstimate est;
  est.draws = draws;
  est.p_hat = detail::pairwise_sum(weights) / static_cast<double>(draws);
  double ss = 0.0;
  for (double w : weights) {
    ss += (w - est.p_hat) * (w - est.p_hat);
    if (w != 0.0) ++est.nonzero_weight_count;
  }
  const double var = draws > 1 ? ss / static_cast<double>(draws - 1) : 0.0;
  est.std_error = std::sqrt(var / static_cast<double>(draws));
  return est;
}

struct ComplementCheck {
  MarginalEstimate outcome;
  MarginalEstimate complement;
  double gap = 0.0;  ///< |P(R) + P(R^c) - 1|
};

/**
 * Consistency check P(R) + P(R^c) = 1. The complement pipeline runs the same
 * simulator with the negated predicate. A missing complement KDE means the
 * complement chain could not initialise; its estimate is then taken as 0.
 */
template <OutcomeSimulator S, Prior P>
ComplementCheck complement_check(const S& sim, const KdeModel& kde_outcome, const KdeModel* kde_complement,
                                 const P& prior, std::size_t draws, const RngStream& rng, std::size_t workers = 1) {
  ComplementCheck c;
  c.outcome = estimate_marginal(kde_outcome, prior, sim, draws, rng.substream("outcome"), workers);
  if (kde_complement) {
    c.complement =
        estimate_marginal(*kde_complement, prior, Negated<S>(sim), draws, rng.substream("complement"), workers);
  } else {
    c.complement.draws = 0;
  }
  c.gap = std::abs(c.outcome.p_hat + c.complement.p_hat - 1.0);
  return c;
}

inline double complement_gap(const MarginalEstimate& outcome, const MarginalEstimate& complement) {
  return std::abs(outcome.p_hat + complement.p_hat - 1.0);
}

struct LikelihoodValue {
  double value = 0.0;      ///< clipped to [0, 1]
  double unclipped = 0.0;  ///< K(theta) p_hat / P(theta)
};

/// P(R|theta) = K(theta) P(R) / P(theta).
template <Prior P>
LikelihoodValue likelihood_at(const KdeModel& kde, const P& prior, const MarginalEstimate& estimate,
                              const ParameterVector& theta) {
  const double prior_d = prior.density(theta);
  if (!(prior_d > 0.0)) throw DomainError("likelihood_at: prior density is zero at the requested point");
  LikelihoodValue v;
  v.unclipped = kde.density(theta) * estimate.p_hat / prior_d;
  v.value = std::clamp(v.unclipped, 0.0, 1.0);
  return v;
}

/**
 * \brief Gridded estimate of P(R|theta).
 *
 * Shared by the importance-sampling reconstruction (values derived from the
 * KDE, `unclipped` kept for diagnostics) and by the replicate grid baseline
 * (`std_errors` filled with per-point binomial errors).
 */
struct LikelihoodSurface {
  ParameterSpace space;
  GridAxes grid;
  std::vector<double> values;
  std::vector<double> unclipped;
  std::vector<double> std_errors;
  std::optional<MarginalEstimate> p_r;
  std::size_t clipped_count = 0;

  [[nodiscard]] std::size_t size() const noexcept { return values.size(); }
  [[nodiscard]] ParameterVector point(std::size_t i) const { return grid.point(i); }
};

struct SurfaceGridSpec {
  std::vector<std::size_t> counts;
  bool midpoints = true;
  /// Conditional slice: dimension index -> fixed value.
  std::map<std::size_t, double> fixed;
};

template <Prior P>
LikelihoodSurface likelihood_grid(const KdeModel& kde, const P& prior, const MarginalEstimate& estimate,
                                  const GridAxes& grid, std::size_t workers = 1) {
  prior.space().require_dimension(grid.dimension(), "likelihood_grid");
  const std::size_t n = grid.size();
  if (n == 0) throw ContractViolation("likelihood_grid: empty grid");
  LikelihoodSurface s{prior.space(), grid, std::vector<double>(n), std::vector<double>(n), {}, estimate, 0};
  parallel_for(n, workers, [&](std::size_t i) {
    const auto v = likelihood_at(kde, prior, estimate, grid.point(i));
    s.values[i] = v.value;
    s.unclipped[i] = v.unclipped;
  });
  s.clipped_count = static_cast<std::size_t>(
      std::count_if(s.unclipped.begin(), s.unclipped.end(), [](double u) { return u > 1.0 || u < 0.0; }));
  return s;
}

template <Prior P>
LikelihoodSurface likelihood_grid(const KdeModel& kde, const P& prior, const MarginalEstimate& estimate,
                                  const SurfaceGridSpec& spec, std::size_t workers = 1) {
  return likelihood_grid(kde, prior, estimate, make_axes(prior.space(), spec.counts, spec.midpoints, spec.fixed),
                         workers);
}

/**
 * Averages a surface over every dimension not in `keep`, giving the
 * single-parameter and pairwise displays. Kept dimensions stay in their
 * original order.
 */
inline LikelihoodSurface marginal_average(const LikelihoodSurface& surface, const std::vector<std::size_t>& keep) {
  const auto& axes = surface.grid.axes();
  std::vector<Dimension> dims;
  std::vector<std::vector<double>> kept_axes;
  std::vector<std::size_t> sorted_keep = keep;
  std::sort(sorted_keep.begin(), sorted_keep.end());
  sorted_keep.erase(std::unique(sorted_keep.begin(), sorted_keep.end()), sorted_keep.end());
  for (std::size_t k : sorted_keep) {
    if (k >= axes.size()) throw ContractViolation("marginal_average: dimension index out of range");
    dims.push_back(surface.space[k]);
    kept_axes.push_back(axes[k]);
  }
  GridAxes out_grid(kept_axes);
  const std::size_t m = out_grid.size();
  std::vector<double> sum_v(m, 0.0), sum_u(m, 0.0);
  std::vector<std::size_t> count(m, 0);
  for (std::size_t i = 0; i < surface.size(); ++i) {
    const auto idx = surface.grid.unravel(i);
    std::size_t flat = 0;
    for (std::size_t k = 0; k < sorted_keep.size(); ++k) flat = flat * kept_axes[k].size() + idx[sorted_keep[k]];
    sum_v[flat] += surface.values[i];
    if (!surface.unclipped.empty()) sum_u[flat] += surface.unclipped[i];
    ++count[flat];
  }
  LikelihoodSurface out{ParameterSpace(dims), out_grid, std::vector<double>(m), {}, {}, surface.p_r, 0};
  if (!surface.unclipped.empty()) out.unclipped.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    out.values[i] = sum_v[i] / static_cast<double>(count[i]);
    if (!out.unclipped.empty()) out.unclipped[i] = sum_u[i] / static_cast<double>(count[i]);
  }
  return out;
}

/// CSV rows `<dim1>,...,likelihood[,std_error]` in row-major grid order.
inline void write_surface_csv(std::ostream& os, const LikelihoodSurface& s,
                              const std::optional<io::Provenance>& provenance = std::nullopt) {
  io::write_provenance(os, provenance);
  const bool with_se = !s.std_errors.empty();
  for (std::size_t k = 0; k < s.space.size(); ++k) os << s.space[k].name << ',';
  os << "likelihood" << (with_se ? ",std_error" : "") << '\n';
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (double c : s.point(i)) os << io::format_double(c) << ',';
    os << io::format_double(s.values[i]);
    if (with_se) os << ',' << io::format_double(s.std_errors[i]);
    os << '\n';
  }
}

inline nlohmann::json to_json(const MarginalEstimate& e) {
  return {{"p_hat", e.p_hat}, {"std_error", e.std_error}, {"M", e.draws}, {"nonzero_weight_count", e.nonzero_weight_count}};
}

inline nlohmann::json surface_sidecar(const LikelihoodSurface& s) {
  nlohmann::json j;
  if (s.p_r) {
    j["p_hat"] = s.p_r->p_hat;
    j["std_error"] = s.p_r->std_error;
    j["M"] = s.p_r->draws;
  }
  j["clipped_points"] = s.clipped_count;
  j["grid_points"] = s.size();
  return j;
}

}  // namespace explore

#endif
