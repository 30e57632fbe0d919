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

#ifndef EXPLORE_GRID_HPP
#define EXPLORE_GRID_HPP

#include <cstddef>
#include <map>
#include <vector>

#include "explore/errors.hpp"
#include "explore/params.hpp"

namespace explore {

/// Evaluation coordinates per dimension. Row-major: the last dimension varies fastest.
class GridAxes {
 public:
  GridAxes() = default;
  explicit GridAxes(std::vector<std::vector<double>> axes) : axes_(std::move(axes)) {
    for (const auto& a : axes_)
      if (a.empty()) throw ContractViolation("grid: empty axis");
  }

  [[nodiscard]] const std::vector<std::vector<double>>& axes() const noexcept { return axes_; }
  [[nodiscard]] std::size_t dimension() const noexcept { return axes_.size(); }

  [[nodiscard]] std::size_t size() const noexcept {
    if (axes_.empty()) return 0;
    std::size_t n = 1;
    for (const auto& a : axes_) n *= a.size();
    return n;
  }

  [[nodiscard]] std::vector<std::size_t> unravel(std::size_t flat) const {
    std::vector<std::size_t> idx(axes_.size());
    for (std::size_t k = axes_.size(); k-- > 0;) {
      idx[k] = flat % axes_[k].size();
      flat /= axes_[k].size();
    }
    return idx;
  }

  [[nodiscard]] ParameterVector point(std::size_t flat) const {
    const auto idx = unravel(flat);
    std::vector<double> v(axes_.size());
    for (std::size_t k = 0; k < axes_.size(); ++k) v[k] = axes_[k][idx[k]];
    return ParameterVector(std::move(v));
  }

 private:
  std::vector<std::vector<double>> axes_;
};

/**
 * Splits [lower, upper] into `count` equal intervals. With `midpoints` the
 * coordinates are the interval centres; otherwise `count` points spaced
 * evenly including both ends (a single point sits at the centre).
 */
inline std::vector<double> axis_points(const Dimension& dim, std::size_t count, bool midpoints) {
  if (count == 0) throw ContractViolation("grid: interval count must be >= 1 for '" + dim.name + "'");
  std::vector<double> out(count);
  const double w = dim.width();
  for (std::size_t i = 0; i < count; ++i) {
    if (midpoints) {
      out[i] = dim.lower + w * (2.0 * static_cast<double>(i) + 1.0) / (2.0 * static_cast<double>(count));
    } else if (count == 1) {
      out[i] = dim.lower + 0.5 * w;
    } else {
      out[i] = dim.lower + w * static_cast<double>(i) / static_cast<double>(count - 1);
    }
  }
  return out;
}

/// Axes for a full box grid; dimensions listed in `fixed` collapse to the given single value.
inline GridAxes make_axes(const ParameterSpace& space, const std::vector<std::size_t>& counts, bool midpoints,
                          const std::map<std::size_t, double>& fixed = {}) {
  space.require_dimension(counts.size(), "grid");
  std::vector<std::vector<double>> axes(space.size());
  for (std::size_t k = 0; k < space.size(); ++k) {
    if (auto it = fixed.find(k); it != fixed.end()) {
      axes[k] = {it->second};
    } else {
      axes[k] = axis_points(space[k], counts[k], midpoints);
    }
  }
  return GridAxes(std::move(axes));
}

}  // namespace explore

#endif
