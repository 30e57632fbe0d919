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

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "explore/estimator.hpp"
#include "explore/outcome.hpp"
#include "support.hpp"

using namespace explore;
namespace ts = explore::testing;

namespace {

const ParameterSpace kUnit{{"theta", 0.0, 1.0}};

struct AlwaysTrue {
  OutcomeRecord operator()(const ParameterVector&, RngStream&) const { return {true, {}}; }
};
struct AlwaysFalse {
  OutcomeRecord operator()(const ParameterVector&, RngStream&) const { return {false, {}}; }
};

// Exact draws from the Bernoulli-oracle posterior on [lo, 1]: density proportional to theta.
std::vector<ParameterVector> posterior(std::size_t n, double lo, std::uint64_t seed) {
  RngStream rng(seed);
  std::vector<ParameterVector> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back({std::sqrt(lo * lo + (1.0 - lo * lo) * rng.uniform())});
  return out;
}

// Complement posterior: density 2(1 - theta).
std::vector<ParameterVector> complement_posterior(std::size_t n, std::uint64_t seed) {
  RngStream rng(seed);
  std::vector<ParameterVector> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back({1.0 - std::sqrt(rng.uniform())});
  return out;
}

// A single very wide truncated kernel: flat on the box to ~1e-13, i.e. K = prior.
KdeModel flat_kde() {
  return KdeModel(kUnit, {0.5}, {1e6}, true);
}

}  // namespace

TEST(EstimateMarginal, AlwaysTrueWithPriorProposalGivesOne) {
  const UniformBoxPrior prior(kUnit);
  const auto e = estimate_marginal(flat_kde(), prior, AlwaysTrue{}, 500, RngStream(1));
  EXPECT_NEAR(e.p_hat, 1.0, 1e-9);
  EXPECT_NEAR(e.std_error, 0.0, 1e-9);
  EXPECT_EQ(e.nonzero_weight_count, 500u);
  EXPECT_EQ(e.draws, 500u);
}

TEST(EstimateMarginal, AlwaysFalseGivesZero) {
  const auto kde = fit_kde(posterior(1000, 0.0, 1), kUnit);
  const auto e = estimate_marginal(kde, UniformBoxPrior(kUnit), AlwaysFalse{}, 500, RngStream(2));
  EXPECT_EQ(e.p_hat, 0.0);
  EXPECT_EQ(e.std_error, 0.0);
  EXPECT_EQ(e.nonzero_weight_count, 0u);
}

TEST(EstimateMarginal, BernoulliOracleRecoversOneHalf) {
  const auto kde = fit_kde(posterior(10000, 0.0, 3), kUnit);
  const auto e = estimate_marginal(kde, UniformBoxPrior(kUnit), BernoulliOracle{}, 2000, RngStream(4));
  EXPECT_NEAR(e.p_hat, 0.5, 0.03);
  EXPECT_GT(e.std_error, 0.0);
}

TEST(EstimateMarginal, WeightSummaryMatchesDefinition) {
  // Recompute the weights by hand from the same substreams.
  const auto kde = fit_kde(posterior(200, 0.0, 5), kUnit);
  const UniformBoxPrior prior(kUnit);
  const RngStream rng(6);
  const std::size_t m = 300;
  std::vector<double> w(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    RngStream d = rng.substream("is", i);
    const auto theta = kde.sample(d);
    RngStream s = d.substream("sim");
    if (BernoulliOracle{}(theta, s).outcome_holds) w[i] = prior.density(theta) / kde.density(theta);
  }
  const auto e = estimate_marginal(kde, prior, BernoulliOracle{}, m, rng);
  EXPECT_NEAR(e.p_hat, ts::mean(w), 1e-12);
  EXPECT_NEAR(e.std_error, std::sqrt(ts::variance(w) / m), 1e-12);
}

TEST(EstimateMarginal, Errors) {
  const auto kde = fit_kde(posterior(100, 0.0, 7), kUnit);
  EXPECT_THROW(estimate_marginal(kde, UniformBoxPrior(ParameterSpace{{"theta", 0.0, 2.0}}), BernoulliOracle{}, 10,
                                 RngStream(1)),
               ContractViolation);
  EXPECT_THROW(estimate_marginal(kde, UniformBoxPrior(kUnit), BernoulliOracle{}, 0, RngStream(1)), ContractViolation);
}

TEST(EstimateMarginal, IndependentOfWorkerCount) {
  const auto kde = fit_kde(posterior(1000, 0.0, 8), kUnit);
  const UniformBoxPrior prior(kUnit);
  const auto a = estimate_marginal(kde, prior, BernoulliOracle{}, 1000, RngStream(9), 1);
  const auto b = estimate_marginal(kde, prior, BernoulliOracle{}, 1000, RngStream(9), 4);
  EXPECT_EQ(a.p_hat, b.p_hat);
  EXPECT_EQ(a.std_error, b.std_error);
  EXPECT_EQ(a.nonzero_weight_count, b.nonzero_weight_count);
}

TEST(EstimateMarginal, UnbiasedOverRepeats) {
  const auto kde = fit_kde(posterior(2000, 0.0, 10), kUnit);
  const UniformBoxPrior prior(kUnit);
  auto repeat = [&](std::size_t runs, const RngStream& base) {
    double sum = 0.0, var = 0.0;
    for (std::size_t r = 0; r < runs; ++r) {
      const auto e = estimate_marginal(kde, prior, BernoulliOracle{}, 500, base.substream("repeat", r));
      sum += e.p_hat;
      var += e.std_error * e.std_error;
    }
    const double n = static_cast<double>(runs);
    return std::pair{sum / n - 0.5, std::sqrt(var) / n};
  };
  const auto [bias20, se20] = repeat(20, RngStream::derive(11, "unbiased"));
  EXPECT_LT(std::abs(bias20), 2.0 * se20);
  const auto [bias200, se200] = repeat(200, RngStream::derive(12, "unbiased"));
  EXPECT_LT(std::abs(bias200), 3.0 * se200);
}

TEST(ComplementCheck, BernoulliGapIsSmall) {
  const auto k_r = fit_kde(posterior(10000, 0.0, 11), kUnit);
  const auto k_c = fit_kde(complement_posterior(10000, 12), kUnit);
  const UniformBoxPrior prior(kUnit);
  const auto c = complement_check(BernoulliOracle{}, k_r, &k_c, prior, 2000, RngStream(13));
  EXPECT_LT(c.gap, 0.05);
  EXPECT_NEAR(c.complement.p_hat, 0.5, 0.03);
  EXPECT_DOUBLE_EQ(c.gap, complement_gap(c.outcome, c.complement));

  const auto again = complement_check(BernoulliOracle{}, k_r, &k_c, prior, 2000, RngStream(13));
  EXPECT_EQ(c.gap, again.gap);
}

TEST(ComplementCheck, EmptyComplementCountsAsZero) {
  const auto c = complement_check(AlwaysTrue{}, flat_kde(), nullptr, UniformBoxPrior(kUnit), 200, RngStream(14));
  EXPECT_NEAR(c.outcome.p_hat, 1.0, 1e-9);
  EXPECT_EQ(c.complement.p_hat, 0.0);
  EXPECT_NEAR(c.gap, 0.0, 1e-9);
}

TEST(LikelihoodAt, OutsideTheBoxIsADomainError) {
  const auto kde = fit_kde(posterior(100, 0.0, 15), kUnit);
  MarginalEstimate e;
  e.p_hat = 0.5;
  EXPECT_THROW(likelihood_at(kde, UniformBoxPrior(kUnit), e, ParameterVector{1.5}), DomainError);
}

TEST(LikelihoodAt, MatchesDefinitionAndClips) {
  const auto kde = fit_kde(posterior(100, 0.0, 16), kUnit);
  const UniformBoxPrior prior(kUnit);
  MarginalEstimate e;
  e.p_hat = 0.9;
  for (double x : {0.1, 0.5, 0.95}) {
    const auto v = likelihood_at(kde, prior, e, ParameterVector{x});
    EXPECT_DOUBLE_EQ(v.unclipped, kde.density({x}) * 0.9);
    EXPECT_DOUBLE_EQ(v.value, std::min(1.0, v.unclipped));
  }
  EXPECT_GT(likelihood_at(kde, prior, e, ParameterVector{0.95}).unclipped, 1.0);
}

TEST(LikelihoodAt, BernoulliOracleIsTheIdentity) {
  const auto kde = fit_kde(posterior(10000, 0.0, 17), kUnit);
  const UniformBoxPrior prior(kUnit);
  const auto e = estimate_marginal(kde, prior, BernoulliOracle{}, 2000, RngStream(18));
  EXPECT_NEAR(likelihood_at(kde, prior, e, ParameterVector{0.7}).value, 0.7, 0.08);
}

TEST(LikelihoodAt, PriorFactorsOut) {
  const ParameterSpace narrow{{"theta", 0.1, 1.0}};
  const auto k1 = fit_kde(posterior(10000, 0.0, 19), kUnit);
  const auto k2 = fit_kde(posterior(10000, 0.1, 20), narrow);
  const UniformBoxPrior p1(kUnit), p2(narrow);
  const auto e1 = estimate_marginal(k1, p1, BernoulliOracle{}, 2000, RngStream(21));
  const auto e2 = estimate_marginal(k2, p2, BernoulliOracle{}, 2000, RngStream(22));
  EXPECT_NEAR(e2.p_hat, 0.495 / 0.9, 0.03);
  const double l1 = likelihood_at(k1, p1, e1, ParameterVector{0.5}).value;
  const double l2 = likelihood_at(k2, p2, e2, ParameterVector{0.5}).value;
  // Both reconstruct theta itself, so each sits near 0.5 and they agree with each other.
  EXPECT_NEAR(l1, 0.5, 0.06);
  EXPECT_NEAR(l2, 0.5, 0.06);
  EXPECT_NEAR(l1, l2, 0.08);
}

TEST(LikelihoodGrid, SinglePointAtCentre) {
  const auto kde = fit_kde(posterior(500, 0.0, 23), kUnit);
  const UniformBoxPrior prior(kUnit);
  MarginalEstimate e;
  e.p_hat = 0.5;
  const auto s = likelihood_grid(kde, prior, e, SurfaceGridSpec{{1}, true, {}});
  ASSERT_EQ(s.size(), 1u);
  EXPECT_DOUBLE_EQ(s.point(0)[0], 0.5);
  EXPECT_DOUBLE_EQ(s.values[0], likelihood_at(kde, prior, e, ParameterVector{0.5}).value);
}

TEST(LikelihoodGrid, BernoulliSurfaceTracksTheta) {
  const auto kde = fit_kde(posterior(10000, 0.0, 24), kUnit);
  const UniformBoxPrior prior(kUnit);
  const auto e = estimate_marginal(kde, prior, BernoulliOracle{}, 2000, RngStream(25));
  const auto s = likelihood_grid(kde, prior, e, SurfaceGridSpec{{50}, true, {}});
  ASSERT_EQ(s.size(), 50u);
  double worst = 0.0;
  // Truncated kernels under-estimate right at the walls; the interior is where the identity must hold.
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double x = s.point(i)[0];
    if (x > 0.1 && x < 0.9) worst = std::max(worst, std::abs(s.values[i] - x));
    EXPECT_GE(s.values[i], 0.0);
  }
  EXPECT_LT(worst, 0.08);
}

TEST(LikelihoodGrid, ConditionalSliceAndErrors) {
  const ParameterSpace s2{{"a", 0.0, 1.0}, {"b", 0.0, 1.0}};
  std::vector<ParameterVector> pts;
  RngStream rng(26);
  for (int i = 0; i < 300; ++i) pts.push_back({rng.uniform(), rng.uniform()});
  const auto kde = fit_kde(pts, s2);
  MarginalEstimate e;
  e.p_hat = 0.3;
  const auto s = likelihood_grid(kde, UniformBoxPrior(s2), e, SurfaceGridSpec{{4, 4}, true, {{1, 0.2}}});
  ASSERT_EQ(s.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(s.point(i)[1], 0.2);
  EXPECT_THROW(likelihood_grid(kde, UniformBoxPrior(s2), e, SurfaceGridSpec{{0, 4}, true, {}}), ContractViolation);
}

TEST(LikelihoodGrid, OrderOfKdeInputDoesNotMatter) {
  auto pts = posterior(3000, 0.0, 27);
  const UniformBoxPrior prior(kUnit);
  MarginalEstimate e;
  e.p_hat = 0.5;
  const auto a = likelihood_grid(fit_kde(pts, kUnit), prior, e, SurfaceGridSpec{{25}, true, {}});
  std::reverse(pts.begin(), pts.end());
  const auto b = likelihood_grid(fit_kde(pts, kUnit), prior, e, SurfaceGridSpec{{25}, true, {}});
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a.values[i], b.values[i], 1e-12 * a.values[i] + 1e-15);
}

TEST(MarginalAverage, AveragesOverDroppedAxes) {
  const ParameterSpace s3{{"x", 0, 1}, {"y", 0, 1}, {"z", 0, 1}};
  GridAxes g({{0.1, 0.2}, {0.3, 0.4, 0.5}, {0.6, 0.7}});
  LikelihoodSurface s{s3, g, std::vector<double>(12), {}, {}, std::nullopt, 0};
  auto f = [](std::size_t i, std::size_t j, std::size_t k) { return double(i) + 10.0 * j + 100.0 * k; };
  for (std::size_t n = 0; n < 12; ++n) {
    const auto idx = g.unravel(n);
    s.values[n] = f(idx[0], idx[1], idx[2]);
  }

  const auto one = marginal_average(s, {1});
  ASSERT_EQ(one.size(), 3u);
  EXPECT_EQ(one.space[0].name, "y");
  for (std::size_t j = 0; j < 3; ++j) {
    double want = 0.0;
    for (std::size_t i = 0; i < 2; ++i)
      for (std::size_t k = 0; k < 2; ++k) want += f(i, j, k) / 4.0;
    EXPECT_DOUBLE_EQ(one.values[j], want);
    EXPECT_DOUBLE_EQ(one.point(j)[0], g.axes()[1][j]);
  }

  const auto two = marginal_average(s, {2, 0});
  ASSERT_EQ(two.size(), 4u);
  EXPECT_EQ(two.space[0].name, "x");
  EXPECT_EQ(two.space[1].name, "z");
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t k = 0; k < 2; ++k) {
      double want = 0.0;
      for (std::size_t j = 0; j < 3; ++j) want += f(i, j, k) / 3.0;
      EXPECT_DOUBLE_EQ(two.values[i * 2 + k], want);
    }
  EXPECT_THROW(marginal_average(s, {3}), ContractViolation);
}

TEST(SurfaceCsv, RowMajorWithHeader) {
  const ParameterSpace s2{{"a", 0, 1}, {"b", 0, 1}};
  LikelihoodSurface s{s2, GridAxes({{0.25, 0.75}, {0.5}}), {0.1, 0.2}, {}, {}, std::nullopt, 0};
  std::ostringstream os;
  write_surface_csv(os, s);
  EXPECT_EQ(os.str(), "a,b,likelihood\n0.25,0.5,0.1\n0.75,0.5,0.2\n");
}
