#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "../support/oracles.hpp"
#include "dmobo/problems.hpp"

using namespace dmobo;

namespace {

Configuration reals(std::vector<double> x) {
  Configuration c;
  for (double v : x) c.values.emplace_back(v);
  return c;
}

ObjectiveVector eval(const ProblemInstance& p, std::vector<double> x) {
  return std::get<ObjectiveVector>(p.evaluate(reals(std::move(x))));
}

bool mutually_nondominated(const FrontSet& f) {
  return oracle::pareto_indices(f).size() == f.size();
}

}  // namespace

TEST(Dtlz, WorkedExamples) {
  auto d2 = dtlz(2);
  auto f = eval(d2, {0, 0, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5});
  EXPECT_NEAR(f[0], 1.0, 1e-15);
  EXPECT_NEAR(f[1], 0.0, 1e-15);
  EXPECT_NEAR(f[2], 0.0, 1e-15);
  f = eval(d2, std::vector<double>(8, 0.5));
  EXPECT_NEAR(f[0], 0.5, 1e-12);
  EXPECT_NEAR(f[1], 0.5, 1e-12);
  EXPECT_NEAR(f[2], std::sqrt(0.5), 1e-12);
  EXPECT_NEAR(std::sqrt(f[0] * f[0] + f[1] * f[1] + f[2] * f[2]), 1.0, 1e-12);
  auto f1 = eval(dtlz(1), {0, 0, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5});
  EXPECT_NEAR(f1[0], 0.0, 1e-15);
  EXPECT_NEAR(f1[1], 0.0, 1e-15);
  EXPECT_NEAR(f1[2], 0.5, 1e-12);
}

TEST(Dtlz, InvalidArguments) {
  EXPECT_THROW(dtlz(0), ConfigError);
  EXPECT_THROW(dtlz(8), ConfigError);
  EXPECT_THROW(dtlz(2, 2, 3), ConfigError);
  EXPECT_THROW(make_problem("dtlz9"), ConfigError);
  EXPECT_THROW(make_problem("nope"), ConfigError);
}

TEST(Dtlz, OptimalTailGivesZeroG) {
  Rng rng(1);
  std::uniform_real_distribution<double> u(0, 1);
  for (int k = 1; k <= 4; ++k) {
    auto p = dtlz(k);
    for (int t = 0; t < 50; ++t) {
      std::vector<double> x(8, 0.5);
      x[0] = u(rng);
      x[1] = u(rng);
      auto f = eval(p, x);
      if (k == 1) {
        EXPECT_NEAR(std::accumulate(f.begin(), f.end(), 0.0), 0.5, 1e-12);
      } else {
        double n2 = 0.0;
        for (double v : f) n2 += v * v;
        EXPECT_NEAR(std::sqrt(n2), 1.0, 1e-12);
      }
    }
  }
}

TEST(Dtlz, TwoObjectiveInstance) {
  auto p = dtlz(2, 8, 2);
  auto f = eval(p, {0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5});
  ASSERT_EQ(f.size(), 2u);
  EXPECT_NEAR(f[0], std::sqrt(0.5), 1e-12);
  EXPECT_NEAR(f[1], std::sqrt(0.5), 1e-12);
}

TEST(Dtlz, Dtlz7Formula) {
  auto p = dtlz(7);
  std::vector<double> x(8, 0.0);
  x[0] = 0.2;
  x[1] = 0.7;
  auto f = eval(p, x);
  const double h = 3.0 - (0.2 / 2.0) * (1 + std::sin(3 * M_PI * 0.2)) - (0.7 / 2.0) * (1 + std::sin(3 * M_PI * 0.7));
  EXPECT_NEAR(f[2], 2.0 * h, 1e-12);
}

TEST(PfSampler, AnalyticIdentitiesAndNondominance) {
  Rng rng(2);
  for (int k = 1; k <= 7; ++k) {
    auto p = dtlz(k);
    auto pf = p.true_pf_sampler(300, rng);
    ASSERT_EQ(pf.size(), 300u);
    if (k <= 6) EXPECT_TRUE(mutually_nondominated(pf)) << "dtlz" << k;
    for (const auto& f : pf) {
      if (k == 1) EXPECT_NEAR(std::accumulate(f.begin(), f.end(), 0.0), 0.5, 1e-9);
      if (k >= 2 && k <= 6) {
        double n2 = 0.0;
        for (double v : f) n2 += v * v;
        EXPECT_NEAR(std::sqrt(n2), 1.0, 1e-9);
      }
    }
  }
}

TEST(PfSampler, Dtlz7SamplesAreNondominatedInTwoObjectives) {
  // For M = 2 the regions are exactly the non-dominated x-intervals.
  Rng rng(3);
  auto pf = dtlz(7, 8, 2).true_pf_sampler(300, rng);
  EXPECT_TRUE(mutually_nondominated(pf));
  for (const auto& f : pf) EXPECT_TRUE(dtlz_detail::in_dtlz7_region(f[0]));
}

TEST(PfSampler, Dtlz7RegionEndpoints) {
  // phi(x) = x (1 + sin 3 pi x): the first region ends at the local maximum,
  // the second starts where phi regains that value.
  auto phi = [](double x) { return x * (1 + std::sin(3 * M_PI * x)); };
  auto dphi = [](double x) { return 1 + std::sin(3 * M_PI * x) + 3 * M_PI * x * std::cos(3 * M_PI * x); };
  double a = 0.2, b = 0.3;
  for (int i = 0; i < 200; ++i) {
    double m = 0.5 * (a + b);
    (dphi(m) > 0 ? a : b) = m;
  }
  EXPECT_NEAR(dtlz_detail::kDtlz7Regions[0][1], a, 1e-7);
  double lo = 0.6, hi = 0.7;
  for (int i = 0; i < 200; ++i) {
    double m = 0.5 * (lo + hi);
    (phi(m) < phi(a) ? lo : hi) = m;
  }
  EXPECT_NEAR(dtlz_detail::kDtlz7Regions[1][0], lo, 1e-7);
}

TEST(SyntheticHpo, ShapeAndDeterminism) {
  auto p = synthetic_hpo(0);
  EXPECT_EQ(p.num_objectives, 2u);
  EXPECT_EQ(p.space->size(), 4u);
  Rng rng(4);
  std::size_t failures = 0;
  std::vector<double> y2;
  for (int i = 0; i < 10000; ++i) {
    auto c = sample(*p.space, rng);
    auto a = p.evaluate(c), b = p.evaluate(c);
    ASSERT_EQ(a, b);
    if (is_failure(a)) {
      ++failures;
      continue;
    }
    const auto& y = std::get<ObjectiveVector>(a);
    ASSERT_GE(y[0], 0.0);
    ASSERT_LE(y[0], 1.0);
    y2.push_back(y[1]);
  }
  EXPECT_NEAR(failures / 10000.0, 0.02, 0.006);
  std::nth_element(y2.begin(), y2.begin() + y2.size() / 2, y2.end());
  const double median = y2[y2.size() / 2];
  EXPECT_GT(*std::max_element(y2.begin(), y2.end()) / median, 100.0);
}

TEST(SyntheticHpo, SeedChangesFailureSubset) {
  auto a = synthetic_hpo(1), b = synthetic_hpo(2);
  Rng rng(5);
  int differ = 0;
  for (int i = 0; i < 2000; ++i) {
    auto c = sample(*a.space, rng);
    differ += is_failure(a.evaluate(c)) != is_failure(b.evaluate(c));
  }
  EXPECT_GT(differ, 0);
}
