#include <gtest/gtest.h>

#include <cmath>

#include "ctxcite/error.hpp"
#include "ctxcite/eval.hpp"
#include "ctxcite/surrogate.hpp"
#include "support.hpp"

namespace ctxcite {
namespace {

using testing::NormalEquationsOls;
using testing::Rows;

TEST(Logit, AnalyticValues) {
  EXPECT_NEAR(LogitOfLogProb(std::log(0.5)), 0.0, 1e-12);
  EXPECT_NEAR(LogitOfLogProb(std::log(0.75)), std::log(3.0), 1e-12);
  EXPECT_NEAR(LogitOfLogProb(-50.0), -50.0, 1e-12);
  EXPECT_EQ(LogitOfLogProb(-1000.0), -1000.0);
}

TEST(Logit, ClampsNearOne) {
  const double clamp = std::log((1.0 - 1e-9) / 1e-9);
  EXPECT_NEAR(LogitOfLogProb(0.0), clamp, 1e-6);
  EXPECT_NEAR(LogitOfLogProb(-1e-12), clamp, 1e-6);
  EXPECT_TRUE(std::isfinite(LogitOfLogProb(-0.0)));
}

TEST(Logit, RejectsNonFinite) {
  for (double bad : {std::nan(""), double(INFINITY), -double(INFINITY)}) {
    try {
      LogitOfLogProb(bad);
      FAIL() << bad;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kNonFinite);
    }
  }
}

TEST(Dataset, PlantedTargetsAreExactlyLinear) {
  const auto fx = testing::Planted(20, 4, 5);
  const auto data = CollectDataset(fx->task, 50, 9);
  ASSERT_EQ(data.size(), 50u);
  for (std::size_t i = 0; i < data.size(); ++i) {
    EXPECT_NEAR(data.targets[i], fx->oracle.Logit(data.masks[i]), 1e-9);
    EXPECT_EQ(data.targets[i], LogitOfLogProb(data.logProbs[i]));
  }
  EXPECT_EQ(data.masks, SampleAblations(20, 50, 9).vectors);
}

TEST(Dataset, UnablatedRowIsLogitOfFullProbability) {
  const auto fx = testing::Planted(1, 1, 0);
  // d = 1: search the stream for a row that keeps the only source.
  const auto data = CollectDataset(fx->task, 8, 3);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double full = fx->task.StatementLogProb(data.masks[i]);
    EXPECT_EQ(data.targets[i], LogitOfLogProb(full));
  }
  const auto one = CollectDataset(fx->task, 1, 3);
  EXPECT_EQ(one.size(), 1u);
}

TEST(Dataset, ZeroAblationsRejected) {
  const auto fx = testing::Planted(4, 1, 0);
  try {
    CollectDataset(fx->task, 0, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(std::string(e.what()), "n must be ≥ 1");
  }
}

TEST(Dataset, RowOrderIndependentOfConcurrency) {
  const auto fx = testing::Interaction(15, 3, 2, 4);
  SchedulerOptions one;
  one.maxInFlight = 1;
  SchedulerOptions many;
  many.maxInFlight = 13;
  const auto a = CollectDataset(fx->task, 40, 2, one);
  const auto b = CollectDataset(fx->task, 40, 2, many);
  EXPECT_EQ(a.targets, b.targets);
  EXPECT_EQ(a.masks, b.masks);
}

TEST(Lasso, ZeroTargetsGiveZeroModel) {
  const auto masks = SampleAblations(6, 20, 1).vectors;
  const std::vector<double> y(20, 0.0);
  const LassoFit f = FitLasso(DesignMatrix::FromMasks(masks, 6), y, 0.01);
  for (double w : f.weights) EXPECT_EQ(w, 0.0);
  EXPECT_EQ(f.intercept, 0.0);
}

TEST(Lasso, UnpenalisedMatchesNormalEquations) {
  const std::size_t d = 8;
  const std::size_t n = 40;
  const auto masks = SampleAblations(d, n, 11).vectors;
  const std::vector<double> wStar{1.5, -2.0, 0.0, 0.75, 3.0, -0.5, 0.0, 1.0};
  const double bStar = -0.3;
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = Predict(wStar, bStar, masks[i]);
  const auto beta = NormalEquationsOls(Rows(masks), y);
  const LassoFit f = FitLasso(DesignMatrix::FromMasks(masks, d), y, 0.0);
  EXPECT_NEAR(f.intercept, beta[0], 1e-6);
  EXPECT_NEAR(f.intercept, bStar, 1e-6);
  for (std::size_t j = 0; j < d; ++j) {
    EXPECT_NEAR(f.weights[j], beta[j + 1], 1e-6);
    EXPECT_NEAR(f.weights[j], wStar[j], 1e-6);
  }
}

// Brute-force minimisation of the 1-D objective over a grid, intercept profiled out.
double GridArgmin(const std::vector<double>& x, const std::vector<double>& y, double lambda) {
  const double n = static_cast<double>(x.size());
  double best = 0.0;
  double bestObj = INFINITY;
  for (int i = -40000; i <= 40000; ++i) {
    const double w = i * 1e-4;
    double b = 0;
    for (std::size_t k = 0; k < x.size(); ++k) b += y[k] - w * x[k];
    b /= n;
    double obj = 0;
    for (std::size_t k = 0; k < x.size(); ++k) obj += std::pow(y[k] - w * x[k] - b, 2);
    obj = obj / (2 * n) + lambda * std::fabs(w);
    if (obj < bestObj) {
      bestObj = obj;
      best = w;
    }
  }
  return best;
}

TEST(Lasso, OneDimensionalSoftThreshold) {
  const std::vector<double> x{0, 1, 0, 1};
  const std::vector<double> y{0, 2, 0, 2};
  std::vector<AblationVector> masks;
  for (double xi : x) masks.push_back(AblationVector(1, xi != 0));
  const auto design = DesignMatrix::FromMasks(masks, 1);
  for (double lambda : {0.5, 0.1, 0.25, 0.0}) {
    const LassoFit f = FitLasso(design, y, lambda);
    EXPECT_NEAR(f.weights[0], GridArgmin(x, y, lambda), 1e-4) << lambda;
  }
  EXPECT_NEAR(FitLasso(design, y, 0.5).weights[0], 0.0, 1e-12);
  EXPECT_NEAR(FitLasso(design, y, 0.1).weights[0], 1.6, 1e-12);
}

TEST(Lasso, ObjectiveNeverIncreases) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto fx = testing::Interaction(25, 4, 3, seed);
    const auto data = CollectDataset(fx->task, 32, seed);
    LassoOptions opts;
    opts.recordObjective = true;
    const LassoFit f = FitLasso(DesignMatrix::FromMasks(data.masks, 25), data.targets, 0.01, opts);
    ASSERT_FALSE(f.objectiveHistory.empty());
    for (std::size_t s = 1; s < f.objectiveHistory.size(); ++s) {
      EXPECT_LE(f.objectiveHistory[s], f.objectiveHistory[s - 1] * (1 + 1e-12) + 1e-15);
    }
    EXPECT_NEAR(f.objective, LassoObjective(DesignMatrix::FromMasks(data.masks, 25),
                                            data.targets, f.weights, f.intercept, 0.01),
                1e-12);
  }
}

TEST(Lasso, ConstantColumnsGetZero) {
  std::vector<AblationVector> masks;
  std::vector<double> y;
  for (int i = 0; i < 8; ++i) {
    AblationVector v(3, true);
    v.Set(1, i % 2 == 0);
    masks.push_back(v);
    y.push_back(i % 2 == 0 ? 3.0 : 1.0);
  }
  const LassoFit f = FitLasso(DesignMatrix::FromMasks(masks, 3), y, 0.0);
  EXPECT_EQ(f.weights[0], 0.0);
  EXPECT_EQ(f.weights[2], 0.0);
  EXPECT_NEAR(f.weights[1], 2.0, 1e-9);
  EXPECT_NEAR(f.intercept, 1.0, 1e-9);
}

TEST(Lasso, RejectsNonFiniteTargets) {
  const auto masks = SampleAblations(3, 4, 1).vectors;
  const std::vector<double> y{1.0, std::nan(""), 0.0, 2.0};
  EXPECT_THROW(FitLasso(DesignMatrix::FromMasks(masks, 3), y, 0.01), Error);
}

TEST(Attribute, ExactOnLinearOracleWithoutPenalty) {
  const auto fx = testing::Planted(12, 4, 21);
  AttributeOptions opts;
  opts.numAblations = 64;
  opts.lambda = 0.0;
  opts.seed = 5;
  const auto r = Attribute(fx->task, opts);
  for (std::size_t j = 0; j < 12; ++j) EXPECT_NEAR(r.weights[j], fx->oracle.weights()[j], 1e-5);
  EXPECT_NEAR(r.intercept, fx->oracle.intercept(), 1e-5);
}

TEST(Attribute, SingleSourceSignMatchesPlant) {
  for (double w : {2.5, -3.0}) {
    const auto fx = testing::PlantedWith({w}, 0.0);
    AttributeOptions opts;
    opts.seed = 1;
    const auto r = Attribute(fx->task, opts);
    ASSERT_EQ(r.weights.size(), 1u);
    EXPECT_EQ(std::signbit(r.weights[0]), std::signbit(w));
  }
}

// How often the k largest |w| are exactly the planted support.
int LargestMatchPlant(std::size_t k, int seeds) {
  int ok = 0;
  for (int s = 0; s < seeds; ++s) {
    const auto fx = testing::Planted(100, k, 100 + s);
    AttributeOptions opts;
    opts.seed = s;
    const auto r = Attribute(fx->task, opts);
    std::vector<double> mag(100);
    for (std::size_t j = 0; j < 100; ++j) mag[j] = std::fabs(r.weights[j]);
    bool all = true;
    for (std::size_t j : TopK(mag, k)) all = all && fx->oracle.weights()[j] != 0.0;
    ok += all ? 1 : 0;
  }
  return ok;
}

TEST(Attribute, SampleComplexitySparseVersusDense) {
  EXPECT_GE(LargestMatchPlant(5, 20), 19);
  EXPECT_LE(LargestMatchPlant(40, 20), 10);
}

TEST(Attribute, LdsSelfConsistencyOnLinearOracle) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto fx = testing::Planted(10, 3, seed);
    AttributeOptions opts;
    opts.numAblations = 64;
    opts.seed = seed;
    const auto r = Attribute(fx->task, opts);
    EXPECT_NEAR(Lds(fx->task, r.weights, 64, 50 + seed), 1.0, 1e-12);
  }
}

TEST(Attribute, HeldOutRmseShrinksWithMoreAblations) {
  double small = 0;
  double large = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto fx = testing::Interaction(30, 4, 3, seed);
    AttributeOptions opts;
    opts.seed = seed;
    opts.heldOutFraction = 0.25;
    opts.numAblations = 32;
    small += *Attribute(fx->task, opts).heldOutRmse;
    opts.numAblations = 256;
    large += *Attribute(fx->task, opts).heldOutRmse;
  }
  EXPECT_LE(large / 10, small / 10);
}

TEST(Attribute, DeterministicAcrossThreadCounts) {
  const auto fx = testing::Interaction(30, 4, 2, 8);
  AttributeOptions opts;
  opts.seed = 77;
  const std::string ref = ToJson(Attribute(fx->task, opts));
  for (std::size_t threads : {1, 2, 5, 32}) {
    opts.scheduler.maxInFlight = threads;
    EXPECT_EQ(ToJson(Attribute(fx->task, opts)), ref);
  }
}

TEST(Attribute, JsonRoundTrip) {
  const auto fx = testing::Planted(7, 2, 1);
  AttributeOptions opts;
  opts.seed = 3;
  opts.heldOutFraction = 0.25;
  const auto r = Attribute(fx->task, opts);
  const std::string json = ToJson(r);
  const auto back = AttributionResultFromJson(json);
  EXPECT_EQ(back.weights, r.weights);
  EXPECT_EQ(back.intercept, r.intercept);
  EXPECT_EQ(back.heldOutRmse, r.heldOutRmse);
  EXPECT_EQ(back.tokenEnd, r.tokenEnd);
  EXPECT_EQ(ToJson(back), json);
  EXPECT_EQ(json.rfind("{\"version\":1,\"d\":7,\"weights\":[", 0), 0u);
}

TEST(TopK, Examples) {
  const std::vector<double> s{0.1, 0.9, 0.5};
  EXPECT_EQ(TopK(s, 2), (std::vector<std::size_t>{1, 2}));
  const std::vector<double> eq(4, 1.0);
  EXPECT_EQ(TopK(eq, 2), (std::vector<std::size_t>{0, 1}));
  EXPECT_TRUE(TopK(s, 0).empty());
  EXPECT_EQ(TopK(s, 10), (std::vector<std::size_t>{1, 2, 0}));
}

TEST(Ols, MinimumNormWhenUnderdetermined) {
  const auto fx = testing::Planted(40, 3, 2);
  const auto data = CollectDataset(fx->task, 16, 1);
  const auto fit = FitOls(DesignMatrix::FromMasks(data.masks, 40), data.targets);
  for (std::size_t i = 0; i < data.size(); ++i) {
    EXPECT_NEAR(Predict(fit.weights, fit.intercept, data.masks[i]), data.targets[i], 1e-8);
  }
}

}  // namespace
}  // namespace ctxcite
