#pragma once

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "ctxcite/segmentation.hpp"
#include "ctxcite/surrogate.hpp"
#include "ctxcite/synthetic.hpp"

namespace ctxcite::testing {

// An oracle over the synthetic context together with a whole-response task.
// Heap-allocated because the task points into it.
template <class Oracle>
struct Fixture {
  SourcePartition partition;
  Oracle oracle;
  AttributionTask task;

  Fixture(std::size_t d, Oracle o, std::string response)
      : partition(PartitionText(SyntheticContext(d), Granularity::kSentence)),
        oracle(std::move(o)) {
    task = MakeWholeResponseTask(oracle, partition, std::string(kDefaultTemplate),
                                 std::string(kSummarizeQuery), oracle.Tokenize(response));
  }
};

inline std::unique_ptr<Fixture<PlantedLinearOracle>> Planted(std::size_t d, std::size_t k,
                                                             std::uint64_t seed,
                                                             double lo = 2.0, double hi = 5.0) {
  return std::make_unique<Fixture<PlantedLinearOracle>>(
      d, PlantedLinearOracle::Random(SyntheticSourceTexts(d), k, seed, lo, hi),
      PlantedLinearOracle::kCannedResponse);
}

inline std::unique_ptr<Fixture<PlantedLinearOracle>> PlantedWith(std::vector<double> w,
                                                                 double b) {
  const std::size_t d = w.size();
  return std::make_unique<Fixture<PlantedLinearOracle>>(
      d, PlantedLinearOracle(SyntheticSourceTexts(d), std::move(w), b),
      PlantedLinearOracle::kCannedResponse);
}

inline std::unique_ptr<Fixture<InteractionOracle>> Interaction(std::size_t d, std::size_t k,
                                                               std::size_t pairs,
                                                               std::uint64_t seed) {
  return std::make_unique<Fixture<InteractionOracle>>(
      d, InteractionOracle::Random(SyntheticSourceTexts(d), k, pairs, seed),
      PlantedLinearOracle::kCannedResponse);
}

inline std::unique_ptr<Fixture<PoisonOracle>> Poison(std::size_t d, std::size_t index,
                                                     std::uint64_t seed) {
  return std::make_unique<Fixture<PoisonOracle>>(
      d, PoisonOracle::Random(SyntheticSourceTexts(d), index, seed),
      PoisonOracle::kFlippedResponse);
}

// Reference log-sigmoid, written out directly.
inline double RefLogSigmoid(double z) {
  return z >= 0 ? -std::log1p(std::exp(-z)) : z - std::log1p(std::exp(z));
}

// Dense OLS with intercept through the normal equations [1 X]'[1 X] beta = [1 X]'y,
// solved by Gaussian elimination with partial pivoting.
inline std::vector<double> NormalEquationsOls(const std::vector<std::vector<double>>& rows,
                                              const std::vector<double>& y) {
  const std::size_t p = rows.front().size() + 1;
  std::vector<std::vector<double>> a(p, std::vector<double>(p + 1, 0.0));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::vector<double> z{1.0};
    z.insert(z.end(), rows[i].begin(), rows[i].end());
    for (std::size_t r = 0; r < p; ++r) {
      for (std::size_t c = 0; c < p; ++c) a[r][c] += z[r] * z[c];
      a[r][p] += z[r] * y[i];
    }
  }
  for (std::size_t col = 0; col < p; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < p; ++r) {
      if (std::fabs(a[r][col]) > std::fabs(a[piv][col])) piv = r;
    }
    std::swap(a[col], a[piv]);
    for (std::size_t r = 0; r < p; ++r) {
      if (r == col) continue;
      const double f = a[r][col] / a[col][col];
      for (std::size_t c = col; c <= p; ++c) a[r][c] -= f * a[col][c];
    }
  }
  std::vector<double> beta(p);
  for (std::size_t r = 0; r < p; ++r) beta[r] = a[r][p] / a[r][r];
  return beta;  // beta[0] is the intercept
}

inline std::vector<std::vector<double>> Rows(const std::vector<AblationVector>& masks) {
  std::vector<std::vector<double>> rows;
  for (const auto& m : masks) {
    std::vector<double> r(m.size());
    for (std::size_t j = 0; j < m.size(); ++j) r[j] = m[j] ? 1.0 : 0.0;
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace ctxcite::testing
