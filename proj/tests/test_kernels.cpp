#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "ctxcite/kernels.hpp"

namespace ctxcite::kernels {
namespace {

std::vector<const KernelTable*> Variants() {
  std::vector<const KernelTable*> out{&ScalarKernels()};
  if (const auto* k = Avx2Kernels()) out.push_back(k);
  if (const auto* k = NeonKernels()) out.push_back(k);
  return out;
}

double Tol(double magnitude, std::size_t n) {
  return 1e-14 * (1.0 + magnitude) * static_cast<double>(n + 1);
}

TEST(Kernels, ScalarMatchesNaiveLoops) {
  const std::vector<double> a{1.5, -2.0, 3.25};
  const std::vector<double> b{2.0, 0.5, -1.0};
  const std::vector<std::uint8_t> m{1, 0, 1};
  const auto& s = ScalarKernels();
  EXPECT_EQ(s.dot(a.data(), b.data(), 3), 1.5 * 2.0 - 2.0 * 0.5 - 3.25);
  EXPECT_EQ(s.sum(a.data(), 3), 2.75);
  EXPECT_EQ(s.sumSquares(b.data(), 3), 5.25);
  EXPECT_EQ(s.maskedSum(a.data(), m.data(), 3), 4.75);
  std::vector<double> y = b;
  s.axpy(2.0, a.data(), y.data(), 3);
  EXPECT_EQ(y, (std::vector<double>{5.0, -3.5, 5.5}));
}

TEST(Kernels, VariantsAgreeWithScalar) {
  std::mt19937_64 gen(17);
  std::normal_distribution<double> normal(0.0, 3.0);
  const auto& ref = ScalarKernels();
  for (const KernelTable* k : Variants()) {
    SCOPED_TRACE(std::string(IsaName(k->isa)));
    for (std::size_t n : {0, 1, 2, 3, 4, 5, 7, 8, 15, 16, 17, 31, 32, 33, 100, 257, 1000}) {
      std::vector<double> a(n), b(n), y(n);
      std::vector<std::uint8_t> mask(n);
      for (std::size_t i = 0; i < n; ++i) {
        a[i] = normal(gen);
        b[i] = normal(gen);
        y[i] = normal(gen);
        mask[i] = static_cast<std::uint8_t>(gen() & 1);
      }
      double mag = 0;
      for (std::size_t i = 0; i < n; ++i) mag += std::fabs(a[i] * b[i]) + a[i] * a[i];
      EXPECT_NEAR(k->dot(a.data(), b.data(), n), ref.dot(a.data(), b.data(), n), Tol(mag, n));
      EXPECT_NEAR(k->sum(a.data(), n), ref.sum(a.data(), n), Tol(mag, n));
      EXPECT_NEAR(k->sumSquares(a.data(), n), ref.sumSquares(a.data(), n), Tol(mag, n));
      EXPECT_NEAR(k->maskedSum(a.data(), mask.data(), n), ref.maskedSum(a.data(), mask.data(), n),
                  Tol(mag, n));
      std::vector<double> y1 = y, y2 = y;
      k->axpy(-0.75, a.data(), y1.data(), n);
      ref.axpy(-0.75, a.data(), y2.data(), n);
      for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(y1[i], y2[i], 1e-14 * (1 + std::fabs(y2[i])));
    }
  }
}

TEST(Kernels, MaskedSumIgnoresNonBinaryMaskValues) {
  std::vector<double> w(37, 1.0);
  std::vector<std::uint8_t> mask(37, 0);
  mask[3] = 1;
  mask[20] = 255;
  mask[36] = 2;
  for (const KernelTable* k : Variants()) {
    EXPECT_EQ(k->maskedSum(w.data(), mask.data(), 37), 3.0) << IsaName(k->isa);
  }
}

TEST(Kernels, ActiveIsOneOfTheVariants) {
  const Isa active = Active().isa;
  bool found = false;
  for (const KernelTable* k : Variants()) found = found || k->isa == active;
  EXPECT_TRUE(found);
}

}  // namespace
}  // namespace ctxcite::kernels
