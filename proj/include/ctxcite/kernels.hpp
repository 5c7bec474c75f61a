#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

// Dense inner loops used by the surrogate fit and the metrics. Each kernel has
// a scalar reference and vectorised variants; the variant is chosen once at
// startup from the CPU features, or forced with CTXCITE_SIMD=scalar|avx2|neon.
namespace ctxcite::kernels {

enum class Isa { kScalar, kAvx2, kNeon };

std::string_view IsaName(Isa isa);

struct KernelTable {
  Isa isa;
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  double (*sum)(const double* x, std::size_t n);
  double (*sumSquares)(const double* x, std::size_t n);
  // sum of w[i] over i with mask[i] != 0
  double (*maskedSum)(const double* w, const std::uint8_t* mask, std::size_t n);
};

const KernelTable& ScalarKernels();
// Null when the variant is not compiled in or not supported by this CPU.
const KernelTable* Avx2Kernels();
const KernelTable* NeonKernels();

const KernelTable& Active();

inline double Dot(std::span<const double> a, std::span<const double> b) {
  return Active().dot(a.data(), b.data(), a.size());
}
inline void Axpy(double alpha, std::span<const double> x, std::span<double> y) {
  Active().axpy(alpha, x.data(), y.data(), x.size());
}
inline double Sum(std::span<const double> x) {
  return Active().sum(x.data(), x.size());
}
inline double SumSquares(std::span<const double> x) {
  return Active().sumSquares(x.data(), x.size());
}
inline double MaskedSum(std::span<const double> w,
                        std::span<const std::uint8_t> mask) {
  return Active().maskedSum(w.data(), mask.data(), w.size());
}

}  // namespace ctxcite::kernels
