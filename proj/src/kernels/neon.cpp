#include "ctxcite/kernels.hpp"

#if defined(__aarch64__) && defined(__ARM_NEON)
#include <arm_neon.h>

namespace ctxcite::kernels {
namespace {

double DotNeon(const double* a, const double* b, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
    acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
  }
  double s = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void AxpyNeon(double alpha, const double* x, double* y, std::size_t n) {
  const float64x2_t a = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), a, vld1q_f64(x + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

double SumNeon(const double* x, std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) acc = vaddq_f64(acc, vld1q_f64(x + i));
  double s = vaddvq_f64(acc);
  for (; i < n; ++i) s += x[i];
  return s;
}

double SumSquaresNeon(const double* x, std::size_t n) { return DotNeon(x, x, n); }

double MaskedSumNeon(const double* w, const std::uint8_t* mask, std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const uint64x2_t keep = {mask[i] ? ~0ULL : 0ULL, mask[i + 1] ? ~0ULL : 0ULL};
    acc = vaddq_f64(acc, vreinterpretq_f64_u64(vandq_u64(
                             vreinterpretq_u64_f64(vld1q_f64(w + i)), keep)));
  }
  double s = vaddvq_f64(acc);
  for (; i < n; ++i) {
    if (mask[i]) s += w[i];
  }
  return s;
}

}  // namespace

const KernelTable* NeonKernels() {
  static constexpr KernelTable table{Isa::kNeon, DotNeon, AxpyNeon, SumNeon,
                                     SumSquaresNeon, MaskedSumNeon};
  return &table;
}

}  // namespace ctxcite::kernels

#else

namespace ctxcite::kernels {
const KernelTable* NeonKernels() { return nullptr; }
}  // namespace ctxcite::kernels

#endif
