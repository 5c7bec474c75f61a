// Built with -mavx2 -mfma; only reached after a runtime CPU check.
#include "ctxcite/kernels.hpp"

#if defined(__x86_64__) && defined(__AVX2__) && defined(__FMA__)
#include <immintrin.h>

#include <cstring>

namespace ctxcite::kernels {
namespace {

double HorizontalSum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d pair = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(pair, _mm_unpackhi_pd(pair, pair)));
}

double DotAvx2(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4),
                           _mm256_loadu_pd(b + i + 4), acc1);
  }
  if (i + 4 <= n) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    i += 4;
  }
  double s = HorizontalSum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void AxpyAvx2(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d a = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(a, _mm256_loadu_pd(x + i),
                                            _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

double SumAvx2(const double* x, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
  double s = HorizontalSum(acc);
  for (; i < n; ++i) s += x[i];
  return s;
}

double SumSquaresAvx2(const double* x, std::size_t n) { return DotAvx2(x, x, n); }

double MaskedSumAvx2(const double* w, const std::uint8_t* mask, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  const __m256i zero = _mm256_setzero_si256();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    std::int32_t packed;
    std::memcpy(&packed, mask + i, sizeof(packed));
    const __m256i lanes = _mm256_cvtepu8_epi64(_mm_cvtsi32_si128(packed));
    // All-ones where mask != 0.
    const __m256i keep =
        _mm256_xor_si256(_mm256_cmpeq_epi64(lanes, zero), _mm256_set1_epi64x(-1));
    acc = _mm256_add_pd(
        acc, _mm256_and_pd(_mm256_loadu_pd(w + i), _mm256_castsi256_pd(keep)));
  }
  double s = HorizontalSum(acc);
  for (; i < n; ++i) {
    if (mask[i]) s += w[i];
  }
  return s;
}

}  // namespace

const KernelTable* Avx2Kernels() {
  static constexpr KernelTable table{Isa::kAvx2, DotAvx2, AxpyAvx2, SumAvx2,
                                     SumSquaresAvx2, MaskedSumAvx2};
  static const bool supported =
      __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  return supported ? &table : nullptr;
}

}  // namespace ctxcite::kernels

#else

namespace ctxcite::kernels {
const KernelTable* Avx2Kernels() { return nullptr; }
}  // namespace ctxcite::kernels

#endif
