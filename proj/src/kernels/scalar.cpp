#include "ctxcite/kernels.hpp"

namespace ctxcite::kernels {
namespace {

double DotScalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void AxpyScalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

double SumScalar(const double* x, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i];
  return s;
}

double SumSquaresScalar(const double* x, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i] * x[i];
  return s;
}

double MaskedSumScalar(const double* w, const std::uint8_t* mask,
                       std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (mask[i]) s += w[i];
  }
  return s;
}

}  // namespace

const KernelTable& ScalarKernels() {
  static constexpr KernelTable table{Isa::kScalar, DotScalar, AxpyScalar,
                                     SumScalar, SumSquaresScalar,
                                     MaskedSumScalar};
  return table;
}

}  // namespace ctxcite::kernels
