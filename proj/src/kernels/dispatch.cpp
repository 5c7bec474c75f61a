#include <cstdlib>
#include <iostream>
#include <string>

#include "ctxcite/kernels.hpp"

namespace ctxcite::kernels {
namespace {

const KernelTable& Select() {
  const char* forced = std::getenv("CTXCITE_SIMD");
  if (forced != nullptr && *forced != '\0') {
    const std::string want(forced);
    if (want == "scalar") return ScalarKernels();
    if (want == "avx2" && Avx2Kernels() != nullptr) return *Avx2Kernels();
    if (want == "neon" && NeonKernels() != nullptr) return *NeonKernels();
    std::clog << "ctxcite: CTXCITE_SIMD=" << want
              << " unavailable, using auto-detection\n";
  }
  if (const KernelTable* t = Avx2Kernels()) return *t;
  if (const KernelTable* t = NeonKernels()) return *t;
  return ScalarKernels();
}

}  // namespace

std::string_view IsaName(Isa isa) {
  switch (isa) {
    case Isa::kScalar: return "scalar";
    case Isa::kAvx2: return "avx2";
    case Isa::kNeon: return "neon";
  }
  return "scalar";
}

const KernelTable& Active() {
  static const KernelTable& table = Select();
  return table;
}

}  // namespace ctxcite::kernels
