#pragma once

// Hot loops with a scalar reference implementation and an AVX2 variant.
// The active table is chosen once at startup from CPU support; setting
// SIGCAL_SIMD=scalar forces the reference kernels.

#include <cstddef>

namespace sigcal::kernels {

constexpr int kLanes = 4;

struct KernelTable {
  const char* name;
  // y += a * x
  void (*axpy)(double a, const double* x, double* y, std::size_t n);
  double (*dot)(const double* a, const double* b, std::size_t n);
  // Sums of max(sign * (s - K), 0) and of its square; sign is +1 (call) or -1 (put).
  void (*hinge_sums)(const double* s, std::size_t n, double K, double sign, double* sum, double* sumsq);
  // Four signatures at once: s <- s (x) exp(x) per lane. Component c of lane
  // l lives at s[c * 4 + l]; letter a of lane l at x[a * 4 + l]. scratch
  // needs 2 * 4 * A^N doubles.
  void (*sig_append4)(double* s, const double* x, int A, int N, double* scratch);
};

const KernelTable& scalar_table();
// nullptr when the build or the CPU lacks AVX2.
const KernelTable* avx2_table();
const KernelTable& active();

}  // namespace sigcal::kernels
