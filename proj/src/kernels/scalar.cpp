#include "sigcal/kernels/kernels.hpp"

#include <algorithm>
#include <cstdint>

namespace sigcal::kernels {

namespace {

void axpy(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

double dot(const double* a, const double* b, std::size_t n) {
  double s = 0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void hinge_sums(const double* s, std::size_t n, double K, double sign, double* sum, double* sumsq) {
  double a = 0, b = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double v = std::max(sign * (s[i] - K), 0.0);
    a += v;
    b += v * v;
  }
  *sum = a;
  *sumsq = b;
}

void sig_append4(double* s, const double* x, int A, int N, double* scratch) {
  std::size_t top = 1;
  for (int k = 0; k < N; ++k) top *= A;
  double* b0 = scratch;
  double* b1 = scratch + top * kLanes;
  std::size_t off[32];
  off[0] = 0;
  std::size_t p = 1;
  for (int k = 1; k <= N + 1; ++k) {
    off[k] = off[k - 1] + p;
    p *= A;
  }
  for (int k = N; k >= 1; --k) {
    for (int a = 0; a < A; ++a)
      for (int l = 0; l < kLanes; ++l) b0[a * kLanes + l] = s[l] * x[a * kLanes + l] / k;
    std::size_t len = A;
    for (int j = 1; j < k; ++j) {
      const double* sj = s + off[j] * kLanes;
      const double scale = 1.0 / (k - j);
      for (std::size_t i = 0; i < len; ++i) {
        double v[kLanes];
        for (int l = 0; l < kLanes; ++l) v[l] = (b0[i * kLanes + l] + sj[i * kLanes + l]) * scale;
        double* row = b1 + i * A * kLanes;
        for (int a = 0; a < A; ++a)
          for (int l = 0; l < kLanes; ++l) row[a * kLanes + l] = v[l] * x[a * kLanes + l];
      }
      len *= A;
      std::swap(b0, b1);
    }
    double* sk = s + off[k] * kLanes;
    for (std::size_t i = 0; i < len * kLanes; ++i) sk[i] += b0[i];
  }
}

const KernelTable kScalar{"scalar", axpy, dot, hinge_sums, sig_append4};

}  // namespace

const KernelTable& scalar_table() { return kScalar; }

}  // namespace sigcal::kernels
