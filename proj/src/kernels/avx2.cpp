#include <immintrin.h>

#include <algorithm>

#include "sigcal/kernels/kernels.hpp"

namespace sigcal::kernels {

namespace {

void axpy(double a, const double* x, double* y, std::size_t n) {
  __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  for (; i < n; ++i) y[i] += a * x[i];
}

double dot(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd(), acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4) acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  alignas(32) double t[4];
  _mm256_store_pd(t, _mm256_add_pd(acc0, acc1));
  double s = (t[0] + t[1]) + (t[2] + t[3]);
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void hinge_sums(const double* s, std::size_t n, double K, double sign, double* sum, double* sumsq) {
  __m256d vk = _mm256_set1_pd(K), vs = _mm256_set1_pd(sign), zero = _mm256_setzero_pd();
  __m256d a = zero, b = zero;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d v = _mm256_max_pd(_mm256_mul_pd(vs, _mm256_sub_pd(_mm256_loadu_pd(s + i), vk)), zero);
    a = _mm256_add_pd(a, v);
    b = _mm256_fmadd_pd(v, v, b);
  }
  alignas(32) double ta[4], tb[4];
  _mm256_store_pd(ta, a);
  _mm256_store_pd(tb, b);
  double ra = (ta[0] + ta[1]) + (ta[2] + ta[3]);
  double rb = (tb[0] + tb[1]) + (tb[2] + tb[3]);
  for (; i < n; ++i) {
    double v = std::max(sign * (s[i] - K), 0.0);
    ra += v;
    rb += v * v;
  }
  *sum = ra;
  *sumsq = rb;
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
  __m256d xv[16];
  for (int a = 0; a < A; ++a) xv[a] = _mm256_loadu_pd(x + a * kLanes);
  const __m256d s0 = _mm256_loadu_pd(s);
  for (int k = N; k >= 1; --k) {
    const __m256d inv_k = _mm256_set1_pd(1.0 / k);
    const __m256d s0k = _mm256_mul_pd(s0, inv_k);
    for (int a = 0; a < A; ++a) _mm256_storeu_pd(b0 + a * kLanes, _mm256_mul_pd(s0k, xv[a]));
    std::size_t len = A;
    for (int j = 1; j < k; ++j) {
      const double* sj = s + off[j] * kLanes;
      const __m256d scale = _mm256_set1_pd(1.0 / (k - j));
      for (std::size_t i = 0; i < len; ++i) {
        __m256d v = _mm256_mul_pd(_mm256_add_pd(_mm256_loadu_pd(b0 + i * kLanes), _mm256_loadu_pd(sj + i * kLanes)), scale);
        double* row = b1 + i * A * kLanes;
        for (int a = 0; a < A; ++a) _mm256_storeu_pd(row + a * kLanes, _mm256_mul_pd(v, xv[a]));
      }
      len *= A;
      std::swap(b0, b1);
    }
    double* sk = s + off[k] * kLanes;
    for (std::size_t i = 0; i < len * kLanes; i += 4)
      _mm256_storeu_pd(sk + i, _mm256_add_pd(_mm256_loadu_pd(sk + i), _mm256_loadu_pd(b0 + i)));
  }
}

const KernelTable kAvx2{"avx2", axpy, dot, hinge_sums, sig_append4};

}  // namespace

const KernelTable* avx2_impl() { return &kAvx2; }

}  // namespace sigcal::kernels
