#include "sigcal/expected_signature.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <stdexcept>

namespace sigcal {

CorrelationSpec::CorrelationSpec(Eigen::MatrixXd r) : rho(std::move(r)) { validate(); }

CorrelationSpec CorrelationSpec::identity(int d) { return CorrelationSpec(Eigen::MatrixXd::Identity(d, d)); }

CorrelationSpec CorrelationSpec::pair(double r) {
  Eigen::MatrixXd m(2, 2);
  m << 1.0, r, r, 1.0;
  return CorrelationSpec(m);
}

void CorrelationSpec::validate() const {
  if (rho.rows() != rho.cols() || rho.rows() < 1) throw std::invalid_argument("correlation matrix must be square");
  for (int i = 0; i < rho.rows(); ++i) {
    if (std::abs(rho(i, i) - 1.0) > 1e-12) throw std::invalid_argument("correlation diagonal must be 1");
    for (int j = 0; j < rho.cols(); ++j) {
      if (std::abs(rho(i, j) - rho(j, i)) > 1e-12) throw std::invalid_argument("correlation matrix must be symmetric");
      if (std::abs(rho(i, j)) > 1.0) throw std::invalid_argument("correlation entries must lie in [-1, 1]");
    }
  }
}

Eigen::MatrixXd CorrelationSpec::cholesky() const {
  const int d = this->d();
  for (double jitter = 0.0; jitter <= 1e-8 * 1.0001; jitter = jitter == 0.0 ? 1e-12 : jitter * 10) {
    Eigen::MatrixXd m = rho + jitter * Eigen::MatrixXd::Identity(d, d);
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    if (llt.info() == Eigen::Success) return llt.matrixL();
  }
  throw std::invalid_argument("correlation matrix is not positive semidefinite");
}

namespace {

double factorial(int k) {
  double f = 1;
  for (int i = 2; i <= k; ++i) f *= i;
  return f;
}

}  // namespace

double expected_sig_word(const Word& I, double t, const CorrelationSpec& spec) {
  const int d = spec.d();
  int k = 0, h = 0;
  double rho_prod = 1.0;
  std::size_t i = 0;
  while (i < I.size()) {
    int l = I[i];
    if (l < 0 || l > d) throw std::invalid_argument("letter outside alphabet in " + I.str());
    if (l == 0) {
      ++k;
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < I.size() && I[j] != 0) {
      if (I[j] > d) throw std::invalid_argument("letter outside alphabet in " + I.str());
      ++j;
    }
    if ((j - i) % 2 == 1) return 0.0;
    for (std::size_t a = i; a < j; a += 2) rho_prod *= spec.rho(I[a] - 1, I[a + 1] - 1);
    h += static_cast<int>((j - i) / 2);
    i = j;
  }
  return std::pow(t, k + h) / factorial(k + h) * std::pow(0.5, h) * rho_prod;
}

TensorSeries expected_sig(int N, double t, const CorrelationSpec& spec) {
  const int A = spec.d() + 1;
  TensorSeries out(A, N);
  for (int k = 0; k <= N; ++k) {
    auto lv = out.level(k);
    for (std::size_t i = 0; i < lv.size(); ++i) lv[i] = expected_sig_word(index_to_word(i, k, A), t, spec);
  }
  return out;
}

TensorSeries q_series_expected_sig(int N, double t, const CorrelationSpec& spec) {
  const int d = spec.d();
  const int A = d + 1;
  TensorSeries Q(A, std::max(N, 2));
  Q.coeff_ref(Word{0}) = 1.0;
  for (int i = 1; i <= d; ++i)
    for (int j = 1; j <= d; ++j) Q.coeff_ref(Word{i, j}) = 0.5 * spec.rho(i - 1, j - 1);
  Q = Q.with_depth(N);
  TensorSeries out = TensorSeries::unit(A, N);
  TensorSeries power = TensorSeries::unit(A, N);
  for (int k = 1; k <= N; ++k) {
    power = concat(power, Q, N);
    out += (std::pow(t, k) / factorial(k)) * power;
  }
  return out;
}

TensorSeries conditional_expected_sig(const TensorSeries& sig_s, double t, const CorrelationSpec& spec, int N) {
  if (sig_s.alphabet() != spec.d() + 1) throw std::invalid_argument("alphabet mismatch");
  if (sig_s.depth() < N) throw std::invalid_argument("signature level below requested level");
  return concat(sig_s, expected_sig(N, t, spec), N);
}

}  // namespace sigcal
