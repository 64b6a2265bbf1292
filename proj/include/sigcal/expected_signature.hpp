#pragma once

#include <Eigen/Core>

#include "sigcal/tensor_algebra.hpp"

namespace sigcal {

// Correlation of d Brownian drivers.
struct CorrelationSpec {
  Eigen::MatrixXd rho;

  CorrelationSpec() = default;
  explicit CorrelationSpec(Eigen::MatrixXd r);
  static CorrelationSpec identity(int d);
  // d = 2 with off-diagonal r.
  static CorrelationSpec pair(double r);

  int d() const { return static_cast<int>(rho.rows()); }
  void validate() const;
  // Lower Cholesky factor; jitter 1e-12 grows tenfold up to 1e-8 before giving up.
  Eigen::MatrixXd cholesky() const;
};

double expected_sig_word(const Word& I, double t, const CorrelationSpec& spec);
TensorSeries expected_sig(int N, double t, const CorrelationSpec& spec);
// Sum_k t^k / k! Q^k with Q = e_0 + 1/2 sum rho_ij e_ij.
TensorSeries q_series_expected_sig(int N, double t, const CorrelationSpec& spec);
// E[sig_{s+t} | F_s] given sig_s.
TensorSeries conditional_expected_sig(const TensorSeries& sig_s, double t, const CorrelationSpec& spec, int N);

}  // namespace sigcal
