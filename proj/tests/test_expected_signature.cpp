#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "sigcal/expected_signature.hpp"
#include "sigcal/pricing.hpp"

using namespace sigcal;

namespace {

Eigen::MatrixXd random_corr(std::mt19937_64& rng, int d) {
  std::normal_distribution<double> nd;
  Eigen::MatrixXd G(d, d + 2);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d + 2; ++j) G(i, j) = nd(rng);
  Eigen::MatrixXd C = G * G.transpose();
  Eigen::VectorXd s = C.diagonal().cwiseSqrt().cwiseInverse();
  Eigen::MatrixXd R = s.asDiagonal() * C * s.asDiagonal();
  R.diagonal().setOnes();
  return R;
}

}  // namespace

TEST(CorrelationSpec, Validation) {
  EXPECT_NO_THROW(CorrelationSpec::pair(-0.5).validate());
  Eigen::MatrixXd bad(2, 2);
  bad << 1, 1.2, 1.2, 1;
  EXPECT_THROW(CorrelationSpec(bad).validate(), std::invalid_argument);
  bad << 2, 0, 0, 1;
  EXPECT_THROW(CorrelationSpec(bad).validate(), std::invalid_argument);
  bad << 1, 0.3, 0.2, 1;
  EXPECT_THROW(CorrelationSpec(bad).validate(), std::invalid_argument);
}

TEST(CorrelationSpec, CholeskyJitter) {
  // Perfect correlation is singular but repairable.
  Eigen::MatrixXd L = CorrelationSpec::pair(1.0).cholesky();
  EXPECT_NEAR((L * L.transpose())(0, 1), 1.0, 1e-6);
  Eigen::MatrixXd m(3, 3);
  m << 1, 0.9, -0.9, 0.9, 1, 0.9, -0.9, 0.9, 1;  // indefinite
  EXPECT_THROW(CorrelationSpec(m).cholesky(), std::invalid_argument);
}

TEST(ExpectedSig, WordExamples) {
  CorrelationSpec r = CorrelationSpec::pair(-0.5);
  EXPECT_DOUBLE_EQ(expected_sig_word(Word({0, 0}), 1.7, r), 1.7 * 1.7 / 2);
  EXPECT_EQ(expected_sig_word(Word({1}), 1.0, r), 0.0);
  EXPECT_NEAR(expected_sig_word(Word({1, 2, 1, 2}), 1.0, r), 0.03125, 1e-16);
  EXPECT_EQ(expected_sig_word(Word({1, 0, 2}), 1.0, r), 0.0);
  EXPECT_EQ(expected_sig_word(Word({1, 2, 1}), 1.0, r), 0.0);
  EXPECT_THROW(expected_sig_word(Word({3}), 1.0, r), std::invalid_argument);
}

TEST(ExpectedSig, SeriesExamples) {
  CorrelationSpec r = CorrelationSpec::pair(-0.5);
  TensorSeries e1 = expected_sig(1, 0.8, r);
  TensorSeries want = TensorSeries::unit(3, 1);
  want.coeff_ref(Word{0}) = 0.8;
  EXPECT_EQ(e1.max_abs_diff(want), 0.0);
  EXPECT_NEAR(expected_sig(2, 1.0, r).coeff(Word({1, 2})), -0.25, 1e-16);
  EXPECT_LE(expected_sig(4, 1.3, r).max_abs_diff(q_series_expected_sig(4, 1.3, r)), 1e-12);
}

TEST(ExpectedSig, QSeriesExamples) {
  CorrelationSpec r = CorrelationSpec::identity(1);
  EXPECT_EQ(q_series_expected_sig(0, 2.0, r).max_abs_diff(TensorSeries::unit(2, 0)), 0.0);
  TensorSeries q = q_series_expected_sig(2, 0.6, r);
  TensorSeries want = TensorSeries::unit(2, 2);
  want.coeff_ref(Word{0}) = 0.6;
  want.coeff_ref(Word({0, 0})) = 0.18;
  want.coeff_ref(Word({1, 1})) = 0.3;
  EXPECT_LE(q.max_abs_diff(want), 1e-15);
}

TEST(ExpectedSig, ClosedFormMatchesIndependentQSeries) {
  std::mt19937_64 rng(21);
  for (int d = 1; d <= 3; ++d)
    for (int rep = 0; rep < 3; ++rep) {
      CorrelationSpec r(random_corr(rng, d));
      const double t = 0.3 + rep;
      const int N = d == 3 ? 5 : 6;
      TensorSeries E = expected_sig(N, t, r);
      auto ref = oracle::expected_signature(r.rho, t, N);
      for (const auto& w : all_words(d + 1, N))
        ASSERT_NEAR(E.coeff(w), oracle::get(ref, w.letters()), 1e-12 * std::max(1.0, std::abs(E.coeff(w)))) << w.str();
    }
}

TEST(ExpectedSig, OddRunsVanish) {
  CorrelationSpec r(Eigen::MatrixXd::Constant(2, 2, 0.4) + 0.6 * Eigen::MatrixXd::Identity(2, 2));
  for (const auto& w : all_words(3, 6)) {
    int run = 0;
    bool odd = false;
    for (int l : w.letters()) {
      if (l == 0) {
        odd |= run % 2 == 1;
        run = 0;
      } else {
        ++run;
      }
    }
    odd |= run % 2 == 1;
    if (odd) ASSERT_EQ(expected_sig_word(w, 1.1, r), 0.0) << w.str();
  }
}

TEST(ExpectedSig, AbuttingBlocksDecompositionInvariant) {
  // (1,2,2,1) splits as (1,2)(2,1) with no time between; pairing is
  // positional so the value is t^2/2 * (1/2)^2 * rho12 * rho21.
  CorrelationSpec r = CorrelationSpec::pair(0.3);
  EXPECT_NEAR(expected_sig_word(Word({1, 2, 2, 1}), 2.0, r), 2.0 * 0.25 * 0.09, 1e-15);
  EXPECT_NEAR(expected_sig_word(Word({1, 2, 0, 2, 1}), 2.0, r), std::pow(2.0, 3) / 6 * 0.25 * 0.09, 1e-15);
}

TEST(ExpectedSig, MonteCarloAgreement) {
  CorrelationSpec r = CorrelationSpec::pair(-0.5);
  auto grid = make_grid(1.0, 1.0 / 100);
  DriverSampler sampler(2, r, grid, 5);
  const std::size_t n = 40000;
  SigSamples s = sample_signatures(sampler, n, 3, 1.0);
  TensorSeries E = expected_sig(3, 1.0, r);
  auto words = all_words(3, 3);
  int outside = 0;
  for (std::size_t c = 0; c < words.size(); ++c) {
    const double m = s.rows.col(c).mean();
    const double sd = std::sqrt((s.rows.col(c).array() - m).square().sum() / (n - 1));
    const double se = sd / std::sqrt(static_cast<double>(n));
    if (std::abs(m - E.coeff(words[c])) > 3 * se + 1e-12) ++outside;
  }
  // 40 words at 3 SE: a couple of excursions are expected by chance.
  EXPECT_LE(outside, 2);
}

TEST(ConditionalExpectedSig, Examples) {
  CorrelationSpec r = CorrelationSpec::pair(0.2);
  EXPECT_LE(conditional_expected_sig(TensorSeries::unit(3, 4), 0.7, r, 4).max_abs_diff(expected_sig(4, 0.7, r)), 1e-15);
  std::mt19937_64 rng(3);
  SamplePath p = oracle::random_path(rng, 2, 5, 0.2);
  TensorSeries s = terminal_signature(p, 4);
  EXPECT_LE(conditional_expected_sig(s, 0.0, r, 4).max_abs_diff(s), 1e-15);
  EXPECT_THROW(conditional_expected_sig(s, 0.5, r, 5), std::invalid_argument);
}

TEST(ConditionalExpectedSig, MonteCarloContinuation) {
  // Fixed history on [0, 0.3], random continuation on [0.3, 1].
  CorrelationSpec r = CorrelationSpec::pair(-0.4);
  std::mt19937_64 rng(8);
  SamplePath hist = oracle::random_path(rng, 2, 4, 0.2);
  hist.times = {0, 0.1, 0.2, 0.3};
  TensorSeries s = terminal_signature(hist, 3);
  auto grid = make_grid(0.7, 0.7 / 70);
  DriverSampler sampler(2, r, grid, 17);
  const std::size_t n = 40000;
  SigSamples cont = sample_signatures(sampler, n, 3, 0.7);
  auto words = all_words(3, 3);
  TensorSeries want = conditional_expected_sig(s, 0.7, r, 3);
  std::vector<double> acc(words.size()), acc2(words.size());
  for (std::size_t i = 0; i < n; ++i) {
    TensorSeries c(3, 3);
    for (std::size_t k = 0; k < words.size(); ++k) c.data()[k] = cont.rows(i, k);
    TensorSeries full = concat(s, c, 3);
    for (std::size_t k = 0; k < words.size(); ++k) {
      acc[k] += full.data()[k];
      acc2[k] += full.data()[k] * full.data()[k];
    }
  }
  int outside = 0;
  for (std::size_t k = 0; k < words.size(); ++k) {
    const double m = acc[k] / n, se = std::sqrt(std::max(0.0, acc2[k] / n - m * m) / n);
    if (std::abs(m - want.data()[k]) > 3 * se + 1e-12) ++outside;
  }
  EXPECT_LE(outside, 2);
}
