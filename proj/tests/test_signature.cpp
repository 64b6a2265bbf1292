#include <gtest/gtest.h>

#include <map>
#include <random>

#include "oracles.hpp"
#include "sigcal/signature.hpp"

using namespace sigcal;

namespace {

SamplePath line(std::vector<double> t, std::vector<std::vector<double>> x) {
  SamplePath p;
  p.times = std::move(t);
  p.values.resize(x.size(), x[0].size());
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t a = 0; a < x[0].size(); ++a) p.values(i, a) = x[i][a];
  return p;
}

// Iterated integrals of the interpolant by nested trapezoid sums on a fine
// subdivision; exact limit as the subdivision shrinks.
double quad_word(const SamplePath& p, const std::vector<int>& w, int sub) {
  std::vector<double> t;
  Eigen::MatrixXd X;
  const std::size_t M = p.size() - 1;
  X.resize(M * sub + 1, p.d() + 1);
  for (std::size_t i = 0; i < M; ++i)
    for (int s = 0; s < sub; ++s) {
      const double u = static_cast<double>(s) / sub;
      const std::size_t r = i * sub + s;
      X(r, 0) = p.times[i] + u * (p.times[i + 1] - p.times[i]);
      for (int a = 0; a < p.d(); ++a) X(r, a + 1) = p.values(i, a) + u * (p.values(i + 1, a) - p.values(i, a));
    }
  X(M * sub, 0) = p.times.back();
  for (int a = 0; a < p.d(); ++a) X(M * sub, a + 1) = p.values(M, a);
  const Eigen::Index R = X.rows();
  std::vector<double> I(R, 1.0);
  for (int letter : w) {
    std::vector<double> next(R, 0.0);
    for (Eigen::Index r = 1; r < R; ++r)
      next[r] = next[r - 1] + 0.5 * (I[r] + I[r - 1]) * (X(r, letter) - X(r - 1, letter));
    I = next;
  }
  return I.back();
}

}  // namespace

TEST(PathSignature, OneDimensionalClosedForm) {
  const double a = 0.8;
  SamplePath p = line({0, 1}, {{0.3}, {0.3 + a}});
  SigStream s = path_signature(p, 8);
  double f = 1;
  for (int k = 1; k <= 8; ++k) {
    f *= k;
    EXPECT_NEAR(s.sigs.back().coeff(Word(std::vector<int>(k, 1))), std::pow(a, k) / f, 1e-15);
  }
}

TEST(PathSignature, ConstantPathIsPureTime) {
  SamplePath p = line({0, 0.5, 1.25}, {{1, 2}, {1, 2}, {1, 2}});
  TensorSeries s = terminal_signature(p, 4);
  double f = 1;
  for (const auto& w : all_words(3, 4)) {
    bool time_only = true;
    for (int l : w.letters()) time_only &= l == 0;
    if (!time_only) EXPECT_EQ(s.coeff(w), 0.0) << w.str();
  }
  for (int k = 1; k <= 4; ++k) {
    f *= k;
    EXPECT_NEAR(s.coeff(Word(std::vector<int>(k, 0))), std::pow(1.25, k) / f, 1e-14);
  }
}

TEST(PathSignature, TwoSegmentsMatchQuadrature) {
  SamplePath p = line({0, 0.4, 1.0}, {{0, 0}, {0.5, -0.2}, {0.1, 0.6}});
  TensorSeries s = terminal_signature(p, 3);
  for (const auto& w : all_words(3, 3)) {
    if (w.empty()) continue;
    EXPECT_NEAR(s.coeff(w), quad_word(p, w.letters(), 2000), 2e-6) << w.str();
  }
}

TEST(PathSignature, MatchesOracleAndStreamInvariants) {
  std::mt19937_64 rng(11);
  SamplePath p = oracle::random_path(rng, 2, 9);
  SigStream s = path_signature(p, 4);
  ASSERT_EQ(s.size(), p.size());
  EXPECT_EQ(s.sigs[0].max_abs_diff(TensorSeries::unit(3, 4)), 0.0);
  for (std::size_t m = 0; m < s.size(); ++m) EXPECT_EQ(s.sigs[m].coeff(Word{0}), p.times[m] - p.times[0]);
  auto ref = oracle::signature(p, 4);
  for (const auto& w : all_words(3, 4)) EXPECT_NEAR(s.sigs.back().coeff(w), oracle::get(ref, w.letters()), 1e-11);
}

TEST(PathSignature, ChenConsistency) {
  std::mt19937_64 rng(12);
  SamplePath p = oracle::random_path(rng, 2, 12);
  SigStream s = path_signature(p, 5);
  for (std::size_t j = 0; j < s.size(); j += 3)
    for (std::size_t m = j; m < s.size(); m += 2) {
      TensorSeries inc = sig_increment(s, j, m);
      EXPECT_LE(concat(s.sigs[j], inc, 5).max_abs_diff(s.sigs[m]), 1e-12);
    }
  EXPECT_LE(sig_increment(s, 4, 4).max_abs_diff(TensorSeries::unit(3, 5)), 0.0);
  EXPECT_LE(sig_increment(s, 0, 7).max_abs_diff(s.sigs[7]), 1e-12);
  EXPECT_THROW(sig_increment(s, 5, 3), std::out_of_range);
  EXPECT_THROW(sig_increment(s, 0, 99), std::out_of_range);
}

TEST(PathSignature, ShuffleIdentityOnPaths) {
  std::mt19937_64 rng(13);
  const int N = 6;
  for (int rep = 0; rep < 3; ++rep) {
    SamplePath p = oracle::random_path(rng, 2, 6, 0.3);
    TensorSeries s = terminal_signature(p, N);
    for (const auto& I : all_words(3, 3))
      for (const auto& J : all_words(3, 3)) {
        TensorSeries sh = shuffle(TensorSeries::basis(I, 3, N), TensorSeries::basis(J, 3, N), N);
        const double lhs = s.coeff(I) * s.coeff(J), rhs = inner(sh, s);
        ASSERT_LE(std::abs(lhs - rhs), 1e-10 * std::max(1.0, std::abs(lhs))) << I.str() << " " << J.str();
      }
  }
}

TEST(PathSignature, CollinearPointIsInvisible) {
  SamplePath a = line({0, 1, 2}, {{0, 0}, {1, 2}, {0.5, 1}});
  SamplePath b = line({0, 0.25, 1, 2}, {{0, 0}, {0.25, 0.5}, {1, 2}, {0.5, 1}});
  EXPECT_LE(terminal_signature(a, 5).max_abs_diff(terminal_signature(b, 5)), 1e-12);
}

TEST(PathSignature, RejectsBadInput) {
  EXPECT_THROW(path_signature(line({0, 0}, {{0}, {1}}), 2), std::invalid_argument);
  EXPECT_THROW(path_signature(line({0, 1}, {{0}, {1}}), 0), std::invalid_argument);
  SamplePath one = line({0}, {{0}});
  EXPECT_THROW(path_signature(one, 2), std::invalid_argument);
}

TEST(PathSignature, RefinementConvergesForBrownianPaths) {
  // The level-two diagonal term is exact at any resolution; the mixed term
  // ∫ t dW converges to its fine-grid value as the sub-grid is refined.
  std::mt19937_64 rng(14);
  std::normal_distribution<double> nd;
  const int M = 512, reps = 200;
  std::map<int, double> err;
  for (int r = 0; r < reps; ++r) {
    SamplePath fine;
    fine.values.resize(M + 1, 1);
    for (int i = 0; i <= M; ++i) {
      fine.times.push_back(static_cast<double>(i) / M);
      fine.values(i, 0) = i ? fine.values(i - 1, 0) + std::sqrt(1.0 / M) * nd(rng) : 0.0;
    }
    TensorSeries s = terminal_signature(fine, 2);
    const double dw = fine.values(M, 0);
    ASSERT_NEAR(s.coeff(Word({1, 1})), 0.5 * dw * dw, 1e-12);
    for (int stride : {64, 16, 4}) {
      SamplePath c;
      c.values.resize(M / stride + 1, 1);
      for (int i = 0; i <= M; i += stride) {
        c.times.push_back(fine.times[i]);
        c.values(i / stride, 0) = fine.values(i, 0);
      }
      err[stride] += std::abs(terminal_signature(c, 2).coeff(Word({0, 1})) - s.coeff(Word({0, 1}))) / reps;
    }
  }
  EXPECT_LT(err[16], err[64]);
  EXPECT_LT(err[4], err[16]);
}

TEST(SignaturesBlock, MatchesPathSignature) {
  std::mt19937_64 rng(15);
  const int A = 3, N = 4;
  const std::size_t steps = 7, n_paths = 11;
  std::vector<SamplePath> paths;
  for (std::size_t i = 0; i < n_paths; ++i) paths.push_back(oracle::random_path(rng, 2, steps + 1));
  IncrementFn gen = [&](std::size_t p, double* incr) {
    for (std::size_t s = 0; s < steps; ++s) {
      incr[s * A] = paths[p].times[s + 1] - paths[p].times[s];
      for (int a = 0; a < 2; ++a) incr[s * A + 1 + a] = paths[p].values(s + 1, a) - paths[p].values(s, a);
    }
  };
  std::vector<std::size_t> idx{0, 3, 7};
  std::size_t calls = 0;
  signatures_block(0, n_paths, A, N, steps, gen, idx, [&](std::size_t p, std::size_t k, const double* sig) {
    ++calls;
    SigStream ref = path_signature(paths[p], N);
    const auto& want = ref.sigs[idx[k]];
    for (std::size_t c = 0; c < want.dimension(); ++c) ASSERT_NEAR(sig[c], want.data()[c], 1e-12);
  });
  EXPECT_EQ(calls, n_paths * idx.size());
}
