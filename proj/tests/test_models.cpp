#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "sigcal/models.hpp"
#include "sigcal/pricing.hpp"

using namespace sigcal;

namespace {

ModelSpec random_spec(std::mt19937_64& rng, int d, int n, const CorrelationSpec& rho, double scale) {
  std::normal_distribution<double> nd;
  ModelSpec s;
  s.d = d;
  s.n = n;
  s.rho = rho;
  s.s0 = 1.0;
  for (const auto& w : model_words(d, n, Basis::martingale)) s.ell[w] = scale * nd(rng) / (1.0 + w.size());
  return s;
}

SamplePath path_of(const std::vector<double>& t, const std::vector<double>& x) {
  SamplePath p;
  p.times = t;
  p.values.resize(t.size(), 1);
  for (std::size_t i = 0; i < t.size(); ++i) p.values(i, 0) = x[i];
  return p;
}

}  // namespace

TEST(TildeBasis, Examples) {
  CorrelationSpec r = CorrelationSpec::pair(-0.5);
  EXPECT_EQ(tilde_basis(Word{}, 1, r, 3).max_abs_diff(TensorSeries::basis(Word{1}, 3, 3)), 0.0);
  EXPECT_EQ(tilde_basis(Word{0}, 1, r, 3).max_abs_diff(TensorSeries::basis(Word({0, 1}), 3, 3)), 0.0);
  TensorSeries want = TensorSeries::basis(Word({2, 1}), 3, 3) + 0.25 * TensorSeries::basis(Word{0}, 3, 3);
  EXPECT_EQ(tilde_basis(Word{2}, 1, r, 3).max_abs_diff(want), 0.0);
  EXPECT_THROW(tilde_basis(Word{}, 0, r, 3), std::invalid_argument);
  EXPECT_THROW(tilde_basis(Word({1, 1, 1}), 1, r, 3), std::invalid_argument);
}

TEST(ModelWords, ParameterCount) {
  EXPECT_EQ(model_words(2, 3, Basis::martingale).size(), 13u);
  EXPECT_EQ(model_words(1, 2, Basis::martingale).size(), 3u);
  EXPECT_EQ(model_words(1, 2, Basis::plain).size(), 6u);
}

TEST(ModelSpec, Validation) {
  ModelSpec s;
  s.ell[Word({1, 1})] = 1.0;  // too long for n = 1 martingale
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s.ell.clear();
  s.basis = Basis::plain;
  s.ell[Word{}] = 1.0;
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s = ModelSpec{};
  s.corrections = {{0.5, {}}, {0.5, {}}};
  EXPECT_THROW(s.validate(), std::invalid_argument);
}

TEST(EvalModel, Examples) {
  std::mt19937_64 rng(31);
  SamplePath p = oracle::random_path(rng, 2, 8);
  p.times = {0, 0.1, 0.2, 0.3, 0.5, 0.6, 0.8, 1.0};
  SigStream st = path_signature(p, 3);
  ModelSpec s;
  s.d = 2;
  s.n = 3;
  s.rho = CorrelationSpec::pair(0.2);
  s.s0 = 1.5;
  for (double v : eval_model(s, st)) EXPECT_EQ(v, 1.5);
  s.ell[Word{}] = 0.3;
  auto out = eval_model(s, st);
  for (std::size_t i = 0; i < st.size(); ++i)
    EXPECT_NEAR(out[i], 1.5 + 0.3 * (p.values(i, 0) - p.values(0, 0)), 1e-14);
  const double c = -0.7;
  s.corrections.push_back({0.3, {{Word{}, c}}});
  auto corr = eval_model(s, st);
  for (std::size_t i = 0; i < st.size(); ++i) {
    const double extra = p.times[i] >= 0.3 ? c * (p.values(i, 0) - p.values(3, 0)) : 0.0;
    EXPECT_NEAR(corr[i], out[i] + extra, 1e-14);
  }
  EXPECT_NEAR(corr[3], out[3], 1e-15);
  s.corrections[0].T = 0.35;
  EXPECT_THROW(eval_model(s, st), std::invalid_argument);
  s.corrections.clear();
  EXPECT_THROW(eval_model(s, path_signature(p, 2)), std::invalid_argument);
}

TEST(ToPlain, Examples) {
  ModelSpec s;
  s.d = 2;
  s.n = 2;
  s.rho = CorrelationSpec::pair(-0.5);
  s.ell[Word{}] = 1.0;
  ModelSpec p = to_plain(s);
  EXPECT_EQ(p.basis, Basis::plain);
  EXPECT_EQ(p.ell, (WordMap{{Word{1}, 1.0}}));
  s.ell.clear();
  s.ell[Word{2}] = 1.0;
  EXPECT_EQ(to_plain(s).ell, (WordMap{{Word({2, 1}), 1.0}, {Word{0}, 0.25}}));
}

TEST(ToPlain, RoundTripPathEquality) {
  std::mt19937_64 rng(32);
  CorrelationSpec r = CorrelationSpec::pair(0.6);
  for (int rep = 0; rep < 5; ++rep) {
    ModelSpec s = random_spec(rng, 2, 3, r, 0.4);
    SigStream st = path_signature(oracle::random_path(rng, 2, 15, 0.3), 3);
    auto a = eval_model(s, st), b = eval_model(to_plain(s), st);
    for (std::size_t i = 0; i < a.size(); ++i) ASSERT_NEAR(a[i], b[i], 1e-12);
  }
}

TEST(ModelSigLift, Examples) {
  std::mt19937_64 rng(33);
  ModelSpec s = random_spec(rng, 2, 2, CorrelationSpec::pair(0.1), 0.5);
  EXPECT_LE(model_sig_lift(s, Word{0}).max_abs_diff(TensorSeries::basis(Word{0}, 3, 2)), 0.0);
  EXPECT_LE(model_sig_lift(s, Word{1}).max_abs_diff(model_functional(s)), 1e-15);
  EXPECT_THROW(model_sig_lift(s, Word{2}), std::invalid_argument);
}

TEST(ModelSigLift, SquareIsExactOnPaths) {
  // <e_(1,1), sig of S> = (S_T - s0)^2 / 2 for any piecewise-linear driver path.
  std::mt19937_64 rng(34);
  ModelSpec s = random_spec(rng, 2, 2, CorrelationSpec::pair(-0.3), 0.5);
  TensorSeries L = model_sig_lift(s, Word({1, 1}));
  for (int rep = 0; rep < 5; ++rep) {
    SamplePath p = oracle::random_path(rng, 2, 10, 0.3);
    SigStream st = path_signature(p, 4);
    const double dS = eval_model(s, st).back() - s.s0;
    EXPECT_NEAR(inner(L, st.sigs.back()), 0.5 * dS * dS, 1e-12);
  }
}

TEST(ModelSigLift, TimeIntegralMatchesTrapezoid) {
  std::mt19937_64 rng(35);
  std::normal_distribution<double> nd;
  CorrelationSpec r = CorrelationSpec::pair(-0.4);
  Eigen::MatrixXd C = r.cholesky();
  ModelSpec s = random_spec(rng, 2, 3, r, 0.5);
  TensorSeries L = model_sig_lift(s, Word({1, 0}));
  const int M = 4096;
  for (int rep = 0; rep < 10; ++rep) {
    SamplePath p;
    p.values.resize(M + 1, 2);
    for (int i = 0; i <= M; ++i) {
      p.times.push_back(static_cast<double>(i) / M);
      if (i == 0) {
        p.values.row(0).setZero();
        continue;
      }
      Eigen::Vector2d z(nd(rng), nd(rng));
      p.values.row(i) = p.values.row(i - 1) + std::sqrt(1.0 / M) * (C * z).transpose();
    }
    SigStream st = path_signature(p, 6);
    auto S = eval_model(s, st);
    double trap = 0;
    for (int i = 1; i <= M; ++i) trap += 0.5 * (S[i] + S[i - 1] - 2 * s.s0) / M;
    const double lift = inner(L, st.sigs.back());
    EXPECT_LE(oracle::rel_err(lift, trap), 1e-3) << rep;
  }
}

TEST(ModelSigLift, MatchesDirectModelPathSignature) {
  // Lift vs the signature of the linearly interpolated (t, S) path; the gap is
  // a discretization error that shrinks with the grid.
  std::mt19937_64 rng(36);
  std::normal_distribution<double> nd;
  ModelSpec s = random_spec(rng, 1, 2, CorrelationSpec::identity(1), 0.6);
  const int M = 2048;
  std::vector<double> dw(M);
  for (auto& x : dw) x = std::sqrt(1.0 / M) * nd(rng);
  const std::vector<Word> Js{Word({1, 0}), Word({0, 1}), Word({1, 0, 1}), Word({0, 1, 1})};
  std::vector<double> prev(Js.size(), 1e300);
  for (int stride : {16, 4, 1}) {
    std::vector<double> t, w;
    double acc = 0;
    for (int i = 0; i <= M; ++i) {
      if (i) acc += dw[i - 1];
      if (i % stride == 0) {
        t.push_back(static_cast<double>(i) / M);
        w.push_back(acc);
      }
    }
    SigStream st = path_signature(path_of(t, w), 6);
    TensorSeries direct = terminal_signature(path_of(t, eval_model(s, st)), 3);
    for (std::size_t j = 0; j < Js.size(); ++j) {
      const double err = std::abs(inner(model_sig_lift(s, Js[j]), st.sigs.back()) - direct.coeff(Js[j]));
      EXPECT_LT(err, prev[j] + 1e-12) << Js[j].str() << " stride " << stride;
      prev[j] = err;
    }
  }
  for (double e : prev) EXPECT_LT(e, 1e-2);
}

TEST(ModelVariance, Examples) {
  ModelSpec s;
  s.d = 2;
  s.n = 2;
  s.rho = CorrelationSpec::pair(0.3);
  EXPECT_EQ(model_variance(s, 1.0), 0.0);
  s.ell[Word{}] = 0.4;
  EXPECT_NEAR(model_variance(s, 0.75), 0.16 * 0.75, 1e-15);
}

TEST(ModelVariance, MatchesMonteCarloAndMeanIsS0) {
  std::mt19937_64 rng(37);
  CorrelationSpec r = CorrelationSpec::pair(-0.5);
  ModelSpec s = random_spec(rng, 2, 2, r, 0.4);
  const std::size_t n = 100000;
  auto grid = make_grid(1.0, 1.0 / 200);
  DriverSampler sampler(2, r, grid, 77);
  FeatureMatrix fm = precompute_features(sampler, n, 2, r, {1.0});
  Eigen::VectorXd x = terminal_samples(s, fm, 1.0);
  const double mean = x.mean();
  Eigen::ArrayXd c = x.array() - mean;
  const double var = c.square().sum() / (n - 1);
  const double se_mean = std::sqrt(var / n);
  const double se_var = std::sqrt((c.pow(4).mean() - var * var) / n);
  EXPECT_LE(std::abs(mean - s.s0), 3 * se_mean);
  EXPECT_LE(std::abs(var - model_variance(s, 1.0)), 3 * se_var);
}

TEST(SabrTaylor, LiteralCoefficients) {
  ModelSpec s = sabr_taylor_coefficients(1.0, 0.2, 0.3);
  EXPECT_EQ(s.basis, Basis::martingale);
  EXPECT_EQ(s.d, 2);
  EXPECT_EQ(s.n, 2);
  EXPECT_DOUBLE_EQ(s.ell.at(Word{}), 0.2);
  EXPECT_DOUBLE_EQ(s.ell.at(Word{0}), -0.5 * 0.2 * 0.2 * 0.2 - 0.5 * 0.09 * 0.2);
  EXPECT_DOUBLE_EQ(s.ell.at(Word{1}), 0.04);
  EXPECT_DOUBLE_EQ(s.ell.at(Word{2}), 0.3 * 0.2);
  EXPECT_EQ(sabr_taylor_coefficients(1.0, 0.2, 0.0).ell.at(Word{2}), 0.0);
}

TEST(ModelSpec, JsonRoundTrip) {
  std::mt19937_64 rng(38);
  ModelSpec s = random_spec(rng, 2, 3, CorrelationSpec::pair(0.25), 1.0);
  s.s0 = 100;
  s.corrections.push_back({0.5, {{Word{}, 0.1}, {Word({2, 0}), -0.2}}});
  ModelSpec b = ModelSpec::from_json(nlohmann::json::parse(s.to_json().dump()));
  EXPECT_EQ(b.d, s.d);
  EXPECT_EQ(b.n, s.n);
  EXPECT_EQ(b.s0, s.s0);
  EXPECT_EQ(b.ell, s.ell);
  EXPECT_EQ(b.rho.rho, s.rho.rho);
  ASSERT_EQ(b.corrections.size(), 1u);
  EXPECT_EQ(b.corrections[0].ell, s.corrections[0].ell);
  EXPECT_THROW(ModelSpec::from_json(nlohmann::json::parse(R"({"d":1,"n":1,"s0":1,"basis":"odd","ell":{}})")),
               std::invalid_argument);
}
