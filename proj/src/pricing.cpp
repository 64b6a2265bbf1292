#include "sigcal/pricing.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "sigcal/kernels/kernels.hpp"
#include "sigcal/parallel.hpp"

namespace sigcal {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t sub_seed(std::uint64_t seed, std::uint64_t index) { return splitmix64(splitmix64(seed) ^ splitmix64(index + 0x5851F42D4C957F2DULL)); }

std::vector<double> make_grid(double T, double step, const std::vector<double>& extra) {
  if (!(T > 0) || !(step > 0)) throw std::invalid_argument("grid needs positive horizon and step");
  std::vector<double> g;
  const long M = std::max(1L, std::lround(T / step));
  for (long i = 0; i <= M; ++i) g.push_back(T * static_cast<double>(i) / static_cast<double>(M));
  for (double e : extra) {
    if (e < 0 || e > T + 1e-12) throw std::invalid_argument("grid point outside [0, T]");
    bool found = false;
    for (double& v : g)
      if (std::abs(v - e) <= 1e-12 * std::max(1.0, T)) {
        v = e;
        found = true;
      }
    if (!found) g.push_back(e);
  }
  std::sort(g.begin(), g.end());
  return g;
}

std::size_t grid_index(const std::vector<double>& grid, double t) {
  for (std::size_t i = 0; i < grid.size(); ++i)
    if (std::abs(grid[i] - t) <= 1e-9 * std::max(1.0, std::abs(t))) return i;
  throw std::invalid_argument("time " + std::to_string(t) + " is not on the simulation grid");
}

DriverSampler::DriverSampler(int d, const CorrelationSpec& rho, std::vector<double> grid, std::uint64_t seed)
    : d_(d), chol_(rho.cholesky()), grid_(std::move(grid)), seed_(seed) {
  if (rho.d() != d) throw std::invalid_argument("correlation dimension differs from d");
  if (grid_.size() < 2) throw std::invalid_argument("grid needs at least one step");
  for (std::size_t i = 1; i < grid_.size(); ++i)
    if (!(grid_[i] > grid_[i - 1])) throw std::invalid_argument("grid must be strictly increasing");
}

void DriverSampler::increments(std::size_t path, double* out) const {
  std::mt19937_64 rng(sub_seed(seed_, path));
  std::normal_distribution<double> nd;
  const int A = d_ + 1;
  double z[64];
  for (std::size_t s = 0; s + 1 < grid_.size(); ++s) {
    const double dt = grid_[s + 1] - grid_[s];
    const double sq = std::sqrt(dt);
    for (int i = 0; i < d_; ++i) z[i] = nd(rng);
    double* row = out + s * A;
    row[0] = dt;
    for (int i = 0; i < d_; ++i) {
      double v = 0;
      for (int j = 0; j <= i; ++j) v += chol_(i, j) * z[j];
      row[i + 1] = v * sq;
    }
  }
}

IncrementFn DriverSampler::increment_fn() const {
  return [this](std::size_t p, double* out) { increments(p, out); };
}

std::vector<SamplePath> simulate_drivers(int d, const CorrelationSpec& rho, const std::vector<double>& grid,
                                         std::size_t n_mc, std::uint64_t seed) {
  if (n_mc < 1) throw std::invalid_argument("need at least one path");
  DriverSampler sampler(d, rho, grid, seed);
  std::vector<SamplePath> out(n_mc);
  const std::size_t steps = sampler.steps();
  parallel_for(n_mc, 256, [&](std::size_t b, std::size_t e) {
    std::vector<double> incr(steps * (d + 1));
    for (std::size_t p = b; p < e; ++p) {
      sampler.increments(p, incr.data());
      SamplePath& sp = out[p];
      sp.times = grid;
      sp.values = Eigen::MatrixXd::Zero(grid.size(), d);
      for (std::size_t s = 0; s < steps; ++s)
        for (int c = 0; c < d; ++c) sp.values(s + 1, c) = sp.values(s, c) + incr[s * (d + 1) + c + 1];
    }
  });
  return out;
}

std::size_t FeatureMatrix::maturity_index(double T) const {
  for (std::size_t k = 0; k < maturities.size(); ++k)
    if (std::abs(maturities[k] - T) <= 1e-9 * std::max(1.0, T)) return k;
  throw std::invalid_argument("maturity " + std::to_string(T) + " not among feature maturities");
}

namespace {

// Positions in a flat signature for <tilde e_I, .> = sig[I1] - c * sig[I'0].
struct FeatureMap {
  std::size_t main;
  std::size_t corr;
  double c;
};

std::vector<FeatureMap> feature_maps(const std::vector<Word>& words, int d, const CorrelationSpec& rho) {
  const int A = d + 1;
  std::vector<FeatureMap> out;
  for (const Word& w : words) {
    FeatureMap fm{};
    Word main = w.append(1);
    fm.main = series_dimension(A, static_cast<int>(main.size()) - 1) + word_index(main, A);
    if (!w.empty() && w.back() != 0) {
      Word cw = w.prefix().append(0);
      fm.corr = series_dimension(A, static_cast<int>(cw.size()) - 1) + word_index(cw, A);
      fm.c = 0.5 * rho.rho(w.back() - 1, 0);
    }
    out.push_back(fm);
  }
  return out;
}

FeatureMatrix make_features(std::size_t n_mc, int d, int n, const CorrelationSpec& rho,
                            const std::vector<double>& maturities, const std::vector<double>& grid,
                            const IncrementFn& gen) {
  if (maturities.empty()) throw std::invalid_argument("no maturities requested");
  FeatureMatrix fm;
  fm.d = d;
  fm.n = n;
  fm.rho = rho;
  fm.maturities = maturities;
  fm.words = model_words(d, n, Basis::martingale);
  std::vector<std::size_t> idx;
  for (double T : maturities) idx.push_back(grid_index(grid, T));
  if (!std::is_sorted(idx.begin(), idx.end()) || std::adjacent_find(idx.begin(), idx.end()) != idx.end())
    throw std::invalid_argument("maturities must be strictly increasing");
  const auto maps = feature_maps(fm.words, d, rho);
  fm.blocks.assign(maturities.size(), Eigen::MatrixXd(n_mc, fm.words.size()));
  SigVisitor visit = [&](std::size_t p, std::size_t k, const double* sig) {
    auto& B = fm.blocks[k];
    for (std::size_t w = 0; w < maps.size(); ++w) {
      double v = sig[maps[w].main];
      if (maps[w].c != 0.0) v -= maps[w].c * sig[maps[w].corr];
      B(p, w) = v;
    }
  };
  const std::size_t steps = grid.size() - 1;
  parallel_for(n_mc, 512, [&](std::size_t b, std::size_t e) { signatures_block(b, e, d + 1, n, steps, gen, idx, visit); });
  return fm;
}

}  // namespace

FeatureMatrix precompute_features(const DriverSampler& sampler, std::size_t n_mc, int n, const CorrelationSpec& rho,
                                  const std::vector<double>& maturities) {
  return make_features(n_mc, sampler.d(), n, rho, maturities, sampler.grid(), sampler.increment_fn());
}

FeatureMatrix precompute_features(const std::vector<SamplePath>& paths, int n, const CorrelationSpec& rho,
                                  const std::vector<double>& maturities) {
  if (paths.empty()) throw std::invalid_argument("no paths");
  const int d = paths[0].d();
  const auto& grid = paths[0].times;
  for (const auto& p : paths)
    if (p.times != grid || p.d() != d) throw std::invalid_argument("paths must share grid and dimension");
  IncrementFn gen = [&](std::size_t p, double* out) {
    const auto& sp = paths[p];
    for (std::size_t s = 0; s + 1 < grid.size(); ++s) {
      out[s * (d + 1)] = grid[s + 1] - grid[s];
      for (int c = 0; c < d; ++c) out[s * (d + 1) + c + 1] = sp.values(s + 1, c) - sp.values(s, c);
    }
  };
  FeatureMatrix fm = make_features(paths.size(), d, n, rho, maturities, grid, gen);
  return fm;
}

namespace {

std::vector<double> coefficients(const FeatureMatrix& fm, const WordMap& ell) {
  std::vector<double> c(fm.words.size(), 0.0);
  for (const auto& [w, v] : ell) {
    auto it = std::find(fm.words.begin(), fm.words.end(), w);
    if (it == fm.words.end()) throw std::invalid_argument("word " + w.str() + " not among features");
    c[it - fm.words.begin()] = v;
  }
  return c;
}

void check_spec(const ModelSpec& spec, const FeatureMatrix& fm) {
  spec.validate();
  if (spec.basis != Basis::martingale) throw std::invalid_argument("feature pricing expects the martingale basis");
  if (spec.d != fm.d || spec.n > fm.n) throw std::invalid_argument("model does not match features");
}

}  // namespace

Eigen::VectorXd terminal_samples(const ModelSpec& spec, const FeatureMatrix& features, double T) {
  check_spec(spec, features);
  const std::size_t k = features.maturity_index(T);
  const auto& kt = kernels::active();
  const std::size_t N = features.n_mc();
  Eigen::VectorXd s = Eigen::VectorXd::Constant(N, spec.s0);
  auto add = [&](const Eigen::MatrixXd& B, const std::vector<double>& c, double sign) {
    for (std::size_t w = 0; w < c.size(); ++w)
      if (c[w] != 0.0) kt.axpy(sign * c[w], B.col(w).data(), s.data(), N);
  };
  add(features.blocks[k], coefficients(features, spec.ell), 1.0);
  for (const auto& corr : spec.corrections) {
    // Inactive up to and including T_j, so earlier maturities are untouched bit for bit.
    if (T <= corr.T + 1e-12) continue;
    const std::size_t j = features.maturity_index(corr.T);
    auto c = coefficients(features, corr.ell);
    add(features.blocks[k], c, 1.0);
    add(features.blocks[j], c, -1.0);
  }
  return s;
}

PriceResult payoff_stats(const Eigen::VectorXd& samples, Payoff payoff, double K) {
  const std::size_t N = samples.size();
  if (N == 0) throw std::invalid_argument("no samples");
  double sum = 0, sumsq = 0;
  const double sign = payoff == Payoff::call ? 1.0 : -1.0;
  kernels::active().hinge_sums(samples.data(), N, K, sign, &sum, &sumsq);
  PriceResult r;
  r.price = sum / N;
  // Second pass around the mean; the one-pass moment difference cancels badly
  // when the payoff barely varies.
  double ss = 0;
  for (std::size_t i = 0; i < N; ++i) {
    const double h = std::max(sign * (samples[i] - K), 0.0) - r.price;
    ss += h * h;
  }
  r.std_error = N > 1 ? std::sqrt(ss / (N - 1) / N) : 0.0;
  return r;
}

PriceResult mc_price(const ModelSpec& spec, const FeatureMatrix& features, Payoff payoff, double T, double K) {
  return payoff_stats(terminal_samples(spec, features, T), payoff, K);
}

Eigen::VectorXd mc_price_gradient(const ModelSpec& spec, const FeatureMatrix& features, double T, double K) {
  Eigen::VectorXd s = terminal_samples(spec, features, T);
  const auto& B = features.blocks[features.maturity_index(T)];
  const std::size_t N = s.size();
  Eigen::VectorXd ind(N);
  for (std::size_t i = 0; i < N; ++i) ind[i] = s[i] > K ? 1.0 : 0.0;
  Eigen::VectorXd g(features.words.size());
  const auto& kt = kernels::active();
  for (std::size_t w = 0; w < features.words.size(); ++w) g[w] = kt.dot(ind.data(), B.col(w).data(), N) / N;
  return g;
}

}  // namespace sigcal
