#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "sigcal/expected_signature.hpp"
#include "sigcal/models.hpp"
#include "sigcal/signature.hpp"

namespace sigcal {

// ---- Black-Scholes (zero rates) ----

double norm_cdf(double x);
double norm_pdf(double x);
double bs_price(double s0, double K, double T, double sigma);
double bs_put(double s0, double K, double T, double sigma);
double bs_vega(double s0, double K, double T, double sigma);
// Bisection on [1e-4, 5]; throws std::domain_error outside [(s0-K)^+, s0].
double implied_vol(double price, double s0, double K, double T);

// E[<e_J, sig of (t, Y_t)>] for geometric Brownian motion Y, |J| <= m, over
// the alphabet {0, 1}; solves the linear moment system with RK4.
TensorSeries bs_expected_signature(double y0, double sigma, double T, int m, int rk_steps = 4000);

// ---- Random numbers ----

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t sub_seed(std::uint64_t seed, std::uint64_t index);

// Grid 0 = t_0 < ... < t_M containing every extra point (within 1e-12).
std::vector<double> make_grid(double T, double step, const std::vector<double>& extra = {});
std::size_t grid_index(const std::vector<double>& grid, double t);

// Streams correlated Brownian increments for any path index without
// materializing the batch.
class DriverSampler {
 public:
  DriverSampler(int d, const CorrelationSpec& rho, std::vector<double> grid, std::uint64_t seed);

  int d() const { return d_; }
  std::size_t steps() const { return grid_.size() - 1; }
  const std::vector<double>& grid() const { return grid_; }
  // steps() rows of (dt, dW^1, ..., dW^d).
  void increments(std::size_t path, double* out) const;
  IncrementFn increment_fn() const;

 private:
  int d_;
  Eigen::MatrixXd chol_;
  std::vector<double> grid_;
  std::uint64_t seed_;
};

std::vector<SamplePath> simulate_drivers(int d, const CorrelationSpec& rho, const std::vector<double>& grid,
                                         std::size_t n_mc, std::uint64_t seed);

// ---- Monte Carlo over signature features ----

// Per maturity, an N_MC x |words| column-major block of <tilde e_I, sig_T>.
struct FeatureMatrix {
  int d = 1;
  int n = 1;
  CorrelationSpec rho = CorrelationSpec::identity(1);
  std::vector<double> maturities;
  std::vector<Word> words;
  std::vector<Eigen::MatrixXd> blocks;
  std::uint64_t seed = 0;

  std::size_t n_mc() const { return blocks.empty() ? 0 : static_cast<std::size_t>(blocks[0].rows()); }
  std::size_t maturity_index(double T) const;
  // Correction block <tilde e_I, sig_{T_k} - sig_{T_j}>.
  Eigen::MatrixXd correction_block(std::size_t k, std::size_t j) const { return blocks[k] - blocks[j]; }
};

FeatureMatrix precompute_features(const DriverSampler& sampler, std::size_t n_mc, int n, const CorrelationSpec& rho,
                                  const std::vector<double>& maturities);
FeatureMatrix precompute_features(const std::vector<SamplePath>& paths, int n, const CorrelationSpec& rho,
                                  const std::vector<double>& maturities);

enum class Payoff { call, put };

struct PriceResult {
  double price = 0;
  double std_error = 0;
};

// S_T per sample, corrections included.
Eigen::VectorXd terminal_samples(const ModelSpec& spec, const FeatureMatrix& features, double T);
PriceResult mc_price(const ModelSpec& spec, const FeatureMatrix& features, Payoff payoff, double T, double K);
PriceResult payoff_stats(const Eigen::VectorXd& samples, Payoff payoff, double K);
// d call price / d ell_I, in the order of features.words.
Eigen::VectorXd mc_price_gradient(const ModelSpec& spec, const FeatureMatrix& features, double T, double K);

// ---- Sig-payoffs ----

struct SigPayoff {
  WordMap f;
  int m = 0;
};

double sig_payoff_price(const SigPayoff& f, const ModelSpec& spec, double T);

// Full signatures of the driver paths at one maturity, one row per sample.
struct SigSamples {
  int alphabet = 0;
  int N = 0;
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rows;
};

SigSamples sample_signatures(const DriverSampler& sampler, std::size_t n_mc, int N, double T);
// Signatures at grid index `index` of paths produced by gen (alphabet A).
SigSamples sample_signatures(const IncrementFn& gen, std::size_t n_mc, int A, int N, std::size_t steps,
                             std::size_t index);

PriceResult cv_price(const ModelSpec& spec, const SigSamples& sigs, const SigPayoff& f, Payoff payoff, double T,
                     double K);
// Control-variate samples f_0 + sum f_J <lift(J), sig> - price.
Eigen::VectorXd cv_samples(const ModelSpec& spec, const SigSamples& sigs, const SigPayoff& f, double T);

// Least squares over all words |J| <= m in {0, 1}; sigs are signatures of (t, Y).
SigPayoff fit_sig_payoff(const Eigen::VectorXd& payoffs, const SigSamples& sigs, int m);
double sig_payoff_value(const SigPayoff& f, const TensorSeries& sig);
// Per-sample <e_J, sig of (t, S)> for all |J| <= m, computed through the lifts.
SigSamples lifted_signatures(const ModelSpec& spec, const SigSamples& sigs, int m);

}  // namespace sigcal
