#pragma once

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "sigcal/signature.hpp"

namespace sigcal {

enum class SVModel { heston, sabr, multibs };

struct SVParams {
  SVModel model = SVModel::heston;
  double mu = 0, kappa = 0, theta = 0, sigma = 0, rho = 0, V0 = 0, S0 = 1;
  // multibs
  Eigen::VectorXd mu_vec;
  Eigen::MatrixXd Sigma;
  Eigen::VectorXd S0_vec;

  void validate() const;
  int assets() const { return model == SVModel::multibs ? static_cast<int>(S0_vec.size()) : 1; }
  static SVParams from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

struct SimPath {
  std::vector<double> times;
  Eigen::MatrixXd S;        // points x assets
  Eigen::VectorXd V;        // empty for multibs
  Eigen::MatrixXd drivers;  // points x brownian dims, the true P-Brownian paths
};

// One path per index, each from its own sub-seed.
SimPath simulate_one(const SVParams& params, const std::vector<double>& grid, std::uint64_t seed, std::size_t index);
std::vector<SimPath> simulate(const SVParams& params, const std::vector<double>& grid, std::size_t n_paths,
                              std::uint64_t seed);

// Trailing realized variance over `window` increments divided by their
// duration; the first window is backfilled.
std::vector<double> estimate_spot_qv(const std::vector<double>& series, const std::vector<double>& grid, int window);

// Cumulative dS / sqrt(Sigma_11) and dV / sqrt(Sigma_22), each increment
// scaled by the estimate at its left endpoint.
SamplePath extract_drivers(const std::vector<double>& times, const std::vector<double>& S,
                           const std::vector<double>& V, const std::vector<double>& qv_S,
                           const std::vector<double>& qv_V);

// Keeps every `stride`-th point (and the last one when it lands on the stride).
SamplePath coarsen(const SamplePath& path, std::size_t stride);
std::vector<double> coarsen(const std::vector<double>& v, std::size_t stride);

// Heston call price (zero rates) by Fourier inversion.
double heston_call(double s0, double K, double T, double kappa, double theta, double sigma, double rho, double V0);
// Characteristic function of log(S_T / s0).
std::complex<double> heston_cf(std::complex<double> u, double T, double kappa, double theta, double sigma,
                               double rho, double V0);

}  // namespace sigcal
