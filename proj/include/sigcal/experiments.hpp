#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "sigcal/calibration.hpp"
#include "sigcal/market_sim.hpp"

namespace sigcal {

struct ExperimentConfig {
  std::string name;
  std::uint64_t seed = 42;
  // Reduced sample sizes for smoke and determinism runs.
  bool quick = false;
};

struct ExperimentResult {
  nlohmann::json metrics;
  // File name -> contents; every file is plain text.
  std::map<std::string, std::string> files;
  bool passed = false;
};

std::vector<std::string> experiment_names();
ExperimentResult run_experiment(const ExperimentConfig& cfg);

// Building blocks shared with tests.

// Heston surface from the analytic pricer; iv and vega filled.
QuoteSurface heston_surface(double s0, double kappa, double theta, double sigma, double rho, double V0,
                            const std::vector<double>& maturities, const std::vector<double>& strikes);

struct TimeSeriesData {
  SamplePath drivers;           // coarse (t, B^Q, W^Q)
  std::vector<double> price;    // coarse observed S
  std::vector<double> spot_vol; // coarse sqrt of the estimated d[S]/dt
};

// Simulates on a fine intraday grid, estimates spot QV, extracts drivers and
// keeps `per_day` points per day. Days are 1/365 years observed for
// `fine_per_day` evenly spaced samples.
TimeSeriesData observe_series(const SVParams& params, double years, int fine_per_day, int per_day, int window,
                              std::uint64_t seed, std::size_t index);

}  // namespace sigcal
