#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "sigcal/models.hpp"
#include "sigcal/pricing.hpp"
#include "sigcal/signature.hpp"

namespace sigcal {

struct Quote {
  double T = 0;
  double K = 0;
  double mid = 0;
  double iv = 0;
  double vega = 0;
};

struct QuoteSurface {
  double s0 = 1.0;
  std::vector<Quote> quotes;

  // Fills whichever of mid / iv is missing (NaN) and the vegas, then checks consistency.
  void complete();
  std::vector<double> maturities() const;
};

struct CalibReport {
  ModelSpec spec;
  std::vector<Quote> quotes;
  std::vector<double> model_price;
  std::vector<double> model_iv;
  std::vector<double> abs_err_bps;
  std::vector<double> loss_trace;
  double wall_time = 0;
  std::string optimizer;
  // Joint and time-series fits only.
  double path_mse = -1;

  double max_err_bps() const;
  double mean_err_bps() const;
  nlohmann::json to_json() const;
  std::string surface_csv() const;
};

enum class Penalty { l1, l2 };

// Martingale-basis fit of S_t - s0 on <tilde e_I, sig_t>, |I| <= n - 1.
ModelSpec fit_timeseries_price(const SigStream& stream, const std::vector<double>& observed, int n, Penalty penalty,
                               double lambda, const CorrelationSpec& rho);

// sigma_t = sum_{|I| <= n} ell_I <e_I, sig_t>, plain basis with a free constant.
struct VolModel {
  int d = 1;
  int n = 1;
  CorrelationSpec rho = CorrelationSpec::identity(1);
  WordMap ell;

  std::vector<double> eval(const SigStream& stream) const;
  // Price model S = s0 + int sigma dB^1 of order n + 1.
  ModelSpec to_price_model(double s0) const;
};

VolModel fit_timeseries_vol(const SigStream& stream, const std::vector<double>& spot_vol, int n, Penalty penalty,
                            double lambda, const CorrelationSpec& rho);

double path_mse(const std::vector<double>& a, const std::vector<double>& b);

struct SurfaceOptions {
  double p = 2.0;
  double alpha = 0.0;
  int iterations = 2000;
  int stage2_iterations = 500;
  double step = 1e-2;
  std::uint64_t seed = 0;
  // Damped Gauss-Newton refinement after the first-order stage (squared loss only).
  bool gauss_newton_polish = true;
};

CalibReport calibrate_surface(const QuoteSurface& surface, const FeatureMatrix& features, int n,
                              const SurfaceOptions& opts);

CalibReport calibrate_slicewise(const QuoteSurface& surface, const FeatureMatrix& features, int n,
                                const SurfaceOptions& opts);

CalibReport joint_calibrate(const SigStream& stream, const std::vector<double>& observed, const QuoteSurface& surface,
                            const FeatureMatrix& features, double lambda_mix, int n, const SurfaceOptions& opts);

// Model prices, IVs and errors of `spec` against the surface.
CalibReport evaluate_surface(const ModelSpec& spec, const QuoteSurface& surface, const FeatureMatrix& features);

struct SkewPoint {
  double T = 0;
  double psi = 0;
};

// |d iv / dK| at K = s0 from the nearest strikes on either side, per maturity.
std::vector<SkewPoint> atm_skew(const QuoteSurface& surface);
std::vector<SkewPoint> atm_skew(const CalibReport& report, double s0);

}  // namespace sigcal
