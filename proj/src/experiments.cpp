#include "sigcal/experiments.hpp"

#include <cmath>
#include <cstring>
#include <random>
#include <stdexcept>

#include "sigcal/io.hpp"
#include "sigcal/parallel.hpp"

namespace sigcal {

namespace {

constexpr double kDay = 1.0 / 365.0;

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = a + (b - a) * i / (n - 1);
  return v;
}

SVParams heston(double S0, double V0, double mu, double kappa, double theta, double sigma, double rho) {
  SVParams p;
  p.model = SVModel::heston;
  p.S0 = S0;
  p.V0 = V0;
  p.mu = mu;
  p.kappa = kappa;
  p.theta = theta;
  p.sigma = sigma;
  p.rho = rho;
  return p;
}

std::vector<double> to_vec(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

}  // namespace

QuoteSurface heston_surface(double s0, double kappa, double theta, double sigma, double rho, double V0,
                            const std::vector<double>& maturities, const std::vector<double>& strikes) {
  QuoteSurface s;
  s.s0 = s0;
  for (double T : maturities)
    for (double K : strikes) {
      Quote q;
      q.T = T;
      q.K = K;
      q.mid = heston_call(s0, K, T, kappa, theta, sigma, rho, V0);
      q.iv = implied_vol(q.mid, s0, K, T);
      q.vega = bs_vega(s0, K, T, q.iv);
      s.quotes.push_back(q);
    }
  s.complete();
  return s;
}

TimeSeriesData observe_series(const SVParams& params, double years, int fine_per_day, int per_day, int window,
                              std::uint64_t seed, std::size_t index) {
  if (fine_per_day % per_day != 0) throw std::invalid_argument("fine sampling must be a multiple of the coarse one");
  const long days = std::lround(years * 365.0);
  const long steps = days * fine_per_day;
  std::vector<double> grid(steps + 1);
  for (long i = 0; i <= steps; ++i) grid[i] = static_cast<double>(i) * kDay / fine_per_day;
  SimPath sp = simulate_one(params, grid, seed, index);
  std::vector<double> S = to_vec(sp.S.col(0));
  std::vector<double> V = to_vec(sp.V);
  std::vector<double> qvS = estimate_spot_qv(S, grid, window);
  std::vector<double> qvV = estimate_spot_qv(V, grid, window);
  SamplePath fine = extract_drivers(grid, S, V, qvS, qvV);
  const std::size_t stride = fine_per_day / per_day;
  TimeSeriesData out;
  out.drivers = coarsen(fine, stride);
  out.price = coarsen(S, stride);
  std::vector<double> qc = coarsen(qvS, stride);
  for (double q : qc) out.spot_vol.push_back(std::sqrt(q));
  return out;
}

namespace {

// ------------------------------------------------------------ appendix-b

ExperimentResult appendix_b(const ExperimentConfig& cfg) {
  const double y0 = 100, K = 120, T = 0.5, sigma_ref = 0.25;
  const int m = 5, steps = 100;
  const std::size_t n_mc = 10000;
  ExperimentResult r;
  const double bs = bs_price(y0, K, T, sigma_ref);
  // Black-Scholes paths with per-path volatility drawn uniformly on [0.05, 0.4].
  const double dt = T / steps;
  IncrementFn gen = [&](std::size_t p, double* out) {
    std::mt19937_64 rng(sub_seed(cfg.seed, p));
    std::uniform_real_distribution<double> ud(0.05, 0.4);
    std::normal_distribution<double> nd;
    const double sig = ud(rng);
    double y = y0;
    for (int s = 0; s < steps; ++s) {
      double ny = y * std::exp(-0.5 * sig * sig * dt + sig * std::sqrt(dt) * nd(rng));
      out[2 * s] = dt;
      out[2 * s + 1] = ny - y;
      y = ny;
    }
  };
  SigSamples sigs = sample_signatures(gen, n_mc, 2, m, steps, steps);
  Eigen::VectorXd pay(n_mc);
  for (std::size_t i = 0; i < n_mc; ++i) pay[i] = std::max(y0 + sigs.rows(i, 2) - K, 0.0);
  SigPayoff f = fit_sig_payoff(pay, sigs, m);
  TensorSeries ey = bs_expected_signature(y0, sigma_ref, T, m);
  const double sig_price = sig_payoff_value(f, ey);
  const double gap = std::abs(sig_price - bs) / bs;
  r.metrics = {{"bs_price", bs},
               {"sig_payoff_price", sig_price},
               {"relative_gap", gap},
               {"n_mc", n_mc},
               {"m", m},
               {"coefficients", f.f.size()}};
  r.passed = std::abs(bs - 1.5155) <= 1e-4 && gap > 0.05;
  std::string csv = "word,coefficient\n";
  for (const auto& [w, v] : f.f) csv += "\"" + w.str() + "\"," + io::fmt(v) + "\n";
  r.files["sig_payoff_coefficients.csv"] = csv;
  return r;
}

// ------------------------------------------------------------ time series

struct TsSetup {
  int fine_per_day = 480;
  int per_day = 3;
  int window = 60;
};

ExperimentResult heston_ts(const ExperimentConfig& cfg) {
  const SVParams p = heston(1, 0.08, 0.001, 0.5, 0.15, 0.25, -0.5);
  const CorrelationSpec rho = CorrelationSpec::pair(p.rho);
  TsSetup ts;
  const int n = 2;
  const double lambda = 1e-5;
  const std::size_t n_out = cfg.quick ? 10 : 100;
  TimeSeriesData train = observe_series(p, 1.0, ts.fine_per_day, ts.per_day, ts.window, cfg.seed, 0);
  SigStream stream = path_signature(train.drivers, n);
  ModelSpec spec = fit_timeseries_price(stream, train.price, n, Penalty::l1, lambda, rho);
  const double mse_in = path_mse(eval_model(spec, stream), train.price);
  std::vector<double> outs(n_out);
  parallel_for(n_out, 1, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      TimeSeriesData d = observe_series(p, 0.5, ts.fine_per_day, ts.per_day, ts.window, cfg.seed, 1 + i);
      SigStream s = path_signature(d.drivers, n);
      outs[i] = path_mse(eval_model(spec, s), d.price);
    }
  });
  double mse_out = 0;
  for (double v : outs) mse_out += v / n_out;
  ExperimentResult r;
  r.metrics = {{"mse_in", mse_in},      {"mse_out", mse_out},         {"n_out_paths", n_out},
               {"n", n},                {"lambda", lambda},           {"fine_per_day", ts.fine_per_day},
               {"ticks_per_day", ts.per_day}, {"qv_window", ts.window}, {"model", spec.to_json()}};
  r.passed = mse_in <= 1e-4 && mse_out <= 1e-3;
  std::vector<std::vector<double>> rows;
  auto fit = eval_model(spec, stream);
  for (std::size_t i = 0; i < fit.size(); ++i) rows.push_back({stream.times[i], train.price[i], fit[i]});
  r.files["heston_ts_path.csv"] = io::to_csv({"t", "observed", "model"}, rows);
  return r;
}

ExperimentResult sabr_ts(const ExperimentConfig& cfg) {
  SVParams p = heston(1, 0.08, 0.001, 0.5, 0.15, 0.25, -0.5);
  p.model = SVModel::sabr;
  const CorrelationSpec rho = CorrelationSpec::pair(p.rho);
  TsSetup ts;
  const int n = 2;
  const double lambda = 1e-5;
  const std::size_t n_out = cfg.quick ? 10 : 100;
  TimeSeriesData train = observe_series(p, 1.0, ts.fine_per_day, ts.per_day, ts.window, cfg.seed, 0);
  SigStream stream = path_signature(train.drivers, n + 1);
  VolModel vm = fit_timeseries_vol(stream, train.spot_vol, n, Penalty::l1, lambda, rho);
  ModelSpec spec = vm.to_price_model(train.price[0]);
  const double vol_mse_in = path_mse(vm.eval(stream), train.spot_vol);
  const double mse_in = path_mse(eval_model(spec, stream), train.price);
  std::vector<double> outs(n_out);
  parallel_for(n_out, 1, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      TimeSeriesData d = observe_series(p, 0.5, ts.fine_per_day, ts.per_day, ts.window, cfg.seed, 1 + i);
      SigStream s = path_signature(d.drivers, n + 1);
      outs[i] = path_mse(eval_model(spec, s), d.price);
    }
  });
  double mse_out = 0;
  for (double v : outs) mse_out += v / n_out;
  ExperimentResult r;
  r.metrics = {{"mse_in", mse_in},         {"mse_out", mse_out}, {"vol_mse_in", vol_mse_in},
               {"n_out_paths", n_out},     {"n", n},             {"lambda", lambda},
               {"qv_window", ts.window},   {"model", spec.to_json()}};
  r.passed = mse_in <= 1e-4;
  std::vector<std::vector<double>> rows;
  auto fit = eval_model(spec, stream);
  auto vfit = vm.eval(stream);
  for (std::size_t i = 0; i < fit.size(); ++i)
    rows.push_back({stream.times[i], train.price[i], fit[i], train.spot_vol[i], vfit[i]});
  r.files["sabr_ts_path.csv"] = io::to_csv({"t", "observed", "model", "spot_vol", "model_vol"}, rows);
  return r;
}

// ------------------------------------------------------------ surfaces

struct SurfaceSetup {
  double kappa = 0.1, theta = 0.1, sigma = 0.4, rho = -0.5, V0 = 0.08, s0 = 1.0;
  std::vector<double> maturities{30.0 / 365.0, 0.25, 0.5, 1.0, 2.0};
  std::vector<double> strikes = linspace(0.8, 1.2, 9);
  double grid_step = 1.0 / 250.0;
};

FeatureMatrix surface_features(const SurfaceSetup& su, int n, std::size_t n_mc, std::uint64_t seed) {
  const CorrelationSpec rho = CorrelationSpec::pair(su.rho);
  auto grid = make_grid(su.maturities.back(), su.grid_step, su.maturities);
  DriverSampler sampler(2, rho, grid, seed);
  return precompute_features(sampler, n_mc, n, rho, su.maturities);
}

nlohmann::json skew_json(const std::vector<SkewPoint>& target, const std::vector<SkewPoint>& model, double& worst) {
  nlohmann::json j = nlohmann::json::array();
  worst = 0;
  for (std::size_t k = 0; k < target.size(); ++k) {
    const double rel = std::abs(model[k].psi - target[k].psi) / target[k].psi;
    worst = std::max(worst, rel);
    j.push_back({{"T", target[k].T}, {"psi_target", target[k].psi}, {"psi_model", model[k].psi}, {"rel_err", rel}});
  }
  return j;
}

ExperimentResult heston_surface_exp(const ExperimentConfig& cfg) {
  SurfaceSetup su;
  const int n = 3;
  const std::size_t n_mc = cfg.quick ? 20000 : 200000;
  QuoteSurface target = heston_surface(su.s0, su.kappa, su.theta, su.sigma, su.rho, su.V0, su.maturities, su.strikes);
  FeatureMatrix fm = surface_features(su, n, n_mc, cfg.seed);
  SurfaceOptions opts;
  opts.seed = cfg.seed;
  CalibReport rep = calibrate_surface(target, fm, n, opts);
  ExperimentResult r;
  r.metrics = rep.to_json();
  r.metrics["n_mc"] = n_mc;
  r.metrics["n"] = n;
  r.metrics.erase("loss_trace");
  r.metrics.erase("wall_time");
  r.metrics["loss_trace_length"] = rep.loss_trace.size();
  r.metrics["final_loss"] = rep.loss_trace.empty() ? 0.0 : rep.loss_trace.back();
  r.passed = rep.max_err_bps() <= 100 && rep.mean_err_bps() <= 30;
  r.files["heston_surface.csv"] = rep.surface_csv();
  return r;
}

ExperimentResult slicewise_exp(const ExperimentConfig& cfg) {
  SurfaceSetup su;
  const int n = 2;
  const std::size_t n_mc = cfg.quick ? 20000 : 200000;
  QuoteSurface target = heston_surface(su.s0, su.kappa, su.theta, su.sigma, su.rho, su.V0, su.maturities, su.strikes);
  FeatureMatrix fm = surface_features(su, n, n_mc, cfg.seed);
  SurfaceOptions opts;
  opts.seed = cfg.seed;
  CalibReport rep = calibrate_slicewise(target, fm, n, opts);
  // Prices at earlier maturities must not move when later corrections are added.
  bool frozen = true;
  for (std::size_t k = 0; k < rep.spec.corrections.size(); ++k) {
    ModelSpec partial = rep.spec;
    partial.corrections.resize(k);
    for (std::size_t j = 0; j <= k; ++j) {
      const double T = su.maturities[j];
      Eigen::VectorXd a = terminal_samples(partial, fm, T);
      Eigen::VectorXd b = terminal_samples(rep.spec, fm, T);
      if (std::memcmp(a.data(), b.data(), sizeof(double) * a.size()) != 0) frozen = false;
    }
  }
  double worst_skew = 0;
  nlohmann::json skew = skew_json(atm_skew(target), atm_skew(rep, su.s0), worst_skew);
  nlohmann::json per_smile = nlohmann::json::array();
  double worst_smile = 0;
  for (double T : su.maturities) {
    double mx = 0;
    for (std::size_t i = 0; i < rep.quotes.size(); ++i)
      if (std::abs(rep.quotes[i].T - T) < 1e-12) mx = std::max(mx, rep.abs_err_bps[i]);
    worst_smile = std::max(worst_smile, mx);
    per_smile.push_back({{"T", T}, {"max_abs_err_bps", mx}});
  }
  nlohmann::json corr_norms = nlohmann::json::array();
  for (const auto& c : rep.spec.corrections) {
    double s = 0;
    for (const auto& [w, v] : c.ell) s += v * v;
    corr_norms.push_back(std::sqrt(s));
  }
  ExperimentResult r;
  r.metrics = {{"per_smile", per_smile},
               {"max_abs_err_bps", rep.max_err_bps()},
               {"mean_abs_err_bps", rep.mean_err_bps()},
               {"earlier_prices_bit_identical", frozen},
               {"atm_skew", skew},
               {"atm_skew_worst_rel_err", worst_skew},
               {"correction_norms", corr_norms},
               {"n_mc", n_mc},
               {"n", n},
               {"model", rep.spec.to_json()}};
  r.passed = worst_smile <= 50 && frozen && worst_skew <= 0.2;
  r.files["slicewise_surface.csv"] = rep.surface_csv();
  return r;
}

ExperimentResult joint_exp(const ExperimentConfig& cfg) {
  // Physical dynamics for the observed path, martingale dynamics for option prices.
  const SVParams phys = heston(1, 0.12, 0.001, 0.8, 0.1, 0.55, -0.5);
  const double sig_q = 0.55, rho_q = -0.5, v0_q = 0.12, s0 = 1.0;
  const std::vector<double> mats{0.25, 1.0};
  const std::vector<double> strikes = linspace(0.7, 1.3, 9);
  const int n = 2;
  const double lambda_mix = 0.9;
  const std::size_t n_mc = cfg.quick ? 20000 : 200000;
  const int fine_per_day = 480, window = 60;
  QuoteSurface target = heston_surface(s0, 0.0, 0.0, sig_q, rho_q, v0_q, mats, strikes);
  const CorrelationSpec rho = CorrelationSpec::pair(rho_q);
  auto grid = make_grid(1.0, 1.0 / 250.0, mats);
  DriverSampler sampler(2, rho, grid, cfg.seed);
  FeatureMatrix fm = precompute_features(sampler, n_mc, n, rho, mats);
  // Nine months of daily drivers; the first three train, the rest test.
  TimeSeriesData data = observe_series(phys, 0.75, fine_per_day, 1, window, sub_seed(cfg.seed, 7), 0);
  const std::size_t n_train = 91;
  SigStream full = path_signature(data.drivers, n);
  SigStream train;
  train.N = full.N;
  train.times.assign(full.times.begin(), full.times.begin() + n_train);
  train.sigs.assign(full.sigs.begin(), full.sigs.begin() + n_train);
  std::vector<double> price_train(data.price.begin(), data.price.begin() + n_train);
  SurfaceOptions opts;
  opts.seed = cfg.seed;
  CalibReport rep = joint_calibrate(train, price_train, target, fm, lambda_mix, n, opts);
  std::vector<double> model_path = eval_model(rep.spec, full);
  std::vector<double> mo(model_path.begin() + n_train, model_path.end());
  std::vector<double> ob(data.price.begin() + n_train, data.price.end());
  const double mse_out = path_mse(mo, ob);
  ExperimentResult r;
  r.metrics = {{"max_abs_err_bps", rep.max_err_bps()},
               {"mean_abs_err_bps", rep.mean_err_bps()},
               {"path_mse_in", rep.path_mse},
               {"path_mse_out", mse_out},
               {"lambda", lambda_mix},
               {"n_mc", n_mc},
               {"n", n},
               {"model", rep.spec.to_json()}};
  r.passed = rep.max_err_bps() <= 50 && mse_out <= 1e-4;
  r.files["joint_surface.csv"] = rep.surface_csv();
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < full.size(); ++i) rows.push_back({full.times[i], data.price[i], model_path[i]});
  r.files["joint_path.csv"] = io::to_csv({"t", "observed", "model"}, rows);
  return r;
}

}  // namespace

std::vector<std::string> experiment_names() {
  return {"appendix-b", "heston-surface", "heston-ts", "sabr-ts", "slicewise", "joint"};
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  ExperimentResult r;
  if (cfg.name == "appendix-b")
    r = appendix_b(cfg);
  else if (cfg.name == "heston-surface")
    r = heston_surface_exp(cfg);
  else if (cfg.name == "heston-ts")
    r = heston_ts(cfg);
  else if (cfg.name == "sabr-ts")
    r = sabr_ts(cfg);
  else if (cfg.name == "slicewise")
    r = slicewise_exp(cfg);
  else if (cfg.name == "joint")
    r = joint_exp(cfg);
  else
    throw std::invalid_argument("unknown experiment " + cfg.name);
  r.metrics["experiment"] = cfg.name;
  r.metrics["seed"] = cfg.seed;
  r.metrics["quick"] = cfg.quick;
  r.metrics["passed"] = r.passed;
  r.files["metrics.json"] = io::dump_json(r.metrics);
  return r;
}

}  // namespace sigcal
