// Command-line driver. Every subcommand writes into --out and leaves a
// manifest.json there that is enough to rerun it.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "sigcal/calibration.hpp"
#include "sigcal/experiments.hpp"
#include "sigcal/expected_signature.hpp"
#include "sigcal/io.hpp"
#include "sigcal/market_sim.hpp"
#include "sigcal/pricing.hpp"
#include "sigcal/signature.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace sigcal;

namespace {

constexpr const char* kVersion = "0.1.0";

struct ThresholdFailure {};

struct Common {
  std::string out = "out";
  std::uint64_t seed = 42;
};

void add_common(CLI::App* sub, Common& c, bool with_seed) {
  sub->add_option("--out", c.out, "Output directory")->capture_default_str();
  if (with_seed) sub->add_option("--seed", c.seed, "Master seed")->capture_default_str();
}

void write_outputs(const Common& c, const std::string& command, const std::vector<std::string>& argv,
                   const std::map<std::string, std::string>& files) {
  fs::create_directories(c.out);
  for (const auto& [name, text] : files) io::write_text((fs::path(c.out) / name).string(), text);
  json m;
  m["command"] = command;
  m["argv"] = argv;
  m["seed"] = c.seed;
  m["version"] = kVersion;
  std::vector<std::string> names;
  for (const auto& f : files) names.push_back(f.first);
  m["outputs"] = names;
  io::write_text((fs::path(c.out) / "manifest.json").string(), io::dump_json(m));
}

Eigen::MatrixXd read_matrix(const std::string& path) {
  json j = io::read_json(path);
  if (j.is_object()) j = j.at("rho");
  Eigen::MatrixXd m(j.size(), j.size());
  for (std::size_t a = 0; a < j.size(); ++a) {
    if (j.at(a).size() != j.size()) throw std::invalid_argument("correlation matrix must be square");
    for (std::size_t b = 0; b < j.size(); ++b) m(a, b) = j.at(a).at(b).get<double>();
  }
  return m;
}

// --rho-file wins over --rho (d = 2 only); identity otherwise.
CorrelationSpec correlation(int d, const std::string& file, std::optional<double> r) {
  CorrelationSpec c = CorrelationSpec::identity(d);
  if (!file.empty())
    c = CorrelationSpec(read_matrix(file));
  else if (r) {
    if (d != 2) throw std::invalid_argument("--rho needs --d 2");
    c = CorrelationSpec::pair(*r);
  }
  if (c.d() != d) throw std::invalid_argument("correlation matrix does not match --d");
  c.validate();
  return c;
}

std::vector<double> column(const io::Table& t, const std::string& name) {
  const std::size_t c = t.column(name);
  std::vector<double> v;
  v.reserve(t.rows.size());
  for (const auto& r : t.rows) v.push_back(std::stod(r.at(c)));
  return v;
}

Penalty parse_penalty(const std::string& s) { return s == "l1" ? Penalty::l1 : Penalty::l2; }

std::string report_files(const CalibReport& rep, std::map<std::string, std::string>& files) {
  json j = rep.to_json();
  j.erase("wall_time");
  files["report.json"] = io::dump_json(j);
  files["surface.csv"] = rep.surface_csv();
  files["model.json"] = io::dump_json(rep.spec.to_json());
  return files["report.json"];
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Signature-model simulation, pricing and calibration"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  std::vector<std::string> args(argv + 1, argv + argc);
  std::string command;

  // simulate
  Common sim_c;
  std::string sim_model, sim_params;
  double sim_step = 1.0 / 250.0, sim_T = 1.0;
  std::size_t sim_n = 1;
  auto* sim = app.add_subcommand("simulate", "Simulate market paths (one CSV per path)");
  sim->add_option("--model", sim_model, "heston | sabr | multibs; overrides the tag in --params")
      ->check(CLI::IsMember({"heston", "sabr", "multibs"}));
  sim->add_option("--params", sim_params, "Parameter JSON")->required()->check(CLI::ExistingFile);
  sim->add_option("--grid-step", sim_step, "Time step in years")->capture_default_str();
  sim->add_option("--T", sim_T, "Horizon in years")->capture_default_str();
  sim->add_option("--npaths", sim_n, "Number of paths")->capture_default_str();
  add_common(sim, sim_c, true);

  // extract-bm
  Common ex_c;
  std::string ex_prices;
  int ex_window = 60;
  std::size_t ex_stride = 1;
  auto* ex = app.add_subcommand("extract-bm", "Recover Brownian drivers from an observed (t, S, V) path");
  ex->add_option("--prices", ex_prices, "CSV with columns t, S, V")->required()->check(CLI::ExistingFile);
  ex->add_option("--window", ex_window, "Trailing window of the spot QV estimator")->capture_default_str();
  ex->add_option("--stride", ex_stride, "Keep every stride-th point after extraction")->capture_default_str();
  add_common(ex, ex_c, false);

  // sig
  Common sig_c;
  std::string sig_path;
  int sig_level = 3;
  auto* sg = app.add_subcommand("sig", "Signature stream of a path CSV (t, x1, ..., xd)");
  sg->add_option("--path", sig_path, "Path CSV")->required()->check(CLI::ExistingFile);
  sg->add_option("--level", sig_level, "Truncation level")->capture_default_str();
  add_common(sg, sig_c, false);

  // expected-sig
  Common es_c;
  int es_d = 1, es_level = 3;
  double es_t = 1.0;
  std::string es_rho;
  auto* es = app.add_subcommand("expected-sig", "Expected signature of time-extended correlated Brownian motion");
  es->add_option("--d", es_d, "Number of Brownian drivers")->capture_default_str();
  es->add_option("--rho", es_rho, "Correlation matrix JSON (identity if omitted)")->check(CLI::ExistingFile);
  es->add_option("--t", es_t, "Time horizon")->capture_default_str();
  es->add_option("--level", es_level, "Truncation level")->capture_default_str();
  add_common(es, es_c, false);

  // fit-ts
  Common ts_c;
  std::string ts_paths, ts_observed, ts_target = "price", ts_penalty = "l1", ts_column, ts_rho_file;
  std::optional<double> ts_rho;
  int ts_n = 2;
  double ts_lambda = 1e-5;
  auto* ts = app.add_subcommand("fit-ts", "Fit a signature model to one observed time series");
  ts->add_option("--paths", ts_paths, "Driver CSV (t, x1, ..., xd)")->required()->check(CLI::ExistingFile);
  ts->add_option("--observed", ts_observed, "CSV holding the target column on the same grid")
      ->required()
      ->check(CLI::ExistingFile);
  ts->add_option("--column", ts_column, "Target column name (default S for price, vol for vol)");
  ts->add_option("--target", ts_target, "price | vol")->check(CLI::IsMember({"price", "vol"}))->capture_default_str();
  ts->add_option("--n", ts_n, "Model order")->capture_default_str();
  ts->add_option("--penalty", ts_penalty, "l1 | l2")->check(CLI::IsMember({"l1", "l2"}))->capture_default_str();
  ts->add_option("--lambda", ts_lambda, "Penalty weight")->capture_default_str();
  ts->add_option("--rho", ts_rho, "Driver correlation (two drivers)");
  ts->add_option("--rho-file", ts_rho_file, "Driver correlation matrix JSON")->check(CLI::ExistingFile);
  add_common(ts, ts_c, false);

  // fit-surface and fit-joint share the surface options.
  struct SurfaceArgs {
    Common c;
    std::string quotes, rho_file;
    std::optional<double> rho;
    double s0 = 1.0, p = 2.0, alpha = 0.0, grid_step = 1.0 / 250.0;
    int n = 2, d = 2, iterations = 2000;
    std::size_t nmc = 20000;
    bool slicewise = false, no_polish = false;
  };
  auto add_surface = [](CLI::App* sub, SurfaceArgs& a) {
    sub->add_option("--quotes", a.quotes, "Quotes CSV (T, K, mid, iv, vega)")->required()->check(CLI::ExistingFile);
    sub->add_option("--s0", a.s0, "Spot")->capture_default_str();
    sub->add_option("--n", a.n, "Model order")->capture_default_str();
    sub->add_option("--d", a.d, "Number of Brownian drivers")->capture_default_str();
    sub->add_option("--rho", a.rho, "Driver correlation (two drivers)");
    sub->add_option("--rho-file", a.rho_file, "Driver correlation matrix JSON")->check(CLI::ExistingFile);
    sub->add_option("--nmc", a.nmc, "Monte Carlo paths")->capture_default_str();
    sub->add_option("--grid-step", a.grid_step, "Simulation step in years")->capture_default_str();
    sub->add_option("--p", a.p, "Loss exponent")->capture_default_str();
    sub->add_option("--alpha", a.alpha, "Outlier weight")->capture_default_str();
    sub->add_option("--iterations", a.iterations, "First-order iterations")->capture_default_str();
    sub->add_flag("--no-polish", a.no_polish, "Skip the Gauss-Newton refinement");
    add_common(sub, a.c, true);
  };
  SurfaceArgs fs_a;
  auto* fsur = app.add_subcommand("fit-surface", "Calibrate to an implied volatility surface");
  add_surface(fsur, fs_a);
  fsur->add_flag("--slicewise", fs_a.slicewise, "Time-dependent fit, one correction per later maturity");

  SurfaceArgs fj_a;
  std::string fj_paths, fj_observed, fj_column = "S";
  double fj_mix = 0.9;
  auto* fj = app.add_subcommand("fit-joint", "Joint fit to a price path and an option surface");
  add_surface(fj, fj_a);
  fj->add_option("--paths", fj_paths, "Driver CSV (t, x1, ..., xd)")->required()->check(CLI::ExistingFile);
  fj->add_option("--observed", fj_observed, "CSV holding the observed price column")
      ->required()
      ->check(CLI::ExistingFile);
  fj->add_option("--column", fj_column, "Observed price column")->capture_default_str();
  fj->add_option("--lambda-mix", fj_mix, "Weight of the option loss in [0, 1]")->capture_default_str();

  // price
  Common pr_c;
  std::string pr_model, pr_payoff = "call";
  double pr_K = 1.0, pr_T = 1.0, pr_step = 1.0 / 250.0;
  std::size_t pr_nmc = 20000;
  bool pr_cv = false;
  int pr_cv_degree = 2;
  auto* pr = app.add_subcommand("price", "Price a payoff under a model file");
  pr->add_option("--model", pr_model, "Model JSON")->required()->check(CLI::ExistingFile);
  pr->add_option("--payoff", pr_payoff, "call | put | asian")
      ->check(CLI::IsMember({"call", "put", "asian"}))
      ->capture_default_str();
  pr->add_option("--K", pr_K, "Strike")->capture_default_str();
  pr->add_option("--T", pr_T, "Maturity")->capture_default_str();
  pr->add_option("--nmc", pr_nmc, "Monte Carlo paths")->capture_default_str();
  pr->add_option("--grid-step", pr_step, "Simulation step in years")->capture_default_str();
  pr->add_flag("--cv", pr_cv, "Use a fitted sig-payoff as control variate");
  pr->add_option("--cv-degree", pr_cv_degree, "Degree of the control-variate sig-payoff")->capture_default_str();
  add_common(pr, pr_c, true);

  // implied-vol
  Common iv_c;
  double iv_price = 0, iv_s0 = 1, iv_K = 1, iv_T = 1;
  auto* ivc = app.add_subcommand("implied-vol", "Black-Scholes implied volatility of a call price");
  ivc->add_option("--price", iv_price, "Call price")->required();
  ivc->add_option("--s0", iv_s0, "Spot")->capture_default_str();
  ivc->add_option("--K", iv_K, "Strike")->required();
  ivc->add_option("--T", iv_T, "Maturity")->required();
  add_common(ivc, iv_c, false);

  // reproduce
  Common rp_c;
  std::string rp_name;
  bool rp_quick = false;
  auto* rp = app.add_subcommand("reproduce", "Run a named experiment and check its thresholds");
  rp->add_option("experiment", rp_name, "Experiment name")->required()->check(CLI::IsMember(experiment_names()));
  rp->add_flag("--quick", rp_quick, "Reduced sample sizes");
  add_common(rp, rp_c, true);

  if (argc == 1) {
    std::cout << app.help();
    return 2;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e);
    return 0;
  } catch (const CLI::CallForVersion& e) {
    app.exit(e);
    return 0;
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    std::map<std::string, std::string> files;
    if (*sim) {
      SVParams p = SVParams::from_json(io::read_json(sim_params));
      if (!sim_model.empty()) {
        json j = io::read_json(sim_params);
        j["model"] = sim_model;
        p = SVParams::from_json(j);
      }
      p.validate();
      std::vector<double> grid = make_grid(sim_T, sim_step);
      auto paths = simulate(p, grid, sim_n, sim_c.seed);
      const int width = std::max<int>(4, static_cast<int>(std::to_string(sim_n).size()));
      for (std::size_t i = 0; i < paths.size(); ++i) {
        const SimPath& sp = paths[i];
        std::vector<std::string> header{"t"};
        const int assets = static_cast<int>(sp.S.cols());
        for (int a = 0; a < assets; ++a) header.push_back(assets == 1 ? "S" : "S" + std::to_string(a + 1));
        if (sp.V.size()) header.push_back("V");
        std::vector<std::vector<double>> rows;
        for (std::size_t k = 0; k < sp.times.size(); ++k) {
          std::vector<double> r{sp.times[k]};
          for (int a = 0; a < assets; ++a) r.push_back(sp.S(k, a));
          if (sp.V.size()) r.push_back(sp.V[k]);
          rows.push_back(std::move(r));
        }
        std::string idx = std::to_string(i);
        idx.insert(0, width - idx.size(), '0');
        files["path_" + idx + ".csv"] = io::to_csv(header, rows);
      }
      files["params.json"] = io::dump_json(p.to_json());
      write_outputs(sim_c, "simulate", args, files);
    } else if (*ex) {
      io::Table t = io::read_csv(ex_prices);
      auto times = column(t, "t"), S = column(t, "S"), V = column(t, "V");
      auto qvS = estimate_spot_qv(S, times, ex_window);
      auto qvV = estimate_spot_qv(V, times, ex_window);
      SamplePath drivers = coarsen(extract_drivers(times, S, V, qvS, qvV), ex_stride);
      std::vector<std::vector<double>> rows;
      for (std::size_t k = 0; k < times.size(); k += ex_stride) rows.push_back({times[k], S[k], std::sqrt(qvS[k])});
      files["drivers.csv"] = io::path_csv(drivers);
      files["observed.csv"] = io::to_csv({"t", "S", "vol"}, rows);
      write_outputs(ex_c, "extract-bm", args, files);
    } else if (*sg) {
      SamplePath p = io::read_path_csv(sig_path);
      files["signature.csv"] = io::sig_stream_csv(path_signature(p, sig_level));
      write_outputs(sig_c, "sig", args, files);
    } else if (*es) {
      CorrelationSpec rho = correlation(es_d, es_rho, std::nullopt);
      TensorSeries E = expected_sig(es_level, es_t, rho);
      std::string csv = "word,value\n";
      for (const Word& w : all_words(es_d + 1, es_level)) csv += "\"" + w.str() + "\"," + io::fmt(E.coeff(w)) + "\n";
      files["expected_signature.csv"] = csv;
      write_outputs(es_c, "expected-sig", args, files);
    } else if (*ts) {
      SamplePath p = io::read_path_csv(ts_paths);
      CorrelationSpec rho = correlation(p.d(), ts_rho_file, ts_rho);
      if (ts_column.empty()) ts_column = ts_target == "price" ? "S" : "vol";
      std::vector<double> obs = column(io::read_csv(ts_observed), ts_column);
      if (obs.size() != p.size()) throw std::invalid_argument("observed series and driver path differ in length");
      json report;
      std::vector<double> fit;
      ModelSpec spec;
      if (ts_target == "price") {
        SigStream stream = path_signature(p, ts_n);
        spec = fit_timeseries_price(stream, obs, ts_n, parse_penalty(ts_penalty), ts_lambda, rho);
        fit = eval_model(spec, stream);
        report["mse"] = path_mse(fit, obs);
      } else {
        SigStream stream = path_signature(p, ts_n + 1);
        VolModel vm = fit_timeseries_vol(stream, obs, ts_n, parse_penalty(ts_penalty), ts_lambda, rho);
        fit = vm.eval(stream);
        report["mse"] = path_mse(fit, obs);
        json ell = json::object();
        for (const auto& [w, v] : vm.ell) ell[w.str()] = v;
        report["vol_ell"] = ell;
        const double s0 = column(io::read_csv(ts_observed), "S").front();
        spec = vm.to_price_model(s0);
      }
      report["model"] = spec.to_json();
      std::vector<std::vector<double>> rows;
      for (std::size_t k = 0; k < fit.size(); ++k) rows.push_back({p.times[k], obs[k], fit[k]});
      files["fit.csv"] = io::to_csv({"t", "observed", "model"}, rows);
      files["report.json"] = io::dump_json(report);
      files["model.json"] = io::dump_json(spec.to_json());
      write_outputs(ts_c, "fit-ts", args, files);
    } else if (*fsur || *fj) {
      SurfaceArgs& a = *fsur ? fs_a : fj_a;
      QuoteSurface surface = io::read_quotes_csv(a.quotes, a.s0);
      CorrelationSpec rho = correlation(a.d, a.rho_file, a.rho);
      std::vector<double> mats = surface.maturities();
      DriverSampler sampler(a.d, rho, make_grid(mats.back(), a.grid_step, mats), a.c.seed);
      FeatureMatrix fm = precompute_features(sampler, a.nmc, a.n, rho, mats);
      SurfaceOptions opts;
      opts.p = a.p;
      opts.alpha = a.alpha;
      opts.iterations = a.iterations;
      opts.seed = a.c.seed;
      opts.gauss_newton_polish = !a.no_polish;
      CalibReport rep;
      if (*fsur) {
        rep = a.slicewise ? calibrate_slicewise(surface, fm, a.n, opts) : calibrate_surface(surface, fm, a.n, opts);
      } else {
        SamplePath p = io::read_path_csv(fj_paths);
        if (p.d() != a.d) throw std::invalid_argument("driver path dimension does not match --d");
        std::vector<double> obs = column(io::read_csv(fj_observed), fj_column);
        rep = joint_calibrate(path_signature(p, a.n), obs, surface, fm, fj_mix, a.n, opts);
      }
      report_files(rep, files);
      write_outputs(a.c, *fsur ? "fit-surface" : "fit-joint", args, files);
    } else if (*pr) {
      ModelSpec spec = ModelSpec::from_json(io::read_json(pr_model));
      spec.validate();
      json out;
      if (pr_payoff == "asian") {
        // Average of S over [0, T] minus K, in closed form.
        SigPayoff f;
        f.m = 2;
        f.f[Word{}] = spec.s0 - pr_K;
        f.f[Word{1, 0}] = 1.0 / pr_T;
        if (!spec.corrections.empty()) throw std::invalid_argument("asian closed form needs a model without corrections");
        out["price"] = sig_payoff_price(f, spec, pr_T);
        out["std_error"] = 0.0;
        out["method"] = "closed_form";
      } else {
        const Payoff payoff = pr_payoff == "call" ? Payoff::call : Payoff::put;
        std::vector<double> extra{pr_T};
        for (const auto& c : spec.corrections) extra.push_back(c.T);
        DriverSampler sampler(spec.d, spec.rho, make_grid(pr_T, pr_step, extra), pr_c.seed);
        if (pr_cv) {
          SigSamples sigs = sample_signatures(sampler, pr_nmc, pr_cv_degree * spec.n, pr_T);
          SigSamples lifted = lifted_signatures(spec, sigs, pr_cv_degree);
          Eigen::VectorXd pay(pr_nmc);
          for (std::size_t i = 0; i < pr_nmc; ++i) {
            const double s = spec.s0 + lifted.rows(i, 2);
            pay[i] = payoff == Payoff::call ? std::max(s - pr_K, 0.0) : std::max(pr_K - s, 0.0);
          }
          SigPayoff f = fit_sig_payoff(pay, lifted, pr_cv_degree);
          PriceResult r = cv_price(spec, sigs, f, payoff, pr_T, pr_K);
          out["price"] = r.price;
          out["std_error"] = r.std_error;
          out["method"] = "monte_carlo_cv";
        } else {
          std::vector<double> mats{pr_T};
          for (const auto& c : spec.corrections)
            if (c.T < pr_T) mats.push_back(c.T);
          std::sort(mats.begin(), mats.end());
          mats.erase(std::unique(mats.begin(), mats.end()), mats.end());
          FeatureMatrix fm = precompute_features(sampler, pr_nmc, spec.n, spec.rho, mats);
          PriceResult r = mc_price(spec, fm, payoff, pr_T, pr_K);
          out["price"] = r.price;
          out["std_error"] = r.std_error;
          out["method"] = "monte_carlo";
        }
      }
      files["price.json"] = io::dump_json(out);
      write_outputs(pr_c, "price", args, files);
      std::cout << files["price.json"];
    } else if (*ivc) {
      json out;
      out["iv"] = implied_vol(iv_price, iv_s0, iv_K, iv_T);
      files["implied_vol.json"] = io::dump_json(out);
      write_outputs(iv_c, "implied-vol", args, files);
      std::cout << files["implied_vol.json"];
    } else if (*rp) {
      ExperimentConfig cfg;
      cfg.name = rp_name;
      cfg.seed = rp_c.seed;
      cfg.quick = rp_quick;
      ExperimentResult r = run_experiment(cfg);
      write_outputs(rp_c, "reproduce", args, r.files);
      std::cout << r.files["metrics.json"];
      if (!r.passed) throw ThresholdFailure{};
    }
  } catch (const ThresholdFailure&) {
    std::cerr << "thresholds not met\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
