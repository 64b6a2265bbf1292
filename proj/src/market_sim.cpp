#include "sigcal/market_sim.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <random>
#include <stdexcept>

#include "sigcal/parallel.hpp"
#include "sigcal/pricing.hpp"

namespace sigcal {

void SVParams::validate() const {
  if (model == SVModel::multibs) {
    const auto d = S0_vec.size();
    if (d < 1 || mu_vec.size() != d || Sigma.rows() != d || Sigma.cols() != d)
      throw std::invalid_argument("multibs parameters have inconsistent dimensions");
    if ((Sigma - Sigma.transpose()).cwiseAbs().maxCoeff() > 1e-12) throw std::invalid_argument("Sigma must be symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Sigma);
    if (es.eigenvalues().minCoeff() < -1e-12) throw std::invalid_argument("Sigma must be positive semidefinite");
    for (Eigen::Index i = 0; i < S0_vec.size(); ++i)
      if (!(S0_vec[i] > 0)) throw std::invalid_argument("initial prices must be positive");
    return;
  }
  if (std::abs(rho) > 1) throw std::invalid_argument("|rho| must not exceed 1");
  if (!(S0 > 0)) throw std::invalid_argument("initial price must be positive");
  if (sigma < 0 || V0 < 0) throw std::invalid_argument("negative volatility parameter");
  if (model == SVModel::heston && (kappa < 0 || theta < 0)) throw std::invalid_argument("Heston needs kappa, theta >= 0");
}

SVParams SVParams::from_json(const nlohmann::json& j) {
  SVParams p;
  const std::string m = j.at("model").get<std::string>();
  if (m == "heston")
    p.model = SVModel::heston;
  else if (m == "sabr")
    p.model = SVModel::sabr;
  else if (m == "multibs")
    p.model = SVModel::multibs;
  else
    throw std::invalid_argument("unknown model " + m);
  if (p.model == SVModel::multibs) {
    auto vec = [](const nlohmann::json& a) {
      Eigen::VectorXd v(a.size());
      for (std::size_t i = 0; i < a.size(); ++i) v[i] = a.at(i).get<double>();
      return v;
    };
    p.mu_vec = vec(j.at("mu"));
    p.S0_vec = vec(j.at("S0"));
    const auto& s = j.at("Sigma");
    p.Sigma.resize(s.size(), s.size());
    for (std::size_t a = 0; a < s.size(); ++a)
      for (std::size_t b = 0; b < s.size(); ++b) p.Sigma(a, b) = s.at(a).at(b).get<double>();
  } else {
    p.mu = j.value("mu", 0.0);
    p.kappa = j.value("kappa", 0.0);
    p.theta = j.value("theta", 0.0);
    p.sigma = j.at("sigma").get<double>();
    p.rho = j.value("rho", 0.0);
    p.V0 = j.at("V0").get<double>();
    p.S0 = j.value("S0", 1.0);
  }
  p.validate();
  return p;
}

nlohmann::json SVParams::to_json() const {
  nlohmann::json j;
  if (model == SVModel::multibs) {
    j["model"] = "multibs";
    j["mu"] = std::vector<double>(mu_vec.data(), mu_vec.data() + mu_vec.size());
    j["S0"] = std::vector<double>(S0_vec.data(), S0_vec.data() + S0_vec.size());
    nlohmann::json s = nlohmann::json::array();
    for (Eigen::Index a = 0; a < Sigma.rows(); ++a) {
      nlohmann::json row = nlohmann::json::array();
      for (Eigen::Index b = 0; b < Sigma.cols(); ++b) row.push_back(Sigma(a, b));
      s.push_back(row);
    }
    j["Sigma"] = s;
    return j;
  }
  j["model"] = model == SVModel::heston ? "heston" : "sabr";
  j["mu"] = mu;
  j["kappa"] = kappa;
  j["theta"] = theta;
  j["sigma"] = sigma;
  j["rho"] = rho;
  j["V0"] = V0;
  j["S0"] = S0;
  return j;
}

SimPath simulate_one(const SVParams& p, const std::vector<double>& grid, std::uint64_t seed, std::size_t index) {
  if (grid.size() < 2) throw std::invalid_argument("grid needs at least one step");
  std::mt19937_64 rng(sub_seed(seed, index));
  std::normal_distribution<double> nd;
  const std::size_t M = grid.size();
  SimPath out;
  out.times = grid;
  if (p.model == SVModel::multibs) {
    const int d = p.assets();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(p.Sigma);
    Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0);
    Eigen::MatrixXd root = es.eigenvectors() * ev.cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
    Eigen::VectorXd drift = p.mu_vec - 0.5 * p.Sigma.diagonal();
    out.S.resize(M, d);
    out.drivers = Eigen::MatrixXd::Zero(M, d);
    Eigen::VectorXd logS = p.S0_vec.array().log();
    out.S.row(0) = p.S0_vec.transpose();
    Eigen::VectorXd z(d);
    for (std::size_t i = 1; i < M; ++i) {
      const double dt = grid[i] - grid[i - 1];
      for (int c = 0; c < d; ++c) z[c] = nd(rng) * std::sqrt(dt);
      out.drivers.row(i) = out.drivers.row(i - 1) + z.transpose();
      logS += drift * dt + root * z;
      out.S.row(i) = logS.array().exp().matrix().transpose();
    }
    return out;
  }
  out.S.resize(M, 1);
  out.V.resize(M);
  out.drivers = Eigen::MatrixXd::Zero(M, 2);
  double S = p.S0, V = p.V0;
  out.S(0, 0) = S;
  out.V[0] = V;
  const double rc = std::sqrt(std::max(0.0, 1.0 - p.rho * p.rho));
  for (std::size_t i = 1; i < M; ++i) {
    const double dt = grid[i] - grid[i - 1];
    const double sq = std::sqrt(dt);
    const double z1 = nd(rng), z2 = nd(rng);
    const double dB = z1 * sq;
    const double dW = (p.rho * z1 + rc * z2) * sq;
    out.drivers(i, 0) = out.drivers(i - 1, 0) + dB;
    out.drivers(i, 1) = out.drivers(i - 1, 1) + dW;
    const double Vp = std::max(V, 0.0);
    if (p.model == SVModel::heston) {
      S *= std::exp((p.mu - 0.5 * Vp) * dt + std::sqrt(Vp) * dB);
      V = V + p.kappa * (p.theta - Vp) * dt + p.sigma * std::sqrt(Vp) * dW;
    } else {
      S *= std::exp((p.mu - 0.5 * Vp * Vp) * dt + Vp * dB);
      V = V + p.kappa * (p.theta - Vp) * dt + p.sigma * Vp * dW;
    }
    out.S(i, 0) = S;
    out.V[i] = V;
  }
  return out;
}

std::vector<SimPath> simulate(const SVParams& params, const std::vector<double>& grid, std::size_t n_paths,
                              std::uint64_t seed) {
  params.validate();
  std::vector<SimPath> out(n_paths);
  parallel_for(n_paths, 1, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) out[i] = simulate_one(params, grid, seed, i);
  });
  return out;
}

std::vector<double> estimate_spot_qv(const std::vector<double>& series, const std::vector<double>& grid, int window) {
  if (window < 2) throw std::invalid_argument("window needs at least two samples");
  if (series.size() != grid.size()) throw std::invalid_argument("series and grid differ in length");
  const std::size_t n = series.size();
  if (static_cast<std::size_t>(window) >= n) throw std::invalid_argument("window longer than the series");
  std::vector<double> out(n);
  const std::size_t w = window;
  // Running sum recomputed exactly at each point to avoid drift.
  for (std::size_t i = w; i < n; ++i) {
    double s = 0;
    for (std::size_t j = i - w + 1; j <= i; ++j) {
      const double dx = series[j] - series[j - 1];
      s += dx * dx;
    }
    out[i] = s / (grid[i] - grid[i - w]);
  }
  for (std::size_t i = 0; i < w; ++i) out[i] = out[w];
  return out;
}

SamplePath extract_drivers(const std::vector<double>& times, const std::vector<double>& S,
                           const std::vector<double>& V, const std::vector<double>& qv_S,
                           const std::vector<double>& qv_V) {
  const std::size_t n = times.size();
  if (S.size() != n || V.size() != n || qv_S.size() != n || qv_V.size() != n)
    throw std::invalid_argument("series lengths differ");
  SamplePath out;
  out.times = times;
  out.values = Eigen::MatrixXd::Zero(n, 2);
  for (std::size_t i = 1; i < n; ++i) {
    if (!(qv_S[i - 1] > 0) || !(qv_V[i - 1] > 0))
      throw std::runtime_error("nonpositive quadratic variation estimate at index " + std::to_string(i - 1));
    out.values(i, 0) = out.values(i - 1, 0) + (S[i] - S[i - 1]) / std::sqrt(qv_S[i - 1]);
    out.values(i, 1) = out.values(i - 1, 1) + (V[i] - V[i - 1]) / std::sqrt(qv_V[i - 1]);
  }
  return out;
}

std::vector<double> coarsen(const std::vector<double>& v, std::size_t stride) {
  if (stride == 0) throw std::invalid_argument("stride must be positive");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); i += stride) out.push_back(v[i]);
  return out;
}

SamplePath coarsen(const SamplePath& path, std::size_t stride) {
  if (stride == 0) throw std::invalid_argument("stride must be positive");
  SamplePath out;
  out.times = coarsen(path.times, stride);
  out.values.resize(out.times.size(), path.values.cols());
  for (std::size_t i = 0; i < out.times.size(); ++i) out.values.row(i) = path.values.row(i * stride);
  return out;
}

}  // namespace sigcal
