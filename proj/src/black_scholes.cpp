#include <cmath>
#include <stdexcept>
#include <vector>

#include "sigcal/pricing.hpp"

namespace sigcal {

double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double norm_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI); }

double bs_price(double s0, double K, double T, double sigma) {
  if (s0 <= 0 || T < 0 || sigma < 0) throw std::invalid_argument("invalid Black-Scholes inputs");
  if (K <= 0) return s0 - K;
  const double sd = sigma * std::sqrt(T);
  if (sd == 0.0) return std::max(s0 - K, 0.0);
  const double d1 = std::log(s0 / K) / sd + 0.5 * sd;
  const double d2 = d1 - sd;
  return s0 * norm_cdf(d1) - K * norm_cdf(d2);
}

double bs_put(double s0, double K, double T, double sigma) { return bs_price(s0, K, T, sigma) - s0 + K; }

double bs_vega(double s0, double K, double T, double sigma) {
  const double sd = sigma * std::sqrt(T);
  if (sd == 0.0 || K <= 0) return 0.0;
  const double d1 = std::log(s0 / K) / sd + 0.5 * sd;
  return s0 * norm_pdf(d1) * std::sqrt(T);
}

double implied_vol(double price, double s0, double K, double T) {
  const double lo_bound = std::max(s0 - K, 0.0);
  if (!(price >= lo_bound - 1e-12) || !(price <= s0 + 1e-12))
    throw std::domain_error("option price violates no-arbitrage bounds");
  double lo = 1e-4, hi = 5.0;
  if (price <= bs_price(s0, K, T, lo)) return lo;
  if (price >= bs_price(s0, K, T, hi)) return hi;
  for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
    double mid = 0.5 * (lo + hi);
    if (bs_price(s0, K, T, mid) < price)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

TensorSeries bs_expected_signature(double y0, double sigma, double T, int m, int rk_steps) {
  const int A = 2;
  const int P = 2 * m + 1;
  const std::size_t dim = series_dimension(A, m);
  // u[p * dim + c]: E[Y^p <e_J, sig>] with c the graded position of J.
  std::vector<std::size_t> off(m + 2, 0);
  for (int k = 1; k <= m + 1; ++k) off[k] = off[k - 1] + ipow(A, k - 1);
  const double s2 = sigma * sigma;
  auto rhs = [&](const std::vector<double>& u, std::vector<double>& du) {
    for (int p = 0; p < P; ++p) {
      for (int k = 0; k <= m; ++k) {
        const std::size_t cnt = ipow(A, k);
        for (std::size_t i = 0; i < cnt; ++i) {
          const std::size_t c = off[k] + i;
          double v = 0.5 * p * (p - 1) * s2 * u[p * dim + c];
          if (k >= 1) {
            const std::size_t prev = off[k - 1] + i / 2;
            if (i % 2 == 0) {
              v += u[p * dim + prev];
            } else {
              if (p + 1 < P) v += p * s2 * u[(p + 1) * dim + prev];
              if (k >= 2 && (i / 2) % 2 == 1 && p + 2 < P) v += 0.5 * s2 * u[(p + 2) * dim + off[k - 2] + i / 4];
            }
          }
          du[p * dim + c] = v;
        }
      }
    }
  };
  std::vector<double> u(P * dim, 0.0), k1(u.size()), k2(u.size()), k3(u.size()), k4(u.size()), tmp(u.size());
  for (int p = 0; p < P; ++p) u[p * dim] = std::pow(y0, p);
  const double h = T / rk_steps;
  for (int s = 0; s < rk_steps; ++s) {
    rhs(u, k1);
    for (std::size_t i = 0; i < u.size(); ++i) tmp[i] = u[i] + 0.5 * h * k1[i];
    rhs(tmp, k2);
    for (std::size_t i = 0; i < u.size(); ++i) tmp[i] = u[i] + 0.5 * h * k2[i];
    rhs(tmp, k3);
    for (std::size_t i = 0; i < u.size(); ++i) tmp[i] = u[i] + h * k3[i];
    rhs(tmp, k4);
    for (std::size_t i = 0; i < u.size(); ++i) u[i] += h / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
  }
  TensorSeries out(A, m);
  auto data = out.data();
  for (std::size_t c = 0; c < dim; ++c) data[c] = u[c];
  return out;
}

}  // namespace sigcal
