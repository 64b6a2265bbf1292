#include <cmath>
#include <complex>
#include <stdexcept>

#include "sigcal/market_sim.hpp"

namespace sigcal {

using cd = std::complex<double>;

cd heston_cf(cd u, double T, double kappa, double theta, double sigma, double rho, double V0) {
  const cd i(0.0, 1.0);
  if (sigma == 0.0) {
    // Deterministic variance.
    double iv = kappa > 0 ? theta * T + (V0 - theta) * (1 - std::exp(-kappa * T)) / kappa : V0 * T;
    return std::exp(-0.5 * (u * u + i * u) * iv);
  }
  const cd xi = kappa - sigma * rho * i * u;
  const cd d = std::sqrt(xi * xi + sigma * sigma * (u * u + i * u));
  // (xi - d) / sigma^2 without cancellation, so small vol-of-vol stays accurate.
  const cd m = -(u * u + i * u) / (xi + d);
  const cd g = m * sigma * sigma / (xi + d);
  const cd e = std::exp(-d * T);
  // log((1 - g e) / (1 - g)) = log1p(z); short series when z is tiny.
  const cd z = g * (1.0 - e) / (1.0 - g);
  const cd L = std::abs(z) < 1e-4 ? z * (1.0 - z * (0.5 - z * (1.0 / 3 - 0.25 * z))) : std::log(1.0 + z);
  const cd C = kappa * theta * (m * T - 2.0 * L / (sigma * sigma));
  const cd D = m * (1.0 - e) / (1.0 - g * e);
  return std::exp(C + D * V0);
}

double heston_call(double s0, double K, double T, double kappa, double theta, double sigma, double rho, double V0) {
  if (!(s0 > 0) || !(K > 0) || !(T > 0)) throw std::invalid_argument("invalid Heston pricing inputs");
  const double k = std::log(s0 / K);
  auto f = [&](double u) {
    cd phi = heston_cf(cd(u, -0.5), T, kappa, theta, sigma, rho, V0);
    return std::real(std::exp(cd(0.0, u * k)) * phi) / (u * u + 0.25);
  };
  // Composite Gauss-Legendre, 8 nodes per panel.
  static const double x8[4] = {0.1834346424956498, 0.5255324099163290, 0.7966664774136267, 0.9602898564975363};
  static const double w8[4] = {0.3626837833783620, 0.3137066458778873, 0.2223810344533745, 0.1012285362903763};
  const double U = 400.0;
  const int panels = 800;
  const double h = U / panels;
  double integral = 0;
  for (int p = 0; p < panels; ++p) {
    const double c = (p + 0.5) * h, r = 0.5 * h;
    for (int j = 0; j < 4; ++j) integral += r * w8[j] * (f(c - r * x8[j]) + f(c + r * x8[j]));
  }
  return s0 - std::sqrt(s0 * K) / M_PI * integral;
}

}  // namespace sigcal
