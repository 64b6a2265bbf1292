#include <Eigen/Cholesky>
#include <cmath>
#include <stdexcept>

#include "sigcal/parallel.hpp"
#include "sigcal/pricing.hpp"

namespace sigcal {

namespace {

void check_payoff(const SigPayoff& f) {
  for (const auto& [w, v] : f.f) {
    if (static_cast<int>(w.size()) > f.m) throw std::invalid_argument("sig-payoff word longer than its degree");
    for (int l : w.letters())
      if (l > 1) throw std::invalid_argument("sig-payoff words use letters 0 and 1 only");
  }
}

// sum_{J nonempty} f_J lift(J), at level m * n.
TensorSeries payoff_functional(const SigPayoff& f, const ModelSpec& spec) {
  check_payoff(f);
  const int N = std::max(1, f.m) * spec.n;
  TensorSeries G(spec.d + 1, N);
  for (const auto& [w, v] : f.f) {
    if (w.empty() || v == 0.0) continue;
    G += v * model_sig_lift(spec, w).with_depth(N);
  }
  return G;
}

double constant_term(const SigPayoff& f) {
  auto it = f.f.find(Word{});
  return it == f.f.end() ? 0.0 : it->second;
}

}  // namespace

double sig_payoff_price(const SigPayoff& f, const ModelSpec& spec, double T) {
  TensorSeries G = payoff_functional(f, spec);
  return constant_term(f) + inner(G, expected_sig(G.depth(), T, spec.rho));
}

SigSamples sample_signatures(const IncrementFn& gen, std::size_t n_mc, int A, int N, std::size_t steps,
                             std::size_t index) {
  SigSamples out;
  out.alphabet = A;
  out.N = N;
  const std::size_t dim = series_dimension(A, N);
  out.rows.resize(n_mc, dim);
  std::size_t idx[1] = {index};
  SigVisitor visit = [&](std::size_t p, std::size_t, const double* sig) {
    for (std::size_t c = 0; c < dim; ++c) out.rows(p, c) = sig[c];
  };
  parallel_for(n_mc, 512, [&](std::size_t b, std::size_t e) { signatures_block(b, e, A, N, steps, gen, idx, visit); });
  return out;
}

SigSamples sample_signatures(const DriverSampler& sampler, std::size_t n_mc, int N, double T) {
  return sample_signatures(sampler.increment_fn(), n_mc, sampler.d() + 1, N, sampler.steps(),
                           grid_index(sampler.grid(), T));
}

namespace {

Eigen::VectorXd pair_rows(const SigSamples& sigs, const TensorSeries& G) {
  if (sigs.alphabet != G.alphabet()) throw std::invalid_argument("alphabet mismatch");
  if (sigs.N < G.depth()) throw std::invalid_argument("signature samples below the required level");
  const std::size_t dim = G.dimension();
  Eigen::Map<const Eigen::VectorXd> g(G.data().data(), dim);
  return sigs.rows.leftCols(dim) * g;
}

}  // namespace

Eigen::VectorXd cv_samples(const ModelSpec& spec, const SigSamples& sigs, const SigPayoff& f, double T) {
  TensorSeries G = payoff_functional(f, spec);
  const double price = constant_term(f) + inner(G, expected_sig(G.depth(), T, spec.rho));
  Eigen::VectorXd phi = pair_rows(sigs, G);
  phi.array() += constant_term(f) - price;
  return phi;
}

PriceResult cv_price(const ModelSpec& spec, const SigSamples& sigs, const SigPayoff& f, Payoff payoff, double T,
                     double K) {
  if (!spec.corrections.empty()) throw std::invalid_argument("cv_price does not support corrections");
  TensorSeries L = model_functional(spec);
  Eigen::VectorXd s = pair_rows(sigs, L);
  s.array() += spec.s0;
  Eigen::VectorXd phi = cv_samples(spec, sigs, f, T);
  const std::size_t N = s.size();
  Eigen::VectorXd y(N);
  for (std::size_t i = 0; i < N; ++i) {
    double v = payoff == Payoff::call ? std::max(s[i] - K, 0.0) : std::max(K - s[i], 0.0);
    y[i] = v - phi[i];
  }
  PriceResult r;
  r.price = y.mean();
  double var = N > 1 ? (y.array() - r.price).square().sum() / (N - 1) : 0.0;
  r.std_error = std::sqrt(var / N);
  return r;
}

SigPayoff fit_sig_payoff(const Eigen::VectorXd& payoffs, const SigSamples& sigs, int m) {
  if (sigs.alphabet != 2) throw std::invalid_argument("sig-payoff regression expects signatures of (t, Y)");
  if (sigs.N < m) throw std::invalid_argument("signature samples below the payoff degree");
  if (payoffs.size() != sigs.rows.rows()) throw std::invalid_argument("payoff and signature sample counts differ");
  const std::size_t dim = series_dimension(2, m);
  const Eigen::Index N = payoffs.size();
  Eigen::MatrixXd X = sigs.rows.leftCols(dim);
  Eigen::VectorXd scale(dim);
  for (std::size_t c = 0; c < dim; ++c) {
    double rms = std::sqrt(X.col(c).squaredNorm() / N);
    scale[c] = rms > 0 ? rms : 1.0;
    X.col(c) /= scale[c];
  }
  Eigen::MatrixXd G = X.transpose() * X / static_cast<double>(N);
  Eigen::MatrixXd Gr = G;
  Gr.diagonal().array() += 1e-8;
  Eigen::VectorXd rhs = X.transpose() * payoffs / static_cast<double>(N);
  auto ldlt = Gr.ldlt();
  Eigen::VectorXd beta = ldlt.solve(rhs);
  // Iterated Tikhonov: the floor guards exact null directions, while
  // refinement removes its bias on the well-posed ones.
  for (int it = 0; it < 30; ++it) beta += ldlt.solve(rhs - G * beta);
  SigPayoff f;
  f.m = m;
  const auto words = all_words(2, m);
  for (std::size_t c = 0; c < dim; ++c) f.f[words[c]] = beta[c] / scale[c];
  return f;
}

double sig_payoff_value(const SigPayoff& f, const TensorSeries& sig) {
  double v = 0;
  for (const auto& [w, c] : f.f) v += c * sig.coeff(w);
  return v;
}

SigSamples lifted_signatures(const ModelSpec& spec, const SigSamples& sigs, int m) {
  SigSamples out;
  out.alphabet = 2;
  out.N = m;
  const auto words = all_words(2, m);
  out.rows.resize(sigs.rows.rows(), words.size());
  for (std::size_t c = 0; c < words.size(); ++c) {
    if (words[c].empty()) {
      out.rows.col(c).setOnes();
      continue;
    }
    out.rows.col(c) = pair_rows(sigs, model_sig_lift(spec, words[c]));
  }
  return out;
}

}  // namespace sigcal
