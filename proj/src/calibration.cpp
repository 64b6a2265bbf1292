#include "sigcal/calibration.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include "sigcal/kernels/kernels.hpp"

namespace sigcal {

// ---------------------------------------------------------------- surfaces

void QuoteSurface::complete() {
  if (quotes.empty()) throw std::invalid_argument("empty quote surface");
  for (auto& q : quotes) {
    if (!(q.T > 0) || !(q.K > 0)) throw std::invalid_argument("quotes need positive maturity and strike");
    const bool has_mid = std::isfinite(q.mid), has_iv = std::isfinite(q.iv);
    if (!has_mid && !has_iv) throw std::invalid_argument("quote without price or implied vol");
    if (!has_mid) q.mid = bs_price(s0, q.K, q.T, q.iv);
    if (!has_iv) q.iv = implied_vol(q.mid, s0, q.K, q.T);
    if (has_mid && has_iv && std::abs(bs_price(s0, q.K, q.T, q.iv) - q.mid) > 1e-6)
      throw std::invalid_argument("quote price and implied vol disagree");
    if (!std::isfinite(q.vega) || q.vega <= 0) q.vega = bs_vega(s0, q.K, q.T, q.iv);
  }
}

std::vector<double> QuoteSurface::maturities() const {
  std::vector<double> m;
  for (const auto& q : quotes) m.push_back(q.T);
  std::sort(m.begin(), m.end());
  m.erase(std::unique(m.begin(), m.end(), [](double a, double b) { return std::abs(a - b) <= 1e-12; }), m.end());
  return m;
}

double CalibReport::max_err_bps() const {
  return abs_err_bps.empty() ? 0.0 : *std::max_element(abs_err_bps.begin(), abs_err_bps.end());
}

double CalibReport::mean_err_bps() const {
  if (abs_err_bps.empty()) return 0.0;
  return std::accumulate(abs_err_bps.begin(), abs_err_bps.end(), 0.0) / abs_err_bps.size();
}

nlohmann::json CalibReport::to_json() const {
  nlohmann::json j;
  j["model"] = spec.to_json();
  nlohmann::json qs = nlohmann::json::array();
  for (std::size_t i = 0; i < quotes.size(); ++i)
    qs.push_back({{"T", quotes[i].T},
                  {"K", quotes[i].K},
                  {"market_price", quotes[i].mid},
                  {"market_iv", quotes[i].iv},
                  {"model_price", model_price[i]},
                  {"model_iv", model_iv[i]},
                  {"abs_err_bps", abs_err_bps[i]}});
  j["quotes"] = qs;
  j["max_abs_err_bps"] = max_err_bps();
  j["mean_abs_err_bps"] = mean_err_bps();
  j["loss_trace"] = loss_trace;
  j["optimizer"] = optimizer;
  if (path_mse >= 0) j["path_mse"] = path_mse;
  return j;
}

std::string CalibReport::surface_csv() const {
  std::ostringstream os;
  os.precision(17);
  os << "T,K,iv_market,iv_model,abs_err_bps\n";
  for (std::size_t i = 0; i < quotes.size(); ++i)
    os << quotes[i].T << ',' << quotes[i].K << ',' << quotes[i].iv << ',' << model_iv[i] << ',' << abs_err_bps[i]
       << '\n';
  return os.str();
}

// ------------------------------------------------------------- time series

namespace {

Eigen::MatrixXd tilde_design(const SigStream& stream, const std::vector<Word>& words, const CorrelationSpec& rho,
                             int n) {
  const int d = stream.alphabet() - 1;
  if (stream.N < n) throw std::invalid_argument("stream level below model order");
  Eigen::MatrixXd X(stream.size(), words.size());
  for (std::size_t w = 0; w < words.size(); ++w) {
    TensorSeries b = tilde_basis(words[w], 1, rho, n);
    if (b.alphabet() != d + 1) throw std::invalid_argument("correlation dimension differs from stream");
    for (std::size_t i = 0; i < stream.size(); ++i) X(i, w) = inner(b, stream.sigs[i]);
  }
  return X;
}

// Minimizes |y - X b|^2 + lambda * pen(b) over b, skipping the penalty where free[j].
Eigen::VectorXd penalized_ls(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, Penalty penalty, double lambda,
                             const std::vector<bool>& free) {
  if (lambda < 0) throw std::invalid_argument("negative penalty");
  const Eigen::Index P = X.cols();
  if (penalty == Penalty::l2 || lambda == 0.0) {
    Eigen::MatrixXd G = X.transpose() * X;
    for (Eigen::Index j = 0; j < P; ++j)
      if (!free[j]) G(j, j) += lambda;
    return G.ldlt().solve(X.transpose() * y);
  }
  // Coordinate descent from the least-squares start.
  Eigen::MatrixXd G = X.transpose() * X;
  Eigen::VectorXd b = G.ldlt().solve(X.transpose() * y);
  if (!b.allFinite()) b.setZero();
  Eigen::VectorXd r = y - X * b;
  for (int sweep = 0; sweep < 200000; ++sweep) {
    double change = 0, scale = 0;
    for (Eigen::Index j = 0; j < P; ++j) {
      const double a = G(j, j);
      if (a <= 0) continue;
      const double z = X.col(j).dot(r) + a * b[j];
      double nb;
      if (free[j]) {
        nb = z / a;
      } else {
        const double thr = 0.5 * lambda;
        nb = z > thr ? (z - thr) / a : (z < -thr ? (z + thr) / a : 0.0);
      }
      if (nb != b[j]) {
        r -= (nb - b[j]) * X.col(j);
        change = std::max(change, std::abs(nb - b[j]));
        b[j] = nb;
      }
      scale = std::max(scale, std::abs(b[j]));
    }
    if (change <= 1e-14 * std::max(1.0, scale)) break;
  }
  return b;
}

}  // namespace

double path_mse(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.empty()) throw std::invalid_argument("path length mismatch");
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s / a.size();
}

ModelSpec fit_timeseries_price(const SigStream& stream, const std::vector<double>& observed, int n, Penalty penalty,
                               double lambda, const CorrelationSpec& rho) {
  if (observed.size() != stream.size()) throw std::invalid_argument("observed series not aligned with the grid");
  if (lambda < 0) throw std::invalid_argument("negative penalty");
  const int d = stream.alphabet() - 1;
  ModelSpec spec;
  spec.d = d;
  spec.n = n;
  spec.rho = rho;
  spec.s0 = observed[0];
  spec.basis = Basis::martingale;
  const auto words = model_words(d, n, Basis::martingale);
  Eigen::MatrixXd X = tilde_design(stream, words, rho, n);
  Eigen::VectorXd y(observed.size());
  for (std::size_t i = 0; i < observed.size(); ++i) y[i] = observed[i] - spec.s0;
  Eigen::VectorXd b = penalized_ls(X, y, penalty, lambda, std::vector<bool>(words.size(), false));
  for (std::size_t w = 0; w < words.size(); ++w) spec.ell[words[w]] = b[w];
  spec.validate();
  return spec;
}

std::vector<double> VolModel::eval(const SigStream& stream) const {
  std::vector<double> out(stream.size(), 0.0);
  for (std::size_t i = 0; i < stream.size(); ++i)
    for (const auto& [w, v] : ell) out[i] += v * stream.sigs[i].coeff(w);
  return out;
}

ModelSpec VolModel::to_price_model(double s0) const {
  ModelSpec spec;
  spec.d = d;
  spec.n = n + 1;
  spec.rho = rho;
  spec.s0 = s0;
  spec.basis = Basis::martingale;
  spec.ell = ell;
  spec.validate();
  return spec;
}

VolModel fit_timeseries_vol(const SigStream& stream, const std::vector<double>& spot_vol, int n, Penalty penalty,
                            double lambda, const CorrelationSpec& rho) {
  if (spot_vol.size() != stream.size()) throw std::invalid_argument("spot vol series not aligned with the grid");
  for (double v : spot_vol)
    if (v < 0 || !std::isfinite(v)) throw std::invalid_argument("negative spot volatility");
  if (stream.N < n) throw std::invalid_argument("stream level below model order");
  const int d = stream.alphabet() - 1;
  const auto words = all_words(d + 1, n);
  Eigen::MatrixXd X(stream.size(), words.size());
  for (std::size_t w = 0; w < words.size(); ++w)
    for (std::size_t i = 0; i < stream.size(); ++i) X(i, w) = stream.sigs[i].coeff(words[w]);
  Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(spot_vol.data(), spot_vol.size());
  std::vector<bool> free(words.size(), false);
  free[0] = true;
  Eigen::VectorXd b = penalized_ls(X, y, penalty, lambda, free);
  VolModel vm;
  vm.d = d;
  vm.n = n;
  vm.rho = rho;
  for (std::size_t w = 0; w < words.size(); ++w) vm.ell[words[w]] = b[w];
  return vm;
}

// ------------------------------------------------------------ option fits

namespace {

struct Slice {
  double T = 0;
  Eigen::VectorXd base;
  Eigen::MatrixXd cols;
  std::vector<std::size_t> quote_ids;  // sorted by strike
  std::vector<double> K;
  Eigen::VectorXd col_mean;
};

// Quotes priced by S = base + cols * theta per maturity slice.
struct OptionProblem {
  double s0 = 1;
  std::vector<Slice> slices;
  std::vector<double> target;
  std::vector<double> gamma;
  std::size_t P = 0;

  std::size_t n_quotes() const { return target.size(); }

  // Model prices per quote, and optionally the Jacobian dC/dtheta (quotes x P).
  void eval(const Eigen::VectorXd& theta, Eigen::VectorXd& prices, Eigen::MatrixXd* jac) const {
    prices.resize(n_quotes());
    if (jac) jac->setZero(n_quotes(), P);
    const auto& kt = kernels::active();
    for (const Slice& sl : slices) {
      const std::size_t N = sl.base.size();
      Eigen::VectorXd S = sl.base;
      for (std::size_t p = 0; p < P; ++p)
        if (theta[p] != 0.0) kt.axpy(theta[p], sl.cols.col(p).data(), S.data(), N);
      for (std::size_t q = 0; q < sl.K.size(); ++q) {
        const double K = sl.K[q];
        double sum, sumsq;
        if (K < s0) {
          kt.hinge_sums(S.data(), N, K, -1.0, &sum, &sumsq);
          prices[sl.quote_ids[q]] = sum / N + s0 - K;
        } else {
          kt.hinge_sums(S.data(), N, K, 1.0, &sum, &sumsq);
          prices[sl.quote_ids[q]] = sum / N;
        }
      }
      if (!jac) continue;
      const std::size_t nb = sl.K.size() + 1;
      std::vector<int> bucket(N);
      for (std::size_t i = 0; i < N; ++i)
        bucket[i] = static_cast<int>(std::lower_bound(sl.K.begin(), sl.K.end(), S[i]) - sl.K.begin());
      Eigen::MatrixXd bsum = Eigen::MatrixXd::Zero(nb, P);
      for (std::size_t p = 0; p < P; ++p) {
        const double* c = sl.cols.col(p).data();
        for (std::size_t i = 0; i < N; ++i) bsum(bucket[i], p) += c[i];
      }
      // Samples in bucket b lie above strikes 0..b-1.
      Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(P);
      for (std::size_t q = sl.K.size(); q-- > 0;) {
        acc += bsum.row(q + 1);
        Eigen::RowVectorXd g = acc / static_cast<double>(N);
        if (sl.K[q] < s0) g -= sl.col_mean.transpose();
        jac->row(sl.quote_ids[q]) = g;
      }
    }
  }
};

// Loss sum_i W_i |e_i|^2 for p == 2, else (sum_i (W_i e_i^2)^(p/2))^(1/p).
struct Loss {
  const OptionProblem* prob = nullptr;
  std::vector<double> weight;
  double p = 2.0;
  // Extra squared residual block: sqrt(path_w) * (A theta - y).
  const Eigen::MatrixXd* A = nullptr;
  const Eigen::VectorXd* y = nullptr;
  double option_w = 1.0;
  double path_w = 0.0;

  double value(const Eigen::VectorXd& th, Eigen::VectorXd* grad) const {
    Eigen::VectorXd prices;
    Eigen::MatrixXd J;
    const bool need_opt = option_w > 0;
    if (need_opt) prob->eval(th, prices, grad ? &J : nullptr);
    double L = 0;
    if (grad) grad->setZero(th.size());
    if (need_opt) {
      const std::size_t Q = prob->n_quotes();
      if (p == 2.0) {
        for (std::size_t i = 0; i < Q; ++i) {
          const double e = prices[i] - prob->target[i];
          L += weight[i] * e * e;
          if (grad) *grad += (2.0 * weight[i] * e) * J.row(i).transpose();
        }
        L *= option_w;
        if (grad) *grad *= option_w;
      } else {
        std::vector<double> a(Q);
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < Q; ++i) {
          const double e = std::abs(prices[i] - prob->target[i]);
          // Weights act on the squared error, so they enter as W^(p/2); placed
          // outside the power they would fade to 1 under the p-th root.
          a[i] = e > 0 ? 0.5 * p * std::log(weight[i]) + p * std::log(e) : -std::numeric_limits<double>::infinity();
          mx = std::max(mx, a[i]);
        }
        if (!std::isfinite(mx)) return 0.0;
        double s = 0;
        for (double v : a) s += std::exp(v - mx);
        L = std::exp((mx + std::log(s)) / p);
        if (grad)
          for (std::size_t i = 0; i < Q; ++i) {
            const double e = prices[i] - prob->target[i];
            if (e == 0) continue;
            const double w = std::exp(a[i] - mx) / s;
            *grad += (L * w / e) * J.row(i).transpose();
          }
        L *= option_w;
        if (grad) *grad *= option_w;
      }
    }
    if (A && path_w > 0) {
      Eigen::VectorXd r = (*A) * th - *y;
      L += path_w * r.squaredNorm();
      if (grad) *grad += 2.0 * path_w * (A->transpose() * r);
    }
    return L;
  }

  // Stacked residuals whose squared norm is value() (p == 2 only).
  void residuals(const Eigen::VectorXd& th, Eigen::VectorXd& r, Eigen::MatrixXd& J) const {
    std::size_t Q = option_w > 0 ? prob->n_quotes() : 0;
    std::size_t M = (A && path_w > 0) ? A->rows() : 0;
    r.resize(Q + M);
    J.resize(Q + M, th.size());
    if (Q) {
      Eigen::VectorXd prices;
      Eigen::MatrixXd Jp;
      prob->eval(th, prices, &Jp);
      for (std::size_t i = 0; i < Q; ++i) {
        const double s = std::sqrt(option_w * weight[i]);
        r[i] = s * (prices[i] - prob->target[i]);
        J.row(i) = s * Jp.row(i);
      }
    }
    if (M) {
      const double s = std::sqrt(path_w);
      r.tail(M) = s * ((*A) * th - *y);
      J.bottomRows(M) = s * (*A);
    }
  }
};

// Adam-type first-order descent in scaled coordinates; a step that raises
// the loss is rejected and retried at half the rate.
Eigen::VectorXd first_order(const Loss& loss, Eigen::VectorXd th, const Eigen::VectorXd& scale, int iters,
                            double step, std::vector<double>& trace) {
  const Eigen::Index P = th.size();
  Eigen::VectorXd m = Eigen::VectorXd::Zero(P), v = Eigen::VectorXd::Zero(P), g(P);
  double L = loss.value(th, &g);
  trace.push_back(L);
  double lr = step;
  const double b1 = 0.9, b2 = 0.999, eps = 1e-12;
  int t = 0;
  for (int it = 0; it < iters; ++it) {
    Eigen::VectorXd gu = g.cwiseQuotient(scale);
    ++t;
    m = b1 * m + (1 - b1) * gu;
    v = b2 * v + (1 - b2) * gu.cwiseProduct(gu);
    Eigen::VectorXd mh = m / (1 - std::pow(b1, t));
    Eigen::VectorXd vh = v / (1 - std::pow(b2, t));
    Eigen::VectorXd dir = mh.cwiseQuotient((vh.array().sqrt() + eps).matrix());
    bool accepted = false;
    double rate = lr;
    for (int h = 0; h < 30; ++h) {
      Eigen::VectorXd cand = th - rate * dir.cwiseQuotient(scale);
      Eigen::VectorXd gc(P);
      double Lc = loss.value(cand, &gc);
      if (std::isfinite(Lc) && Lc <= L) {
        th = cand;
        L = Lc;
        g = gc;
        accepted = true;
        break;
      }
      rate *= 0.5;
      // Momentum points uphill after a rejection: fall back to the raw gradient.
      dir = gu.cwiseQuotient((vh.array().sqrt() + eps).matrix());
    }
    trace.push_back(L);
    if (!accepted) break;
    lr = std::min(step, rate * 1.25);
  }
  return th;
}

// Levenberg-Marquardt on the stacked residuals.
Eigen::VectorXd gauss_newton(const Loss& loss, Eigen::VectorXd th, int iters, std::vector<double>& trace) {
  Eigen::VectorXd r;
  Eigen::MatrixXd J;
  loss.residuals(th, r, J);
  double L = r.squaredNorm();
  double mu = 1e-3;
  for (int it = 0; it < iters; ++it) {
    Eigen::MatrixXd H = J.transpose() * J;
    Eigen::VectorXd g = J.transpose() * r;
    bool accepted = false;
    for (int tries = 0; tries < 20; ++tries) {
      Eigen::MatrixXd Hd = H;
      for (Eigen::Index j = 0; j < H.rows(); ++j) Hd(j, j) += mu * std::max(H(j, j), 1e-300);
      Eigen::VectorXd delta = -Hd.ldlt().solve(g);
      if (!delta.allFinite()) {
        mu *= 4;
        continue;
      }
      Eigen::VectorXd cand = th + delta;
      Eigen::VectorXd rc;
      Eigen::MatrixXd Jc;
      loss.residuals(cand, rc, Jc);
      double Lc = rc.squaredNorm();
      if (std::isfinite(Lc) && Lc <= L) {
        const double gain = L - Lc;
        th = cand;
        r = rc;
        J = Jc;
        L = Lc;
        mu = std::max(mu / 3, 1e-12);
        accepted = true;
        trace.push_back(L);
        if (gain <= 1e-14 * L) it = iters;
        break;
      }
      mu *= 4;
    }
    if (!accepted) break;
  }
  return th;
}

std::vector<std::size_t> word_columns(const FeatureMatrix& fm, const std::vector<Word>& words) {
  std::vector<std::size_t> cols;
  for (const Word& w : words) {
    auto it = std::find(fm.words.begin(), fm.words.end(), w);
    if (it == fm.words.end()) throw std::invalid_argument("features lack word " + w.str());
    cols.push_back(it - fm.words.begin());
  }
  return cols;
}

Slice make_slice(const QuoteSurface& surface, double T, const std::vector<std::size_t>& ids) {
  Slice sl;
  sl.T = T;
  sl.quote_ids = ids;
  std::sort(sl.quote_ids.begin(), sl.quote_ids.end(),
            [&](std::size_t a, std::size_t b) { return surface.quotes[a].K < surface.quotes[b].K; });
  for (auto id : sl.quote_ids) sl.K.push_back(surface.quotes[id].K);
  return sl;
}

void finish_slice(Slice& sl) { sl.col_mean = sl.cols.colwise().mean().transpose(); }

std::vector<std::size_t> quotes_at(const QuoteSurface& s, double T) {
  std::vector<std::size_t> ids;
  for (std::size_t i = 0; i < s.quotes.size(); ++i)
    if (std::abs(s.quotes[i].T - T) <= 1e-12) ids.push_back(i);
  return ids;
}

QuoteSurface checked(const QuoteSurface& surface) {
  QuoteSurface s = surface;
  s.complete();
  return s;
}

// Builds the problem over `surface` quotes with the given slices; gamma = 1/vega^2.
OptionProblem make_problem(const QuoteSurface& s, std::vector<Slice> slices, std::size_t P) {
  OptionProblem prob;
  prob.s0 = s.s0;
  prob.P = P;
  prob.slices = std::move(slices);
  prob.target.assign(s.quotes.size(), 0.0);
  prob.gamma.assign(s.quotes.size(), 0.0);
  for (std::size_t i = 0; i < s.quotes.size(); ++i) {
    prob.target[i] = s.quotes[i].mid;
    const double v = std::max(s.quotes[i].vega, 1e-4);
    prob.gamma[i] = 1.0 / (v * v);
  }
  return prob;
}

double model_iv(double price, double s0, double K, double T) {
  const double lo = std::max(s0 - K, 0.0);
  return implied_vol(std::clamp(price, lo, s0), s0, K, T);
}

struct FitResult {
  Eigen::VectorXd theta;
  std::vector<double> trace;
  std::string optimizer;
};

// Two-stage fit of a problem. Subset `active` of quotes carries the loss.
FitResult fit_problem(const OptionProblem& prob, const QuoteSurface& s, const SurfaceOptions& opts,
                      Eigen::VectorXd theta0, bool random_init) {
  const std::size_t P = prob.P;
  Eigen::VectorXd scale(P);
  for (std::size_t p = 0; p < P; ++p) {
    double ss = 0;
    std::size_t cnt = 0;
    for (const Slice& sl : prob.slices) {
      ss += sl.cols.col(p).squaredNorm();
      cnt += sl.cols.rows();
    }
    scale[p] = cnt ? std::sqrt(ss / cnt) : 1.0;
    if (!(scale[p] > 0)) scale[p] = 1.0;
  }
  FitResult fr;
  if (random_init) {
    std::mt19937_64 rng(sub_seed(opts.seed, 0xCA11));
    std::normal_distribution<double> nd;
    Eigen::VectorXd th(P);
    for (std::size_t p = 0; p < P; ++p) th[p] = 1e-3 * nd(rng) / scale[p];
    // Column 0 is the plain driver term; start it at the ATM normal vol so the
    // doubling below scales a sensible shape instead of pure noise.
    std::vector<double> ivs;
    for (const auto& q : s.quotes) ivs.push_back(q.iv);
    std::nth_element(ivs.begin(), ivs.begin() + ivs.size() / 2, ivs.end());
    th[0] += 0.5 * s.s0 * ivs[ivs.size() / 2];
    int doublings = 0;
    Eigen::VectorXd prices;
    for (; doublings < 50; ++doublings) {
      prob.eval(th, prices, nullptr);
      bool ok = true;
      for (std::size_t i = 0; i < prob.n_quotes(); ++i)
        if (prices[i] < prob.target[i]) ok = false;
      if (ok) break;
      th *= 2.0;
    }
    if (doublings == 50) {
      for (std::size_t p = 0; p < P; ++p) th[p] = 1e-3 * nd(rng) / scale[p];
      fr.optimizer = "unconditioned start; ";
    }
    theta0 = th;
  }
  Loss loss;
  loss.prob = &prob;
  loss.weight = prob.gamma;
  loss.p = 2.0;
  Eigen::VectorXd th = first_order(loss, theta0, scale, opts.iterations, opts.step, fr.trace);
  fr.optimizer += "momentum";
  if (opts.gauss_newton_polish) {
    th = gauss_newton(loss, th, 200, fr.trace);
    fr.optimizer += "+gauss-newton";
  }
  if (opts.alpha != 0.0 || opts.p != 2.0) {
    // Stage 2: weights from stage-1 IV errors in bps.
    Eigen::VectorXd prices;
    prob.eval(th, prices, nullptr);
    Loss l2;
    l2.prob = &prob;
    l2.p = opts.p;
    l2.weight.resize(prob.n_quotes());
    for (std::size_t i = 0; i < prob.n_quotes(); ++i) {
      const auto& q = s.quotes[i];
      const double w = 1e4 * std::abs(model_iv(prices[i], s.s0, q.K, q.T) - q.iv);
      l2.weight[i] = prob.gamma[i] + opts.alpha * w;
    }
    std::vector<double> trace2;
    th = first_order(l2, th, scale, opts.stage2_iterations, opts.step, trace2);
    if (opts.p == 2.0 && opts.gauss_newton_polish) th = gauss_newton(l2, th, 200, trace2);
    fr.optimizer += "; stage2 p=" + std::to_string(opts.p) + " alpha=" + std::to_string(opts.alpha);
    fr.trace.insert(fr.trace.end(), trace2.begin(), trace2.end());
  }
  fr.theta = th;
  return fr;
}

std::vector<Word> option_words(const FeatureMatrix& features, int n) {
  if (features.n < n) throw std::invalid_argument("features below model order");
  return model_words(features.d, n, Basis::martingale);
}

ModelSpec base_spec(const FeatureMatrix& features, int n, double s0, const CorrelationSpec& rho) {
  ModelSpec spec;
  spec.d = features.d;
  spec.n = n;
  spec.rho = rho;
  spec.s0 = s0;
  spec.basis = Basis::martingale;
  return spec;
}

}  // namespace

CalibReport evaluate_surface(const ModelSpec& spec, const QuoteSurface& surface, const FeatureMatrix& features) {
  QuoteSurface s = checked(surface);
  CalibReport rep;
  rep.spec = spec;
  rep.quotes = s.quotes;
  rep.model_price.resize(s.quotes.size());
  rep.model_iv.resize(s.quotes.size());
  rep.abs_err_bps.resize(s.quotes.size());
  for (double T : s.maturities()) {
    Eigen::VectorXd S = terminal_samples(spec, features, T);
    for (auto id : quotes_at(s, T)) {
      const auto& q = s.quotes[id];
      double price;
      if (q.K < s.s0)
        price = payoff_stats(S, Payoff::put, q.K).price + s.s0 - q.K;
      else
        price = payoff_stats(S, Payoff::call, q.K).price;
      rep.model_price[id] = price;
      rep.model_iv[id] = model_iv(price, s.s0, q.K, q.T);
      rep.abs_err_bps[id] = 1e4 * std::abs(rep.model_iv[id] - q.iv);
    }
  }
  return rep;
}

CalibReport calibrate_surface(const QuoteSurface& surface, const FeatureMatrix& features, int n,
                              const SurfaceOptions& opts) {
  auto t0 = std::chrono::steady_clock::now();
  QuoteSurface s = checked(surface);
  if (opts.p < 1) throw std::invalid_argument("loss exponent must be at least 1");
  const auto words = option_words(features, n);
  const auto cols = word_columns(features, words);
  std::vector<Slice> slices;
  for (double T : s.maturities()) {
    Slice sl = make_slice(s, T, quotes_at(s, T));
    const std::size_t k = features.maturity_index(T);
    sl.base = Eigen::VectorXd::Constant(features.n_mc(), s.s0);
    sl.cols.resize(features.n_mc(), cols.size());
    for (std::size_t c = 0; c < cols.size(); ++c) sl.cols.col(c) = features.blocks[k].col(cols[c]);
    finish_slice(sl);
    slices.push_back(std::move(sl));
  }
  OptionProblem prob = make_problem(s, std::move(slices), words.size());
  FitResult fr = fit_problem(prob, s, opts, Eigen::VectorXd::Zero(words.size()), true);
  ModelSpec spec = base_spec(features, n, s.s0, features.rho);
  for (std::size_t w = 0; w < words.size(); ++w) spec.ell[words[w]] = fr.theta[w];
  CalibReport rep = evaluate_surface(spec, s, features);
  rep.loss_trace = fr.trace;
  rep.optimizer = fr.optimizer;
  rep.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

CalibReport calibrate_slicewise(const QuoteSurface& surface, const FeatureMatrix& features, int n,
                                const SurfaceOptions& opts) {
  auto t0 = std::chrono::steady_clock::now();
  QuoteSurface s = checked(surface);
  const auto mats = s.maturities();
  const auto words = option_words(features, n);
  const auto cols = word_columns(features, words);
  ModelSpec spec = base_spec(features, n, s.s0, features.rho);
  std::vector<double> trace;
  std::string optimizer;
  for (std::size_t k = 0; k < mats.size(); ++k) {
    const double T = mats[k];
    const std::size_t fk = features.maturity_index(T);
    QuoteSurface sub;
    sub.s0 = s.s0;
    for (auto id : quotes_at(s, T)) sub.quotes.push_back(s.quotes[id]);
    std::vector<std::size_t> ids(sub.quotes.size());
    std::iota(ids.begin(), ids.end(), 0);
    Slice sl = make_slice(sub, T, ids);
    sl.cols.resize(features.n_mc(), cols.size());
    if (k == 0) {
      sl.base = Eigen::VectorXd::Constant(features.n_mc(), s.s0);
      for (std::size_t c = 0; c < cols.size(); ++c) sl.cols.col(c) = features.blocks[fk].col(cols[c]);
    } else {
      sl.base = terminal_samples(spec, features, T);
      const std::size_t fj = features.maturity_index(mats[k - 1]);
      for (std::size_t c = 0; c < cols.size(); ++c)
        sl.cols.col(c) = features.blocks[fk].col(cols[c]) - features.blocks[fj].col(cols[c]);
    }
    finish_slice(sl);
    std::vector<Slice> slices;
    slices.push_back(std::move(sl));
    OptionProblem prob = make_problem(sub, std::move(slices), words.size());
    FitResult fr = fit_problem(prob, sub, opts, Eigen::VectorXd::Zero(words.size()), k == 0);
    if (k == 0) {
      for (std::size_t w = 0; w < words.size(); ++w) spec.ell[words[w]] = fr.theta[w];
    } else {
      Correction c;
      c.T = mats[k - 1];
      for (std::size_t w = 0; w < words.size(); ++w) c.ell[words[w]] = fr.theta[w];
      spec.corrections.push_back(c);
    }
    trace.insert(trace.end(), fr.trace.begin(), fr.trace.end());
    if (k == 0) optimizer = fr.optimizer;
  }
  CalibReport rep = evaluate_surface(spec, s, features);
  rep.loss_trace = trace;
  rep.optimizer = optimizer + " per slice";
  rep.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

CalibReport joint_calibrate(const SigStream& stream, const std::vector<double>& observed, const QuoteSurface& surface,
                            const FeatureMatrix& features, double lambda_mix, int n, const SurfaceOptions& opts) {
  if (!(lambda_mix >= 0 && lambda_mix <= 1)) throw std::invalid_argument("mixing weight must lie in [0, 1]");
  auto t0 = std::chrono::steady_clock::now();
  QuoteSurface s = checked(surface);
  const CorrelationSpec rho = features.rho;
  if (lambda_mix == 1.0) {
    CalibReport rep = calibrate_surface(s, features, n, opts);
    rep.path_mse = path_mse(eval_model(rep.spec, stream), observed);
    return rep;
  }
  ModelSpec ols = fit_timeseries_price(stream, observed, n, Penalty::l2, 0.0, rho);
  if (std::abs(ols.s0 - s.s0) > 1e-12) throw std::invalid_argument("path and surface disagree on the spot");
  const auto words = option_words(features, n);
  if (lambda_mix == 0.0) {
    CalibReport rep = evaluate_surface(ols, s, features);
    rep.path_mse = path_mse(eval_model(ols, stream), observed);
    rep.optimizer = "least squares";
    rep.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
  }
  const auto cols = word_columns(features, words);
  std::vector<Slice> slices;
  for (double T : s.maturities()) {
    Slice sl = make_slice(s, T, quotes_at(s, T));
    const std::size_t k = features.maturity_index(T);
    sl.base = Eigen::VectorXd::Constant(features.n_mc(), s.s0);
    sl.cols.resize(features.n_mc(), cols.size());
    for (std::size_t c = 0; c < cols.size(); ++c) sl.cols.col(c) = features.blocks[k].col(cols[c]);
    finish_slice(sl);
    slices.push_back(std::move(sl));
  }
  OptionProblem prob = make_problem(s, std::move(slices), words.size());
  Eigen::MatrixXd A = tilde_design(stream, words, rho, n);
  Eigen::VectorXd y(observed.size());
  for (std::size_t i = 0; i < observed.size(); ++i) y[i] = observed[i] - s.s0;
  Loss loss;
  loss.prob = &prob;
  loss.weight = prob.gamma;
  loss.option_w = lambda_mix;
  loss.path_w = 1.0 - lambda_mix;
  loss.A = &A;
  loss.y = &y;
  Eigen::VectorXd th(words.size());
  for (std::size_t w = 0; w < words.size(); ++w) th[w] = ols.ell.at(words[w]);
  Eigen::VectorXd scale(words.size());
  for (std::size_t p = 0; p < words.size(); ++p) {
    double sc = std::sqrt(prob.slices.back().cols.col(p).squaredNorm() / features.n_mc());
    scale[p] = sc > 0 ? sc : 1.0;
  }
  std::vector<double> trace;
  th = first_order(loss, th, scale, opts.iterations, opts.step, trace);
  std::string optimizer = "momentum";
  if (opts.gauss_newton_polish) {
    th = gauss_newton(loss, th, 200, trace);
    optimizer += "+gauss-newton";
  }
  ModelSpec spec = base_spec(features, n, s.s0, rho);
  for (std::size_t w = 0; w < words.size(); ++w) spec.ell[words[w]] = th[w];
  CalibReport rep = evaluate_surface(spec, s, features);
  rep.loss_trace = trace;
  rep.optimizer = optimizer;
  rep.path_mse = path_mse(eval_model(spec, stream), observed);
  rep.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

std::vector<SkewPoint> atm_skew(const QuoteSurface& surface) {
  std::vector<SkewPoint> out;
  for (double T : surface.maturities()) {
    const Quote* lo = nullptr;
    const Quote* hi = nullptr;
    for (const auto& q : surface.quotes) {
      if (std::abs(q.T - T) > 1e-12) continue;
      if (q.K < surface.s0 && (!lo || q.K > lo->K)) lo = &q;
      if (q.K > surface.s0 && (!hi || q.K < hi->K)) hi = &q;
    }
    if (!lo || !hi) throw std::invalid_argument("no strikes bracketing the spot at T=" + std::to_string(T));
    out.push_back({T, std::abs((hi->iv - lo->iv) / (hi->K - lo->K))});
  }
  return out;
}

std::vector<SkewPoint> atm_skew(const CalibReport& report, double s0) {
  QuoteSurface s;
  s.s0 = s0;
  s.quotes = report.quotes;
  for (std::size_t i = 0; i < s.quotes.size(); ++i) s.quotes[i].iv = report.model_iv[i];
  return atm_skew(s);
}

}  // namespace sigcal
