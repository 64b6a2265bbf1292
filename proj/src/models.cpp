#include "sigcal/models.hpp"

#include <cmath>
#include <stdexcept>

namespace sigcal {

std::vector<Word> model_words(int d, int n, Basis basis) {
  std::vector<Word> out;
  for (const Word& w : all_words(d + 1, basis == Basis::plain ? n : n - 1))
    if (basis == Basis::martingale || !w.empty()) out.push_back(w);
  return out;
}

namespace {

void check_words(const WordMap& ell, int d, int max_len, bool allow_empty, const char* what) {
  for (const auto& [w, v] : ell) {
    if (static_cast<int>(w.size()) > max_len || w.max_letter() > d)
      throw std::invalid_argument(std::string(what) + ": word " + w.str() + " outside the model's range");
    if (w.empty() && !allow_empty) throw std::invalid_argument(std::string(what) + ": empty word not allowed");
    if (!std::isfinite(v)) throw std::invalid_argument(std::string(what) + ": non-finite coefficient");
  }
}

}  // namespace

void ModelSpec::validate() const {
  if (d < 1) throw std::invalid_argument("model needs at least one driver");
  if (n < 1) throw std::invalid_argument("model order must be at least 1");
  rho.validate();
  if (rho.d() != d) throw std::invalid_argument("correlation dimension differs from d");
  if (basis == Basis::martingale)
    check_words(ell, d, n - 1, true, "ell");
  else
    check_words(ell, d, n, false, "ell");
  if (!corrections.empty() && basis != Basis::martingale)
    throw std::invalid_argument("corrections require the martingale basis");
  for (std::size_t j = 0; j < corrections.size(); ++j) {
    if (j > 0 && !(corrections[j].T > corrections[j - 1].T))
      throw std::invalid_argument("correction maturities must be strictly increasing");
    check_words(corrections[j].ell, d, n - 1, true, "corrections");
  }
}

namespace {

nlohmann::json words_to_json(const WordMap& m) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [w, v] : m) j[w.str()] = v;
  return j;
}

WordMap words_from_json(const nlohmann::json& j) {
  WordMap m;
  for (auto it = j.begin(); it != j.end(); ++it) m[Word::parse(it.key())] = it.value().get<double>();
  return m;
}

}  // namespace

nlohmann::json ModelSpec::to_json() const {
  nlohmann::json j;
  j["d"] = d;
  j["n"] = n;
  nlohmann::json r = nlohmann::json::array();
  for (int a = 0; a < rho.d(); ++a) {
    nlohmann::json row = nlohmann::json::array();
    for (int b = 0; b < rho.d(); ++b) row.push_back(rho.rho(a, b));
    r.push_back(row);
  }
  j["rho"] = r;
  j["s0"] = s0;
  j["basis"] = basis == Basis::plain ? "plain" : "martingale";
  j["ell"] = words_to_json(ell);
  nlohmann::json c = nlohmann::json::array();
  for (const auto& corr : corrections) c.push_back({{"T", corr.T}, {"ell", words_to_json(corr.ell)}});
  j["corrections"] = c;
  return j;
}

ModelSpec ModelSpec::from_json(const nlohmann::json& j) {
  ModelSpec s;
  s.d = j.at("d").get<int>();
  s.n = j.at("n").get<int>();
  if (j.contains("rho")) {
    const auto& r = j.at("rho");
    Eigen::MatrixXd m(r.size(), r.size());
    for (std::size_t a = 0; a < r.size(); ++a)
      for (std::size_t b = 0; b < r.size(); ++b) m(a, b) = r.at(a).at(b).get<double>();
    s.rho = CorrelationSpec(m);
  } else {
    s.rho = CorrelationSpec::identity(s.d);
  }
  s.s0 = j.at("s0").get<double>();
  std::string b = j.value("basis", "martingale");
  if (b == "plain")
    s.basis = Basis::plain;
  else if (b == "martingale")
    s.basis = Basis::martingale;
  else
    throw std::invalid_argument("unknown basis " + b);
  s.ell = words_from_json(j.at("ell"));
  if (j.contains("corrections"))
    for (const auto& c : j.at("corrections")) s.corrections.push_back({c.at("T").get<double>(), words_from_json(c.at("ell"))});
  s.validate();
  return s;
}

TensorSeries tilde_basis(const Word& I, int k, const CorrelationSpec& rho, int N) {
  const int d = rho.d();
  if (k < 1 || k > d) throw std::invalid_argument("tilde basis needs a driver letter in 1..d");
  if (static_cast<int>(I.size()) > N - 1) throw std::invalid_argument("word too long for level");
  TensorSeries out(d + 1, N);
  out.coeff_ref(I.append(k)) = 1.0;
  if (!I.empty() && I.back() != 0) out.coeff_ref(I.prefix().append(0)) -= 0.5 * rho.rho(I.back() - 1, k - 1);
  return out;
}

TensorSeries model_functional(const ModelSpec& spec, const WordMap& ell) {
  TensorSeries out(spec.d + 1, spec.n);
  for (const auto& [w, v] : ell) {
    if (v == 0.0) continue;
    if (spec.basis == Basis::plain) {
      out.coeff_ref(w) += v;
    } else {
      out.coeff_ref(w.append(1)) += v;
      if (!w.empty() && w.back() != 0) out.coeff_ref(w.prefix().append(0)) -= 0.5 * v * spec.rho.rho(w.back() - 1, 0);
    }
  }
  return out;
}

namespace {

std::size_t grid_position(const std::vector<double>& times, double T) {
  const double tol = 1e-9 * std::max(1.0, std::abs(T));
  for (std::size_t i = 0; i < times.size(); ++i)
    if (std::abs(times[i] - T) <= tol) return i;
  throw std::invalid_argument("correction maturity " + std::to_string(T) + " is not a grid point");
}

}  // namespace

std::vector<double> eval_model(const ModelSpec& spec, const SigStream& stream) {
  spec.validate();
  if (stream.N < spec.n) throw std::invalid_argument("signature stream level below model order");
  if (stream.alphabet() != spec.d + 1) throw std::invalid_argument("stream alphabet differs from model");
  TensorSeries L = model_functional(spec);
  std::vector<double> out(stream.size());
  for (std::size_t i = 0; i < stream.size(); ++i) out[i] = spec.s0 + inner(L, stream.sigs[i]);
  for (const auto& c : spec.corrections) {
    std::size_t pos = grid_position(stream.times, c.T);
    TensorSeries Lc = model_functional(spec, c.ell);
    double base = inner(Lc, stream.sigs[pos]);
    for (std::size_t i = pos; i < stream.size(); ++i) out[i] += inner(Lc, stream.sigs[i]) - base;
  }
  return out;
}

ModelSpec to_plain(const ModelSpec& spec) {
  spec.validate();
  if (spec.basis == Basis::plain) return spec;
  if (!spec.corrections.empty()) throw std::invalid_argument("to_plain does not convert corrections");
  TensorSeries L = model_functional(spec);
  ModelSpec out = spec;
  out.basis = Basis::plain;
  out.ell.clear();
  for (int k = 1; k <= spec.n; ++k) {
    auto lv = L.level(k);
    for (std::size_t i = 0; i < lv.size(); ++i)
      if (lv[i] != 0.0) out.ell[index_to_word(i, k, spec.d + 1)] = lv[i];
  }
  return out;
}

TensorSeries model_sig_lift(const ModelSpec& spec, const Word& J) {
  spec.validate();
  if (!spec.corrections.empty()) throw std::invalid_argument("lifts are defined for models without corrections");
  const int A = spec.d + 1;
  const int N = static_cast<int>(J.size()) * spec.n;
  TensorSeries L = model_functional(spec).with_depth(std::max(N, spec.n));
  L = L.with_depth(N);
  TensorSeries time = TensorSeries::basis(Word{0}, A, N);
  TensorSeries acc = TensorSeries::unit(A, N);
  for (std::size_t i = 0; i < J.size(); ++i) {
    if (J[i] == 0)
      acc = half_shuffle(acc, time, N);
    else if (J[i] == 1)
      acc = half_shuffle(acc, L, N);
    else
      throw std::invalid_argument("lift words use letters 0 and 1 only");
  }
  return acc;
}

double model_variance(const ModelSpec& spec, double t) {
  spec.validate();
  if (spec.basis != Basis::martingale) throw std::invalid_argument("model_variance expects the martingale basis");
  if (!spec.corrections.empty()) throw std::invalid_argument("model_variance does not support corrections");
  const int N = 2 * spec.n;
  TensorSeries L = model_functional(spec).with_depth(N);
  return inner(shuffle(L, L, N), expected_sig(N, t, spec.rho));
}

ModelSpec sabr_taylor_coefficients(double s0, double v0, double alpha) {
  ModelSpec s;
  s.d = 2;
  s.n = 2;
  s.rho = CorrelationSpec::identity(2);
  s.s0 = s0;
  s.basis = Basis::martingale;
  const double y1 = s0, y2 = v0;
  s.ell[Word{}] = y1 * y2;
  s.ell[Word{0}] = -0.5 * y1 * y2 * y2 * y2 - 0.5 * alpha * alpha * y1 * y2;
  s.ell[Word{1}] = y1 * y2 * y2;
  s.ell[Word{2}] = alpha * y1 * y2;
  return s;
}

}  // namespace sigcal
