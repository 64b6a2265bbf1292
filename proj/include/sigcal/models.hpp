#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "sigcal/expected_signature.hpp"
#include "sigcal/signature.hpp"
#include "sigcal/tensor_algebra.hpp"

namespace sigcal {

enum class Basis { plain, martingale };

using WordMap = std::map<Word, double>;

struct Correction {
  double T = 0;
  WordMap ell;
};

// S_t = s0 + sum_I ell_I <basis(I), sig_t>, plus corrections switched on at T_j.
// Plain basis: words 1 <= |I| <= n. Martingale basis: words |I| <= n - 1 paired
// with the tilde basis on driver letter 1.
struct ModelSpec {
  int d = 1;
  int n = 1;
  CorrelationSpec rho = CorrelationSpec::identity(1);
  double s0 = 1.0;
  Basis basis = Basis::martingale;
  WordMap ell;
  std::vector<Correction> corrections;

  void validate() const;
  // Signature level needed to evaluate the model.
  int level() const { return n; }

  nlohmann::json to_json() const;
  static ModelSpec from_json(const nlohmann::json& j);
};

// Words the model's coefficients range over, in graded order.
std::vector<Word> model_words(int d, int n, Basis basis);

TensorSeries tilde_basis(const Word& I, int k, const CorrelationSpec& rho, int N);

// sum_I ell_I basis(I) as a series of depth n (alphabet d + 1).
TensorSeries model_functional(const ModelSpec& spec, const WordMap& ell);
inline TensorSeries model_functional(const ModelSpec& spec) { return model_functional(spec, spec.ell); }

std::vector<double> eval_model(const ModelSpec& spec, const SigStream& stream);

ModelSpec to_plain(const ModelSpec& spec);

// Series L with <e_J, sig of (t, S_t)> = <L, sig_t>; J over {0, 1}.
TensorSeries model_sig_lift(const ModelSpec& spec, const Word& J);

double model_variance(const ModelSpec& spec, double t);

ModelSpec sabr_taylor_coefficients(double s0, double v0, double alpha);

}  // namespace sigcal
