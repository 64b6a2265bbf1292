#pragma once

// Words over the alphabet {0,...,d} and truncated tensor series.
//
// A series of depth N over an alphabet of A = d + 1 letters stores one dense
// array per level k = 0..N of length A^k. Words are encoded base-A with the
// most significant letter first, so the word (i_1,...,i_k) lives at index
// i_1 A^{k-1} + ... + i_k of level k. Letter 0 is reserved for time by
// convention but the algebra itself does not care.

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace sigcal {

class Word {
 public:
  Word() = default;
  Word(std::initializer_list<int> letters);
  explicit Word(std::vector<int> letters);

  static Word parse(std::string_view text);
  std::string str() const;

  std::size_t size() const { return letters_.size(); }
  bool empty() const { return letters_.empty(); }
  int operator[](std::size_t i) const { return letters_[i]; }
  int back() const { return letters_.back(); }
  const std::vector<int>& letters() const { return letters_; }

  // I' : the word with its last letter removed.
  Word prefix() const;
  Word append(int letter) const;
  Word concat(const Word& other) const;
  int max_letter() const;

  friend bool operator==(const Word&, const Word&) = default;
  // Graded order: shorter words first, then lexicographic.
  friend bool operator<(const Word& a, const Word& b);

 private:
  std::vector<int> letters_;
};

std::uint64_t ipow(std::uint64_t base, int exp);

// Number of words of length <= depth over `alphabet` letters.
std::size_t series_dimension(int alphabet, int depth);

std::uint64_t word_index(const Word& w, int alphabet);
Word index_to_word(std::uint64_t index, int level, int alphabet);

// All words of length <= depth in graded order.
std::vector<Word> all_words(int alphabet, int depth);

class TensorSeries {
 public:
  TensorSeries() = default;
  TensorSeries(int alphabet, int depth);

  static TensorSeries unit(int alphabet, int depth);
  static TensorSeries basis(const Word& w, int alphabet, int depth);

  int alphabet() const { return alphabet_; }
  int d() const { return alphabet_ - 1; }
  int depth() const { return depth_; }
  std::size_t dimension() const { return data_.size(); }

  std::span<double> level(int k);
  std::span<const double> level(int k) const;
  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  double coeff(const Word& w) const;
  double& coeff_ref(const Word& w);
  bool has_word(const Word& w) const;

  // Copy with levels above `depth` dropped or zero levels appended.
  TensorSeries with_depth(int depth) const;

  TensorSeries& operator+=(const TensorSeries& other);
  TensorSeries& operator-=(const TensorSeries& other);
  TensorSeries& operator*=(double s);
  friend TensorSeries operator+(TensorSeries a, const TensorSeries& b) { return a += b; }
  friend TensorSeries operator-(TensorSeries a, const TensorSeries& b) { return a -= b; }
  friend TensorSeries operator*(double s, TensorSeries a) { return a *= s; }
  friend TensorSeries operator*(TensorSeries a, double s) { return a *= s; }
  TensorSeries operator-() const;

  double max_abs_diff(const TensorSeries& other) const;

 private:
  void check_compatible(const TensorSeries& other) const;

  int alphabet_ = 1;
  int depth_ = 0;
  std::vector<std::size_t> offsets_;
  std::vector<double> data_;
};

// a ⊗ b truncated at level n.
TensorSeries concat(const TensorSeries& a, const TensorSeries& b, int n);

// Shuffle product, truncated at level n.
TensorSeries shuffle(const TensorSeries& a, const TensorSeries& b, int n);

// e_I ⧼ e_J = (e_I ⧢ e_J') ⊗ e_{j_m}; e_I ⧼ e_∅ = 0.
TensorSeries half_shuffle(const TensorSeries& a, const TensorSeries& b, int n);

// Quadratic-covariation bracket for time-extended correlated Brownian motion:
// e_I [⧢] e_J = rho_{i,j} (e_I' ⧢ e_J') ⊗ e_0 with i, j the (non-time) last
// letters. rho is indexed by letter - 1.
TensorSeries qv_bracket(const TensorSeries& a, const TensorSeries& b,
                        const Eigen::MatrixXd& rho, int n);

// exp_⊗(x) truncated at level n; x must live on level 1.
TensorSeries tensor_exp(const TensorSeries& x, int n);

// Pairing over the common levels.
double inner(const TensorSeries& a, const TensorSeries& b);

// In-place s <- s ⊗ exp(x) for a level-one increment x of length alphabet.
void append_segment(TensorSeries& s, std::span<const double> x);

// Sparse word-pair shuffle: (index, multiplicity) pairs on level p + q.
// Cached per thread.
using SparseLevel = std::vector<std::pair<std::uint64_t, double>>;
const SparseLevel& shuffle_words(int alphabet, int p, std::uint64_t i, int q, std::uint64_t j);

}  // namespace sigcal
