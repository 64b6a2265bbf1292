#include "sigcal/tensor_algebra.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

namespace sigcal {

Word::Word(std::initializer_list<int> letters) : letters_(letters) {
  for (int l : letters_)
    if (l < 0) throw std::invalid_argument("negative letter in word");
}

Word::Word(std::vector<int> letters) : letters_(std::move(letters)) {
  for (int l : letters_)
    if (l < 0) throw std::invalid_argument("negative letter in word");
}

Word Word::parse(std::string_view text) {
  std::string s;
  for (char c : text)
    if (c != ' ' && c != '\t') s.push_back(c);
  if (s.size() < 2 || s.front() != '(' || s.back() != ')')
    throw std::invalid_argument("malformed word: " + std::string(text));
  std::vector<int> letters;
  std::string body = s.substr(1, s.size() - 2);
  if (body.empty()) return Word{};
  std::size_t pos = 0;
  while (pos <= body.size()) {
    std::size_t comma = body.find(',', pos);
    std::string tok = body.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    if (tok.empty()) throw std::invalid_argument("malformed word: " + std::string(text));
    for (char c : tok)
      if (c < '0' || c > '9') throw std::invalid_argument("malformed word: " + std::string(text));
    letters.push_back(std::stoi(tok));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return Word(std::move(letters));
}

std::string Word::str() const {
  std::string out = "(";
  for (std::size_t i = 0; i < letters_.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(letters_[i]);
  }
  out += ')';
  return out;
}

Word Word::prefix() const {
  if (letters_.empty()) throw std::logic_error("prefix of empty word");
  return Word(std::vector<int>(letters_.begin(), letters_.end() - 1));
}

Word Word::append(int letter) const {
  auto l = letters_;
  l.push_back(letter);
  return Word(std::move(l));
}

Word Word::concat(const Word& other) const {
  auto l = letters_;
  l.insert(l.end(), other.letters_.begin(), other.letters_.end());
  return Word(std::move(l));
}

int Word::max_letter() const {
  int m = -1;
  for (int l : letters_) m = std::max(m, l);
  return m;
}

bool operator<(const Word& a, const Word& b) {
  if (a.size() != b.size()) return a.size() < b.size();
  return a.letters_ < b.letters_;
}

std::uint64_t ipow(std::uint64_t base, int exp) {
  std::uint64_t r = 1;
  for (int i = 0; i < exp; ++i) r *= base;
  return r;
}

std::size_t series_dimension(int alphabet, int depth) {
  std::size_t total = 0, p = 1;
  for (int k = 0; k <= depth; ++k) {
    total += p;
    p *= static_cast<std::size_t>(alphabet);
  }
  return total;
}

std::uint64_t word_index(const Word& w, int alphabet) {
  std::uint64_t idx = 0;
  for (int l : w.letters()) {
    if (l >= alphabet) throw std::out_of_range("letter " + std::to_string(l) + " outside alphabet");
    idx = idx * alphabet + l;
  }
  return idx;
}

Word index_to_word(std::uint64_t index, int level, int alphabet) {
  if (index >= ipow(alphabet, level)) throw std::out_of_range("word index out of range");
  std::vector<int> letters(level);
  for (int k = level - 1; k >= 0; --k) {
    letters[k] = static_cast<int>(index % alphabet);
    index /= alphabet;
  }
  return Word(std::move(letters));
}

std::vector<Word> all_words(int alphabet, int depth) {
  std::vector<Word> out;
  for (int k = 0; k <= depth; ++k) {
    std::uint64_t cnt = ipow(alphabet, k);
    for (std::uint64_t i = 0; i < cnt; ++i) out.push_back(index_to_word(i, k, alphabet));
  }
  return out;
}

TensorSeries::TensorSeries(int alphabet, int depth) : alphabet_(alphabet), depth_(depth) {
  if (alphabet < 1) throw std::invalid_argument("alphabet must have at least one letter");
  if (depth < 0) throw std::invalid_argument("negative truncation depth");
  offsets_.resize(depth + 2);
  std::size_t off = 0, p = 1;
  for (int k = 0; k <= depth; ++k) {
    offsets_[k] = off;
    off += p;
    p *= alphabet;
  }
  offsets_[depth + 1] = off;
  data_.assign(off, 0.0);
}

TensorSeries TensorSeries::unit(int alphabet, int depth) {
  TensorSeries t(alphabet, depth);
  t.data_[0] = 1.0;
  return t;
}

TensorSeries TensorSeries::basis(const Word& w, int alphabet, int depth) {
  TensorSeries t(alphabet, depth);
  t.coeff_ref(w) = 1.0;
  return t;
}

std::span<double> TensorSeries::level(int k) {
  return {data_.data() + offsets_.at(k), offsets_.at(k + 1) - offsets_[k]};
}

std::span<const double> TensorSeries::level(int k) const {
  return {data_.data() + offsets_.at(k), offsets_.at(k + 1) - offsets_[k]};
}

bool TensorSeries::has_word(const Word& w) const {
  return static_cast<int>(w.size()) <= depth_ && w.max_letter() < alphabet_;
}

double TensorSeries::coeff(const Word& w) const {
  if (!has_word(w)) throw std::out_of_range("word " + w.str() + " not stored in series");
  return data_[offsets_[w.size()] + word_index(w, alphabet_)];
}

double& TensorSeries::coeff_ref(const Word& w) {
  if (!has_word(w)) throw std::out_of_range("word " + w.str() + " not stored in series");
  return data_[offsets_[w.size()] + word_index(w, alphabet_)];
}

TensorSeries TensorSeries::with_depth(int depth) const {
  TensorSeries t(alphabet_, depth);
  std::size_t n = std::min(t.data_.size(), data_.size());
  std::copy(data_.begin(), data_.begin() + n, t.data_.begin());
  return t;
}

void TensorSeries::check_compatible(const TensorSeries& other) const {
  if (alphabet_ != other.alphabet_ || depth_ != other.depth_)
    throw std::invalid_argument("tensor series shape mismatch");
}

TensorSeries& TensorSeries::operator+=(const TensorSeries& other) {
  check_compatible(other);
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

TensorSeries& TensorSeries::operator-=(const TensorSeries& other) {
  check_compatible(other);
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

TensorSeries& TensorSeries::operator*=(double s) {
  for (double& v : data_) v *= s;
  return *this;
}

TensorSeries TensorSeries::operator-() const {
  TensorSeries t = *this;
  t *= -1.0;
  return t;
}

double TensorSeries::max_abs_diff(const TensorSeries& other) const {
  check_compatible(other);
  double m = 0;
  for (std::size_t i = 0; i < data_.size(); ++i) m = std::max(m, std::abs(data_[i] - other.data_[i]));
  return m;
}

namespace {

void check_alphabet(const TensorSeries& a, const TensorSeries& b) {
  if (a.alphabet() != b.alphabet()) throw std::invalid_argument("alphabet mismatch");
}

struct ShuffleKey {
  int alphabet, p, q;
  std::uint64_t i, j;
  bool operator==(const ShuffleKey&) const = default;
};

struct ShuffleKeyHash {
  std::size_t operator()(const ShuffleKey& k) const {
    std::uint64_t h = k.i * 0x9E3779B97F4A7C15ULL;
    h ^= k.j + 0x632BE59BD9B4E019ULL + (h << 6) + (h >> 2);
    h ^= (static_cast<std::uint64_t>(k.alphabet) << 40) ^ (static_cast<std::uint64_t>(k.p) << 20) ^ k.q;
    return static_cast<std::size_t>(h * 0xBF58476D1CE4E5B9ULL);
  }
};

void compact(SparseLevel& v) {
  std::sort(v.begin(), v.end());
  std::size_t w = 0;
  for (std::size_t r = 0; r < v.size(); ++r) {
    if (w > 0 && v[w - 1].first == v[r].first)
      v[w - 1].second += v[r].second;
    else
      v[w++] = v[r];
  }
  v.resize(w);
}

// Iterates over the nonzero entries of a series as (level, index, value).
template <class F>
void for_nonzero(const TensorSeries& a, int max_level, F&& f) {
  for (int k = 0; k <= std::min(a.depth(), max_level); ++k) {
    auto lv = a.level(k);
    for (std::size_t i = 0; i < lv.size(); ++i)
      if (lv[i] != 0.0) f(k, static_cast<std::uint64_t>(i), lv[i]);
  }
}

}  // namespace

const SparseLevel& shuffle_words(int alphabet, int p, std::uint64_t i, int q, std::uint64_t j) {
  thread_local std::unordered_map<ShuffleKey, SparseLevel, ShuffleKeyHash> cache;
  ShuffleKey key{alphabet, p, q, i, j};
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  SparseLevel out;
  if (p == 0) {
    out.emplace_back(j, 1.0);
  } else if (q == 0) {
    out.emplace_back(i, 1.0);
  } else {
    const std::uint64_t A = alphabet;
    const SparseLevel& left = shuffle_words(alphabet, p - 1, i / A, q, j);
    for (auto [idx, c] : left) out.emplace_back(idx * A + i % A, c);
    const SparseLevel& right = shuffle_words(alphabet, p, i, q - 1, j / A);
    for (auto [idx, c] : right) out.emplace_back(idx * A + j % A, c);
    compact(out);
  }
  return cache.emplace(key, std::move(out)).first->second;
}

TensorSeries concat(const TensorSeries& a, const TensorSeries& b, int n) {
  check_alphabet(a, b);
  const int A = a.alphabet();
  TensorSeries out(A, n);
  for (int k = 0; k <= n; ++k) {
    auto dst = out.level(k);
    for (int p = 0; p <= k; ++p) {
      int q = k - p;
      if (p > a.depth() || q > b.depth()) continue;
      auto la = a.level(p);
      auto lb = b.level(q);
      for (std::size_t i = 0; i < la.size(); ++i) {
        if (la[i] == 0.0) continue;
        double* row = dst.data() + i * lb.size();
        for (std::size_t j = 0; j < lb.size(); ++j) row[j] += la[i] * lb[j];
      }
    }
  }
  return out;
}

TensorSeries shuffle(const TensorSeries& a, const TensorSeries& b, int n) {
  check_alphabet(a, b);
  const int A = a.alphabet();
  TensorSeries out(A, n);
  for_nonzero(a, n, [&](int p, std::uint64_t i, double ca) {
    for_nonzero(b, n - p, [&](int q, std::uint64_t j, double cb) {
      auto dst = out.level(p + q);
      for (auto [idx, c] : shuffle_words(A, p, i, q, j)) dst[idx] += ca * cb * c;
    });
  });
  return out;
}

TensorSeries half_shuffle(const TensorSeries& a, const TensorSeries& b, int n) {
  check_alphabet(a, b);
  const int A = a.alphabet();
  TensorSeries out(A, n);
  for_nonzero(b, n, [&](int q, std::uint64_t j, double cb) {
    if (q == 0) return;
    const std::uint64_t jp = j / A, last = j % A;
    for_nonzero(a, n - q, [&](int p, std::uint64_t i, double ca) {
      auto dst = out.level(p + q);
      for (auto [idx, c] : shuffle_words(A, p, i, q - 1, jp)) dst[idx * A + last] += ca * cb * c;
    });
  });
  return out;
}

TensorSeries qv_bracket(const TensorSeries& a, const TensorSeries& b, const Eigen::MatrixXd& rho, int n) {
  check_alphabet(a, b);
  const int A = a.alphabet();
  if (rho.rows() != A - 1 || rho.cols() != A - 1) throw std::invalid_argument("rho dimension mismatch");
  TensorSeries out(A, n);
  for_nonzero(a, n, [&](int p, std::uint64_t i, double ca) {
    if (p == 0 || i % A == 0) return;
    for_nonzero(b, n + 1 - p, [&](int q, std::uint64_t j, double cb) {
      if (q == 0 || j % A == 0) return;
      double r = rho(i % A - 1, j % A - 1);
      if (r == 0.0) return;
      auto dst = out.level(p + q - 1);
      for (auto [idx, c] : shuffle_words(A, p - 1, i / A, q - 1, j / A)) dst[idx * A] += ca * cb * r * c;
    });
  });
  return out;
}

TensorSeries tensor_exp(const TensorSeries& x, int n) {
  for (int k = 0; k <= x.depth(); ++k) {
    if (k == 1) continue;
    for (double v : x.level(k))
      if (v != 0.0) throw std::invalid_argument("tensor_exp expects a series supported on level 1");
  }
  const int A = x.alphabet();
  TensorSeries out = TensorSeries::unit(A, n);
  if (x.depth() < 1) return out;
  auto x1 = x.level(1);
  for (int k = 1; k <= n; ++k) {
    auto prev = out.level(k - 1);
    auto cur = out.level(k);
    for (std::size_t i = 0; i < prev.size(); ++i)
      for (int l = 0; l < A; ++l) cur[i * A + l] = prev[i] * x1[l] / k;
  }
  return out;
}

double inner(const TensorSeries& a, const TensorSeries& b) {
  check_alphabet(a, b);
  int top = std::min(a.depth(), b.depth());
  std::size_t n = series_dimension(a.alphabet(), top);
  double s = 0;
  auto da = a.data();
  auto db = b.data();
  for (std::size_t i = 0; i < n; ++i) s += da[i] * db[i];
  return s;
}

void append_segment(TensorSeries& s, std::span<const double> x) {
  const int A = s.alphabet();
  const int N = s.depth();
  if (static_cast<int>(x.size()) != A) throw std::invalid_argument("increment length must equal alphabet size");
  if (N == 0) return;
  std::size_t top = ipow(A, N);
  std::vector<double> b0(top), b1(top);
  const double s0 = s.level(0)[0];
  for (int k = N; k >= 1; --k) {
    // b0 holds B_j on level j.
    for (int l = 0; l < A; ++l) b0[l] = s0 * x[l] / k;
    std::size_t len = A;
    for (int j = 1; j < k; ++j) {
      auto sj = s.level(j);
      const double scale = 1.0 / (k - j);
      for (std::size_t i = 0; i < len; ++i) {
        double v = (b0[i] + sj[i]) * scale;
        double* row = b1.data() + i * A;
        for (int l = 0; l < A; ++l) row[l] = v * x[l];
      }
      len *= A;
      std::swap(b0, b1);
    }
    auto sk = s.level(k);
    for (std::size_t i = 0; i < len; ++i) sk[i] += b0[i];
  }
}

}  // namespace sigcal
