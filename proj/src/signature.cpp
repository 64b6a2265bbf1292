#include "sigcal/signature.hpp"

#include <algorithm>
#include <stdexcept>

#include "sigcal/kernels/kernels.hpp"

namespace sigcal {

void SamplePath::validate() const {
  if (times.size() < 2) throw std::invalid_argument("path needs at least one segment");
  if (static_cast<std::size_t>(values.rows()) != times.size())
    throw std::invalid_argument("path values and times differ in length");
  for (std::size_t i = 1; i < times.size(); ++i)
    if (!(times[i] > times[i - 1])) throw std::invalid_argument("path times must be strictly increasing");
}

namespace {

std::vector<double> increment(const SamplePath& path, std::size_t i) {
  const int d = path.d();
  std::vector<double> x(d + 1);
  x[0] = path.times[i + 1] - path.times[i];
  for (int c = 0; c < d; ++c) x[c + 1] = path.values(i + 1, c) - path.values(i, c);
  return x;
}

}  // namespace

SigStream path_signature(const SamplePath& path, int N) {
  if (N < 1) throw std::invalid_argument("signature level must be at least 1");
  path.validate();
  SigStream out;
  out.N = N;
  out.times = path.times;
  out.sigs.reserve(path.size());
  TensorSeries s = TensorSeries::unit(path.d() + 1, N);
  out.sigs.push_back(s);
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    append_segment(s, increment(path, i));
    // Exact time coordinate: avoid drift from summing dt.
    s.level(1)[0] = path.times[i + 1] - path.times[0];
    out.sigs.push_back(s);
  }
  return out;
}

TensorSeries terminal_signature(const SamplePath& path, int N) {
  path.validate();
  TensorSeries s = TensorSeries::unit(path.d() + 1, N);
  for (std::size_t i = 0; i + 1 < path.size(); ++i) append_segment(s, increment(path, i));
  return s;
}

TensorSeries sig_increment(const SigStream& stream, std::size_t j, std::size_t m) {
  if (j > m || m >= stream.size()) throw std::out_of_range("signature increment indices out of range");
  const int A = stream.alphabet();
  TensorSeries s = TensorSeries::unit(A, stream.N);
  std::vector<double> x(A);
  for (std::size_t i = j; i < m; ++i) {
    // Recover the segment increment from consecutive level-one entries.
    auto a = stream.sigs[i].level(1);
    auto b = stream.sigs[i + 1].level(1);
    for (int l = 0; l < A; ++l) x[l] = b[l] - a[l];
    append_segment(s, x);
  }
  return s;
}

void signatures_block(std::size_t begin, std::size_t end, int A, int N, std::size_t steps,
                      const IncrementFn& gen, std::span<const std::size_t> indices, const SigVisitor& visit) {
  using kernels::kLanes;
  if (A > 16) throw std::invalid_argument("batched signatures support at most 16 letters");
  if (!std::is_sorted(indices.begin(), indices.end())) throw std::invalid_argument("grid indices must be sorted");
  for (auto i : indices)
    if (i > steps) throw std::out_of_range("grid index beyond path length");
  const auto& kt = kernels::active();
  const std::size_t dim = series_dimension(A, N);
  const std::size_t top = ipow(A, N);
  std::vector<double> s(dim * kLanes), scratch(2 * top * kLanes), x(A * kLanes), out(dim);
  std::vector<double> incr(static_cast<std::size_t>(kLanes) * steps * A);
  for (std::size_t p0 = begin; p0 < end; p0 += kLanes) {
    const int lanes = static_cast<int>(std::min<std::size_t>(kLanes, end - p0));
    std::fill(incr.begin(), incr.end(), 0.0);
    for (int l = 0; l < lanes; ++l) gen(p0 + l, incr.data() + static_cast<std::size_t>(l) * steps * A);
    std::fill(s.begin(), s.end(), 0.0);
    for (int l = 0; l < kLanes; ++l) s[l] = 1.0;
    std::size_t k = 0;
    auto emit = [&](std::size_t step) {
      while (k < indices.size() && indices[k] == step) {
        for (int l = 0; l < lanes; ++l) {
          for (std::size_t c = 0; c < dim; ++c) out[c] = s[c * kLanes + l];
          visit(p0 + l, k, out.data());
        }
        ++k;
      }
    };
    emit(0);
    for (std::size_t t = 0; t < steps && k < indices.size(); ++t) {
      for (int l = 0; l < kLanes; ++l) {
        const double* src = incr.data() + (static_cast<std::size_t>(l) * steps + t) * A;
        for (int a = 0; a < A; ++a) x[a * kLanes + l] = src[a];
      }
      kt.sig_append4(s.data(), x.data(), A, N, scratch.data());
      emit(t + 1);
    }
  }
}

}  // namespace sigcal
