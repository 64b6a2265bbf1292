#pragma once

#include <functional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "sigcal/tensor_algebra.hpp"

namespace sigcal {

// A path sampled on a strictly increasing grid; values has one row per time.
struct SamplePath {
  std::vector<double> times;
  Eigen::MatrixXd values;

  int d() const { return static_cast<int>(values.cols()); }
  std::size_t size() const { return times.size(); }
  void validate() const;
};

// Signatures of the time-extended piecewise-linear path at every grid point.
struct SigStream {
  std::vector<double> times;
  std::vector<TensorSeries> sigs;
  int N = 0;

  int alphabet() const { return sigs.empty() ? 0 : sigs.front().alphabet(); }
  std::size_t size() const { return sigs.size(); }
};

SigStream path_signature(const SamplePath& path, int N);
TensorSeries terminal_signature(const SamplePath& path, int N);

// Signature of the path between grid points j and m.
TensorSeries sig_increment(const SigStream& stream, std::size_t j, std::size_t m);

// Fills incr with `steps` rows of A = d + 1 entries (dt, dX^1, ..., dX^d) for a path.
using IncrementFn = std::function<void(std::size_t path, double* incr)>;
// Called with the signature (dimension series_dimension(A, N)) of `path` at
// the k-th requested grid index.
using SigVisitor = std::function<void(std::size_t path, std::size_t k, const double* sig)>;

// Signatures of paths [begin, end) at the given grid indices (0 = start),
// using the active batched kernel. Single-threaded; callers split ranges.
void signatures_block(std::size_t begin, std::size_t end, int A, int N, std::size_t steps,
                      const IncrementFn& gen, std::span<const std::size_t> indices, const SigVisitor& visit);

}  // namespace sigcal
