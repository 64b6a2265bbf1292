#include "sigcal/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>

namespace sigcal {

int thread_count() {
  if (const char* env = std::getenv("SIGCAL_THREADS")) {
    try {
      int v = std::stoi(env);
      if (v > 0) return v;
    } catch (...) {
    }
  }
  unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

void parallel_for(std::size_t n, std::size_t block, const std::function<void(std::size_t, std::size_t)>& f) {
  if (n == 0) return;
  if (block == 0) block = 1;
  const std::size_t nblocks = (n + block - 1) / block;
  const int workers = static_cast<int>(std::min<std::size_t>(thread_count(), nblocks));
  if (workers <= 1) {
    for (std::size_t b = 0; b < nblocks; ++b) f(b * block, std::min(n, (b + 1) * block));
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr err;
  std::mutex err_mu;
  auto run = [&] {
    for (;;) {
      std::size_t b = next.fetch_add(1);
      if (b >= nblocks) return;
      try {
        f(b * block, std::min(n, (b + 1) * block));
      } catch (...) {
        std::lock_guard<std::mutex> lk(err_mu);
        if (!err) err = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int t = 1; t < workers; ++t) pool.emplace_back(run);
  run();
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

std::vector<double> parallel_sum(std::size_t n, std::size_t block, std::size_t width,
                                 const std::function<void(std::size_t, std::size_t, double*)>& f) {
  if (block == 0) block = 1;
  const std::size_t nblocks = (n + block - 1) / block;
  std::vector<double> partial(nblocks * width, 0.0);
  parallel_for(nblocks, 1, [&](std::size_t b0, std::size_t b1) {
    for (std::size_t b = b0; b < b1; ++b)
      f(b * block, std::min(n, (b + 1) * block), partial.data() + b * width);
  });
  std::vector<double> out(width, 0.0);
  for (std::size_t b = 0; b < nblocks; ++b)
    for (std::size_t w = 0; w < width; ++w) out[w] += partial[b * width + w];
  return out;
}

}  // namespace sigcal
