#pragma once

#include <Eigen/Dense>
#include <atomic>
#include <functional>
#include <thread>
#include <vector>

namespace fsde {

inline int resolve_jobs(int jobs) {
  if (jobs > 0) return jobs;
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

// Runs fn(begin, end) over fixed-size chunks of [0, n). Chunk boundaries do
// not depend on the worker count, so writes into disjoint output slots give
// results independent of `jobs`.
inline void parallel_for_chunks(Eigen::Index n, int jobs,
                                const std::function<void(Eigen::Index, Eigen::Index)>& fn,
                                Eigen::Index chunk = 4096) {
  if (n <= 0) return;
  jobs = resolve_jobs(jobs);
  const Eigen::Index nchunks = (n + chunk - 1) / chunk;
  if (jobs <= 1 || nchunks <= 1) {
    for (Eigen::Index c = 0; c < nchunks; ++c)
      fn(c * chunk, std::min(n, (c + 1) * chunk));
    return;
  }
  std::atomic<Eigen::Index> next{0};
  auto worker = [&] {
    for (;;) {
      const Eigen::Index c = next.fetch_add(1);
      if (c >= nchunks) return;
      fn(c * chunk, std::min(n, (c + 1) * chunk));
    }
  };
  std::vector<std::thread> pool;
  const int nthreads = static_cast<int>(std::min<Eigen::Index>(jobs, nchunks));
  pool.reserve(static_cast<std::size_t>(nthreads));
  for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
}

}  // namespace fsde
