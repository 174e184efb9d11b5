#include "gbp/kernels.hpp"

#include <omp.h>

#include <exception>

namespace gbp {

namespace {

bool sdist_leq(const SubDist& a, const SubDist& b, SdistMethod m) {
  return m == SdistMethod::Flow ? sdist_leq_flow(a, b) : sdist_leq_bruteforce(a, b);
}

bool refines_all(const Semantics& sem, const RefinementQuery& q) {
  return refines(sem, *q.a, q.x, *q.b, q.y, q.depth).all();
}

// Runs body(i) for i < n in parallel and rethrows the first exception.
template <class F>
void parallel_for(std::size_t n, F&& body) {
  std::exception_ptr err;
#pragma omp parallel for schedule(dynamic, 16)
  for (std::size_t i = 0; i < n; ++i) {
    try {
      body(i);
    } catch (...) {
#pragma omp critical
      if (!err) err = std::current_exception();
    }
  }
  if (err) std::rethrow_exception(err);
}

}  // namespace

std::vector<std::uint8_t> batch_sdist_leq_serial(const SdistPairs& pairs, SdistMethod method) {
  std::vector<std::uint8_t> out(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) out[i] = sdist_leq(pairs[i].first, pairs[i].second, method);
  return out;
}

std::vector<std::uint8_t> batch_sdist_leq(const SdistPairs& pairs, SdistMethod method) {
  std::vector<std::uint8_t> out(pairs.size());
  parallel_for(pairs.size(), [&](std::size_t i) { out[i] = sdist_leq(pairs[i].first, pairs[i].second, method); });
  return out;
}

std::vector<std::uint8_t> batch_refines_serial(const Semantics& sem, const std::vector<RefinementQuery>& qs) {
  std::vector<std::uint8_t> out(qs.size());
  for (std::size_t i = 0; i < qs.size(); ++i) out[i] = refines_all(sem, qs[i]);
  return out;
}

std::vector<std::uint8_t> batch_refines(const Semantics& sem, const std::vector<RefinementQuery>& qs) {
  std::vector<std::uint8_t> out(qs.size());
  parallel_for(qs.size(), [&](std::size_t i) { out[i] = refines_all(sem, qs[i]); });
  return out;
}

int kernel_threads() { return omp_get_max_threads(); }

}  // namespace gbp
