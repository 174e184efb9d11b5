#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "gbp/coalgebra.hpp"
#include "gbp/sdist.hpp"

namespace gbp {

// Batch checks with OpenMP-parallel and serial reference versions; results are
// identical and in input order.

enum class SdistMethod { Flow, BruteForce };
using SdistPairs = std::vector<std::pair<SubDist, SubDist>>;

std::vector<std::uint8_t> batch_sdist_leq_serial(const SdistPairs& pairs, SdistMethod method = SdistMethod::Flow);
std::vector<std::uint8_t> batch_sdist_leq(const SdistPairs& pairs, SdistMethod method = SdistMethod::Flow);

struct RefinementQuery {
  const System* a = nullptr;
  std::size_t x = 0;
  const System* b = nullptr;
  std::size_t y = 0;
  std::size_t depth = 0;
};

// 1 iff x refines y at every depth up to the query's depth.
std::vector<std::uint8_t> batch_refines_serial(const Semantics& sem, const std::vector<RefinementQuery>& qs);
std::vector<std::uint8_t> batch_refines(const Semantics& sem, const std::vector<RefinementQuery>& qs);

int kernel_threads();

}  // namespace gbp
