#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gbp/poset.hpp"
#include "gbp/rational.hpp"

namespace gbp {

// Finitely supported subdistribution: weights in (0,1], total mass <= 1.
struct SubDist {
  PosetRef base;
  std::map<std::size_t, Rational> weights;

  // Drops zero weights; throws MassExceedsOne / InvalidPartition on bad weights.
  static SubDist make(PosetRef base, std::map<std::size_t, Rational> weights);
  static SubDist point(PosetRef base, std::size_t x, Rational w = Rational(1));
  Rational mass() const;
  Rational at(std::size_t x) const;
  std::string str() const;
  friend bool operator==(const SubDist& a, const SubDist& b) { return a.weights == b.weights; }
};

// Ordered list of (coefficient, element); duplicates allowed.
struct FormalSum {
  PosetRef base;
  std::vector<std::pair<Rational, std::size_t>> summands;

  static FormalSum parse(PosetRef base, const std::string& text);  // "1/2 x + 1/3 y"
  SubDist quotient() const;
  std::string str() const;
};

FormalSum to_formal(const SubDist& d);

struct Partition {
  enum class Form { Summands, PartialSums };
  Rational total;
  Form form = Form::Summands;
  std::vector<Rational> parts;  // summands in order, or sorted partial sums
  void validate() const;        // throws InvalidPartition
};

Partition smd_psums_convert(const Partition& p);

// `parent[i]` is the index of the summand of the coarser sum that summand i refines.
struct Subdivision {
  FormalSum sum;
  std::vector<std::size_t> parent;
};

bool is_subdivision(const FormalSum& fine, const FormalSum& coarse, const std::vector<std::size_t>& parent);

struct CommonRefinement {
  FormalSum sum;
  std::vector<std::size_t> from_a, from_b;
};
CommonRefinement common_refinement(const FormalSum& a, const FormalSum& b);

// Injection f with coefficient_i <= coefficient_f(i) and element_i <= element_f(i).
std::optional<std::vector<std::size_t>> obviously_below(const FormalSum& a, const FormalSum& b);

// Given a obviously below b via f, and a subdivision d of a, a subdivision d* of b
// with d obviously below d* (push); dually a subdivision of a below a subdivision of b (pull).
struct PushResult {
  Subdivision extended;
  std::vector<std::size_t> injection;
};
PushResult push_subdivision(const FormalSum& a, const FormalSum& b, const std::vector<std::size_t>& f,
                            const Subdivision& d);
PushResult pull_subdivision(const FormalSum& a, const FormalSum& b, const std::vector<std::size_t>& f,
                            const Subdivision& e);

bool sdist_leq_flow(const SubDist& mu, const SubDist& nu);
// Exponential oracle; throws CarrierTooLarge when more than `max_atoms` atoms are needed.
bool sdist_leq_bruteforce(const SubDist& mu, const SubDist& nu, std::size_t max_atoms = 12);

SubDist sdist_map(const MonotoneMap& f, const SubDist& mu);
SubDist sdist_flatten(const std::vector<std::pair<Rational, SubDist>>& mm);

// All subdistributions on `base` with support <= max_support and weight denominators <= max_den.
std::vector<SubDist> enumerate_subdists(const PosetRef& base, std::size_t max_support, long max_den);

}  // namespace gbp
