#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include "gbp/monads.hpp"
#include "gbp/poset.hpp"
#include "gbp/rational.hpp"

namespace gbp {

struct System {
  enum class Kind { LTS, PTS };
  Kind kind = Kind::LTS;
  PosetRef states;
  std::vector<std::string> labels;  // sorted, unique
  // LTS successors per state: sorted unique (label index, target).
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> succ;
  // PTS successors per state: (label index, target, probability).
  std::vector<std::vector<std::tuple<std::size_t, std::size_t, Rational>>> psucc;

  std::size_t size() const { return states->size(); }
  std::size_t state(std::string_view id) const;  // throws UnknownState
  std::size_t label_index(std::string_view l) const;
};

struct Transition {
  std::string from, label, to;
  Rational prob{1};
};

// Builds and validates a system; `validate` checks monotonicity for `sem`.
System make_system(System::Kind kind, const FinPoset& states, std::vector<std::string> labels,
                   const std::vector<Transition>& transitions, const Semantics* sem = nullptr);
System load_system(const std::string& json_text, const Semantics* sem = nullptr);
System load_system_file(const std::string& path, const Semantics* sem = nullptr);
std::string system_to_json(const System& sys);

// Throws NotMonotone with the offending state pair.
void check_monotone(const System& sys, SemKind kind);

// Query-local unfolding cache: n-step behaviours over the one-element base.
class Unfolder {
 public:
  explicit Unfolder(Semantics sem);
  const Semantics& semantics() const { return sem_; }
  const std::shared_ptr<TreeStore>& store() const { return store_; }

  NodeId tree(const System& sys, std::size_t x, std::size_t n);
  TraceDist trace(const System& sys, std::size_t x, std::size_t n);
  Behaviour behaviour(const System& sys, std::size_t x, std::size_t n);
  bool leq(const System& a, std::size_t x, const System& b, std::size_t y, std::size_t n);

 private:
  NodeId gamma(const System& sys, std::size_t x, std::size_t n);  // over the state poset
  TraceDist gamma_trace(const System& sys, std::size_t x, std::size_t n);
  NodeId ready(const System& sys, std::size_t x, std::size_t n);
  std::uint32_t base_of(const System& sys);

  Semantics sem_;
  std::shared_ptr<TreeStore> store_;
  std::map<const System*, std::uint32_t> bases_;
  std::map<std::tuple<const System*, std::size_t, std::size_t>, NodeId> memo_, memo1_;
  std::map<std::tuple<const System*, std::size_t, std::size_t>, TraceDist> tmemo_;
};

Behaviour n_step_behaviour(const Semantics& sem, const System& sys, std::string_view x, std::size_t n);

struct RefinementVerdict {
  std::vector<bool> holds;  // index n = 0..N
  std::optional<std::size_t> first_failure;
  bool all() const { return !first_failure.has_value(); }
};

// holds(n) iff the depth-n behaviour of x is below that of y.
RefinementVerdict refines(const Semantics& sem, const System& a, std::size_t x, const System& b, std::size_t y,
                          std::size_t N);
RefinementVerdict refines(Unfolder& u, const System& a, std::size_t x, const System& b, std::size_t y,
                          std::size_t N);
std::size_t default_depth(const System& a, const System& b);

// Oracles on the underlying unordered systems.
std::vector<std::size_t> classical_bisim(const System& sys);  // block id per state
std::vector<std::vector<bool>> classical_sim(const System& a, const System& b);  // R[x][y]: y simulates x
std::map<Word, Rational> trace_dist(const System& sys, std::size_t x, std::size_t n);
std::set<Word> lts_traces(const System& sys, std::size_t x, std::size_t n);

// Disjoint union of two systems with the same labels; states are prefixed "l." and "r.".
System disjoint_union(const System& a, const System& b);

}  // namespace gbp
