#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "gbp/poset.hpp"
#include "gbp/rational.hpp"
#include "gbp/sdist.hpp"

namespace gbp {

enum class SemKind { Bisim, Sim, ReadySim, Sync, PTrace };

struct Semantics {
  SemKind kind = SemKind::Bisim;
  std::vector<std::string> labels;  // sorted, unique, nonempty

  static Semantics make(SemKind kind, std::vector<std::string> labels);
  std::string name() const;
  bool is_tree() const { return kind != SemKind::PTrace; }
};

SemKind parse_sem_kind(std::string_view name);
const char* sem_kind_name(SemKind k);

using NodeId = std::uint32_t;

struct Edge {
  std::uint32_t label;
  NodeId child;
  friend bool operator==(const Edge&, const Edge&) = default;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

struct Node {
  enum class Kind : std::uint8_t { Point, Embed, Deadlock, Set };
  Kind kind = Kind::Point;
  std::uint32_t depth = 0;
  std::uint32_t base = 0;  // Point: base id
  std::uint32_t value = 0; // Point: element index; Embed: inner node
  std::vector<Edge> edges; // Set: canonical generators, sorted
  friend bool operator==(const Node&, const Node&) = default;
};

struct NodeHash {
  std::size_t operator()(const Node& n) const;
};

// Hash-consed normal forms for the set-based semantics (Bisim, Sim, ReadySim, Sync).
// Convex layers keep the minimal and maximal generators, down-set layers the
// maximal ones; equal behaviours therefore share one NodeId. Not thread-safe.
class TreeStore {
 public:
  explicit TreeStore(Semantics sem);

  const Semantics& semantics() const { return sem_; }
  bool down_layers() const;
  bool sync() const { return sem_.kind == SemKind::Sync; }

  std::uint32_t add_base(PosetRef base);
  const PosetRef& base(std::uint32_t id) const { return bases_[id]; }
  std::uint32_t one_base() const { return 0; }

  std::uint32_t label(std::string_view name);
  const std::string& label_name(std::uint32_t id) const { return label_names_[id]; }
  std::size_t label_count() const { return label_names_.size(); }

  NodeId point(std::uint32_t base, std::size_t elem);
  NodeId star() { return point(0, 0); }
  NodeId deadlock(std::size_t depth);
  NodeId embed(NodeId inner);
  NodeId make_set(std::size_t depth, std::vector<Edge> edges);
  NodeId empty_below(std::size_t depth);  // least element over base 1: star at depth 0, {} above

  const Node& node(NodeId id) const { return nodes_[id]; }
  std::size_t depth(NodeId id) const { return nodes_[id].depth; }
  bool is_deadlock(NodeId id) const { return nodes_[id].kind == Node::Kind::Deadlock; }
  std::size_t size() const { return nodes_.size(); }

  bool leq(NodeId a, NodeId b);
  bool edge_leq(const Edge& a, const Edge& b) { return a.label == b.label && leq(a.child, b.child); }
  // Membership of a (label, child) pair in the closed set generated by a Set node.
  bool member(NodeId set, const Edge& e);

  // Rebuilds `b` with every depth-0 leaf (Point or Embed) replaced by leaf(id).
  NodeId relabel_leaves(NodeId b, const std::function<NodeId(NodeId)>& leaf);
  // mu^{n,k}: `nested` has Embed leaves holding depth-k behaviours. `k` is read
  // off the leaves unless given (needed when the outer tree is a deadlock).
  NodeId graft(NodeId nested, std::optional<std::size_t> k = std::nullopt);
  NodeId map(NodeId b, std::uint32_t target_base, const std::vector<std::size_t>& f);

  std::string show(NodeId id) const;

 private:
  NodeId intern(Node n);

  Semantics sem_;
  std::vector<PosetRef> bases_;
  std::vector<std::string> label_names_;
  std::unordered_map<std::string, std::uint32_t> label_ids_;
  std::vector<Node> nodes_;
  std::unordered_map<Node, NodeId, NodeHash> index_;
  std::unordered_map<std::uint64_t, bool> leq_memo_;
};

using Word = std::vector<std::uint32_t>;

// PTrace normal form: subdistribution over (label word of length depth, base element).
struct TraceDist {
  std::size_t depth = 0;
  PosetRef base;
  std::map<std::pair<Word, std::size_t>, Rational> weights;

  Rational mass() const;
  std::string show(const std::vector<std::string>& labels) const;
  friend bool operator==(const TraceDist& a, const TraceDist& b) {
    return a.depth == b.depth && a.weights == b.weights;
  }
};

// Element of M_n M_k X for PTrace: weights over (outer word, inner TraceDist).
struct NestedTrace {
  std::size_t depth = 0;
  std::vector<std::tuple<Word, TraceDist, Rational>> entries;
};

TraceDist pt_unit(const PosetRef& base, std::size_t x);
TraceDist pt_mult(const NestedTrace& nested);
bool pt_leq(const TraceDist& a, const TraceDist& b);
TraceDist pt_map(const MonotoneMap& f, const TraceDist& d);
// Every length-depth word, listed as SubDist over an explicit poset for flow checks.
SubDist pt_as_subdist(const TraceDist& d, const PosetRef& words_times_base,
                      const std::map<std::pair<Word, std::size_t>, std::size_t>& index);

// Value type tying a normal form to its semantics.
class Behaviour {
 public:
  static Behaviour of_tree(std::shared_ptr<TreeStore> store, NodeId id);
  static Behaviour of_trace(Semantics sem, TraceDist d);

  const Semantics& semantics() const;
  std::size_t depth() const;
  bool is_trace() const { return !store_; }
  const std::shared_ptr<TreeStore>& store() const { return store_; }
  NodeId node() const { return id_; }
  const TraceDist& trace() const { return trace_; }
  std::string str() const;

  friend bool operator==(const Behaviour& a, const Behaviour& b);

 private:
  std::shared_ptr<TreeStore> store_;
  NodeId id_ = 0;
  Semantics sem_;
  TraceDist trace_;
};

Behaviour m_unit(const Semantics& sem, const std::shared_ptr<TreeStore>& store, std::uint32_t base, std::size_t x);
Behaviour m_unit_trace(const Semantics& sem, const PosetRef& base, std::size_t x);
bool beh_leq(const Behaviour& a, const Behaviour& b);
Behaviour m_mult(const Behaviour& nested);  // tree: Embed leaves
Behaviour m_mult(const Semantics& sem, const NestedTrace& nested);
Behaviour m_map(const MonotoneMap& f, std::uint32_t target_base, const Behaviour& b);

// Visits make_set(depth, G) for every canonical generator set G drawn from
// `cands`; stops early when `visit` returns false. Returns false if stopped.
bool for_each_layer(TreeStore& store, const std::vector<Edge>& cands, std::size_t depth,
                    const std::function<bool(NodeId)>& visit);
// All depth-n behaviours over base 1, in a canonical order.
std::vector<NodeId> enumerate_mn1(TreeStore& store, std::size_t n, std::size_t cap = 2000000);

struct M1Algebra {
  Semantics sem;
  std::size_t n = 0;
  std::shared_ptr<TreeStore> store;
  std::vector<NodeId> a0, a1;  // M_n 1 and M_{n+1} 1; empty for PTrace
  NodeId a10(NodeId m1_over_a0) const { return store->graft(m1_over_a0); }
};

M1Algebra canonical_m1(const Semantics& sem, std::size_t n, std::size_t cap = 2000000);

// Candidate (label, child) edges of depth-(d+1) sets over the given depth-d carrier.
std::vector<Edge> candidate_edges(TreeStore& store, const std::vector<NodeId>& carrier, std::size_t d);

// Ready-simulation labels: "{I}a" for the ready set I and action a; "*" for deadlock.
std::string ready_label(const std::vector<std::string>& ready, const std::string& action);
inline constexpr std::string_view kStopLabel = "*";

}  // namespace gbp
