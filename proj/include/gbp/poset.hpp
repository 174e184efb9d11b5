#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace gbp {

// Finite poset. Elements are interned strings kept in lexicographic order;
// the order is stored as a closed boolean matrix over element indices.
class FinPoset {
 public:
  FinPoset() = default;

  // Reflexive-transitive closure of `pairs`; throws NotAntisymmetric / UnknownElement.
  static FinPoset validate(std::vector<std::string> elements,
                           const std::vector<std::pair<std::string, std::string>>& pairs);
  static FinPoset discrete(std::vector<std::string> elements);
  // Chain in the given order (first is least).
  static FinPoset chain(const std::vector<std::string>& elements);
  static FinPoset one();  // {"*"}
  // Closure of an index relation over already sorted, unique ids.
  static FinPoset from_relation(std::vector<std::string> sorted_ids, std::vector<unsigned char> rel);

  std::size_t size() const { return ids_.size(); }
  const std::vector<std::string>& elements() const { return ids_; }
  const std::string& id(std::size_t i) const { return ids_[i]; }
  std::optional<std::size_t> find(std::string_view id) const;
  std::size_t index(std::string_view id) const;

  bool leq(std::size_t i, std::size_t j) const { return rel_[i * ids_.size() + j] != 0; }
  bool leq(std::string_view a, std::string_view b) const { return leq(index(a), index(b)); }
  bool less(std::size_t i, std::size_t j) const { return i != j && leq(i, j); }
  bool is_discrete() const;

  friend bool operator==(const FinPoset&, const FinPoset&) = default;

 private:
  std::vector<std::string> ids_;
  std::vector<unsigned char> rel_;
};

using PosetRef = std::shared_ptr<const FinPoset>;
inline PosetRef share(FinPoset p) { return std::make_shared<const FinPoset>(std::move(p)); }

class MonotoneMap {
 public:
  // Throws NotMonotone if the graph does not preserve the order.
  MonotoneMap(PosetRef domain, PosetRef codomain, std::vector<std::size_t> graph);
  static MonotoneMap identity(PosetRef p);
  static MonotoneMap constant(PosetRef domain, PosetRef codomain, std::size_t target);

  const PosetRef& domain() const { return dom_; }
  const PosetRef& codomain() const { return cod_; }
  std::size_t operator()(std::size_t x) const { return graph_[x]; }
  const std::vector<std::size_t>& graph() const { return graph_; }

 private:
  PosetRef dom_, cod_;
  std::vector<std::size_t> graph_;
};

MonotoneMap compose(const MonotoneMap& g, const MonotoneMap& f);  // g after f

// Subsets are kept as sorted index vectors.
struct DownSet {
  PosetRef base;
  std::vector<std::size_t> members;
  friend bool operator==(const DownSet& a, const DownSet& b) { return a.members == b.members; }
};

struct ConvexSet {
  PosetRef base;
  std::vector<std::size_t> members;
  friend bool operator==(const ConvexSet& a, const ConvexSet& b) { return a.members == b.members; }
};

std::vector<std::size_t> indices_of(const FinPoset& p, const std::vector<std::string>& ids);

DownSet down_closure(const PosetRef& p, const std::vector<std::size_t>& s);
DownSet down_closure(const PosetRef& p, const std::vector<std::string>& s);
ConvexSet convex_hull(const PosetRef& p, const std::vector<std::size_t>& s);
ConvexSet convex_hull(const PosetRef& p, const std::vector<std::string>& s);

bool is_down_closed(const FinPoset& p, const std::vector<std::size_t>& s);
bool is_convex(const FinPoset& p, const std::vector<std::size_t>& s);

bool egli_milner_leq(const ConvexSet& a, const ConvexSet& b);
bool downset_leq(const DownSet& a, const DownSet& b);

// Generator-level orders: Egli-Milner and Hoare preorders on arbitrary finite
// subsets under a caller-supplied order.
template <class T, class Leq>
bool egli_milner(const std::vector<T>& a, const std::vector<T>& b, Leq leq) {
  for (const auto& x : a) {
    bool ok = false;
    for (const auto& y : b)
      if (leq(x, y)) { ok = true; break; }
    if (!ok) return false;
  }
  for (const auto& y : b) {
    bool ok = false;
    for (const auto& x : a)
      if (leq(x, y)) { ok = true; break; }
    if (!ok) return false;
  }
  return true;
}

template <class T, class Leq>
bool hoare(const std::vector<T>& a, const std::vector<T>& b, Leq leq) {
  for (const auto& x : a) {
    bool ok = false;
    for (const auto& y : b)
      if (leq(x, y)) { ok = true; break; }
    if (!ok) return false;
  }
  return true;
}

// labels x P with (a,x) <= (b,y) iff a = b and x <= y. Element ids are "a,x".
struct Product {
  PosetRef poset;
  std::size_t index(std::size_t label, std::size_t elem) const { return at[label][elem]; }
  std::vector<std::vector<std::size_t>> at;
  std::vector<std::pair<std::size_t, std::size_t>> components;  // per product index
};
Product product_with_discrete(const std::vector<std::string>& labels, const FinPoset& p);

// Enumerations used by exhaustive checks.
std::vector<std::vector<std::size_t>> all_down_sets(const FinPoset& p);
std::vector<std::vector<std::size_t>> all_convex_sets(const FinPoset& p);
// All partial orders on the ids "0".."n-1" (labelled, not up to isomorphism).
std::vector<FinPoset> all_posets(std::size_t n);

}  // namespace gbp
