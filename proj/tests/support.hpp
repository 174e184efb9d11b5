#pragma once

// Random systems and subdistributions shared by the unit, acceptance and bench targets.

#include <functional>
#include <set>
#include <random>
#include <string>
#include <vector>

#include "gbp/coalgebra.hpp"
#include "gbp/error.hpp"
#include "gbp/monads.hpp"
#include "gbp/sdist.hpp"

namespace gbp::testing {

inline std::vector<std::string> state_names(std::size_t n, const std::string& prefix = "s") {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(prefix + std::to_string(i));
  return out;
}

// Discrete LTS with 1..max_states states; each (state, label, target) edge present with probability p.
inline System random_lts(std::mt19937_64& rng, std::size_t max_states, const std::vector<std::string>& labels,
                         double p = 0.35) {
  const std::size_t n = std::uniform_int_distribution<std::size_t>(1, max_states)(rng);
  const auto names = state_names(n);
  std::bernoulli_distribution edge(p);
  std::vector<Transition> ts;
  for (const auto& s : names)
    for (const auto& a : labels)
      for (const auto& t : names)
        if (edge(rng)) ts.push_back({s, a, t});
  return make_system(System::Kind::LTS, FinPoset::discrete(names), labels, ts);
}

// Discrete PTS; outgoing mass per state is a random multiple of 1/q (q <= max_den) at most 1.
inline System random_pts(std::mt19937_64& rng, std::size_t max_states, const std::vector<std::string>& labels,
                         long max_den = 6) {
  const std::size_t n = std::uniform_int_distribution<std::size_t>(1, max_states)(rng);
  const auto names = state_names(n);
  std::vector<Transition> ts;
  for (const auto& s : names) {
    const long q = std::uniform_int_distribution<long>(1, max_den)(rng);
    long left = q;
    const std::size_t k = std::uniform_int_distribution<std::size_t>(0, 3)(rng);
    for (std::size_t i = 0; i < k && left > 0; ++i) {
      const long c = std::uniform_int_distribution<long>(1, left)(rng);
      left -= c;
      const auto& a = labels[std::uniform_int_distribution<std::size_t>(0, labels.size() - 1)(rng)];
      const auto& t = names[std::uniform_int_distribution<std::size_t>(0, n - 1)(rng)];
      ts.push_back({s, a, t, Rational(c, q)});
    }
  }
  return make_system(System::Kind::PTS, FinPoset::discrete(names), labels, ts);
}

inline SubDist random_subdist(std::mt19937_64& rng, const PosetRef& base, std::size_t max_support, long max_den) {
  const long q = std::uniform_int_distribution<long>(1, max_den)(rng);
  long left = q;
  std::map<std::size_t, Rational> w;
  const std::size_t k = std::uniform_int_distribution<std::size_t>(0, max_support)(rng);
  for (std::size_t i = 0; i < k && left > 0; ++i) {
    const long c = std::uniform_int_distribution<long>(1, left)(rng);
    left -= c;
    w[std::uniform_int_distribution<std::size_t>(0, base->size() - 1)(rng)] += Rational(c, q);
  }
  return SubDist::make(base, std::move(w));
}

// Label ids a tree store uses for its layers (ready-simulation labels included).
inline std::vector<std::uint32_t> layer_labels(TreeStore& store) {
  candidate_edges(store, {}, 0);
  std::vector<std::uint32_t> out;
  for (std::uint32_t l = 0; l < store.label_count(); ++l) out.push_back(l);
  return out;
}

// Random depth-`depth` tree whose depth-0 leaves come from `leaf`; up to 3 edges per layer.
inline NodeId random_tree(std::mt19937_64& rng, TreeStore& store, std::size_t depth,
                          const std::function<NodeId()>& leaf) {
  if (depth == 0) {
    if (store.sync() && std::bernoulli_distribution(0.1)(rng)) return store.deadlock(0);
    return leaf();
  }
  const auto labels = layer_labels(store);
  std::vector<Edge> es;
  const std::size_t k = std::uniform_int_distribution<std::size_t>(0, 3)(rng);
  for (std::size_t i = 0; i < k; ++i) {
    const auto l = labels[std::uniform_int_distribution<std::size_t>(0, labels.size() - 1)(rng)];
    es.push_back({l, random_tree(rng, store, depth - 1, leaf)});
  }
  if (store.sync() && es.empty()) return store.deadlock(depth);
  return store.make_set(depth, std::move(es));
}

inline NodeId random_tree_over(std::mt19937_64& rng, TreeStore& store, std::size_t depth, std::uint32_t base) {
  const std::size_t n = store.base(base)->size();
  return random_tree(rng, store, depth, [&] {
    return store.point(base, std::uniform_int_distribution<std::size_t>(0, n - 1)(rng));
  });
}

inline Word random_word(std::mt19937_64& rng, std::size_t labels, std::size_t len) {
  Word w;
  for (std::size_t i = 0; i < len; ++i)
    w.push_back(static_cast<std::uint32_t>(std::uniform_int_distribution<std::size_t>(0, labels - 1)(rng)));
  return w;
}

// Random trace subdistribution with up to 3 entries and denominators up to max_den.
inline TraceDist random_trace_dist(std::mt19937_64& rng, const PosetRef& base, std::size_t labels,
                                   std::size_t depth, long max_den = 6) {
  TraceDist d;
  d.depth = depth;
  d.base = base;
  const long q = std::uniform_int_distribution<long>(1, max_den)(rng);
  long left = q;
  const std::size_t k = std::uniform_int_distribution<std::size_t>(0, 3)(rng);
  for (std::size_t i = 0; i < k && left > 0; ++i) {
    const long c = std::uniform_int_distribution<long>(1, left)(rng);
    left -= c;
    const auto x = std::uniform_int_distribution<std::size_t>(0, base->size() - 1)(rng);
    d.weights[{random_word(rng, labels, depth), x}] += Rational(c, q);
  }
  return d;
}

struct LawReport {
  std::size_t checked = 0;
  std::size_t failures = 0;
  std::string first;

  void record(bool ok, const std::string& what) {
    ++checked;
    if (ok) return;
    if (failures++ == 0) first = what;
  }
};

// Unit, associativity and naturality of graft on `samples` random nestings over a 2-chain.
inline LawReport tree_monad_laws(const Semantics& sem, std::size_t samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  TreeStore store(sem);
  const auto X = store.add_base(share(FinPoset::chain({"x", "y"})));
  const auto Y = store.add_base(share(FinPoset::chain({"u", "v", "w"})));
  const std::vector<std::size_t> f{0, 2};
  std::uniform_int_distribution<std::size_t> depth(0, 2);
  LawReport rep;
  for (std::size_t i = 0; i < samples; ++i) {
    const std::size_t n = depth(rng), k = depth(rng), m = depth(rng);
    const NodeId b = random_tree_over(rng, store, n, X);
    rep.record(store.graft(store.relabel_leaves(b, [&](NodeId l) { return store.embed(l); }), 0) == b,
               "left unit at " + store.show(b));
    rep.record(store.graft(store.embed(b), n) == b, "right unit at " + store.show(b));

    const NodeId t = random_tree(rng, store, n, [&] {
      return store.embed(random_tree(rng, store, k, [&] { return store.embed(random_tree_over(rng, store, m, X)); }));
    });
    const NodeId outer_first = store.graft(store.graft(t, k), m);
    const NodeId inner_first = store.graft(
        store.relabel_leaves(t, [&](NodeId l) { return store.embed(store.graft(store.node(l).value, m)); }), k + m);
    rep.record(outer_first == inner_first, "associativity at " + store.show(t));

    const NodeId s = random_tree(rng, store, n, [&] { return store.embed(random_tree_over(rng, store, k, X)); });
    const NodeId mapped_inner = store.graft(
        store.relabel_leaves(s, [&](NodeId l) { return store.embed(store.map(store.node(l).value, Y, f)); }), k);
    rep.record(mapped_inner == store.map(store.graft(s, k), Y, f), "naturality at " + store.show(s));
  }
  return rep;
}

// The same laws for trace subdistributions; nestings are kept nonempty so inner depths are known.
inline LawReport trace_monad_laws(const Semantics& sem, std::size_t samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const auto X = share(FinPoset::chain({"x", "y"}));
  const auto Y = share(FinPoset::chain({"u", "v", "w"}));
  const MonotoneMap f(X, Y, {0, 2});
  const std::size_t L = sem.labels.size();
  std::uniform_int_distribution<std::size_t> depth(0, 2);
  auto weights = [&](std::size_t parts) {
    const long q = std::uniform_int_distribution<long>(static_cast<long>(parts), 6)(rng);
    long left = q;
    std::vector<Rational> w;
    for (std::size_t i = 0; i < parts; ++i) {
      const long c = std::uniform_int_distribution<long>(1, left - static_cast<long>(parts - i - 1))(rng);
      left -= c;
      w.push_back(Rational(c, q));
    }
    return w;
  };
  auto nest = [&](std::size_t n, std::size_t k) {
    NestedTrace t{n, {}};
    const std::size_t parts = std::uniform_int_distribution<std::size_t>(1, 3)(rng);
    for (const auto& p : weights(parts)) t.entries.emplace_back(random_word(rng, L, n), random_trace_dist(rng, X, L, k), p);
    return t;
  };
  LawReport rep;
  for (std::size_t i = 0; i < samples; ++i) {
    const std::size_t n = depth(rng), k = depth(rng), m = depth(rng);
    const TraceDist d = random_trace_dist(rng, X, L, n);
    rep.record(pt_mult(NestedTrace{0, {{Word{}, d, Rational(1)}}}) == d, "left unit at " + d.show(sem.labels));
    NestedTrace units{n, {}};
    for (const auto& [key, p] : d.weights) units.entries.emplace_back(key.first, pt_unit(X, key.second), p);
    if (!units.entries.empty()) rep.record(pt_mult(units) == d, "right unit at " + d.show(sem.labels));

    // Three layers: outer words of length n over middle nestings of depth k over depth-m inner.
    std::vector<std::tuple<Word, NestedTrace, Rational>> outer;
    for (const auto& p : weights(std::uniform_int_distribution<std::size_t>(1, 2)(rng)))
      outer.emplace_back(random_word(rng, L, n), nest(k, m), p);
    NestedTrace inner_first{n, {}}, outer_first{n + k, {}};
    for (const auto& [w, mid, p] : outer) {
      inner_first.entries.emplace_back(w, pt_mult(mid), p);
      for (const auto& [w2, inner, q] : mid.entries) {
        Word ww = w;
        ww.insert(ww.end(), w2.begin(), w2.end());
        outer_first.entries.emplace_back(ww, inner, p * q);
      }
    }
    rep.record(pt_mult(inner_first) == pt_mult(outer_first), "associativity");

    NestedTrace s = nest(n, k), s_mapped{n, {}};
    for (const auto& [w, inner, p] : s.entries) s_mapped.entries.emplace_back(w, pt_map(f, inner), p);
    rep.record(pt_mult(s_mapped) == pt_map(f, pt_mult(s)), "naturality");
  }
  return rep;
}

// Greedy antichain among candidate edges: the next layer has at least 2^width elements.
inline std::size_t antichain_width(TreeStore& store, const std::vector<Edge>& cands) {
  std::vector<Edge> chain;
  for (const auto& e : cands) {
    bool free = true;
    for (const auto& f : chain) free = free && !store.edge_leq(e, f) && !store.edge_leq(f, e);
    if (free) chain.push_back(e);
  }
  return chain.size();
}

inline std::size_t carrier_width(TreeStore& store, std::size_t n, std::size_t cap) {
  if (n == 0) return store.sync() ? 1 : 0;
  const auto below = enumerate_mn1(store, n - 1, cap);
  return antichain_width(store, candidate_edges(store, below, n - 1));
}

struct SurjectivityResult {
  bool feasible = true;     // false: a carrier has at least 2^width elements, beyond the cap
  std::size_t width = 0;
  std::size_t target = 0;   // |M_{n+k} 1|
  std::size_t source = 0;   // |M_n M_k 1|
  std::size_t missed = 0;   // target elements outside the image
};

// Enumerates M_n(M_k 1) with embedded leaves and checks that grafting hits all of M_{n+k} 1.
inline SurjectivityResult check_mult_surjective(const Semantics& sem, std::size_t n, std::size_t k,
                                                std::size_t cap) {
  TreeStore store(sem);
  SurjectivityResult r;
  auto too_wide = [&](std::size_t w) {
    if (w < 64 && (std::size_t{1} << w) <= cap) return false;
    r.feasible = false;
    r.width = w;
    return true;
  };
  if (too_wide(carrier_width(store, n + k, cap))) return r;
  const auto target = enumerate_mn1(store, n + k, cap);
  std::vector<NodeId> level;
  for (auto b : enumerate_mn1(store, k, cap)) level.push_back(store.embed(b));
  if (store.sync()) level.push_back(store.deadlock(0));
  for (std::size_t d = 0; d < n; ++d) {
    const auto cands = candidate_edges(store, level, d);
    if (too_wide(antichain_width(store, cands))) return r;
    std::vector<NodeId> next;
    std::set<NodeId> seen;
    for_each_layer(store, cands, d + 1, [&](NodeId id) {
      if (seen.insert(id).second) next.push_back(id);
      if (next.size() > cap) throw Error(Errc::CarrierTooLarge, "source carrier");
      return true;
    });
    level = std::move(next);
  }
  std::set<NodeId> image;
  for (auto s : level) image.insert(store.graft(s, k));
  r.target = target.size();
  r.source = level.size();
  for (auto t : target) r.missed += !image.count(t);
  return r;
}

}  // namespace gbp::testing
