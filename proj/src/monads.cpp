#include "gbp/monads.hpp"

#include <algorithm>
#include <iomanip>
#include <set>
#include <sstream>

#include "gbp/error.hpp"

namespace gbp {

Semantics Semantics::make(SemKind kind, std::vector<std::string> labels) {
  std::sort(labels.begin(), labels.end());
  labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
  if (labels.empty()) throw Error(Errc::EmptyLabelSet, "semantics needs at least one label");
  return Semantics{kind, std::move(labels)};
}

const char* sem_kind_name(SemKind k) {
  switch (k) {
    case SemKind::Bisim: return "bisim";
    case SemKind::Sim: return "sim";
    case SemKind::ReadySim: return "readysim";
    case SemKind::Sync: return "sync";
    case SemKind::PTrace: return "ptrace";
  }
  return "?";
}

std::string Semantics::name() const { return sem_kind_name(kind); }

SemKind parse_sem_kind(std::string_view name) {
  for (SemKind k : {SemKind::Bisim, SemKind::Sim, SemKind::ReadySim, SemKind::Sync, SemKind::PTrace})
    if (name == sem_kind_name(k)) return k;
  throw Error(Errc::UnknownSymbol, "semantics '" + std::string(name) + "'");
}

std::size_t NodeHash::operator()(const Node& n) const {
  std::size_t h = static_cast<std::size_t>(n.kind) * 0x9e3779b97f4a7c15ULL;
  auto mix = [&](std::uint64_t v) { h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2); };
  mix(n.depth);
  mix(n.base);
  mix(n.value);
  for (const auto& e : n.edges) {
    mix(e.label);
    mix(e.child);
  }
  return h;
}

TreeStore::TreeStore(Semantics sem) : sem_(std::move(sem)) {
  if (!sem_.is_tree()) throw Error(Errc::IncompatibleLogic, "TreeStore needs a set-based semantics");
  bases_.push_back(share(FinPoset::one()));
  for (const auto& l : sem_.labels) label(l);
}

bool TreeStore::down_layers() const { return sem_.kind == SemKind::Sim || sem_.kind == SemKind::ReadySim; }

std::uint32_t TreeStore::add_base(PosetRef base) {
  bases_.push_back(std::move(base));
  return static_cast<std::uint32_t>(bases_.size() - 1);
}

std::uint32_t TreeStore::label(std::string_view name) {
  auto it = label_ids_.find(std::string(name));
  if (it != label_ids_.end()) return it->second;
  auto id = static_cast<std::uint32_t>(label_names_.size());
  label_names_.emplace_back(name);
  label_ids_.emplace(std::string(name), id);
  return id;
}

NodeId TreeStore::intern(Node n) {
  auto it = index_.find(n);
  if (it != index_.end()) return it->second;
  auto id = static_cast<NodeId>(nodes_.size());
  nodes_.push_back(n);
  index_.emplace(std::move(n), id);
  return id;
}

NodeId TreeStore::point(std::uint32_t base, std::size_t elem) {
  if (base >= bases_.size() || elem >= bases_[base]->size()) throw Error(Errc::UnknownElement, "point");
  Node n;
  n.kind = Node::Kind::Point;
  n.base = base;
  n.value = static_cast<std::uint32_t>(elem);
  return intern(std::move(n));
}

NodeId TreeStore::deadlock(std::size_t depth) {
  if (!sync()) throw Error(Errc::ShapeMismatch, "deadlock exists only for sync");
  Node n;
  n.kind = Node::Kind::Deadlock;
  n.depth = static_cast<std::uint32_t>(depth);
  return intern(std::move(n));
}

NodeId TreeStore::embed(NodeId inner) {
  Node n;
  n.kind = Node::Kind::Embed;
  n.value = inner;
  return intern(std::move(n));
}

NodeId TreeStore::make_set(std::size_t depth, std::vector<Edge> edges) {
  if (depth == 0) throw Error(Errc::ShapeMismatch, "sets live at depth >= 1");
  for (const auto& e : edges) {
    if (e.child >= nodes_.size() || nodes_[e.child].depth + 1 != depth)
      throw Error(Errc::ShapeMismatch, "child depth does not match set depth");
    if (e.label >= label_names_.size()) throw Error(Errc::UnknownSymbol, "label id");
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  if (sync()) {
    std::erase_if(edges, [&](const Edge& e) { return nodes_[e.child].kind == Node::Kind::Deadlock; });
    if (edges.empty()) return deadlock(depth);
  }
  std::vector<Edge> keep;
  const bool down = down_layers();
  for (std::size_t i = 0; i < edges.size(); ++i) {
    bool has_above = false, has_below = false;
    for (std::size_t j = 0; j < edges.size(); ++j) {
      if (i == j || edges[i].label != edges[j].label) continue;
      if (!has_above && leq(edges[i].child, edges[j].child)) has_above = true;
      if (!down && !has_below && leq(edges[j].child, edges[i].child)) has_below = true;
    }
    if (down ? !has_above : (!has_above || !has_below)) keep.push_back(edges[i]);
  }
  Node n;
  n.kind = Node::Kind::Set;
  n.depth = static_cast<std::uint32_t>(depth);
  n.edges = std::move(keep);
  return intern(std::move(n));
}

NodeId TreeStore::empty_below(std::size_t depth) {
  if (depth == 0) return star();
  if (sync()) throw Error(Errc::ShapeMismatch, "no least element for sync");
  return make_set(depth, {});
}

bool TreeStore::leq(NodeId a, NodeId b) {
  if (a == b) return true;
  const Node& x = nodes_[a];
  const Node& y = nodes_[b];
  if (x.depth != y.depth) throw Error(Errc::DepthMismatch, "beh_leq at depths " + std::to_string(x.depth) +
                                                                " and " + std::to_string(y.depth));
  const std::uint64_t key = (static_cast<std::uint64_t>(a) << 32) | b;
  if (auto it = leq_memo_.find(key); it != leq_memo_.end()) return it->second;
  bool r = false;
  if (x.kind != y.kind) {
    r = false;
  } else {
    switch (x.kind) {
      case Node::Kind::Point:
        r = x.base == y.base && bases_[x.base]->leq(x.value, y.value);
        break;
      case Node::Kind::Embed:
        r = leq(x.value, y.value);
        break;
      case Node::Kind::Deadlock:
        r = false;
        break;
      case Node::Kind::Set: {
        auto le = [&](const Edge& e, const Edge& f) { return edge_leq(e, f); };
        r = down_layers() ? hoare(x.edges, y.edges, le) : egli_milner(x.edges, y.edges, le);
        break;
      }
    }
  }
  leq_memo_[key] = r;
  return r;
}

bool TreeStore::member(NodeId set, const Edge& e) {
  const Node& s = nodes_[set];
  if (s.kind != Node::Kind::Set) return false;
  bool below = false, above = false;
  for (const auto& f : s.edges) {
    if (edge_leq(e, f)) above = true;
    if (edge_leq(f, e)) below = true;
  }
  return down_layers() ? above : (above && below);
}

NodeId TreeStore::relabel_leaves(NodeId b, const std::function<NodeId(NodeId)>& leaf) {
  std::unordered_map<NodeId, NodeId> memo;
  std::function<NodeId(NodeId)> go = [&](NodeId id) -> NodeId {
    if (auto it = memo.find(id); it != memo.end()) return it->second;
    const Node n = nodes_[id];
    NodeId r = id;
    switch (n.kind) {
      case Node::Kind::Point:
      case Node::Kind::Embed:
        r = leaf(id);
        break;
      case Node::Kind::Deadlock:
        r = id;
        break;
      case Node::Kind::Set: {
        std::vector<Edge> es;
        for (const auto& e : n.edges) es.push_back({e.label, go(e.child)});
        r = make_set(n.depth, std::move(es));
        break;
      }
    }
    memo.emplace(id, r);
    return r;
  };
  return go(b);
}

NodeId TreeStore::graft(NodeId nested, std::optional<std::size_t> k) {
  std::function<void(NodeId)> scan = [&](NodeId id) {
    if (k) return;
    const Node& n = nodes_[id];
    if (n.kind == Node::Kind::Embed) k = nodes_[n.value].depth;
    if (n.kind == Node::Kind::Point) throw Error(Errc::ShapeMismatch, "graft expects embedded leaves");
    if (n.kind == Node::Kind::Set)
      for (const auto& e : n.edges) scan(e.child);
  };
  scan(nested);
  const std::size_t kk = k.value_or(0);
  std::unordered_map<NodeId, NodeId> memo;
  std::function<NodeId(NodeId)> go = [&](NodeId id) -> NodeId {
    if (auto it = memo.find(id); it != memo.end()) return it->second;
    const Node n = nodes_[id];
    NodeId r = id;
    switch (n.kind) {
      case Node::Kind::Embed:
        if (nodes_[n.value].depth != kk) throw Error(Errc::ShapeMismatch, "embedded leaves of mixed depth");
        r = n.value;
        break;
      case Node::Kind::Point:
        throw Error(Errc::ShapeMismatch, "graft expects embedded leaves");
      case Node::Kind::Deadlock:
        r = deadlock(n.depth + kk);
        break;
      case Node::Kind::Set: {
        std::vector<Edge> es;
        for (const auto& e : n.edges) es.push_back({e.label, go(e.child)});
        r = make_set(n.depth + kk, std::move(es));
        break;
      }
    }
    memo.emplace(id, r);
    return r;
  };
  return go(nested);
}

NodeId TreeStore::map(NodeId b, std::uint32_t target_base, const std::vector<std::size_t>& f) {
  return relabel_leaves(b, [&](NodeId leaf) {
    const Node& n = nodes_[leaf];
    if (n.kind != Node::Kind::Point) throw Error(Errc::ShapeMismatch, "map expects base-element leaves");
    if (n.value >= f.size()) throw Error(Errc::BaseMismatch, "map domain");
    return point(target_base, f[n.value]);
  });
}

std::string TreeStore::show(NodeId id) const {
  const Node& n = nodes_[id];
  switch (n.kind) {
    case Node::Kind::Point:
      return bases_[n.base]->id(n.value);
    case Node::Kind::Embed:
      return "[" + show(n.value) + "]";
    case Node::Kind::Deadlock:
      return "0";
    case Node::Kind::Set: {
      std::vector<std::string> parts;
      for (const auto& e : n.edges) parts.push_back(label_names_[e.label] + "." + show(e.child));
      std::sort(parts.begin(), parts.end());
      std::string out = "{";
      for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? ", " : "") + parts[i];
      return out + "}";
    }
  }
  return "?";
}

// ---------------------------------------------------------------- PTrace

Rational TraceDist::mass() const {
  Rational m;
  for (const auto& [k, w] : weights) m += w;
  return m;
}

static std::string word_str(const Word& w, const std::vector<std::string>& labels) {
  if (w.empty()) return "ε";
  bool short_labels = true;
  for (auto l : w) short_labels = short_labels && labels[l].size() == 1;
  std::string out;
  for (std::size_t i = 0; i < w.size(); ++i) out += (i && !short_labels ? "." : "") + labels[w[i]];
  return out;
}

std::string TraceDist::show(const std::vector<std::string>& labels) const {
  if (weights.empty()) return "0";
  std::string out;
  const bool trivial_base = base && base->size() == 1;
  for (const auto& [k, w] : weights) {
    if (!out.empty()) out += " + ";
    out += w.str() + " " + word_str(k.first, labels);
    if (!trivial_base) out += "." + base->id(k.second);
  }
  return out;
}

TraceDist pt_unit(const PosetRef& base, std::size_t x) {
  if (x >= base->size()) throw Error(Errc::UnknownElement, "pt_unit");
  TraceDist d;
  d.base = base;
  d.weights[{Word{}, x}] = Rational(1);
  return d;
}

TraceDist pt_mult(const NestedTrace& nested) {
  TraceDist out;
  std::optional<std::size_t> k;
  Rational outer;
  for (const auto& [w, inner, p] : nested.entries) {
    if (w.size() != nested.depth) throw Error(Errc::ShapeMismatch, "outer word length");
    if (k && *k != inner.depth) throw Error(Errc::ShapeMismatch, "inner depths differ");
    k = inner.depth;
    if (out.base && !(*out.base == *inner.base)) throw Error(Errc::BaseMismatch, "pt_mult");
    out.base = inner.base;
    outer += p;
    for (const auto& [key, q] : inner.weights) {
      Word ww = w;
      ww.insert(ww.end(), key.first.begin(), key.first.end());
      out.weights[{ww, key.second}] += p * q;
    }
  }
  if (outer > Rational(1)) throw Error(Errc::MassExceedsOne, outer.str());
  out.depth = nested.depth + k.value_or(0);
  std::erase_if(out.weights, [](const auto& kv) { return kv.second.is_zero(); });
  return out;
}

SubDist pt_as_subdist(const TraceDist& d, const PosetRef& poset,
                      const std::map<std::pair<Word, std::size_t>, std::size_t>& index) {
  std::map<std::size_t, Rational> w;
  for (const auto& [k, p] : d.weights) w[index.at(k)] += p;
  return SubDist::make(poset, std::move(w));
}

bool pt_leq(const TraceDist& a, const TraceDist& b) {
  if (a.depth != b.depth) throw Error(Errc::DepthMismatch, "pt_leq");
  if (a.weights.empty()) return true;
  if (b.weights.empty()) return false;
  if (!(*a.base == *b.base)) throw Error(Errc::BaseMismatch, "pt_leq");
  std::map<std::pair<Word, std::size_t>, std::size_t> index;
  for (const auto& [k, w] : a.weights) index.emplace(k, 0);
  for (const auto& [k, w] : b.weights) index.emplace(k, 0);
  std::vector<std::pair<Word, std::size_t>> keys;
  for (auto& [k, i] : index) {
    i = keys.size();
    keys.push_back(k);
  }
  const std::size_t n = keys.size();
  const int width = static_cast<int>(std::to_string(n).size());
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < n; ++i) {
    std::ostringstream os;
    os << std::setw(width) << std::setfill('0') << i;
    ids.push_back(os.str());
  }
  std::vector<unsigned char> rel(n * n, 0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      rel[i * n + j] = (keys[i].first == keys[j].first && a.base->leq(keys[i].second, keys[j].second)) ? 1 : 0;
  auto poset = share(FinPoset::from_relation(std::move(ids), std::move(rel)));
  return sdist_leq_flow(pt_as_subdist(a, poset, index), pt_as_subdist(b, poset, index));
}

TraceDist pt_map(const MonotoneMap& f, const TraceDist& d) {
  if (d.base && !(*f.domain() == *d.base)) throw Error(Errc::BaseMismatch, "pt_map");
  TraceDist out;
  out.depth = d.depth;
  out.base = f.codomain();
  for (const auto& [k, w] : d.weights) out.weights[{k.first, f(k.second)}] += w;
  return out;
}

// ---------------------------------------------------------------- Behaviour

Behaviour Behaviour::of_tree(std::shared_ptr<TreeStore> store, NodeId id) {
  Behaviour b;
  b.sem_ = store->semantics();
  b.store_ = std::move(store);
  b.id_ = id;
  return b;
}

Behaviour Behaviour::of_trace(Semantics sem, TraceDist d) {
  Behaviour b;
  b.sem_ = std::move(sem);
  b.trace_ = std::move(d);
  return b;
}

const Semantics& Behaviour::semantics() const { return sem_; }

std::size_t Behaviour::depth() const { return store_ ? store_->depth(id_) : trace_.depth; }

std::string Behaviour::str() const { return store_ ? store_->show(id_) : trace_.show(sem_.labels); }

bool operator==(const Behaviour& a, const Behaviour& b) {
  if (a.is_trace() != b.is_trace()) return false;
  if (a.is_trace()) return a.trace_ == b.trace_;
  return a.store_ == b.store_ && a.id_ == b.id_;
}

Behaviour m_unit(const Semantics& sem, const std::shared_ptr<TreeStore>& store, std::uint32_t base, std::size_t x) {
  if (!sem.is_tree()) throw Error(Errc::IncompatibleLogic, "m_unit on a tree store");
  return Behaviour::of_tree(store, store->point(base, x));
}

Behaviour m_unit_trace(const Semantics& sem, const PosetRef& base, std::size_t x) {
  return Behaviour::of_trace(sem, pt_unit(base, x));
}

bool beh_leq(const Behaviour& a, const Behaviour& b) {
  if (a.semantics().kind != b.semantics().kind) throw Error(Errc::BaseMismatch, "semantics differ");
  if (a.depth() != b.depth()) throw Error(Errc::DepthMismatch, "beh_leq");
  if (a.is_trace()) return pt_leq(a.trace(), b.trace());
  if (a.store() != b.store()) throw Error(Errc::BaseMismatch, "behaviours from different stores");
  return a.store()->leq(a.node(), b.node());
}

Behaviour m_mult(const Behaviour& nested) {
  if (nested.is_trace()) throw Error(Errc::ShapeMismatch, "use the NestedTrace overload");
  return Behaviour::of_tree(nested.store(), nested.store()->graft(nested.node()));
}

Behaviour m_mult(const Semantics& sem, const NestedTrace& nested) { return Behaviour::of_trace(sem, pt_mult(nested)); }

Behaviour m_map(const MonotoneMap& f, std::uint32_t target_base, const Behaviour& b) {
  if (b.is_trace()) return Behaviour::of_trace(b.semantics(), pt_map(f, b.trace()));
  return Behaviour::of_tree(b.store(), b.store()->map(b.node(), target_base, f.graph()));
}

// ---------------------------------------------------------------- enumeration

std::string ready_label(const std::vector<std::string>& ready, const std::string& action) {
  std::string s = "{";
  for (std::size_t i = 0; i < ready.size(); ++i) s += (i ? "," : "") + ready[i];
  return s + "}" + action;
}

std::vector<Edge> candidate_edges(TreeStore& store, const std::vector<NodeId>& carrier, std::size_t d) {
  const auto& labels = store.semantics().labels;
  std::vector<std::uint32_t> lids;
  if (store.semantics().kind == SemKind::ReadySim) {
    const std::size_t m = labels.size();
    for (std::size_t mask = 0; mask < (std::size_t{1} << m); ++mask) {
      std::vector<std::string> ready;
      for (std::size_t i = 0; i < m; ++i)
        if (mask >> i & 1) ready.push_back(labels[i]);
      for (const auto& a : labels) lids.push_back(store.label(ready_label(ready, a)));
    }
  } else {
    for (const auto& a : labels) lids.push_back(store.label(a));
  }
  std::vector<Edge> out;
  for (auto l : lids)
    for (auto t : carrier)
      if (!store.is_deadlock(t)) out.push_back({l, t});
  if (store.semantics().kind == SemKind::ReadySim)
    out.push_back({store.label(kStopLabel), store.empty_below(d)});
  return out;
}

bool for_each_layer(TreeStore& store, const std::vector<Edge>& cands, std::size_t depth,
                    const std::function<bool(NodeId)>& visit) {
  const bool down = store.down_layers();
  // Generator sets: antichains (down layers) or sets without a strict 3-chain (convex layers).
  std::vector<std::size_t> chosen;
  bool go_on = true;
  std::function<void(std::size_t)> rec = [&](std::size_t i) {
    if (!go_on) return;
    if (i == cands.size()) {
      std::vector<Edge> es;
      for (auto c : chosen) es.push_back(cands[c]);
      go_on = visit(store.make_set(depth, std::move(es)));
      return;
    }
    rec(i + 1);
    const Edge& e = cands[i];
    bool ok = true;
    for (std::size_t a = 0; a < chosen.size() && ok; ++a) {
      const Edge& f = cands[chosen[a]];
      const bool fe = store.edge_leq(f, e), ef = store.edge_leq(e, f);
      if (down) {
        ok = !fe && !ef;
      } else {
        for (std::size_t b = 0; b < chosen.size() && ok; ++b) {
          const Edge& g = cands[chosen[b]];
          if (a == b) continue;
          if (store.edge_leq(f, g) && store.edge_leq(g, e)) ok = false;
          if (fe && store.edge_leq(e, g)) ok = false;
          if (ef && store.edge_leq(f, g)) ok = false;
        }
      }
    }
    if (ok) {
      chosen.push_back(i);
      rec(i + 1);
      chosen.pop_back();
    }
  };
  rec(0);
  return go_on;
}

std::vector<NodeId> enumerate_mn1(TreeStore& store, std::size_t n, std::size_t cap) {
  std::vector<NodeId> level{store.star()};
  if (store.sync()) level.push_back(store.deadlock(0));
  for (std::size_t d = 0; d < n; ++d) {
    std::vector<NodeId> next;
    std::set<NodeId> seen;
    for_each_layer(store, candidate_edges(store, level, d), d + 1, [&](NodeId id) {
      if (seen.insert(id).second) {
        next.push_back(id);
        if (next.size() > cap)
          throw Error(Errc::CarrierTooLarge, "M_" + std::to_string(d + 1) + "1 exceeds " + std::to_string(cap));
      }
      return true;
    });
    level = std::move(next);
  }
  return level;
}

M1Algebra canonical_m1(const Semantics& sem, std::size_t n, std::size_t cap) {
  M1Algebra alg;
  alg.sem = sem;
  alg.n = n;
  if (!sem.is_tree()) return alg;
  alg.store = std::make_shared<TreeStore>(sem);
  alg.a0 = enumerate_mn1(*alg.store, n, cap);
  alg.a1 = enumerate_mn1(*alg.store, n + 1, cap);
  return alg;
}

}  // namespace gbp
