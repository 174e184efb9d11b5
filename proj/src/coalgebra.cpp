#include "gbp/coalgebra.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <sstream>

#include "gbp/error.hpp"
#include "json.hpp"

namespace gbp {

using json = nlohmann::json;

std::size_t System::state(std::string_view id) const {
  auto i = states->find(id);
  if (!i) throw Error(Errc::UnknownState, std::string(id));
  return *i;
}

std::size_t System::label_index(std::string_view l) const {
  auto it = std::lower_bound(labels.begin(), labels.end(), l,
                             [](const std::string& a, std::string_view b) { return a < b; });
  if (it == labels.end() || *it != l) throw Error(Errc::SchemaError, "unknown label '" + std::string(l) + "'");
  return static_cast<std::size_t>(it - labels.begin());
}

namespace {

std::string pair_str(const System& s, std::size_t x, std::size_t y) { return s.states->id(x) + " <= " + s.states->id(y); }

// Down-closure / convex generators of the LTS successor set, as (label, state) pairs.
bool lts_leq(const System& s, std::size_t x, std::size_t y, bool both_ways) {
  const FinPoset& p = *s.states;
  auto le = [&](const std::pair<std::size_t, std::size_t>& e, const std::pair<std::size_t, std::size_t>& f) {
    return e.first == f.first && p.leq(e.second, f.second);
  };
  return both_ways ? egli_milner(s.succ[x], s.succ[y], le) : hoare(s.succ[x], s.succ[y], le);
}

std::vector<std::string> ready_set(const System& s, std::size_t x) {
  std::vector<std::string> r;
  for (const auto& [l, t] : s.succ[x]) r.push_back(s.labels[l]);
  r.erase(std::unique(r.begin(), r.end()), r.end());
  return r;
}

}  // namespace

void check_monotone(const System& sys, SemKind kind) {
  const FinPoset& p = *sys.states;
  for (std::size_t x = 0; x < sys.size(); ++x)
    for (std::size_t y = 0; y < sys.size(); ++y) {
      if (x == y || !p.leq(x, y)) continue;
      bool ok = true;
      if (sys.kind == System::Kind::PTS) {
        auto prod = product_with_discrete(sys.labels, p);
        std::map<std::size_t, Rational> mx, my;
        for (const auto& [l, t, q] : sys.psucc[x]) mx[prod.index(l, t)] += q;
        for (const auto& [l, t, q] : sys.psucc[y]) my[prod.index(l, t)] += q;
        ok = sdist_leq_flow(SubDist::make(prod.poset, mx), SubDist::make(prod.poset, my));
      } else if (kind == SemKind::Sim) {
        ok = lts_leq(sys, x, y, false);
      } else if (kind == SemKind::ReadySim) {
        ok = lts_leq(sys, x, y, false) && ready_set(sys, x) == ready_set(sys, y);
      } else {
        ok = lts_leq(sys, x, y, true);
      }
      if (!ok) throw Error(Errc::NotMonotone, pair_str(sys, x, y) + " under " + sem_kind_name(kind));
    }
}

System make_system(System::Kind kind, const FinPoset& states, std::vector<std::string> labels,
                   const std::vector<Transition>& transitions, const Semantics* sem) {
  std::sort(labels.begin(), labels.end());
  labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
  if (labels.empty()) throw Error(Errc::EmptyLabelSet, "system has no labels");
  System s;
  s.kind = kind;
  s.states = share(states);
  s.labels = std::move(labels);
  s.succ.assign(s.size(), {});
  s.psucc.assign(s.size(), {});
  for (const auto& t : transitions) {
    const auto x = s.state(t.from), y = s.state(t.to), l = s.label_index(t.label);
    if (kind == System::Kind::LTS) {
      s.succ[x].emplace_back(l, y);
    } else {
      if (t.prob.sign() <= 0 || t.prob > Rational(1))
        throw Error(Errc::SchemaError, "probability " + t.prob.str() + " outside (0,1]");
      s.psucc[x].emplace_back(l, y, t.prob);
    }
  }
  for (std::size_t x = 0; x < s.size(); ++x) {
    std::sort(s.succ[x].begin(), s.succ[x].end());
    s.succ[x].erase(std::unique(s.succ[x].begin(), s.succ[x].end()), s.succ[x].end());
    if (kind == System::Kind::PTS) {
      // Merge repeated (label, target) entries; keeps the induced subdistribution.
      std::map<std::pair<std::size_t, std::size_t>, Rational> m;
      Rational mass;
      for (const auto& [l, y, q] : s.psucc[x]) {
        m[{l, y}] += q;
        mass += q;
      }
      if (mass > Rational(1)) throw Error(Errc::MassExceedsOne, "state " + s.states->id(x) + " has mass " + mass.str());
      s.psucc[x].clear();
      for (const auto& [k, q] : m) s.psucc[x].emplace_back(k.first, k.second, q);
    }
  }
  if (sem) {
    if ((sem->kind == SemKind::PTrace) != (kind == System::Kind::PTS))
      throw Error(Errc::SchemaError, std::string("semantics ") + sem_kind_name(sem->kind) + " does not fit system type");
    check_monotone(s, sem->kind);
  }
  return s;
}

System load_system(const std::string& text, const Semantics* sem) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(Errc::SchemaError, e.what());
  }
  auto need = [&](const json& o, const char* key) -> const json& {
    if (!o.is_object() || !o.contains(key)) throw Error(Errc::SchemaError, std::string("missing '") + key + "'");
    return o.at(key);
  };
  try {
    const std::string type = need(doc, "type").get<std::string>();
    System::Kind kind;
    if (type == "lts") kind = System::Kind::LTS;
    else if (type == "pts") kind = System::Kind::PTS;
    else throw Error(Errc::SchemaError, "type must be lts or pts");
    auto states = need(doc, "states").get<std::vector<std::string>>();
    std::vector<std::pair<std::string, std::string>> order;
    if (doc.contains("order"))
      for (const auto& pr : doc.at("order")) {
        if (!pr.is_array() || pr.size() != 2) throw Error(Errc::SchemaError, "order entries are [id,id]");
        order.emplace_back(pr[0].get<std::string>(), pr[1].get<std::string>());
      }
    auto labels = need(doc, "labels").get<std::vector<std::string>>();
    std::vector<Transition> ts;
    for (const auto& t : need(doc, "transitions")) {
      Transition tr{need(t, "from").get<std::string>(), need(t, "label").get<std::string>(),
                    need(t, "to").get<std::string>(), Rational(1)};
      if (kind == System::Kind::PTS) {
        const json& p = need(t, "prob");
        tr.prob = p.is_string() ? Rational::parse(p.get<std::string>()) : Rational(p.get<long>());
      }
      ts.push_back(std::move(tr));
    }
    FinPoset poset;
    try {
      poset = FinPoset::validate(states, order);
    } catch (const Error& e) {
      if (e.code() == Errc::UnknownElement) throw Error(Errc::SchemaError, e.what());
      throw;
    }
    return make_system(kind, poset, std::move(labels), ts, sem);
  } catch (const json::exception& e) {
    throw Error(Errc::SchemaError, e.what());
  }
}

System load_system_file(const std::string& path, const Semantics* sem) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::SchemaError, "cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return load_system(ss.str(), sem);
}

std::string system_to_json(const System& sys) {
  json doc;
  doc["type"] = sys.kind == System::Kind::LTS ? "lts" : "pts";
  doc["states"] = sys.states->elements();
  json order = json::array();
  for (std::size_t x = 0; x < sys.size(); ++x)
    for (std::size_t y = 0; y < sys.size(); ++y)
      if (sys.states->less(x, y)) order.push_back({sys.states->id(x), sys.states->id(y)});
  doc["order"] = order;
  doc["labels"] = sys.labels;
  json ts = json::array();
  for (std::size_t x = 0; x < sys.size(); ++x) {
    if (sys.kind == System::Kind::LTS)
      for (const auto& [l, y] : sys.succ[x])
        ts.push_back({{"from", sys.states->id(x)}, {"label", sys.labels[l]}, {"to", sys.states->id(y)}});
    else
      for (const auto& [l, y, q] : sys.psucc[x])
        ts.push_back({{"from", sys.states->id(x)}, {"label", sys.labels[l]}, {"to", sys.states->id(y)}, {"prob", q.str()}});
  }
  doc["transitions"] = ts;
  return doc.dump(2);
}

// ---------------------------------------------------------------- unfolding

Unfolder::Unfolder(Semantics sem) : sem_(std::move(sem)) {
  if (sem_.is_tree()) store_ = std::make_shared<TreeStore>(sem_);
}

std::uint32_t Unfolder::base_of(const System& sys) {
  auto it = bases_.find(&sys);
  if (it != bases_.end()) return it->second;
  auto id = store_->add_base(sys.states);
  bases_.emplace(&sys, id);
  return id;
}

NodeId Unfolder::gamma(const System& sys, std::size_t x, std::size_t n) {
  auto key = std::make_tuple(&sys, x, n);
  if (auto it = memo_.find(key); it != memo_.end()) return it->second;
  const auto bx = base_of(sys);
  NodeId r;
  if (n == 0) {
    r = store_->point(bx, x);
  } else {
    // alpha . gamma(x) in M_1 X, then M_1 gamma^(n-1), then mu^{1,n-1}.
    std::vector<Edge> es;
    for (const auto& [l, y] : sys.succ[x]) es.push_back({store_->label(sys.labels[l]), store_->point(bx, y)});
    NodeId one_step = store_->make_set(1, std::move(es));
    NodeId lifted = store_->relabel_leaves(one_step, [&](NodeId leaf) {
      return store_->embed(gamma(sys, store_->node(leaf).value, n - 1));
    });
    r = store_->graft(lifted, n - 1);
  }
  memo_.emplace(key, r);
  return r;
}

NodeId Unfolder::ready(const System& sys, std::size_t x, std::size_t n) {
  auto key = std::make_tuple(&sys, x, n);
  if (auto it = memo1_.find(key); it != memo1_.end()) return it->second;
  NodeId r;
  if (n == 0) {
    r = store_->star();
  } else if (sys.succ[x].empty()) {
    r = store_->make_set(n, {{store_->label(kStopLabel), store_->empty_below(n - 1)}});
  } else {
    const auto I = ready_set(sys, x);
    std::vector<Edge> es;
    for (const auto& [l, y] : sys.succ[x]) es.push_back({store_->label(ready_label(I, sys.labels[l])), ready(sys, y, n - 1)});
    r = store_->make_set(n, std::move(es));
  }
  memo1_.emplace(key, r);
  return r;
}

NodeId Unfolder::tree(const System& sys, std::size_t x, std::size_t n) {
  if (!store_) throw Error(Errc::IncompatibleLogic, "tree unfolding for ptrace");
  if (sys.kind != System::Kind::LTS) throw Error(Errc::SchemaError, "tree semantics need an LTS");
  if (x >= sys.size()) throw Error(Errc::UnknownState, std::to_string(x));
  if (sem_.kind == SemKind::ReadySim) return ready(sys, x, n);
  auto key = std::make_tuple(&sys, x, n);
  if (auto it = memo1_.find(key); it != memo1_.end()) return it->second;
  NodeId r = store_->map(gamma(sys, x, n), store_->one_base(), std::vector<std::size_t>(sys.size(), 0));
  memo1_.emplace(key, r);
  return r;
}

TraceDist Unfolder::gamma_trace(const System& sys, std::size_t x, std::size_t n) {
  auto key = std::make_tuple(&sys, x, n);
  if (auto it = tmemo_.find(key); it != tmemo_.end()) return it->second;
  TraceDist r;
  if (n == 0) {
    r = pt_unit(sys.states, x);
  } else {
    NestedTrace nt;
    nt.depth = 1;
    for (const auto& [l, y, q] : sys.psucc[x])
      nt.entries.emplace_back(Word{static_cast<std::uint32_t>(l)}, gamma_trace(sys, y, n - 1), q);
    if (nt.entries.empty()) {
      r.depth = n;
      r.base = sys.states;
    } else {
      r = pt_mult(nt);
    }
  }
  tmemo_.emplace(key, r);
  return r;
}

TraceDist Unfolder::trace(const System& sys, std::size_t x, std::size_t n) {
  if (sys.kind != System::Kind::PTS) throw Error(Errc::SchemaError, "ptrace needs a PTS");
  if (x >= sys.size()) throw Error(Errc::UnknownState, std::to_string(x));
  if (sys.labels != sem_.labels) throw Error(Errc::LabelMismatch, "system labels differ from semantics labels");
  auto one = share(FinPoset::one());
  return pt_map(MonotoneMap::constant(sys.states, one, 0), gamma_trace(sys, x, n));
}

Behaviour Unfolder::behaviour(const System& sys, std::size_t x, std::size_t n) {
  if (sem_.is_tree()) return Behaviour::of_tree(store_, tree(sys, x, n));
  return Behaviour::of_trace(sem_, trace(sys, x, n));
}

bool Unfolder::leq(const System& a, std::size_t x, const System& b, std::size_t y, std::size_t n) {
  if (sem_.is_tree()) return store_->leq(tree(a, x, n), tree(b, y, n));
  return pt_leq(trace(a, x, n), trace(b, y, n));
}

Behaviour n_step_behaviour(const Semantics& sem, const System& sys, std::string_view x, std::size_t n) {
  Unfolder u(sem);
  return u.behaviour(sys, sys.state(x), n);
}

std::size_t default_depth(const System& a, const System& b) { return a.size() * b.size(); }

RefinementVerdict refines(Unfolder& u, const System& a, std::size_t x, const System& b, std::size_t y, std::size_t N) {
  if (a.labels != b.labels) throw Error(Errc::LabelMismatch, "systems have different label sets");
  RefinementVerdict v;
  for (std::size_t n = 0; n <= N; ++n) {
    bool h = u.leq(a, x, b, y, n);
    v.holds.push_back(h);
    if (!h && !v.first_failure) v.first_failure = n;
  }
  return v;
}

RefinementVerdict refines(const Semantics& sem, const System& a, std::size_t x, const System& b, std::size_t y,
                          std::size_t N) {
  Unfolder u(sem);
  return refines(u, a, x, b, y, N);
}

// ---------------------------------------------------------------- oracles

std::vector<std::size_t> classical_bisim(const System& sys) {
  if (sys.kind != System::Kind::LTS) throw Error(Errc::SchemaError, "classical_bisim needs an LTS");
  if (!sys.states->is_discrete()) throw Error(Errc::NotDiscrete, "classical_bisim needs a discrete order");
  const std::size_t n = sys.size();
  std::vector<std::size_t> block(n, 0);
  std::size_t count = 1;
  for (;;) {
    std::map<std::pair<std::size_t, std::set<std::pair<std::size_t, std::size_t>>>, std::size_t> sig;
    std::vector<std::size_t> next(n);
    for (std::size_t x = 0; x < n; ++x) {
      std::set<std::pair<std::size_t, std::size_t>> s;
      for (const auto& [l, y] : sys.succ[x]) s.emplace(l, block[y]);
      auto [it, fresh] = sig.emplace(std::make_pair(block[x], std::move(s)), sig.size());
      next[x] = it->second;
    }
    block = std::move(next);
    if (sig.size() == count) break;
    count = sig.size();
  }
  return block;
}

std::vector<std::vector<bool>> classical_sim(const System& a, const System& b) {
  if (a.labels != b.labels) throw Error(Errc::LabelMismatch, "classical_sim");
  if (a.kind != System::Kind::LTS || b.kind != System::Kind::LTS) throw Error(Errc::SchemaError, "classical_sim needs LTS");
  // Successors read through the down-closure of the state order.
  auto closed = [](const System& s) {
    std::vector<std::vector<std::pair<std::size_t, std::size_t>>> out(s.size());
    for (std::size_t x = 0; x < s.size(); ++x) {
      for (const auto& [l, y] : s.succ[x])
        for (std::size_t z = 0; z < s.size(); ++z)
          if (s.states->leq(z, y)) out[x].emplace_back(l, z);
      std::sort(out[x].begin(), out[x].end());
      out[x].erase(std::unique(out[x].begin(), out[x].end()), out[x].end());
    }
    return out;
  };
  const auto sa = closed(a), sb = closed(b);
  std::vector<std::vector<bool>> R(a.size(), std::vector<bool>(b.size(), true));
  for (bool changed = true; changed;) {
    changed = false;
    for (std::size_t x = 0; x < a.size(); ++x)
      for (std::size_t y = 0; y < b.size(); ++y) {
        if (!R[x][y]) continue;
        for (const auto& [l, x2] : sa[x]) {
          bool matched = false;
          for (const auto& [m, y2] : sb[y])
            if (m == l && R[x2][y2]) { matched = true; break; }
          if (!matched) {
            R[x][y] = false;
            changed = true;
            break;
          }
        }
      }
  }
  return R;
}

std::map<Word, Rational> trace_dist(const System& sys, std::size_t x, std::size_t n) {
  if (sys.kind != System::Kind::PTS) throw Error(Errc::SchemaError, "trace_dist needs a PTS");
  if (x >= sys.size()) throw Error(Errc::UnknownState, std::to_string(x));
  std::map<Word, Rational> out;
  Word w;
  std::function<void(std::size_t, Rational)> walk = [&](std::size_t s, Rational p) {
    if (w.size() == n) {
      out[w] += p;
      return;
    }
    for (const auto& [l, y, q] : sys.psucc[s]) {
      w.push_back(static_cast<std::uint32_t>(l));
      walk(y, p * q);
      w.pop_back();
    }
  };
  walk(x, Rational(1));
  return out;
}

std::set<Word> lts_traces(const System& sys, std::size_t x, std::size_t n) {
  if (x >= sys.size()) throw Error(Errc::UnknownState, std::to_string(x));
  std::set<Word> out;
  Word w;
  std::function<void(std::size_t)> walk = [&](std::size_t s) {
    if (w.size() == n) {
      out.insert(w);
      return;
    }
    for (const auto& [l, y] : sys.succ[s]) {
      w.push_back(static_cast<std::uint32_t>(l));
      walk(y);
      w.pop_back();
    }
  };
  walk(x);
  return out;
}

System disjoint_union(const System& a, const System& b) {
  if (a.labels != b.labels || a.kind != b.kind) throw Error(Errc::LabelMismatch, "disjoint_union");
  std::vector<std::string> ids;
  std::vector<std::pair<std::string, std::string>> order;
  std::vector<Transition> ts;
  auto add = [&](const System& s, const std::string& pre) {
    for (std::size_t x = 0; x < s.size(); ++x) {
      ids.push_back(pre + s.states->id(x));
      for (std::size_t y = 0; y < s.size(); ++y)
        if (s.states->less(x, y)) order.emplace_back(pre + s.states->id(x), pre + s.states->id(y));
      for (const auto& [l, y] : s.succ[x]) ts.push_back({pre + s.states->id(x), s.labels[l], pre + s.states->id(y)});
      for (const auto& [l, y, q] : s.psucc[x]) ts.push_back({pre + s.states->id(x), s.labels[l], pre + s.states->id(y), q});
    }
  };
  add(a, "l.");
  add(b, "r.");
  return make_system(a.kind, FinPoset::validate(ids, order), a.labels, ts);
}

}  // namespace gbp
