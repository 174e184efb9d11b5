#include "gbp/poset.hpp"

#include <algorithm>
#include <set>

#include "gbp/error.hpp"

namespace gbp {

namespace {

void close_transitively(std::vector<unsigned char>& rel, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) rel[i * n + i] = 1;
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      if (rel[i * n + k])
        for (std::size_t j = 0; j < n; ++j)
          if (rel[k * n + j]) rel[i * n + j] = 1;
}

std::vector<std::string> sorted_unique(std::vector<std::string> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

}  // namespace

FinPoset FinPoset::from_relation(std::vector<std::string> ids, std::vector<unsigned char> rel) {
  const std::size_t n = ids.size();
  close_transitively(rel, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (rel[i * n + j] && rel[j * n + i])
        throw Error(Errc::NotAntisymmetric, ids[i] + " and " + ids[j]);
  FinPoset p;
  p.ids_ = std::move(ids);
  p.rel_ = std::move(rel);
  return p;
}

FinPoset FinPoset::validate(std::vector<std::string> elements,
                            const std::vector<std::pair<std::string, std::string>>& pairs) {
  auto ids = sorted_unique(std::move(elements));
  const std::size_t n = ids.size();
  auto idx = [&](const std::string& s) {
    auto it = std::lower_bound(ids.begin(), ids.end(), s);
    if (it == ids.end() || *it != s) throw Error(Errc::UnknownElement, s);
    return static_cast<std::size_t>(it - ids.begin());
  };
  std::vector<unsigned char> rel(n * n, 0);
  for (const auto& [a, b] : pairs) rel[idx(a) * n + idx(b)] = 1;
  return from_relation(std::move(ids), std::move(rel));
}

FinPoset FinPoset::discrete(std::vector<std::string> elements) { return validate(std::move(elements), {}); }

FinPoset FinPoset::chain(const std::vector<std::string>& elements) {
  std::vector<std::pair<std::string, std::string>> pairs;
  for (std::size_t i = 0; i + 1 < elements.size(); ++i) pairs.emplace_back(elements[i], elements[i + 1]);
  return validate(elements, pairs);
}

FinPoset FinPoset::one() { return discrete({"*"}); }

std::optional<std::size_t> FinPoset::find(std::string_view id) const {
  auto it = std::lower_bound(ids_.begin(), ids_.end(), id,
                             [](const std::string& a, std::string_view b) { return a < b; });
  if (it == ids_.end() || *it != id) return std::nullopt;
  return static_cast<std::size_t>(it - ids_.begin());
}

std::size_t FinPoset::index(std::string_view id) const {
  auto i = find(id);
  if (!i) throw Error(Errc::UnknownElement, std::string(id));
  return *i;
}

bool FinPoset::is_discrete() const {
  for (std::size_t i = 0; i < size(); ++i)
    for (std::size_t j = 0; j < size(); ++j)
      if (i != j && leq(i, j)) return false;
  return true;
}

MonotoneMap::MonotoneMap(PosetRef domain, PosetRef codomain, std::vector<std::size_t> graph)
    : dom_(std::move(domain)), cod_(std::move(codomain)), graph_(std::move(graph)) {
  if (graph_.size() != dom_->size()) throw Error(Errc::BaseMismatch, "map graph is not total");
  for (auto y : graph_)
    if (y >= cod_->size()) throw Error(Errc::UnknownElement, "map target out of range");
  for (std::size_t i = 0; i < dom_->size(); ++i)
    for (std::size_t j = 0; j < dom_->size(); ++j)
      if (dom_->leq(i, j) && !cod_->leq(graph_[i], graph_[j]))
        throw Error(Errc::NotMonotone, dom_->id(i) + " <= " + dom_->id(j));
}

MonotoneMap MonotoneMap::identity(PosetRef p) {
  std::vector<std::size_t> g(p->size());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = i;
  return MonotoneMap(p, p, std::move(g));
}

MonotoneMap MonotoneMap::constant(PosetRef domain, PosetRef codomain, std::size_t target) {
  std::vector<std::size_t> g(domain->size(), target);
  return MonotoneMap(std::move(domain), std::move(codomain), std::move(g));
}

MonotoneMap compose(const MonotoneMap& g, const MonotoneMap& f) {
  if (!(*f.codomain() == *g.domain())) throw Error(Errc::BaseMismatch, "compose");
  std::vector<std::size_t> h(f.domain()->size());
  for (std::size_t i = 0; i < h.size(); ++i) h[i] = g(f(i));
  return MonotoneMap(f.domain(), g.codomain(), std::move(h));
}

std::vector<std::size_t> indices_of(const FinPoset& p, const std::vector<std::string>& ids) {
  std::vector<std::size_t> out;
  for (const auto& s : ids) out.push_back(p.index(s));
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

static void check_range(const FinPoset& p, const std::vector<std::size_t>& s) {
  for (auto i : s)
    if (i >= p.size()) throw Error(Errc::UnknownElement, "index " + std::to_string(i));
}

DownSet down_closure(const PosetRef& p, const std::vector<std::size_t>& s) {
  check_range(*p, s);
  DownSet d{p, {}};
  for (std::size_t z = 0; z < p->size(); ++z)
    for (auto x : s)
      if (p->leq(z, x)) { d.members.push_back(z); break; }
  return d;
}

DownSet down_closure(const PosetRef& p, const std::vector<std::string>& s) {
  return down_closure(p, indices_of(*p, s));
}

ConvexSet convex_hull(const PosetRef& p, const std::vector<std::size_t>& s) {
  check_range(*p, s);
  ConvexSet c{p, {}};
  for (std::size_t z = 0; z < p->size(); ++z) {
    bool above = false, below = false;
    for (auto x : s) {
      above = above || p->leq(x, z);
      below = below || p->leq(z, x);
    }
    if (above && below) c.members.push_back(z);
  }
  return c;
}

ConvexSet convex_hull(const PosetRef& p, const std::vector<std::string>& s) {
  return convex_hull(p, indices_of(*p, s));
}

bool is_down_closed(const FinPoset& p, const std::vector<std::size_t>& s) {
  std::vector<char> in(p.size(), 0);
  for (auto x : s) in[x] = 1;
  for (auto x : s)
    for (std::size_t z = 0; z < p.size(); ++z)
      if (p.leq(z, x) && !in[z]) return false;
  return true;
}

bool is_convex(const FinPoset& p, const std::vector<std::size_t>& s) {
  std::vector<char> in(p.size(), 0);
  for (auto x : s) in[x] = 1;
  for (auto x : s)
    for (auto y : s)
      for (std::size_t z = 0; z < p.size(); ++z)
        if (p.leq(x, z) && p.leq(z, y) && !in[z]) return false;
  return true;
}

bool egli_milner_leq(const ConvexSet& a, const ConvexSet& b) {
  if (!(*a.base == *b.base)) throw Error(Errc::BaseMismatch, "egli_milner_leq");
  const FinPoset& p = *a.base;
  return egli_milner(a.members, b.members, [&](std::size_t x, std::size_t y) { return p.leq(x, y); });
}

bool downset_leq(const DownSet& a, const DownSet& b) {
  if (!(*a.base == *b.base)) throw Error(Errc::BaseMismatch, "downset_leq");
  return std::includes(b.members.begin(), b.members.end(), a.members.begin(), a.members.end());
}

Product product_with_discrete(const std::vector<std::string>& labels, const FinPoset& p) {
  std::vector<std::string> ids;
  std::vector<std::pair<std::size_t, std::size_t>> comps;
  for (std::size_t a = 0; a < labels.size(); ++a)
    for (std::size_t x = 0; x < p.size(); ++x) {
      ids.push_back(labels[a] + "," + p.id(x));
      comps.emplace_back(a, x);
    }
  std::vector<std::size_t> order(ids.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return ids[i] < ids[j]; });
  Product out;
  out.at.assign(labels.size(), std::vector<std::size_t>(p.size()));
  std::vector<std::string> sorted;
  for (std::size_t r = 0; r < order.size(); ++r) {
    sorted.push_back(ids[order[r]]);
    out.components.push_back(comps[order[r]]);
    out.at[comps[order[r]].first][comps[order[r]].second] = r;
  }
  const std::size_t n = sorted.size();
  std::vector<unsigned char> rel(n * n, 0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      auto [a, x] = out.components[i];
      auto [b, y] = out.components[j];
      rel[i * n + j] = (a == b && p.leq(x, y)) ? 1 : 0;
    }
  out.poset = share(FinPoset::from_relation(std::move(sorted), std::move(rel)));
  return out;
}

std::vector<std::vector<std::size_t>> all_down_sets(const FinPoset& p) {
  std::vector<std::vector<std::size_t>> out;
  const std::size_t n = p.size();
  for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
    std::vector<std::size_t> s;
    for (std::size_t i = 0; i < n; ++i)
      if (mask >> i & 1) s.push_back(i);
    if (is_down_closed(p, s)) out.push_back(std::move(s));
  }
  return out;
}

std::vector<std::vector<std::size_t>> all_convex_sets(const FinPoset& p) {
  std::vector<std::vector<std::size_t>> out;
  const std::size_t n = p.size();
  for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
    std::vector<std::size_t> s;
    for (std::size_t i = 0; i < n; ++i)
      if (mask >> i & 1) s.push_back(i);
    if (is_convex(p, s)) out.push_back(std::move(s));
  }
  return out;
}

std::vector<FinPoset> all_posets(std::size_t n) {
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < n; ++i) ids.push_back(std::to_string(i));
  std::sort(ids.begin(), ids.end());
  std::vector<std::pair<std::size_t, std::size_t>> off;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) off.emplace_back(i, j);
  std::vector<FinPoset> out;
  for (std::size_t mask = 0; mask < (std::size_t{1} << off.size()); ++mask) {
    std::vector<unsigned char> rel(n * n, 0);
    for (std::size_t i = 0; i < n; ++i) rel[i * n + i] = 1;
    for (std::size_t b = 0; b < off.size(); ++b)
      if (mask >> b & 1) rel[off[b].first * n + off[b].second] = 1;
    bool ok = true;
    for (std::size_t i = 0; i < n && ok; ++i)
      for (std::size_t j = 0; j < n && ok; ++j) {
        if (i != j && rel[i * n + j] && rel[j * n + i]) ok = false;
        for (std::size_t k = 0; k < n && ok; ++k)
          if (rel[i * n + j] && rel[j * n + k] && !rel[i * n + k]) ok = false;
      }
    if (ok) out.push_back(FinPoset::from_relation(ids, std::move(rel)));
  }
  return out;
}

}  // namespace gbp
