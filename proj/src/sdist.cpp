#include "gbp/sdist.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <set>
#include <sstream>

#include "gbp/error.hpp"

namespace gbp {

namespace {

void require_same_base(const PosetRef& a, const PosetRef& b, const char* what) {
  if (a != b && !(*a == *b)) throw Error(Errc::BaseMismatch, what);
}

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

SubDist SubDist::make(PosetRef base, std::map<std::size_t, Rational> weights) {
  SubDist d{std::move(base), {}};
  Rational total;
  for (auto& [x, w] : weights) {
    if (x >= d.base->size()) throw Error(Errc::UnknownElement, "subdist support");
    if (w.sign() < 0) throw Error(Errc::InvalidPartition, "negative weight " + w.str());
    if (w.is_zero()) continue;
    total += w;
    d.weights.emplace(x, w);
  }
  if (total > Rational(1)) throw Error(Errc::MassExceedsOne, total.str());
  return d;
}

SubDist SubDist::point(PosetRef base, std::size_t x, Rational w) { return make(std::move(base), {{x, w}}); }

Rational SubDist::mass() const {
  Rational m;
  for (const auto& [x, w] : weights) m += w;
  return m;
}

Rational SubDist::at(std::size_t x) const {
  auto it = weights.find(x);
  return it == weights.end() ? Rational() : it->second;
}

std::string SubDist::str() const {
  if (weights.empty()) return "0";
  std::string out;
  for (const auto& [x, w] : weights) {
    if (!out.empty()) out += " + ";
    out += w.str() + " " + base->id(x);
  }
  return out;
}

FormalSum FormalSum::parse(PosetRef base, const std::string& text) {
  FormalSum f{std::move(base), {}};
  std::string t = trim(text);
  if (t.empty() || t == "0") return f;
  std::stringstream ss(t);
  std::string part;
  Rational total;
  while (std::getline(ss, part, '+')) {
    part = trim(part);
    if (part.empty()) throw Error(Errc::ParseError, "empty summand in '" + text + "'");
    for (auto& c : part)
      if (c == '*') c = ' ';
    part = trim(part);
    auto sp = part.find_last_of(" \t");
    Rational c(1);
    std::string elem = part;
    if (sp != std::string::npos) {
      c = Rational::parse(trim(part.substr(0, sp)));
      elem = trim(part.substr(sp + 1));
    }
    if (c.sign() <= 0 || c > Rational(1)) throw Error(Errc::InvalidPartition, "coefficient " + c.str());
    total += c;
    f.summands.emplace_back(c, f.base->index(elem));
  }
  if (total > Rational(1)) throw Error(Errc::MassExceedsOne, total.str());
  return f;
}

SubDist FormalSum::quotient() const {
  std::map<std::size_t, Rational> w;
  for (const auto& [c, x] : summands) w[x] += c;
  return SubDist::make(base, std::move(w));
}

std::string FormalSum::str() const {
  if (summands.empty()) return "0";
  std::string out;
  for (const auto& [c, x] : summands) {
    if (!out.empty()) out += " + ";
    out += c.str() + " " + base->id(x);
  }
  return out;
}

FormalSum to_formal(const SubDist& d) {
  FormalSum f{d.base, {}};
  for (const auto& [x, w] : d.weights) f.summands.emplace_back(w, x);
  return f;
}

void Partition::validate() const {
  if (total.sign() <= 0) throw Error(Errc::InvalidPartition, "total must be positive");
  if (form == Form::Summands) {
    Rational s;
    for (const auto& p : parts) {
      if (p.sign() <= 0) throw Error(Errc::InvalidPartition, "non-positive part");
      s += p;
    }
    if (parts.empty() || s != total) throw Error(Errc::InvalidPartition, "parts do not sum to total");
  } else {
    if (parts.empty() || !parts.front().is_zero()) throw Error(Errc::InvalidPartition, "partial sums must start at 0");
    for (std::size_t i = 0; i + 1 < parts.size(); ++i)
      if (!(parts[i] < parts[i + 1])) throw Error(Errc::InvalidPartition, "partial sums not increasing");
    if (!(parts.back() < total)) throw Error(Errc::InvalidPartition, "partial sum not below total");
  }
}

Partition smd_psums_convert(const Partition& p) {
  p.validate();
  Partition out;
  out.total = p.total;
  if (p.form == Partition::Form::Summands) {
    out.form = Partition::Form::PartialSums;
    Rational acc;
    for (std::size_t i = 0; i < p.parts.size(); ++i) {
      out.parts.push_back(acc);
      acc += p.parts[i];
    }
  } else {
    out.form = Partition::Form::Summands;
    for (std::size_t i = 0; i < p.parts.size(); ++i) {
      const Rational& next = (i + 1 < p.parts.size()) ? p.parts[i + 1] : p.total;
      out.parts.push_back(next - p.parts[i]);
    }
  }
  return out;
}

bool is_subdivision(const FormalSum& fine, const FormalSum& coarse, const std::vector<std::size_t>& parent) {
  if (parent.size() != fine.summands.size()) return false;
  std::vector<Rational> acc(coarse.summands.size());
  for (std::size_t i = 0; i < parent.size(); ++i) {
    if (parent[i] >= coarse.summands.size()) return false;
    if (fine.summands[i].second != coarse.summands[parent[i]].second) return false;
    if (fine.summands[i].first.sign() <= 0) return false;
    acc[parent[i]] += fine.summands[i].first;
  }
  for (std::size_t j = 0; j < acc.size(); ++j)
    if (acc[j] != coarse.summands[j].first) return false;
  return true;
}

CommonRefinement common_refinement(const FormalSum& a, const FormalSum& b) {
  require_same_base(a.base, b.base, "common_refinement");
  std::map<std::size_t, std::vector<std::size_t>> ia, ib;
  for (std::size_t i = 0; i < a.summands.size(); ++i) ia[a.summands[i].second].push_back(i);
  for (std::size_t i = 0; i < b.summands.size(); ++i) ib[b.summands[i].second].push_back(i);
  auto totals = [](const FormalSum& f) {
    std::map<std::size_t, Rational> t;
    for (const auto& [c, x] : f.summands) t[x] += c;
    return t;
  };
  if (totals(a) != totals(b)) throw Error(Errc::NotSameDistribution, a.str() + " vs " + b.str());

  CommonRefinement out{FormalSum{a.base, {}}, {}, {}};
  for (const auto& [x, as] : ia) {
    const auto& bs = ib[x];
    // Breakpoints (cumulative ends) of both subdivisions of the total at x.
    std::vector<std::pair<Rational, std::size_t>> ea, eb;
    Rational acc;
    for (auto i : as) ea.emplace_back(acc += a.summands[i].first, i);
    acc = Rational();
    for (auto i : bs) eb.emplace_back(acc += b.summands[i].first, i);
    std::set<Rational> cuts;
    for (const auto& e : ea) cuts.insert(e.first);
    for (const auto& e : eb) cuts.insert(e.first);
    Rational prev;
    std::size_t pa = 0, pb = 0;
    for (const auto& c : cuts) {
      while (ea[pa].first < c) ++pa;
      while (eb[pb].first < c) ++pb;
      out.sum.summands.emplace_back(c - prev, x);
      out.from_a.push_back(ea[pa].second);
      out.from_b.push_back(eb[pb].second);
      prev = c;
    }
  }
  return out;
}

namespace {

// Kuhn's augmenting-path bipartite matching; adj[i] lists admissible right vertices.
std::optional<std::vector<std::size_t>> perfect_left_matching(const std::vector<std::vector<std::size_t>>& adj,
                                                              std::size_t right) {
  const std::size_t none = static_cast<std::size_t>(-1);
  std::vector<std::size_t> match_r(right, none), match_l(adj.size(), none);
  std::function<bool(std::size_t, std::vector<char>&)> augment = [&](std::size_t u, std::vector<char>& seen) {
    for (auto v : adj[u])
      if (match_r[v] == none) {
        seen[v] = 1;
        match_r[v] = u;
        match_l[u] = v;
        return true;
      }
    for (auto v : adj[u]) {
      if (seen[v]) continue;
      seen[v] = 1;
      if (match_r[v] == none || augment(match_r[v], seen)) {
        match_r[v] = u;
        match_l[u] = v;
        return true;
      }
    }
    return false;
  };
  for (std::size_t u = 0; u < adj.size(); ++u) {
    std::vector<char> seen(right, 0);
    if (!augment(u, seen)) return std::nullopt;
  }
  return match_l;
}

}  // namespace

std::optional<std::vector<std::size_t>> obviously_below(const FormalSum& a, const FormalSum& b) {
  require_same_base(a.base, b.base, "obviously_below");
  const FinPoset& p = *a.base;
  std::vector<std::vector<std::size_t>> adj(a.summands.size());
  for (std::size_t i = 0; i < a.summands.size(); ++i)
    for (std::size_t j = 0; j < b.summands.size(); ++j)
      if (a.summands[i].first <= b.summands[j].first && p.leq(a.summands[i].second, b.summands[j].second))
        adj[i].push_back(j);
  return perfect_left_matching(adj, b.summands.size());
}

PushResult push_subdivision(const FormalSum& a, const FormalSum& b, const std::vector<std::size_t>& f,
                            const Subdivision& d) {
  if (!is_subdivision(d.sum, a, d.parent)) throw Error(Errc::InvalidPartition, "not a subdivision");
  std::vector<long> pre(b.summands.size(), -1);
  for (std::size_t i = 0; i < f.size(); ++i) pre[f[i]] = static_cast<long>(i);
  PushResult r{Subdivision{FormalSum{b.base, {}}, {}}, std::vector<std::size_t>(d.sum.summands.size())};
  for (std::size_t j = 0; j < b.summands.size(); ++j) {
    const auto& [q, y] = b.summands[j];
    if (pre[j] < 0) {
      r.extended.sum.summands.emplace_back(q, y);
      r.extended.parent.push_back(j);
      continue;
    }
    const auto i = static_cast<std::size_t>(pre[j]);
    for (std::size_t k = 0; k < d.parent.size(); ++k) {
      if (d.parent[k] != i) continue;
      r.injection[k] = r.extended.sum.summands.size();
      r.extended.sum.summands.emplace_back(d.sum.summands[k].first, y);
      r.extended.parent.push_back(j);
    }
    Rational rest = q - a.summands[i].first;
    if (rest.sign() > 0) {
      r.extended.sum.summands.emplace_back(rest, y);
      r.extended.parent.push_back(j);
    }
  }
  return r;
}

PushResult pull_subdivision(const FormalSum& a, const FormalSum& b, const std::vector<std::size_t>& f,
                            const Subdivision& e) {
  if (!is_subdivision(e.sum, b, e.parent)) throw Error(Errc::InvalidPartition, "not a subdivision");
  PushResult r{Subdivision{FormalSum{a.base, {}}, {}}, {}};
  for (std::size_t i = 0; i < a.summands.size(); ++i) {
    const auto& [p, x] = a.summands[i];
    const std::size_t j = f[i];
    // Partial sums of e's split of b_j, cut at p: Q ∩ [0, p).
    Rational acc;
    std::vector<std::pair<Rational, std::size_t>> qs;  // (start, index in e)
    for (std::size_t k = 0; k < e.parent.size(); ++k)
      if (e.parent[k] == j) {
        qs.emplace_back(acc, k);
        acc += e.sum.summands[k].first;
      }
    for (std::size_t t = 0; t < qs.size() && qs[t].first < p; ++t) {
      Rational end = (t + 1 < qs.size() && qs[t + 1].first < p) ? qs[t + 1].first : p;
      r.extended.sum.summands.emplace_back(end - qs[t].first, x);
      r.extended.parent.push_back(i);
      r.injection.push_back(qs[t].second);
    }
  }
  return r;
}

namespace {

mpz_class common_denominator(const SubDist& mu, const SubDist& nu) {
  mpz_class d = 1;
  for (const auto& [x, w] : mu.weights) d = lcm(d, w.den());
  for (const auto& [x, w] : nu.weights) d = lcm(d, w.den());
  return d;
}

}  // namespace

bool sdist_leq_flow(const SubDist& mu, const SubDist& nu) {
  require_same_base(mu.base, nu.base, "sdist_leq_flow");
  const FinPoset& p = *mu.base;
  const mpz_class D = common_denominator(mu, nu);
  std::vector<std::size_t> xs, ys;
  std::vector<mpz_class> cap_src, cap_snk;
  mpz_class need = 0;
  for (const auto& [x, w] : mu.weights) {
    xs.push_back(x);
    mpz_class c = w.num() * (D / w.den());
    cap_src.push_back(c);
    need += c;
  }
  for (const auto& [y, w] : nu.weights) {
    ys.push_back(y);
    cap_snk.push_back(w.num() * (D / w.den()));
  }
  // Nodes: 0 = source, 1..|xs| = left, then right, last = sink.
  const std::size_t L = xs.size(), R = ys.size(), N = L + R + 2, S = 0, T = N - 1;
  std::vector<std::vector<mpz_class>> cap(N, std::vector<mpz_class>(N, 0));
  for (std::size_t i = 0; i < L; ++i) cap[S][1 + i] = cap_src[i];
  for (std::size_t j = 0; j < R; ++j) cap[1 + L + j][T] = cap_snk[j];
  for (std::size_t i = 0; i < L; ++i)
    for (std::size_t j = 0; j < R; ++j)
      if (p.leq(xs[i], ys[j])) cap[1 + i][1 + L + j] = need;
  mpz_class flow = 0;
  for (;;) {
    std::vector<long> prev(N, -1);
    prev[S] = static_cast<long>(S);
    std::deque<std::size_t> q{S};
    while (!q.empty() && prev[T] < 0) {
      auto u = q.front();
      q.pop_front();
      for (std::size_t v = 0; v < N; ++v)
        if (prev[v] < 0 && cap[u][v] > 0) {
          prev[v] = static_cast<long>(u);
          q.push_back(v);
        }
    }
    if (prev[T] < 0) break;
    mpz_class aug = need;
    for (std::size_t v = T; v != S; v = static_cast<std::size_t>(prev[v]))
      aug = std::min(aug, mpz_class(cap[static_cast<std::size_t>(prev[v])][v]));
    for (std::size_t v = T; v != S; v = static_cast<std::size_t>(prev[v])) {
      auto u = static_cast<std::size_t>(prev[v]);
      cap[u][v] -= aug;
      cap[v][u] += aug;
    }
    flow += aug;
  }
  return flow == need;
}

bool sdist_leq_bruteforce(const SubDist& mu, const SubDist& nu, std::size_t max_atoms) {
  require_same_base(mu.base, nu.base, "sdist_leq_bruteforce");
  const FinPoset& p = *mu.base;
  const mpz_class D = common_denominator(mu, nu);
  if (D > static_cast<long>(max_atoms)) throw Error(Errc::CarrierTooLarge, "atoms of size 1/" + D.get_str());
  const long d = D.get_si();
  // Atoms of equal elements are interchangeable, so an injective atom matching is
  // determined by how many atoms of each source element land on each target element.
  std::vector<std::size_t> xs, ys;
  std::vector<long> m, cap;
  for (const auto& [x, w] : mu.weights) {
    xs.push_back(x);
    m.push_back(mpz_class(w.num() * (d / w.den().get_si())).get_si());
  }
  for (const auto& [y, w] : nu.weights) {
    ys.push_back(y);
    cap.push_back(mpz_class(w.num() * (d / w.den().get_si())).get_si());
  }
  std::function<bool(std::size_t, std::size_t, long)> place = [&](std::size_t i, std::size_t j, long left) -> bool {
    if (i == xs.size()) return true;
    if (left == 0) return place(i + 1, 0, i + 1 < xs.size() ? m[i + 1] : 0);
    if (j == ys.size()) return false;
    if (!p.leq(xs[i], ys[j])) return place(i, j + 1, left);
    for (long k = std::min(left, cap[j]); k >= 0; --k) {
      cap[j] -= k;
      bool ok = place(i, j + 1, left - k);
      cap[j] += k;
      if (ok) return true;
    }
    return false;
  };
  return place(0, 0, xs.empty() ? 0 : m[0]);
}

SubDist sdist_map(const MonotoneMap& f, const SubDist& mu) {
  require_same_base(f.domain(), mu.base, "sdist_map");
  std::map<std::size_t, Rational> w;
  for (const auto& [x, c] : mu.weights) w[f(x)] += c;
  return SubDist::make(f.codomain(), std::move(w));
}

SubDist sdist_flatten(const std::vector<std::pair<Rational, SubDist>>& mm) {
  if (mm.empty()) throw Error(Errc::BaseMismatch, "sdist_flatten needs a base");
  std::map<std::size_t, Rational> w;
  Rational outer;
  for (const auto& [p, inner] : mm) {
    require_same_base(mm.front().second.base, inner.base, "sdist_flatten");
    outer += p;
    for (const auto& [x, q] : inner.weights) w[x] += p * q;
  }
  if (outer > Rational(1)) throw Error(Errc::MassExceedsOne, outer.str());
  return SubDist::make(mm.front().second.base, std::move(w));
}

std::vector<SubDist> enumerate_subdists(const PosetRef& base, std::size_t max_support, long max_den) {
  std::set<Rational> values;
  for (long q = 1; q <= max_den; ++q)
    for (long p = 1; p <= q; ++p) values.insert(Rational(p, q));
  std::vector<Rational> vals(values.begin(), values.end());
  std::vector<SubDist> out;
  std::map<std::size_t, Rational> cur;
  std::function<void(std::size_t, Rational)> rec = [&](std::size_t x, Rational mass) {
    if (x == base->size()) {
      out.push_back(SubDist{base, cur});
      return;
    }
    rec(x + 1, mass);
    if (cur.size() >= max_support) return;
    for (const auto& v : vals) {
      if (mass + v > Rational(1)) break;
      cur[x] = v;
      rec(x + 1, mass + v);
      cur.erase(x);
    }
  };
  rec(0, Rational());
  return out;
}

}  // namespace gbp
