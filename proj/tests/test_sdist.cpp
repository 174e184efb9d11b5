#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include "gbp/error.hpp"
#include "gbp/poset.hpp"
#include "gbp/sdist.hpp"
#include "support.hpp"

using namespace gbp;

namespace {

Rational q(long n, long d = 1) { return Rational(n, d); }

PosetRef xy_chain() { return share(FinPoset::validate({"x", "y"}, {{"x", "y"}})); }

SubDist dist(const PosetRef& p, std::initializer_list<std::pair<const char*, Rational>> ws) {
  std::map<std::size_t, Rational> w;
  for (const auto& [id, c] : ws) w[p->index(id)] += c;
  return SubDist::make(p, std::move(w));
}

// Hall condition over up-sets: mu <= nu iff mu(U) <= nu(U) for every up-set U.
bool upset_oracle(const SubDist& mu, const SubDist& nu) {
  const FinPoset& p = *mu.base;
  for (const auto& down : all_down_sets(p)) {
    std::vector<char> in_up(p.size(), 1);
    for (auto x : down) in_up[x] = 0;
    Rational a, b;
    for (const auto& [x, w] : mu.weights)
      if (in_up[x]) a += w;
    for (const auto& [x, w] : nu.weights)
      if (in_up[x]) b += w;
    if (a > b) return false;
  }
  return true;
}

// Partial sums of each element's summands, merged and differenced back.
std::vector<Rational> union_of_psums(const std::vector<Rational>& a, const std::vector<Rational>& b) {
  std::set<Rational> cuts;
  Rational acc;
  for (const auto& c : a) cuts.insert(acc), acc += c;
  const Rational total = acc;
  acc = Rational();
  for (const auto& c : b) cuts.insert(acc), acc += c;
  std::vector<Rational> parts;
  Partition ps{total, Partition::Form::PartialSums, {cuts.begin(), cuts.end()}};
  return smd_psums_convert(ps).parts;
}

FormalSum random_formal(std::mt19937_64& rng, const PosetRef& base, std::size_t max_len, long den) {
  std::vector<std::pair<Rational, std::size_t>> s;
  long left = den;
  const std::size_t n = std::uniform_int_distribution<std::size_t>(0, max_len)(rng);
  for (std::size_t i = 0; i < n && left > 0; ++i) {
    const long c = std::uniform_int_distribution<long>(1, left)(rng);
    left -= c;
    s.emplace_back(q(c, den), std::uniform_int_distribution<std::size_t>(0, base->size() - 1)(rng));
  }
  return FormalSum{base, s};
}

// Splits every summand of f into up to three random pieces.
Subdivision random_subdivision(std::mt19937_64& rng, const FormalSum& f) {
  Subdivision d{FormalSum{f.base, {}}, {}};
  for (std::size_t i = 0; i < f.summands.size(); ++i) {
    const auto& [c, x] = f.summands[i];
    const long k = std::uniform_int_distribution<long>(1, 3)(rng);
    Rational left = c;
    for (long j = 1; j < k; ++j) {
      const Rational piece = c * q(1, k + 1);
      d.sum.summands.emplace_back(piece, x);
      d.parent.push_back(i);
      left -= piece;
    }
    d.sum.summands.emplace_back(left, x);
    d.parent.push_back(i);
  }
  return d;
}

bool obviously_below_via(const FormalSum& a, const FormalSum& b, const std::vector<std::size_t>& f) {
  std::set<std::size_t> seen;
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (!seen.insert(f[i]).second) return false;
    if (!(a.summands[i].first <= b.summands[f[i]].first)) return false;
    if (!a.base->leq(a.summands[i].second, b.summands[f[i]].second)) return false;
  }
  return f.size() == a.summands.size();
}

}  // namespace

TEST_CASE("partitions convert between summand and partial-sum form") {
  Partition half{q(1), Partition::Form::Summands, {q(1, 2), q(1, 2)}};
  auto ps = smd_psums_convert(half);
  CHECK(ps.form == Partition::Form::PartialSums);
  CHECK(ps.parts == std::vector<Rational>{q(0), q(1, 2)});
  CHECK(smd_psums_convert(ps).parts == half.parts);

  Partition single{q(2, 5), Partition::Form::Summands, {q(2, 5)}};
  CHECK(smd_psums_convert(single).parts == std::vector<Rational>{q(0)});

  Partition third{q(1), Partition::Form::PartialSums, {q(0), q(1, 3)}};
  CHECK(smd_psums_convert(third).parts == std::vector<Rational>{q(1, 3), q(2, 3)});

  CHECK_THROWS_AS(smd_psums_convert({q(1), Partition::Form::Summands, {q(1, 2)}}), Error);
  CHECK_THROWS_AS(smd_psums_convert({q(1), Partition::Form::PartialSums, {q(1, 3)}}), Error);
  CHECK_THROWS_AS(smd_psums_convert({q(1), Partition::Form::PartialSums, {q(0), q(1)}}), Error);
  CHECK_THROWS_AS(smd_psums_convert({q(1), Partition::Form::PartialSums, {q(0), q(1, 2), q(1, 3)}}), Error);
}

TEST_CASE("partition conversion is a length-preserving bijection") {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 500; ++t) {
    const long den = std::uniform_int_distribution<long>(1, 12)(rng);
    long left = den;
    std::vector<Rational> parts;
    while (left > 0) {
      const long c = std::uniform_int_distribution<long>(1, left)(rng);
      parts.push_back(q(c, den));
      left -= c;
    }
    Partition p{q(1), Partition::Form::Summands, parts};
    auto ps = smd_psums_convert(p);
    REQUIRE(ps.parts.size() == parts.size());
    ps.validate();
    CHECK(smd_psums_convert(ps).parts == parts);
  }
}

TEST_CASE("common refinement of two subdivisions") {
  const auto P = share(FinPoset::discrete({"x", "y"}));
  FormalSum a{P, {{q(1, 2), 0}, {q(1, 2), 0}}};
  FormalSum b{P, {{q(1, 3), 0}, {q(2, 3), 0}}};
  const auto expected = union_of_psums({q(1, 2), q(1, 2)}, {q(1, 3), q(2, 3)});
  REQUIRE(expected == std::vector<Rational>{q(1, 3), q(1, 6), q(1, 2)});
  auto r = common_refinement(a, b);
  std::vector<Rational> got;
  for (const auto& [c, x] : r.sum.summands) got.push_back(c);
  CHECK(got == expected);
  CHECK(is_subdivision(r.sum, a, r.from_a));
  CHECK(is_subdivision(r.sum, b, r.from_b));

  CHECK(common_refinement(a, a).sum.summands == a.summands);
  FormalSum whole{P, {{q(1), 0}}};
  FormalSum split{P, {{q(1, 4), 0}, {q(3, 4), 0}}};
  CHECK(common_refinement(whole, split).sum.summands == split.summands);

  FormalSum other{P, {{q(1), 1}}};
  CHECK_THROWS_AS(common_refinement(whole, other), Error);
}

TEST_CASE("common refinement of random subdivisions refines both") {
  std::mt19937_64 rng(17);
  const auto P = share(FinPoset::discrete({"x", "y", "z"}));
  for (int t = 0; t < 300; ++t) {
    const auto f = random_formal(rng, P, 4, 6);
    const auto d1 = random_subdivision(rng, f);
    const auto d2 = random_subdivision(rng, f);
    const auto r = common_refinement(d1.sum, d2.sum);
    CHECK(is_subdivision(r.sum, d1.sum, r.from_a));
    CHECK(is_subdivision(r.sum, d2.sum, r.from_b));
    CHECK(r.sum.quotient() == f.quotient());
  }
}

TEST_CASE("obviously below") {
  const auto P = xy_chain();
  CHECK(obviously_below(FormalSum{P, {{q(1, 2), 0}}}, FormalSum{P, {{q(1, 2), 1}}}).has_value());
  CHECK_FALSE(obviously_below(FormalSum{P, {{q(1), 1}}}, FormalSum{P, {{q(1), 0}}}).has_value());
  auto f = obviously_below(FormalSum{P, {{q(1, 3), 0}, {q(1, 3), 0}}}, FormalSum{P, {{q(1, 2), 0}, {q(1, 2), 0}}});
  REQUIRE(f.has_value());
  CHECK(*f == std::vector<std::size_t>{0, 1});
  // Needs the matching to back off from the greedy choice.
  FormalSum a{P, {{q(1, 4), 0}, {q(1, 2), 0}}};
  FormalSum b{P, {{q(1, 2), 1}, {q(1, 4), 1}}};
  auto g = obviously_below(a, b);
  REQUIRE(g.has_value());
  CHECK(obviously_below_via(a, b, *g));
  CHECK_FALSE(obviously_below(FormalSum{P, {{q(1, 4), 0}, {q(1, 4), 0}}}, FormalSum{P, {{q(1, 2), 1}}}));
  const auto Q = share(FinPoset::discrete({"x", "y"}));
  CHECK_THROWS_AS(obviously_below(FormalSum{P, {}}, FormalSum{Q, {}}), Error);
}

TEST_CASE("subdivisions push forward and pull back along obviously-below") {
  std::mt19937_64 rng(23);
  const auto P = share(FinPoset::validate({"x", "y", "z"}, {{"x", "y"}, {"x", "z"}}));
  std::size_t tested = 0;
  for (int t = 0; t < 2000 && tested < 300; ++t) {
    const auto a = random_formal(rng, P, 3, 6);
    const auto b = random_formal(rng, P, 3, 6);
    const auto f = obviously_below(a, b);
    if (!f) continue;
    ++tested;
    const auto d = random_subdivision(rng, a);
    const auto push = push_subdivision(a, b, *f, d);
    CHECK(is_subdivision(push.extended.sum, b, push.extended.parent));
    CHECK(obviously_below_via(d.sum, push.extended.sum, push.injection));

    const auto e = random_subdivision(rng, b);
    const auto pull = pull_subdivision(a, b, *f, e);
    CHECK(is_subdivision(pull.extended.sum, a, pull.extended.parent));
    CHECK(obviously_below_via(pull.extended.sum, e.sum, pull.injection));
  }
  CHECK(tested >= 100);
}

TEST_CASE("subdistribution order examples") {
  const auto P = xy_chain();
  const auto half_x = dist(P, {{"x", q(1, 2)}});
  const auto half_y = dist(P, {{"y", q(1, 2)}});
  const auto spread = dist(P, {{"x", q(1, 2)}, {"y", q(1, 2)}});
  const auto one_y = dist(P, {{"y", q(1)}});
  const auto quarter_y = dist(P, {{"y", q(1, 4)}});

  // Expected values frozen from the up-set oracle.
  REQUIRE(upset_oracle(half_x, half_y));
  REQUIRE(upset_oracle(spread, one_y));
  REQUIRE_FALSE(upset_oracle(half_x, quarter_y));
  CHECK(sdist_leq_flow(half_x, half_y));
  CHECK(sdist_leq_flow(spread, one_y));
  CHECK_FALSE(sdist_leq_flow(half_x, quarter_y));
  CHECK(sdist_leq_bruteforce(spread, one_y));
  CHECK(sdist_leq_bruteforce(spread, spread));
  CHECK_FALSE(sdist_leq_bruteforce(half_x, quarter_y));

  const auto D = share(FinPoset::discrete({"x", "y"}));
  CHECK_FALSE(sdist_leq_bruteforce(dist(D, {{"x", q(1)}}), dist(D, {{"y", q(1)}})));
  CHECK(sdist_leq_flow(SubDist::make(D, {}), dist(D, {{"y", q(1, 3)}})));
  CHECK_FALSE(sdist_leq_flow(dist(D, {{"y", q(1, 3)}}), SubDist::make(D, {})));

  CHECK_THROWS_AS(sdist_leq_flow(half_x, SubDist::make(D, {})), Error);
  CHECK_THROWS_AS(sdist_leq_bruteforce(dist(P, {{"x", q(1, 13)}}), one_y), Error);
  CHECK_THROWS_AS(SubDist::make(P, {{0, q(2, 3)}, {1, q(2, 3)}}), Error);
}

TEST_CASE("flow, brute force and up-set oracle agree on small posets") {
  std::size_t pairs = 0, below = 0;
  for (std::size_t n = 1; n <= 3; ++n)
    for (const auto& p : all_posets(n)) {
      const auto P = share(p);
      const auto ds = enumerate_subdists(P, 2, 3);
      for (const auto& mu : ds)
        for (const auto& nu : ds) {
          const bool flow = sdist_leq_flow(mu, nu);
          REQUIRE(flow == upset_oracle(mu, nu));
          REQUIRE(flow == sdist_leq_bruteforce(mu, nu));
          ++pairs;
          below += flow;
        }
    }
  CHECK(pairs > 10000);
  CHECK(below > 0);
  CHECK(below < pairs);
}

TEST_CASE("subdistribution order is a partial order") {
  for (const auto& p : all_posets(3)) {
    const auto P = share(p);
    const auto ds = enumerate_subdists(P, 2, 2);
    const std::size_t n = ds.size();
    std::vector<char> leq(n * n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) leq[i * n + j] = sdist_leq_flow(ds[i], ds[j]);
    for (std::size_t i = 0; i < n; ++i) {
      REQUIRE(leq[i * n + i]);
      for (std::size_t j = 0; j < n; ++j) {
        if (i != j && leq[i * n + j]) REQUIRE_FALSE(leq[j * n + i]);
        if (!leq[i * n + j]) continue;
        for (std::size_t k = 0; k < n; ++k)
          if (leq[j * n + k]) REQUIRE(leq[i * n + k]);
      }
    }
  }
}

TEST_CASE("combining related subconvex sums preserves the order") {
  std::mt19937_64 rng(31);
  const auto P = share(FinPoset::validate({"x", "y", "z"}, {{"x", "y"}, {"y", "z"}}));
  std::size_t combined = 0;
  for (int t = 0; t < 3000 && combined < 200; ++t) {
    const std::size_t k = std::uniform_int_distribution<std::size_t>(1, 3)(rng);
    std::vector<std::pair<Rational, SubDist>> lhs, rhs;
    bool related = true;
    long left = 6;
    for (std::size_t i = 0; i < k && left > 0; ++i) {
      const long c = std::uniform_int_distribution<long>(1, left)(rng);
      left -= c;
      const auto mu = testing::random_subdist(rng, P, 2, 4);
      const auto nu = testing::random_subdist(rng, P, 2, 4);
      related = related && sdist_leq_flow(mu, nu);
      lhs.emplace_back(q(c, 6), mu);
      rhs.emplace_back(q(c, 6), nu);
    }
    if (!related) continue;
    ++combined;
    CHECK(sdist_leq_flow(sdist_flatten(lhs), sdist_flatten(rhs)));
  }
  CHECK(combined >= 100);
}

TEST_CASE("pushforward and flattening") {
  const auto P = share(FinPoset::discrete({"x1", "x2", "z"}));
  const auto Y = share(FinPoset::discrete({"y", "w"}));
  const auto one = share(FinPoset::one());
  const auto mu = dist(P, {{"x1", q(1, 3)}, {"x2", q(1, 6)}});
  CHECK(sdist_map(MonotoneMap::identity(P), mu) == mu);
  CHECK(sdist_map(MonotoneMap::constant(P, one, 0), mu) == dist(one, {{"*", q(1, 2)}}));
  MonotoneMap merge(P, Y, {Y->index("y"), Y->index("y"), Y->index("w")});
  CHECK(sdist_map(merge, mu) == dist(Y, {{"y", q(1, 2)}}));
  CHECK_THROWS_AS(sdist_map(merge, dist(Y, {{"y", q(1)}})), Error);

  const auto x = dist(P, {{"x1", q(1)}});
  const auto z = dist(P, {{"z", q(1)}});
  CHECK(sdist_flatten({{q(1), x}}) == x);
  CHECK(sdist_flatten({{q(1, 2), x}, {q(1, 2), z}}) == dist(P, {{"x1", q(1, 2)}, {"z", q(1, 2)}}));
  CHECK(sdist_flatten({{q(1, 2), dist(P, {{"x1", q(1, 2)}})}}) == dist(P, {{"x1", q(1, 4)}}));
  CHECK_THROWS_AS(sdist_flatten({{q(2, 3), x}, {q(2, 3), z}}), Error);
}

TEST_CASE("pushforward is functorial and flattening is a monad multiplication") {
  std::mt19937_64 rng(41);
  const auto P = share(FinPoset::validate({"a", "b", "c"}, {{"a", "b"}}));
  const auto Q = share(FinPoset::chain({"u", "v"}));
  const auto one = share(FinPoset::one());
  const MonotoneMap f(P, Q, {0, 1, 0});
  const MonotoneMap g = MonotoneMap::constant(Q, one, 0);
  auto point = [](const SubDist& d) { return std::vector<std::pair<Rational, SubDist>>{{q(1), d}}; };
  auto random_nest = [&](std::size_t width) {
    std::vector<std::pair<Rational, SubDist>> nest;
    long left = 4;
    for (std::size_t i = 0; i < width && left > 0; ++i) {
      const long c = std::uniform_int_distribution<long>(1, left)(rng);
      left -= c;
      nest.emplace_back(q(c, 4), testing::random_subdist(rng, P, 3, 4));
    }
    if (nest.empty()) nest.emplace_back(q(1, 4), testing::random_subdist(rng, P, 3, 4));
    return nest;
  };
  for (int t = 0; t < 500; ++t) {
    const auto mu = testing::random_subdist(rng, P, 3, 6);
    CHECK(sdist_map(MonotoneMap::identity(P), mu) == mu);
    CHECK(sdist_map(compose(g, f), mu) == sdist_map(g, sdist_map(f, mu)));
    CHECK(sdist_map(f, mu).mass() == mu.mass());

    // Unit laws: flatten . unit = id = flatten . map(unit).
    CHECK(sdist_flatten(point(mu)) == mu);
    std::vector<std::pair<Rational, SubDist>> units;
    for (const auto& [x, w] : mu.weights) units.emplace_back(w, SubDist::point(P, x));
    if (!units.empty()) CHECK(sdist_flatten(units) == mu);

    // Associativity: flattening the inner layer first agrees with the outer first.
    std::vector<std::pair<Rational, std::vector<std::pair<Rational, SubDist>>>> triple;
    long left = 3;
    for (int i = 0; i < 2 && left > 0; ++i) {
      const long c = std::uniform_int_distribution<long>(1, left)(rng);
      left -= c;
      triple.emplace_back(q(c, 3), random_nest(2));
    }
    std::vector<std::pair<Rational, SubDist>> inner_first;
    for (const auto& [p, nest] : triple) inner_first.emplace_back(p, sdist_flatten(nest));
    std::vector<std::pair<Rational, SubDist>> outer_first;
    for (const auto& [p, nest] : triple)
      for (const auto& [r, d] : nest) outer_first.emplace_back(p * r, d);
    CHECK(sdist_flatten(inner_first) == sdist_flatten(outer_first));

    // Naturality of flattening.
    std::vector<std::pair<Rational, SubDist>> mapped;
    const auto nest = random_nest(3);
    for (const auto& [p, d] : nest) mapped.emplace_back(p, sdist_map(f, d));
    CHECK(sdist_flatten(mapped) == sdist_map(f, sdist_flatten(nest)));
  }
}

TEST_CASE("formal sums parse and quotient") {
  const auto P = xy_chain();
  const auto f = FormalSum::parse(P, "1/3 x + 1/3 x + 1/6 y");
  REQUIRE(f.summands.size() == 3);
  CHECK(f.quotient() == dist(P, {{"x", q(2, 3)}, {"y", q(1, 6)}}));
  CHECK(to_formal(f.quotient()).quotient() == f.quotient());
  CHECK_THROWS_AS(FormalSum::parse(P, "1/2 x + 2/3 y"), Error);
  CHECK_THROWS_AS(FormalSum::parse(P, "1/2 q"), Error);
}
