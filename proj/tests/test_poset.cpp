#include <doctest.h>

#include <algorithm>
#include <optional>
#include <random>
#include <set>

#include "gbp/error.hpp"
#include "gbp/poset.hpp"

using namespace gbp;

namespace {

bool order_laws(const FinPoset& p) {
  const std::size_t n = p.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (!p.leq(i, i)) return false;
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j && p.leq(i, j) && p.leq(j, i)) return false;
      for (std::size_t k = 0; k < n; ++k)
        if (p.leq(i, j) && p.leq(j, k) && !p.leq(i, k)) return false;
    }
  }
  return true;
}

bool subset(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
  return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

// Validates every relation on n elements given as an off-diagonal bitmask;
// returns the number of distinct posets produced.
std::size_t check_all_relations(std::size_t n, std::size_t& ok, std::size_t& rejected) {
  std::set<std::string> distinct;
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < n; ++i) ids.push_back(std::to_string(i));
  const std::size_t bits = n * (n - 1);
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << bits); ++mask) {
    std::vector<std::pair<std::string, std::string>> pairs;
    std::size_t b = 0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        if (i == j) continue;
        if (mask >> b & 1) pairs.emplace_back(ids[i], ids[j]);
        ++b;
      }
    std::optional<FinPoset> p;
    try {
      p = FinPoset::validate(ids, pairs);
    } catch (const Error& e) {
      REQUIRE(e.code() == Errc::NotAntisymmetric);
      ++rejected;
      continue;
    }
    REQUIRE(order_laws(*p));
    for (const auto& [x, y] : pairs) REQUIRE(p->leq(x, y));
    std::string key;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) key += p->leq(i, j) ? '1' : '0';
    distinct.insert(key);
    ++ok;
  }
  return distinct.size();
}

}  // namespace

TEST_CASE("validate closes and rejects cycles") {
  const auto p = FinPoset::validate({"a", "b"}, {{"a", "b"}});
  CHECK(p.leq("a", "b"));
  CHECK(p.leq("a", "a"));
  CHECK_FALSE(p.leq("b", "a"));
  CHECK_THROWS_AS(FinPoset::validate({"a", "b"}, {{"a", "b"}, {"b", "a"}}), Error);
  const auto c = FinPoset::validate({"0", "1", "2"}, {{"0", "1"}, {"1", "2"}});
  CHECK(c.leq("0", "2"));
  try {
    (void)FinPoset::validate({"a"}, {{"a", "z"}});
    FAIL("expected UnknownElement");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::UnknownElement);
  }
}

TEST_CASE("validate satisfies the order laws on every relation up to 5 elements") {
  std::size_t ok = 0, rejected = 0;
  // labelled posets on n elements: 1, 1, 3, 19, 219, 4231
  const std::vector<std::size_t> labelled{1, 1, 3, 19, 219, 4231};
  for (std::size_t n = 0; n <= 5; ++n) {
    CHECK(check_all_relations(n, ok, rejected) == labelled[n]);
    CHECK(all_posets(n).size() == labelled[n]);
  }
  CHECK(ok + rejected == 1 + 1 + 4 + 64 + 4096 + (1u << 20));
}

TEST_CASE("validate satisfies the order laws on random relations with 6 elements") {
  std::mt19937_64 rng(41);
  for (std::size_t n : {6u}) {
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < n; ++i) ids.push_back(std::to_string(i));
    for (int trial = 0; trial < 20000; ++trial) {
      std::bernoulli_distribution edge(std::uniform_real_distribution<double>(0.02, 0.3)(rng));
      std::vector<std::pair<std::string, std::string>> pairs;
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
          if (i != j && edge(rng)) pairs.emplace_back(ids[i], ids[j]);
      std::optional<FinPoset> p;
      try {
        p = FinPoset::validate(ids, pairs);
      } catch (const Error& e) {
        REQUIRE(e.code() == Errc::NotAntisymmetric);
      }
      if (p) REQUIRE(order_laws(*p));
    }
  }
}

TEST_CASE("down closure and convex hull") {
  const auto chain = share(FinPoset::chain({"0", "1", "2"}));
  CHECK(down_closure(chain, std::vector<std::string>{"1"}).members == indices_of(*chain, {"0", "1"}));
  CHECK(down_closure(chain, std::vector<std::size_t>{}).members.empty());
  const auto disc = share(FinPoset::discrete({"a", "b"}));
  CHECK(down_closure(disc, std::vector<std::string>{"a"}).members == indices_of(*disc, {"a"}));
  CHECK(convex_hull(chain, std::vector<std::string>{"0", "2"}).members == indices_of(*chain, {"0", "1", "2"}));
  CHECK(convex_hull(chain, std::vector<std::string>{"1"}).members == indices_of(*chain, {"1"}));
  CHECK(convex_hull(disc, std::vector<std::string>{"a", "b"}).members == indices_of(*disc, {"a", "b"}));
  CHECK_THROWS_AS(down_closure(chain, std::vector<std::string>{"9"}), Error);
}

TEST_CASE("closures are idempotent and monotone on all posets up to 4 elements") {
  for (std::size_t n = 0; n <= 4; ++n)
    for (const auto& P : all_posets(n)) {
      const auto p = share(P);
      std::vector<std::vector<std::size_t>> subsets;
      for (std::uint32_t m = 0; m < (1u << n); ++m) {
        std::vector<std::size_t> s;
        for (std::size_t i = 0; i < n; ++i)
          if (m >> i & 1) s.push_back(i);
        subsets.push_back(s);
      }
      for (const auto& s : subsets) {
        const auto d = down_closure(p, s);
        const auto c = convex_hull(p, s);
        REQUIRE(is_down_closed(P, d.members));
        REQUIRE(is_convex(P, c.members));
        REQUIRE(subset(s, d.members));
        REQUIRE(subset(s, c.members));
        REQUIRE(down_closure(p, d.members).members == d.members);
        REQUIRE(convex_hull(p, c.members).members == c.members);
        for (const auto& t : subsets)
          if (subset(s, t)) {
            REQUIRE(subset(d.members, down_closure(p, t).members));
            REQUIRE(subset(c.members, convex_hull(p, t).members));
          }
      }
    }
}

TEST_CASE("Egli-Milner and inclusion orders") {
  const auto chain = share(FinPoset::chain({"bot", "top"}));
  auto cs = [&](std::vector<std::string> ids) { return convex_hull(chain, ids); };
  CHECK(egli_milner_leq(cs({"bot"}), cs({"top"})));
  CHECK_FALSE(egli_milner_leq(cs({"top"}), cs({"bot"})));
  CHECK(egli_milner_leq(cs({"bot", "top"}), cs({"top"})));
  CHECK_FALSE(egli_milner_leq(cs({"top"}), cs({"bot", "top"})));
  CHECK_THROWS_AS(egli_milner_leq(cs({"bot"}), convex_hull(share(FinPoset::one()), std::vector<std::string>{"*"})),
                  Error);

  const auto ab = share(FinPoset::validate({"a", "b"}, {{"a", "b"}}));
  auto ds = [&](std::vector<std::string> ids) { return down_closure(ab, ids); };
  CHECK(downset_leq(ds({}), ds({"b"})));
  CHECK(downset_leq(ds({"a"}), ds({"b"})));
  const auto disc = share(FinPoset::discrete({"a", "b"}));
  CHECK_FALSE(downset_leq(down_closure(disc, std::vector<std::string>{"b"}),
                          down_closure(disc, std::vector<std::string>{"a"})));
}

TEST_CASE("Egli-Milner is a partial order on convex sets of small posets") {
  for (std::size_t n = 0; n <= 3; ++n)
    for (const auto& P : all_posets(n)) {
      const auto p = share(P);
      std::vector<ConvexSet> sets;
      for (const auto& m : all_convex_sets(P)) sets.push_back({p, m});
      for (const auto& a : sets) {
        REQUIRE(egli_milner_leq(a, a));
        for (const auto& b : sets) {
          if (egli_milner_leq(a, b) && egli_milner_leq(b, a)) REQUIRE(a == b);
          for (const auto& c : sets)
            if (egli_milner_leq(a, b) && egli_milner_leq(b, c)) REQUIRE(egli_milner_leq(a, c));
        }
      }
    }
}

TEST_CASE("monotone maps") {
  const auto chain = share(FinPoset::chain({"0", "1"}));
  const auto one = share(FinPoset::one());
  CHECK_THROWS_AS(MonotoneMap(chain, chain, {1, 0}), Error);
  const MonotoneMap id = MonotoneMap::identity(chain);
  const MonotoneMap k = MonotoneMap::constant(chain, one, 0);
  CHECK(compose(k, id).graph() == k.graph());
  CHECK(compose(id, id).graph() == id.graph());
}

TEST_CASE("product with discrete labels") {
  const auto chain = FinPoset::chain({"bot", "top"});
  const auto p = product_with_discrete({"a"}, chain);
  CHECK(p.poset->leq(p.index(0, 0), p.index(0, 1)));
  CHECK_FALSE(p.poset->leq(p.index(0, 1), p.index(0, 0)));
  const auto q = product_with_discrete({"a", "b"}, FinPoset::one());
  CHECK(q.poset->size() == 2);
  CHECK(q.poset->is_discrete());
  const auto r = product_with_discrete({"a", "b"}, chain);
  CHECK_FALSE(r.poset->leq(r.index(0, 0), r.index(1, 0)));
  CHECK_FALSE(r.poset->leq(r.index(0, 0), r.index(1, 1)));
}
