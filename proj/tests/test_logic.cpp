#include "doctest.h"
#include "gbp/error.hpp"
#include "gbp/logic.hpp"

using namespace gbp;

namespace {

const std::vector<std::string> kABC{"a", "b", "c"};

System lts(std::vector<std::string> states, std::vector<Transition> ts, std::vector<std::string> labels = kABC) {
  return make_system(System::Kind::LTS, FinPoset::discrete(std::move(states)), std::move(labels), ts);
}

System abac() {
  return lts({"p", "p1", "p2", "p3", "q", "q1", "q2"},
             {{"p", "a", "p1"}, {"p", "a", "p2"}, {"p1", "b", "p3"}, {"p2", "c", "p3"},
              {"q", "a", "q1"}, {"q1", "b", "q2"}, {"q1", "c", "q2"}});
}

Errc code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return Errc::Overflow;
}

}  // namespace

TEST_CASE("parser and uniform depth") {
  auto hml = LogicSpec::builtin(LogicKind::HML, kABC);
  auto f = parse_formula("<a> tt", hml);
  CHECK(f->depth == 1);
  CHECK(f->text == "<a> tt");
  CHECK(parse_formula("(<a> tt) & ([a] ff)", hml)->depth == 1);
  CHECK(parse_formula("!<a>(<b>tt & <c>tt)", hml)->text == "[a] ([b] ff | [c] ff)");
  CHECK(parse_formula("<a><b> tt", hml)->text == "<a><b> tt");
  // tt is a 0-ary propositional operator in hml and may sit at any depth.
  CHECK(parse_formula("tt & <a> tt", hml)->depth == 1);

  auto sync = LogicSpec::builtin(LogicKind::SYNC, kABC);
  CHECK(code_of([&] { parse_formula("<a> tt & <a><b> tt", sync); }) == Errc::ParseError);
  CHECK(code_of([&] { parse_formula("tt & <a> tt", sync); }) == Errc::ParseError);
  CHECK(parse_formula("<a> tt & [b] ff", sync)->depth == 1);

  auto pos = LogicSpec::builtin(LogicKind::POS_HML, kABC);
  CHECK(code_of([&] { parse_formula("[a] tt", pos); }) == Errc::ParseError);
  CHECK(code_of([&] { parse_formula("<a> tt | <b> tt", pos); }) == Errc::ParseError);
  CHECK(code_of([&] { parse_formula("<d> tt", pos); }) == Errc::UnknownSymbol);
  CHECK(code_of([&] { parse_formula("<a> (tt", hml); }) == Errc::ParseError);
  CHECK(parse_formula("dia(a,{b,a}) tt", pos)->text == "dia(a,{a,b}) tt");

  auto prob = LogicSpec::builtin(LogicKind::PROB, kABC);
  CHECK(code_of([&] { parse_formula("tt & <a> tt", prob); }) == Errc::ParseError);
  CHECK(code_of([&] { check_formula(f_and({f_tt(), f_dia("a", f_tt())}), prob, 1); }) == Errc::NonUniformDepth);
  CHECK_THROWS_AS(LogicSpec::builtin(LogicKind::HML, {}), Error);
}

TEST_CASE("evaluation on behaviours over 1") {
  auto hml = LogicSpec::builtin(LogicKind::HML, kABC);
  auto store = std::make_shared<TreeStore>(Semantics::make(SemKind::Bisim, kABC));
  NodeId s = store->make_set(1, {{store->label("a"), store->star()}});
  NodeId empty = store->make_set(1, {});
  CHECK(eval_tree(hml, parse_formula("<a> tt", hml), *store, s).str() == "true");
  CHECK(eval_tree(hml, parse_formula("[a] ff", hml), *store, empty).str() == "true");
  CHECK(eval_tree(hml, parse_formula("[a] ff", hml), *store, s).str() == "false");
  CHECK(eval_tree(hml, parse_formula("tt", hml), *store, s).str() == "true");

  auto prob = LogicSpec::builtin(LogicKind::PROB, {"a"});
  TraceDist d;
  d.base = share(FinPoset::one());
  d.weights[{Word{}, 0}] = Rational(3, 7);
  CHECK(eval_trace(prob, f_tt(), d).p == Rational(3, 7));
}

TEST_CASE("evaluation in systems") {
  auto sys = lts({"x", "y"}, {{"x", "a", "y"}});
  auto bis = Semantics::make(SemKind::Bisim, kABC);
  auto hml = LogicSpec::builtin(LogicKind::HML, kABC);
  CHECK(eval_in_system(bis, hml, parse_formula("<a> tt", hml), sys, 0).v == 1);
  CHECK(eval_in_system(bis, hml, parse_formula("tt", hml), sys, 0).str() == "true");

  auto pts = make_system(System::Kind::PTS, FinPoset::discrete({"x", "y", "z"}), {"a", "b"},
                         {{"x", "a", "y", Rational(1, 2)}, {"y", "b", "z", Rational(1)}});
  auto pt = Semantics::make(SemKind::PTrace, {"a", "b"});
  auto prob = LogicSpec::builtin(LogicKind::PROB, {"a", "b"});
  CHECK(eval_in_system(pt, prob, parse_formula("<a> tt", prob), pts, 0).str() == "1/2");
  CHECK(eval_in_system(pt, prob, parse_formula("<a><b> tt", prob), pts, 0).str() == "1/2");
  CHECK(eval_in_system(pt, prob, parse_formula("<b> tt", prob), pts, 0).str() == "0");
  CHECK_THROWS_AS(eval_in_system(bis, prob, f_tt(), sys, 0), Error);
}

TEST_CASE("sync truth values") {
  auto sys = lts({"s", "d", "t", "u"}, {{"s", "a", "d"}, {"s", "a", "t"}, {"t", "b", "u"}});
  auto sy = Semantics::make(SemKind::Sync, kABC);
  auto logic = LogicSpec::builtin(LogicKind::SYNC, kABC);
  const auto s = sys.state("s"), d = sys.state("d");
  CHECK(eval_in_system(sy, logic, parse_formula("<a> tt", logic), sys, s).str() == "true");
  CHECK(eval_in_system(sy, logic, parse_formula("[a] tt", logic), sys, s).str() == "true");
  CHECK(eval_in_system(sy, logic, parse_formula("<a><c> tt", logic), sys, s).str() == "false");
  CHECK(eval_in_system(sy, logic, parse_formula("<a><b><a> tt", logic), sys, s).str() == "deadlock");
  CHECK(eval_in_system(sy, logic, f_tt(), sys, d).str() == "true");
  CHECK(eval_in_system(sy, logic, parse_formula("<a> tt", logic), sys, d).str() == "deadlock");
  CHECK_THROWS_AS(eval_in_system(sy, logic, f_tt(), sys, d, 1), Error);
}

TEST_CASE("theory inclusion and distinguishing formulas") {
  auto sys = abac();
  auto bis = Semantics::make(SemKind::Bisim, kABC);
  auto hml = LogicSpec::builtin(LogicKind::HML, kABC);
  const auto p = sys.state("p"), q = sys.state("q");
  CHECK(theory_included(bis, hml, sys, p, sys, p, 4).included);
  auto r = theory_included(bis, hml, sys, q, sys, p, 4);
  REQUIRE_FALSE(r.included);
  CHECK(r.counterexample->depth == 2);
  CHECK(r.counterexample->formula->text == "[a]<b> tt");
  auto r2 = theory_included(bis, hml, sys, p, sys, q, 4);
  REQUIRE_FALSE(r2.included);
  CHECK_FALSE(truth_leq(r2.counterexample->at_x, r2.counterexample->at_y));

  auto sim = Semantics::make(SemKind::Sim, kABC);
  auto pos = LogicSpec::builtin(LogicKind::POS_HML, kABC);
  auto xy = lts({"x", "x1", "y"}, {{"x", "a", "x1"}});
  auto inc = theory_included(sim, pos, xy, 0, xy, xy.state("y"), 3);
  REQUIRE_FALSE(inc.included);
  CHECK(inc.counterexample->formula->text == "<a> tt");

  CHECK_FALSE(distinguish(sim, pos, sys, p, sys, q, 4));
  auto w = distinguish(sim, pos, sys, q, sys, p, 4);
  REQUIRE(w);
  CHECK(w->depth == 2);
  CHECK(w->formula->text == "<a> (<b> tt & <c> tt)");
  auto wb = distinguish(bis, hml, sys, p, sys, q, 4);
  REQUIRE(wb);
  CHECK(wb->at_x.str() == "true");
  CHECK(wb->at_y.str() == "false");
}

TEST_CASE("probabilistic distinguishing formula") {
  auto mk = [](Rational p) {
    return make_system(System::Kind::PTS, FinPoset::discrete({"x", "y", "z"}), {"a", "b"},
                       {{"x", "a", "y", p}, {"y", "b", "z", Rational(1)}});
  };
  auto half = mk(Rational(1, 2)), third = mk(Rational(1, 3));
  auto pt = Semantics::make(SemKind::PTrace, {"a", "b"});
  auto prob = LogicSpec::builtin(LogicKind::PROB, {"a", "b"});
  auto w = distinguish(pt, prob, half, 0, third, 0, 2);
  REQUIRE(w);
  CHECK(w->formula->text == "<a> tt");
  auto w2 = separate(prob, n_step_behaviour(pt, half, "x", 2), n_step_behaviour(pt, third, "x", 2), 9);
  REQUIRE(w2);
  CHECK(w2->formula->text == "<a><b> tt");
  CHECK(w2->at_x.str() == "1/2");
  CHECK(w2->at_y.str() == "1/3");
  CHECK_FALSE(distinguish(pt, prob, third, 0, half, 0, 3));
}

TEST_CASE("separation on small carriers") {
  auto pos = LogicSpec::builtin(LogicKind::POS_HML, {"a", "b"});
  for (std::size_t n = 0; n <= 1; ++n) {
    auto rep = check_separation(Semantics::make(SemKind::Sim, {"a", "b"}), pos, n);
    CHECK(rep.depth0);
    CHECK(rep.depth1);
  }
  auto sync = LogicSpec::builtin(LogicKind::SYNC, {"a", "b"});
  auto rep = check_separation(Semantics::make(SemKind::Sync, {"a", "b"}), sync, 0);
  CHECK(rep.depth0);
  CHECK(rep.depth1);
  auto hml = LogicSpec::builtin(LogicKind::HML, {"a", "b"});
  auto rb = check_separation(Semantics::make(SemKind::Bisim, {"a", "b"}), hml, 1);
  CHECK(rb.depth1);
  CHECK(rb.carrier1 == 256);
  // Positive formulas cannot separate bisimulation behaviours.
  CHECK_FALSE(check_separation(Semantics::make(SemKind::Bisim, {"a"}), pos, 1).depth1);
}

TEST_CASE("modal square on M1 Mn 1") {
  for (auto [k, lk] : {std::pair{SemKind::Bisim, LogicKind::HML}, std::pair{SemKind::Sim, LogicKind::POS_HML},
                       std::pair{SemKind::Sync, LogicKind::SYNC}}) {
    auto rep = check_modal_square(Semantics::make(k, {"a", "b"}), LogicSpec::builtin(lk, {"a", "b"}), 1, 100000);
    CHECK(rep.exhaustive);
    CHECK(rep.failures == 0);
    CHECK(rep.checks > 0);
  }
}

TEST_CASE("prob structure maps") {
  const LabelledOmegaSum d{{Rational(1, 2), 0, Rational(1)}, {Rational(1, 4), 1, Rational(1)}, {Rational(1, 4), 0, Rational(1, 2)}};
  CHECK(prob_alpha(0, d) == Rational(5, 8));
  CHECK(prob_alpha(1, d) == Rational(1, 4));
  CHECK(prob_o({{Rational(1, 3), Rational(1, 2)}, {Rational(1, 3), Rational(1)}}) == Rational(1, 2));
  CHECK(prob_o({}) == Rational(0));

  const auto prob = LogicSpec::builtin(LogicKind::PROB, {"a", "b"});
  for (std::size_t n = 0; n <= 2; ++n) {
    const auto rep = check_prob_squares(prob, n, 200, 3 + n);
    CHECK_MESSAGE(rep.failures == 0, rep.note);
    CHECK(rep.checks > 200);
    CHECK(rep.functions == (n == 0 ? 1u : n == 1 ? 2u : 4u));
  }
  CHECK_THROWS_AS(check_prob_squares(LogicSpec::builtin(LogicKind::HML, {"a"}), 1, 1), Error);
}
