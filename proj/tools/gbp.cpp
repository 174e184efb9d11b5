// gbp: command-line front end for refinement checks, formula evaluation,
// distinguishing formulas, derivations and the subdistribution order.
//
// Exit codes: 0 positive verdict, 1 negative verdict, 2 usage or validation error.

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <regex>
#include <set>
#include <sstream>

#include "gbp/coalgebra.hpp"
#include "gbp/error.hpp"
#include "gbp/logic.hpp"
#include "gbp/sdist.hpp"
#include "gbp/theory.hpp"

using namespace gbp;
using json = nlohmann::ordered_json;

namespace {

struct StateRef {
  std::string path, state;
};

StateRef parse_ref(const std::string& text) {
  const auto colon = text.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == text.size())
    throw Error(Errc::ParseError, "expected path.json:state, got '" + text + "'");
  return {text.substr(0, colon), text.substr(colon + 1)};
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::SchemaError, "cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Loaded {
  System a, b;
  std::size_t x = 0, y = 0;
};

// Loads both systems; a file named twice is loaded once.
Loaded load_pair(const std::string& ra, const std::string& rb, const Semantics* sem) {
  const auto A = parse_ref(ra), B = parse_ref(rb);
  Loaded out;
  out.a = load_system_file(A.path, sem);
  out.b = A.path == B.path ? out.a : load_system_file(B.path, sem);
  if (out.a.labels != out.b.labels) throw Error(Errc::LabelMismatch, "systems have different label sets");
  out.x = out.a.state(A.state);
  out.y = out.b.state(B.state);
  return out;
}

PosetRef load_poset(const std::string& path) {
  json doc;
  try {
    doc = json::parse(read_file(path));
    std::vector<std::pair<std::string, std::string>> order;
    if (doc.contains("order"))
      for (const auto& pr : doc.at("order")) order.emplace_back(pr.at(0).get<std::string>(), pr.at(1).get<std::string>());
    return share(FinPoset::validate(doc.at("elements").get<std::vector<std::string>>(), order));
  } catch (const json::exception& e) {
    throw Error(Errc::SchemaError, e.what());
  }
}

std::vector<std::string> split_labels(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

// Labels of a builtin theory: given explicitly, else every identifier applied in the goal.
std::vector<std::string> goal_labels(const std::string& goal) {
  static const std::regex app(R"(([A-Za-z_][A-Za-z0-9_]*)\s*\()");
  std::set<std::string> found;
  for (std::sregex_iterator it(goal.begin(), goal.end(), app), end; it != end; ++it) found.insert((*it)[1]);
  if (found.empty()) return {"a"};
  return {found.begin(), found.end()};
}

struct Options {
  std::string output = "text";
  bool json() const { return output == "json"; }
};

void emit(const Options& opt, const json& doc, const std::string& text) {
  if (opt.json())
    std::cout << doc.dump(2) << "\n";
  else
    std::cout << text;
}

std::string depth_range(std::size_t N) { return "(n=0.." + std::to_string(N) + ")"; }

// ------------------------------------------------------------------ commands

struct CheckArgs {
  std::string sem, a, b;
  std::optional<std::size_t> depth;
  bool no_validate = false;
};

int cmd_check(const Options& opt, const CheckArgs& args) {
  const SemKind kind = parse_sem_kind(args.sem);
  const auto first = parse_ref(args.a);
  const System probe = load_system_file(first.path);
  const auto sem = Semantics::make(kind, probe.labels);
  const auto L = load_pair(args.a, args.b, args.no_validate ? nullptr : &sem);
  const std::size_t N = args.depth.value_or(default_depth(L.a, L.b));
  const auto v = refines(sem, L.a, L.x, L.b, L.y, N);

  std::ostringstream os;
  os << "n  holds\n";
  json rows = json::array();
  for (std::size_t n = 0; n < v.holds.size(); ++n) {
    os << n << "  " << (v.holds[n] ? "yes" : "no") << "\n";
    rows.push_back(static_cast<bool>(v.holds[n]));
  }
  if (v.all())
    os << "refines: yes " << depth_range(N) << "\n";
  else
    os << "refines: no (first failure at n=" << *v.first_failure << ")\n";
  json doc{{"command", "check"}, {"semantics", sem.name()}, {"depth", N},     {"holds", rows},
           {"refines", v.all()}, {"first_failure", v.first_failure ? json(*v.first_failure) : json(nullptr)}};
  emit(opt, doc, os.str());
  return v.all() ? 0 : 1;
}

struct EvalArgs {
  std::string sem, logic, ref, formula;
  std::optional<std::size_t> depth;
};

LogicSpec logic_for(const std::string& name, SemKind kind, const std::vector<std::string>& labels) {
  const LogicKind lk = name.empty() ? default_logic(kind) : parse_logic_kind(name);
  return LogicSpec::builtin(lk, labels);
}

int cmd_eval(const Options& opt, const EvalArgs& args) {
  const SemKind kind = parse_sem_kind(args.sem);
  const auto r = parse_ref(args.ref);
  const System probe = load_system_file(r.path);
  const auto sem = Semantics::make(kind, probe.labels);
  const System sys = load_system_file(r.path, &sem);
  const auto logic = logic_for(args.logic, kind, sys.labels);
  const Formula f = parse_formula(args.formula, logic);
  const std::size_t depth = args.depth.value_or(f->depth);
  const Truth t = eval_in_system(sem, logic, f, sys, sys.state(r.state), depth);
  json doc{{"command", "eval"}, {"semantics", sem.name()}, {"logic", logic.name()}, {"formula", f->text},
           {"depth", depth},    {"value", t.str()}};
  emit(opt, doc, t.str() + "\n");
  return 0;
}

struct DistinguishArgs {
  std::string sem, logic, a, b;
  std::optional<std::size_t> depth;
  std::size_t size = kDefaultFormulaSize;
};

int cmd_distinguish(const Options& opt, const DistinguishArgs& args) {
  const SemKind kind = parse_sem_kind(args.sem);
  const System probe = load_system_file(parse_ref(args.a).path);
  const auto sem = Semantics::make(kind, probe.labels);
  const auto L = load_pair(args.a, args.b, &sem);
  const auto logic = logic_for(args.logic, kind, L.a.labels);
  const std::size_t N = args.depth.value_or(default_depth(L.a, L.b));
  const auto w = distinguish(sem, logic, L.a, L.x, L.b, L.y, N, args.size);
  if (!w) {
    if (!refines(sem, L.a, L.x, L.b, L.y, N).all())
      throw Error(Errc::NoWitnessWithinBounds, "refinement fails but no formula within the size bound separates");
    json doc{{"command", "distinguish"}, {"semantics", sem.name()}, {"logic", logic.name()}, {"depth", N},
             {"witness", nullptr}};
    emit(opt, doc, "none: refines " + depth_range(N) + "\n");
    return 1;
  }
  std::ostringstream os;
  os << "witness (n=" << w->depth << "): " << w->formula->text << "\n"
     << "  at " << args.a << ": " << w->at_x.str() << "\n"
     << "  at " << args.b << ": " << w->at_y.str() << "\n";
  json doc{{"command", "distinguish"}, {"semantics", sem.name()}, {"logic", logic.name()}, {"depth", N},
           {"witness", {{"formula", w->formula->text}, {"depth", w->depth}, {"at_x", w->at_x.str()},
                        {"at_y", w->at_y.str()}}}};
  emit(opt, doc, os.str());
  return 0;
}

struct DeriveArgs {
  std::string theory, labels, ctx, goal;
  DerivationBudget budget;
  TheoryBounds bounds;
};

int cmd_derive(const Options& opt, const DeriveArgs& args) {
  GradedTheory th;
  if (args.theory.size() > 5 && args.theory.ends_with(".json"))
    th = load_theory(read_file(args.theory));
  else
    th = builtin_theory(parse_builtin_theory(args.theory),
                        args.labels.empty() ? goal_labels(args.goal) : split_labels(args.labels), args.bounds);
  const auto ctx = parse_context(args.ctx);
  const auto goals = parse_goal(th, ctx, args.goal);

  bool all = true;
  std::ostringstream os;
  json parts = json::array();
  for (const auto& g : goals) {
    const auto v = derivable(th, g, args.budget);
    std::string why;
    if (v.proved && !replay(th, g, v.trace, &why))
      throw Error(Errc::MalformedGoal, "internal: trace does not replay: " + why);
    all = all && v.proved;
    const std::string shown = show_inequation(th.sig, g);
    json steps = json::array();
    for (const auto& s : v.trace)
      steps.push_back({{"rule", s.rule},
                       {"depth", s.depth},
                       {"lhs", show_term(th.sig, s.lhs)},
                       {"rhs", show_term(th.sig, s.rhs)},
                       {"premises", s.premises}});
    json universe = json::array();
    for (auto u : v.universe) universe.push_back(u);
    parts.push_back({{"goal", shown},
                     {"proved", v.proved},
                     {"rounds", v.rounds},
                     {"universe", universe},
                     {"truncated", v.truncated},
                     {"trace", steps}});
    if (v.proved)
      os << "proved: " << shown << "\n" << show_trace(th, ctx, v.trace);
    else
      os << "unknown (budget): " << shown << "\n";
  }
  json doc{{"command", "derive"}, {"theory", th.name}, {"verdict", all ? "proved" : "unknown"}, {"goals", parts}};
  emit(opt, doc, os.str());
  return all ? 0 : 1;
}

struct OrderArgs {
  std::string poset, mu, nu;
};

int cmd_order(const Options& opt, const OrderArgs& args) {
  const auto P = load_poset(args.poset);
  const SubDist mu = FormalSum::parse(P, args.mu).quotient(), nu = FormalSum::parse(P, args.nu).quotient();
  const bool below = sdist_leq_flow(mu, nu);
  json doc{{"command", "order"}, {"lhs", mu.str()}, {"rhs", nu.str()}, {"below", below}};
  emit(opt, doc, std::string(below ? "below" : "not below") + "\n");
  return below ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Graded behavioural preorders: refinement, logics and graded theories"};
  app.require_subcommand(1);
  app.fallthrough();
  Options opt;
  app.add_option("--output", opt.output, "Output format")->check(CLI::IsMember({"text", "json"}));

  CheckArgs check;
  auto* c = app.add_subcommand("check", "Decide refinement of two states up to a depth");
  c->add_option("--sem", check.sem, "bisim | sim | readysim | sync | ptrace")->required();
  c->add_option("--depth", check.depth, "Largest depth checked (default from the system sizes)");
  c->add_flag("--no-validate", check.no_validate, "Skip the monotonicity check on load");
  c->add_option("lhs", check.a, "path.json:state")->required();
  c->add_option("rhs", check.b, "path.json:state")->required();

  EvalArgs eval;
  auto* e = app.add_subcommand("eval", "Evaluate a graded formula at a state");
  e->add_option("--sem", eval.sem, "Semantics")->required();
  e->add_option("--logic", eval.logic, "hml | pos_hml | sync | prob (default paired with --sem)");
  e->add_option("--depth", eval.depth, "Evaluation depth (default: formula depth)");
  e->add_option("state", eval.ref, "path.json:state")->required();
  e->add_option("formula", eval.formula, "Formula")->required();

  DistinguishArgs dist;
  auto* d = app.add_subcommand("distinguish", "Find a formula separating two states");
  d->add_option("--sem", dist.sem, "Semantics")->required();
  d->add_option("--logic", dist.logic, "Logic (default paired with --sem)");
  d->add_option("--depth", dist.depth, "Largest depth searched");
  d->add_option("--size", dist.size, "Formula size bound (nodes)")->check(CLI::PositiveNumber);
  d->add_option("lhs", dist.a, "path.json:state")->required();
  d->add_option("rhs", dist.b, "path.json:state")->required();

  DeriveArgs der;
  auto* r = app.add_subcommand("derive", "Derive an inequation in a graded theory");
  r->add_option("--theory", der.theory, "jsl | jsl_down | jsl_sync | pt | subconvex | theory.json")->required();
  r->add_option("--labels", der.labels, "Comma-separated labels (default: those applied in the goal)");
  r->add_option("--ctx", der.ctx, "Context, e.g. \"x<=y, z\"");
  r->add_option("--max-size", der.budget.max_term_size, "Term size bound")->check(CLI::PositiveNumber);
  r->add_option("--max-terms", der.budget.max_terms_per_depth, "Terms per depth")->check(CLI::PositiveNumber);
  r->add_option("--max-rounds", der.budget.max_rounds, "Saturation rounds")->check(CLI::PositiveNumber);
  r->add_option("--width", der.bounds.width, "Sum width of the axiom schemes")->check(CLI::Range(2, 8));
  r->add_option("--max-den", der.bounds.max_den, "Coefficient grid denominator")->check(CLI::Range(1, 12));
  r->add_option("goal", der.goal, "\"s <= t : k\" or \"s = t : k\"")->required();

  OrderArgs ord;
  auto* o = app.add_subcommand("order", "Compare two subdistributions over a poset");
  o->add_option("--poset", ord.poset, "Poset file {\"elements\", \"order\"}")->required();
  o->add_option("lhs", ord.mu, "Formal sum, e.g. \"1/2 x + 1/2 y\"")->required();
  o->add_option("rhs", ord.nu, "Formal sum")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*c) return cmd_check(opt, check);
    if (*e) return cmd_eval(opt, eval);
    if (*d) return cmd_distinguish(opt, dist);
    if (*r) return cmd_derive(opt, der);
    if (*o) return cmd_order(opt, ord);
  } catch (const Error& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 2;
  }
  return 2;
}
