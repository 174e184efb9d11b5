#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "gbp/monads.hpp"
#include "gbp/poset.hpp"
#include "gbp/rational.hpp"

namespace gbp {

struct Operation {
  enum class Kind { Choice, Action, Subconvex, Custom };
  std::string name;
  PosetRef arity;  // argument positions "1".."n" for the builtin kinds
  std::size_t depth = 0;
  Kind kind = Kind::Custom;
  std::vector<std::string> labels;  // Choice: label of each argument; Action: the label
  std::vector<Rational> coeffs;     // Subconvex
};

class GradedSignature {
 public:
  std::size_t add(Operation op);  // throws SchemaError on duplicate names
  const Operation& op(std::size_t i) const { return ops_[i]; }
  std::size_t size() const { return ops_.size(); }
  std::optional<std::size_t> find(std::string_view name) const;
  const std::vector<Operation>& ops() const { return ops_; }

 private:
  std::vector<Operation> ops_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

// Uniform-depth term. Constants carry the depth they are used at.
struct Term {
  enum class Kind : std::uint8_t { Var, App };
  Kind kind = Kind::Var;
  std::string var;
  std::size_t op = 0;
  std::vector<Term> args;
  std::size_t depth = 0;

  static Term variable(std::string name) { return Term{Kind::Var, std::move(name), 0, {}, 0}; }
  friend bool operator==(const Term&, const Term&) = default;
  friend auto operator<=>(const Term& a, const Term& b) {
    if (auto c = a.kind <=> b.kind; c != 0) return c;
    if (auto c = a.var <=> b.var; c != 0) return c;
    if (auto c = a.op <=> b.op; c != 0) return c;
    if (auto c = a.depth <=> b.depth; c != 0) return c;
    return a.args <=> b.args;
  }
};

// Builds sig.op(op)(args) at the uniform depth of its arguments (or `depth` for
// constants); throws NonUniform if argument depths disagree.
Term make_app(const GradedSignature& sig, std::size_t op, std::vector<Term> args, std::size_t const_depth = 0);
std::size_t term_depth(const GradedSignature& sig, const Term& t);  // validates uniformity
std::size_t term_size(const Term& t);
std::set<Term> subterms(const Term& t);
std::set<std::string> free_vars(const Term& t);
// gamma must map every free variable of t to terms of one common depth k.
Term uniform_substitute(const std::map<std::string, Term>& gamma, const Term& t);
std::string show_term(const GradedSignature& sig, const Term& t);

struct Inequation {
  PosetRef context;
  std::size_t depth = 0;
  Term lhs, rhs;
};

std::string show_inequation(const GradedSignature& sig, const Inequation& e);

struct GradedTheory {
  std::string name;
  GradedSignature sig;
  std::vector<Inequation> axioms;
  std::vector<std::string> labels;
  // Builtin theories: the normal-form model that presents them.
  std::optional<SemKind> model_semantics;
  bool subdistributions = false;  // PT / SUBCONVEX
};

enum class BuiltinTheory { JSL, JSL_DOWN, JSL_SYNC, PT, SUBCONVEX };
BuiltinTheory parse_builtin_theory(std::string_view name);
const char* builtin_theory_name(BuiltinTheory t);

struct TheoryBounds {
  std::size_t width = 2;  // sum widths / subconvex arities
  long max_den = 2;       // PT coefficient grid {p/q : q <= max_den}
};

GradedTheory builtin_theory(BuiltinTheory which, std::vector<std::string> labels, TheoryBounds bounds = {});
// Custom theory in JSON: {"name", "operations": [{"name","arity":{"elements","order"},"depth"}],
// "axioms": [{"context": {"vars","order"}, "depth", "lhs", "rhs"}]}.
GradedTheory load_theory(const std::string& json_text);

// Context syntax: "x<=y, z" (order pairs and lone variables). Empty -> empty context.
PosetRef parse_context(std::string_view text);
// Term syntax: variables, "0", "a(t)", sums "a(x) + b(y)", subconvex sums
// "1/2*x + 1/4*y", and prefix applications "f(t1, t2)".
Term parse_term(const GradedTheory& th, std::string_view text, std::optional<std::size_t> depth = std::nullopt);
// "s <= t : k", "s = t : k" (one inequation per direction), depth optional.
std::vector<Inequation> parse_goal(const GradedTheory& th, const PosetRef& context, std::string_view text);

struct DerivationStep {
  std::string rule;  // Var, Ar, Mon, Trans, Ax1, Ax2
  std::size_t depth = 0;
  Term lhs, rhs;
  std::vector<std::size_t> premises;  // indices of earlier steps
  std::size_t axiom = 0;              // Ax1/Ax2
  std::map<std::string, Term> subst;  // Ax1/Ax2
  std::size_t sub_i = 0, sub_j = 0;   // Ax2: subterm index in sub(s,t) and arity pair
};

struct DerivationBudget {
  std::size_t max_term_size = 4;
  std::size_t max_terms_per_depth = 1500;
  std::size_t max_rounds = 64;
};

struct DerivationVerdict {
  bool proved = false;
  std::vector<DerivationStep> trace;
  std::size_t rounds = 0;
  std::vector<std::size_t> universe;  // terms per depth
  bool truncated = false;
};

DerivationVerdict derivable(const GradedTheory& th, const Inequation& goal, const DerivationBudget& budget = {});
DerivationVerdict check_defined(const GradedTheory& th, const PosetRef& context, const Term& t,
                                const DerivationBudget& budget = {});
// Checks that every step follows from earlier ones by its rule and that the last step is `goal`.
bool replay(const GradedTheory& th, const Inequation& goal, const std::vector<DerivationStep>& trace,
            std::string* why = nullptr);
std::string show_trace(const GradedTheory& th, const PosetRef& context, const std::vector<DerivationStep>& trace);

// Saturated fact base over all terms up to the budget; exposed for bulk checks.
class Saturation {
 public:
  Saturation(const GradedTheory& th, PosetRef context, std::size_t max_depth, const DerivationBudget& budget,
             const std::vector<Term>& seeds = {});
  ~Saturation();
  Saturation(const Saturation&) = delete;
  Saturation& operator=(const Saturation&) = delete;

  const std::vector<Term>& terms(std::size_t depth) const;
  bool leq(std::size_t depth, std::size_t i, std::size_t j) const;
  std::optional<std::size_t> find(const Term& t) const;  // index within its depth
  std::vector<DerivationStep> trace(std::size_t depth, std::size_t i, std::size_t j) const;
  std::size_t rounds() const;
  bool truncated() const;

  struct Impl;

 private:
  std::unique_ptr<Impl> impl_;
};

// A (Sigma, n)-algebra given by per-depth carriers, order and operations.
class GradedModel {
 public:
  using Elem = std::size_t;
  virtual ~GradedModel() = default;
  virtual std::size_t max_depth() const = 0;
  // Elements used for valuations; `exhaustive` is false when this is a probe sample.
  virtual std::vector<Elem> carrier(std::size_t k, bool& exhaustive) = 0;
  virtual bool leq(std::size_t k, Elem a, Elem b) = 0;
  // sigma^A_k applied to args in A_k (monotone); result in A_{k + d(sigma)}.
  virtual Elem apply(std::size_t op, std::size_t k, const std::vector<Elem>& args) = 0;
  virtual std::string show(std::size_t k, Elem e) = 0;
};

// Normal-form model of a builtin theory over the base X, up to depth n.
std::unique_ptr<GradedModel> normal_form_model(const GradedTheory& th, const FinPoset& X, std::size_t n,
                                               std::size_t probe = 24);

struct SatisfactionResult {
  bool holds = true;
  bool exhaustive = true;
  std::size_t valuations = 0;
  std::string counterexample;
};

// Evaluates t under val (indexed like ctx) with variables in A_m; nullopt where undefined.
std::optional<GradedModel::Elem> evaluate(GradedModel& model, const GradedTheory& th, const Term& t,
                                          const std::vector<GradedModel::Elem>& val, const FinPoset& ctx,
                                          std::size_t m);
// Visits every monotone ctx -> A_m over model.carrier(m); returns false if visit stopped it.
bool for_each_valuation(GradedModel& model, const FinPoset& ctx, std::size_t m, bool& exhaustive,
                        const std::function<bool(const std::vector<GradedModel::Elem>&)>& visit);
SatisfactionResult satisfies(GradedModel& model, const GradedTheory& th, const Inequation& e);

struct FreeModelLevel {
  std::vector<std::vector<Term>> classes;  // derivable-equality classes of defined terms
  std::vector<std::vector<bool>> order;    // order[i][j]: class i <= class j derivable
};

struct FreeModelReport {
  std::vector<FreeModelLevel> levels;  // depth 0..n
  bool truncated = false;              // bounds hit; classes may merge under a larger budget
};

FreeModelReport free_model_elements(const GradedTheory& th, const FinPoset& X, std::size_t n,
                                    const DerivationBudget& budget = {});

}  // namespace gbp
