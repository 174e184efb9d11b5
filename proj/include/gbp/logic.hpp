#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gbp/coalgebra.hpp"
#include "gbp/monads.hpp"
#include "gbp/rational.hpp"

namespace gbp {

// Truth objects: the two-element chain, the synchronous variant with an extra
// incomparable deadlock value, and [0,1] with exact rationals.
enum class OmegaKind { Two, Sync3, Unit };

struct Truth {
  OmegaKind kind = OmegaKind::Two;
  std::uint8_t v = 0;  // Two/Sync3: 0 false, 1 true, 2 deadlock
  Rational p;          // Unit

  static Truth two(bool b) { return {OmegaKind::Two, static_cast<std::uint8_t>(b), {}}; }
  static Truth sync(std::uint8_t v) { return {OmegaKind::Sync3, v, {}}; }
  static Truth unit(Rational p) { return {OmegaKind::Unit, 0, std::move(p)}; }
  std::string str() const;
  friend bool operator==(const Truth& a, const Truth& b) { return a.kind == b.kind && a.v == b.v && a.p == b.p; }
};

bool truth_leq(const Truth& a, const Truth& b);

enum class LogicKind { HML, POS_HML, SYNC, PROB };

struct LogicSpec {
  LogicKind kind = LogicKind::HML;
  std::vector<std::string> labels;
  OmegaKind omega = OmegaKind::Two;
  bool has_box = false;
  bool has_or = false;
  bool has_and = false;
  bool has_ff = false;
  // tt/ff are 0-ary propositional operators (every depth) rather than depth-0 truth constants.
  bool polymorphic_constants = false;

  static LogicSpec builtin(LogicKind kind, std::vector<std::string> labels);
  std::string name() const;
  bool compatible(SemKind sem) const;
};

LogicKind parse_logic_kind(std::string_view name);
const char* logic_kind_name(LogicKind k);
// The logic paired with each semantics in the expressiveness results.
LogicKind default_logic(SemKind sem);

struct FNode;
using Formula = std::shared_ptr<const FNode>;

struct FNode {
  enum class Op { TT, FF, And, Or, Dia, Box };
  Op op = Op::TT;
  std::string label;          // Dia/Box; "{I}a" for ready-set diamonds
  std::vector<Formula> args;  // And/Or: >= 2 flattened, sorted; Dia/Box: one
  std::size_t depth = 0;      // minimal uniform depth
  bool fixed = false;         // depth is exact (no polymorphic constant inside)
  std::size_t size = 1;       // node count
  std::string text;           // canonical rendering
};

Formula f_tt();
Formula f_ff();
Formula f_and(std::vector<Formula> args);  // empty -> tt
Formula f_or(std::vector<Formula> args);   // empty -> ff
Formula f_dia(std::string label, Formula arg);
Formula f_box(std::string label, Formula arg);

// Grammar: tt | ff | f & g | f | g | !f | <a> f | [a] f | dia(a,{b,c}) f | ( f ).
// '!' is pushed to negation normal form and only accepted where the logic has [a].
Formula parse_formula(std::string_view text, const LogicSpec& logic);
// Throws ParseError / NonUniformDepth / UnknownSymbol if `f` is not a formula of `logic`
// at uniform depth `depth`.
void check_formula(const Formula& f, const LogicSpec& logic, std::size_t depth);

// Evaluation on normal forms over the one-element base.
Truth eval_tree(const LogicSpec& logic, const Formula& f, TreeStore& store, NodeId b);
Truth eval_trace(const LogicSpec& logic, const Formula& f, const TraceDist& d);
Truth eval_behaviour(const LogicSpec& logic, const Formula& f, const Behaviour& b);

// Depth defaults to the formula depth.
Truth eval_in_system(const Semantics& sem, const LogicSpec& logic, const Formula& f, const System& sys,
                     std::size_t x, std::optional<std::size_t> depth = std::nullopt);

struct Witness {
  Formula formula;
  std::size_t depth = 0;
  Truth at_x, at_y;
};

struct InclusionResult {
  bool included = true;
  std::optional<Witness> counterexample;
};

inline constexpr std::size_t kDefaultFormulaDepth = 4;
inline constexpr std::size_t kDefaultFormulaSize = 9;

// Enumerates formulas of depth n = 0..N up to `size_bound` nodes, modulo semantic
// equivalence on the sub-behaviours of x and y, and reports the first one with
// a value at x not below its value at y.
InclusionResult theory_included(const Semantics& sem, const LogicSpec& logic, const System& a, std::size_t x,
                                const System& b, std::size_t y, std::size_t N,
                                std::size_t size_bound = kDefaultFormulaSize);
// Same search on two given depth-n behaviours.
std::optional<Witness> separate(const LogicSpec& logic, const Behaviour& bx, const Behaviour& by,
                                std::size_t size_bound);

// Witness at the first failing depth, or nullopt if refinement holds up to N.
std::optional<Witness> distinguish(const Semantics& sem, const LogicSpec& logic, const System& a, std::size_t x,
                                   const System& b, std::size_t y, std::size_t N,
                                   std::size_t size_bound = kDefaultFormulaSize);
// Constructive witness for a failing pair of tree behaviours (conjunctions of
// pairwise separators under a diamond, or disjunctions under a box).
Formula construct_witness(const LogicSpec& logic, TreeStore& store, NodeId bx, NodeId by);

struct SeparationReport {
  bool depth0 = false;
  bool depth1 = false;
  std::size_t carrier0 = 0, carrier1 = 0;  // |M_n 1|, |M_{n+1} 1| (or sample sizes)
  std::size_t pairs_checked = 0, pairs_failing = 0;
  std::string note;
};

SeparationReport check_separation(const Semantics& sem, const LogicSpec& logic, std::size_t n,
                                  std::size_t cap = 20000, std::uint64_t seed = 1);

// The structure map [[L]] : M_1 Omega -> Omega of a modality, applied to an
// element of M_1 Omega given as a depth-1 set over the Omega base of `store`.
struct OmegaBase {
  std::uint32_t base = 0;
  std::size_t of(const Truth& t) const { return t.v; }
};
OmegaBase add_omega_base(TreeStore& store, OmegaKind kind);
Truth modality_structure(const LogicSpec& logic, FNode::Op op, const std::string& label, TreeStore& store,
                         NodeId m1omega);

struct SquareReport {
  std::size_t elements = 0;   // elements of M_1 M_n 1 visited
  std::size_t functions = 0;  // evaluations f : M_n 1 -> Omega used
  std::size_t checks = 0, failures = 0;
  bool exhaustive = false;
  std::string note;
};

// Checks [[L]](f) . a10 = [[L]] . M_1 f on M_1 M_n 1, exhaustively when
// |M_1 M_n 1| <= cap, for every modality and every f given by a depth-n formula
// up to `size_bound` nodes.
SquareReport check_modal_square(const Semantics& sem, const LogicSpec& logic, std::size_t n, std::size_t cap,
                                std::size_t size_bound = 5);

// PROB structure maps on formal sums: o : M_0[0,1] -> [0,1] takes expected values,
// and [[<a>]] : M_1[0,1] -> [0,1] sums p * r over the summands labelled a.
using OmegaSum = std::vector<std::pair<Rational, Rational>>;                        // (p, r)
using LabelledOmegaSum = std::vector<std::tuple<Rational, std::uint32_t, Rational>>;  // (p, a, r)
Rational prob_o(const OmegaSum& d);
Rational prob_alpha(std::uint32_t a, const LabelledOmegaSum& d);

// For PROB on random inputs: the modality square on M_1 M_n 1 for every depth-n
// formula, homomorphy and coequalization of [[<a>]], and monotonicity of o and [[<a>]].
SquareReport check_prob_squares(const LogicSpec& logic, std::size_t n, std::size_t samples, std::uint64_t seed = 1);

}  // namespace gbp
