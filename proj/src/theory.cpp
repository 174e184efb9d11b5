#include "gbp/theory.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "gbp/error.hpp"

namespace gbp {

namespace {

std::vector<std::string> arity_ids(std::size_t n) {
  const std::size_t width = std::to_string(n).size();
  std::vector<std::string> ids;
  for (std::size_t i = 1; i <= n; ++i) {
    std::string s = std::to_string(i);
    ids.push_back(std::string(width - s.size(), '0') + s);
  }
  return ids;
}

PosetRef discrete_arity(std::size_t n) { return share(FinPoset::discrete(arity_ids(n))); }

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? sep : "") + parts[i];
  return out;
}

std::string subconvex_name(const std::vector<Rational>& coeffs) {
  if (coeffs.empty()) return "0";
  std::vector<std::string> s;
  for (const auto& c : coeffs) s.push_back(c.str());
  return "sc[" + join(s, ",") + "]";
}

}  // namespace

// ---------------------------------------------------------------- signatures

std::size_t GradedSignature::add(Operation op) {
  if (index_.count(op.name)) throw Error(Errc::SchemaError, "duplicate operation " + op.name);
  if (!op.arity) op.arity = discrete_arity(0);
  index_.emplace(op.name, ops_.size());
  ops_.push_back(std::move(op));
  return ops_.size() - 1;
}

std::optional<std::size_t> GradedSignature::find(std::string_view name) const {
  auto it = index_.find(name);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

// --------------------------------------------------------------------- terms

Term make_app(const GradedSignature& sig, std::size_t op, std::vector<Term> args, std::size_t const_depth) {
  const Operation& o = sig.op(op);
  if (args.size() != o.arity->size())
    throw Error(Errc::MalformedGoal, o.name + " expects " + std::to_string(o.arity->size()) + " arguments");
  Term t;
  t.kind = Term::Kind::App;
  t.op = op;
  if (args.empty()) {
    t.depth = std::max(o.depth, const_depth);
  } else {
    const std::size_t m = args[0].depth;
    for (const auto& a : args)
      if (a.depth != m) throw Error(Errc::NonUniform, "arguments of " + o.name + " disagree on depth");
    t.depth = m + o.depth;
  }
  t.args = std::move(args);
  return t;
}

std::size_t term_depth(const GradedSignature& sig, const Term& t) {
  if (t.kind == Term::Kind::Var) {
    if (t.depth != 0) throw Error(Errc::NonUniform, "variable " + t.var + " above depth 0");
    return 0;
  }
  if (t.op >= sig.size()) throw Error(Errc::UnknownSymbol, "operation index out of range");
  const Operation& o = sig.op(t.op);
  if (t.args.size() != o.arity->size()) throw Error(Errc::MalformedGoal, o.name + ": wrong argument count");
  if (t.args.empty()) {
    if (t.depth < o.depth) throw Error(Errc::NonUniform, "constant " + o.name + " below its depth");
    return t.depth;
  }
  const std::size_t m = term_depth(sig, t.args[0]);
  for (const auto& a : t.args)
    if (term_depth(sig, a) != m) throw Error(Errc::NonUniform, "arguments of " + o.name + " disagree on depth");
  if (t.depth != m + o.depth) throw Error(Errc::NonUniform, "stored depth of " + o.name + " is inconsistent");
  return t.depth;
}

std::size_t term_size(const Term& t) {
  std::size_t s = 1;
  for (const auto& a : t.args) s += term_size(a);
  return s;
}

std::set<Term> subterms(const Term& t) {
  std::set<Term> out;
  std::function<void(const Term&)> rec = [&](const Term& u) {
    if (!out.insert(u).second) return;
    for (const auto& a : u.args) rec(a);
  };
  rec(t);
  return out;
}

std::set<std::string> free_vars(const Term& t) {
  std::set<std::string> out;
  std::function<void(const Term&)> rec = [&](const Term& u) {
    if (u.kind == Term::Kind::Var) out.insert(u.var);
    for (const auto& a : u.args) rec(a);
  };
  rec(t);
  return out;
}

namespace {

Term substitute_at(const std::map<std::string, Term>& gamma, const Term& t, std::size_t k) {
  if (t.kind == Term::Kind::Var) {
    auto it = gamma.find(t.var);
    if (it == gamma.end()) throw Error(Errc::NonUniformSubstitution, "no image for " + t.var);
    if (it->second.depth != k) throw Error(Errc::NonUniformSubstitution, "image of " + t.var + " has the wrong depth");
    return it->second;
  }
  Term r;
  r.kind = Term::Kind::App;
  r.op = t.op;
  r.depth = t.depth + k;
  r.args.reserve(t.args.size());
  for (const auto& a : t.args) r.args.push_back(substitute_at(gamma, a, k));
  return r;
}

}  // namespace

Term uniform_substitute(const std::map<std::string, Term>& gamma, const Term& t) {
  std::optional<std::size_t> k;
  for (const auto& [x, img] : gamma) {
    if (k && *k != img.depth) throw Error(Errc::NonUniformSubstitution, "images of mixed depth");
    k = img.depth;
  }
  return substitute_at(gamma, t, k.value_or(0));
}

namespace {

bool needs_parens(const GradedSignature& sig, const Term& t) {
  if (t.kind == Term::Kind::Var) return false;
  const Operation& o = sig.op(t.op);
  if (o.kind == Operation::Kind::Subconvex) return !t.args.empty();
  if (o.kind == Operation::Kind::Choice) return t.args.size() >= 2;
  return false;
}

}  // namespace

std::string show_term(const GradedSignature& sig, const Term& t) {
  if (t.kind == Term::Kind::Var) return t.var;
  const Operation& o = sig.op(t.op);
  auto atom = [&](const Term& a) {
    std::string s = show_term(sig, a);
    return needs_parens(sig, a) ? "(" + s + ")" : s;
  };
  std::vector<std::string> parts;
  switch (o.kind) {
    case Operation::Kind::Choice:
      if (t.args.empty()) return "0";
      for (std::size_t i = 0; i < t.args.size(); ++i)
        parts.push_back(o.labels[i] + "(" + show_term(sig, t.args[i]) + ")");
      return join(parts, " + ");
    case Operation::Kind::Action:
      return o.labels[0] + "(" + show_term(sig, t.args[0]) + ")";
    case Operation::Kind::Subconvex:
      if (t.args.empty()) return "0";
      for (std::size_t i = 0; i < t.args.size(); ++i) parts.push_back(o.coeffs[i].str() + "*" + atom(t.args[i]));
      return join(parts, " + ");
    case Operation::Kind::Custom:
      if (t.args.empty()) return o.name;
      for (const auto& a : t.args) parts.push_back(show_term(sig, a));
      return o.name + "(" + join(parts, ", ") + ")";
  }
  return o.name;
}

namespace {

std::string show_context(const FinPoset& ctx) {
  std::vector<std::string> parts;
  std::vector<bool> mentioned(ctx.size(), false);
  for (std::size_t i = 0; i < ctx.size(); ++i)
    for (std::size_t j = 0; j < ctx.size(); ++j) {
      if (!ctx.less(i, j)) continue;
      bool cover = true;
      for (std::size_t m = 0; m < ctx.size() && cover; ++m)
        if (ctx.less(i, m) && ctx.less(m, j)) cover = false;
      if (!cover) continue;
      parts.push_back(ctx.id(i) + "<=" + ctx.id(j));
      mentioned[i] = mentioned[j] = true;
    }
  for (std::size_t i = 0; i < ctx.size(); ++i)
    if (!mentioned[i]) parts.push_back(ctx.id(i));
  return join(parts, ", ");
}

}  // namespace

std::string show_inequation(const GradedSignature& sig, const Inequation& e) {
  return show_context(*e.context) + " |-" + std::to_string(e.depth) + " " + show_term(sig, e.lhs) +
         " <= " + show_term(sig, e.rhs);
}

// -------------------------------------------------------------------- parser

namespace {

struct Tok {
  enum Kind { Ident, Num, Sym, End } kind = End;
  std::string text;
};

std::vector<Tok> tokenize(std::string_view s) {
  std::vector<Tok> out;
  std::size_t i = 0;
  while (i < s.size()) {
    const char c = s[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
    } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i;
      while (j < s.size() && (std::isalnum(static_cast<unsigned char>(s[j])) || s[j] == '_' || s[j] == '\''))
        ++j;
      out.push_back({Tok::Ident, std::string(s.substr(i, j - i))});
      i = j;
    } else if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t j = i;
      while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
      if (j + 1 < s.size() && s[j] == '/' && std::isdigit(static_cast<unsigned char>(s[j + 1]))) {
        ++j;
        while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
      }
      out.push_back({Tok::Num, std::string(s.substr(i, j - i))});
      i = j;
    } else if (s.substr(i, 2) == "<=" || s.substr(i, 2) == ">=") {
      out.push_back({Tok::Sym, std::string(s.substr(i, 2))});
      i += 2;
    } else if (std::string_view("()+*,=:").find(c) != std::string_view::npos) {
      out.push_back({Tok::Sym, std::string(1, c)});
      ++i;
    } else {
      throw Error(Errc::ParseError, std::string("unexpected character '") + c + "'");
    }
  }
  out.push_back({Tok::End, ""});
  return out;
}

Term raw_app(std::size_t op, std::vector<Term> args) {
  Term t;
  t.kind = Term::Kind::App;
  t.op = op;
  t.args = std::move(args);
  return t;
}

class TermParser {
 public:
  TermParser(const GradedTheory& th, std::vector<Tok> toks) : th_(th), toks_(std::move(toks)) {}

  Term sum() {
    std::vector<Piece> pieces{summand()};
    while (is_sym("+")) {
      ++pos_;
      pieces.push_back(summand());
    }
    return build(std::move(pieces));
  }

  const Tok& peek(std::size_t ahead = 0) const { return toks_[std::min(pos_ + ahead, toks_.size() - 1)]; }
  bool is_sym(std::string_view s, std::size_t ahead = 0) const {
    return peek(ahead).kind == Tok::Sym && peek(ahead).text == s;
  }
  void expect(std::string_view s) {
    if (!is_sym(s)) throw Error(Errc::ParseError, "expected '" + std::string(s) + "' near '" + peek().text + "'");
    ++pos_;
  }
  std::size_t pos() const { return pos_; }
  void advance() { ++pos_; }

 private:
  struct Piece {
    std::optional<Rational> coef;
    bool action = false;
    std::string label;
    Term term;  // the argument for actions
  };

  std::size_t op_named(const std::string& name) const {
    auto id = th_.sig.find(name);
    if (!id) throw Error(Errc::UnknownSymbol, "no operation " + name + " in " + th_.name);
    return *id;
  }

  bool is_label(const std::string& s) const {
    return std::find(th_.labels.begin(), th_.labels.end(), s) != th_.labels.end();
  }

  Term piece_term(Piece p) const {
    if (!p.action) return std::move(p.term);
    return raw_app(op_named(p.label), {std::move(p.term)});
  }

  Term build(std::vector<Piece> pieces) {
    const bool any_coef = std::any_of(pieces.begin(), pieces.end(), [](const Piece& p) { return p.coef; });
    const bool all_coef = std::all_of(pieces.begin(), pieces.end(), [](const Piece& p) { return p.coef; });
    if (any_coef && !all_coef) throw Error(Errc::ParseError, "mixed weighted and unweighted summands");
    if (all_coef) {
      std::vector<Rational> coeffs;
      std::vector<Term> args;
      for (auto& p : pieces) {
        coeffs.push_back(*p.coef);
        p.coef.reset();
        args.push_back(piece_term(std::move(p)));
      }
      return raw_app(op_named(subconvex_name(coeffs)), std::move(args));
    }
    if (pieces.size() == 1) return piece_term(std::move(pieces[0]));
    for (const auto& p : pieces)
      if (!p.action) throw Error(Errc::NonUniform, "sum of non-action summands");
    std::stable_sort(pieces.begin(), pieces.end(), [](const Piece& a, const Piece& b) { return a.label < b.label; });
    std::vector<std::string> labels;
    std::vector<Term> args;
    for (auto& p : pieces) {
      labels.push_back(p.label);
      args.push_back(std::move(p.term));
    }
    return raw_app(op_named(join(labels, "+")), std::move(args));
  }

  Piece summand() {
    if (peek().kind == Tok::Num) {
      const std::string num = peek().text;
      ++pos_;
      const bool starts_atom = is_sym("*") || is_sym("(") || peek().kind == Tok::Ident;
      if (!starts_atom) {
        if (Rational::parse(num).is_zero()) return Piece{std::nullopt, false, "", raw_app(op_named("0"), {})};
        throw Error(Errc::ParseError, "stray number " + num);
      }
      if (is_sym("*")) ++pos_;
      Piece p = atom();
      p.coef = Rational::parse(num);
      return p;
    }
    return atom();
  }

  Piece atom() {
    const Tok t = peek();
    if (t.kind == Tok::Sym && t.text == "(") {
      // s-expression "(f a b)" when an operation name follows and no call parenthesis does
      if (peek(1).kind == Tok::Ident && th_.sig.find(peek(1).text) && !is_sym("(", 2) && !is_sym(",", 2) &&
          !is_sym("+", 2)) {
        ++pos_;
        const std::string name = peek().text;
        ++pos_;
        std::vector<Term> args;
        while (!is_sym(")")) {
          if (peek().kind == Tok::End) throw Error(Errc::ParseError, "unterminated s-expression");
          Piece p = atom();
          args.push_back(piece_term(std::move(p)));
        }
        ++pos_;
        if (is_label(name) && args.size() == 1) return Piece{std::nullopt, true, name, std::move(args[0])};
        return Piece{std::nullopt, false, "", raw_app(op_named(name), std::move(args))};
      }
      ++pos_;
      Term inner = sum();
      expect(")");
      return Piece{std::nullopt, false, "", std::move(inner)};
    }
    if (t.kind == Tok::Num && Rational::parse(t.text).is_zero()) {
      ++pos_;
      return Piece{std::nullopt, false, "", raw_app(op_named("0"), {})};
    }
    if (t.kind != Tok::Ident) throw Error(Errc::ParseError, "unexpected '" + t.text + "'");
    ++pos_;
    if (is_sym("(")) {
      ++pos_;
      std::vector<Term> args;
      if (!is_sym(")")) {
        args.push_back(sum());
        while (is_sym(",")) {
          ++pos_;
          args.push_back(sum());
        }
      }
      expect(")");
      if (is_label(t.text) && args.size() == 1) return Piece{std::nullopt, true, t.text, std::move(args[0])};
      return Piece{std::nullopt, false, "", raw_app(op_named(t.text), std::move(args))};
    }
    if (auto id = th_.sig.find(t.text); id && th_.sig.op(*id).arity->size() == 0)
      return Piece{std::nullopt, false, "", raw_app(*id, {})};
    return Piece{std::nullopt, false, "", Term::variable(t.text)};
  }

  const GradedTheory& th_;
  std::vector<Tok> toks_;
  std::size_t pos_ = 0;
};

// Resolves depths bottom-up; constants take their least depth and are lifted to
// the depth their siblings demand. Returns whether a variable occurs (rigid).
bool normalize(const GradedSignature& sig, Term& t);

void lift(const GradedSignature& sig, Term& t, std::size_t d) {
  if (t.kind == Term::Kind::Var) {
    if (d != 0) throw Error(Errc::NonUniform, "variable " + t.var + " used at depth " + std::to_string(d));
    return;
  }
  const Operation& o = sig.op(t.op);
  if (d < o.depth) throw Error(Errc::NonUniform, o.name + " cannot occur at depth " + std::to_string(d));
  for (auto& a : t.args) lift(sig, a, d - o.depth);
  t.depth = d;
}

bool normalize(const GradedSignature& sig, Term& t) {
  if (t.kind == Term::Kind::Var) {
    t.depth = 0;
    return true;
  }
  const Operation& o = sig.op(t.op);
  if (t.args.size() != o.arity->size())
    throw Error(Errc::MalformedGoal, o.name + " expects " + std::to_string(o.arity->size()) + " arguments");
  if (t.args.empty()) {
    t.depth = o.depth;
    return false;
  }
  std::optional<std::size_t> rigid;
  std::size_t flex = 0;
  for (auto& a : t.args) {
    if (normalize(sig, a)) {
      if (rigid && *rigid != a.depth) throw Error(Errc::NonUniform, "arguments of " + o.name + " disagree on depth");
      rigid = a.depth;
    } else {
      flex = std::max(flex, a.depth);
    }
  }
  if (rigid && flex > *rigid) throw Error(Errc::NonUniform, "arguments of " + o.name + " disagree on depth");
  const std::size_t m = rigid.value_or(flex);
  for (auto& a : t.args) lift(sig, a, m);
  t.depth = m + o.depth;
  return rigid.has_value();
}

}  // namespace

PosetRef parse_context(std::string_view text) {
  std::vector<std::string> ids;
  std::vector<std::pair<std::string, std::string>> pairs;
  std::string s(text);
  std::stringstream parts(s);
  std::string part;
  auto trim = [](std::string x) {
    const auto b = x.find_first_not_of(" \t");
    if (b == std::string::npos) return std::string();
    return x.substr(b, x.find_last_not_of(" \t") - b + 1);
  };
  while (std::getline(parts, part, ',')) {
    std::vector<std::string> chain;
    std::size_t at = 0;
    while (true) {
      const auto le = part.find("<=", at);
      chain.push_back(trim(part.substr(at, le == std::string::npos ? std::string::npos : le - at)));
      if (le == std::string::npos) break;
      at = le + 2;
    }
    if (chain.size() == 1 && chain[0].empty()) continue;
    for (const auto& c : chain) {
      if (c.empty() || !std::all_of(c.begin(), c.end(), [](char ch) {
            return std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '\'';
          }))
        throw Error(Errc::ParseError, "bad context entry '" + part + "'");
      if (std::find(ids.begin(), ids.end(), c) == ids.end()) ids.push_back(c);
    }
    for (std::size_t i = 0; i + 1 < chain.size(); ++i) pairs.emplace_back(chain[i], chain[i + 1]);
  }
  return share(FinPoset::validate(ids, pairs));
}

Term parse_term(const GradedTheory& th, std::string_view text, std::optional<std::size_t> depth) {
  TermParser p(th, tokenize(text));
  Term t = p.sum();
  if (p.peek().kind != Tok::End) throw Error(Errc::ParseError, "trailing input near '" + p.peek().text + "'");
  const bool rigid = normalize(th.sig, t);
  if (depth) {
    if (rigid && t.depth != *depth)
      throw Error(Errc::NonUniform, "term has depth " + std::to_string(t.depth) + ", not " + std::to_string(*depth));
    lift(th.sig, t, *depth);
  }
  return t;
}

std::vector<Inequation> parse_goal(const GradedTheory& th, const PosetRef& context, std::string_view text) {
  TermParser p(th, tokenize(text));
  Term lhs = p.sum();
  std::string rel;
  if (p.is_sym("<=") || p.is_sym(">=") || p.is_sym("=")) {
    rel = p.peek().text;
    p.advance();
  } else {
    throw Error(Errc::MalformedGoal, "expected '<=', '>=' or '=' in goal");
  }
  Term rhs = p.sum();
  std::optional<std::size_t> depth;
  if (p.is_sym(":")) {
    p.advance();
    if (p.peek().kind != Tok::Num || p.peek().text.find('/') != std::string::npos)
      throw Error(Errc::MalformedGoal, "depth must be a natural number");
    depth = std::stoul(p.peek().text);
    p.advance();
  }
  if (p.peek().kind != Tok::End) throw Error(Errc::ParseError, "trailing input near '" + p.peek().text + "'");
  const bool rl = normalize(th.sig, lhs), rr = normalize(th.sig, rhs);
  std::size_t d;
  if (depth) {
    d = *depth;
  } else if (rl && rr) {
    d = lhs.depth;
  } else if (rl) {
    d = lhs.depth;
  } else if (rr) {
    d = rhs.depth;
  } else {
    d = std::max(lhs.depth, rhs.depth);
  }
  if ((rl && lhs.depth != d) || (rr && rhs.depth != d))
    throw Error(Errc::MalformedGoal, "sides are not both of depth " + std::to_string(d));
  lift(th.sig, lhs, d);
  lift(th.sig, rhs, d);
  for (const auto* side : {&lhs, &rhs})
    for (const auto& x : free_vars(*side))
      if (!context->find(x)) throw Error(Errc::MalformedGoal, "variable " + x + " not in context");
  if (rel == ">=") std::swap(lhs, rhs);
  std::vector<Inequation> out{{context, d, lhs, rhs}};
  if (rel == "=") out.push_back({context, d, rhs, lhs});
  return out;
}

// ---------------------------------------------------------- builtin theories

BuiltinTheory parse_builtin_theory(std::string_view name) {
  std::string n(name);
  std::transform(n.begin(), n.end(), n.begin(), [](unsigned char c) { return std::toupper(c); });
  if (n == "JSL") return BuiltinTheory::JSL;
  if (n == "JSL_DOWN") return BuiltinTheory::JSL_DOWN;
  if (n == "JSL_SYNC") return BuiltinTheory::JSL_SYNC;
  if (n == "PT") return BuiltinTheory::PT;
  if (n == "SUBCONVEX") return BuiltinTheory::SUBCONVEX;
  throw Error(Errc::UnknownSymbol, "unknown theory " + std::string(name));
}

const char* builtin_theory_name(BuiltinTheory t) {
  switch (t) {
    case BuiltinTheory::JSL: return "JSL";
    case BuiltinTheory::JSL_DOWN: return "JSL_DOWN";
    case BuiltinTheory::JSL_SYNC: return "JSL_SYNC";
    case BuiltinTheory::PT: return "PT";
    case BuiltinTheory::SUBCONVEX: return "SUBCONVEX";
  }
  return "?";
}

namespace {

using Summand = std::pair<std::string, Term>;  // (label, argument)

// Sum a1(t1) + ... + an(tn) as a choice operation; summands stably sorted by label.
Term choice_term(const GradedTheory& th, std::vector<Summand> s, std::size_t zero_depth) {
  std::stable_sort(s.begin(), s.end(), [](const Summand& a, const Summand& b) { return a.first < b.first; });
  std::vector<std::string> labels;
  std::vector<Term> args;
  for (auto& [l, t] : s) {
    labels.push_back(l);
    args.push_back(t);
  }
  const std::string name = s.empty() ? "0" : join(labels, "+");
  return make_app(th.sig, *th.sig.find(name), std::move(args), zero_depth);
}

std::vector<std::string> var_names(const std::string& stem, std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 1; i <= n; ++i) out.push_back(stem + std::to_string(i));
  return out;
}

void add_both(GradedTheory& th, const PosetRef& ctx, std::size_t depth, const Term& s, const Term& t) {
  th.axioms.push_back({ctx, depth, s, t});
  th.axioms.push_back({ctx, depth, t, s});
}

void add_choice_ops(GradedTheory& th, std::size_t width, std::size_t zero_depth) {
  th.sig.add({"0", discrete_arity(0), zero_depth, Operation::Kind::Choice, {}, {}});
  // label multisets of size 1..width, sorted
  std::function<void(std::vector<std::string>&, std::size_t)> rec = [&](std::vector<std::string>& cur,
                                                                        std::size_t from) {
    if (!cur.empty())
      th.sig.add({join(cur, "+"), discrete_arity(cur.size()), 1, Operation::Kind::Choice, cur, {}});
    if (cur.size() == width) return;
    for (std::size_t i = from; i < th.labels.size(); ++i) {
      cur.push_back(th.labels[i]);
      rec(cur, i);
      cur.pop_back();
    }
  };
  std::vector<std::string> cur;
  rec(cur, 0);
}

// Equations s = t between sums whose sets of (label, variable) summands agree.
void add_jsl_equations(GradedTheory& th, std::size_t width) {
  std::set<std::string> seen;
  for (std::size_t m = 1; m <= width; ++m) {
    const auto vars = var_names("x", m);
    std::vector<Summand> atoms;
    for (const auto& l : th.labels)
      for (const auto& v : vars) atoms.emplace_back(l, Term::variable(v));
    // label-sorted sequences of length <= width over atoms, using every variable
    std::map<std::set<std::pair<std::string, std::string>>, std::vector<Term>> groups;
    std::function<void(std::vector<std::size_t>&)> rec = [&](std::vector<std::size_t>& seq) {
      if (!seq.empty()) {
        std::set<std::pair<std::string, std::string>> set;
        std::set<std::string> used;
        std::vector<Summand> s;
        for (auto i : seq) {
          set.emplace(atoms[i].first, atoms[i].second.var);
          used.insert(atoms[i].second.var);
          s.push_back(atoms[i]);
        }
        if (used.size() == m) groups[set].push_back(choice_term(th, s, 1));
      }
      if (seq.size() == width) return;
      for (std::size_t i = 0; i < atoms.size(); ++i) {
        if (!seq.empty() && atoms[i].first < atoms[seq.back()].first) continue;
        seq.push_back(i);
        rec(seq);
        seq.pop_back();
      }
    };
    std::vector<std::size_t> seq;
    rec(seq);
    const auto ctx = share(FinPoset::discrete(vars));
    for (auto& [set, terms] : groups) {
      std::sort(terms.begin(), terms.end());
      terms.erase(std::unique(terms.begin(), terms.end()), terms.end());
      for (std::size_t i = 1; i < terms.size(); ++i) {
        const std::string key = show_term(th.sig, terms[0]) + "=" + show_term(th.sig, terms[i]);
        if (seen.insert(key).second) add_both(th, ctx, 1, terms[0], terms[i]);
      }
    }
  }
}

// Every label-sorted sum t of at most `len` summands over fresh variables z1.., zn.
std::vector<std::vector<Summand>> remainders(const GradedTheory& th, std::size_t len) {
  std::vector<std::vector<Summand>> out{{}};
  std::function<void(std::vector<Summand>&, std::size_t)> rec = [&](std::vector<Summand>& cur, std::size_t from) {
    if (cur.size() == len) return;
    for (std::size_t i = from; i < th.labels.size(); ++i) {
      cur.emplace_back(th.labels[i], Term::variable("z" + std::to_string(cur.size() + 1)));
      out.push_back(cur);
      rec(cur, i);
      cur.pop_back();
    }
  };
  std::vector<Summand> cur;
  rec(cur, 0);
  return out;
}

std::vector<std::string> ctx_vars(std::initializer_list<std::string> fixed, const std::vector<Summand>& t) {
  std::vector<std::string> v(fixed);
  for (const auto& s : t) v.push_back(s.second.var);
  return v;
}

std::vector<Rational> grid(long max_den) {
  std::set<Rational> g;
  for (long q = 1; q <= max_den; ++q)
    for (long p = 0; p <= q; ++p) g.insert(Rational(p, q));
  return {g.begin(), g.end()};
}

void add_subconvex_ops(GradedTheory& th, std::size_t width, long max_den,
                       std::vector<std::vector<Rational>>& combos) {
  const auto g = grid(max_den);
  std::function<void(std::vector<Rational>&, Rational)> rec = [&](std::vector<Rational>& cur, Rational mass) {
    combos.push_back(cur);
    if (cur.size() == width) return;
    for (const auto& p : g) {
      if (mass + p > Rational(1)) continue;
      cur.push_back(p);
      rec(cur, mass + p);
      cur.pop_back();
    }
  };
  std::vector<Rational> cur;
  rec(cur, Rational(0));
  for (const auto& c : combos)
    th.sig.add({subconvex_name(c), discrete_arity(c.size()), 0, Operation::Kind::Subconvex, {}, c});
}

Term sc(const GradedTheory& th, const std::vector<Rational>& p, std::vector<Term> args) {
  return make_app(th.sig, *th.sig.find(subconvex_name(p)), std::move(args));
}

void add_subconvex_axioms(GradedTheory& th, std::size_t width, const std::vector<std::vector<Rational>>& combos,
                          bool ordered) {
  // Kronecker: sum_k delta_ik x_k = x_i
  for (std::size_t n = 1; n <= width; ++n) {
    const auto vars = var_names("x", n);
    const auto ctx = share(FinPoset::discrete(vars));
    std::vector<Term> xs;
    for (const auto& v : vars) xs.push_back(Term::variable(v));
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<Rational> delta(n, Rational(0));
      delta[i] = Rational(1);
      add_both(th, ctx, 0, sc(th, delta, xs), xs[i]);
    }
  }
  // multiplication: sum_i p_i (sum_k q_ik x_k) = sum_k (sum_i p_i q_ik) x_k
  std::map<std::size_t, std::vector<const std::vector<Rational>*>> by_len;
  for (const auto& c : combos) by_len[c.size()].push_back(&c);
  for (std::size_t m = 0; m <= width; ++m) {
    const auto vars = var_names("x", m);
    const auto ctx = share(FinPoset::discrete(vars));
    std::vector<Term> xs;
    for (const auto& v : vars) xs.push_back(Term::variable(v));
    for (const auto& p : combos) {
      const std::size_t n = p.size();
      std::vector<std::size_t> pick(n, 0);
      const auto& inner = by_len[m];
      while (true) {
        std::vector<Rational> r(m, Rational(0));
        std::vector<Term> args;
        for (std::size_t i = 0; i < n; ++i) {
          const auto& q = *inner[pick[i]];
          for (std::size_t k = 0; k < m; ++k) r[k] += p[i] * q[k];
          args.push_back(sc(th, q, xs));
        }
        if (th.sig.find(subconvex_name(r)) && (n > 0 || m > 0)) {
          Term lhs = sc(th, p, args), rhs = sc(th, r, xs);
          if (lhs != rhs) add_both(th, ctx, 0, lhs, rhs);
        }
        std::size_t i = 0;
        while (i < n && ++pick[i] == inner.size()) pick[i++] = 0;
        if (i == n) break;
      }
    }
  }
  if (!ordered) return;
  for (const auto& p : combos)
    for (const auto& q : combos) {
      if (p.size() != q.size() || p == q || p.empty()) continue;
      bool below = true;
      for (std::size_t i = 0; i < p.size(); ++i) below = below && p[i] <= q[i];
      if (!below) continue;
      const auto vars = var_names("x", p.size());
      std::vector<Term> xs;
      for (const auto& v : vars) xs.push_back(Term::variable(v));
      th.axioms.push_back({share(FinPoset::discrete(vars)), 0, sc(th, p, xs), sc(th, q, xs)});
    }
}

}  // namespace

GradedTheory builtin_theory(BuiltinTheory which, std::vector<std::string> labels, TheoryBounds bounds) {
  std::sort(labels.begin(), labels.end());
  labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
  if (labels.empty()) throw Error(Errc::EmptyLabelSet, "theory needs at least one label");
  if (bounds.width < 2) throw Error(Errc::SchemaError, "width bound must be at least 2");
  if (bounds.max_den < 1) throw Error(Errc::SchemaError, "denominator bound must be positive");
  GradedTheory th;
  th.name = builtin_theory_name(which);
  th.labels = labels;
  const std::size_t w = bounds.width;
  switch (which) {
    case BuiltinTheory::JSL:
    case BuiltinTheory::JSL_DOWN:
    case BuiltinTheory::JSL_SYNC: {
      const std::size_t zero_depth = which == BuiltinTheory::JSL_SYNC ? 0 : 1;
      add_choice_ops(th, w, zero_depth);
      add_jsl_equations(th, w);
      th.model_semantics = which == BuiltinTheory::JSL   ? SemKind::Bisim
                           : which == BuiltinTheory::JSL_DOWN ? SemKind::Sim
                                                         : SemKind::Sync;
      if (which == BuiltinTheory::JSL_DOWN) {
        // x <= y |-1 a(x) + a(y) + t = a(y) + t
        for (const auto& a : th.labels)
          for (const auto& t : remainders(th, w - 2)) {
            auto vars = ctx_vars({"x", "y"}, t);
            const auto ctx = share(FinPoset::validate(vars, {{"x", "y"}}));
            std::vector<Summand> lhs{{a, Term::variable("x")}, {a, Term::variable("y")}};
            std::vector<Summand> rhs{{a, Term::variable("y")}};
            lhs.insert(lhs.end(), t.begin(), t.end());
            rhs.insert(rhs.end(), t.begin(), t.end());
            add_both(th, ctx, 1, choice_term(th, lhs, 1), choice_term(th, rhs, 1));
          }
      }
      if (which == BuiltinTheory::JSL_SYNC) {
        // a(0) + t = t
        const Term zero = make_app(th.sig, *th.sig.find("0"), {}, 0);
        for (const auto& a : th.labels)
          for (const auto& t : remainders(th, w - 1)) {
            const auto ctx = share(FinPoset::discrete(ctx_vars({}, t)));
            std::vector<Summand> lhs{{a, zero}};
            lhs.insert(lhs.end(), t.begin(), t.end());
            add_both(th, ctx, 1, choice_term(th, lhs, 1), choice_term(th, t, 1));
          }
      }
      break;
    }
    case BuiltinTheory::PT:
    case BuiltinTheory::SUBCONVEX: {
      std::vector<std::vector<Rational>> combos;
      add_subconvex_ops(th, w, bounds.max_den, combos);
      th.subdistributions = true;
      th.model_semantics = SemKind::PTrace;
      add_subconvex_axioms(th, w, combos, which == BuiltinTheory::PT);
      if (which == BuiltinTheory::PT) {
        for (const auto& a : th.labels)
          th.sig.add({a, discrete_arity(1), 1, Operation::Kind::Action, {a}, {}});
        // a(sum p_i x_i) = sum p_i a(x_i)
        for (const auto& a : th.labels)
          for (const auto& p : combos) {
            const auto vars = var_names("x", p.size());
            std::vector<Term> xs, axs;
            for (const auto& v : vars) {
              xs.push_back(Term::variable(v));
              axs.push_back(make_app(th.sig, *th.sig.find(a), {Term::variable(v)}));
            }
            Term lhs = make_app(th.sig, *th.sig.find(a), {sc(th, p, xs)});
            Term rhs = p.empty() ? make_app(th.sig, *th.sig.find("0"), {}, 1) : sc(th, p, axs);
            add_both(th, share(FinPoset::discrete(vars)), 1, lhs, rhs);
          }
      }
      break;
    }
  }
  return th;
}

GradedTheory load_theory(const std::string& json_text) {
  using nlohmann::json;
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw Error(Errc::SchemaError, std::string("theory file: ") + e.what());
  }
  auto poset_of = [](const json& j, const char* elems_key) {
    std::vector<std::string> ids = j.at(elems_key).get<std::vector<std::string>>();
    std::vector<std::pair<std::string, std::string>> pairs;
    if (j.contains("order"))
      for (const auto& p : j.at("order")) pairs.emplace_back(p.at(0).get<std::string>(), p.at(1).get<std::string>());
    return share(FinPoset::validate(ids, pairs));
  };
  GradedTheory th;
  try {
    if (doc.contains("builtin")) {
      TheoryBounds b;
      if (doc.contains("width")) b.width = doc.at("width").get<std::size_t>();
      if (doc.contains("max_den")) b.max_den = doc.at("max_den").get<long>();
      return builtin_theory(parse_builtin_theory(doc.at("builtin").get<std::string>()),
                            doc.at("labels").get<std::vector<std::string>>(), b);
    }
    th.name = doc.value("name", "custom");
    if (doc.contains("labels")) th.labels = doc.at("labels").get<std::vector<std::string>>();
    for (const auto& op : doc.at("operations")) {
      Operation o;
      o.name = op.at("name").get<std::string>();
      o.depth = op.value("depth", std::size_t{0});
      o.arity = op.contains("arity") ? poset_of(op.at("arity"), "elements") : discrete_arity(0);
      o.kind = Operation::Kind::Custom;
      th.sig.add(std::move(o));
    }
    for (const auto& ax : doc.value("axioms", json::array())) {
      const auto ctx = ax.contains("context") ? poset_of(ax.at("context"), "vars") : share(FinPoset::discrete({}));
      std::string goal = ax.at("lhs").get<std::string>() + " <= " + ax.at("rhs").get<std::string>();
      if (ax.value("equation", false)) goal = ax.at("lhs").get<std::string>() + " = " + ax.at("rhs").get<std::string>();
      if (ax.contains("depth")) goal += " : " + std::to_string(ax.at("depth").get<std::size_t>());
      for (auto& e : parse_goal(th, ctx, goal)) th.axioms.push_back(std::move(e));
    }
  } catch (const json::exception& e) {
    throw Error(Errc::SchemaError, std::string("theory file: ") + e.what());
  }
  return th;
}

// ---------------------------------------------------------------- saturation

namespace {

enum Rule : std::uint8_t { RVar, RAr, RMon, RTrans, RAx1, RAx2 };
const char* rule_name(std::uint8_t r) {
  static const char* names[] = {"Var", "Ar", "Mon", "Trans", "Ax1", "Ax2"};
  return names[r];
}

std::uint64_t fact_key(std::size_t d, std::size_t i, std::size_t j) {
  return (std::uint64_t(d) << 48) | (std::uint64_t(i) << 24) | std::uint64_t(j);
}

struct Just {
  std::uint8_t rule = RVar;
  std::uint32_t axiom = 0;
  std::uint32_t sub_i = 0, sub_j = 0;
  std::uint32_t prem_at = 0, prem_len = 0;    // into the premise pool
  std::uint32_t subst_at = 0, subst_len = 0;  // level-k ids of the axiom context variables
};

struct Bits {
  std::size_t n = 0, words = 0;
  std::vector<std::uint64_t> data;
  void resize(std::size_t size) {
    n = size;
    words = (size + 63) / 64;
    data.assign(n * words, 0);
  }
  bool get(std::size_t i, std::size_t j) const { return data[i * words + j / 64] >> (j % 64) & 1; }
  void set(std::size_t i, std::size_t j) { data[i * words + j / 64] |= std::uint64_t{1} << (j % 64); }
};

struct TNode {
  std::int64_t var = -1;  // context index, or -1 for applications
  std::uint32_t op = 0;
  std::vector<std::uint32_t> args;
  std::size_t size = 1;
};

}  // namespace

struct Saturation::Impl {
  const GradedTheory& th;
  PosetRef ctx;
  std::size_t max_depth;
  DerivationBudget budget;
  bool all_discrete = true;
  bool cut = false;
  bool fixpoint = false;
  std::size_t rounds_done = 0;

  struct Level {
    std::vector<TNode> nodes;
    std::vector<Term> terms;
    std::map<std::vector<std::int64_t>, std::uint32_t> index;
    std::vector<std::vector<std::uint32_t>> by_size;
    std::map<std::uint32_t, std::vector<std::uint32_t>> by_op;
    Bits rows, cols;
  };
  std::vector<Level> levels;
  std::unordered_map<std::uint64_t, Just> just;
  std::vector<std::uint64_t> prem_pool;
  std::vector<std::uint32_t> subst_pool;
  std::vector<std::uint64_t> queue;
  std::size_t facts = 0;
  std::optional<std::uint64_t> goal;
  bool goal_hit = false;

  Impl(const GradedTheory& t, PosetRef c, std::size_t d, const DerivationBudget& b)
      : th(t), ctx(std::move(c)), max_depth(d), budget(b) {
    for (const auto& o : th.sig.ops())
      if (!o.arity->is_discrete()) all_discrete = false;
  }

  static std::vector<std::int64_t> key_of(const TNode& n) {
    std::vector<std::int64_t> k{n.var, n.op};
    k.insert(k.end(), n.args.begin(), n.args.end());
    return k;
  }

  std::optional<std::uint32_t> lookup(std::size_t d, const TNode& n) const {
    if (d >= levels.size()) return std::nullopt;
    auto it = levels[d].index.find(key_of(n));
    if (it == levels[d].index.end()) return std::nullopt;
    return it->second;
  }

  std::uint32_t insert(std::size_t d, TNode n) {
    if (auto id = lookup(d, n)) return *id;
    Level& L = levels[d];
    const auto id = static_cast<std::uint32_t>(L.nodes.size());
    L.index.emplace(key_of(n), id);
    Term t;
    if (n.var >= 0) {
      t = Term::variable(ctx->id(static_cast<std::size_t>(n.var)));
    } else {
      const Operation& o = th.sig.op(n.op);
      t.kind = Term::Kind::App;
      t.op = n.op;
      t.depth = d;
      for (auto a : n.args) t.args.push_back(levels[d - o.depth].terms[a]);
      L.by_op[n.op].push_back(id);
    }
    if (L.by_size.size() <= n.size) L.by_size.resize(n.size + 1);
    L.by_size[n.size].push_back(id);
    L.terms.push_back(std::move(t));
    L.nodes.push_back(std::move(n));
    return id;
  }

  // Inserts a term and its subterms regardless of the size bound.
  std::uint32_t insert_term(const Term& t) {
    TNode n;
    if (t.kind == Term::Kind::Var) {
      auto i = ctx->find(t.var);
      if (!i) throw Error(Errc::MalformedGoal, "variable " + t.var + " not in context");
      n.var = static_cast<std::int64_t>(*i);
    } else {
      n.op = static_cast<std::uint32_t>(t.op);
      for (const auto& a : t.args) {
        n.args.push_back(insert_term(a));
        n.size += levels[a.depth].nodes[n.args.back()].size;
      }
    }
    return insert(t.depth, std::move(n));
  }

  // Axiom sides with their variables renamed to context variables, within the size bound.
  std::vector<Term> axiom_instances() const {
    std::vector<Term> out;
    if (ctx->size() == 0) return out;
    for (const auto& ax : th.axioms) {
      if (ax.depth > max_depth) continue;
      const std::size_t nv = ax.context->size();
      std::vector<std::size_t> pick(nv, 0);
      while (true) {
        std::map<std::string, Term> gamma;
        for (std::size_t v = 0; v < nv; ++v) gamma[ax.context->id(v)] = Term::variable(ctx->id(pick[v]));
        for (const Term* side : {&ax.lhs, &ax.rhs}) {
          Term t = gamma.empty() ? *side : uniform_substitute(gamma, *side);
          if (term_size(t) <= budget.max_term_size) out.push_back(std::move(t));
        }
        std::size_t v = 0;
        while (v < nv && ++pick[v] == ctx->size()) pick[v++] = 0;
        if (v == nv) break;
      }
    }
    return out;
  }

  void generate(const std::vector<Term>& seeds) {
    for (const auto& s : seeds) max_depth = std::max(max_depth, s.depth);
    levels.resize(max_depth + 1);
    const std::size_t cap = budget.max_terms_per_depth;
    const auto instances = axiom_instances();
    for (std::size_t d = 0; d <= max_depth; ++d) {
      Level& L = levels[d];
      if (d == 0)
        for (std::size_t v = 0; v < ctx->size(); ++v) insert(0, TNode{static_cast<std::int64_t>(v), 0, {}, 1});
      for (const auto& t : instances)
        if (t.depth == d) insert_term(t);
      for (std::size_t s = 1; s <= budget.max_term_size; ++s) {
        for (std::uint32_t op = 0; op < th.sig.size(); ++op) {
          const Operation& o = th.sig.op(op);
          if (o.depth > d) continue;
          const std::size_t n = o.arity->size();
          if (n == 0) {
            if (s == 1) insert(d, TNode{-1, op, {}, 1});
            continue;
          }
          if (s < n + 1) continue;
          const Level& A = levels[d - o.depth];
          // distribute s-1 nodes over n arguments
          std::vector<std::uint32_t> args(n);
          std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t i, std::size_t left) {
            if (L.nodes.size() >= cap) {
              cut = true;
              return;
            }
            if (i == n) {
              if (left == 0) insert(d, TNode{-1, op, args, s});
              return;
            }
            const std::size_t rest = n - i - 1;
            for (std::size_t sz = 1; sz + rest <= left; ++sz) {
              if (sz >= A.by_size.size()) break;
              for (auto id : std::vector<std::uint32_t>(A.by_size[sz])) {
                args[i] = id;
                rec(i + 1, left - sz);
                if (cut && L.nodes.size() >= cap) return;
              }
            }
          };
          rec(0, s - 1);
        }
      }
    }
    for (const auto& s : seeds) insert_term(s);
    for (auto& L : levels) {
      L.rows.resize(L.nodes.size());
      L.cols.resize(L.nodes.size());
    }
  }

  bool leq(std::size_t d, std::size_t i, std::size_t j) const { return levels[d].rows.get(i, j); }

  // Pending justification: premises and substitution are appended to the pools.
  struct Pending {
    Impl& self;
    Just j;
    Pending(Impl& s, std::uint8_t rule) : self(s) {
      j.rule = rule;
      j.prem_at = static_cast<std::uint32_t>(s.prem_pool.size());
      j.subst_at = static_cast<std::uint32_t>(s.subst_pool.size());
    }
    void premise(std::uint64_t f) {
      self.prem_pool.push_back(f);
      ++j.prem_len;
    }
    void subst(std::uint32_t id) {
      self.subst_pool.push_back(id);
      ++j.subst_len;
    }
    void drop() {
      self.prem_pool.resize(j.prem_at);
      self.subst_pool.resize(j.subst_at);
    }
  };

  bool add(std::size_t d, std::size_t i, std::size_t j, Pending& p) {
    if (leq(d, i, j)) {
      p.drop();
      return false;
    }
    levels[d].rows.set(i, j);
    levels[d].cols.set(j, i);
    just.emplace(fact_key(d, i, j), p.j);
    queue.push_back(fact_key(d, i, j));
    ++facts;
    if (goal && *goal == fact_key(d, i, j)) goal_hit = true;
    return true;
  }

  void add_trans(std::size_t d, std::size_t i, std::size_t m, std::size_t j) {
    Pending p(*this, RTrans);
    p.premise(fact_key(d, i, m));
    p.premise(fact_key(d, m, j));
    add(d, i, j, p);
  }

  void drain() {
    while (!queue.empty() && !goal_hit) {
      const std::uint64_t f = queue.back();
      queue.pop_back();
      const std::size_t d = f >> 48, i = (f >> 24) & 0xffffff, j = f & 0xffffff;
      Level& L = levels[d];
      const std::size_t W = L.rows.words;
      // (i,j), (j,k) -> (i,k) for k in row j minus row i
      for (std::size_t w = 0; w < W; ++w) {
        std::uint64_t x = L.rows.data[j * W + w] & ~L.rows.data[i * W + w];
        while (x) {
          const std::size_t k = w * 64 + static_cast<std::size_t>(__builtin_ctzll(x));
          x &= x - 1;
          add_trans(d, i, j, k);
        }
      }
      // (h,i), (i,j) -> (h,j) for h in column i minus column j
      for (std::size_t w = 0; w < W; ++w) {
        std::uint64_t x = L.cols.data[i * W + w] & ~L.cols.data[j * W + w];
        while (x) {
          const std::size_t h = w * 64 + static_cast<std::size_t>(__builtin_ctzll(x));
          x &= x - 1;
          add_trans(d, h, i, j);
        }
      }
    }
  }

  bool done() const { return goal_hit; }

  void rule_var() {
    for (std::size_t x = 0; x < ctx->size(); ++x)
      for (std::size_t y = 0; y < ctx->size(); ++y)
        if (ctx->leq(x, y)) {
          Pending p(*this, RVar);
          add(0, x, y, p);
        }
  }

  void rule_ar() {
    for (std::size_t d = 0; d < levels.size(); ++d) {
      const Level& L = levels[d];
      for (std::size_t i = 0; i < L.nodes.size(); ++i) {
        const TNode& n = L.nodes[i];
        if (n.var >= 0 || leq(d, i, i)) continue;
        const Operation& o = th.sig.op(n.op);
        const std::size_t a = d - o.depth;
        bool ok = true;
        for (std::size_t p = 0; p < n.args.size() && ok; ++p)
          for (std::size_t q = 0; q < n.args.size() && ok; ++q)
            if (o.arity->leq(p, q)) ok = leq(a, n.args[p], n.args[q]);
        if (!ok) continue;
        Pending pj(*this, RAr);
        for (std::size_t p = 0; p < n.args.size(); ++p)
          for (std::size_t q = 0; q < n.args.size(); ++q)
            if (o.arity->leq(p, q)) pj.premise(fact_key(a, n.args[p], n.args[q]));
        add(d, i, i, pj);
      }
    }
  }

  void rule_mon() {
    for (std::size_t d = 0; d < levels.size(); ++d) {
      const Level& L = levels[d];
      for (const auto& [op, ids] : L.by_op) {
        const Operation& o = th.sig.op(op);
        if (o.arity->size() == 0) continue;
        const std::size_t a = d - o.depth;
        for (auto u : ids) {
          if (!leq(d, u, u)) continue;
          for (auto v : ids) {
            if (u == v || leq(d, u, v) || !leq(d, v, v)) continue;
            const auto& fu = L.nodes[u].args;
            const auto& fv = L.nodes[v].args;
            bool ok = true;
            for (std::size_t p = 0; p < fu.size() && ok; ++p) ok = leq(a, fu[p], fv[p]);
            if (!ok) continue;
            Pending pj(*this, RMon);
            for (std::size_t p = 0; p < fu.size(); ++p) pj.premise(fact_key(a, fu[p], fv[p]));
            pj.premise(fact_key(d, u, u));
            pj.premise(fact_key(d, v, v));
            add(d, u, v, pj);
          }
        }
      }
    }
  }

  // Binds the context variables of pattern p against node `id` at level p.depth + k.
  bool match(const Term& p, std::size_t k, std::uint32_t id, std::map<std::string, std::uint32_t>& g) const {
    const std::size_t d = p.depth + k;
    if (p.kind == Term::Kind::Var) {
      auto [it, fresh] = g.emplace(p.var, id);
      return fresh || it->second == id;
    }
    const TNode& n = levels[d].nodes[id];
    if (n.var >= 0 || n.op != p.op) return false;
    for (std::size_t i = 0; i < p.args.size(); ++i)
      if (!match(p.args[i], k, n.args[i], g)) return false;
    return true;
  }

  std::optional<std::uint32_t> instantiate(const Term& p, std::size_t k,
                                           const std::map<std::string, std::uint32_t>& g) const {
    if (p.kind == Term::Kind::Var) return g.at(p.var);
    TNode n;
    n.op = static_cast<std::uint32_t>(p.op);
    for (const auto& a : p.args) {
      auto id = instantiate(a, k, g);
      if (!id) return std::nullopt;
      n.args.push_back(*id);
    }
    return lookup(p.depth + k, n);
  }

  // Enumerates substitutions gamma : Delta -> level k whose context premises hold,
  // seeded by matching `pattern` against the terms of its level.
  void for_each_subst(const Inequation& ax, const Term& pattern, std::size_t k,
                      const std::function<void(const std::map<std::string, std::uint32_t>&)>& visit) {
    const FinPoset& delta = *ax.context;
    const std::size_t pd = pattern.depth + k;
    if (pd >= levels.size()) return;
    std::vector<std::uint32_t> seeds;
    if (pattern.kind == Term::Kind::App) {
      auto it = levels[pd].by_op.find(static_cast<std::uint32_t>(pattern.op));
      if (it == levels[pd].by_op.end()) return;
      seeds = it->second;
    } else {
      seeds.resize(levels[pd].nodes.size());
      std::iota(seeds.begin(), seeds.end(), 0);
    }
    const std::size_t nk = levels[k].nodes.size();
    for (auto s : seeds) {
      std::map<std::string, std::uint32_t> g;
      if (!match(pattern, k, s, g)) continue;
      std::vector<std::string> rest;
      for (const auto& x : delta.elements())
        if (!g.count(x)) rest.push_back(x);
      std::function<void(std::size_t)> rec = [&](std::size_t i) {
        if (i == rest.size()) {
          for (std::size_t x = 0; x < delta.size(); ++x)
            for (std::size_t y = 0; y < delta.size(); ++y)
              if (delta.leq(x, y) && !leq(k, g.at(delta.id(x)), g.at(delta.id(y)))) return;
          visit(g);
          return;
        }
        for (std::uint32_t c = 0; c < nk; ++c) {
          g[rest[i]] = c;
          rec(i + 1);
        }
        g.erase(rest[i]);
      };
      rec(0);
    }
  }

  Pending ax_just(std::uint8_t rule, std::size_t axiom, const Inequation& ax, std::size_t k,
                  const std::map<std::string, std::uint32_t>& g) {
    Pending p(*this, rule);
    p.j.axiom = static_cast<std::uint32_t>(axiom);
    const FinPoset& delta = *ax.context;
    for (std::size_t x = 0; x < delta.size(); ++x) {
      p.subst(g.at(delta.id(x)));
      for (std::size_t y = 0; y < delta.size(); ++y)
        if (delta.leq(x, y)) p.premise(fact_key(k, g.at(delta.id(x)), g.at(delta.id(y))));
    }
    return p;
  }

  void rule_ax1() {
    for (std::size_t ai = 0; ai < th.axioms.size(); ++ai) {
      const Inequation& ax = th.axioms[ai];
      const auto vs = free_vars(ax.lhs), vt = free_vars(ax.rhs);
      // match the side binding more variables (or the one that is an application)
      const bool use_lhs = vs.size() > vt.size() || (vs.size() == vt.size() && ax.lhs.kind == Term::Kind::App);
      const Term& pat = use_lhs ? ax.lhs : ax.rhs;
      for (std::size_t k = 0; ax.depth + k <= max_depth; ++k) {
        const std::size_t d = ax.depth + k;
        for_each_subst(ax, pat, k, [&](const std::map<std::string, std::uint32_t>& g) {
          auto s = instantiate(ax.lhs, k, g), t = instantiate(ax.rhs, k, g);
          if (!s || !t || leq(d, *s, *t)) return;
          Pending p = ax_just(RAx1, ai, ax, k, g);
          add(d, *s, *t, p);
        });
      }
    }
  }

  void rule_ax2() {
    if (all_discrete) return;  // arity premises of discrete arities are all reflexive
    for (std::size_t ai = 0; ai < th.axioms.size(); ++ai) {
      const Inequation& ax = th.axioms[ai];
      std::set<Term> subs = subterms(ax.lhs);
      for (const auto& t : subterms(ax.rhs)) subs.insert(t);
      std::vector<Term> sub(subs.begin(), subs.end());
      for (std::size_t si = 0; si < sub.size(); ++si) {
        const Term& st = sub[si];
        if (st.kind != Term::Kind::App) continue;
        const Operation& o = th.sig.op(st.op);
        const std::size_t n = o.arity->size();
        for (std::size_t p = 0; p < n; ++p)
          for (std::size_t q = 0; q < n; ++q) {
            if (!o.arity->leq(p, q)) continue;
            const Term& u = st.args[p];
            const Term& v = st.args[q];
            for (std::size_t k = 0; u.depth + k <= max_depth; ++k) {
              const std::size_t d = u.depth + k;
              for_each_subst(ax, u, k,
                             [&](const std::map<std::string, std::uint32_t>& g) {
                               auto a = instantiate(u, k, g), b = instantiate(v, k, g);
                               if (!a || !b || leq(d, *a, *b)) return;
                               Pending pj = ax_just(RAx2, ai, ax, k, g);
                               pj.j.sub_i = static_cast<std::uint32_t>(si);
                               pj.j.sub_j = static_cast<std::uint32_t>(p * n + q);
                               add(d, *a, *b, pj);
                             });
            }
          }
      }
    }
  }

  void saturate() {
    rule_var();
    drain();
    for (rounds_done = 0; rounds_done < budget.max_rounds && !done();) {
      const std::size_t before = facts;
      ++rounds_done;
      rule_ar();
      drain();
      if (done()) break;
      rule_mon();
      drain();
      if (done()) break;
      rule_ax1();
      drain();
      if (done()) break;
      rule_ax2();
      drain();
      if (facts == before) {
        fixpoint = true;
        break;
      }
    }
  }

  std::vector<DerivationStep> trace(std::uint64_t target) const {
    std::vector<DerivationStep> steps;
    std::unordered_map<std::uint64_t, std::size_t> at;
    std::function<std::size_t(std::uint64_t)> rec = [&](std::uint64_t f) -> std::size_t {
      if (auto it = at.find(f); it != at.end()) return it->second;
      const Just& j = just.at(f);
      std::vector<std::size_t> prem;
      for (std::uint32_t p = 0; p < j.prem_len; ++p) prem.push_back(rec(prem_pool[j.prem_at + p]));
      const std::size_t d = f >> 48, i = (f >> 24) & 0xffffff, k = f & 0xffffff;
      DerivationStep s;
      s.rule = rule_name(j.rule);
      s.depth = d;
      s.lhs = levels[d].terms[i];
      s.rhs = levels[d].terms[k];
      s.premises = std::move(prem);
      if (j.rule == RAx1 || j.rule == RAx2) {
        const Inequation& ax = th.axioms[j.axiom];
        s.axiom = j.axiom;
        const std::size_t kk = d - (j.rule == RAx1 ? ax.depth : 0);
        std::size_t lvl = kk;
        if (j.rule == RAx2) {
          std::set<Term> subs = subterms(ax.lhs);
          for (const auto& t : subterms(ax.rhs)) subs.insert(t);
          const Term& st = *std::next(subs.begin(), j.sub_i);
          const std::size_t n = st.args.size();
          lvl = d - st.args[j.sub_j / n].depth;
          s.sub_i = j.sub_i;
          s.sub_j = j.sub_j;
        }
        for (std::size_t x = 0; x < ax.context->size(); ++x) s.subst[ax.context->id(x)] = levels[lvl].terms[subst_pool[j.subst_at + x]];
      }
      steps.push_back(std::move(s));
      at.emplace(f, steps.size() - 1);
      return steps.size() - 1;
    };
    rec(target);
    return steps;
  }
};

Saturation::Saturation(const GradedTheory& th, PosetRef context, std::size_t max_depth,
                       const DerivationBudget& budget, const std::vector<Term>& seeds)
    : impl_(std::make_unique<Impl>(th, std::move(context), max_depth, budget)) {
  impl_->generate(seeds);
  impl_->saturate();
}

Saturation::~Saturation() = default;

const std::vector<Term>& Saturation::terms(std::size_t depth) const { return impl_->levels.at(depth).terms; }
bool Saturation::leq(std::size_t depth, std::size_t i, std::size_t j) const { return impl_->leq(depth, i, j); }
std::optional<std::size_t> Saturation::find(const Term& t) const {
  const auto& terms = impl_->levels;
  if (t.depth >= terms.size()) return std::nullopt;
  const auto& v = terms[t.depth].terms;
  for (std::size_t i = 0; i < v.size(); ++i)
    if (v[i] == t) return i;
  return std::nullopt;
}
std::vector<DerivationStep> Saturation::trace(std::size_t depth, std::size_t i, std::size_t j) const {
  return impl_->trace(fact_key(depth, i, j));
}
std::size_t Saturation::rounds() const { return impl_->rounds_done; }
bool Saturation::truncated() const { return impl_->cut || !impl_->fixpoint; }

namespace {

void check_goal(const GradedTheory& th, const Inequation& goal) {
  if (!goal.context) throw Error(Errc::MalformedGoal, "goal without context");
  try {
    if (term_depth(th.sig, goal.lhs) != goal.depth || term_depth(th.sig, goal.rhs) != goal.depth)
      throw Error(Errc::MalformedGoal, "sides are not of depth " + std::to_string(goal.depth));
  } catch (const Error& e) {
    if (e.code() == Errc::MalformedGoal) throw;
    throw Error(Errc::MalformedGoal, e.what());
  }
  for (const auto* side : {&goal.lhs, &goal.rhs})
    for (const auto& x : free_vars(*side))
      if (!goal.context->find(x)) throw Error(Errc::MalformedGoal, "variable " + x + " not in context");
}

}  // namespace

DerivationVerdict derivable(const GradedTheory& th, const Inequation& goal, const DerivationBudget& budget) {
  check_goal(th, goal);
  if (budget.max_term_size == 0) throw Error(Errc::BudgetTooSmall, "term size bound must be positive");
  Saturation::Impl impl(th, goal.context, goal.depth, budget);
  impl.generate({goal.lhs, goal.rhs});
  const std::uint32_t i = impl.insert_term(goal.lhs), j = impl.insert_term(goal.rhs);
  impl.goal = fact_key(goal.depth, i, j);
  impl.saturate();
  DerivationVerdict v;
  v.rounds = impl.rounds_done;
  for (const auto& L : impl.levels) v.universe.push_back(L.nodes.size());
  v.truncated = impl.cut || !(impl.fixpoint || impl.done());
  v.proved = impl.done();
  if (v.proved) v.trace = impl.trace(*impl.goal);
  return v;
}

DerivationVerdict check_defined(const GradedTheory& th, const PosetRef& context, const Term& t,
                                const DerivationBudget& budget) {
  const std::size_t d = term_depth(th.sig, t);
  check_goal(th, {context, d, t, t});
  DerivationVerdict out;
  out.proved = true;
  // Ar conclusions bottom-up; arity inequations between arguments via derivable.
  std::function<std::optional<std::size_t>(const Term&)> rec = [&](const Term& u) -> std::optional<std::size_t> {
    if (u.kind == Term::Kind::Var) {
      out.trace.push_back({"Var", 0, u, u, {}, 0, {}, 0, 0});
      return out.trace.size() - 1;
    }
    const Operation& o = th.sig.op(u.op);
    std::map<std::pair<std::size_t, std::size_t>, std::size_t> prem;
    for (std::size_t p = 0; p < u.args.size(); ++p) {
      auto s = rec(u.args[p]);
      if (!s) return std::nullopt;
      prem[{p, p}] = *s;
    }
    for (std::size_t p = 0; p < u.args.size(); ++p)
      for (std::size_t q = 0; q < u.args.size(); ++q) {
        if (p == q || !o.arity->leq(p, q)) continue;
        auto v = derivable(th, {context, u.args[p].depth, u.args[p], u.args[q]}, budget);
        out.rounds += v.rounds;
        if (!v.proved) {
          out.truncated = out.truncated || v.truncated;
          return std::nullopt;
        }
        const std::size_t off = out.trace.size();
        for (auto s : v.trace) {
          for (auto& x : s.premises) x += off;
          out.trace.push_back(std::move(s));
        }
        prem[{p, q}] = out.trace.size() - 1;
      }
    DerivationStep s{"Ar", u.depth, u, u, {}, 0, {}, 0, 0};
    for (const auto& [pq, idx] : prem) s.premises.push_back(idx);
    out.trace.push_back(std::move(s));
    return out.trace.size() - 1;
  };
  if (!rec(t)) {
    out.proved = false;
    out.trace.clear();
  }
  return out;
}

// -------------------------------------------------------------------- replay

bool replay(const GradedTheory& th, const Inequation& goal, const std::vector<DerivationStep>& trace,
            std::string* why) {
  auto fail = [&](std::size_t i, const std::string& msg) {
    if (why) *why = "step " + std::to_string(i + 1) + ": " + msg;
    return false;
  };
  if (trace.empty()) return fail(0, "empty trace");
  const FinPoset& ctx = *goal.context;
  auto has = [&](const std::vector<std::size_t>& prem, std::size_t at, std::size_t d, const Term& s, const Term& t) {
    for (auto p : prem)
      if (p < at && trace[p].depth == d && trace[p].lhs == s && trace[p].rhs == t) return true;
    return false;
  };
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const DerivationStep& s = trace[i];
    for (auto p : s.premises)
      if (p >= i) return fail(i, "premise refers forward");
    try {
      if (term_depth(th.sig, s.lhs) != s.depth || term_depth(th.sig, s.rhs) != s.depth)
        return fail(i, "depth annotation");
    } catch (const Error& e) {
      return fail(i, e.what());
    }
    if (s.rule == "Var") {
      if (s.lhs.kind != Term::Kind::Var || s.rhs.kind != Term::Kind::Var) return fail(i, "Var on non-variables");
      auto x = ctx.find(s.lhs.var), y = ctx.find(s.rhs.var);
      if (!x || !y || !ctx.leq(*x, *y)) return fail(i, "Var premise not in context");
    } else if (s.rule == "Trans") {
      bool ok = false;
      for (auto p : s.premises)
        for (auto q : s.premises)
          if (trace[p].depth == s.depth && trace[q].depth == s.depth && trace[p].lhs == s.lhs &&
              trace[p].rhs == trace[q].lhs && trace[q].rhs == s.rhs)
            ok = true;
      if (!ok) return fail(i, "Trans premises");
    } else if (s.rule == "Ar" || s.rule == "Mon") {
      const Term& f = s.lhs;
      const Term& g = s.rhs;
      if (f.kind != Term::Kind::App || g.kind != Term::Kind::App || f.op != g.op) return fail(i, "not an application");
      const Operation& o = th.sig.op(f.op);
      const std::size_t a = s.depth - o.depth;
      if (s.rule == "Ar") {
        if (f != g) return fail(i, "Ar concludes a definedness judgement");
        for (std::size_t p = 0; p < f.args.size(); ++p)
          for (std::size_t q = 0; q < f.args.size(); ++q)
            if (o.arity->leq(p, q) && !has(s.premises, i, a, f.args[p], f.args[q]))
              return fail(i, "missing arity premise");
      } else {
        for (std::size_t p = 0; p < f.args.size(); ++p)
          if (!has(s.premises, i, a, f.args[p], g.args[p])) return fail(i, "missing argument premise");
        if (!has(s.premises, i, s.depth, f, f) || !has(s.premises, i, s.depth, g, g))
          return fail(i, "missing definedness premise");
      }
    } else if (s.rule == "Ax1" || s.rule == "Ax2") {
      if (s.axiom >= th.axioms.size()) return fail(i, "axiom index");
      const Inequation& ax = th.axioms[s.axiom];
      const FinPoset& delta = *ax.context;
      std::optional<std::size_t> k;
      for (std::size_t x = 0; x < delta.size(); ++x) {
        auto it = s.subst.find(delta.id(x));
        if (it == s.subst.end()) return fail(i, "substitution misses " + delta.id(x));
        if (k && *k != it->second.depth) return fail(i, "substitution of mixed depth");
        k = it->second.depth;
      }
      Term l, r;
      if (s.rule == "Ax1") {
        if (s.depth < ax.depth || (k && *k != s.depth - ax.depth)) return fail(i, "depth of axiom instance");
        const std::size_t kk = s.depth - ax.depth;
        l = substitute_at(s.subst, ax.lhs, kk);
        r = substitute_at(s.subst, ax.rhs, kk);
      } else {
        std::set<Term> subs = subterms(ax.lhs);
        for (const auto& t : subterms(ax.rhs)) subs.insert(t);
        if (s.sub_i >= subs.size()) return fail(i, "subterm index");
        const Term& st = *std::next(subs.begin(), s.sub_i);
        if (st.kind != Term::Kind::App) return fail(i, "Ax2 on a variable");
        const Operation& o = th.sig.op(st.op);
        const std::size_t n = o.arity->size();
        if (n == 0 || s.sub_j >= n * n || !o.arity->leq(s.sub_j / n, s.sub_j % n)) return fail(i, "arity pair");
        const Term& u = st.args[s.sub_j / n];
        const Term& v = st.args[s.sub_j % n];
        if (s.depth < u.depth) return fail(i, "depth of axiom instance");
        l = substitute_at(s.subst, u, s.depth - u.depth);
        r = substitute_at(s.subst, v, s.depth - u.depth);
        k = s.depth - u.depth;
      }
      if (l != s.lhs || r != s.rhs) return fail(i, "conclusion is not the axiom instance");
      for (std::size_t x = 0; x < delta.size(); ++x)
        for (std::size_t y = 0; y < delta.size(); ++y)
          if (delta.leq(x, y) && !has(s.premises, i, *k, s.subst.at(delta.id(x)), s.subst.at(delta.id(y))))
            return fail(i, "missing context premise");
    } else {
      return fail(i, "unknown rule " + s.rule);
    }
  }
  const DerivationStep& last = trace.back();
  if (last.depth != goal.depth || last.lhs != goal.lhs || last.rhs != goal.rhs)
    return fail(trace.size() - 1, "does not conclude the goal");
  return true;
}

std::string show_trace(const GradedTheory& th, const PosetRef& context, const std::vector<DerivationStep>& trace) {
  std::ostringstream os;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const auto& s = trace[i];
    os << (i + 1) << ". " << s.rule << "  " << show_inequation(th.sig, {context, s.depth, s.lhs, s.rhs});
    if (!s.premises.empty()) {
      os << "  [";
      for (std::size_t p = 0; p < s.premises.size(); ++p) os << (p ? "," : "") << (s.premises[p] + 1);
      os << "]";
    }
    if (s.rule == "Ax1" || s.rule == "Ax2") os << "  axiom " << show_inequation(th.sig, th.axioms[s.axiom]);
    os << "\n";
  }
  return os.str();
}

// -------------------------------------------------------------------- models

namespace {

class TreeModel : public GradedModel {
 public:
  TreeModel(const GradedTheory& th, const FinPoset& X, std::size_t n, std::size_t probe)
      : th_(th), n_(n), probe_(probe), store_(std::make_shared<TreeStore>(Semantics::make(*th.model_semantics, th.labels))) {
    base_ = store_->add_base(share(X));
    std::vector<NodeId> l0;
    for (std::size_t x = 0; x < X.size(); ++x) l0.push_back(store_->point(base_, x));
    if (store_->sync()) l0.push_back(store_->deadlock(0));
    levels_.push_back(std::move(l0));
    exhaustive_.push_back(true);
  }

  std::size_t max_depth() const override { return n_; }

  std::vector<Elem> carrier(std::size_t k, bool& exhaustive) override {
    if (k > n_) throw Error(Errc::DepthOutOfRange, "model depth " + std::to_string(n_));
    while (levels_.size() <= k) grow();
    exhaustive = exhaustive_[k];
    return {levels_[k].begin(), levels_[k].end()};
  }

  bool leq(std::size_t, Elem a, Elem b) override {
    return store_->leq(static_cast<NodeId>(a), static_cast<NodeId>(b));
  }

  Elem apply(std::size_t op, std::size_t k, const std::vector<Elem>& args) override {
    const Operation& o = th_.sig.op(op);
    if (args.empty()) return o.depth == 0 ? store_->deadlock(k) : store_->make_set(k + 1, {});
    std::vector<Edge> es;
    for (std::size_t i = 0; i < args.size(); ++i) es.push_back({store_->label(o.labels[i]), static_cast<NodeId>(args[i])});
    return store_->make_set(k + 1, std::move(es));
  }

  std::string show(std::size_t, Elem e) override { return store_->show(static_cast<NodeId>(e)); }

 private:
  static constexpr std::size_t kCap = 4096;

  void grow() {
    const std::size_t d = levels_.size() - 1;
    const auto cands = candidate_edges(*store_, levels_[d], d);
    std::vector<NodeId> next;
    std::set<NodeId> seen;
    bool complete = exhaustive_[d];
    const bool finished = for_each_layer(*store_, cands, d + 1, [&](NodeId id) {
      if (seen.insert(id).second) next.push_back(id);
      return next.size() <= kCap;
    });
    if (!finished) {
      // too many: deterministic random sample of generator sets
      complete = false;
      std::mt19937_64 rng(7 + d);
      next.clear();
      seen.clear();
      next.push_back(store_->make_set(d + 1, {}));
      seen.insert(next.back());
      for (std::size_t tries = 0; next.size() < probe_ && tries < 50 * probe_; ++tries) {
        std::vector<Edge> es;
        for (const auto& e : cands)
          if (rng() % 3 == 0) es.push_back(e);
        NodeId id = store_->make_set(d + 1, std::move(es));
        if (seen.insert(id).second) next.push_back(id);
      }
    }
    levels_.push_back(std::move(next));
    exhaustive_.push_back(complete);
  }

  const GradedTheory& th_;
  std::size_t n_, probe_;
  std::shared_ptr<TreeStore> store_;
  std::uint32_t base_ = 0;
  std::vector<std::vector<NodeId>> levels_;
  std::vector<bool> exhaustive_;
};

class TraceModel : public GradedModel {
 public:
  TraceModel(const GradedTheory& th, const FinPoset& X, std::size_t n, std::size_t probe)
      : th_(th), base_(share(X)), n_(n), probe_(probe) {}

  std::size_t max_depth() const override { return n_; }

  std::vector<Elem> carrier(std::size_t k, bool& exhaustive) override {
    if (k > n_) throw Error(Errc::DepthOutOfRange, "model depth " + std::to_string(n_));
    exhaustive = false;
    std::vector<Elem> out;
    TraceDist zero{k, base_, {}};
    out.push_back(intern(zero));
    // all words of length k
    std::vector<Word> words{{}};
    for (std::size_t i = 0; i < k; ++i) {
      std::vector<Word> next;
      for (const auto& w : words)
        for (std::uint32_t a = 0; a < th_.labels.size(); ++a) {
          next.push_back(w);
          next.back().push_back(a);
        }
      words = std::move(next);
    }
    std::vector<std::pair<Word, std::size_t>> atoms;
    for (const auto& w : words)
      for (std::size_t x = 0; x < base_->size(); ++x) atoms.emplace_back(w, x);
    for (const auto& a : atoms) {
      TraceDist d{k, base_, {}};
      d.weights[a] = Rational(1);
      out.push_back(intern(d));
    }
    std::mt19937_64 rng(11 + k);
    while (out.size() < probe_ + atoms.size() + 1) {
      TraceDist d{k, base_, {}};
      long left = 4;  // quarters of mass still available
      for (const auto& a : atoms) {
        const long w = static_cast<long>(rng() % (left + 1));
        if (rng() % 2 && w > 0) {
          d.weights[a] = Rational(w, 4);
          left -= w;
        }
      }
      out.push_back(intern(d));
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  bool leq(std::size_t, Elem a, Elem b) override { return pt_leq(elems_[a], elems_[b]); }

  Elem apply(std::size_t op, std::size_t k, const std::vector<Elem>& args) override {
    const Operation& o = th_.sig.op(op);
    if (o.kind == Operation::Kind::Action) {
      const auto a = static_cast<std::uint32_t>(
          std::find(th_.labels.begin(), th_.labels.end(), o.labels[0]) - th_.labels.begin());
      const TraceDist& in = elems_[args[0]];
      TraceDist d{k + 1, base_, {}};
      for (const auto& [wx, p] : in.weights) {
        Word w{a};
        w.insert(w.end(), wx.first.begin(), wx.first.end());
        d.weights[{w, wx.second}] += p;
      }
      return intern(d);
    }
    TraceDist d{k, base_, {}};
    for (std::size_t i = 0; i < args.size(); ++i)
      for (const auto& [wx, p] : elems_[args[i]].weights) d.weights[wx] += o.coeffs[i] * p;
    for (auto it = d.weights.begin(); it != d.weights.end();) it = it->second.is_zero() ? d.weights.erase(it) : std::next(it);
    return intern(d);
  }

  std::string show(std::size_t, Elem e) override { return elems_[e].show(th_.labels); }

 private:
  Elem intern(const TraceDist& d) {
    auto key = std::make_pair(d.depth, d.weights);
    auto it = index_.find(key);
    if (it != index_.end()) return it->second;
    elems_.push_back(d);
    index_.emplace(std::move(key), elems_.size() - 1);
    return elems_.size() - 1;
  }

  const GradedTheory& th_;
  PosetRef base_;
  std::size_t n_, probe_;
  std::vector<TraceDist> elems_;
  std::map<std::pair<std::size_t, std::map<std::pair<Word, std::size_t>, Rational>>, Elem> index_;
};

}  // namespace

std::unique_ptr<GradedModel> normal_form_model(const GradedTheory& th, const FinPoset& X, std::size_t n,
                                               std::size_t probe) {
  if (!th.model_semantics) throw Error(Errc::SchemaError, "theory " + th.name + " has no normal-form model");
  if (th.subdistributions) return std::make_unique<TraceModel>(th, X, n, probe);
  return std::make_unique<TreeModel>(th, X, n, probe);
}

std::optional<GradedModel::Elem> evaluate(GradedModel& model, const GradedTheory& th, const Term& t,
                                          const std::vector<GradedModel::Elem>& val, const FinPoset& ctx,
                                          std::size_t m) {
  if (t.kind == Term::Kind::Var) return val.at(ctx.index(t.var));
  const Operation& o = th.sig.op(t.op);
  const std::size_t level = m + t.depth - o.depth;
  std::vector<GradedModel::Elem> args;
  for (const auto& a : t.args) {
    auto e = evaluate(model, th, a, val, ctx, m);
    if (!e) return std::nullopt;
    args.push_back(*e);
  }
  for (std::size_t p = 0; p < args.size(); ++p)
    for (std::size_t q = 0; q < args.size(); ++q)
      if (p != q && o.arity->leq(p, q) && !model.leq(level, args[p], args[q])) return std::nullopt;
  return model.apply(t.op, level, args);
}

bool for_each_valuation(GradedModel& model, const FinPoset& ctx, std::size_t m, bool& exhaustive,
                        const std::function<bool(const std::vector<GradedModel::Elem>&)>& visit) {
  const auto carrier = model.carrier(m, exhaustive);
  std::vector<GradedModel::Elem> val(ctx.size());
  std::function<bool(std::size_t)> rec = [&](std::size_t i) -> bool {
    if (i == ctx.size()) return visit(val);
    for (auto e : carrier) {
      bool ok = true;
      for (std::size_t j = 0; j < i && ok; ++j) {
        if (ctx.leq(j, i) && !model.leq(m, val[j], e)) ok = false;
        if (ctx.leq(i, j) && !model.leq(m, e, val[j])) ok = false;
      }
      if (!ok) continue;
      val[i] = e;
      if (!rec(i + 1)) return false;
    }
    return true;
  };
  return rec(0);
}

SatisfactionResult satisfies(GradedModel& model, const GradedTheory& th, const Inequation& e) {
  if (e.depth > model.max_depth())
    throw Error(Errc::DepthOutOfRange, "inequation of depth " + std::to_string(e.depth) + " above model depth");
  SatisfactionResult r;
  const FinPoset& ctx = *e.context;
  for (std::size_t m = 0; m + e.depth <= model.max_depth() && r.holds; ++m) {
    bool exhaustive = true;
    for_each_valuation(model, ctx, m, exhaustive, [&](const std::vector<GradedModel::Elem>& val) {
      ++r.valuations;
      auto a = evaluate(model, th, e.lhs, val, ctx, m);
      auto b = evaluate(model, th, e.rhs, val, ctx, m);
      if (a && b && model.leq(m + e.depth, *a, *b)) return true;
      r.holds = false;
      std::ostringstream os;
      os << "m=" << m;
      for (std::size_t i = 0; i < ctx.size(); ++i) os << " " << ctx.id(i) << "=" << model.show(m, val[i]);
      os << ": " << (a ? model.show(m + e.depth, *a) : "undefined") << " vs "
         << (b ? model.show(m + e.depth, *b) : "undefined");
      r.counterexample = os.str();
      return false;
    });
    r.exhaustive = r.exhaustive && exhaustive;
  }
  return r;
}

FreeModelReport free_model_elements(const GradedTheory& th, const FinPoset& X, std::size_t n,
                                    const DerivationBudget& budget) {
  if (budget.max_term_size == 0) throw Error(Errc::BudgetTooSmall, "term size bound must be positive");
  Saturation sat(th, share(X), n, budget);
  if (sat.rounds() >= budget.max_rounds && sat.truncated())
    throw Error(Errc::BudgetTooSmall, "saturation did not reach a fixpoint within " +
                                          std::to_string(budget.max_rounds) + " rounds");
  FreeModelReport rep;
  rep.truncated = sat.truncated();
  for (std::size_t d = 0; d <= n; ++d) {
    FreeModelLevel lvl;
    std::vector<std::size_t> reps;
    const auto& terms = sat.terms(d);
    for (std::size_t i = 0; i < terms.size(); ++i) {
      if (!sat.leq(d, i, i)) continue;
      bool placed = false;
      for (std::size_t c = 0; c < reps.size() && !placed; ++c)
        if (sat.leq(d, i, reps[c]) && sat.leq(d, reps[c], i)) {
          lvl.classes[c].push_back(terms[i]);
          placed = true;
        }
      if (!placed) {
        reps.push_back(i);
        lvl.classes.push_back({terms[i]});
      }
    }
    lvl.order.assign(reps.size(), std::vector<bool>(reps.size(), false));
    for (std::size_t a = 0; a < reps.size(); ++a)
      for (std::size_t b = 0; b < reps.size(); ++b) lvl.order[a][b] = sat.leq(d, reps[a], reps[b]);
    rep.levels.push_back(std::move(lvl));
  }
  return rep;
}

}  // namespace gbp
