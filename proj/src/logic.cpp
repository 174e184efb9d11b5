#include "gbp/logic.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <unordered_map>

#include "gbp/error.hpp"

namespace gbp {

// ---------------------------------------------------------------- truth values

std::string Truth::str() const {
  switch (kind) {
    case OmegaKind::Two: return v ? "true" : "false";
    case OmegaKind::Sync3: return v == 2 ? "deadlock" : (v ? "true" : "false");
    case OmegaKind::Unit: return p.str();
  }
  return "?";
}

bool truth_leq(const Truth& a, const Truth& b) {
  if (a.kind != b.kind) throw Error(Errc::IncompatibleLogic, "truth values of different kinds");
  switch (a.kind) {
    case OmegaKind::Two: return a.v <= b.v;
    case OmegaKind::Sync3: return (a.v == 2 || b.v == 2) ? a.v == b.v : a.v <= b.v;
    case OmegaKind::Unit: return a.p <= b.p;
  }
  return false;
}

namespace {

std::uint8_t sync_and(std::uint8_t a, std::uint8_t b) { return (a == 2 || b == 2) ? 2 : std::min(a, b); }
std::uint8_t sync_or(std::uint8_t a, std::uint8_t b) { return (a == 2 || b == 2) ? 2 : std::max(a, b); }

}  // namespace

// ---------------------------------------------------------------- logics

const char* logic_kind_name(LogicKind k) {
  switch (k) {
    case LogicKind::HML: return "hml";
    case LogicKind::POS_HML: return "pos_hml";
    case LogicKind::SYNC: return "sync";
    case LogicKind::PROB: return "prob";
  }
  return "?";
}

LogicKind parse_logic_kind(std::string_view name) {
  std::string n(name);
  std::transform(n.begin(), n.end(), n.begin(), [](unsigned char c) { return std::tolower(c); });
  for (LogicKind k : {LogicKind::HML, LogicKind::POS_HML, LogicKind::SYNC, LogicKind::PROB})
    if (n == logic_kind_name(k)) return k;
  if (n == "poshml" || n == "pos-hml") return LogicKind::POS_HML;
  throw Error(Errc::UnknownSymbol, "logic '" + std::string(name) + "'");
}

LogicKind default_logic(SemKind sem) {
  switch (sem) {
    case SemKind::Bisim: return LogicKind::HML;
    case SemKind::Sim:
    case SemKind::ReadySim: return LogicKind::POS_HML;
    case SemKind::Sync: return LogicKind::SYNC;
    case SemKind::PTrace: return LogicKind::PROB;
  }
  return LogicKind::HML;
}

LogicSpec LogicSpec::builtin(LogicKind kind, std::vector<std::string> labels) {
  std::sort(labels.begin(), labels.end());
  labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
  if (labels.empty()) throw Error(Errc::EmptyLabelSet, "logic needs at least one label");
  LogicSpec l;
  l.kind = kind;
  l.labels = std::move(labels);
  switch (kind) {
    case LogicKind::HML:
      l.has_box = l.has_or = l.has_and = l.has_ff = l.polymorphic_constants = true;
      break;
    case LogicKind::POS_HML:
      l.has_and = l.polymorphic_constants = true;
      break;
    case LogicKind::SYNC:
      l.omega = OmegaKind::Sync3;
      l.has_box = l.has_or = l.has_and = l.has_ff = true;
      break;
    case LogicKind::PROB:
      l.omega = OmegaKind::Unit;
      break;
  }
  return l;
}

std::string LogicSpec::name() const { return logic_kind_name(kind); }

bool LogicSpec::compatible(SemKind sem) const {
  switch (kind) {
    case LogicKind::HML: return sem == SemKind::Bisim;
    case LogicKind::POS_HML: return sem == SemKind::Sim || sem == SemKind::ReadySim || sem == SemKind::Bisim;
    case LogicKind::SYNC: return sem == SemKind::Sync;
    case LogicKind::PROB: return sem == SemKind::PTrace;
  }
  return false;
}

// ---------------------------------------------------------------- formulas

namespace {

std::string render_label(FNode::Op op, const std::string& label) {
  if (op == FNode::Op::Box) return "[" + label + "]";
  if (label == kStopLabel) return "dia(*,{})";
  if (!label.empty() && label.front() == '{') {
    auto close = label.find('}');
    return "dia(" + label.substr(close + 1) + "," + label.substr(0, close + 1) + ")";
  }
  return "<" + label + ">";
}

std::string wrapped(const Formula& f) {
  if (f->op == FNode::Op::And || f->op == FNode::Op::Or) return "(" + f->text + ")";
  return f->text;
}

Formula make_leaf(FNode::Op op) {
  auto n = std::make_shared<FNode>();
  n->op = op;
  n->text = op == FNode::Op::TT ? "tt" : "ff";
  return n;
}

Formula make_modal(FNode::Op op, std::string label, Formula arg) {
  auto n = std::make_shared<FNode>();
  n->op = op;
  n->depth = arg->depth + 1;
  n->fixed = arg->fixed;
  n->size = arg->size + 1;
  const bool modal_child = arg->op == FNode::Op::Dia || arg->op == FNode::Op::Box;
  n->text = render_label(op, label) + (modal_child ? "" : " ") + wrapped(arg);
  n->label = std::move(label);
  n->args.push_back(std::move(arg));
  return n;
}

Formula make_prop(FNode::Op op, std::vector<Formula> args) {
  std::vector<Formula> flat;
  for (auto& a : args) {
    if (a->op == op)
      flat.insert(flat.end(), a->args.begin(), a->args.end());
    else
      flat.push_back(std::move(a));
  }
  std::sort(flat.begin(), flat.end(), [](const Formula& a, const Formula& b) { return a->text < b->text; });
  flat.erase(std::unique(flat.begin(), flat.end(), [](const Formula& a, const Formula& b) { return a->text == b->text; }),
             flat.end());
  if (flat.empty()) return make_leaf(op == FNode::Op::And ? FNode::Op::TT : FNode::Op::FF);
  if (flat.size() == 1) return flat.front();
  auto n = std::make_shared<FNode>();
  n->op = op;
  n->size = 0;
  for (std::size_t i = 0; i < flat.size(); ++i) {
    n->depth = std::max(n->depth, flat[i]->depth);
    n->fixed = n->fixed || flat[i]->fixed;
    n->size += flat[i]->size;
    n->text += (i ? (op == FNode::Op::And ? " & " : " | ") : "") + wrapped(flat[i]);
  }
  n->size += flat.size() - 1;
  n->args = std::move(flat);
  return n;
}

}  // namespace

Formula f_tt() {
  static const Formula t = make_leaf(FNode::Op::TT);
  return t;
}
Formula f_ff() {
  static const Formula f = make_leaf(FNode::Op::FF);
  return f;
}
Formula f_and(std::vector<Formula> args) { return make_prop(FNode::Op::And, std::move(args)); }
Formula f_or(std::vector<Formula> args) { return make_prop(FNode::Op::Or, std::move(args)); }
Formula f_dia(std::string label, Formula arg) { return make_modal(FNode::Op::Dia, std::move(label), std::move(arg)); }
Formula f_box(std::string label, Formula arg) { return make_modal(FNode::Op::Box, std::move(label), std::move(arg)); }

namespace {

Formula negate(const Formula& f) {
  switch (f->op) {
    case FNode::Op::TT: return f_ff();
    case FNode::Op::FF: return f_tt();
    case FNode::Op::And:
    case FNode::Op::Or: {
      std::vector<Formula> xs;
      for (const auto& a : f->args) xs.push_back(negate(a));
      return f->op == FNode::Op::And ? f_or(std::move(xs)) : f_and(std::move(xs));
    }
    case FNode::Op::Dia:
      if (!f->label.empty() && (f->label.front() == '{' || f->label == kStopLabel))
        throw Error(Errc::ParseError, "ready-set diamonds cannot be negated");
      return f_box(f->label, negate(f->args[0]));
    case FNode::Op::Box: return f_dia(f->label, negate(f->args[0]));
  }
  return f;
}

class Parser {
 public:
  Parser(std::string_view text, const LogicSpec& logic) : s_(text), logic_(logic) {}

  Formula run() {
    Formula f = parse_or();
    skip();
    if (pos_ != s_.size()) fail("unexpected '" + std::string(s_.substr(pos_, 1)) + "'");
    return f;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw Error(Errc::ParseError, msg + " at offset " + std::to_string(pos_));
  }
  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool eat(std::string_view tok) {
    skip();
    if (s_.substr(pos_, tok.size()) == tok) {
      pos_ += tok.size();
      return true;
    }
    return false;
  }
  void expect(std::string_view tok) {
    if (!eat(tok)) fail("expected '" + std::string(tok) + "'");
  }
  static bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.'; }
  std::string ident() {
    skip();
    std::size_t b = pos_;
    while (pos_ < s_.size() && ident_char(s_[pos_])) ++pos_;
    if (b == pos_) fail("expected a label");
    return std::string(s_.substr(b, pos_ - b));
  }
  std::string action() {
    std::string a = ident();
    if (!std::binary_search(logic_.labels.begin(), logic_.labels.end(), a))
      throw Error(Errc::UnknownSymbol, "label '" + a + "'");
    return a;
  }
  bool keyword(std::string_view kw) {
    skip();
    if (s_.substr(pos_, kw.size()) != kw) return false;
    std::size_t e = pos_ + kw.size();
    if (e < s_.size() && ident_char(s_[e])) return false;
    pos_ = e;
    return true;
  }

  Formula parse_or() {
    std::vector<Formula> xs{parse_and()};
    while (eat("|")) {
      if (!logic_.has_or) fail("'|' is not an operator of " + logic_.name());
      xs.push_back(parse_and());
    }
    return xs.size() == 1 ? xs[0] : f_or(std::move(xs));
  }
  Formula parse_and() {
    std::vector<Formula> xs{parse_unary()};
    while (eat("&")) {
      if (!logic_.has_and) fail("'&' is not an operator of " + logic_.name());
      xs.push_back(parse_unary());
    }
    return xs.size() == 1 ? xs[0] : f_and(std::move(xs));
  }
  Formula parse_unary() {
    skip();
    if (eat("!")) {
      if (!logic_.has_box) fail("negation needs [a], which " + logic_.name() + " lacks");
      return negate(parse_unary());
    }
    if (eat("<")) {
      std::string a = action();
      expect(">");
      return f_dia(a, parse_unary());
    }
    if (eat("[")) {
      if (!logic_.has_box) fail("[a] is not monotone for " + logic_.name());
      std::string a = action();
      expect("]");
      return f_box(a, parse_unary());
    }
    if (keyword("dia")) {
      if (logic_.kind != LogicKind::POS_HML) fail("dia(a,{I}) belongs to pos_hml");
      expect("(");
      skip();
      std::string a;
      if (eat("*")) a = std::string(kStopLabel);
      else a = action();
      expect(",");
      expect("{");
      std::vector<std::string> ready;
      skip();
      if (!eat("}")) {
        do ready.push_back(action());
        while (eat(","));
        expect("}");
      }
      expect(")");
      std::sort(ready.begin(), ready.end());
      ready.erase(std::unique(ready.begin(), ready.end()), ready.end());
      if (a == kStopLabel) {
        if (!ready.empty()) fail("the stop diamond takes the empty ready set");
        return f_dia(a, parse_unary());
      }
      return f_dia(ready_label(ready, a), parse_unary());
    }
    if (keyword("tt")) return f_tt();
    if (keyword("ff")) {
      if (!logic_.has_ff) fail("ff is not a formula of " + logic_.name());
      return f_ff();
    }
    if (eat("(")) {
      Formula f = parse_or();
      expect(")");
      return f;
    }
    if (pos_ >= s_.size()) fail("unexpected end of formula");
    fail("unexpected '" + std::string(s_.substr(pos_, 1)) + "'");
  }

  std::string_view s_;
  const LogicSpec& logic_;
  std::size_t pos_ = 0;
};

}  // namespace

void check_formula(const Formula& f, const LogicSpec& logic, std::size_t depth) {
  switch (f->op) {
    case FNode::Op::TT:
    case FNode::Op::FF:
      if (depth != 0 && !logic.polymorphic_constants) {
        const std::string msg = f->text + " is a truth constant of " + logic.name() + " and only occurs at depth 0";
        throw Error(logic.kind == LogicKind::SYNC ? Errc::ParseError : Errc::NonUniformDepth, msg);
      }
      return;
    case FNode::Op::And:
    case FNode::Op::Or:
      for (const auto& a : f->args) check_formula(a, logic, depth);
      return;
    case FNode::Op::Dia:
    case FNode::Op::Box:
      if (depth == 0) throw Error(Errc::NonUniformDepth, f->text + " needs depth >= 1");
      check_formula(f->args[0], logic, depth - 1);
      return;
  }
}

Formula parse_formula(std::string_view text, const LogicSpec& logic) {
  Formula f = Parser(text, logic).run();
  check_formula(f, logic, f->depth);
  return f;
}

// ---------------------------------------------------------------- evaluation

namespace {

bool label_matches(const TreeStore& store, std::uint32_t edge_label, const std::string& label) {
  const std::string& name = store.label_name(edge_label);
  if (name == label) return true;
  // A plain action under ready simulation matches every ready-indexed copy.
  if (store.semantics().kind == SemKind::ReadySim && !label.empty() && label.front() != '{' && label != kStopLabel) {
    auto close = name.find('}');
    return close != std::string::npos && name.compare(close + 1, std::string::npos, label) == 0;
  }
  return false;
}

// Values of a modality at one set node, given a predicate on its children.
std::uint8_t modal_value(const TreeStore& store, FNode::Op op, const std::string& label, NodeId b,
                         const std::function<std::uint8_t(NodeId)>& child) {
  const Node& n = store.node(b);
  if (n.kind == Node::Kind::Deadlock) return 2;
  if (op == FNode::Op::Dia) {
    for (const auto& e : n.edges)
      if (label_matches(store, e.label, label) && child(e.child) == 1) return 1;
    return 0;
  }
  for (const auto& e : n.edges)
    if (label_matches(store, e.label, label) && child(e.child) == 0) return 0;
  return 1;
}

void check_compatible(const LogicSpec& logic, SemKind sem) {
  if (!logic.compatible(sem))
    throw Error(Errc::IncompatibleLogic, logic.name() + " is not a logic for " + sem_kind_name(sem));
}

}  // namespace

Truth eval_tree(const LogicSpec& logic, const Formula& f, TreeStore& store, NodeId b) {
  check_compatible(logic, store.semantics().kind);
  if (f->depth > store.depth(b) || (f->fixed && f->depth != store.depth(b)))
    throw Error(Errc::NonUniformDepth, "formula of depth " + std::to_string(f->depth) + " on a depth-" +
                                           std::to_string(store.depth(b)) + " behaviour");
  check_formula(f, logic, store.depth(b));
  std::map<std::pair<const FNode*, NodeId>, std::uint8_t> memo;
  std::function<std::uint8_t(const Formula&, NodeId)> go = [&](const Formula& g, NodeId id) -> std::uint8_t {
    if (store.is_deadlock(id)) return 2;
    auto key = std::make_pair(g.get(), id);
    if (auto it = memo.find(key); it != memo.end()) return it->second;
    std::uint8_t r = 0;
    switch (g->op) {
      case FNode::Op::TT: r = 1; break;
      case FNode::Op::FF: r = 0; break;
      case FNode::Op::And:
        r = 1;
        for (const auto& a : g->args) r = sync_and(r, go(a, id));
        break;
      case FNode::Op::Or:
        r = 0;
        for (const auto& a : g->args) r = sync_or(r, go(a, id));
        break;
      case FNode::Op::Dia:
      case FNode::Op::Box:
        r = modal_value(store, g->op, g->label, id, [&](NodeId c) { return go(g->args[0], c); });
        break;
    }
    memo.emplace(key, r);
    return r;
  };
  const std::uint8_t v = go(f, b);
  return logic.omega == OmegaKind::Sync3 ? Truth::sync(v) : Truth::two(v == 1);
}

Truth eval_trace(const LogicSpec& logic, const Formula& f, const TraceDist& d) {
  if (logic.kind != LogicKind::PROB) throw Error(Errc::IncompatibleLogic, logic.name() + " on a trace behaviour");
  if (f->depth != d.depth) throw Error(Errc::NonUniformDepth, "formula depth differs from behaviour depth");
  check_formula(f, logic, d.depth);
  Word w;
  const FNode* g = f.get();
  while (g->op == FNode::Op::Dia) {
    auto it = std::find(logic.labels.begin(), logic.labels.end(), g->label);
    w.push_back(static_cast<std::uint32_t>(it - logic.labels.begin()));
    g = g->args[0].get();
  }
  if (g->op != FNode::Op::TT) throw Error(Errc::ParseError, "prob formulas are <a1>...<an> tt");
  Rational p;
  for (const auto& [k, q] : d.weights)
    if (k.first == w) p += q;
  return Truth::unit(p);
}

Truth eval_behaviour(const LogicSpec& logic, const Formula& f, const Behaviour& b) {
  if (b.is_trace()) {
    if (b.semantics().labels != logic.labels) throw Error(Errc::LabelMismatch, "logic and semantics labels differ");
    return eval_trace(logic, f, b.trace());
  }
  return eval_tree(logic, f, *b.store(), b.node());
}

Truth eval_in_system(const Semantics& sem, const LogicSpec& logic, const Formula& f, const System& sys,
                     std::size_t x, std::optional<std::size_t> depth) {
  check_compatible(logic, sem.kind);
  if (logic.labels != sem.labels) throw Error(Errc::LabelMismatch, "logic and semantics labels differ");
  Unfolder u(sem);
  return eval_behaviour(logic, f, u.behaviour(sys, x, depth.value_or(f->depth)));
}

// ---------------------------------------------------------------- formula classes

namespace {

using Values = std::vector<std::uint8_t>;

struct Cls {
  Formula f;
  Values v;
};

// Formulas of depth 0..n modulo equality of their values on the sub-behaviours
// of a fixed set of depth-n roots.
class ClassEngine {
 public:
  ClassEngine(const LogicSpec& logic, TreeStore& store, const std::vector<NodeId>& roots, std::size_t size_bound,
              std::size_t class_cap)
      : logic_(logic), store_(store), size_bound_(size_bound), cap_(class_cap) {
    const std::size_t n = roots.empty() ? 0 : store.depth(roots[0]);
    levels_.assign(n + 1, {});
    levels_[n] = roots;
    for (std::size_t k = n; k > 0; --k) {
      std::set<NodeId> kids;
      for (auto r : levels_[k])
        for (const auto& e : store.node(r).edges) kids.insert(e.child);
      levels_[k - 1].assign(kids.begin(), kids.end());
    }
    for (auto& lv : levels_) {
      std::sort(lv.begin(), lv.end());
      lv.erase(std::unique(lv.begin(), lv.end()), lv.end());
    }
    index_.resize(n + 1);
    for (std::size_t k = 0; k <= n; ++k)
      for (std::size_t i = 0; i < levels_[k].size(); ++i) index_[k][levels_[k][i]] = i;
    // Modal labels: the logic's actions plus any ready-indexed labels present.
    std::set<std::string> labs(logic.labels.begin(), logic.labels.end());
    if (store.semantics().kind == SemKind::ReadySim)
      for (const auto& lv : levels_)
        for (auto r : lv)
          for (const auto& e : store.node(r).edges) labs.insert(store.label_name(e.label));
    modal_labels_.assign(labs.begin(), labs.end());
    classes_.resize(n + 1);
    for (std::size_t k = 0; k <= n; ++k) build(k);
  }

  const std::vector<NodeId>& level(std::size_t k) const { return levels_[k]; }
  const std::vector<Cls>& classes(std::size_t k) const { return classes_[k]; }
  std::size_t index(std::size_t k, NodeId id) const { return index_[k].at(id); }
  bool truncated() const { return truncated_; }

 private:
  std::uint8_t deadlock_or(NodeId id, std::uint8_t v) const { return store_.is_deadlock(id) ? 2 : v; }

  void build(std::size_t k) {
    const auto& nodes = levels_[k];
    std::map<Values, std::size_t> seen;
    auto& out = classes_[k];
    std::vector<std::size_t> queue;
    // `make` is only called when the values are new or the formula is smaller.
    auto add = [&](Values v, std::size_t size, const std::function<Formula()>& make) {
      if (size > size_bound_) return;
      auto it = seen.find(v);
      if (it != seen.end()) {
        if (size < out[it->second].f->size) out[it->second].f = make();
        return;
      }
      if (out.size() >= cap_) {
        truncated_ = true;
        return;
      }
      seen.emplace(v, out.size());
      queue.push_back(out.size());
      out.push_back({make(), std::move(v)});
    };
    if (k == 0 || logic_.polymorphic_constants) {
      Values t(nodes.size()), z(nodes.size());
      for (std::size_t i = 0; i < nodes.size(); ++i) {
        t[i] = deadlock_or(nodes[i], 1);
        z[i] = deadlock_or(nodes[i], 0);
      }
      add(t, 1, f_tt);
      if (logic_.has_ff) add(z, 1, f_ff);
    }
    if (k > 0) {
      std::vector<FNode::Op> ops{FNode::Op::Dia};
      if (logic_.has_box) ops.push_back(FNode::Op::Box);
      // Copy: classes_[k-1] is final, but `add` may grow `out`.
      const auto lower = classes_[k - 1];
      for (const auto& lab : modal_labels_)
        for (auto op : ops)
          for (const auto& c : lower) {
            Values v(nodes.size());
            for (std::size_t i = 0; i < nodes.size(); ++i)
              v[i] = modal_value(store_, op, lab, nodes[i],
                                 [&](NodeId ch) { return c.v[index_[k - 1].at(ch)]; });
            add(std::move(v), c.f->size + 1,
                [&] { return op == FNode::Op::Dia ? f_dia(lab, c.f) : f_box(lab, c.f); });
          }
    }
    if (!logic_.has_and && !logic_.has_or) return;
    for (std::size_t qi = 0; qi < queue.size(); ++qi) {
      const std::size_t i = queue[qi];
      for (std::size_t j = 0; j < out.size(); ++j) {
        if (i == j) continue;
        const Formula fa = out[i].f, fb = out[j].f;
        const std::size_t size = fa->size + fb->size + 1;
        if (logic_.has_and) {
          Values v(nodes.size());
          for (std::size_t t = 0; t < v.size(); ++t) v[t] = sync_and(out[i].v[t], out[j].v[t]);
          add(std::move(v), size, [&] { return f_and({fa, fb}); });
        }
        if (logic_.has_or) {
          Values v(nodes.size());
          for (std::size_t t = 0; t < v.size(); ++t) v[t] = sync_or(out[i].v[t], out[j].v[t]);
          add(std::move(v), size, [&] { return f_or({fa, fb}); });
        }
      }
    }
  }

  const LogicSpec& logic_;
  TreeStore& store_;
  std::size_t size_bound_, cap_;
  bool truncated_ = false;
  std::vector<std::vector<NodeId>> levels_;
  std::vector<std::unordered_map<NodeId, std::size_t>> index_;
  std::vector<std::string> modal_labels_;
  std::vector<std::vector<Cls>> classes_;
};

bool v_leq(OmegaKind k, std::uint8_t a, std::uint8_t b) {
  return truth_leq(k == OmegaKind::Sync3 ? Truth::sync(a) : Truth::two(a == 1),
                   k == OmegaKind::Sync3 ? Truth::sync(b) : Truth::two(b == 1));
}

Truth as_truth(OmegaKind k, std::uint8_t v) { return k == OmegaKind::Sync3 ? Truth::sync(v) : Truth::two(v == 1); }

bool better(const Formula& a, const Formula& b) {
  return a->size != b->size ? a->size < b->size : a->text < b->text;
}

std::optional<Witness> separate_words(const LogicSpec& logic, const TraceDist& dx, const TraceDist& dy,
                                      std::size_t size_bound) {
  if (dx.depth + 1 > size_bound) return std::nullopt;
  std::map<Word, std::pair<Rational, Rational>> vals;
  for (const auto& [k, p] : dx.weights) vals[k.first].first += p;
  for (const auto& [k, p] : dy.weights) vals[k.first].second += p;
  for (const auto& [w, pq] : vals) {
    if (pq.first <= pq.second) continue;
    Formula f = f_tt();
    for (auto it = w.rbegin(); it != w.rend(); ++it) f = f_dia(logic.labels[*it], f);
    return Witness{f, dx.depth, Truth::unit(pq.first), Truth::unit(pq.second)};
  }
  return std::nullopt;
}

constexpr std::size_t kClassCap = 1u << 14;

}  // namespace

std::optional<Witness> separate(const LogicSpec& logic, const Behaviour& bx, const Behaviour& by,
                                std::size_t size_bound) {
  if (bx.depth() != by.depth()) throw Error(Errc::DepthMismatch, "separate");
  check_compatible(logic, bx.semantics().kind);
  if (bx.is_trace()) return separate_words(logic, bx.trace(), by.trace(), size_bound);
  if (bx.store() != by.store()) throw Error(Errc::BaseMismatch, "behaviours from different stores");
  TreeStore& store = *bx.store();
  const std::size_t n = bx.depth();
  ClassEngine eng(logic, store, {bx.node(), by.node()}, size_bound, kClassCap);
  const std::size_t ix = eng.index(n, bx.node()), iy = eng.index(n, by.node());
  std::optional<Witness> best;
  for (const auto& c : eng.classes(n)) {
    if (v_leq(logic.omega, c.v[ix], c.v[iy])) continue;
    if (!best || better(c.f, best->formula))
      best = Witness{c.f, n, as_truth(logic.omega, c.v[ix]), as_truth(logic.omega, c.v[iy])};
  }
  return best;
}

InclusionResult theory_included(const Semantics& sem, const LogicSpec& logic, const System& a, std::size_t x,
                                const System& b, std::size_t y, std::size_t N, std::size_t size_bound) {
  check_compatible(logic, sem.kind);
  if (a.labels != b.labels) throw Error(Errc::LabelMismatch, "systems have different label sets");
  Unfolder u(sem);
  for (std::size_t n = 0; n <= N; ++n) {
    auto w = separate(logic, u.behaviour(a, x, n), u.behaviour(b, y, n), size_bound);
    if (w) return {false, w};
  }
  return {true, std::nullopt};
}

namespace {

// Depth-k formulas that hold (resp. fail) on every live depth-k behaviour.
Formula top_at(const LogicSpec& logic, std::size_t k) {
  if (logic.polymorphic_constants || k == 0) return f_tt();
  return f_box(logic.labels.front(), top_at(logic, k - 1));
}

Formula bottom_at(const LogicSpec& logic, std::size_t k) {
  if (logic.polymorphic_constants || k == 0) return f_ff();
  return f_dia(logic.labels.front(), bottom_at(logic, k - 1));
}

}  // namespace

Formula construct_witness(const LogicSpec& logic, TreeStore& store, NodeId bx, NodeId by) {
  check_compatible(logic, store.semantics().kind);
  if (store.leq(bx, by)) throw Error(Errc::NoWitnessWithinBounds, "behaviours are ordered");
  const std::size_t n = store.depth(bx);
  if (store.is_deadlock(bx) || store.is_deadlock(by)) return top_at(logic, n);
  const Node& nx = store.node(bx);
  const Node& ny = store.node(by);
  // Some generator of bx is below no generator of by: diamond over a conjunction.
  for (const auto& e : nx.edges) {
    bool covered = false;
    for (const auto& f : ny.edges)
      if (store.edge_leq(e, f)) covered = true;
    if (covered) continue;
    std::vector<Formula> conj;
    for (const auto& f : ny.edges)
      if (f.label == e.label) conj.push_back(construct_witness(logic, store, e.child, f.child));
    return f_dia(store.label_name(e.label), conj.empty() ? top_at(logic, n - 1) : f_and(std::move(conj)));
  }
  if (!logic.has_box) throw Error(Errc::NoWitnessWithinBounds, "no diamond witness");
  // Some generator of by is above no generator of bx: box over a disjunction.
  for (const auto& f : ny.edges) {
    bool covered = false;
    for (const auto& e : nx.edges)
      if (store.edge_leq(e, f)) covered = true;
    if (covered) continue;
    std::vector<Formula> disj;
    for (const auto& e : nx.edges)
      if (e.label == f.label) disj.push_back(construct_witness(logic, store, e.child, f.child));
    return f_box(store.label_name(f.label), disj.empty() ? bottom_at(logic, n - 1) : f_or(std::move(disj)));
  }
  throw Error(Errc::NoWitnessWithinBounds, "generators ordered but nodes are not");
}

std::optional<Witness> distinguish(const Semantics& sem, const LogicSpec& logic, const System& a, std::size_t x,
                                   const System& b, std::size_t y, std::size_t N, std::size_t size_bound) {
  check_compatible(logic, sem.kind);
  Unfolder u(sem);
  const auto verdict = refines(u, a, x, b, y, N);
  if (verdict.all()) return std::nullopt;
  const std::size_t n = *verdict.first_failure;
  const Behaviour bx = u.behaviour(a, x, n), by = u.behaviour(b, y, n);
  std::optional<Witness> w;
  if (sem.kind == SemKind::Sim || sem.kind == SemKind::ReadySim) {
    Formula f = construct_witness(logic, *bx.store(), bx.node(), by.node());
    w = Witness{f, n, eval_behaviour(logic, f, bx), eval_behaviour(logic, f, by)};
  } else {
    w = separate(logic, bx, by, size_bound);
    if (!w && !bx.is_trace()) {
      Formula f = construct_witness(logic, *bx.store(), bx.node(), by.node());
      w = Witness{f, n, eval_behaviour(logic, f, bx), eval_behaviour(logic, f, by)};
    }
  }
  if (!w || truth_leq(w->at_x, w->at_y))
    throw Error(Errc::NoWitnessWithinBounds, "refinement fails at depth " + std::to_string(n) +
                                                 " but no separating formula was found");
  return w;
}

// ---------------------------------------------------------------- separation

namespace {

TraceDist random_trace(std::mt19937_64& rng, const Semantics& sem, std::size_t depth, long max_den) {
  const auto one = share(FinPoset::one());
  TraceDist d;
  d.depth = depth;
  d.base = one;
  std::size_t words = 1;
  for (std::size_t i = 0; i < depth; ++i) words *= sem.labels.size();
  std::uniform_int_distribution<std::size_t> pick(0, words - 1);
  std::uniform_int_distribution<long> den(1, max_den);
  Rational left(1);
  const std::size_t support = std::uniform_int_distribution<std::size_t>(0, std::min<std::size_t>(words, 3))(rng);
  for (std::size_t s = 0; s < support; ++s) {
    std::size_t code = pick(rng);
    Word w(depth);
    for (std::size_t i = 0; i < depth; ++i) {
      w[i] = static_cast<std::uint32_t>(code % sem.labels.size());
      code /= sem.labels.size();
    }
    const long q = den(rng);
    Rational p(std::uniform_int_distribution<long>(0, q)(rng), q);
    if (p > left) p = left;
    left -= p;
    if (!p.is_zero()) d.weights[{w, 0}] += p;
  }
  return d;
}

}  // namespace

SeparationReport check_separation(const Semantics& sem, const LogicSpec& logic, std::size_t n, std::size_t cap,
                                  std::uint64_t seed) {
  check_compatible(logic, sem.kind);
  SeparationReport rep;
  const std::size_t unbounded = std::numeric_limits<std::size_t>::max();
  if (!sem.is_tree()) {
    // M_0 1 = [0,1]; [[tt]] is the identity, checked on a grid.
    rep.depth0 = true;
    for (long q = 1; q <= 6; ++q)
      for (long p = 0; p <= q; ++p)
        for (long r = 0; r <= q; ++r) {
          Rational a(p, q), b(r, q);
          if (!(a <= b) && truth_leq(Truth::unit(a), Truth::unit(b))) rep.depth0 = false;
        }
    std::mt19937_64 rng(seed);
    rep.depth1 = true;
    rep.carrier1 = cap;
    for (std::size_t i = 0; i < cap; ++i) {
      TraceDist a = random_trace(rng, sem, n + 1, 6), b = random_trace(rng, sem, n + 1, 6);
      ++rep.pairs_checked;
      if (pt_leq(a, b)) continue;
      auto w = separate(logic, Behaviour::of_trace(sem, a), Behaviour::of_trace(sem, b), unbounded);
      if (!w) {
        ++rep.pairs_failing;
        rep.depth1 = false;
      }
    }
    rep.note = "sampled " + std::to_string(cap) + " pairs of depth-" + std::to_string(n + 1) + " trace distributions";
    return rep;
  }
  auto store = std::make_shared<TreeStore>(sem);
  const auto m0 = enumerate_mn1(*store, 0, cap);
  rep.depth0 = true;
  for (auto p : m0)
    for (auto q : m0) {
      if (store->leq(p, q)) continue;
      bool found = false;
      for (const auto& c : {f_tt(), f_ff()}) {
        if (c->op == FNode::Op::FF && !logic.has_ff) continue;
        if (!truth_leq(eval_tree(logic, c, *store, p), eval_tree(logic, c, *store, q))) found = true;
      }
      rep.depth0 = rep.depth0 && found;
    }
  const auto a0 = enumerate_mn1(*store, n, cap);
  const auto a1 = enumerate_mn1(*store, n + 1, cap);
  rep.carrier0 = a0.size();
  rep.carrier1 = a1.size();
  rep.depth1 = true;
  for (auto p : a1)
    for (auto q : a1) {
      ++rep.pairs_checked;
      if (store->leq(p, q)) continue;
      auto w = separate(logic, Behaviour::of_tree(store, p), Behaviour::of_tree(store, q), unbounded);
      if (!w) {
        ++rep.pairs_failing;
        rep.depth1 = false;
      }
    }
  rep.note = "exhaustive over M_" + std::to_string(n + 1) + "1";
  return rep;
}

// ---------------------------------------------------------------- modal squares

OmegaBase add_omega_base(TreeStore& store, OmegaKind kind) {
  OmegaBase ob;
  if (kind == OmegaKind::Two)
    ob.base = store.add_base(share(FinPoset::chain({"0", "1"})));
  else if (kind == OmegaKind::Sync3)
    ob.base = store.add_base(share(FinPoset::validate({"0", "1", "2"}, {{"0", "1"}})));
  else
    throw Error(Errc::IncompatibleLogic, "[0,1] is not a finite base");
  return ob;
}

Truth modality_structure(const LogicSpec& logic, FNode::Op op, const std::string& label, TreeStore& store,
                         NodeId m1omega) {
  const Node& n = store.node(m1omega);
  const bool sync = logic.omega == OmegaKind::Sync3;
  if (n.kind == Node::Kind::Deadlock) return Truth::sync(2);
  if (n.kind != Node::Kind::Set || n.depth != 1) throw Error(Errc::ShapeMismatch, "expected an element of M_1 Omega");
  std::uint32_t base = 0;
  bool live = false;
  for (const auto& e : n.edges) {
    base = store.node(e.child).base;
    live = live || store.node(e.child).value != 2;
  }
  if (sync && !live) return Truth::sync(2);
  auto lab = store.label(label);
  // (a, true) in S for the diamond; (a, false) not in S for the box.
  bool v;
  if (n.edges.empty()) {
    v = op == FNode::Op::Box;
  } else if (op == FNode::Op::Dia) {
    v = store.member(m1omega, {lab, store.point(base, 1)});
  } else {
    v = !store.member(m1omega, {lab, store.point(base, 0)});
  }
  return sync ? Truth::sync(v) : Truth::two(v);
}

SquareReport check_modal_square(const Semantics& sem, const LogicSpec& logic, std::size_t n, std::size_t cap,
                                std::size_t size_bound) {
  check_compatible(logic, sem.kind);
  if (!sem.is_tree()) throw Error(Errc::IncompatibleLogic, "use the subdistribution squares for prob");
  SquareReport rep;
  TreeStore store(sem);
  const auto an = enumerate_mn1(store, n, cap);
  ClassEngine eng(logic, store, an, size_bound, kClassCap);
  const auto& fs = eng.classes(n);
  rep.functions = fs.size();
  const OmegaBase omega = add_omega_base(store, logic.omega);
  std::vector<NodeId> carrier;
  for (auto c : an) carrier.push_back(store.embed(c));
  std::vector<Edge> cands;
  for (const auto& a : sem.labels)
    for (auto c : carrier) cands.push_back({store.label(a), c});
  std::vector<FNode::Op> ops{FNode::Op::Dia};
  if (logic.has_box) ops.push_back(FNode::Op::Box);
  const bool complete = for_each_layer(store, cands, 1, [&](NodeId s) {
    if (++rep.elements > cap) return false;
    const NodeId grafted = store.graft(s, n);
    for (const auto& f : fs) {
      const NodeId image = store.relabel_leaves(s, [&](NodeId leaf) {
        const NodeId inner = store.node(leaf).value;
        return store.point(omega.base, f.v[eng.index(n, inner)]);
      });
      for (const auto& a : sem.labels)
        for (auto op : ops) {
          const Formula lf = op == FNode::Op::Dia ? f_dia(a, f.f) : f_box(a, f.f);
          const Truth lhs = eval_tree(logic, lf, store, grafted);
          const Truth rhs = modality_structure(logic, op, a, store, image);
          ++rep.checks;
          if (!(lhs == rhs)) ++rep.failures;
        }
    }
    return true;
  });
  rep.exhaustive = complete && !eng.truncated();
  if (!complete) {
    rep.elements = cap;
    rep.note = "M_1 M_" + std::to_string(n) + "1 exceeds " + std::to_string(cap) + " elements";
  } else if (eng.truncated()) {
    rep.note = "formula classes truncated";
  }
  return rep;
}

// ---------------------------------------------------------------- prob squares

Rational prob_o(const OmegaSum& d) {
  Rational out;
  for (const auto& [p, r] : d) out += p * r;
  return out;
}

Rational prob_alpha(std::uint32_t a, const LabelledOmegaSum& d) {
  Rational out;
  for (const auto& [p, b, r] : d)
    if (b == a) out += p * r;
  return out;
}

namespace {

struct ProbSampler {
  std::mt19937_64 rng;
  std::size_t labels;

  long below(long n) { return std::uniform_int_distribution<long>(0, n)(rng); }

  // Subconvex coefficients with a common denominator <= 6.
  std::vector<Rational> coeffs(std::size_t k) {
    const long q = 1 + below(5);
    long left = q;
    std::vector<Rational> out;
    for (std::size_t i = 0; i < k; ++i) {
      const long c = 1 + below(std::max(0L, left - 1));
      if (c > left) break;
      left -= c;
      out.emplace_back(c, q);
    }
    return out;
  }
  Rational value() {
    const long q = 1 + below(5);
    return Rational(below(q), q);
  }
  std::uint32_t label() { return static_cast<std::uint32_t>(below(static_cast<long>(labels) - 1)); }
  std::size_t count() { return static_cast<std::size_t>(below(3)); }

  OmegaSum omega_sum() {
    OmegaSum d;
    for (const auto& p : coeffs(count())) d.emplace_back(p, value());
    return d;
  }
  LabelledOmegaSum labelled_sum() {
    LabelledOmegaSum d;
    for (const auto& p : coeffs(count())) d.emplace_back(p, label(), value());
    return d;
  }
};

// A sum obviously below d: a sub-list with smaller coefficients and values.
LabelledOmegaSum obviously_smaller(ProbSampler& s, const LabelledOmegaSum& d) {
  LabelledOmegaSum out;
  for (const auto& [p, a, r] : d) {
    if (s.below(3) == 0) continue;
    out.emplace_back(p * Rational(1 + s.below(1), 2), a, r * Rational(s.below(2), 2));
  }
  return out;
}

}  // namespace

SquareReport check_prob_squares(const LogicSpec& logic, std::size_t n, std::size_t samples, std::uint64_t seed) {
  if (logic.kind != LogicKind::PROB) throw Error(Errc::IncompatibleLogic, "prob squares need the prob logic");
  Semantics sem;
  sem.kind = SemKind::PTrace;
  sem.labels = logic.labels;
  const std::size_t L = logic.labels.size();
  SquareReport rep;
  rep.elements = samples;
  auto fail = [&](const std::string& what) {
    if (rep.failures++ == 0) rep.note = what;
  };

  // depth-n formulas are the words of length n
  std::vector<Word> words{Word{}};
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<Word> next;
    for (const auto& w : words)
      for (std::uint32_t a = 0; a < L; ++a) {
        next.push_back(w);
        next.back().push_back(a);
      }
    words = std::move(next);
  }
  auto formula = [&](const Word& w) {
    Formula f = f_tt();
    for (auto it = w.rbegin(); it != w.rend(); ++it) f = f_dia(logic.labels[*it], f);
    return f;
  };
  rep.functions = words.size();

  ProbSampler s{std::mt19937_64(seed), L};
  std::mt19937_64 trace_rng(seed + 1);
  for (std::size_t i = 0; i < samples; ++i) {
    // [[<a> f]] . a10 = [[<a>]] . M_1 [[f]] on M_1 M_n 1
    NestedTrace S;
    S.depth = 1;
    std::vector<std::uint32_t> outer;
    for (const auto& p : s.coeffs(s.count())) {
      outer.push_back(s.label());
      S.entries.emplace_back(Word{outer.back()}, random_trace(trace_rng, sem, n, 6), p);
    }
    TraceDist flat = pt_mult(S);
    if (S.entries.empty()) {  // the inner depth is not recorded in an empty sum
      flat.depth = n + 1;
      flat.base = share(FinPoset::one());
    }
    for (const auto& w : words) {
      const Formula f = formula(w);
      LabelledOmegaSum image;
      for (const auto& [ow, inner, p] : S.entries) image.emplace_back(p, ow[0], eval_trace(logic, f, inner).p);
      for (std::uint32_t a = 0; a < L; ++a) {
        ++rep.checks;
        const Rational lhs = eval_trace(logic, f_dia(logic.labels[a], f), flat).p;
        if (lhs != prob_alpha(a, image)) fail("modality square at <" + logic.labels[a] + ">");
      }
    }

    // homomorphy on M_0 M_1 [0,1]
    std::vector<std::pair<Rational, LabelledOmegaSum>> mm;
    for (const auto& p : s.coeffs(s.count())) mm.emplace_back(p, s.labelled_sum());
    // coequalization on M_1 M_0 [0,1]
    std::vector<std::tuple<Rational, std::uint32_t, OmegaSum>> m10;
    for (const auto& p : s.coeffs(s.count())) m10.emplace_back(p, s.label(), s.omega_sum());
    for (std::uint32_t a = 0; a < L; ++a) {
      LabelledOmegaSum mu01;
      OmegaSum m0alpha;
      for (const auto& [p, d] : mm) {
        for (const auto& [q, b, r] : d) mu01.emplace_back(p * q, b, r);
        m0alpha.emplace_back(p, prob_alpha(a, d));
      }
      ++rep.checks;
      if (prob_alpha(a, mu01) != prob_o(m0alpha)) fail("homomorphy");

      LabelledOmegaSum mu10, m1o;
      for (const auto& [p, b, d] : m10) {
        for (const auto& [q, r] : d) mu10.emplace_back(p * q, b, r);
        m1o.emplace_back(p, b, prob_o(d));
      }
      ++rep.checks;
      if (prob_alpha(a, mu10) != prob_alpha(a, m1o)) fail("coequalization");

      const LabelledOmegaSum big = s.labelled_sum(), small = obviously_smaller(s, big);
      ++rep.checks;
      if (!(prob_alpha(a, small) <= prob_alpha(a, big))) fail("monotonicity of [[<a>]]");
    }
    OmegaSum big = s.omega_sum(), small;
    for (const auto& [p, r] : big)
      if (s.below(2) != 0) small.emplace_back(p, r * Rational(s.below(1), 1));
    ++rep.checks;
    if (!(prob_o(small) <= prob_o(big))) fail("monotonicity of o");
  }
  return rep;
}

}  // namespace gbp
