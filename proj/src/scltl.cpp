#include "hjmra/scltl.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cctype>
#include <deque>
#include <functional>
#include <limits>
#include <map>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

namespace hjmra::ltl {

// ---------------------------------------------------------------------------
// Formula

std::string Formula::to_string() const { return root < 0 ? std::string() : to_string(root); }

std::string Formula::to_string(int i) const {
  const Node& n = nodes[i];
  switch (n.kind) {
    case Kind::True:
      return "True";
    case Kind::Atom:
      return atoms[n.atom];
    case Kind::NotAtom:
      return "!" + atoms[n.atom];
    case Kind::Or:
      return "(" + to_string(n.lhs) + " | " + to_string(n.rhs) + ")";
    case Kind::And:
      return "(" + to_string(n.lhs) + " & " + to_string(n.rhs) + ")";
    case Kind::Until:
      return "(" + to_string(n.lhs) + " U " + to_string(n.rhs) + ")";
  }
  return {};
}

namespace {

bool eval_letter_node(const Formula& f, int i, Letter sigma) {
  const auto& n = f.node(i);
  switch (n.kind) {
    case Formula::Kind::True:
      return true;
    case Formula::Kind::Atom:
      return (sigma >> n.atom) & 1u;
    case Formula::Kind::NotAtom:
      return !((sigma >> n.atom) & 1u);
    case Formula::Kind::Or:
      return eval_letter_node(f, n.lhs, sigma) || eval_letter_node(f, n.rhs, sigma);
    case Formula::Kind::And:
      return eval_letter_node(f, n.lhs, sigma) && eval_letter_node(f, n.rhs, sigma);
    case Formula::Kind::Until:
      throw FsaError("until operator in a propositional label");
  }
  return false;
}

}  // namespace

bool Formula::eval_letter(Letter sigma) const { return eval_letter_node(*this, root, sigma); }

bool Formula::has_until() const {
  return std::any_of(nodes.begin(), nodes.end(), [](const Node& n) { return n.kind == Kind::Until; });
}

// ---------------------------------------------------------------------------
// Parser

namespace {

enum class Tok { Ident, True, Not, And, Or, Until, LParen, RParen, End };

struct Token {
  Tok kind;
  std::string text;
  std::size_t pos;
};

std::vector<Token> tokenize(const std::string& s) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < s.size()) {
    const char c = s[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    const std::size_t pos = i;
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i;
      while (j < s.size() && (std::isalnum(static_cast<unsigned char>(s[j])) || s[j] == '_')) ++j;
      std::string word = s.substr(i, j - i);
      i = j;
      if (word == "U") {
        out.push_back({Tok::Until, word, pos});
      } else if (word == "True" || word == "true") {
        out.push_back({Tok::True, word, pos});
      } else {
        out.push_back({Tok::Ident, word, pos});
      }
      continue;
    }
    switch (c) {
      case '1':
        out.push_back({Tok::True, "1", pos});
        break;
      case '!':
        out.push_back({Tok::Not, "!", pos});
        break;
      case '&':
        out.push_back({Tok::And, "&", pos});
        if (i + 1 < s.size() && s[i + 1] == '&') ++i;
        break;
      case '|':
        out.push_back({Tok::Or, "|", pos});
        if (i + 1 < s.size() && s[i + 1] == '|') ++i;
        break;
      case '(':
        out.push_back({Tok::LParen, "(", pos});
        break;
      case ')':
        out.push_back({Tok::RParen, ")", pos});
        break;
      default:
        throw SyntaxError(std::string("unexpected character '") + c + "'", pos);
    }
    ++i;
  }
  out.push_back({Tok::End, "", s.size()});
  return out;
}

class Parser {
 public:
  Parser(const std::string& text, const std::vector<std::string>& ap) : toks_(tokenize(text)), fixed_ap_(!ap.empty()) {
    f_.atoms = ap;
  }

  Formula run() {
    f_.root = parse_or();
    if (peek().kind == Tok::RParen) throw SyntaxError("unbalanced parenthesis ')'", peek().pos);
    if (peek().kind != Tok::End) throw SyntaxError("unexpected token '" + peek().text + "'", peek().pos);
    return std::move(f_);
  }

 private:
  const Token& peek() const { return toks_[k_]; }
  const Token& take() { return toks_[k_++]; }

  int add(Formula::Node n) {
    f_.nodes.push_back(n);
    return static_cast<int>(f_.nodes.size()) - 1;
  }

  int atom_index(const Token& t) {
    auto it = std::find(f_.atoms.begin(), f_.atoms.end(), t.text);
    if (it != f_.atoms.end()) return static_cast<int>(it - f_.atoms.begin());
    if (fixed_ap_) throw SyntaxError("unknown atom '" + t.text + "'", t.pos);
    if (f_.atoms.size() >= static_cast<std::size_t>(kMaxAtoms)) throw SyntaxError("too many atoms", t.pos);
    f_.atoms.push_back(t.text);
    return static_cast<int>(f_.atoms.size()) - 1;
  }

  int parse_or() {
    int lhs = parse_and();
    while (peek().kind == Tok::Or) {
      take();
      const int rhs = parse_and();
      lhs = add({Formula::Kind::Or, -1, lhs, rhs});
    }
    return lhs;
  }

  int parse_and() {
    int lhs = parse_until();
    while (peek().kind == Tok::And) {
      take();
      const int rhs = parse_until();
      lhs = add({Formula::Kind::And, -1, lhs, rhs});
    }
    return lhs;
  }

  int parse_until() {
    const int lhs = parse_unary();
    if (peek().kind == Tok::Until) {
      take();
      const int rhs = parse_until();
      return add({Formula::Kind::Until, -1, lhs, rhs});
    }
    return lhs;
  }

  int parse_unary() {
    if (peek().kind == Tok::Not) {
      const Token& bang = take();
      if (peek().kind != Tok::Ident) throw SyntaxError("negation applies only to atoms", bang.pos);
      const Token& id = take();
      return add({Formula::Kind::NotAtom, atom_index(id), -1, -1});
    }
    return parse_primary();
  }

  int parse_primary() {
    const Token& t = take();
    switch (t.kind) {
      case Tok::True:
        return add({Formula::Kind::True, -1, -1, -1});
      case Tok::Ident:
        return add({Formula::Kind::Atom, atom_index(t), -1, -1});
      case Tok::LParen: {
        const int inner = parse_or();
        if (peek().kind != Tok::RParen) throw SyntaxError("unbalanced parenthesis, expected ')'", peek().pos);
        take();
        return inner;
      }
      case Tok::RParen:
        throw SyntaxError("unbalanced parenthesis ')'", t.pos);
      case Tok::End:
        throw SyntaxError("unexpected end of formula", t.pos);
      default:
        throw SyntaxError("unexpected token '" + t.text + "'", t.pos);
    }
  }

  std::vector<Token> toks_;
  std::size_t k_ = 0;
  bool fixed_ap_;
  Formula f_;
};

}  // namespace

Formula parse(const std::string& text, const std::vector<std::string>& ap) {
  if (ap.size() > static_cast<std::size_t>(kMaxAtoms)) throw SyntaxError("at most 16 atoms are supported", 0);
  return Parser(text, ap).run();
}

// ---------------------------------------------------------------------------
// Automaton

int Fsa::run(const Word& word) const {
  int s = initial;
  for (Letter l : word) {
    s = next(s, l);
    if (s < 0) return -1;
  }
  return s;
}

bool Fsa::accepts(const Word& word) const {
  const int s = run(word);
  return s >= 0 && accepting[s];
}

bool Fsa::is_deterministic() const {
  if (delta.size() != static_cast<std::size_t>(num_states()) * alphabet_size()) return false;
  return std::all_of(delta.begin(), delta.end(), [this](int s) { return s >= -1 && s < num_states(); });
}

bool Fsa::is_stutter_insensitive() const {
  for (int sp = 0; sp < num_states(); ++sp) {
    for (Letter l = 0; l < alphabet_size(); ++l) {
      const int s = next(sp, l);
      if (s >= 0 && next(s, l) != s) return false;
    }
  }
  return true;
}

int Fsa::state_index(const std::string& name) const {
  auto it = std::find(state_names.begin(), state_names.end(), name);
  return it == state_names.end() ? -1 : static_cast<int>(it - state_names.begin());
}

namespace {

using Table = std::vector<std::uint64_t>;

bool table_bit(const Table& t, std::uint32_t b) { return (t[b >> 6] >> (b & 63)) & 1u; }
void set_bit(Table& t, std::uint32_t b) { t[b >> 6] |= std::uint64_t{1} << (b & 63); }

struct TableHash {
  std::size_t operator()(const Table& t) const {
    std::size_t h = 1469598103934665603ull;
    for (auto w : t) h = (h ^ std::hash<std::uint64_t>{}(w)) * 1099511628211ull;
    return h;
  }
};

class Progression {
 public:
  Progression(const Formula& f) : f_(f) {
    std::map<std::string, int> seen;
    until_of_.assign(f.nodes.size(), -1);
    collect(f.root, seen);
    k_ = static_cast<int>(untils_.size());
  }

  int k() const { return k_; }
  const std::vector<int>& untils() const { return untils_; }

  // prog(node, sigma) evaluated with U-subformula j replaced by bit j of b.
  bool prog(int i, Letter sigma, std::uint32_t b) const {
    const auto& n = f_.node(i);
    switch (n.kind) {
      case Formula::Kind::True:
        return true;
      case Formula::Kind::Atom:
        return (sigma >> n.atom) & 1u;
      case Formula::Kind::NotAtom:
        return !((sigma >> n.atom) & 1u);
      case Formula::Kind::Or:
        return prog(n.lhs, sigma, b) || prog(n.rhs, sigma, b);
      case Formula::Kind::And:
        return prog(n.lhs, sigma, b) && prog(n.rhs, sigma, b);
      case Formula::Kind::Until:
        return prog(n.rhs, sigma, b) || (prog(n.lhs, sigma, b) && ((b >> until_of_[i]) & 1u));
    }
    return false;
  }

  // Truth of a formula that is a positive combination of U-subformulas; -1 if
  // it contains a literal outside every until.
  int statically(int i, std::uint32_t b) const {
    const auto& n = f_.node(i);
    switch (n.kind) {
      case Formula::Kind::True:
        return 1;
      case Formula::Kind::Atom:
      case Formula::Kind::NotAtom:
        return -1;
      case Formula::Kind::Or: {
        const int l = statically(n.lhs, b);
        const int r = statically(n.rhs, b);
        if (l < 0 || r < 0) return -1;
        return l | r;
      }
      case Formula::Kind::And: {
        const int l = statically(n.lhs, b);
        const int r = statically(n.rhs, b);
        if (l < 0 || r < 0) return -1;
        return l & r;
      }
      case Formula::Kind::Until:
        return static_cast<int>((b >> until_of_[i]) & 1u);
    }
    return -1;
  }

  std::string until_text(int j) const { return f_.to_string(untils_[j]); }

 private:
  void collect(int i, std::map<std::string, int>& seen) {
    const auto& n = f_.node(i);
    if (n.lhs >= 0) collect(n.lhs, seen);
    if (n.rhs >= 0) collect(n.rhs, seen);
    if (n.kind == Formula::Kind::Until) {
      const std::string key = f_.to_string(i);
      auto it = seen.find(key);
      if (it == seen.end()) {
        if (untils_.size() >= 20) throw FsaError("too many distinct until subformulas");
        it = seen.emplace(key, static_cast<int>(untils_.size())).first;
        untils_.push_back(i);
      }
      until_of_[i] = it->second;
    }
  }

  const Formula& f_;
  std::vector<int> untils_;
  std::vector<int> until_of_;
  int k_ = 0;
};

}  // namespace

Fsa to_fsa(const Formula& phi, const std::vector<std::string>& ap, const FsaOptions& opts) {
  if (phi.root < 0) throw FsaError("empty formula");
  if (ap.size() > static_cast<std::size_t>(kMaxAtoms)) throw FsaError("at most 16 atomic propositions");
  // Re-index atoms onto `ap`.
  Formula f = phi;
  for (auto& n : f.nodes) {
    if (n.atom < 0) continue;
    const auto& name = phi.atoms[n.atom];
    auto it = std::find(ap.begin(), ap.end(), name);
    if (it == ap.end()) throw FsaError("atom '" + name + "' is not in the alphabet");
    n.atom = static_cast<int>(it - ap.begin());
  }
  f.atoms = ap;

  Progression pr(f);
  const int k = pr.k();
  const std::uint32_t tsize = 1u << k;
  const std::size_t words = (tsize + 63) / 64;
  const std::size_t nsig = std::size_t{1} << ap.size();
  if (static_cast<double>(nsig) * tsize > static_cast<double>(1u << 26)) {
    throw FsaError("alphabet times obligation table too large");
  }

  // Per letter: successor bit pattern of every U-subformula, and the root progression.
  std::vector<std::vector<std::uint32_t>> succ(nsig, std::vector<std::uint32_t>(tsize));
  std::vector<Table> root_prog(nsig, Table(words, 0));
  for (Letter s = 0; s < nsig; ++s) {
    for (std::uint32_t b = 0; b < tsize; ++b) {
      std::uint32_t g = 0;
      for (int j = 0; j < k; ++j) {
        if (pr.prog(pr.untils()[j], s, b)) g |= 1u << j;
      }
      succ[s][b] = g;
      if (pr.prog(f.root, s, b)) set_bit(root_prog[s], b);
    }
  }

  // Initial state: a table when the root is a positive combination of untils.
  bool special_initial = false;
  Table init_table(words, 0);
  for (std::uint32_t b = 0; b < tsize; ++b) {
    const int v = pr.statically(f.root, b);
    if (v < 0) {
      special_initial = true;
      break;
    }
    if (v) set_bit(init_table, b);
  }

  Table all_ones(words, 0);
  for (std::uint32_t b = 0; b < tsize; ++b) set_bit(all_ones, b);
  const Table all_zero(words, 0);

  std::vector<Table> tables;  // index 0 is the initial state (empty when special)
  std::unordered_map<Table, int, TableHash> index;
  tables.push_back(special_initial ? Table{} : init_table);
  if (!special_initial) index.emplace(init_table, 0);

  std::vector<std::vector<int>> raw;  // raw[s][sigma]
  std::deque<int> queue{0};
  raw.emplace_back(nsig, -1);
  while (!queue.empty()) {
    const int s = queue.front();
    queue.pop_front();
    for (Letter sg = 0; sg < nsig; ++sg) {
      Table nt(words, 0);
      if (s == 0 && special_initial) {
        nt = root_prog[sg];
      } else {
        const Table& cur = tables[s];
        for (std::uint32_t b = 0; b < tsize; ++b) {
          if (table_bit(cur, succ[sg][b])) set_bit(nt, b);
        }
      }
      if (nt == all_zero) continue;
      auto it = index.find(nt);
      int target;
      if (it == index.end()) {
        target = static_cast<int>(tables.size());
        if (target >= opts.max_states) throw FsaError("automaton exceeds the state cap");
        tables.push_back(nt);
        index.emplace(nt, target);
        raw.emplace_back(nsig, -1);
        queue.push_back(target);
      } else {
        target = it->second;
      }
      raw[s][sg] = target;
    }
  }

  // Good states: every infinite continuation reaches the all-true table.
  const int ns = static_cast<int>(tables.size());
  std::vector<bool> good(ns, false);
  for (int s = 0; s < ns; ++s) good[s] = !(s == 0 && special_initial) && tables[s] == all_ones;
  for (bool changed = true; changed;) {
    changed = false;
    for (int s = 0; s < ns; ++s) {
      if (good[s]) continue;
      bool all = true;
      for (Letter sg = 0; sg < nsig && all; ++sg) all = raw[s][sg] >= 0 && good[raw[s][sg]];
      if (all) {
        good[s] = true;
        changed = true;
      }
    }
  }

  // States that cannot reach a good state behave like undefined transitions.
  std::vector<bool> alive = good;
  for (bool changed = true; changed;) {
    changed = false;
    for (int s = 0; s < ns; ++s) {
      if (alive[s]) continue;
      for (Letter sg = 0; sg < nsig; ++sg) {
        if (raw[s][sg] >= 0 && alive[raw[s][sg]]) {
          alive[s] = changed = true;
          break;
        }
      }
    }
  }
  for (auto& row : raw) {
    for (int& t : row) {
      if (t >= 0 && !alive[t]) t = -1;
    }
  }

  auto residual_text = [&](int s) -> std::string {
    if (s == 0 && special_initial) return f.to_string();
    std::vector<Letter> ones;
    for (std::uint32_t b = 0; b < tsize; ++b) {
      if (table_bit(tables[s], b)) ones.push_back(b);
    }
    std::vector<std::string> names;
    for (int j = 0; j < k; ++j) names.push_back(pr.until_text(j));
    return letters_to_dnf(ones, names);
  };

  Fsa out;
  out.ap = ap;
  out.initial = 0;
  if (good[0]) {
    out.state_names = {"s0"};
    out.residuals = {"True"};
    out.accepting = {true};
    out.delta.assign(nsig, 0);
    return out;
  }
  if (!alive[0]) {
    out.state_names = {"s0"};
    out.residuals = {residual_text(0)};
    out.accepting = {false};
    out.delta.assign(nsig, -1);
    return out;
  }

  // Moore refinement: merge states with equal good-prefix languages.
  std::vector<int> cls(ns, -1);
  int ncls = 0;
  for (int s = 0; s < ns; ++s) {
    if (alive[s]) cls[s] = good[s] ? 0 : 1;
  }
  for (;;) {
    std::map<std::vector<int>, int> sig_id;
    std::vector<int> next_cls(ns, -1);
    for (int s = 0; s < ns; ++s) {
      if (!alive[s]) continue;
      std::vector<int> sig;
      sig.reserve(nsig + 1);
      sig.push_back(cls[s]);
      for (Letter sg = 0; sg < nsig; ++sg) sig.push_back(raw[s][sg] < 0 ? -1 : cls[raw[s][sg]]);
      next_cls[s] = sig_id.emplace(std::move(sig), static_cast<int>(sig_id.size())).first->second;
    }
    const int count = static_cast<int>(sig_id.size());
    cls = std::move(next_cls);
    if (count == ncls) break;
    ncls = count;
  }

  // Renumber: initial first, other classes in discovery order, the accepting class last.
  std::vector<int> id_of(ncls, -1);
  std::vector<int> rep;
  int acc_cls = -1;
  for (int s = 0; s < ns; ++s) {
    if (!alive[s]) continue;
    if (good[s]) {
      acc_cls = cls[s];
      continue;
    }
    const int c = cls[s];
    if (id_of[c] < 0) {
      id_of[c] = static_cast<int>(rep.size());
      rep.push_back(s);
      out.state_names.push_back("s" + std::to_string(id_of[c]));
      out.residuals.push_back(residual_text(s));
      out.accepting.push_back(false);
    } else {
      auto text = residual_text(s);
      auto& cur = out.residuals[id_of[c]];
      if (text.size() < cur.size() && !(rep[id_of[c]] == 0 && special_initial)) cur = text;
    }
  }
  if (acc_cls >= 0) {
    id_of[acc_cls] = static_cast<int>(rep.size());
    out.state_names.push_back("sF");
    out.residuals.push_back("True");
    out.accepting.push_back(true);
  }
  const int total = static_cast<int>(out.accepting.size());
  out.delta.assign(static_cast<std::size_t>(total) * nsig, -1);
  for (std::size_t r = 0; r < rep.size(); ++r) {
    for (Letter sg = 0; sg < nsig; ++sg) {
      const int t = raw[rep[r]][sg];
      out.delta[r * nsig + sg] = t < 0 ? -1 : id_of[cls[t]];
    }
  }
  if (acc_cls >= 0) {
    for (Letter sg = 0; sg < nsig; ++sg) out.delta[static_cast<std::size_t>(id_of[acc_cls]) * nsig + sg] = id_of[acc_cls];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Plans

std::vector<Plan> enumerate_plans(const Fsa& fsa, int max_len) {
  if (max_len <= 0) max_len = fsa.num_states();
  std::vector<Plan> plans;
  const std::size_t nsig = fsa.alphabet_size();
  std::vector<std::vector<int>> succ(fsa.num_states());
  for (int s = 0; s < fsa.num_states(); ++s) {
    for (Letter l = 0; l < nsig; ++l) {
      const int t = fsa.next(s, l);
      if (t >= 0 && t != s && std::find(succ[s].begin(), succ[s].end(), t) == succ[s].end()) succ[s].push_back(t);
    }
    std::sort(succ[s].begin(), succ[s].end());
  }
  Plan path{fsa.initial};
  std::vector<bool> on_path(fsa.num_states(), false);
  on_path[fsa.initial] = true;
  std::function<void()> dfs = [&] {
    const int s = path.back();
    if (fsa.accepting[s]) {
      plans.push_back(path);
      return;
    }
    if (static_cast<int>(path.size()) >= max_len) return;
    for (int t : succ[s]) {
      if (on_path[t]) continue;
      on_path[t] = true;
      path.push_back(t);
      dfs();
      path.pop_back();
      on_path[t] = false;
    }
  };
  dfs();
  std::stable_sort(plans.begin(), plans.end(), [](const Plan& a, const Plan& b) {
    if (a.size() != b.size()) return a.size() < b.size();
    return a < b;
  });
  return plans;
}

std::string plan_to_string(const Fsa& fsa, const Plan& plan) {
  std::string s;
  for (std::size_t i = 0; i < plan.size(); ++i) {
    if (i) s += " ";
    s += fsa.state_names[plan[i]];
  }
  return s;
}

// ---------------------------------------------------------------------------
// Regions

Letter Labeling::label(std::span<const double> x, double t) const {
  Letter l = 0;
  for (std::size_t a = 0; a < regions.size(); ++a) {
    if (regions[a].eval(x, t) >= 0.0) l |= 1u << a;
  }
  return l;
}

const ImplicitSet& Labeling::region(const std::string& atom) const {
  auto it = std::find(ap.begin(), ap.end(), atom);
  if (it == ap.end()) throw std::out_of_range("no region for atom '" + atom + "'");
  return regions[it - ap.begin()];
}


PlanRegions plan_regions(const Fsa& fsa, const Plan& plan, const Labeling& lab) {
  if (lab.ap != fsa.ap) throw std::invalid_argument("labeling atoms differ from the automaton alphabet");
  if (lab.regions.size() != lab.ap.size() || lab.regions.empty()) {
    throw std::invalid_argument("labeling needs one region per atom");
  }
  PlanRegions out;
  const std::size_t nsig = fsa.alphabet_size();
  for (std::size_t i = 1; i < plan.size(); ++i) {
    const int prev = plan[i - 1];
    const int cur = plan[i];
    std::vector<Letter> to_next;
    std::vector<Letter> stay;
    std::vector<Letter> either;
    for (Letter l = 0; l < nsig; ++l) {
      const int t = fsa.next(prev, l);
      if (t == cur) to_next.push_back(l);
      if (t == prev) stay.push_back(l);
      if (t == cur || t == prev) either.push_back(l);
    }
    if (to_next.empty()) throw std::invalid_argument("plan step " + std::to_string(i) + " is not an automaton edge");
    out.targets.push_back(letters_region(lab, to_next));
    out.safes.push_back(letters_region(lab, stay));
    out.unions.push_back(letters_region(lab, either));
  }
  return out;
}

CompiledPlan compile_plan(const Fsa& fsa, const Plan& plan, const Labeling& lab,
                          const SystemModel& sys, const Grid& grid, double t0, double t1,
                          CascadeOptions opts) {
  if (plan.empty() || plan.front() != fsa.initial) throw std::invalid_argument("plan must start at the initial state");
  if (!fsa.accepting[plan.back()]) throw std::invalid_argument("plan must end in an accepting state");
  CompiledPlan out;
  out.task.t0 = t0;
  out.task.t1 = t1;
  if (plan.size() == 1) {
    out.trivial = true;
    return out;
  }
  PlanRegions pr = plan_regions(fsa, plan, lab);
  out.task.targets = std::move(pr.targets);
  out.task.safes = std::move(pr.safes);
  out.task.unions = std::move(pr.unions);
  opts.enlarge_safe = true;
  out.cascade = solve_cascade(out.task, sys, grid, opts);
  return out;
}

// ---------------------------------------------------------------------------
// Labels and JSON

namespace {

struct Cube {
  std::uint32_t value;
  std::uint32_t care;
  bool operator==(const Cube& o) const { return value == o.value && care == o.care; }
};

struct CubeHash {
  std::size_t operator()(const Cube& c) const { return (std::size_t{c.care} << 32) ^ c.value; }
};

// Prime implicants by iterated merging, then a greedy cover.
std::vector<Cube> minimal_cover(const std::vector<Letter>& letters, int nv) {
  const std::uint32_t full = nv >= 32 ? 0xffffffffu : ((1u << nv) - 1u);
  std::unordered_set<Cube, CubeHash> level;
  for (Letter l : letters) level.insert({l & full, full});
  std::vector<Cube> primes;
  while (!level.empty()) {
    std::unordered_set<Cube, CubeHash> next;
    std::unordered_set<Cube, CubeHash> merged;
    for (const Cube& c : level) {
      for (int v = 0; v < nv; ++v) {
        const std::uint32_t bit = 1u << v;
        if (!(c.care & bit)) continue;
        const Cube partner{c.value ^ bit, c.care};
        if (level.count(partner)) {
          next.insert({c.value & ~bit, c.care & ~bit});
          merged.insert(c);
          merged.insert(partner);
        }
      }
    }
    for (const Cube& c : level) {
      if (!merged.count(c)) primes.push_back(c);
    }
    level = std::move(next);
  }
  std::vector<Letter> uncovered;
  for (Letter l : letters) uncovered.push_back(l & full);
  std::sort(uncovered.begin(), uncovered.end());
  uncovered.erase(std::unique(uncovered.begin(), uncovered.end()), uncovered.end());
  std::sort(primes.begin(), primes.end(), [](const Cube& a, const Cube& b) {
    const int pa = std::popcount(a.care);
    const int pb = std::popcount(b.care);
    if (pa != pb) return pa < pb;
    return a.value != b.value ? a.value < b.value : a.care < b.care;
  });
  std::vector<Cube> chosen;
  while (!uncovered.empty()) {
    std::size_t best = 0;
    std::size_t best_count = 0;
    for (std::size_t i = 0; i < primes.size(); ++i) {
      std::size_t cnt = 0;
      for (Letter l : uncovered) cnt += ((l & primes[i].care) == primes[i].value);
      if (cnt > best_count) {
        best_count = cnt;
        best = i;
      }
    }
    const Cube c = primes[best];
    chosen.push_back(c);
    uncovered.erase(std::remove_if(uncovered.begin(), uncovered.end(),
                                   [&](Letter l) { return (l & c.care) == c.value; }),
                    uncovered.end());
  }
  return chosen;
}

}  // namespace

std::string letters_to_dnf(const std::vector<Letter>& letters, const std::vector<std::string>& names) {
  if (letters.empty()) return "0";
  const int nv = static_cast<int>(names.size());
  const auto chosen = minimal_cover(letters, nv);
  std::string out;
  for (std::size_t i = 0; i < chosen.size(); ++i) {
    const Cube& c = chosen[i];
    if (c.care == 0) return "1";
    std::string term;
    for (int v = 0; v < nv; ++v) {
      if (!(c.care & (1u << v))) continue;
      if (!term.empty()) term += " & ";
      term += ((c.value >> v) & 1u) ? names[v] : "!" + names[v];
    }
    if (i) out += " | ";
    out += chosen.size() > 1 && std::popcount(c.care) > 1 ? "(" + term + ")" : term;
  }
  return out;
}

ImplicitSet letters_region(const Labeling& lab, const std::vector<Letter>& letters) {
  const int dim = lab.regions.front().dim();
  if (letters.empty()) return constant(dim, kEmptyRegionLevel);
  bool invariant = true;
  double lip = 0.0;
  for (const auto& r : lab.regions) {
    invariant = invariant && r.time_invariant();
    lip = std::max(lip, r.lipschitz());
  }
  const auto cubes = minimal_cover(letters, static_cast<int>(lab.regions.size()));
  if (cubes.size() == 1 && cubes.front().care == 0) return constant(dim, -kEmptyRegionLevel);
  const auto regions = lab.regions;
  return ImplicitSet(
      dim,
      [regions, cubes](std::span<const double> x, double t) {
        std::array<double, kMaxAtoms> h{};
        for (std::size_t a = 0; a < regions.size(); ++a) h[a] = regions[a].eval(x, t);
        double best = -std::numeric_limits<double>::infinity();
        for (const Cube& c : cubes) {
          double v = std::numeric_limits<double>::infinity();
          for (std::size_t a = 0; a < regions.size(); ++a) {
            if ((c.care >> a) & 1u) v = std::min(v, ((c.value >> a) & 1u) ? h[a] : -h[a]);
          }
          best = std::max(best, v);
        }
        return best;
      },
      invariant, lip);
}

std::string fsa_to_json(const Fsa& fsa) {
  nlohmann::json j;
  j["ap"] = fsa.ap;
  j["initial"] = fsa.state_names[fsa.initial];
  nlohmann::json states = nlohmann::json::array();
  for (int s = 0; s < fsa.num_states(); ++s) {
    states.push_back({{"name", fsa.state_names[s]},
                      {"accepting", static_cast<bool>(fsa.accepting[s])},
                      {"residual", s < static_cast<int>(fsa.residuals.size()) ? fsa.residuals[s] : ""}});
  }
  j["states"] = states;
  nlohmann::json edges = nlohmann::json::array();
  const std::size_t nsig = fsa.alphabet_size();
  for (int s = 0; s < fsa.num_states(); ++s) {
    std::map<int, std::vector<Letter>> by_target;
    for (Letter l = 0; l < nsig; ++l) {
      const int t = fsa.next(s, l);
      if (t >= 0) by_target[t].push_back(l);
    }
    for (const auto& [t, letters] : by_target) {
      edges.push_back({{"from", fsa.state_names[s]},
                       {"to", fsa.state_names[t]},
                       {"label", letters_to_dnf(letters, fsa.ap)}});
    }
  }
  j["edges"] = edges;
  return j.dump(2);
}

Fsa fsa_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  Fsa fsa;
  fsa.ap = j.at("ap").get<std::vector<std::string>>();
  if (fsa.ap.size() > static_cast<std::size_t>(kMaxAtoms)) throw FsaError("at most 16 atomic propositions");
  for (const auto& s : j.at("states")) {
    fsa.state_names.push_back(s.at("name").get<std::string>());
    fsa.accepting.push_back(s.value("accepting", false));
    fsa.residuals.push_back(s.value("residual", std::string()));
  }
  fsa.initial = fsa.state_index(j.at("initial").get<std::string>());
  if (fsa.initial < 0) throw FsaError("unknown initial state");
  const std::size_t nsig = fsa.alphabet_size();
  fsa.delta.assign(fsa.accepting.size() * nsig, -1);
  for (const auto& e : j.at("edges")) {
    const int from = fsa.state_index(e.at("from").get<std::string>());
    const int to = fsa.state_index(e.at("to").get<std::string>());
    if (from < 0 || to < 0) throw FsaError("edge references an unknown state");
    const std::string label = e.at("label").get<std::string>();
    if (label == "0") continue;
    const Formula lf = parse(label, fsa.ap);
    if (lf.has_until()) throw FsaError("edge label must be propositional: " + label);
    for (Letter l = 0; l < nsig; ++l) {
      if (!lf.eval_letter(l)) continue;
      int& slot = fsa.delta[static_cast<std::size_t>(from) * nsig + l];
      if (slot >= 0 && slot != to) throw FsaError("edge labels make the automaton non-deterministic");
      slot = to;
    }
  }
  return fsa;
}

}  // namespace hjmra::ltl
