#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace acceptance {

// Self-contained scLTL syntax tree and lasso semantics, kept apart from the
// library parser and automaton construction.
struct Node {
  enum class Op { True, Atom, NotAtom, Or, And, Until } op = Op::True;
  int atom = -1;
  std::unique_ptr<Node> l;
  std::unique_ptr<Node> r;
};

std::unique_ptr<Node> parse_formula(const std::string& text, const std::vector<std::string>& ap);

// Truth at position 0 of the infinite word prefix . loop^omega.
bool holds_on_lasso(const Node& f, const std::vector<std::uint32_t>& prefix, const std::vector<std::uint32_t>& loop);

// w is a good prefix when every continuation x . y^omega with |x| <= max_stem
// and 1 <= |y| <= max_loop satisfies f.
bool good_prefix(const Node& f, const std::vector<std::uint32_t>& w, int num_atoms, int max_stem, int max_loop);

}  // namespace acceptance
