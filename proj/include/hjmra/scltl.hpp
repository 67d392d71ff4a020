#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "hjmra/cascade.hpp"
#include "hjmra/dynamics.hpp"
#include "hjmra/grid.hpp"
#include "hjmra/implicit_set.hpp"

namespace hjmra::ltl {

/// Letter of the alphabet 2^AP as a bit mask over AP indices.
using Letter = std::uint32_t;
using Word = std::vector<Letter>;

inline constexpr int kMaxAtoms = 16;

class SyntaxError : public std::invalid_argument {
 public:
  SyntaxError(const std::string& what, std::size_t position)
      : std::invalid_argument(what + " at position " + std::to_string(position)), position_(position) {}
  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

class FsaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Negation-normal scLTL without next: True | a | !a | or | and | until.
struct Formula {
  enum class Kind { True, Atom, NotAtom, Or, And, Until };
  struct Node {
    Kind kind;
    int atom = -1;
    int lhs = -1;
    int rhs = -1;
  };

  std::vector<Node> nodes;
  int root = -1;
  /// Atom names indexed by Node::atom.
  std::vector<std::string> atoms;

  const Node& node(int i) const { return nodes[i]; }
  std::string to_string() const;
  std::string to_string(int i) const;
  /// Truth of a U-free formula under one letter.
  bool eval_letter(Letter sigma) const;
  bool has_until() const;
};

/// Parses with precedence ! > U > & > | and right-associative U.
/// When `ap` is non-empty, atoms must come from it and take its indices.
Formula parse(const std::string& text, const std::vector<std::string>& ap = {});

/// Partial deterministic automaton over 2^AP. delta is dense, -1 = undefined.
struct Fsa {
  std::vector<std::string> ap;
  std::vector<std::string> state_names;
  /// Residual formula per state, for display.
  std::vector<std::string> residuals;
  std::vector<bool> accepting;
  int initial = 0;
  std::vector<int> delta;

  int num_states() const { return static_cast<int>(accepting.size()); }
  std::size_t alphabet_size() const { return std::size_t{1} << ap.size(); }
  int next(int s, Letter sigma) const { return delta[static_cast<std::size_t>(s) * alphabet_size() + sigma]; }
  /// Runs the word; -1 when a transition is undefined.
  int run(const Word& word) const;
  bool accepts(const Word& word) const;
  bool is_deterministic() const;
  /// delta(s', sigma) = s implies delta(s, sigma) = s.
  bool is_stutter_insensitive() const;
  int state_index(const std::string& name) const;
};

struct FsaOptions {
  int max_states = 4096;
};

/// Good-prefix automaton via formula progression; accepting states merged
/// into one absorbing state.
Fsa to_fsa(const Formula& phi, const std::vector<std::string>& ap, const FsaOptions& opts = {});

using Plan = std::vector<int>;

/// Simple state paths from the initial state to an accepting state with at
/// most max_len states (<= 0 means the state count), shortest first.
std::vector<Plan> enumerate_plans(const Fsa& fsa, int max_len = 0);
std::string plan_to_string(const Fsa& fsa, const Plan& plan);

/// Region per atomic proposition, aligned with Fsa::ap.
struct Labeling {
  std::vector<std::string> ap;
  std::vector<ImplicitSet> regions;

  Letter label(std::span<const double> x, double t) const;
  const ImplicitSet& region(const std::string& atom) const;
};

struct PlanRegions {
  std::vector<ImplicitSet> targets;
  std::vector<ImplicitSet> safes;
  /// Letters that stay or advance, G_i united with T_i.
  std::vector<ImplicitSet> unions;
};

/// Level used for an empty union of letter regions.
inline constexpr double kEmptyRegionLevel = -1.0e3;

/// Level function of the union of letter regions, built from a minimal
/// sum-of-products cover so adjacent letters share no zero seam.
ImplicitSet letters_region(const Labeling& lab, const std::vector<Letter>& letters);

PlanRegions plan_regions(const Fsa& fsa, const Plan& plan, const Labeling& lab);

struct CompiledPlan {
  MraTask task;
  CascadeResult cascade;
  /// Single-state plan: the task is already satisfied.
  bool trivial = false;
};

CompiledPlan compile_plan(const Fsa& fsa, const Plan& plan, const Labeling& lab,
                          const SystemModel& sys, const Grid& grid, double t0, double t1,
                          CascadeOptions opts = {});

/// Minimal sum-of-products text for a set of letters ("1" for all, "0" for none).
std::string letters_to_dnf(const std::vector<Letter>& letters, const std::vector<std::string>& ap);

/// JSON: {"ap", "states":[{"name","accepting","residual"}], "initial", "edges":[{"from","to","label"}]}.
std::string fsa_to_json(const Fsa& fsa);
Fsa fsa_from_json(const std::string& text);

}  // namespace hjmra::ltl
