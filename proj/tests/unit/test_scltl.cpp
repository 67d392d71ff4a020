#include <doctest.h>

#include <algorithm>

#include "hjmra/scenarios.hpp"
#include "hjmra/scltl.hpp"

using namespace hjmra;
using namespace hjmra::ltl;

namespace {

const std::vector<std::string> kAp71{"a", "b", "c", "d", "e"};

Letter bits(std::initializer_list<const char*> names, const std::vector<std::string>& ap) {
  Letter l = 0;
  for (const char* n : names) l |= Letter{1} << (std::find(ap.begin(), ap.end(), n) - ap.begin());
  return l;
}

}  // namespace

TEST_CASE("parser") {
  const auto f = parse("e U a");
  CHECK(f.node(f.root).kind == Formula::Kind::Until);
  CHECK(f.to_string() == "(e U a)");
  const auto r = parse("a U (b U c)");
  const auto ra = parse("a U b U c");
  CHECK(r.to_string() == ra.to_string());
  CHECK(ra.node(ra.node(ra.root).rhs).kind == Formula::Kind::Until);
  const auto phi = parse("(e U a & e U b) | (e U c & e U d)", kAp71);
  CHECK(phi.node(phi.root).kind == Formula::Kind::Or);
  CHECK(phi.atoms == kAp71);
  CHECK(parse("!a & b | c").node(parse("!a & b | c").root).kind == Formula::Kind::Or);
  CHECK(parse("True").node(parse("True").root).kind == Formula::Kind::True);
}

TEST_CASE("parser errors carry positions") {
  try {
    parse("a U (b");
    FAIL("expected a syntax error");
  } catch (const SyntaxError& e) {
    CHECK(e.position() == 6);
  }
  CHECK_THROWS_AS(parse("a &"), SyntaxError);
  CHECK_THROWS_AS(parse("!(a | b)"), SyntaxError);
  CHECK_THROWS_AS(parse("a U z", {"a", "b"}), SyntaxError);
  CHECK_THROWS_AS(parse("a $ b"), SyntaxError);
}

TEST_CASE("until automaton") {
  const std::vector<std::string> ap{"a", "e"};
  const auto fsa = to_fsa(parse("e U a", ap), ap);
  CHECK(fsa.num_states() == 2);
  CHECK(fsa.is_deterministic());
  const Letter a = 1, e = 2;
  CHECK(fsa.next(fsa.initial, e) == fsa.initial);
  CHECK(fsa.accepting[fsa.next(fsa.initial, a)]);
  CHECK(fsa.accepting[fsa.next(fsa.initial, a | e)]);
  CHECK(fsa.next(fsa.initial, 0) == -1);
  CHECK(fsa.accepts({e, e, a}));
  CHECK_FALSE(fsa.accepts({e, 0, a}));
  CHECK_FALSE(fsa.accepts({e, e}));
}

TEST_CASE("true is accepted immediately") {
  const std::vector<std::string> ap{"a"};
  const auto fsa = to_fsa(parse("True", ap), ap);
  CHECK(fsa.num_states() == 1);
  CHECK(fsa.accepting[0]);
  CHECK(fsa.accepts({}));
  const auto plans = enumerate_plans(fsa);
  REQUIRE(plans.size() == 1);
  CHECK(plans[0].size() == 1);
}

TEST_CASE("two-target formula automaton") {
  const auto fsa = to_fsa(parse("(e U a & e U b) | (e U c & e U d)", kAp71), kAp71);
  CHECK(fsa.is_deterministic());
  CHECK(fsa.is_stutter_insensitive());
  const int s0 = fsa.initial;
  const int s2 = fsa.next(s0, bits({"a", "e"}, kAp71));
  REQUIRE(s2 >= 0);
  CHECK(s2 != s0);
  CHECK(fsa.next(s2, bits({"e"}, kAp71)) == s2);
  CHECK(fsa.accepting[fsa.next(s2, bits({"b"}, kAp71))]);
  CHECK(fsa.next(s2, bits({"c"}, kAp71)) == -1);

  const auto plans = enumerate_plans(fsa);
  std::vector<std::string> names;
  for (const auto& p : plans) names.push_back(plan_to_string(fsa, p));
  CHECK(std::find(names.begin(), names.end(), "s0 s1 sF") != names.end());
  CHECK(std::find(names.begin(), names.end(), "s0 s2 sF") != names.end());
  for (std::size_t k = 1; k < plans.size(); ++k) CHECK(plans[k - 1].size() <= plans[k].size());

  const auto back = fsa_from_json(fsa_to_json(fsa));
  CHECK(back.delta == fsa.delta);
  CHECK(back.accepting == fsa.accepting);
  CHECK(back.state_names == fsa.state_names);
}

TEST_CASE("unreachable acceptance yields no plans") {
  const std::vector<std::string> ap{"a"};
  const auto fsa = to_fsa(parse("a & !a", ap), ap);
  CHECK(enumerate_plans(fsa).empty());
}

TEST_CASE("letter covers") {
  const std::vector<std::string> ap{"a", "b"};
  CHECK(letters_to_dnf({0, 1, 2, 3}, ap) == "1");
  CHECK(letters_to_dnf({}, ap) == "0");
  CHECK(letters_to_dnf({1, 3}, ap) == "a");
  CHECK(letters_to_dnf({2}, ap) == "!a & b");
}

TEST_CASE("plan regions for the single-integrator task") {
  const auto sc = scenario_single_integrator(41);
  const auto [fsa, plan] = scenario_plan(sc);
  REQUIRE(plan.size() == 3);
  CHECK(plan[1] == fsa.next(fsa.initial, bits({"a", "e"}, kAp71)));
  CHECK(fsa.accepting[plan[2]]);
  const auto& lab = sc.ltl->labeling;
  const auto pr = plan_regions(fsa, plan, lab);
  REQUIRE(pr.targets.size() == 2);
  const auto& R1 = lab.region("a");
  const auto& R2 = lab.region("b");
  const auto& R3 = lab.region("c");
  const auto& R4 = lab.region("d");
  const auto& R5 = lab.region("e");
  const auto G1 = set_difference(R5, set_union({R1, R2, R3, R4}));
  const auto G2 = set_difference(R5, set_union({R2, R3, R4}));
  for (double x = -9.75; x < 10.0; x += 0.5) {
    for (double y = -9.75; y < 10.0; y += 0.5) {
      const std::vector<double> p{x, y};
      CHECK((pr.targets[0].eval(p, 0.0) >= 0.0) == (R1.eval(p, 0.0) >= 0.0 && R5.eval(p, 0.0) >= 0.0 &&
                                                     R2.eval(p, 0.0) < 0.0));
      CHECK((pr.targets[1].eval(p, 0.0) >= 0.0) == (R2.eval(p, 0.0) >= 0.0));
      CHECK((pr.safes[0].eval(p, 0.0) >= 0.0) == (G1.eval(p, 0.0) >= 0.0));
      CHECK((pr.safes[1].eval(p, 0.0) >= 0.0) == (G2.eval(p, 0.0) >= 0.0));
      CHECK_FALSE((pr.targets[0].eval(p, 0.0) > 0.0 && pr.safes[0].eval(p, 0.0) > 0.0));
    }
  }
}

TEST_CASE("labeling") {
  Labeling lab;
  lab.ap = {"a", "b"};
  lab.regions = {ball(2, {0.0, 0.0}, 1.0), box(2, {0.5, -1.0}, {3.0, 1.0})};
  CHECK(lab.label(std::vector<double>{0.0, 0.0}, 0.0) == 1);
  CHECK(lab.label(std::vector<double>{0.75, 0.0}, 0.0) == 3);
  CHECK(lab.label(std::vector<double>{2.0, 0.0}, 0.0) == 2);
  CHECK(lab.label(std::vector<double>{-5.0, 0.0}, 0.0) == 0);
  CHECK(letters_region(lab, {}).eval(std::vector<double>{0.0, 0.0}, 0.0) == kEmptyRegionLevel);
}
