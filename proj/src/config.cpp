#include "hjmra/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <set>

namespace hjmra {

using nlohmann::json;

namespace {

std::string child(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

std::string item(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

void require_object(const json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path, "expected an object");
}

void allow_keys(const json& j, const std::string& path, std::initializer_list<const char*> keys) {
  require_object(j, path);
  for (const auto& [k, v] : j.items()) {
    if (std::none_of(keys.begin(), keys.end(), [&](const char* a) { return k == a; })) {
      throw ConfigError(child(path, k), "unknown key");
    }
  }
}

const json& need(const json& j, const std::string& path, const char* key) {
  if (!j.contains(key)) throw ConfigError(child(path, key), "missing required field");
  return j.at(key);
}

double number(const json& j, const std::string& path) {
  if (!j.is_number()) throw ConfigError(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ConfigError(path, "must be finite");
  return v;
}

double number_or(const json& j, const std::string& path, const char* key, double fallback) {
  return j.contains(key) ? number(j.at(key), child(path, key)) : fallback;
}

int integer(const json& j, const std::string& path) {
  if (!j.is_number_integer()) throw ConfigError(path, "expected an integer");
  return j.get<int>();
}

int integer_or(const json& j, const std::string& path, const char* key, int fallback) {
  return j.contains(key) ? integer(j.at(key), child(path, key)) : fallback;
}

bool boolean_or(const json& j, const std::string& path, const char* key, bool fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_boolean()) throw ConfigError(child(path, key), "expected true or false");
  return j.at(key).get<bool>();
}

std::string text(const json& j, const std::string& path) {
  if (!j.is_string()) throw ConfigError(path, "expected a string");
  return j.get<std::string>();
}

std::vector<double> vector_of(const json& j, const std::string& path) {
  if (!j.is_array()) throw ConfigError(path, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(number(j[i], item(path, i)));
  return out;
}

std::vector<int> coords_of(const json& j, const std::string& path, int dim) {
  if (!j.contains("coords")) return {};
  const std::string p = child(path, "coords");
  if (!j.at("coords").is_array()) throw ConfigError(p, "expected an array of integers");
  std::vector<int> out;
  for (std::size_t i = 0; i < j.at("coords").size(); ++i) {
    const int c = integer(j.at("coords")[i], item(p, i));
    if (c < 0 || c >= dim) throw ConfigError(item(p, i), "coordinate out of range for dimension " + std::to_string(dim));
    out.push_back(c);
  }
  return out;
}

std::vector<ImplicitSet> regions_of(const json& j, const std::string& path, int dim) {
  if (!j.is_array()) throw ConfigError(path, "expected an array of regions");
  std::vector<ImplicitSet> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(region_from_json(j[i], dim, item(path, i)));
  return out;
}

// Geometry constructors throw GeometryError; attach the field path.
template <class F>
ImplicitSet geometry(const std::string& path, F&& make) {
  try {
    return make();
  } catch (const GeometryError& e) {
    throw ConfigError(path, e.what());
  }
}

PiecewiseLinear signal_of(const json& j, const std::string& path) {
  if (j.is_number()) return PiecewiseLinear(number(j, path));
  allow_keys(j, path, {"knots", "period"});
  const json& knots = need(j, path, "knots");
  const std::string kp = child(path, "knots");
  if (!knots.is_array() || knots.empty()) throw ConfigError(kp, "expected a non-empty array of [t, value] pairs");
  std::vector<PiecewiseLinear::Knot> out;
  for (std::size_t i = 0; i < knots.size(); ++i) {
    const auto pair = vector_of(knots[i], item(kp, i));
    if (pair.size() != 2) throw ConfigError(item(kp, i), "expected [t, value]");
    out.push_back({pair[0], pair[1]});
  }
  const double period = number_or(j, path, "period", 0.0);
  try {
    return PiecewiseLinear(std::move(out), period);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(path, e.what());
  }
}

SystemModel system_of(const json& j, const std::string& path) {
  allow_keys(j, path, {"name", "params"});
  const std::string name = text(need(j, path, "name"), child(path, "name"));
  const json params = j.contains("params") ? j.at("params") : json::object();
  const std::string pp = child(path, "params");
  if (name == "single_integrator") {
    allow_keys(params, pp, {"dim", "speed"});
    const int dim = integer_or(params, pp, "dim", 2);
    const double speed = number_or(params, pp, "speed", 1.0);
    if (dim < 1) throw ConfigError(child(pp, "dim"), "must be at least 1");
    if (!(speed > 0.0)) throw ConfigError(child(pp, "speed"), "must be positive");
    return single_integrator(dim, speed);
  }
  if (name == "double_integrator") {
    allow_keys(params, pp, {});
    return double_integrator();
  }
  if (name == "spacecraft") {
    allow_keys(params, pp, {"mu", "r", "m_c", "u_max", "d_max"});
    SpacecraftParams sp;
    sp.mu = number_or(params, pp, "mu", sp.mu);
    sp.r = number_or(params, pp, "r", sp.r);
    sp.m_c = number_or(params, pp, "m_c", sp.m_c);
    sp.u_max = number_or(params, pp, "u_max", sp.u_max);
    sp.d_max = number_or(params, pp, "d_max", sp.d_max);
    for (const char* k : {"mu", "r", "m_c", "u_max"}) {
      if (params.contains(k) && !(params.at(k).get<double>() > 0.0)) throw ConfigError(child(pp, k), "must be positive");
    }
    if (sp.d_max < 0.0) throw ConfigError(child(pp, "d_max"), "must be non-negative");
    return spacecraft_rendezvous(sp);
  }
  if (name == "unicycle") {
    allow_keys(params, pp, {"v_max", "omega_max"});
    const double v = number_or(params, pp, "v_max", 3.0);
    const double w = number_or(params, pp, "omega_max", 0.3);
    if (!(v > 0.0)) throw ConfigError(child(pp, "v_max"), "must be positive");
    if (!(w > 0.0)) throw ConfigError(child(pp, "omega_max"), "must be positive");
    return unicycle(v, w);
  }
  throw ConfigError(child(path, "name"),
                    "unknown system '" + name + "' (expected single_integrator, double_integrator, spacecraft, unicycle)");
}

Grid grid_of(const json& j, const std::string& path, int dim) {
  allow_keys(j, path, {"axes"});
  const json& axes = need(j, path, "axes");
  const std::string ap = child(path, "axes");
  if (!axes.is_array()) throw ConfigError(ap, "expected an array of axes");
  if (static_cast<int>(axes.size()) != dim) {
    throw ConfigError(ap, "has " + std::to_string(axes.size()) + " axes, system state dimension is " + std::to_string(dim));
  }
  std::vector<GridAxis> out;
  for (std::size_t i = 0; i < axes.size(); ++i) {
    const std::string p = item(ap, i);
    allow_keys(axes[i], p, {"lo", "hi", "count", "periodic"});
    GridAxis a;
    a.lo = number(need(axes[i], p, "lo"), child(p, "lo"));
    a.hi = number(need(axes[i], p, "hi"), child(p, "hi"));
    a.count = integer(need(axes[i], p, "count"), child(p, "count"));
    a.periodic = boolean_or(axes[i], p, "periodic", false);
    if (!(a.lo < a.hi)) throw ConfigError(p, "lo must be below hi");
    if (a.count < 3) throw ConfigError(child(p, "count"), "must be at least 3");
    out.push_back(a);
  }
  return Grid(std::move(out));
}

ltl::Letter letter_of(const json& j, const std::string& path, const std::vector<std::string>& ap) {
  if (!j.is_array()) throw ConfigError(path, "expected an array of proposition names");
  ltl::Letter l = 0;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string name = text(j[i], item(path, i));
    const auto it = std::find(ap.begin(), ap.end(), name);
    if (it == ap.end()) throw ConfigError(item(path, i), "unknown proposition '" + name + "'");
    l |= ltl::Letter{1} << (it - ap.begin());
  }
  return l;
}

void task_of(const json& j, const std::string& path, Scenario& sc) {
  allow_keys(j, path, {"t0", "t1", "targets", "safes", "ltl"});
  const int dim = sc.sys.n;
  sc.task.t0 = number_or(j, path, "t0", 0.0);
  sc.task.t1 = number(need(j, path, "t1"), child(path, "t1"));
  if (!(sc.task.t0 < sc.task.t1)) throw ConfigError(child(path, "t1"), "t0 must be below t1");

  if (j.contains("ltl")) {
    if (j.contains("targets") || j.contains("safes")) {
      throw ConfigError(path, "give either ltl or targets/safes, not both");
    }
    const std::string lp = child(path, "ltl");
    const json& l = j.at("ltl");
    allow_keys(l, lp, {"formula", "propositions", "plan"});
    LtlSetup setup;
    setup.formula = text(need(l, lp, "formula"), child(lp, "formula"));
    const json& props = need(l, lp, "propositions");
    const std::string pp = child(lp, "propositions");
    if (!props.is_array() || props.empty()) throw ConfigError(pp, "expected a non-empty array");
    std::set<std::string> seen;
    for (std::size_t i = 0; i < props.size(); ++i) {
      const std::string p = item(pp, i);
      allow_keys(props[i], p, {"name", "region"});
      const std::string name = text(need(props[i], p, "name"), child(p, "name"));
      if (!seen.insert(name).second) throw ConfigError(child(p, "name"), "duplicate proposition '" + name + "'");
      setup.labeling.ap.push_back(name);
      setup.labeling.regions.push_back(region_from_json(need(props[i], p, "region"), dim, child(p, "region")));
    }
    try {
      ltl::parse(setup.formula, setup.labeling.ap);
    } catch (const ltl::SyntaxError& e) {
      throw ConfigError(child(lp, "formula"), e.what());
    }
    if (l.contains("plan")) {
      const std::string plp = child(lp, "plan");
      const json& plan = l.at("plan");
      allow_keys(plan, plp, {"letters", "index"});
      if (plan.contains("letters") == plan.contains("index")) throw ConfigError(plp, "give exactly one of letters or index");
      if (plan.contains("index")) {
        setup.plan_index = integer(plan.at("index"), child(plp, "index"));
        if (setup.plan_index < 0) throw ConfigError(child(plp, "index"), "must be non-negative");
      } else {
        const json& letters = plan.at("letters");
        const std::string lsp = child(plp, "letters");
        if (!letters.is_array() || letters.empty()) throw ConfigError(lsp, "expected a non-empty array of letters");
        for (std::size_t i = 0; i < letters.size(); ++i) {
          setup.plan_letters.push_back(letter_of(letters[i], item(lsp, i), setup.labeling.ap));
        }
      }
    }
    sc.ltl = std::move(setup);
    try {
      apply_plan(sc);
    } catch (const std::exception& e) {
      throw ConfigError(child(lp, "plan"), e.what());
    }
    return;
  }

  sc.task.targets = regions_of(need(j, path, "targets"), child(path, "targets"), dim);
  if (sc.task.targets.empty()) throw ConfigError(child(path, "targets"), "at least one target is required");
  if (j.contains("safes")) {
    sc.task.safes = regions_of(j.at("safes"), child(path, "safes"), dim);
  } else {
    sc.task.safes.assign(sc.task.targets.size(), constant(dim, 1e3));
  }
  if (sc.task.safes.size() != sc.task.targets.size()) {
    throw ConfigError(child(path, "safes"), "needs one entry per target (" + std::to_string(sc.task.targets.size()) + ")");
  }
}

void solver_of(const json& j, const std::string& path, CascadeOptions& opts) {
  allow_keys(j, path, {"cfl", "output_dt", "order", "enlarge_safe", "threads"});
  opts.cfl = number_or(j, path, "cfl", opts.cfl);
  opts.output_dt = number_or(j, path, "output_dt", opts.output_dt);
  opts.order = integer_or(j, path, "order", opts.order);
  opts.enlarge_safe = boolean_or(j, path, "enlarge_safe", opts.enlarge_safe);
  opts.threads = integer_or(j, path, "threads", opts.threads);
  if (!(opts.cfl > 0.0 && opts.cfl <= 1.0)) throw ConfigError(child(path, "cfl"), "must lie in (0, 1]");
  if (!(opts.output_dt > 0.0)) throw ConfigError(child(path, "output_dt"), "must be positive");
  if (opts.order != 1 && opts.order != 2) throw ConfigError(child(path, "order"), "must be 1 or 2");
}

void controller_of(const json& j, const std::string& path, Scenario& sc) {
  allow_keys(j, path, {"mode", "beta", "gain", "Q", "reference", "time_shift"});
  ControlLawConfig& c = sc.control;
  if (j.contains("mode")) {
    const std::string mode = text(j.at("mode"), child(path, "mode"));
    if (mode == "strict") {
      c.mode = ControlLawConfig::Mode::strict;
    } else if (mode == "relaxed") {
      c.mode = ControlLawConfig::Mode::relaxed;
    } else {
      throw ConfigError(child(path, "mode"), "expected strict or relaxed");
    }
  }
  c.beta = number_or(j, path, "beta", c.beta);
  c.gain = number_or(j, path, "gain", c.gain);
  if (c.beta < 0.0) throw ConfigError(child(path, "beta"), "must be non-negative");
  if (!(c.gain > 0.0)) throw ConfigError(child(path, "gain"), "must be positive");
  const int m = sc.sys.m;
  if (j.contains("Q")) {
    const std::string qp = child(path, "Q");
    const json& q = j.at("Q");
    if (!q.is_array() || static_cast<int>(q.size()) != m) {
      throw ConfigError(qp, "expected " + std::to_string(m) + " diagonal entries or " + std::to_string(m) + " rows");
    }
    c.Q = Eigen::MatrixXd::Zero(m, m);
    for (int r = 0; r < m; ++r) {
      if (q[r].is_array()) {
        const auto row = vector_of(q[r], item(qp, r));
        if (static_cast<int>(row.size()) != m) throw ConfigError(item(qp, r), "row length must be " + std::to_string(m));
        for (int k = 0; k < m; ++k) c.Q(r, k) = row[k];
      } else {
        c.Q(r, r) = number(q[r], item(qp, r));
      }
    }
    if ((c.Q - c.Q.transpose()).norm() > 1e-12) throw ConfigError(qp, "must be symmetric");
    if (Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(c.Q).eigenvalues().minCoeff() <= 0.0) {
      throw ConfigError(qp, "must be positive definite");
    }
  }
  if (j.contains("reference")) {
    const std::string rp = child(path, "reference");
    const json& r = j.at("reference");
    allow_keys(r, rp, {"kind", "targets", "obstacles", "k_v", "k_theta"});
    const std::string kind = text(need(r, rp, "kind"), child(rp, "kind"));
    if (kind == "zero") {
      c.reference = nullptr;
    } else if (kind == "unicycle") {
      if (sc.sys.n != 3 || m != 2) throw ConfigError(child(rp, "kind"), "unicycle reference needs a 3-state, 2-input system");
      const json& t = need(r, rp, "targets");
      const std::string tp = child(rp, "targets");
      if (!t.is_array() || t.empty()) throw ConfigError(tp, "expected an array of [x, y] centers");
      std::vector<std::vector<double>> centers;
      for (std::size_t i = 0; i < t.size(); ++i) {
        centers.push_back(vector_of(t[i], item(tp, i)));
        if (centers.back().size() != 2) throw ConfigError(item(tp, i), "expected [x, y]");
      }
      const ImplicitSet obstacles =
          r.contains("obstacles") ? region_from_json(r.at("obstacles"), sc.sys.n, child(rp, "obstacles")) : constant(sc.sys.n, -1e3);
      c.reference = unicycle_reference(std::move(centers), obstacles, number_or(r, rp, "k_v", 0.5),
                                       number_or(r, rp, "k_theta", 1.0));
    } else {
      throw ConfigError(child(rp, "kind"), "expected zero or unicycle");
    }
  }
  sc.time_shift = number_or(j, path, "time_shift", 0.0);
  if (sc.time_shift < 0.0) throw ConfigError(child(path, "time_shift"), "must be non-negative");
}

void sim_of(const json& j, const std::string& path, Scenario& sc) {
  allow_keys(j, path, {"dt_sim", "dt_ctrl", "integrator", "disturbance"});
  SimConfig& s = sc.sim;
  s.dt_sim = number_or(j, path, "dt_sim", s.dt_sim);
  s.dt_ctrl = number_or(j, path, "dt_ctrl", s.dt_ctrl);
  if (j.contains("integrator")) {
    const std::string v = text(j.at("integrator"), child(path, "integrator"));
    if (v == "rk4") {
      s.integrator = SimConfig::Integrator::rk4;
    } else if (v == "euler") {
      s.integrator = SimConfig::Integrator::euler;
    } else {
      throw ConfigError(child(path, "integrator"), "expected rk4 or euler");
    }
  }
  try {
    s.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(path, e.what());
  }
  if (j.contains("disturbance")) {
    const std::string dp = child(path, "disturbance");
    const json& d = j.at("disturbance");
    allow_keys(d, dp, {"kind", "seed", "script"});
    const std::string kind = text(need(d, dp, "kind"), child(dp, "kind"));
    const int seed = integer_or(d, dp, "seed", 0);
    if (kind == "zero") {
      s.disturbance = DisturbancePolicy::zero();
    } else if (kind == "worst_case") {
      s.disturbance = DisturbancePolicy::worst_case();
    } else if (kind == "uniform_random") {
      s.disturbance = DisturbancePolicy::uniform_random(static_cast<std::uint64_t>(seed));
    } else if (kind == "scripted") {
      const json& rows = need(d, dp, "script");
      const std::string sp = child(dp, "script");
      if (!rows.is_array() || rows.empty()) throw ConfigError(sp, "expected a non-empty array of {t, d} rows");
      std::vector<DisturbancePolicy::Row> out;
      for (std::size_t i = 0; i < rows.size(); ++i) {
        const std::string p = item(sp, i);
        allow_keys(rows[i], p, {"t", "d"});
        DisturbancePolicy::Row row;
        row.t = number(need(rows[i], p, "t"), child(p, "t"));
        row.d = vector_of(need(rows[i], p, "d"), child(p, "d"));
        if (static_cast<int>(row.d.size()) != sc.sys.l) {
          throw ConfigError(child(p, "d"), "expected " + std::to_string(sc.sys.l) + " components");
        }
        if (!out.empty() && !(row.t > out.back().t)) throw ConfigError(child(p, "t"), "rows must be in increasing time");
        out.push_back(std::move(row));
      }
      s.disturbance = DisturbancePolicy::scripted(std::move(out));
    } else {
      throw ConfigError(child(dp, "kind"), "expected zero, worst_case, uniform_random or scripted");
    }
  }
}

}  // namespace

ImplicitSet region_from_json(const json& j, int dim, const std::string& path) {
  if (!j.is_object() || j.size() != 1) throw ConfigError(path, "expected an object with exactly one region kind");
  const std::string kind = j.begin().key();
  const json& body = j.begin().value();
  const std::string p = child(path, kind);

  if (kind == "ball") {
    allow_keys(body, p, {"center", "radius", "coords"});
    auto center = vector_of(need(body, p, "center"), child(p, "center"));
    const double radius = number(need(body, p, "radius"), child(p, "radius"));
    if (!(radius > 0.0)) throw ConfigError(child(p, "radius"), "must be positive");
    auto coords = coords_of(body, p, dim);
    return geometry(p, [&] { return ball(dim, std::move(center), radius, std::move(coords)); });
  }
  if (kind == "box" || kind == "slab_box") {
    allow_keys(body, p, {"lo", "hi", "coords"});
    auto lo = vector_of(need(body, p, "lo"), child(p, "lo"));
    auto hi = vector_of(need(body, p, "hi"), child(p, "hi"));
    auto coords = coords_of(body, p, dim);
    return geometry(p, [&] {
      return kind == "box" ? box(dim, std::move(lo), std::move(hi), std::move(coords))
                           : slab_box(dim, std::move(lo), std::move(hi), std::move(coords));
    });
  }
  if (kind == "halfspace") {
    allow_keys(body, p, {"normal", "offset", "coords"});
    auto normal = vector_of(need(body, p, "normal"), child(p, "normal"));
    const double offset = number(need(body, p, "offset"), child(p, "offset"));
    auto coords = coords_of(body, p, dim);
    return geometry(p, [&] { return halfspace(dim, std::move(normal), offset, std::move(coords)); });
  }
  if (kind == "constant") return constant(dim, number(body, p));
  if (kind == "union" || kind == "intersect") {
    auto parts = regions_of(body, p, dim);
    if (parts.empty()) throw ConfigError(p, "needs at least one operand");
    return kind == "union" ? set_union(parts) : set_intersect(parts);
  }
  if (kind == "complement") return set_complement(region_from_json(body, dim, p));
  if (kind == "difference") {
    auto parts = regions_of(body, p, dim);
    if (parts.size() != 2) throw ConfigError(p, "expected [a, b] for a minus b");
    return set_difference(parts[0], parts[1]);
  }
  if (kind == "translate") {
    allow_keys(body, p, {"region", "coords", "offsets"});
    const ImplicitSet base = region_from_json(need(body, p, "region"), dim, child(p, "region"));
    MotionProfile motion;
    motion.coords = coords_of(body, p, dim);
    const json& offs = need(body, p, "offsets");
    const std::string op = child(p, "offsets");
    if (!offs.is_array() || offs.size() != motion.coords.size()) {
      throw ConfigError(op, "expected one signal per translated coordinate");
    }
    for (std::size_t i = 0; i < offs.size(); ++i) motion.components.push_back(signal_of(offs[i], item(op, i)));
    return geometry(p, [&] { return translate(base, std::move(motion)); });
  }
  throw ConfigError(path, "unknown region kind '" + kind +
                              "' (expected ball, box, slab_box, halfspace, constant, union, intersect, complement, "
                              "difference, translate)");
}

Scenario scenario_from_json(const json& j) {
  allow_keys(j, "", {"schema_version", "name", "system", "grid", "task", "solver", "controller", "sim", "x0"});
  const int version = integer(need(j, "", "schema_version"), "schema_version");
  if (version != kConfigSchemaVersion) {
    throw ConfigError("schema_version", "unsupported version " + std::to_string(version) + " (expected " +
                                            std::to_string(kConfigSchemaVersion) + ")");
  }
  Scenario sc;
  sc.name = j.contains("name") ? text(j.at("name"), "name") : "config";
  sc.sys = system_of(need(j, "", "system"), "system");
  sc.grid = grid_of(need(j, "", "grid"), "grid", sc.sys.n);
  if (j.contains("solver")) solver_of(j.at("solver"), "solver", sc.cascade);
  task_of(need(j, "", "task"), "task", sc);
  if (j.contains("controller")) controller_of(j.at("controller"), "controller", sc);
  if (j.contains("sim")) sim_of(j.at("sim"), "sim", sc);
  if (j.contains("x0")) {
    sc.x0 = vector_of(j.at("x0"), "x0");
    if (static_cast<int>(sc.x0.size()) != sc.sys.n) {
      throw ConfigError("x0", "expected " + std::to_string(sc.sys.n) + " components");
    }
  }
  if (sc.time_shift >= sc.task.t1 - sc.task.t0) throw ConfigError("controller.time_shift", "must be below the horizon");
  return sc;
}

Scenario load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("", path.string() + ": " + e.what());
  }
  return scenario_from_json(j);
}

}  // namespace hjmra
