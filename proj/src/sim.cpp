#include "hjmra/sim.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <map>
#include <random>
#include <stdexcept>

namespace hjmra {

void SimConfig::validate() const {
  if (!(dt_sim > 0.0) || !(dt_ctrl > 0.0)) throw std::invalid_argument("sim: time steps must be positive");
  const double r = dt_ctrl / dt_sim;
  if (std::abs(r - std::round(r)) > 1e-9 * r || std::round(r) < 1.0) {
    throw std::invalid_argument("sim: dt_ctrl must be an integer multiple of dt_sim");
  }
}

int SimConfig::substeps() const { return static_cast<int>(std::lround(dt_ctrl / dt_sim)); }

namespace {

class DisturbanceSource {
 public:
  DisturbanceSource(const SystemModel& sys, const DisturbancePolicy& pol, const GradientFn& grad)
      : sys_(sys), pol_(pol), grad_(grad), rng_(pol.seed) {
    if (pol_.kind == DisturbancePolicy::Kind::worst_case && !grad_) {
      throw std::invalid_argument("worst-case disturbance needs a value gradient");
    }
    for (const auto& row : pol_.script) {
      if (static_cast<int>(row.d.size()) != sys_.l) throw std::invalid_argument("scripted disturbance has wrong size");
    }
  }

  std::vector<double> operator()(std::span<const double> x, double t) {
    std::vector<double> d(sys_.l, 0.0);
    if (sys_.l == 0) return d;
    switch (pol_.kind) {
      case DisturbancePolicy::Kind::zero:
        break;
      case DisturbancePolicy::Kind::worst_case:
        d = argmin_disturbance(sys_, x, t, grad_(x, t));
        break;
      case DisturbancePolicy::Kind::uniform_random:
        draw(t, d);
        break;
      case DisturbancePolicy::Kind::scripted:
        for (const auto& row : pol_.script) {
          if (row.t <= t + 1e-12) d = row.d;
        }
        break;
    }
    return d;
  }

 private:
  void draw(double t, std::vector<double>& d) {
    const BoundSet& D = sys_.D;
    const double s = D.scale(t);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    if (D.kind() == BoundSet::Kind::box) {
      for (int j = 0; j < sys_.l; ++j) d[j] = s * (D.lo()[j] + (D.hi()[j] - D.lo()[j]) * unit(rng_));
      return;
    }
    std::normal_distribution<double> gauss;
    double norm = 0.0;
    for (auto& v : d) {
      v = gauss(rng_);
      norm += v * v;
    }
    norm = std::sqrt(norm);
    const double rad = s * D.radius() * std::pow(unit(rng_), 1.0 / sys_.l);
    for (auto& v : d) v = norm > 0.0 ? v / norm * rad : 0.0;
  }

  const SystemModel& sys_;
  const DisturbancePolicy& pol_;
  const GradientFn& grad_;
  std::mt19937_64 rng_;
};

void axpy(std::vector<double>& out, std::span<const double> x, double a, std::span<const double> k) {
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] + a * k[i];
}

}  // namespace

Trajectory simulate(const SystemModel& sys, const Controller& control, const GradientFn& gradient,
                    std::span<const double> x0, double t0, double t1, const SimConfig& cfg,
                    const Grid* box) {
  cfg.validate();
  if (static_cast<int>(x0.size()) != sys.n) throw std::invalid_argument("simulate: initial state has wrong size");
  for (double v : x0) {
    if (!std::isfinite(v)) throw std::invalid_argument("simulate: initial state is not finite");
  }
  if (!(t1 > t0)) throw std::invalid_argument("simulate: need t1 > t0");

  Trajectory tr;
  DisturbanceSource dist(sys, cfg.disturbance, gradient);
  const int sub = cfg.substeps();
  const auto total = static_cast<std::size_t>(std::floor((t1 - t0) / cfg.dt_sim + 1e-9));

  std::vector<double> x(x0.begin(), x0.end());
  std::vector<double> k1(sys.n), k2(sys.n), k3(sys.n), k4(sys.n), tmp(sys.n);
  PolicyOutput held;

  auto record = [&](double t, const std::vector<double>& d) {
    tr.times.push_back(t);
    tr.states.push_back(x);
    tr.controls.push_back(held.u);
    tr.disturbances.push_back(d);
    tr.stages.push_back(held.target_index);
    tr.values.push_back(held.value);
    tr.target_values.push_back(held.target_value);
    tr.slacks.push_back(held.slack);
  };

  for (std::size_t step = 0;; ++step) {
    const double t = t0 + static_cast<double>(step) * cfg.dt_sim;
    if (step % sub == 0) {
      try {
        held = control(x, t);
      } catch (const std::exception& e) {
        tr.violation = Violation{t, e.what()};
        record(t, std::vector<double>(sys.l, 0.0));
        break;
      }
      if (static_cast<int>(held.u.size()) != sys.m) throw std::runtime_error("controller returned wrong control size");
      if (held.margin_exception) {
        tr.margin_exceptions.push_back({t, "control QP infeasible, slack " + std::to_string(held.slack)});
      }
      tr.control_samples.push_back(tr.times.size());
    }
    const std::vector<double> d = dist(x, t);
    record(t, d);
    if (held.done) {
      tr.completed = true;
      if (cfg.stop_when_done) break;
    }
    if (step >= total) break;

    const double h = cfg.dt_sim;
    sys.derivative(x, held.u, d, t, k1);
    double speed = 0.0;
    for (double v : k1) speed += v * v;
    tr.max_speed = std::max(tr.max_speed, std::sqrt(speed));
    if (cfg.integrator == SimConfig::Integrator::euler) {
      for (int i = 0; i < sys.n; ++i) x[i] += h * k1[i];
    } else {
      axpy(tmp, x, 0.5 * h, k1);
      sys.derivative(tmp, held.u, d, t + 0.5 * h, k2);
      axpy(tmp, x, 0.5 * h, k2);
      sys.derivative(tmp, held.u, d, t + 0.5 * h, k3);
      axpy(tmp, x, h, k3);
      sys.derivative(tmp, held.u, d, t + h, k4);
      for (int i = 0; i < sys.n; ++i) x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    if (box && !box->contains(x, 1e-9)) {
      const double tn = t0 + static_cast<double>(step + 1) * cfg.dt_sim;
      record(tn, d);
      tr.violation = Violation{tn, "state left the grid box"};
      break;
    }
  }
  return tr;
}

Trajectory simulate(SynthesisPolicy& policy, std::span<const double> x0, double t0, const SimConfig& cfg) {
  const CascadeResult& c = policy.cascade();
  const double t1 = c.t1 - policy.time_shift();
  Controller ctrl = [&policy](std::span<const double> x, double t) { return policy.step(x, t); };
  GradientFn grad = [&policy](std::span<const double> x, double t) { return policy.value_gradient(x, t); };
  Trajectory tr = simulate(policy.system(), ctrl, grad, x0, t0, t1, cfg, &c.grid());
  tr.switches = policy.switches();
  return tr;
}

// ---------------------------------------------------------------------------

MraCheck check_mra(const Trajectory& traj, const MraTask& task, bool safe_includes_target) {
  const int N = task.size();
  MraCheck out;
  if (traj.size() == 0) {
    out.reason = "empty trajectory";
    return out;
  }
  auto in_target = [&](int leg, std::size_t k) { return task.targets[leg].eval(traj.states[k], traj.times[k]) >= 0.0; };
  std::vector<ImplicitSet> safe_sets;
  for (int leg = 0; leg < N; ++leg) safe_sets.push_back(safe_includes_target ? task.safe_union(leg) : task.safes[leg]);
  auto in_safe = [&](int leg, std::size_t k) { return safe_sets[leg].eval(traj.states[k], traj.times[k]) >= 0.0; };
  // j legs done is admissible at sample k when the next leg's safe set holds there.
  auto valid = [&](int j, std::size_t k) { return j == N || in_safe(j, k); };

  std::map<int, std::vector<double>> S;
  for (std::size_t k = 0; k < traj.size(); ++k) {
    std::map<int, std::vector<double>> next;
    if (k == 0) {
      if (valid(0, 0)) next[0] = {};
    } else {
      for (auto& [j, chain] : S) {
        if (valid(j, k)) next[j] = chain;
      }
    }
    for (int j = 0; j < N; ++j) {
      auto it = next.find(j);
      if (it == next.end() || next.count(j + 1)) continue;
      if (in_target(j, k) && valid(j + 1, k)) {
        auto chain = it->second;
        chain.push_back(traj.times[k]);
        next[j + 1] = std::move(chain);
      }
    }
    if (next.empty()) {
      const int j = S.empty() ? 0 : S.rbegin()->first;
      out.legs_done = j;
      out.violation_index = k;
      out.reason = "left safe set " + std::to_string(j + 1) + " at t = " + std::to_string(traj.times[k]);
      return out;
    }
    S = std::move(next);
    if (S.count(N)) {
      out.satisfied = true;
      out.legs_done = N;
      out.taus = S[N];
      return out;
    }
  }
  out.legs_done = S.rbegin()->first;
  out.reason = "target " + std::to_string(out.legs_done + 1) + " not reached";
  return out;
}

ltl::Word trajectory_word(const Trajectory& traj, const ltl::Labeling& lab) {
  std::vector<ltl::Letter> raw;
  raw.reserve(traj.size());
  for (std::size_t k = 0; k < traj.size(); ++k) raw.push_back(lab.label(traj.states[k], traj.times[k]));
  for (std::size_t k = 1; k + 1 < raw.size(); ++k) {
    if (raw[k - 1] == raw[k + 1] && raw[k] != raw[k - 1]) raw[k] = raw[k - 1];
  }
  ltl::Word w;
  for (auto l : raw) {
    if (w.empty() || w.back() != l) w.push_back(l);
  }
  return w;
}

double max_gradient_norm(const GridField& field) {
  const Grid& g = field.grid();
  const int n = g.dim();
  double best = 0.0;
  std::vector<int> idx(n), nb(n);
  for (std::size_t k = 0; k < field.num_slices(); ++k) {
    const auto v = field.slice(k);
    for (std::size_t q = 0; q < g.num_points(); ++q) {
      g.index(q, idx);
      double norm2 = 0.0;
      for (int a = 0; a < n; ++a) {
        const auto& ax = g.axis(a);
        nb = idx;
        int lo = idx[a] - 1, hi = idx[a] + 1;
        double span = 2.0;
        if (ax.periodic) {
          lo = (lo + ax.count) % ax.count;
          hi = hi % ax.count;
        } else {
          if (lo < 0) { lo = idx[a]; span = 1.0; }
          if (hi >= ax.count) { hi = idx[a]; span = 1.0; }
        }
        nb[a] = hi;
        const double vh = v[g.flat(nb)];
        nb[a] = lo;
        const double vl = v[g.flat(nb)];
        const double dv = (vh - vl) / (span * ax.spacing());
        norm2 += dv * dv;
      }
      best = std::max(best, std::sqrt(norm2));
    }
  }
  return best;
}

double numerical_tolerance(double lipschitz, const Grid& grid, double dt_ctrl, double max_speed) {
  double dx2 = 0.0;
  for (int a = 0; a < grid.dim(); ++a) dx2 += grid.axis(a).spacing() * grid.axis(a).spacing();
  return 2.0 * (0.5 * lipschitz * std::sqrt(dx2) + dt_ctrl * lipschitz * max_speed);
}

void write_trajectory_csv(const Trajectory& traj, std::ostream& out) {
  const std::size_t n = traj.size() ? traj.states.front().size() : 0;
  const std::size_t m = traj.size() ? traj.controls.front().size() : 0;
  const std::size_t l = traj.size() ? traj.disturbances.front().size() : 0;
  out << "t";
  for (std::size_t i = 0; i < n; ++i) out << ",x" << i + 1;
  for (std::size_t i = 0; i < m; ++i) out << ",u" << i + 1;
  for (std::size_t i = 0; i < l; ++i) out << ",d" << i + 1;
  out << ",stage,b_value,target_value\n";
  out << std::setprecision(10);
  for (std::size_t k = 0; k < traj.size(); ++k) {
    out << traj.times[k];
    for (double v : traj.states[k]) out << "," << v;
    for (double v : traj.controls[k]) out << "," << v;
    for (double v : traj.disturbances[k]) out << "," << v;
    out << "," << traj.stages[k] << "," << traj.values[k] << "," << traj.target_values[k] << "\n";
  }
}

}  // namespace hjmra
