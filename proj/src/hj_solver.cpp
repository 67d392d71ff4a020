#include "hjmra/hj_solver.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <thread>

namespace hjmra {

namespace {
constexpr int kMaxDim = 16;
}

// ---------------------------------------------------------------------------
// Slice sources

SliceSource SliceSource::from_set(const ImplicitSet& set, const Grid& grid) {
  if (!set.valid()) throw SolverError("slice source: empty implicit set", 0.0);
  if (set.dim() != grid.dim()) throw SolverError("slice source: set and grid dimensions differ", 0.0);
  return SliceSource([set, grid](double t, std::span<double> out) { sample_into(set, grid, t, out); },
                     set.time_invariant());
}

SliceSource SliceSource::from_field(std::shared_ptr<const GridField> field) {
  const bool invariant = field->num_slices() == 1;
  return SliceSource([field](double t, std::span<double> out) { interpolate_time(*field, t, out); },
                     invariant);
}

SliceSource SliceSource::constant(double value) {
  return SliceSource([value](double, std::span<double> out) { std::fill(out.begin(), out.end(), value); },
                     true);
}

namespace {

SliceSource combine(SliceSource a, SliceSource b, bool take_min) {
  const bool invariant = a.time_invariant() && b.time_invariant();
  return SliceSource(
      [a = std::move(a), b = std::move(b), take_min](double t, std::span<double> out) {
        a.fill(t, out);
        std::vector<double> tmp(out.size());
        b.fill(t, tmp);
        if (take_min) {
          for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::min(out[i], tmp[i]);
        } else {
          for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::max(out[i], tmp[i]);
        }
      },
      invariant);
}

}  // namespace

SliceSource slice_min(SliceSource a, SliceSource b) { return combine(std::move(a), std::move(b), true); }
SliceSource slice_max(SliceSource a, SliceSource b) { return combine(std::move(a), std::move(b), false); }

// ---------------------------------------------------------------------------
// Threads

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("HJMRA_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  return 1;
}

void parallel_for(std::size_t count, int threads,
                  const std::function<void(std::size_t, std::size_t)>& fn) {
  threads = std::max(1, threads);
  if (threads == 1 || count < 4096) {
    fn(0, count);
    return;
  }
  const std::size_t chunk = (count + threads - 1) / threads;
  std::vector<std::thread> pool;
  for (int w = 0; w < threads; ++w) {
    const std::size_t b = w * chunk;
    const std::size_t e = std::min(count, b + chunk);
    if (b >= e) break;
    pool.emplace_back([&fn, b, e] { fn(b, e); });
  }
  for (auto& th : pool) th.join();
}

// ---------------------------------------------------------------------------
// Problem

void RaProblem::validate() const {
  sys.validate();
  if (grid.dim() != sys.n) throw SolverError("grid dimension differs from system state dimension", t1);
  if (!target.valid() || !safe.valid()) throw SolverError("target and safe sources must be set", t1);
  if (!(t0 < t1)) throw SolverError("t0 must be below t1", t1);
  if (!(cfl > 0.0 && cfl <= 1.0)) throw SolverError("cfl must lie in (0, 1]", t1);
  if (order != 1 && order != 2) throw SolverError("order must be 1 or 2", t1);
  if (!(output_dt > 0.0)) throw SolverError("output_dt must be positive", t1);
}

std::vector<double> output_stamps(double t0, double t1, double output_dt) {
  std::vector<double> stamps;
  const double span = t1 - t0;
  const auto n = static_cast<std::size_t>(std::floor(span / output_dt + 1e-9));
  for (std::size_t k = 0; k <= n; ++k) stamps.push_back(t0 + static_cast<double>(k) * output_dt);
  if (t1 - stamps.back() > 1e-9 * std::max(1.0, std::abs(t1))) {
    stamps.push_back(t1);
  } else {
    stamps.back() = t1;
  }
  return stamps;
}

namespace {

struct NodeTerms {
  int n = 0;
  int m = 0;
  int l = 0;
  std::vector<double> f;
  std::vector<double> g;
  std::vector<double> p;

  void init(const SystemModel& sys, std::size_t np) {
    n = sys.n;
    m = sys.m;
    l = sys.l;
    f.resize(np * n);
    g.resize(np * n * m);
    p.resize(np * n * l);
  }

  void evaluate(const SystemModel& sys, const Grid& grid, double t, std::size_t b, std::size_t e) {
    std::array<double, kMaxDim> x{};
    const std::span<double> xs(x.data(), n);
    for (std::size_t q = b; q < e; ++q) {
      grid.coords(q, xs);
      sys.f(xs, t, std::span<double>(f.data() + q * n, n));
      if (m > 0) sys.g(xs, t, std::span<double>(g.data() + q * n * m, static_cast<std::size_t>(n * m)));
      if (l > 0) sys.p(xs, t, std::span<double>(p.data() + q * n * l, static_cast<std::size_t>(n * l)));
    }
  }
};

double node_hamiltonian(const SystemModel& sys, const NodeTerms& T, std::size_t q, double t,
                        const double* grad) {
  const int n = T.n;
  const double* f = T.f.data() + q * n;
  double h = 0.0;
  for (int i = 0; i < n; ++i) h += grad[i] * f[i];
  std::array<double, kMaxDim> c{};
  if (T.m > 0) {
    const double* g = T.g.data() + q * n * T.m;
    for (int j = 0; j < T.m; ++j) c[j] = 0.0;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < T.m; ++j) c[j] += grad[i] * g[i * T.m + j];
    }
    h += sys.U.support(std::span<const double>(c.data(), T.m), t);
  }
  if (T.l > 0) {
    const double* p = T.p.data() + q * n * T.l;
    for (int j = 0; j < T.l; ++j) c[j] = 0.0;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < T.l; ++j) c[j] -= grad[i] * p[i * T.l + j];
    }
    h -= sys.D.support(std::span<const double>(c.data(), T.l), t);
  }
  return h;
}

// One-sided derivatives D- and D+ at q along one axis. Order 2 adds the ENO
// correction with the smaller second difference; one-sided at walls.
void axis_derivatives(const std::vector<double>& u, std::size_t q, int k, int count, std::size_t s, bool periodic,
                      double inv_h, int order, double& dm, double& dp) {
  auto at = [&](int off) {
    int j = k + off;
    if (periodic) {
      j = ((j % count) + count) % count;
    }
    return u[q + static_cast<std::ptrdiff_t>(j - k) * static_cast<std::ptrdiff_t>(s)];
  };
  const double v = u[q];
  if (!periodic && k == 0) {
    dp = (at(1) - v) * inv_h;
    dm = dp;
    return;
  }
  if (!periodic && k == count - 1) {
    dm = (v - at(-1)) * inv_h;
    dp = dm;
    return;
  }
  dm = (v - at(-1)) * inv_h;
  dp = (at(1) - v) * inv_h;
  if (order < 2 || (!periodic && (k < 2 || k > count - 3)) || count < 5) return;
  const double d2m = (at(-2) - 2.0 * at(-1) + v);
  const double d2c = (at(-1) - 2.0 * v + at(1));
  const double d2p = (v - 2.0 * at(1) + at(2));
  auto smaller = [](double a, double b) { return std::abs(a) <= std::abs(b) ? a : b; };
  dm += 0.5 * smaller(d2m, d2c) * inv_h;
  dp -= 0.5 * smaller(d2c, d2p) * inv_h;
}

}  // namespace

GridField solve_ra(const RaProblem& pb, SolveStats* stats) {
  pb.validate();
  const auto clock_start = std::chrono::steady_clock::now();
  const Grid& grid = pb.grid;
  const int n = grid.dim();
  const std::size_t np = grid.num_points();
  const int threads = resolve_threads(pb.threads);
  const std::vector<double> stamps = output_stamps(pb.t0, pb.t1, pb.output_dt);

  // Dissipation: maximum over the output stamps for time-varying systems.
  std::vector<double> alpha = dissipation_bounds(pb.sys, grid, pb.t1);
  if (!pb.sys.time_invariant) {
    for (double t : stamps) {
      const auto a = dissipation_bounds(pb.sys, grid, t);
      for (int i = 0; i < n; ++i) alpha[i] = std::max(alpha[i], a[i]);
    }
  }
  double rate = 0.0;
  for (int i = 0; i < n; ++i) rate += alpha[i] / grid.spacing(i);
  const double dt_cfl = rate > 0.0 ? pb.cfl / rate : std::numeric_limits<double>::infinity();

  GridField V(grid, stamps);
  std::vector<double> target(np), safe(np), cur(np), next(np);
  std::vector<double> stage(pb.order > 1 ? np : 0);

  pb.target.fill(pb.t1, target);
  pb.safe.fill(pb.t1, safe);
  for (std::size_t q = 0; q < np; ++q) cur[q] = std::min(target[q], safe[q]);
  {
    auto last = V.slice(stamps.size() - 1);
    std::copy(cur.begin(), cur.end(), last.begin());
  }

  NodeTerms terms;
  terms.init(pb.sys, np);
  if (pb.sys.time_invariant) {
    parallel_for(np, threads, [&](std::size_t b, std::size_t e) { terms.evaluate(pb.sys, grid, pb.t1, b, e); });
  }

  std::vector<std::size_t> stride(n);
  std::vector<int> count(n);
  std::vector<double> inv_h(n);
  std::vector<bool> periodic(n);
  for (int i = 0; i < n; ++i) {
    stride[i] = grid.stride(i);
    count[i] = grid.axis(i).count;
    inv_h[i] = 1.0 / grid.spacing(i);
    periodic[i] = grid.axis(i).periodic;
  }

  const bool sources_invariant = pb.target.time_invariant() && pb.safe.time_invariant();
  double source_time = pb.t1;
  auto refresh_sources = [&](double ts) {
    if (sources_invariant || ts == source_time) return;
    pb.target.fill(ts, target);
    pb.safe.fill(ts, safe);
    source_time = ts;
  };
  auto clamp = [&](std::vector<double>& v) {
    bool finite = true;
    for (std::size_t q = 0; q < np; ++q) {
      finite &= std::isfinite(v[q]) && std::isfinite(target[q]) && std::isfinite(safe[q]);
      v[q] = std::min(safe[q], std::max(v[q], target[q]));
      finite &= std::isfinite(v[q]);
    }
    return finite;
  };
  // H(p_avg) + sum alpha (D+ - D-) / 2, one-sided derivatives of order pb.order.
  auto rhs = [&](const std::vector<double>& u, double tt, std::vector<double>& out) {
    parallel_for(np, threads, [&](std::size_t b, std::size_t e) {
      std::array<int, kMaxDim> idx{};
      grid.index(b, std::span<int>(idx.data(), n));
      std::array<double, kMaxDim> grad{};
      for (std::size_t q = b; q < e; ++q) {
        double diss = 0.0;
        for (int i = 0; i < n; ++i) {
          double dm;
          double dp;
          axis_derivatives(u, q, idx[i], count[i], stride[i], periodic[i], inv_h[i], pb.order, dm, dp);
          grad[i] = 0.5 * (dm + dp);
          diss += alpha[i] * 0.5 * (dp - dm);
        }
        out[q] = node_hamiltonian(pb.sys, terms, q, tt, grad.data()) + diss;
        for (int i = n - 1; i >= 0; --i) {
          if (++idx[i] < count[i]) break;
          idx[i] = 0;
        }
      }
    });
  };
  std::size_t steps = 0;
  double t = pb.t1;
  const double time_tol = 1e-12 * std::max(1.0, std::abs(pb.t1));

  for (std::size_t k = stamps.size() - 1; k > 0; --k) {
    const double ts = stamps[k - 1];
    while (t > ts + time_tol) {
      double dt = std::min(dt_cfl, t - ts);
      double t_new = t - dt;
      if (t_new - ts < time_tol) {
        t_new = ts;
        dt = t - ts;
      }
      if (!pb.sys.time_invariant) {
        parallel_for(np, threads, [&](std::size_t b, std::size_t e) { terms.evaluate(pb.sys, grid, t, b, e); });
      }
      if (pb.order == 1) {
        rhs(cur, t, next);
        for (std::size_t q = 0; q < np; ++q) next[q] = cur[q] + dt * next[q];
      } else {
        // Heun: average of the current value and two Euler stages.
        rhs(cur, t, next);
        for (std::size_t q = 0; q < np; ++q) next[q] = cur[q] + dt * next[q];
        refresh_sources(t_new);
        clamp(next);
        if (!pb.sys.time_invariant) {
          parallel_for(np, threads, [&](std::size_t b, std::size_t e) { terms.evaluate(pb.sys, grid, t_new, b, e); });
        }
        rhs(next, t_new, stage);
        for (std::size_t q = 0; q < np; ++q) next[q] = 0.5 * (cur[q] + next[q] + dt * stage[q]);
      }
      refresh_sources(t_new);
      if (!clamp(next)) throw SolverError("non-finite value produced at t = " + std::to_string(t_new), t_new);
      cur.swap(next);
      t = t_new;
      ++steps;
      if (pb.progress) pb.progress(SolveProgress{t, steps, dt});
    }
    t = ts;
    auto out = V.slice(k - 1);
    std::copy(cur.begin(), cur.end(), out.begin());
  }

  if (stats) {
    stats->steps = steps;
    stats->dt_cfl = dt_cfl;
    stats->alpha = alpha;
    stats->seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - clock_start).count();
  }
  return V;
}

std::vector<std::uint8_t> feasible_set(const GridField& V, double t) {
  const std::size_t np = V.grid().num_points();
  std::vector<double> slice(np);
  interpolate_time(V, t, slice);
  std::vector<std::uint8_t> mask(np);
  for (std::size_t q = 0; q < np; ++q) mask[q] = slice[q] >= 0.0 ? 1 : 0;
  return mask;
}

}  // namespace hjmra
