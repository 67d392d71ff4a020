#include "hjmra/controller.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace hjmra {

void ControlLawConfig::validate(int m) const {
  if (mode == Mode::relaxed && !(beta > 0.0)) throw ControllerError("relaxed mode requires beta > 0");
  if (beta < 0.0) throw ControllerError("beta must be non-negative");
  if (!(gain > 0.0)) throw ControllerError("class-K gain must be positive");
  if (Q.size() > 0) {
    if (Q.rows() != m || Q.cols() != m) throw ControllerError("Q must be m x m");
    if (!Q.isApprox(Q.transpose(), 1e-12)) throw ControllerError("Q must be symmetric");
    Eigen::LLT<Eigen::MatrixXd> llt(Q);
    if (llt.info() != Eigen::Success) throw ControllerError("Q must be positive definite");
  }
}

Halfspace feasible_halfspace(const GridField& b, const SystemModel& sys, std::span<const double> x,
                             double t, const ControlLawConfig& cfg) {
  const auto gr = gradient(b, x, t);
  const auto iv = interpolate(b, x, t);
  if (gr.out_of_domain || iv.out_of_domain) throw ControllerError("left certified domain");
  ModelTerms terms;
  terms.evaluate(sys, x, t);
  Halfspace h;
  h.value = iv.value;
  h.grad = gr.dx;
  h.dbdt = gr.dt;
  h.a.assign(sys.m, 0.0);
  for (int i = 0; i < sys.n; ++i) {
    for (int j = 0; j < sys.m; ++j) h.a[j] += terms.g[i * sys.m + j] * h.grad[i];
  }
  double drift = 0.0;
  for (int i = 0; i < sys.n; ++i) drift += h.grad[i] * terms.f[i];
  h.p_star = worst_disturbance_term(sys, x, t, h.grad);
  h.rhs = -(drift + h.p_star + h.dbdt);
  if (cfg.mode == ControlLawConfig::Mode::relaxed) h.rhs -= cfg.gain * (h.value - cfg.beta);
  return h;
}

// ---------------------------------------------------------------------------
// QP

namespace {

constexpr double kFeasTol = 1e-10;

double objective(const Eigen::MatrixXd& Q, const Eigen::VectorXd& u, const Eigen::VectorXd& r) {
  const Eigen::VectorXd e = u - r;
  return e.dot(Q * e);
}

QpSolution solve_box(const BoundSet& U, double t, const Eigen::MatrixXd& Q, const Eigen::VectorXd& r,
                     const Eigen::VectorXd& a, double rhs, bool constrained) {
  const int m = U.dim();
  const double s = U.scale(t);
  Eigen::VectorXd lo(m), hi(m);
  for (int j = 0; j < m; ++j) {
    lo[j] = s * U.lo()[j];
    hi[j] = s * U.hi()[j];
  }

  int patterns = 1;
  for (int j = 0; j < m; ++j) patterns *= 3;

  QpSolution best;
  double best_obj = std::numeric_limits<double>::infinity();
  std::vector<int> face(m);
  for (int code = 0; code < patterns; ++code) {
    int c = code;
    std::vector<int> free_idx;
    Eigen::VectorXd u = Eigen::VectorXd::Zero(m);
    for (int j = 0; j < m; ++j) {
      face[j] = c % 3 - 1;
      c /= 3;
      if (face[j] == 0) {
        free_idx.push_back(j);
      } else {
        u[j] = face[j] < 0 ? lo[j] : hi[j];
      }
    }
    const int nf = static_cast<int>(free_idx.size());
    for (int active = 0; active <= (constrained ? 1 : 0); ++active) {
      Eigen::VectorXd cand = u;
      if (nf > 0) {
        // Stationarity on the free block: Q_FF (u_F - r_F) + Q_FX (u_X - r_X) = lambda a_F / 2.
        Eigen::MatrixXd K = Eigen::MatrixXd::Zero(nf + active, nf + active);
        Eigen::VectorXd rhs_vec = Eigen::VectorXd::Zero(nf + active);
        for (int p = 0; p < nf; ++p) {
          const int jp = free_idx[p];
          double acc = 0.0;
          for (int q = 0; q < m; ++q) {
            if (face[q] != 0) acc += Q(jp, q) * (u[q] - r[q]);
          }
          for (int q = 0; q < nf; ++q) K(p, q) = 2.0 * Q(jp, free_idx[q]);
          double rf = 0.0;
          for (int q = 0; q < nf; ++q) rf += Q(jp, free_idx[q]) * r[free_idx[q]];
          rhs_vec[p] = 2.0 * (rf - acc);
          if (active) K(p, nf) = -a[jp];
        }
        if (active) {
          double fixed = 0.0;
          for (int q = 0; q < m; ++q) {
            if (face[q] != 0) fixed += a[q] * u[q];
          }
          for (int q = 0; q < nf; ++q) K(nf, q) = a[free_idx[q]];
          rhs_vec[nf] = rhs - fixed;
        }
        Eigen::FullPivLU<Eigen::MatrixXd> lu(K);
        if (!lu.isInvertible()) continue;
        const Eigen::VectorXd sol = lu.solve(rhs_vec);
        for (int p = 0; p < nf; ++p) cand[free_idx[p]] = sol[p];
      } else if (active) {
        if (std::abs(a.dot(cand) - rhs) > kFeasTol) continue;
      }
      bool ok = true;
      for (int j = 0; j < m && ok; ++j) {
        if (cand[j] < lo[j] - kFeasTol || cand[j] > hi[j] + kFeasTol) ok = false;
        cand[j] = std::clamp(cand[j], lo[j], hi[j]);
      }
      if (!ok) continue;
      if (constrained && a.dot(cand) < rhs - kFeasTol) continue;
      const double obj = objective(Q, cand, r);
      if (obj < best_obj - 1e-15) {
        best_obj = obj;
        best.u.assign(cand.data(), cand.data() + m);
        best.objective = obj;
        best.faces.assign(face.begin(), face.end());
        best.constraint_active = active == 1;
      }
    }
  }
  if (!std::isfinite(best_obj)) {
    double best_au = 0.0;
    for (int j = 0; j < m; ++j) best_au += std::max(a[j] * lo[j], a[j] * hi[j]);
    std::ostringstream os;
    os << "feasible control set is empty: max a.u = " << best_au << " < required " << rhs;
    throw QpInfeasible(os.str(), best_au, rhs);
  }
  // Faces reported from the final point.
  for (int j = 0; j < m; ++j) {
    best.faces[j] = best.u[j] <= lo[j] + kFeasTol ? -1 : (best.u[j] >= hi[j] - kFeasTol ? 1 : 0);
  }
  return best;
}

// argmin over ||u|| <= R of (u - z)' Q (u - z).
Eigen::VectorXd ball_project(const Eigen::MatrixXd& Q, bool isotropic, const Eigen::VectorXd& z, double R) {
  const double nz = z.norm();
  if (nz <= R) return z;
  if (isotropic) return z * (R / nz);
  const int m = static_cast<int>(z.size());
  const Eigen::VectorXd Qz = Q * z;
  auto u_of = [&](double mu) {
    Eigen::MatrixXd M = Q + mu * Eigen::MatrixXd::Identity(m, m);
    return Eigen::VectorXd(M.ldlt().solve(Qz));
  };
  double lo = 0.0;
  double hi = 1.0;
  while (u_of(hi).norm() > R) hi *= 2.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (u_of(mid).norm() > R) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  Eigen::VectorXd u = u_of(hi);
  const double nu = u.norm();
  if (nu > R) u *= R / nu;
  return u;
}

QpSolution solve_ball(const BoundSet& U, double t, const Eigen::MatrixXd& Q, const Eigen::VectorXd& r,
                      const Eigen::VectorXd& a, double rhs, bool constrained) {
  const int m = U.dim();
  const double R = U.scale(t) * U.radius();
  const bool isotropic =
      (Q - Q(0, 0) * Eigen::MatrixXd::Identity(m, m)).cwiseAbs().maxCoeff() <= 1e-14 * std::abs(Q(0, 0));
  const Eigen::VectorXd Qinv_a = Q.ldlt().solve(a);
  auto u_of = [&](double lambda) { return ball_project(Q, isotropic, r + 0.5 * lambda * Qinv_a, R); };

  QpSolution sol;
  Eigen::VectorXd u = u_of(0.0);
  if (constrained && a.dot(u) < rhs) {
    const double best_au = R * a.norm();
    if (best_au < rhs - kFeasTol) {
      std::ostringstream os;
      os << "feasible control set is empty: max a.u = " << best_au << " < required " << rhs;
      throw QpInfeasible(os.str(), best_au, rhs);
    }
    double lo = 0.0;
    double hi = 1.0;
    int guard = 0;
    while (a.dot(u_of(hi)) < rhs && guard++ < 200) hi *= 2.0;
    if (a.dot(u_of(hi)) < rhs) {
      u = a * (R / a.norm());
    } else {
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (a.dot(u_of(mid)) < rhs) {
          lo = mid;
        } else {
          hi = mid;
        }
      }
      u = u_of(hi);
    }
    sol.constraint_active = true;
  }
  sol.u.assign(u.data(), u.data() + m);
  sol.objective = objective(Q, u, r);
  sol.faces = {u.norm() >= R * (1.0 - 1e-12) ? 1 : 0};
  return sol;
}

}  // namespace

QpSolution solve_control_qp(const BoundSet& U, double t, const Eigen::MatrixXd& Qin,
                            std::span<const double> u_ref, std::span<const double> a_in, double rhs,
                            bool constrained) {
  const int m = U.dim();
  if (m == 0) return {};
  Eigen::MatrixXd Q = Qin.size() == 0 ? Eigen::MatrixXd::Identity(m, m) : Qin;
  Eigen::VectorXd r = Eigen::Map<const Eigen::VectorXd>(u_ref.data(), m);
  Eigen::VectorXd a = Eigen::Map<const Eigen::VectorXd>(a_in.data(), m);
  QpSolution sol = U.kind() == BoundSet::Kind::box ? solve_box(U, t, Q, r, a, rhs, constrained)
                                                   : solve_ball(U, t, Q, r, a, rhs, constrained);
  sol.constrained = constrained;
  if (constrained) {
    double au = 0.0;
    for (int j = 0; j < m; ++j) au += a[j] * sol.u[j];
    sol.slack = au - rhs;
  }
  return sol;
}

// ---------------------------------------------------------------------------
// Policy

SynthesisPolicy::SynthesisPolicy(std::shared_ptr<const CascadeResult> cascade, SystemModel sys,
                                 ControlLawConfig cfg, double time_shift)
    : cascade_(std::move(cascade)), sys_(std::move(sys)), cfg_(std::move(cfg)), shift_(time_shift) {
  if (!cascade_ || cascade_->stages.empty()) throw ControllerError("policy needs a non-empty cascade");
  sys_.validate();
  cfg_.validate(sys_.m);
  Q_ = cfg_.Q.size() == 0 ? Eigen::MatrixXd::Identity(sys_.m, sys_.m) : cfg_.Q;
  if (shift_ < 0.0) throw ControllerError("time shift must be non-negative");
  if (shift_ > 0.0 && !cascade_->time_invariant) {
    throw ControllerError("time shift is only valid for time-invariant problems");
  }
  if (shift_ >= cascade_->t1 - cascade_->t0) throw ControllerError("time shift exceeds the horizon");
}

void SynthesisPolicy::reset() {
  current_ = 1;
  switches_.clear();
}

const GridField& SynthesisPolicy::stage_field(int target_index) const {
  return *cascade_->for_target(target_index).value;
}

double SynthesisPolicy::target_value_for(int i, std::span<const double> x, double t) const {
  const double ts = t + shift_;
  const int N = num_targets();
  if (cascade_->targets.size() == static_cast<std::size_t>(N)) {
    double v = cascade_->targets[i - 1].eval(x, ts);
    if (i < N) {
      v = std::min(v, interpolate(stage_field(i + 1), x, ts).value);
    } else if (cascade_->enlarged_safe) {
      v = std::min(v, cascade_->absent_level);
    }
    return v;
  }
  return interpolate(*cascade_->for_target(i).target, x, ts).value;
}

double SynthesisPolicy::value(std::span<const double> x, double t) const {
  const int i = std::min(current_, num_targets());
  return interpolate(stage_field(i), x, t + shift_).value;
}

double SynthesisPolicy::target_value(std::span<const double> x, double t) const {
  const int i = std::min(current_, num_targets());
  return target_value_for(i, x, t);
}

std::vector<double> SynthesisPolicy::value_gradient(std::span<const double> x, double t) const {
  if (done()) return std::vector<double>(sys_.n, 0.0);
  return gradient(stage_field(current_), x, t + shift_).dx;
}

std::vector<double> SynthesisPolicy::reference(std::span<const double> x, double t) const {
  if (cfg_.reference) {
    auto u = cfg_.reference(x, t, current_);
    if (static_cast<int>(u.size()) != sys_.m) throw ControllerError("reference control has wrong size");
    return u;
  }
  return std::vector<double>(sys_.m, 0.0);
}

PolicyOutput SynthesisPolicy::step(std::span<const double> x, double t) {
  PolicyOutput out;
  const int N = num_targets();
  while (!done()) {
    const double hT = target_value_for(current_, x, t);
    if (hT < 0.0) break;
    SwitchEvent ev;
    ev.time = t;
    ev.state.assign(x.begin(), x.end());
    ev.completed_target = current_;
    ev.target_margin = hT;
    ev.incoming_value = current_ < N ? interpolate(stage_field(current_ + 1), x, t + shift_).value : hT;
    switches_.push_back(std::move(ev));
    ++current_;
    out.switched = true;
  }
  out.target_index = current_;
  if (done()) {
    out.done = true;
    out.u = reference(x, t);
    // Keep the hold-out control admissible.
    if (sys_.m > 0) {
      std::vector<double> zero(sys_.m, 0.0);
      out.u = solve_control_qp(sys_.U, t, Q_, out.u, zero, 0.0, false).u;
    }
    return out;
  }

  const double ts = t + shift_;
  const Halfspace hs = feasible_halfspace(stage_field(current_), sys_, x, ts, cfg_);
  out.value = hs.value;
  out.target_value = target_value_for(current_, x, t);
  out.constrained = out.target_value < hs.value;
  const auto u_ref = reference(x, t);
  QpSolution qp;
  try {
    qp = solve_control_qp(sys_.U, ts, Q_, u_ref, hs.a, hs.rhs, out.constrained);
  } catch (const QpInfeasible& e) {
    if (!cfg_.throw_on_infeasible) {
      out.u.assign(sys_.m, 0.0);
      sys_.U.maximizer(hs.a, ts, out.u);
      out.slack = e.best() - e.rhs();
      out.margin_exception = true;
      return out;
    }
    std::ostringstream os;
    os << e.what() << " at t = " << t << " (target " << current_ << ", value " << hs.value
       << ", target value " << out.target_value << "); indicates gradient discretization error";
    throw QpInfeasible(os.str(), e.best(), e.rhs());
  }
  out.u = std::move(qp.u);
  out.slack = qp.slack;
  return out;
}

}  // namespace hjmra
