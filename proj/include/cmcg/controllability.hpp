#pragma once

#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fem.hpp"
#include "filtering.hpp"
#include "hdg1d.hpp"
#include "helmholtz_ref.hpp"
#include "linalg.hpp"
#include "timestepping.hpp"

namespace cmcg {

class RieszSolveError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct IterationRecord {
  int iter = 0;
  double residual_cg = 0.0;
  double misfit_J = 0.0;
  double residual_H = std::numeric_limits<double>::quiet_NaN();
  long cumulative_periods = 0;
  double wall_time = 0.0;
};

/// Energy-norm periodicity mismatch 0.5 |yT - v0|_K^2 + 0.5 |ytT - v1|_m^2.
inline double energy_misfit(const WaveSystem& sys, const TerminalState& s, const ControlPair& v) {
  const int n = sys.size();
  Vector e(n), d(n), Ke(n);
  for (int i = 0; i < n; ++i) {
    e[i] = s.yT[i] - v.v0[i];
    d[i] = s.ytT[i] - v.v1[i];
  }
  sys.K.multiply(e, Ke);
  return 0.5 * dot(e, Ke) + 0.5 * weighted_dot(sys.m_lumped, d, d);
}

struct JEvaluation {
  double J = 0.0;
  TerminalState state;
};

inline JEvaluation eval_J(const WavePropagator& prop, const ControlPair& v) {
  JEvaluation out;
  out.state = prop.run(v);
  out.J = energy_misfit(prop.system(), out.state, v);
  return out;
}

/// Euclidean gradient of J from the terminal state of the same control:
/// g = S'(K e, m d) - (K e, m d) with e = yT - v0, d = ytT - v1.
inline ControlPair eval_gradient(const WavePropagator& prop, const ControlPair& v, const TerminalState& s) {
  const WaveSystem& sys = prop.system();
  const int n = sys.size();
  Vector e(n), md(n), Ke(n);
  for (int i = 0; i < n; ++i) {
    e[i] = s.yT[i] - v.v0[i];
    md[i] = sys.m_lumped[i] * (s.ytT[i] - v.v1[i]);
  }
  sys.K.multiply(e, Ke);
  ControlPair g = prop.transpose(Ke, md);
  for (int i = 0; i < n; ++i) {
    g.v0[i] -= Ke[i];
    g.v1[i] -= md[i];
  }
  apply_mask(sys.constrained, g.v0);
  apply_mask(sys.constrained, g.v1);
  return g;
}

/// Backward adjoint solve from terminal data p(T) = p0, p_t(T) = p1, returning
/// (p(0), p_t(0)). Realized through the transposed forward map.
inline ControlPair adjoint_backward(const WavePropagator& prop, const Vector& p0, const Vector& p1) {
  const WaveSystem& sys = prop.system();
  const int n = sys.size();
  Vector abar(n), cbar(n);
  for (int i = 0; i < n; ++i) {
    abar[i] = sys.b_lumped[i] * p0[i] - sys.m_lumped[i] * p1[i];
    cbar[i] = sys.m_lumped[i] * p0[i];
  }
  const ControlPair vb = prop.transpose(abar, cbar);
  ControlPair out{Vector(n), Vector(n)};
  for (int i = 0; i < n; ++i) {
    out.v0[i] = vb.v1[i] / sys.m_lumped[i];
    out.v1[i] = (sys.b_lumped[i] * out.v0[i] - vb.v0[i]) / sys.m_lumped[i];
  }
  return out;
}

/// Energy inner product: K on the displacement part, lumped mass on the velocity part.
inline double energy_dot(const WaveSystem& sys, const ControlPair& a, const ControlPair& b) {
  Vector Kb = sys.K * b.v0;
  return dot(a.v0, Kb) + weighted_dot(sys.m_lumped, a.v1, b.v1);
}

/// Solves K g~0 = g0 on the free DOFs (zero-mean subspace without Dirichlet
/// boundary) and sets g~1 = m^{-1} g1.
inline ControlPair riesz_representative(const WaveSystem& sys, const ControlPair& g, double rtol = 1e-12) {
  const int n = sys.size();
  const auto& P = sys.constrained;
  Vector inv_diag = sys.K.diagonal_entries();
  for (int i = 0; i < n; ++i) inv_diag[i] = (P[i] || inv_diag[i] == 0.0) ? 0.0 : 1.0 / inv_diag[i];
  Vector rhs = g.v0;
  apply_mask(P, rhs);
  Vector tmp(n);
  auto op = [&](std::span<const double> x, std::span<double> y) {
    std::copy(x.begin(), x.end(), tmp.begin());
    apply_mask(P, tmp);
    sys.K.multiply(tmp, y);
    apply_mask(P, y);
  };
  PcgOptions opt;
  opt.rtol = rtol;
  opt.max_iter = std::max(1000, 4 * n);
  opt.project_constants = !sys.has_dirichlet;
  PcgResult res = pcg(op, rhs, inv_diag, opt);
  if (!res.converged) {
    std::string dump = "riesz solve did not converge: " + std::to_string(res.iterations) +
                       " iterations, relative residual " + std::to_string(res.relative_residual) + "; energy history:";
    const std::size_t first = res.energy.size() > 10 ? res.energy.size() - 10 : 0;
    for (std::size_t k = first; k < res.energy.size(); ++k) dump += " " + std::to_string(res.energy[k]);
    throw RieszSolveError(dump);
  }
  ControlPair out{std::move(res.x), Vector(n)};
  apply_mask(P, out.v0);
  for (int i = 0; i < n; ++i) out.v1[i] = P[i] ? 0.0 : g.v1[i] / sys.m_lumped[i];
  return out;
}

/// sqrt(J) / (||f|| + ||g_S||). Throws when the denominator vanishes.
inline double periodicity_misfit(double J, double source_norm) {
  if (!(source_norm > 0.0))
    throw std::invalid_argument("periodicity misfit: zero source norm; use the absolute misfit sqrt(J)");
  return std::sqrt(std::max(J, 0.0)) / source_norm;
}

/// sqrt(<r, r>_E / <r0, r0>_E).
inline double cg_residual(double rr, double rr0) { return rr0 > 0.0 ? std::sqrt(rr / rr0) : 0.0; }

struct CmcgOptions {
  Scheme scheme = Scheme::Leapfrog;
  double tol = 1e-8;
  double misfit_tol = 0.0;  // if positive, also stop once |.|_J <= misfit_tol
  int max_iter = 1000;
  int runup_periods = 0;
  bool filter = true;
  bool correct_shift = true;  // eta (Neumann) and lambda (sound-hard) corrections
  const HelmholtzSystem* reference = nullptr;  // enables |.|_H per iteration
  int steps_per_period = 0;
  int min_steps = 0;
  double riesz_rtol = 1e-12;
  std::function<void(const IterationRecord&)> callback;
};

struct CmcgResult {
  ComplexField u;
  ControlPair control;
  std::vector<IterationRecord> history;
  bool converged = false;
  int iterations = 0;
  bool misfit_absolute = false;  // |.|_J reported as sqrt(J) (zero source norm)
  double eta = 0.0;
  Complex lambda{};
  int steps_per_period = 0;
  double dt = 0.0;
  long total_periods = 0;  // including run-up and the final filtering pass
};

namespace detail {

inline void impose_control(const WaveSystem& sys, ControlPair& v) {
  for (int i = 0; i < sys.size(); ++i) {
    if (!sys.constrained[i]) continue;
    v.v0[i] = sys.gD_re[i];
    v.v1[i] = sys.omega * sys.gD_im[i];
  }
}

inline ComplexField unfiltered(const WaveSystem& sys, const ControlPair& v) {
  ComplexField u(sys.size());
  for (int i = 0; i < sys.size(); ++i) {
    u.re[i] = v.v0[i];
    u.im[i] = v.v1[i] / sys.omega;
  }
  return u;
}

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace detail

/// Controllability method with conjugate gradients for the second-order wave system.
inline CmcgResult cmcg_solve(const WaveSystem& sys, const CmcgOptions& opt) {
  const auto t0 = std::chrono::steady_clock::now();
  const int n = sys.size();
  WavePropagator prop(sys, opt.scheme, opt.steps_per_period, opt.min_steps);
  CmcgResult res;
  res.steps_per_period = prop.steps_per_period();
  res.dt = prop.dt();
  res.misfit_absolute = !(sys.source_norm > 0.0);
  auto misfit = [&](double J) { return res.misfit_absolute ? std::sqrt(std::max(J, 0.0)) : periodicity_misfit(J, sys.source_norm); };

  ControlPair v{Vector(n, 0.0), Vector(n, 0.0)};
  long periods = 0;
  if (opt.runup_periods > 0) {
    RunOptions ro;
    ro.periods = opt.runup_periods;
    ro.ramp_time = opt.runup_periods * sys.period();
    TerminalState s = prop.run(v, ro);
    v = {std::move(s.yT), std::move(s.ytT)};
    periods += opt.runup_periods;
  }
  detail::impose_control(sys, v);

  TerminalState state = prop.run(v);
  ControlPair g = eval_gradient(prop, v, state);
  periods += 2;
  ControlPair r = riesz_representative(sys, g, opt.riesz_rtol);
  ControlPair d = r;
  const double rr0 = energy_dot(sys, r, r);
  double rr = rr0;

  auto record = [&](int it, double rcg) {
    IterationRecord rec;
    rec.iter = it;
    rec.residual_cg = rcg;
    rec.misfit_J = misfit(energy_misfit(sys, state, v));
    if (opt.reference) rec.residual_H = helmholtz_residual(*opt.reference, detail::unfiltered(sys, v));
    rec.cumulative_periods = periods;
    rec.wall_time = detail::seconds_since(t0);
    res.history.push_back(rec);
    if (opt.callback) opt.callback(rec);
  };
  record(0, rr0 > 0.0 ? 1.0 : 0.0);

  RunOptions hom;
  hom.forcing = false;
  if (rr0 == 0.0 || (opt.misfit_tol > 0.0 && res.history.back().misfit_J <= opt.misfit_tol)) {
    res.converged = true;
  } else {
    for (int it = 1; it <= opt.max_iter; ++it) {
      TerminalState sd = prop.run(d, hom);
      ControlPair gd = eval_gradient(prop, d, sd);
      periods += 2;
      ControlPair gtd = riesz_representative(sys, gd, opt.riesz_rtol);
      const double den = energy_dot(sys, gtd, d);
      const double alpha = rr / den;
      axpy(-alpha, d.v0, v.v0);
      axpy(-alpha, d.v1, v.v1);
      axpy(-alpha, sd.yT, state.yT);
      axpy(-alpha, sd.ytT, state.ytT);
      axpy(-alpha, gtd.v0, r.v0);
      axpy(-alpha, gtd.v1, r.v1);
      const double rr_new = energy_dot(sys, r, r);
      const double rcg = cg_residual(rr_new, rr0);
      res.iterations = it;
      record(it, rcg);
      if (rcg <= opt.tol || (opt.misfit_tol > 0.0 && res.history.back().misfit_J <= opt.misfit_tol)) {
        res.converged = true;
        break;
      }
      const double beta = rr_new / rr;
      xpby(r.v0, beta, d.v0);
      xpby(r.v1, beta, d.v1);
      rr = rr_new;
    }
  }

  if (opt.filter) {
    TimeFilter filt(n, prop.steps_per_period(), sys.omega);
    RunOptions ro;
    ro.filter = &filt;
    prop.run(v, ro);
    periods += 1;
    res.u = filter_second_order(filt);
    if (opt.correct_shift) {
      if (!sys.has_dirichlet && !sys.has_sommerfeld) {
        res.eta = eta_neumann(sys, res.u).eta;
        res.u = apply_eta(res.u, res.eta, sys.omega);
      } else if (!sys.has_dirichlet) {
        res.lambda = lambda_soundhard(sys, res.u);
        res.u = subtract_constant(res.u, res.lambda);
      }
    }
  } else {
    res.u = detail::unfiltered(sys, v);
    if (opt.correct_shift && !sys.has_dirichlet && sys.has_sommerfeld) {
      res.lambda = lambda_soundhard(sys, res.u);
      res.u = subtract_constant(res.u, res.lambda);
    }
  }
  res.control = std::move(v);
  res.total_periods = periods;
  return res;
}

struct DoNothingResult {
  ComplexField u;               // w(T_end) + (i / omega) w_t(T_end)
  std::vector<double> misfit;   // one entry per period, from consecutive period states
  bool misfit_absolute = false;
  int steps_per_period = 0;
};

/// Long-time integration from rest; the misfit of period l is the energy norm of the
/// change of (w, w_t) over that period, which equals sqrt(J) of the state at its start
/// once the sources are fully ramped up.
inline DoNothingResult do_nothing_solve(const WaveSystem& sys, Scheme scheme, int periods, int ramp_periods = 0,
                                        int steps_per_period = 0, int min_steps = 0) {
  if (periods < 1) throw std::invalid_argument("do-nothing: at least one period required");
  WavePropagator prop(sys, scheme, steps_per_period, min_steps);
  const int n = sys.size();
  const int N = prop.steps_per_period();
  DoNothingResult res;
  res.steps_per_period = N;
  res.misfit_absolute = !(sys.source_norm > 0.0);
  ControlPair prev{Vector(n, 0.0), Vector(n, 0.0)};
  RunOptions ro;
  ro.periods = periods;
  ro.ramp_time = ramp_periods * sys.period();
  ro.observer = [&](const StepView& sv) {
    if (sv.step == 0 || sv.step % N != 0) return;
    const TerminalState cur{Vector(sv.y.begin(), sv.y.end()), Vector(sv.yt.begin(), sv.yt.end())};
    const double J = energy_misfit(sys, cur, prev);
    res.misfit.push_back(res.misfit_absolute ? std::sqrt(J) : periodicity_misfit(J, sys.source_norm));
    prev = {cur.yT, cur.ytT};
  };
  TerminalState s = prop.run(prev, ro);
  res.u = detail::unfiltered(sys, {s.yT, s.ytT});
  return res;
}

// ---------------------------------------------------------------------------
// First-order path on the 1D HDG discretization.

struct MixedOptions {
  double tol = 1e-8;
  int max_iter = 1000;
  int steps_per_period = 0;
  int min_steps = 0;
  std::function<void(const IterationRecord&)> callback;
};

struct MixedResult {
  DgField u_filtered;       // degree r, from the filtered v
  DgField u_postprocessed;  // degree r+1, post-processing of the filtered (v, v_hat)
  DgField u_reconstructed;  // degree r, from the control (p0, v0)
  Vector control;
  std::vector<IterationRecord> history;
  bool converged = false;
  int iterations = 0;
  bool misfit_absolute = false;
  int steps_per_period = 0;
  double dt = 0.0;
};

/// J^(X0) = 0.5 |X(T) - X0|_M^2.
inline double mixed_J(const HdgPropagator& prop, const Vector& X0) {
  const Vector XT = prop.run(X0);
  Vector e(XT.size());
  for (std::size_t i = 0; i < e.size(); ++i) e[i] = XT[i] - X0[i];
  return prop.op().energy(e);
}

/// Gradient of J^ in the M inner product, from the mismatch e = X(T) - X0 of the
/// same control: Sigma S Sigma e - e.
inline Vector mixed_gradient(const HdgPropagator& prop, const Vector& e) {
  Vector g = prop.adjoint(e);
  axpy(-1.0, e, g);
  return g;
}

inline MixedResult cmcg_solve_mixed(const HdgOperator& op, const HelmholtzProblem& prob, const MixedOptions& opt) {
  const auto t0 = std::chrono::steady_clock::now();
  HdgPropagator prop(op, opt.steps_per_period, opt.min_steps);
  const int n = op.size();
  const Vector& M = op.mass();
  MixedResult res;
  res.steps_per_period = prop.steps_per_period();
  res.dt = prop.dt();
  const double snorm = op.source_norm();
  res.misfit_absolute = !(snorm > 0.0);
  auto misfit = [&](double J) { return res.misfit_absolute ? std::sqrt(std::max(J, 0.0)) : periodicity_misfit(J, snorm); };
  auto mdot = [&](const Vector& a, const Vector& b) { return weighted_dot(M, a, b); };

  Vector X(n, 0.0);
  Vector e = prop.run(X);  // e = X(T) - X0 tracked along the iteration
  long periods = 1;
  Vector r = mixed_gradient(prop, e);
  periods += 1;
  Vector d = r;
  const double rr0 = mdot(r, r);
  double rr = rr0;
  auto record = [&](int it, double rcg) {
    IterationRecord rec;
    rec.iter = it;
    rec.residual_cg = rcg;
    rec.misfit_J = misfit(op.energy(e));
    rec.cumulative_periods = periods;
    rec.wall_time = detail::seconds_since(t0);
    res.history.push_back(rec);
    if (opt.callback) opt.callback(rec);
  };
  record(0, rr0 > 0.0 ? 1.0 : 0.0);

  HdgPropagator::Options hom;
  hom.forcing = false;
  if (rr0 == 0.0) {
    res.converged = true;
  } else {
    for (int it = 1; it <= opt.max_iter; ++it) {
      Vector ed = prop.run(d, hom);
      axpy(-1.0, d, ed);
      Vector gd = mixed_gradient(prop, ed);
      periods += 2;
      const double alpha = rr / mdot(gd, d);
      axpy(-alpha, d, X);
      axpy(-alpha, ed, e);
      axpy(-alpha, gd, r);
      const double rr_new = mdot(r, r);
      const double rcg = cg_residual(rr_new, rr0);
      res.iterations = it;
      record(it, rcg);
      if (rcg <= opt.tol) {
        res.converged = true;
        break;
      }
      xpby(r, rr_new / rr, d);
      rr = rr_new;
    }
  }

  VelocityFilter fv(op.half(), prop.steps_per_period(), op.omega());
  VelocityFilter fh(op.num_faces(), prop.steps_per_period(), op.omega());
  HdgPropagator::Options ro;
  ro.filter_v = &fv;
  ro.filter_vhat = &fh;
  prop.run(X, ro);
  const ComplexField uv = filter_first_order(fv);
  const ComplexField uh = filter_first_order(fh);
  res.u_filtered.degree = op.order();
  res.u_filtered.coef = uv;
  res.u_postprocessed = post_process(op, uv, uh).vstar;
  res.u_reconstructed = reconstruct_from_control(op, prob, X);
  res.control = std::move(X);
  return res;
}

}  // namespace cmcg
