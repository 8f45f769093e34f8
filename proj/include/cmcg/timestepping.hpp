#pragma once

#include <cmath>
#include <functional>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fem.hpp"
#include "filtering.hpp"
#include "linalg.hpp"

namespace cmcg {

enum class Scheme { Leapfrog, RK4 };

inline const char* scheme_name(Scheme s) { return s == Scheme::Leapfrog ? "leapfrog" : "rk4"; }

inline Scheme scheme_from_string(const std::string& s) {
  if (s == "leapfrog") return Scheme::Leapfrog;
  if (s == "rk4") return Scheme::RK4;
  throw std::invalid_argument("unknown time scheme '" + s + "' (expected leapfrog or rk4)");
}

class CflViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Initial displacement and velocity.
struct ControlPair {
  Vector v0, v1;
};

struct TerminalState {
  Vector yT, ytT;
};

/// Smooth ramp (2 - sin s) sin s with s = pi t / (2 t_ramp); 1 after t_ramp.
inline double runup_factor(double t, double t_ramp) {
  if (t_ramp <= 0.0 || t >= t_ramp) return 1.0;
  const double s = std::numbers::pi * t / (2.0 * t_ramp);
  return (2.0 - std::sin(s)) * std::sin(s);
}

inline double runup_factor_derivative(double t, double t_ramp) {
  if (t_ramp <= 0.0 || t >= t_ramp) return 0.0;
  const double s = std::numbers::pi * t / (2.0 * t_ramp);
  return std::numbers::pi / (2.0 * t_ramp) * std::cos(s) * (2.0 - 2.0 * std::sin(s));
}

/// Data passed to step observers. y_next is only set by leapfrog.
struct StepView {
  long step;
  double t;
  std::span<const double> y, yt, y_next;
};

struct RunOptions {
  int periods = 1;
  bool forcing = true;       // affine run with sources and boundary data, else homogeneous
  double ramp_time = 0.0;    // smooth run-up of all sources
  TimeFilter* filter = nullptr;  // accumulated over the final period
  std::function<void(const StepView&)> observer;
};

/// Largest eigenvalue of m^{-1}K restricted to free DOFs.
inline double max_frequency_squared(const WaveSystem& sys, int iterations = 30) {
  return max_generalized_eigenvalue([&](std::span<const double> x, std::span<double> y) { sys.K.multiply(x, y); },
                                    sys.m_lumped, iterations, sys.constrained);
}

inline double stability_limit(Scheme s, double lambda_max) {
  return (s == Scheme::Leapfrog ? 2.0 : 2.8) / std::sqrt(lambda_max);
}

inline double safety_factor(Scheme s) { return s == Scheme::Leapfrog ? 0.9 : 0.7; }

/// Time stepping for  m y'' + b y' + K y = F(t)  with diagonal m, b over
/// one period T = 2 pi / omega split into N equal steps.
class WavePropagator {
 public:
  /// steps_per_period = 0 selects the CFL count; `min_steps` is a lower bound on it.
  WavePropagator(const WaveSystem& sys, Scheme scheme, int steps_per_period = 0, int min_steps = 0)
      : sys_(sys), scheme_(scheme) {
    const int n = sys.size();
    lambda_max_ = max_frequency_squared(sys);
    const double T = sys.period();
    const double dt_max = safety_factor(scheme) * stability_limit(scheme, lambda_max_);
    if (steps_per_period > 0) {
      if (T / steps_per_period > dt_max)
        throw CflViolation("time step T/" + std::to_string(steps_per_period) + " = " + std::to_string(T / steps_per_period) +
                           " exceeds the stable limit " + std::to_string(dt_max) + " for " + scheme_name(scheme) +
                           "; use at least " + std::to_string(static_cast<int>(std::ceil(T / dt_max))) + " steps per period");
      N_ = steps_per_period;
    } else {
      N_ = std::max(static_cast<int>(std::ceil(T / dt_max)), min_steps);
    }
    dt_ = T / N_;
    inv_m_.resize(n);
    for (int i = 0; i < n; ++i) inv_m_[i] = 1.0 / sys.m_lumped[i];
    dplus_inv_.resize(n);
    dminus_.resize(n);
    for (int i = 0; i < n; ++i) {
      dplus_inv_[i] = 1.0 / (sys.m_lumped[i] / (dt_ * dt_) + sys.b_lumped[i] / (2 * dt_));
      dminus_[i] = sys.m_lumped[i] / (dt_ * dt_) - sys.b_lumped[i] / (2 * dt_);
    }
    load_re_.resize(n);
    load_im_.resize(n);
    for (int i = 0; i < n; ++i) {
      load_re_[i] = sys.F_re[i] + sys.G_re[i];
      load_im_[i] = sys.F_im[i] + sys.G_im[i];
    }
  }

  int steps_per_period() const { return N_; }
  double dt() const { return dt_; }
  double lambda_max() const { return lambda_max_; }
  Scheme scheme() const { return scheme_; }
  const WaveSystem& system() const { return sys_; }

  TerminalState run(const ControlPair& start, const RunOptions& opt = {}) const {
    return scheme_ == Scheme::Leapfrog ? run_leapfrog(start, opt) : run_rk4(start, opt);
  }

  /// Transpose of the homogeneous one-period map (v0, v1) -> (yT, ytT):
  /// given cotangents (abar, cbar) of (yT, ytT), returns those of (v0, v1).
  ControlPair transpose(const Vector& abar, const Vector& cbar) const {
    return scheme_ == Scheme::Leapfrog ? transpose_leapfrog(abar, cbar) : transpose_rk4(abar, cbar);
  }

  /// Discrete energy 0.5 y_t' m y_t + 0.5 y' K y.
  double energy(std::span<const double> y, std::span<const double> yt) const {
    Vector Ky = sys_.K * y;
    return 0.5 * weighted_dot(sys_.m_lumped, yt, yt) + 0.5 * dot(y, Ky);
  }

  /// Leapfrog energy between steps: 0.5 |(y1 - y0)/dt|_m^2 + 0.5 y1' K y0.
  /// Conserved without damping and non-increasing with it.
  double staggered_energy(std::span<const double> y0, std::span<const double> y1) const {
    const std::size_t n = y0.size();
    Vector d(n);
    for (std::size_t i = 0; i < n; ++i) d[i] = (y1[i] - y0[i]) / dt_;
    Vector Ky = sys_.K * y0;
    return 0.5 * weighted_dot(sys_.m_lumped, d, d) + 0.5 * dot(y1, Ky);
  }

 private:
  const WaveSystem& sys_;
  Scheme scheme_;
  int N_ = 0;
  double dt_ = 0.0;
  double lambda_max_ = 0.0;
  Vector inv_m_, dplus_inv_, dminus_, load_re_, load_im_;

  double phase(long step, double frac) const {
    return 2.0 * std::numbers::pi * (static_cast<double>(step % N_) + frac) / N_;
  }

  /// load = theta(t) (L_re cos + L_im sin) at step + frac.
  void load(long step, double frac, double ramp, std::span<double> out) const {
    const double t = (static_cast<double>(step) + frac) * dt_;
    const double th = runup_factor(t, ramp);
    const double c = th * std::cos(phase(step, frac)), s = th * std::sin(phase(step, frac));
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = c * load_re_[i] + s * load_im_[i];
  }

  /// Overwrites constrained entries with Dirichlet data (value and/or rate) or zero.
  void impose(long step, double frac, const RunOptions& opt, std::span<double> y, std::span<double> yt) const {
    if (!sys_.has_dirichlet) return;
    const double t = (static_cast<double>(step) + frac) * dt_;
    const double w = sys_.omega;
    const double th = opt.forcing ? runup_factor(t, opt.ramp_time) : 0.0;
    const double dth = opt.forcing ? runup_factor_derivative(t, opt.ramp_time) : 0.0;
    const double c = std::cos(phase(step, frac)), s = std::sin(phase(step, frac));
    for (std::size_t i = 0; i < sys_.constrained.size(); ++i) {
      if (!sys_.constrained[i]) continue;
      const double g = sys_.gD_re[i] * c + sys_.gD_im[i] * s;
      const double dg = w * (-sys_.gD_re[i] * s + sys_.gD_im[i] * c);
      if (!y.empty()) y[i] = th * g;
      if (!yt.empty()) yt[i] = dth * g + th * dg;
    }
  }

  TerminalState run_leapfrog(const ControlPair& start, const RunOptions& opt) const {
    const int n = sys_.size();
    const long total = static_cast<long>(opt.periods) * N_;
    const long filter_from = total - N_;
    Vector yp = start.v0, yc(n), yn(n), v = start.v1, f(n, 0.0), Ky(n), yt(n);
    impose(0, 0.0, opt, yp, v);
    sys_.K.multiply(yp, Ky);
    if (opt.forcing) load(0, 0.0, opt.ramp_time, f);
    const double h2 = 0.5 * dt_ * dt_;
    for (int i = 0; i < n; ++i) yc[i] = yp[i] + dt_ * v[i] + h2 * inv_m_[i] * (f[i] - Ky[i] - sys_.b_lumped[i] * v[i]);
    impose(1, 0.0, opt, yc, {});
    if (!opt.forcing) apply_mask(sys_.constrained, yc);
    if (opt.filter && filter_from == 0) opt.filter->add(0, yp, v);
    if (opt.observer) opt.observer({0, 0.0, yp, v, yc});
    const double two_m = 2.0 / (dt_ * dt_);
    for (long k = 1; k <= total; ++k) {
      sys_.K.multiply(yc, Ky);
      if (opt.forcing) load(k, 0.0, opt.ramp_time, f);
      for (int i = 0; i < n; ++i)
        yn[i] = dplus_inv_[i] * (two_m * sys_.m_lumped[i] * yc[i] - Ky[i] - dminus_[i] * yp[i] + f[i]);
      impose(k + 1, 0.0, opt, yn, {});
      for (int i = 0; i < n; ++i) yt[i] = (yn[i] - yp[i]) / (2 * dt_);
      impose(k, 0.0, opt, {}, yt);
      if (!opt.forcing) {
        apply_mask(sys_.constrained, yn);
        apply_mask(sys_.constrained, yt);
      }
      if (opt.filter && k >= filter_from) opt.filter->add(static_cast<int>(k - filter_from), yc, yt);
      if (opt.observer) opt.observer({k, k * dt_, yc, yt, yn});
      std::swap(yp, yc);
      std::swap(yc, yn);
    }
    // yp now holds y^total.
    return {yp, yt};
  }

  /// Reverse sweep of the one-period leapfrog map.
  ControlPair transpose_leapfrog(const Vector& abar, const Vector& cbar) const {
    const int n = sys_.size();
    const auto& P = sys_.constrained;
    Vector acc_next(n), acc_cur(abar), acc_prev(n), z(n), Kz(n);
    for (int i = 0; i < n; ++i) {
      const double c = P[i] ? 0.0 : cbar[i] / (2 * dt_);
      acc_next[i] = c;
      acc_prev[i] = -c;
    }
    const double two_m = 2.0 / (dt_ * dt_);
    // acc_next, acc_cur, acc_prev hold cotangents of y^{n+1}, y^n, y^{n-1}.
    for (int step = N_; step >= 1; --step) {
      for (int i = 0; i < n; ++i) z[i] = P[i] ? 0.0 : dplus_inv_[i] * acc_next[i];
      sys_.K.multiply(z, Kz);
      for (int i = 0; i < n; ++i) {
        acc_cur[i] += two_m * sys_.m_lumped[i] * z[i] - Kz[i];
        acc_prev[i] -= dminus_[i] * z[i];
      }
      std::swap(acc_next, acc_cur);
      std::swap(acc_cur, acc_prev);
      std::fill(acc_prev.begin(), acc_prev.end(), 0.0);
    }
    // Now acc_next = cotangent of y^1 and acc_cur = cotangent of y^0.
    ControlPair out{Vector(n), Vector(n)};
    for (int i = 0; i < n; ++i) z[i] = P[i] ? 0.0 : acc_next[i];
    Vector mz(n);
    for (int i = 0; i < n; ++i) mz[i] = inv_m_[i] * z[i];
    sys_.K.multiply(mz, Kz);
    const double h2 = 0.5 * dt_ * dt_;
    for (int i = 0; i < n; ++i) {
      out.v0[i] = P[i] ? 0.0 : acc_cur[i] + z[i] - h2 * Kz[i];
      out.v1[i] = P[i] ? 0.0 : dt_ * z[i] - h2 * sys_.b_lumped[i] * mz[i];
    }
    return out;
  }

  /// One RK4 step of (u, w) from step index k.
  void rk4_step(long k, const RunOptions& opt, Vector& u, Vector& w, std::vector<Vector>& work) const {
    const int n = sys_.size();
    Vector& us = work[0];
    Vector& ws = work[1];
    Vector& f = work[2];
    Vector& Ku = work[3];
    Vector& du = work[4];
    Vector& dw = work[5];
    Vector& su = work[6];
    Vector& sw = work[7];
    static constexpr double c[4] = {0.0, 0.5, 0.5, 1.0};
    static constexpr double bw[4] = {1.0 / 6, 1.0 / 3, 1.0 / 3, 1.0 / 6};
    std::fill(su.begin(), su.end(), 0.0);
    std::fill(sw.begin(), sw.end(), 0.0);
    for (int s = 0; s < 4; ++s) {
      if (s == 0) {
        us = u;
        ws = w;
      } else {
        for (int i = 0; i < n; ++i) {
          us[i] = u[i] + c[s] * dt_ * du[i];
          ws[i] = w[i] + c[s] * dt_ * dw[i];
        }
      }
      impose(k, c[s], opt, us, ws);
      if (!opt.forcing) {
        apply_mask(sys_.constrained, us);
        apply_mask(sys_.constrained, ws);
      }
      sys_.K.multiply(us, Ku);
      if (opt.forcing) load(k, c[s], opt.ramp_time, f);
      for (int i = 0; i < n; ++i) {
        du[i] = ws[i];
        dw[i] = sys_.constrained[i] ? 0.0 : inv_m_[i] * ((opt.forcing ? f[i] : 0.0) - Ku[i] - sys_.b_lumped[i] * ws[i]);
        su[i] += bw[s] * du[i];
        sw[i] += bw[s] * dw[i];
      }
    }
    for (int i = 0; i < n; ++i) {
      u[i] += dt_ * su[i];
      w[i] += dt_ * sw[i];
    }
    impose(k + 1, 0.0, opt, u, w);
    if (!opt.forcing) {
      apply_mask(sys_.constrained, u);
      apply_mask(sys_.constrained, w);
    }
  }

  TerminalState run_rk4(const ControlPair& start, const RunOptions& opt) const {
    const int n = sys_.size();
    const long total = static_cast<long>(opt.periods) * N_;
    const long filter_from = total - N_;
    Vector u = start.v0, w = start.v1;
    impose(0, 0.0, opt, u, w);
    if (!opt.forcing) {
      apply_mask(sys_.constrained, u);
      apply_mask(sys_.constrained, w);
    }
    std::vector<Vector> work(8, Vector(n, 0.0));
    for (long k = 0; k <= total; ++k) {
      if (opt.filter && k >= filter_from) opt.filter->add(static_cast<int>(k - filter_from), u, w);
      if (opt.observer) opt.observer({k, k * dt_, u, w, {}});
      if (k < total) rk4_step(k, opt, u, w, work);
    }
    return {u, w};
  }

  /// The transposed RK4 map equals Q^{-1} S Q with Q(w1, w2) = (m^{-1} w2, m^{-1}(w1 - b m^{-1} w2)).
  ControlPair transpose_rk4(const Vector& abar, const Vector& cbar) const {
    const int n = sys_.size();
    ControlPair q{Vector(n), Vector(n)};
    for (int i = 0; i < n; ++i) {
      q.v0[i] = inv_m_[i] * cbar[i];
      q.v1[i] = inv_m_[i] * (abar[i] - sys_.b_lumped[i] * q.v0[i]);
    }
    RunOptions hom;
    hom.forcing = false;
    TerminalState s = run_rk4(q, hom);
    ControlPair out{Vector(n), Vector(n)};
    for (int i = 0; i < n; ++i) {
      if (sys_.constrained[i]) continue;
      out.v0[i] = sys_.m_lumped[i] * s.ytT[i] + sys_.b_lumped[i] * s.yT[i];
      out.v1[i] = sys_.m_lumped[i] * s.yT[i];
    }
    return out;
  }
};

}  // namespace cmcg
