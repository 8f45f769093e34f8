#pragma once

#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>

#include "fem.hpp"
#include "linalg.hpp"

namespace cmcg {

/// Trapezoidal accumulation over one period of (1/T) int (y + (i/omega) y_t) e^{i omega t} dt.
/// Call add() for n = 0..steps with the state at t_n = n T / steps.
struct TimeFilter {
  ComplexField acc;
  int steps = 0;
  double omega = 1.0;
  int samples = 0;

  TimeFilter() = default;
  TimeFilter(std::size_t n, int steps_per_period, double w) : acc(n), steps(steps_per_period), omega(w) {}

  void add(int n, std::span<const double> y, std::span<const double> yt) {
    const double w = ((n == 0 || n == steps) ? 0.5 : 1.0) / steps;
    const double th = 2.0 * std::numbers::pi * static_cast<double>(n % steps) / steps;
    const double c = w * std::cos(th), s = w * std::sin(th);
    for (std::size_t i = 0; i < y.size(); ++i) {
      const double z = yt[i] / omega;
      acc.re[i] += c * y[i] - s * z;
      acc.im[i] += s * y[i] + c * z;
    }
    ++samples;
  }

  bool complete() const { return steps > 0 && samples == steps + 1; }
};

/// Trapezoidal accumulation of (2i / (T omega)) int v e^{i omega t} dt for the first-order form.
struct VelocityFilter {
  ComplexField acc;
  int steps = 0;
  double omega = 1.0;
  int samples = 0;

  VelocityFilter() = default;
  VelocityFilter(std::size_t n, int steps_per_period, double w) : acc(n), steps(steps_per_period), omega(w) {}

  void add(int n, std::span<const double> v) {
    const double w = ((n == 0 || n == steps) ? 0.5 : 1.0) / steps * 2.0 / omega;
    const double th = 2.0 * std::numbers::pi * static_cast<double>(n % steps) / steps;
    // i e^{i th} = -sin th + i cos th
    const double c = w * std::cos(th), s = w * std::sin(th);
    for (std::size_t i = 0; i < v.size(); ++i) {
      acc.re[i] -= s * v[i];
      acc.im[i] += c * v[i];
    }
    ++samples;
  }

  bool complete() const { return steps > 0 && samples == steps + 1; }
};

inline ComplexField filter_second_order(const TimeFilter& f) {
  if (!f.complete()) throw std::logic_error("filter accumulator does not cover a full period");
  return f.acc;
}

inline ComplexField filter_first_order(const VelocityFilter& f) {
  if (!f.complete()) throw std::logic_error("velocity filter accumulator does not cover a full period");
  return f.acc;
}

struct EtaEstimate {
  double eta = 0.0;
  double imaginary_residual = 0.0;  // should vanish up to discretization error
};

/// Linear-mode coefficient for pure Neumann problems from the discrete
/// compatibility condition  1'(F + G) + omega^2 1' m u = 0  applied to
/// u = y_hat + i eta / omega.
inline EtaEstimate eta_neumann(const WaveSystem& sys, const ComplexField& y_hat) {
  if (sys.has_dirichlet || sys.has_sommerfeld) return {};
  const double w2 = sys.omega * sys.omega;
  const double mass = sum(sys.m_lumped);
  if (!(mass > 0.0)) throw std::invalid_argument("eta_neumann: zero wave number norm");
  const double num_re = sum(sys.F_re) + sum(sys.G_re) + w2 * dot(sys.m_lumped, y_hat.re);
  const double num_im = sum(sys.F_im) + sum(sys.G_im) + w2 * dot(sys.m_lumped, y_hat.im);
  // i eta / omega = -(num) / (w2 mass)
  const Complex z = -Complex(num_re, num_im) / (w2 * mass);
  return {sys.omega * z.imag(), -sys.omega * z.real()};
}

/// u = y_hat + i eta / omega.
inline ComplexField apply_eta(const ComplexField& y_hat, double eta, double omega) {
  ComplexField u = y_hat;
  for (double& v : u.im) v += eta / omega;
  return u;
}

/// Constant shift of a candidate solution for sound-hard problems
/// (Sommerfeld boundary present, no Dirichlet boundary).
inline Complex lambda_soundhard(const WaveSystem& sys, const ComplexField& v) {
  if (sys.has_dirichlet) return {};
  if (!sys.has_sommerfeld) throw std::invalid_argument("lambda_soundhard: requires a Sommerfeld boundary");
  const double w = sys.omega;
  const Complex num = Complex(w * w * dot(sys.m_lumped, v.re), w * w * dot(sys.m_lumped, v.im)) +
                      Complex(0.0, w) * Complex(dot(sys.b_lumped, v.re), dot(sys.b_lumped, v.im)) +
                      Complex(sum(sys.F_re) + sum(sys.G_re), sum(sys.F_im) + sum(sys.G_im));
  const Complex den(w * w * sum(sys.m_lumped), w * sum(sys.b_lumped));
  return num / den;
}

inline ComplexField subtract_constant(const ComplexField& v, Complex c) {
  ComplexField u = v;
  for (std::size_t i = 0; i < u.size(); ++i) {
    u.re[i] -= c.real();
    u.im[i] -= c.imag();
  }
  return u;
}

}  // namespace cmcg
