#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <numbers>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "filtering.hpp"
#include "linalg.hpp"
#include "mesh.hpp"
#include "problem.hpp"
#include "quadrature.hpp"
#include "timestepping.hpp"

namespace cmcg {

enum class HdgMassCoefficient { InvC, InvC2 };

/// Orthonormal Legendre values psi_j(x) on an element of length h, at xi in [-1, 1].
inline std::vector<double> legendre_orthonormal(int degree, double xi, double h) {
  std::vector<double> P(degree + 1);
  P[0] = 1.0;
  if (degree >= 1) P[1] = xi;
  for (int k = 2; k <= degree; ++k) P[k] = ((2.0 * k - 1.0) * xi * P[k - 1] - (k - 1.0) * P[k - 2]) / k;
  for (int k = 0; k <= degree; ++k) P[k] *= std::sqrt((2.0 * k + 1.0) / h);
  return P;
}

/// Element polynomials of a fixed degree, stored as orthonormal Legendre
/// coefficients, cell by cell.
struct DgField {
  int degree = 0;
  ComplexField coef;
  int block() const { return degree + 1; }
};

/// Semi-discrete first-order system  M X' = L X + F(t)  of the HDG scheme on
/// an interval, with X = (p, v) and the traces eliminated face by face.
/// Layout: X = [p (cell-major blocks of r+1); v (same)].
class HdgOperator {
 public:
  HdgOperator(const HelmholtzProblem& prob, int order, HdgMassCoefficient mc = HdgMassCoefficient::InvC2)
      : mesh_(prob.mesh), r_(order), omega_(prob.omega) {
    prob.validate();
    const Mesh& m = *mesh_;
    if (m.dim != 1) throw std::invalid_argument("HDG discretization requires a 1D mesh");
    if (order < 1 || order > 3) throw std::invalid_argument("HDG order must be 1, 2 or 3");
    nc_ = m.num_cells();
    nb_ = r_ + 1;
    // Cells must be ordered left to right and chained.
    for (int c = 0; c + 1 < nc_; ++c)
      if (m.cells[c][1] != m.cells[c + 1][0]) throw std::invalid_argument("HDG requires cells ordered left to right");
    h_.resize(nc_);
    inv_c_.resize(nc_);
    kappa_.resize(nc_);
    for (int c = 0; c < nc_; ++c) {
      h_[c] = m.cell_measure(c);
      const double cs = prob.speed(c);
      inv_c_[c] = 1.0 / cs;
      kappa_[c] = mc == HdgMassCoefficient::InvC2 ? 1.0 / (cs * cs) : 1.0 / cs;
    }
    tau_.resize(nc_ + 1);
    tau_[0] = inv_c_[0];
    tau_[nc_] = inv_c_[nc_ - 1];
    for (int f = 1; f < nc_; ++f) tau_[f] = 0.5 * (inv_c_[f - 1] + inv_c_[f]);

    Dref_.assign(nb_ * nb_, 0.0);
    for (int i = 0; i < nb_; ++i)
      for (int j = i + 1; j < nb_; ++j)
        if ((i + j) % 2 == 1) Dref_[i * nb_ + j] = 2.0 * std::sqrt((2.0 * i + 1.0) * (2.0 * j + 1.0));

    const double xl = m.vertices[m.cells[0][0]][0], xr = m.vertices[m.cells[nc_ - 1][1]][0];
    left_ = boundary_data(prob, m.vertices[m.cells[0][0]], xl, {-1.0, 0.0});
    right_ = boundary_data(prob, m.vertices[m.cells[nc_ - 1][1]], xr, {1.0, 0.0});

    f_re_.assign(nc_ * nb_, 0.0);
    f_im_.assign(nc_ * nb_, 0.0);
    double f_norm2 = 0.0;
    if (prob.f) {
      const Rule1D g = gauss_legendre(r_ + 4);
      for (int c = 0; c < nc_; ++c) {
        const double x0 = m.vertices[m.cells[c][0]][0];
        for (std::size_t q = 0; q < g.x.size(); ++q) {
          const auto psi = legendre_orthonormal(r_, 2.0 * g.x[q] - 1.0, h_[c]);
          const Complex fv = prob.f({x0 + h_[c] * g.x[q], 0.0});
          f_norm2 += g.w[q] * h_[c] * std::norm(fv);
          for (int i = 0; i < nb_; ++i) {
            f_re_[c * nb_ + i] += g.w[q] * h_[c] * fv.real() * psi[i];
            f_im_[c * nb_ + i] += g.w[q] * h_[c] * fv.imag() * psi[i];
          }
        }
      }
    }
    source_norm_ = std::sqrt(f_norm2);
    for (const BoundarySide* s : {&left_, &right_})
      if (s->tag == BoundaryTag::Sommerfeld) source_norm_ += std::abs(s->g);
    mass_.assign(size(), 1.0);
    for (int c = 0; c < nc_; ++c)
      for (int i = 0; i < nb_; ++i) mass_[vi(c, i)] = kappa_[c];
  }

  int order() const { return r_; }
  int num_cells() const { return nc_; }
  int block() const { return nb_; }
  int num_faces() const { return nc_ + 1; }
  int size() const { return 2 * nc_ * nb_; }
  int half() const { return nc_ * nb_; }
  double omega() const { return omega_; }
  double period() const { return 2.0 * std::numbers::pi / omega_; }
  const Vector& mass() const { return mass_; }
  /// ||f||_L2 + ||g_S|| over the Sommerfeld end points.
  double source_norm() const { return source_norm_; }
  const std::vector<double>& tau() const { return tau_; }
  double cell_size(int c) const { return h_[c]; }
  double kappa(int c) const { return kappa_[c]; }
  double inv_speed(int c) const { return inv_c_[c]; }
  const Mesh& mesh() const { return *mesh_; }
  bool has_dirichlet() const { return left_.tag == BoundaryTag::Dirichlet || right_.tag == BoundaryTag::Dirichlet; }

  int pi(int c, int i) const { return c * nb_ + i; }
  int vi(int c, int i) const { return nc_ * nb_ + c * nb_ + i; }

  /// Element-matrix entry (psi_j', psi_i) on cell c.
  double D(int c, int i, int j) const { return Dref_[i * nb_ + j] / h_[c]; }

  double psi_right(int c, int i) const { return std::sqrt((2.0 * i + 1.0) / h_[c]); }
  double psi_left(int c, int i) const { return (i % 2 ? -1.0 : 1.0) * std::sqrt((2.0 * i + 1.0) / h_[c]); }

  double eval_right(std::span<const double> X, int offset, int c) const {
    double s = 0.0;
    for (int i = 0; i < nb_; ++i) s += X[offset + c * nb_ + i] * psi_right(c, i);
    return s;
  }
  double eval_left(std::span<const double> X, int offset, int c) const {
    double s = 0.0;
    for (int i = 0; i < nb_; ++i) s += X[offset + c * nb_ + i] * psi_left(c, i);
    return s;
  }

  /// Boundary data g(t) = Re{g e^{-i w t}} at phase (cos, sin) = (cs, sn).
  struct Phase {
    double cs = 1.0, sn = 0.0;
    bool forcing = false;
  };

  /// Face traces v_hat (size num_faces()).
  void resolve_trace(std::span<const double> X, const Phase& ph, std::span<double> vhat) const {
    const int off_p = 0, off_v = half();
    for (int f = 1; f < nc_; ++f) {
      const int a = f - 1, b = f;
      const double pA = eval_right(X, off_p, a), vA = eval_right(X, off_v, a);
      const double pB = eval_left(X, off_p, b), vB = eval_left(X, off_v, b);
      const double ta = tau_[f], tb = tau_[f];
      vhat[f] = (ta * vA + tb * vB - pA * 1.0 - pB * (-1.0)) / (ta + tb);
    }
    vhat[0] = boundary_trace(left_, eval_left(X, off_p, 0) * -1.0, eval_left(X, off_v, 0), tau_[0], inv_c_[0], ph);
    vhat[nc_] = boundary_trace(right_, eval_right(X, off_p, nc_ - 1), eval_right(X, off_v, nc_ - 1), tau_[nc_],
                               inv_c_[nc_ - 1], ph);
  }

  /// Normal numerical flux p_hat . n seen from cell c at its left (side 0) or right (side 1) face.
  double flux(std::span<const double> X, std::span<const double> vhat, int c, int side) const {
    const int f = c + side;
    if (side == 1) return eval_right(X, 0, c) - tau_[f] * (eval_right(X, half(), c) - vhat[f]);
    return -eval_left(X, 0, c) - tau_[f] * (eval_left(X, half(), c) - vhat[f]);
  }

  /// out = L X + F(t), i.e. M X'.
  void apply(std::span<const double> X, const Phase& ph, std::span<double> out, std::span<double> vhat) const {
    resolve_trace(X, ph, vhat);
    for (int c = 0; c < nc_; ++c) {
      const double qR = flux(X, vhat, c, 1), qL = flux(X, vhat, c, 0);
      for (int i = 0; i < nb_; ++i) {
        double sp = 0.0, sv = 0.0;
        for (int j = 0; j < nb_; ++j) {
          sp -= D(c, j, i) * X[vi(c, j)];
          sv -= D(c, j, i) * X[pi(c, j)];
        }
        sp += vhat[c + 1] * psi_right(c, i) - vhat[c] * psi_left(c, i);
        sv += qR * psi_right(c, i) + qL * psi_left(c, i);
        if (ph.forcing) sv += f_re_[c * nb_ + i] * ph.cs + f_im_[c * nb_ + i] * ph.sn;
        out[pi(c, i)] = sp;
        out[vi(c, i)] = sv;
      }
    }
  }

  /// Sigma = diag(-I, I): flips the sign of the flux block.
  void flip(std::span<double> X) const {
    for (int k = 0; k < half(); ++k) X[k] = -X[k];
  }

  double energy(std::span<const double> X) const { return 0.5 * weighted_dot(mass_, X, X); }

 private:
  struct BoundarySide {
    BoundaryTag tag = BoundaryTag::Neumann;
    Complex g{};
  };

  static BoundarySide boundary_data(const HelmholtzProblem& prob, const Point& x, double, const Point& n) {
    const Mesh& m = *prob.mesh;
    BoundarySide s;
    bool found = false;
    for (const auto& bf : m.boundary) {
      if (m.vertices[bf.vertices[0]] != x) continue;
      s.tag = bf.tag;
      found = true;
    }
    if (!found) throw std::invalid_argument("HDG: boundary vertex without tag");
    if (s.tag == BoundaryTag::Dirichlet && prob.g_dirichlet) s.g = prob.g_dirichlet(x);
    if (s.tag == BoundaryTag::Neumann && prob.g_neumann) s.g = prob.g_neumann(x, n);
    if (s.tag == BoundaryTag::Sommerfeld && prob.g_sommerfeld) s.g = prob.g_sommerfeld(x, n);
    return s;
  }

  double boundary_trace(const BoundarySide& s, double pn, double v, double tau, double inv_c, const Phase& ph) const {
    double g = 0.0;
    if (ph.forcing) {
      if (s.tag == BoundaryTag::Dirichlet) g = omega_ * (s.g.imag() * ph.cs - s.g.real() * ph.sn);
      else g = s.g.real() * ph.cs + s.g.imag() * ph.sn;
    }
    switch (s.tag) {
      case BoundaryTag::Dirichlet: return g;
      case BoundaryTag::Neumann: return v + (g - pn) / tau;
      case BoundaryTag::Sommerfeld: return (g - pn + tau * v) / (tau + inv_c);
    }
    return 0.0;
  }

  std::shared_ptr<const Mesh> mesh_;
  int r_, nc_ = 0, nb_ = 0;
  double omega_;
  double source_norm_ = 0.0;
  std::vector<double> h_, inv_c_, kappa_, tau_, Dref_;
  BoundarySide left_, right_;
  Vector f_re_, f_im_, mass_;
};

struct HdgRunOptions {
  int periods = 1;
  bool forcing = true;
  VelocityFilter* filter_v = nullptr;     // over v coefficients, final period
  VelocityFilter* filter_vhat = nullptr;  // over face traces, final period
  std::function<void(long, std::span<const double>)> observer;
};

/// RK4 integration of the HDG system over whole periods.
class HdgPropagator {
 public:
  HdgPropagator(const HdgOperator& op, int steps_per_period = 0, int min_steps = 0) : op_(op) {
    sigma_max_ = spectral_norm_estimate();
    const double T = op.period();
    const double dt_max = safety_factor(Scheme::RK4) * 2.8 / sigma_max_;
    if (steps_per_period > 0) {
      if (T / steps_per_period > dt_max)
        throw CflViolation("HDG time step T/" + std::to_string(steps_per_period) + " exceeds the stable limit " +
                           std::to_string(dt_max) + "; use at least " +
                           std::to_string(static_cast<int>(std::ceil(T / dt_max))) + " steps per period");
      N_ = steps_per_period;
    } else {
      N_ = std::max(static_cast<int>(std::ceil(T / dt_max)), min_steps);
    }
    dt_ = T / N_;
  }

  int steps_per_period() const { return N_; }
  double dt() const { return dt_; }
  double sigma_max() const { return sigma_max_; }
  const HdgOperator& op() const { return op_; }

  using Options = HdgRunOptions;

  Vector run(const Vector& X0, const Options& opt = {}) const {
    const int n = op_.size();
    const int nf = op_.num_faces();
    const long total = static_cast<long>(opt.periods) * N_;
    const long filter_from = total - N_;
    Vector X = X0, k(n), acc(n), Xs(n), vhat(nf);
    const Vector& M = op_.mass();
    static constexpr double c[4] = {0.0, 0.5, 0.5, 1.0};
    static constexpr double bw[4] = {1.0 / 6, 1.0 / 3, 1.0 / 3, 1.0 / 6};
    for (long step = 0;; ++step) {
      if ((opt.filter_v || opt.filter_vhat) && step >= filter_from) {
        const int idx = static_cast<int>(step - filter_from);
        if (opt.filter_v) opt.filter_v->add(idx, std::span<const double>(X).subspan(op_.half()));
        if (opt.filter_vhat) {
          op_.resolve_trace(X, phase(step, 0.0, opt.forcing), vhat);
          opt.filter_vhat->add(idx, vhat);
        }
      }
      if (opt.observer) opt.observer(step, X);
      if (step == total) break;
      std::fill(acc.begin(), acc.end(), 0.0);
      for (int s = 0; s < 4; ++s) {
        if (s == 0) Xs = X;
        else
          for (int i = 0; i < n; ++i) Xs[i] = X[i] + c[s] * dt_ * k[i];
        op_.apply(Xs, phase(step, c[s], opt.forcing), k, vhat);
        for (int i = 0; i < n; ++i) {
          k[i] /= M[i];
          acc[i] += bw[s] * k[i];
        }
      }
      for (int i = 0; i < n; ++i) X[i] += dt_ * acc[i];
    }
    return X;
  }

  /// M-adjoint of the homogeneous one-period map: Sigma S Sigma.
  Vector adjoint(const Vector& E) const {
    Vector Z = E;
    op_.flip(Z);
    Options hom;
    hom.forcing = false;
    Z = run(Z, hom);
    op_.flip(Z);
    return Z;
  }

 private:
  const HdgOperator& op_;
  int N_ = 0;
  double dt_ = 0.0;
  double sigma_max_ = 0.0;

  HdgOperator::Phase phase(long step, double frac, bool forcing) const {
    const double th = 2.0 * std::numbers::pi * (static_cast<double>(step % N_) + frac) / N_;
    return {std::cos(th), std::sin(th), forcing};
  }

  /// Largest singular value of M^{-1/2} L M^{-1/2} by power iteration on B'B,
  /// using L' = Sigma L Sigma.
  double spectral_norm_estimate(int iterations = 30) const {
    const int n = op_.size();
    const Vector& M = op_.mass();
    Vector x(n), y(n), z(n), vhat(op_.num_faces());
    std::mt19937_64 rng(777);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    for (auto& v : x) v = U(rng);
    HdgOperator::Phase hom;
    double lambda = 0.0;
    for (int it = 0; it < iterations; ++it) {
      scale(1.0 / norm2(x), x);
      for (int i = 0; i < n; ++i) z[i] = x[i] / std::sqrt(M[i]);
      op_.apply(z, hom, y, vhat);
      for (int i = 0; i < n; ++i) z[i] = y[i] / M[i];
      op_.flip(z);
      op_.apply(z, hom, y, vhat);
      op_.flip(y);
      for (int i = 0; i < n; ++i) y[i] /= std::sqrt(M[i]);
      lambda = dot(x, y);
      x = y;
    }
    return std::sqrt(std::max(lambda, 1e-300));
  }
};

/// Local post-processing of element fields. Given flux p, value v (degree r)
/// and traces v_hat, returns p* (degree r, weak gradient of (v, v_hat)) and
/// v* (degree r+1, with grad v* = p* and the element means of v).
struct PostProcessed {
  DgField pstar, vstar;
};

namespace detail {

/// Antiderivative of a degree-r element polynomial as degree r+1 coefficients
/// with zero element mean.
inline void antiderivative(const HdgOperator& op, int c, std::span<const double> a, std::span<double> out) {
  const int nb = op.block();
  const double h = op.cell_size(c);
  std::fill(out.begin(), out.end(), 0.0);
  for (int j = 0; j < nb; ++j) {
    const double sj = std::sqrt((2.0 * j + 1.0) / h) * (h / 2.0);
    if (j == 0) {
      out[1] += a[0] * sj * std::sqrt(h / 3.0);
      continue;
    }
    out[j + 1] += a[j] * sj / (2.0 * j + 1.0) * std::sqrt(h / (2.0 * j + 3.0));
    if (j - 1 >= 1) out[j - 1] -= a[j] * sj / (2.0 * j + 1.0) * std::sqrt(h / (2.0 * j - 1.0));
  }
}

}  // namespace detail

/// Real-valued post-processing on one component; p, v in cell-major blocks.
inline void post_process_real(const HdgOperator& op, std::span<const double> v, std::span<const double> vhat,
                              std::span<double> pstar, std::span<double> vstar) {
  const int nb = op.block();
  std::vector<double> tmp(nb + 1);
  for (int c = 0; c < op.num_cells(); ++c) {
    for (int i = 0; i < nb; ++i) {
      double s = 0.0;
      for (int j = 0; j < nb; ++j) s -= op.D(c, j, i) * v[c * nb + j];
      s += vhat[c + 1] * op.psi_right(c, i) - vhat[c] * op.psi_left(c, i);
      pstar[c * nb + i] = s;
    }
    detail::antiderivative(op, c, pstar.subspan(c * nb, nb), tmp);
    tmp[0] = v[c * nb];
    for (int i = 0; i <= nb; ++i) vstar[c * (nb + 1) + i] = tmp[i];
  }
}

/// Post-processing applied to complex (filtered) v and v_hat.
inline PostProcessed post_process(const HdgOperator& op, const ComplexField& v, const ComplexField& vhat) {
  PostProcessed out;
  out.pstar.degree = op.order();
  out.vstar.degree = op.order() + 1;
  const int nc = op.num_cells(), nb = op.block();
  out.pstar.coef = ComplexField(nc * nb);
  out.vstar.coef = ComplexField(nc * (nb + 1));
  post_process_real(op, v.re, vhat.re, out.pstar.coef.re, out.vstar.coef.re);
  post_process_real(op, v.im, vhat.im, out.pstar.coef.im, out.vstar.coef.im);
  return out;
}

/// y* of degree r+1 with grad y* = p and prescribed element means (degree-r field y).
inline DgField post_process_y(const HdgOperator& op, std::span<const double> p, const DgField& y) {
  const int nb = op.block();
  DgField out;
  out.degree = op.order() + 1;
  out.coef = ComplexField(op.num_cells() * (nb + 1));
  std::vector<double> tmp(nb + 1);
  for (int c = 0; c < op.num_cells(); ++c) {
    detail::antiderivative(op, c, p.subspan(c * nb, nb), tmp);
    for (int i = 1; i <= nb; ++i) out.coef.re[c * (nb + 1) + i] = tmp[i];
    out.coef.re[c * (nb + 1)] = y.coef.re[c * y.block()];
    out.coef.im[c * (nb + 1)] = y.coef.im[c * y.block()];
  }
  return out;
}

/// u = -k^{-2} (Re f + p0') + (i / omega) v0, elementwise in degree r.
inline DgField reconstruct_from_control(const HdgOperator& op, const HelmholtzProblem& prob, std::span<const double> X0) {
  const int nb = op.block();
  DgField u;
  u.degree = op.order();
  u.coef = ComplexField(op.num_cells() * nb);
  const Rule1D g = gauss_legendre(op.order() + 4);
  const Mesh& m = op.mesh();
  for (int c = 0; c < op.num_cells(); ++c) {
    const double cs = prob.speed(c);
    const double k2 = op.omega() * op.omega() / (cs * cs);
    const double h = op.cell_size(c), x0 = m.vertices[m.cells[c][0]][0];
    std::vector<double> fproj(nb, 0.0);
    if (prob.f)
      for (std::size_t q = 0; q < g.x.size(); ++q) {
        const auto psi = legendre_orthonormal(op.order(), 2.0 * g.x[q] - 1.0, h);
        const double fr = prob.f({x0 + h * g.x[q], 0.0}).real();
        for (int i = 0; i < nb; ++i) fproj[i] += g.w[q] * h * fr * psi[i];
      }
    for (int i = 0; i < nb; ++i) {
      double dp = 0.0;
      for (int j = 0; j < nb; ++j) dp += op.D(c, i, j) * X0[op.pi(c, j)];
      u.coef.re[c * nb + i] = -(fproj[i] + dp) / k2;
      u.coef.im[c * nb + i] = X0[op.vi(c, i)] / op.omega();
    }
  }
  return u;
}

/// L2 distance between an element field and a function.
inline double dg_l2_error(const HdgOperator& op, const DgField& u, const ScalarField& exact) {
  const Rule1D g = gauss_legendre(u.degree + 5);
  const Mesh& m = op.mesh();
  const int nb = u.block();
  double e2 = 0.0;
  for (int c = 0; c < op.num_cells(); ++c) {
    const double h = op.cell_size(c), x0 = m.vertices[m.cells[c][0]][0];
    for (std::size_t q = 0; q < g.x.size(); ++q) {
      const auto psi = legendre_orthonormal(u.degree, 2.0 * g.x[q] - 1.0, h);
      Complex val{};
      for (int i = 0; i < nb; ++i) val += psi[i] * u.coef[c * nb + i];
      const Complex ex = exact ? exact({x0 + h * g.x[q], 0.0}) : Complex{};
      e2 += g.w[q] * h * std::norm(val - ex);
    }
  }
  return std::sqrt(e2);
}

/// Orthonormal-Legendre L2 projection of a function (used for initial data).
inline Vector dg_project(const HdgOperator& op, const std::function<double(double)>& fn) {
  const int nb = op.block();
  Vector out(op.num_cells() * nb, 0.0);
  const Rule1D g = gauss_legendre(op.order() + 5);
  const Mesh& m = op.mesh();
  for (int c = 0; c < op.num_cells(); ++c) {
    const double h = op.cell_size(c), x0 = m.vertices[m.cells[c][0]][0];
    for (std::size_t q = 0; q < g.x.size(); ++q) {
      const auto psi = legendre_orthonormal(op.order(), 2.0 * g.x[q] - 1.0, h);
      const double fv = fn(x0 + h * g.x[q]);
      for (int i = 0; i < nb; ++i) out[c * nb + i] += g.w[q] * h * fv * psi[i];
    }
  }
  return out;
}

}  // namespace cmcg
