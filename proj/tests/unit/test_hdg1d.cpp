#include <gtest/gtest.h>

#include <cmath>
#include <memory>
#include <numbers>

#include "cmcg/controllability.hpp"
#include "cmcg/hdg1d.hpp"
#include "cmcg/scenarios.hpp"
#include "support.hpp"

using namespace cmcg;

namespace {

HelmholtzProblem interval(int n, BoundaryTag l, BoundaryTag r, double omega = 2.0) {
  HelmholtzProblem p;
  p.mesh = std::make_shared<Mesh>(generate_interval(0.0, 1.0, n, l, r));
  p.omega = omega;
  return p;
}

Vector project_pair(const HdgOperator& op, const std::function<double(double)>& p, const std::function<double(double)>& v) {
  Vector X = dg_project(op, p);
  const Vector V = dg_project(op, v);
  X.insert(X.end(), V.begin(), V.end());
  return X;
}

constexpr auto D = BoundaryTag::Dirichlet;
constexpr auto N = BoundaryTag::Neumann;
constexpr auto S = BoundaryTag::Sommerfeld;

}  // namespace

TEST(Hdg, SizesAndLayout) {
  const auto p = interval(7, D, S);
  for (int r = 1; r <= 3; ++r) {
    HdgOperator op(p, r);
    EXPECT_EQ(op.size(), 2 * 7 * (r + 1));
    EXPECT_EQ(op.num_faces(), 8);
    EXPECT_EQ(op.vi(0, 0), op.half());
    EXPECT_EQ(op.tau().size(), 8u);
  }
  EXPECT_THROW(HdgOperator(p, 4), std::invalid_argument);
}

TEST(Hdg, LegendreBasisAndDerivativeMatrix) {
  const double h = 0.37;
  const Rule1D g = gauss_legendre(8);
  const int r = 3;
  for (int i = 0; i <= r; ++i)
    for (int j = 0; j <= r; ++j) {
      double mass = 0.0, der = 0.0;
      for (std::size_t q = 0; q < g.x.size(); ++q) {
        const double xi = 2 * g.x[q] - 1;
        const auto psi = legendre_orthonormal(r, xi, h);
        const double eps = 1e-6;
        const double dpsi =
            (legendre_orthonormal(r, xi + eps, h)[j] - legendre_orthonormal(r, xi - eps, h)[j]) / (2 * eps) * 2.0 / h;
        mass += g.w[q] * h * psi[i] * psi[j];
        der += g.w[q] * h * dpsi * psi[i];
      }
      EXPECT_NEAR(mass, i == j ? 1.0 : 0.0, 1e-13);
      HelmholtzProblem p;
      p.mesh = std::make_shared<Mesh>(generate_interval(0.0, h, 1, N, N));
      HdgOperator op(p, r);
      EXPECT_NEAR(op.D(0, i, j), der, 1e-6 / h);
    }
}

TEST(Hdg, TracesOfContinuousFieldsAreExact) {
  const auto p = interval(6, N, N);
  for (int r = 1; r <= 3; ++r) {
    HdgOperator op(p, r);
    const Vector X = project_pair(op, [](double x) { return 1 - 2 * x; }, [](double x) { return 0.5 + x * x / 2; });
    Vector vhat(op.num_faces());
    op.resolve_trace(X, {}, vhat);
    for (int f = 1; f < 6; ++f) {
      const double x = f / 6.0;
      if (r >= 2) {
        EXPECT_NEAR(vhat[f], 0.5 + x * x / 2, 1e-13);
      }
    }
    // Homogeneous Neumann: v_hat = v + (0 - p n) / tau; at x = 0, n = -1 and p = 1.
    if (r >= 2) {
      EXPECT_NEAR(vhat[0], 0.5 + 1.0 / op.tau()[0], 1e-13);
    }
  }
}

TEST(Hdg, FluxIsSingleValued) {
  fixture::Gen gen(60);
  for (auto [l, rt] : {std::pair{D, S}, std::pair{N, N}, std::pair{S, S}}) {
    HelmholtzProblem p = interval(9, l, rt);
    p.wave_speed.resize(9);
    for (auto& c : p.wave_speed) c = gen.uniform(0.5, 2.0);
    HdgOperator op(p, 2);
    const Vector X = gen.vector(op.size());
    Vector vhat(op.num_faces());
    op.resolve_trace(X, {}, vhat);
    for (int c = 0; c + 1 < 9; ++c) EXPECT_NEAR(op.flux(X, vhat, c, 1), -op.flux(X, vhat, c + 1, 0), 1e-12);
  }
}

TEST(Hdg, OperatorIsLocal) {
  fixture::Gen gen(61);
  HdgOperator op(interval(10, D, S), 2);
  const Vector X = gen.vector(op.size());
  Vector base(op.size()), pert(op.size()), vhat(op.num_faces());
  op.apply(X, {}, base, vhat);
  const int k = 4;
  Vector Y = X;
  for (int i = 0; i < op.block(); ++i) {
    Y[op.pi(k, i)] += 1.0;
    Y[op.vi(k, i)] -= 0.5;
  }
  op.apply(Y, {}, pert, vhat);
  for (int c = 0; c < 10; ++c)
    for (int i = 0; i < op.block(); ++i) {
      const bool near = std::abs(c - k) <= 1;
      if (!near) {
        EXPECT_EQ(pert[op.pi(c, i)], base[op.pi(c, i)]);
        EXPECT_EQ(pert[op.vi(c, i)], base[op.vi(c, i)]);
      }
    }
}

TEST(Hdg, DirichletTraceClosedForm) {
  HelmholtzProblem p = interval(4, D, S, 3.0);
  const Complex g(0.3, -0.7);
  p.g_dirichlet = [g](const Point&) { return g; };
  HdgOperator op(p, 1);
  const Vector X(op.size(), 0.0);
  Vector vhat(op.num_faces());
  for (double t : {0.0, 0.4, 1.3}) {
    const double w = 3.0, eps = 1e-6;
    auto gt = [&](double s) { return (g * std::exp(Complex(0, -w * s))).real(); };
    op.resolve_trace(X, {std::cos(w * t), std::sin(w * t), true}, vhat);
    EXPECT_NEAR(vhat[0], (gt(t + eps) - gt(t - eps)) / (2 * eps), 1e-7);
  }
}

TEST(Hdg, SemiDiscreteOperatorIsDissipative) {
  fixture::Gen gen(62);
  for (auto [l, rt] : {std::pair{D, S}, std::pair{N, N}, std::pair{S, S}, std::pair{D, D}}) {
    HelmholtzProblem p = interval(8, l, rt);
    p.wave_speed.resize(8);
    for (auto& c : p.wave_speed) c = gen.uniform(0.5, 2.0);
    for (int r = 1; r <= 3; ++r) {
      HdgOperator op(p, r);
      Vector out(op.size()), vhat(op.num_faces());
      for (int t = 0; t < 5; ++t) {
        const Vector X = gen.vector(op.size());
        op.apply(X, {}, out, vhat);
        EXPECT_LE(dot(X, out), 1e-12 * dot(X, X));
      }
    }
  }
}

TEST(Hdg, ConstantsAreStationaryForNeumann) {
  HdgOperator op(interval(5, N, N), 2);
  Vector X(op.size(), 0.0), out(op.size()), vhat(op.num_faces());
  const Vector one = dg_project(op, [](double) { return 1.0; });
  for (int k = 0; k < op.half(); ++k) X[op.half() + k] = one[k];
  op.apply(X, {}, out, vhat);
  for (double v : out) EXPECT_NEAR(v, 0.0, 1e-12);
}

TEST(Hdg, EnergyDecaysOverPeriods) {
  fixture::Gen gen(63);
  HdgOperator op(interval(12, D, S), 2);
  HdgPropagator prop(op);
  HdgRunOptions hom;
  hom.forcing = false;
  std::vector<double> e;
  hom.observer = [&](long, std::span<const double> X) { e.push_back(op.energy(X)); };
  hom.periods = 2;
  prop.run(gen.vector(op.size()), hom);
  EXPECT_LT(e.back(), e.front());
  for (std::size_t k = prop.steps_per_period(); k < e.size(); k += prop.steps_per_period())
    EXPECT_LE(e[k], e[k - prop.steps_per_period()]);
}

TEST(Hdg, AdjointIsFlippedForwardMap) {
  fixture::Gen gen(64);
  for (auto [l, rt] : {std::pair{D, S}, std::pair{N, S}, std::pair{S, S}}) {
    HdgOperator op(interval(6, l, rt), 2);
    HdgPropagator prop(op);
    HdgRunOptions hom;
    hom.forcing = false;
    const Vector x = gen.vector(op.size()), y = gen.vector(op.size());
    const Vector Sx = prop.run(x, hom), STy = prop.adjoint(y);
    const double lhs = weighted_dot(op.mass(), Sx, y), rhs = weighted_dot(op.mass(), x, STy);
    EXPECT_NEAR(lhs, rhs, 1e-11 * (1 + std::abs(lhs)));
  }
}

TEST(Hdg, MixedGradientMatchesFiniteDifferences) {
  fixture::Gen gen(65);
  for (const auto& sc : {sound_soft_1d(8), sound_hard_1d(8)}) {
    HdgOperator op(sc.problem, 2);
    HdgPropagator prop(op);
    const Vector X = gen.vector(op.size()), W = gen.vector(op.size());
    Vector e = prop.run(X);
    axpy(-1.0, X, e);
    const Vector g = mixed_gradient(prop, e);
    const double eps = 1e-4;
    Vector Xp = X, Xm = X;
    axpy(eps, W, Xp);
    axpy(-eps, W, Xm);
    const double fd = (mixed_J(prop, Xp) - mixed_J(prop, Xm)) / (2 * eps);
    const double an = weighted_dot(op.mass(), g, W);
    EXPECT_NEAR(fd, an, 1e-6 * std::abs(an)) << sc.name;
  }
}

TEST(Hdg, TimeSelfConvergenceIsFourthOrder) {
  const Scenario sc = sound_soft_1d(16);
  HdgOperator op(sc.problem, 2);
  const int n0 = HdgPropagator(op).steps_per_period();
  auto run = [&](int steps) { return HdgPropagator(op, steps).run(Vector(op.size(), 0.0)); };
  const Vector a = run(2 * n0), b = run(4 * n0), c = run(8 * n0);
  Vector d1 = a, d2 = b;
  axpy(-1.0, b, d1);
  axpy(-1.0, c, d2);
  EXPECT_GE(norm2(d1) / norm2(d2), 12.0);
}

TEST(Hdg, CflViolationIsReported) {
  HdgOperator op(interval(32, D, S, 10.0), 3);
  const int nmin = HdgPropagator(op).steps_per_period();
  EXPECT_THROW(HdgPropagator(op, nmin / 2), CflViolation);
  EXPECT_EQ(HdgPropagator(op, 0, 3 * nmin).steps_per_period(), 3 * nmin);
}

TEST(PostProcess, ReproducesPolynomialsOfDegreeRPlusOne) {
  for (int r = 1; r <= 3; ++r) {
    HdgOperator op(interval(5, N, N), r);
    auto u = [r](double x) { return std::pow(x, r + 1) - 0.3 * x; };
    const Vector v = dg_project(op, u);
    Vector vhat(op.num_faces());
    for (int f = 0; f <= 5; ++f) vhat[f] = u(f / 5.0);
    const PostProcessed pp = post_process(op, ComplexField(v, Vector(v.size(), 0.0)), ComplexField(vhat, Vector(vhat.size(), 0.0)));
    EXPECT_LE(dg_l2_error(op, pp.vstar, [&](const Point& x) { return Complex(u(x[0]), 0.0); }), 1e-12);
    EXPECT_LE(dg_l2_error(op, pp.pstar, [&](const Point& x) { return Complex((r + 1) * std::pow(x[0], r) - 0.3, 0.0); }),
              1e-11);
  }
}

TEST(PostProcess, PreservesElementMeans) {
  fixture::Gen gen(66);
  HdgOperator op(interval(7, D, S), 2);
  const Vector vr = gen.vector(op.half()), vi = gen.vector(op.half());
  const Vector hr = gen.vector(op.num_faces()), hi = gen.vector(op.num_faces());
  const PostProcessed pp = post_process(op, ComplexField(vr, vi), ComplexField(hr, hi));
  for (int c = 0; c < 7; ++c) {
    EXPECT_EQ(pp.vstar.coef.re[c * 4], vr[c * 3]);
    EXPECT_EQ(pp.vstar.coef.im[c * 4], vi[c * 3]);
  }
}

TEST(MixedSolve, SoundSoftConverges) {
  std::vector<double> e_rec;
  for (int n : {16, 32}) {
    const Scenario sc = sound_soft_1d(n);
    HdgOperator op(sc.problem, 2);
    MixedOptions o;
    o.tol = 1e-10;
    o.min_steps = 4 * HdgPropagator(op).steps_per_period();
    const MixedResult r = cmcg_solve_mixed(op, sc.problem, o);
    ASSERT_TRUE(r.converged);
    EXPECT_EQ(r.history.front().residual_cg, 1.0);
    const double e_f = dg_l2_error(op, r.u_filtered, sc.exact);
    const double e_p = dg_l2_error(op, r.u_postprocessed, sc.exact);
    EXPECT_LT(e_f, 1e-3);
    EXPECT_LT(e_p, e_f);
    e_rec.push_back(dg_l2_error(op, r.u_reconstructed, sc.exact));
  }
  // Re u comes from div p0, which costs one order.
  EXPECT_LT(e_rec[0], 1e-2);
  EXPECT_GT(std::log2(e_rec[0] / e_rec[1]), 2 - 0.3);
}
