#include <gtest/gtest.h>

#include <cmath>
#include <memory>
#include <numbers>

#include "cmcg/controllability.hpp"
#include "cmcg/scenarios.hpp"
#include "support.hpp"

using namespace cmcg;

namespace {

struct Setup {
  std::shared_ptr<FESpace> space;
  WaveSystem sys;
};

Setup setup(const HelmholtzProblem& p, int order) {
  Setup s;
  s.space = std::make_shared<FESpace>(make_space(p.mesh, order));
  s.sys = assemble_wave_system(s.space, p);
  return s;
}

ControlPair random_free(fixture::Gen& g, const WaveSystem& sys) {
  ControlPair v{g.vector(sys.size()), g.vector(sys.size())};
  apply_mask(sys.constrained, v.v0);
  apply_mask(sys.constrained, v.v1);
  return v;
}

ControlPair combo(const ControlPair& a, double s, const ControlPair& b) {
  ControlPair c = a;
  axpy(s, b.v0, c.v0);
  axpy(s, b.v1, c.v1);
  return c;
}

double relative_error(const ComplexField& a, const ComplexField& b) {
  double num = 0, den = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += std::norm(a[i] - b[i]);
    den += std::norm(b[i]);
  }
  return std::sqrt(num / den);
}

HelmholtzProblem square_scatterer() {
  ScatteringOptions o;
  o.box = 2.0;
  o.h = 0.2;
  o.obstacle_size = 0.6;
  return plane_wave_scattering(o).problem;
}

}  // namespace

TEST(Misfit, NonNegativeAndZeroForPeriodicState) {
  fixture::Gen gen(50);
  const auto s = setup(sound_soft_1d(16).problem, 2);
  WavePropagator prop(s.sys, Scheme::Leapfrog);
  for (int t = 0; t < 10; ++t) {
    ControlPair v{gen.vector(s.sys.size()), gen.vector(s.sys.size())};
    EXPECT_GE(eval_J(prop, v).J, 0.0);
  }
  const TerminalState same{Vector(s.sys.size(), 0.3), Vector(s.sys.size(), -1.0)};
  EXPECT_EQ(energy_misfit(s.sys, same, {same.yT, same.ytT}), 0.0);
}

TEST(Misfit, RelativeFormRequiresSources) {
  EXPECT_NEAR(periodicity_misfit(4.0, 2.0), 1.0, 1e-15);
  EXPECT_THROW(periodicity_misfit(1.0, 0.0), std::invalid_argument);
  EXPECT_EQ(cg_residual(0.0, 0.0), 0.0);
}

TEST(Gradient, MatchesFiniteDifferences) {
  fixture::Gen gen(51);
  std::vector<std::pair<HelmholtzProblem, int>> cases{
      {sound_soft_1d(12).problem, 3}, {sound_hard_1d(12).problem, 2}, {neumann_1d(10).problem, 2}, {square_scatterer(), 1}};
  for (const auto& [p, order] : cases)
    for (Scheme sc : {Scheme::Leapfrog, Scheme::RK4}) {
      const auto s = setup(p, order);
      WavePropagator prop(s.sys, sc);
      ControlPair v = random_free(gen, s.sys);
      detail::impose_control(s.sys, v);
      const ControlPair w = random_free(gen, s.sys);
      const JEvaluation ev = eval_J(prop, v);
      const ControlPair g = eval_gradient(prop, v, ev.state);
      const double eps = 1e-4;
      // J is quadratic, so the central difference is exact up to rounding.
      const double fd = (eval_J(prop, combo(v, eps, w)).J - eval_J(prop, combo(v, -eps, w)).J) / (2 * eps);
      const double an = dot(g.v0, w.v0) + dot(g.v1, w.v1);
      EXPECT_NEAR(fd, an, 1e-6 * std::abs(an)) << scheme_name(sc);
      for (int i = 0; i < s.sys.size(); ++i)
        if (s.sys.constrained[i]) {
          EXPECT_EQ(g.v0[i], 0.0);
          EXPECT_EQ(g.v1[i], 0.0);
        }
    }
}

TEST(Adjoint, BackwardSolveApproximatesReversedDynamics) {
  // Undamped, unconstrained: the adjoint from (p0, p1) at T is the backward wave solution.
  fixture::Gen gen(52);
  HelmholtzProblem p = neumann_1d(16).problem;
  const auto s = setup(p, 2);
  const int n = s.sys.size();
  ControlPair pT{Vector(n), Vector(n)};
  for (int i = 0; i < n; ++i) {
    const double x = s.space->dof_coords[i][0];
    pT.v0[i] = std::cos(std::numbers::pi * x);
    pT.v1[i] = 0.5 * std::cos(2 * std::numbers::pi * x);
  }
  for (Scheme sc : {Scheme::Leapfrog, Scheme::RK4}) {
    WavePropagator prop(s.sys, sc, 0, 800);
    const ControlPair back = adjoint_backward(prop, pT.v0, pT.v1);
    RunOptions hom;
    hom.forcing = false;
    ControlPair rev{pT.v0, pT.v1};
    for (double& x : rev.v1) x = -x;
    const TerminalState fw = prop.run(rev, hom);
    EXPECT_LE(fixture::max_abs_diff(back.v0, fw.yT), 1e-3) << scheme_name(sc);
    Vector minus = fw.ytT;
    for (double& x : minus) x = -x;
    EXPECT_LE(fixture::max_abs_diff(back.v1, minus), 1e-3) << scheme_name(sc);
  }
}

TEST(Riesz, RepresentsTheEuclideanGradient) {
  fixture::Gen gen(53);
  for (const auto& p : {sound_soft_1d(20).problem, sound_hard_1d(20).problem, square_scatterer()}) {
    const auto s = setup(p, 2);
    const ControlPair g = random_free(gen, s.sys);
    const ControlPair r = riesz_representative(s.sys, g);
    for (int t = 0; t < 3; ++t) {
      ControlPair w = random_free(gen, s.sys);
      if (!s.sys.has_dirichlet) project_zero_mean(w.v0);
      EXPECT_NEAR(energy_dot(s.sys, r, w), dot(g.v0, w.v0) + dot(g.v1, w.v1), 1e-9 * norm2(g.v0) * norm2(w.v0) + 1e-12);
    }
  }
}

TEST(Cmcg, ZeroDataConvergesImmediately) {
  HelmholtzProblem p;
  p.mesh = std::make_shared<Mesh>(generate_interval(0, 1, 8, BoundaryTag::Dirichlet, BoundaryTag::Sommerfeld));
  p.omega = 3.0;
  const auto s = setup(p, 2);
  const CmcgResult r = cmcg_solve(s.sys, {});
  EXPECT_TRUE(r.converged);
  EXPECT_EQ(r.iterations, 0);
  ASSERT_EQ(r.history.size(), 1u);
  EXPECT_EQ(r.history[0].residual_cg, 0.0);
  for (std::size_t i = 0; i < r.u.size(); ++i) EXPECT_EQ(r.u[i], Complex{});
}

TEST(Cmcg, HistoryInvariants) {
  const auto s = setup(square_scatterer(), 1);
  for (Scheme sc : {Scheme::Leapfrog, Scheme::RK4}) {
    CmcgOptions o;
    o.scheme = sc;
    o.tol = 1e-6;
    std::vector<double> J;
    const CmcgResult r = cmcg_solve(s.sys, o);
    ASSERT_TRUE(r.converged);
    EXPECT_EQ(r.history.front().residual_cg, 1.0);
    EXPECT_EQ(r.history.front().cumulative_periods, 2);
    for (std::size_t k = 1; k < r.history.size(); ++k) {
      EXPECT_EQ(r.history[k].iter, static_cast<int>(k));
      EXPECT_LE(r.history[k].misfit_J, r.history[k - 1].misfit_J * (1 + 1e-9)) << "iteration " << k;
      EXPECT_EQ(r.history[k].cumulative_periods, r.history[k - 1].cumulative_periods + 2);
      EXPECT_GE(r.history[k].wall_time, r.history[k - 1].wall_time);
    }
    EXPECT_LE(r.history.back().residual_cg, 1e-6);
    EXPECT_EQ(r.total_periods, r.history.back().cumulative_periods + 1);
    for (int i = 0; i < s.sys.size(); ++i)
      if (s.sys.constrained[i]) {
        EXPECT_EQ(r.control.v0[i], s.sys.gD_re[i]);
        EXPECT_EQ(r.control.v1[i], s.sys.omega * s.sys.gD_im[i]);
      }
  }
}

TEST(Cmcg, SoundSoftMatchesDirectSolution) {
  const Scenario sc = sound_soft_1d(32);
  const auto s = setup(sc.problem, 2);
  const ComplexField direct = direct_solve(assemble_helmholtz(s.sys, true));
  CmcgOptions o;
  o.scheme = Scheme::RK4;
  o.tol = 1e-10;
  o.min_steps = 400;
  const CmcgResult filtered = cmcg_solve(s.sys, o);
  o.filter = false;
  const CmcgResult raw = cmcg_solve(s.sys, o);
  EXPECT_TRUE(filtered.misfit_absolute);  // u = -exp(ikx) has no volume or Sommerfeld source
  EXPECT_LE(relative_error(filtered.u, direct), 1e-6);
  EXPECT_LE(relative_error(raw.u, direct), 1e-6);
  EXPECT_LE(relative_error(filtered.u, raw.u), 1e-6);
  EXPECT_LE(l2_error(*s.space, filtered.u, sc.exact), 2 * l2_error(*s.space, direct, sc.exact));
}

TEST(Cmcg, MisfitToleranceStopsEarly) {
  const auto s = setup(square_scatterer(), 1);
  CmcgOptions o;
  o.tol = 1e-12;
  o.misfit_tol = 1e-3;
  const CmcgResult r = cmcg_solve(s.sys, o);
  EXPECT_TRUE(r.converged);
  EXPECT_LE(r.history.back().misfit_J, 1e-3);
  if (r.history.size() > 1) {
    EXPECT_GT(r.history[r.history.size() - 2].misfit_J, 1e-3);
  }
}

TEST(Cmcg, RunUpIsCountedInPeriods) {
  const auto s = setup(square_scatterer(), 1);
  CmcgOptions o;
  o.tol = 1e-4;
  o.runup_periods = 3;
  const CmcgResult r = cmcg_solve(s.sys, o);
  EXPECT_EQ(r.history.front().cumulative_periods, 5);
  EXPECT_EQ(r.total_periods, 5 + 2 * r.iterations + 1);
}

TEST(Cmcg, HelmholtzResidualIsRecorded) {
  const auto s = setup(sound_hard_1d(16).problem, 1);
  const HelmholtzSystem h = assemble_helmholtz(s.sys, true);
  CmcgOptions o;
  o.reference = &h;
  o.tol = 1e-10;
  o.scheme = Scheme::RK4;
  const CmcgResult r = cmcg_solve(s.sys, o);
  for (const auto& rec : r.history) EXPECT_FALSE(std::isnan(rec.residual_H));
  EXPECT_LT(r.history.back().residual_H, r.history.front().residual_H);
}

TEST(DoNothing, MisfitDecaysOnOpenDomain) {
  const Scenario sc = outgoing_1d(32, 2 * std::numbers::pi);
  const auto s = setup(sc.problem, 2);
  const DoNothingResult r = do_nothing_solve(s.sys, Scheme::RK4, 12, 1);
  ASSERT_EQ(r.misfit.size(), 12u);
  EXPECT_TRUE(r.misfit_absolute);
  EXPECT_LT(r.misfit.back(), 1e-2 * r.misfit[2]);
  const ComplexField direct = direct_solve(assemble_helmholtz(s.sys, true));
  EXPECT_LE(relative_error(r.u, direct), 0.05);
  EXPECT_THROW(do_nothing_solve(s.sys, Scheme::RK4, 0), std::invalid_argument);
}
