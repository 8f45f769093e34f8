#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <memory>
#include <numbers>

#include "cmcg/helmholtz_ref.hpp"
#include "cmcg/io.hpp"
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

}  // namespace

TEST(Direct, SingleFreeDof) {
  // One cell of length 1: u(0) = g, Sommerfeld at 1. With lumping the free row reads
  // (1 - w^2/2 - i w) u1 - g = 0.
  HelmholtzProblem p;
  p.mesh = std::make_shared<Mesh>(generate_interval(0, 1, 1, BoundaryTag::Dirichlet, BoundaryTag::Sommerfeld));
  p.omega = 1.3;
  const Complex g(0.4, -0.9);
  p.g_dirichlet = [g](const Point&) { return g; };
  const auto s = setup(p, 1);
  const ComplexField u = direct_solve(assemble_helmholtz(s.sys, true));
  const double w = p.omega;
  EXPECT_LE(std::abs(u[0] - g), 1e-15);
  EXPECT_LE(std::abs(u[1] - g / Complex(1 - w * w / 2, -w)), 1e-14);
  // Consistent mass: (1 - w^2/3 - i w) u1 + (-1 - w^2/6) g = 0.
  const ComplexField uc = direct_solve(assemble_helmholtz(s.sys, false));
  EXPECT_LE(std::abs(uc[1] - (1 + w * w / 6) * g / Complex(1 - w * w / 3, -w)), 1e-14);
}

TEST(Direct, LowFrequencyLimitIsHarmonic) {
  RectMeshOptions o;
  o.h = 0.125;
  o.outer_tags = {BoundaryTag::Dirichlet, BoundaryTag::Dirichlet, BoundaryTag::Dirichlet, BoundaryTag::Dirichlet};
  HelmholtzProblem p;
  p.mesh = std::make_shared<Mesh>(generate_rectangle(o));
  p.omega = 1e-5;
  p.g_dirichlet = [](const Point& x) { return Complex(x[0] + 2 * x[1], x[0] - x[1]); };
  for (int r = 1; r <= 2; ++r) {
    const auto s = setup(p, r);
    const ComplexField u = direct_solve(assemble_helmholtz(s.sys, false));
    EXPECT_LE(l2_error(*s.space, u, p.g_dirichlet), 1e-9);
  }
}

TEST(Direct, ConvergenceRates) {
  const std::vector<std::function<Scenario(int)>> makers{[](int n) { return sound_soft_1d(n); },
                                                         [](int n) { return sound_hard_1d(n); },
                                                         [](int n) { return neumann_1d(n); }};
  for (const auto& make : makers) {
    for (int r = 1; r <= 3; ++r) {
      std::vector<double> h, e;
      for (int n : {16, 32, 64}) {
        const Scenario sc = make(n);
        const auto s = setup(sc.problem, r);
        const ComplexField u = direct_solve(assemble_helmholtz(s.sys, false));
        h.push_back(1.0 / n);
        e.push_back(l2_error(*s.space, u, sc.exact));
      }
      EXPECT_GE(fitted_order(h, e), r + 1 - 0.2) << make(4).name << " P" << r;
    }
  }
}

TEST(Direct, LumpedFlagTogglesMassAndDamping) {
  const auto s = setup(sound_hard_1d(8).problem, 2);
  const HelmholtzSystem a = assemble_helmholtz(s.sys, true), b = assemble_helmholtz(s.sys, false);
  EXPECT_FALSE(a.A_re.same_pattern(b.A_re) && a.A_re.values() == b.A_re.values());
  const auto s2 = setup(plane_wave_scattering({.box = 2.0, .h = 0.25, .obstacle = ObstacleKind::None}).problem, 2);
  const HelmholtzSystem c = assemble_helmholtz(s2.sys, true), d = assemble_helmholtz(s2.sys, false);
  EXPECT_LT(c.A_im.nnz(), d.A_im.nnz());
  EXPECT_FALSE(c.A_re.values() == d.A_re.values());
  for (int i = 0; i < s2.sys.size(); ++i) EXPECT_NEAR(c.A_im.at(i, i), -s2.sys.omega * s2.sys.b_lumped[i], 1e-14);
}

TEST(Direct, NormalEquationsCrossCheck) {
  fixture::Gen gen(31);
  const auto s = setup(plane_wave_scattering({.box = 2.0, .h = 0.2, .obstacle = ObstacleKind::Square, .obstacle_size = 0.5}).problem, 1);
  const HelmholtzSystem h = assemble_helmholtz(s.sys, false);
  const int n = s.sys.size();
  Eigen::MatrixXcd A = Eigen::MatrixXcd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) A(i, j) = {h.A_re.at(i, j), h.A_im.at(i, j)};
  Eigen::VectorXcd b(n);
  for (int i = 0; i < n; ++i) b[i] = {h.b_re[i], h.b_im[i]};
  const Eigen::MatrixXcd AhA = A.adjoint() * A;
  const Eigen::VectorXcd x = AhA.ldlt().solve(A.adjoint() * b);
  const ComplexField u = direct_solve(h);
  double diff = 0.0, ref = 0.0;
  for (int i = 0; i < n; ++i) {
    diff += std::norm(u[i] - x[i]);
    ref += std::norm(x[i]);
  }
  EXPECT_LE(std::sqrt(diff / ref), 1e-8);
  EXPECT_LE(helmholtz_residual(h, u), 1e-12);
}

TEST(Direct, ResonanceWarning) {
  const int n = 10;
  const double hh = 1.0 / n;
  HelmholtzProblem p;
  p.mesh = std::make_shared<Mesh>(generate_interval(0, 1, n, BoundaryTag::Neumann, BoundaryTag::Neumann));
  const double lam1 = 4.0 / (hh * hh) * std::pow(std::sin(std::numbers::pi / (2.0 * n)), 2);
  p.omega = std::sqrt(lam1) * 1.001;
  const auto near = setup(p, 1);
  const auto hit = resonance_warning(near.sys);
  ASSERT_TRUE(hit.has_value());
  EXPECT_NEAR(*hit, lam1, 1e-9 * lam1);
  p.omega = std::sqrt(lam1) * 1.2;
  EXPECT_FALSE(resonance_warning(setup(p, 1).sys).has_value());
}
