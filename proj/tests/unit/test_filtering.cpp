#include <gtest/gtest.h>

#include <cmath>
#include <memory>
#include <numbers>

#include "cmcg/filtering.hpp"
#include "cmcg/helmholtz_ref.hpp"
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

TEST(TimeFilter, ExtractsFundamentalAndRejectsOtherHarmonics) {
  fixture::Gen gen(21);
  for (int steps : {7, 16, 33}) {
    const double w = gen.uniform(0.5, 4.0), T = 2 * std::numbers::pi / w;
    const int n = 5;
    std::vector<Complex> u1(n), u0(n), u2(n);
    for (int i = 0; i < n; ++i) {
      u1[i] = {gen.normal(), gen.normal()};
      u0[i] = {gen.normal(), 0.0};
      u2[i] = {gen.normal(), gen.normal()};
    }
    TimeFilter f(n, steps, w);
    const int harmonic2 = steps > 7 ? 2 : 3;
    for (int k = 0; k <= steps; ++k) {
      const double t = k * T / steps;
      Vector y(n), yt(n);
      for (int i = 0; i < n; ++i) {
        const Complex e1 = std::exp(Complex(0, -w * t)), e2 = std::exp(Complex(0, -harmonic2 * w * t));
        y[i] = (u1[i] * e1).real() + u0[i].real() + (u2[i] * e2).real();
        yt[i] = (Complex(0, -w) * u1[i] * e1).real() + (Complex(0, -harmonic2 * w) * u2[i] * e2).real();
      }
      f.add(k, y, yt);
    }
    const ComplexField out = filter_second_order(f);
    for (int i = 0; i < n; ++i) EXPECT_LE(std::abs(out[i] - u1[i]), 1e-13);
  }
}

TEST(TimeFilter, IncompleteAccumulationThrows) {
  TimeFilter f(3, 10, 1.0);
  const Vector z(3, 0.0);
  for (int k = 0; k < 10; ++k) f.add(k, z, z);
  EXPECT_FALSE(f.complete());
  EXPECT_THROW(filter_second_order(f), std::logic_error);
}

TEST(VelocityFilter, RecoversAmplitudeFromVelocity) {
  const double w = 3.0, T = 2 * std::numbers::pi / w;
  const int steps = 20;
  const Complex u(0.3, -1.2);
  VelocityFilter f(1, steps, w);
  for (int k = 0; k <= steps; ++k) {
    const double t = k * T / steps;
    const Vector v{(Complex(0, -w) * u * std::exp(Complex(0, -w * t))).real() + 0.7 * std::cos(2 * w * t)};
    f.add(k, v);
  }
  EXPECT_LE(std::abs(filter_first_order(f)[0] - u), 1e-14);
}

TEST(Eta, RecoversShiftOnPureNeumann) {
  const Scenario sc = neumann_1d(24);
  for (int r = 1; r <= 3; ++r) {
    const auto s = setup(sc.problem, r);
    const ComplexField u = direct_solve(assemble_helmholtz(s.sys, true));
    for (double eta0 : {0.0, 0.75, -2.5}) {
      const ComplexField y = apply_eta(u, -eta0, s.sys.omega);
      const EtaEstimate e = eta_neumann(s.sys, y);
      EXPECT_NEAR(e.eta, eta0, 1e-10);
      EXPECT_NEAR(e.imaginary_residual, 0.0, 1e-10);
      const ComplexField back = apply_eta(y, e.eta, s.sys.omega);
      EXPECT_LE(fixture::max_abs_diff(back.im, u.im), 1e-10);
    }
  }
}

TEST(Eta, InactiveWithOtherBoundaries) {
  const auto s = setup(sound_soft_1d(8).problem, 1);
  const EtaEstimate e = eta_neumann(s.sys, ComplexField(s.sys.size()));
  EXPECT_EQ(e.eta, 0.0);
}

TEST(Lambda, RecoversConstantShiftOnSoundHard) {
  const Scenario sc = sound_hard_1d(32);
  fixture::Gen gen(4);
  for (int r = 1; r <= 3; ++r) {
    const auto s = setup(sc.problem, r);
    const ComplexField u = direct_solve(assemble_helmholtz(s.sys, true));
    for (int t = 0; t < 3; ++t) {
      const Complex c(gen.uniform(-5, 5), gen.uniform(-5, 5));
      ComplexField v = u;
      for (std::size_t i = 0; i < v.size(); ++i) {
        v.re[i] += c.real();
        v.im[i] += c.imag();
      }
      const Complex lam = lambda_soundhard(s.sys, v);
      EXPECT_LE(std::abs(lam - c), 1e-9);
      EXPECT_LE(fixture::max_abs_diff(subtract_constant(v, lam).re, u.re), 1e-9);
    }
    EXPECT_LE(std::abs(lambda_soundhard(s.sys, u)), 1e-9);
  }
}

TEST(Lambda, ZeroWithDirichletAndRejectedWithoutSommerfeld) {
  const auto soft = setup(sound_soft_1d(8).problem, 1);
  EXPECT_EQ(lambda_soundhard(soft.sys, ComplexField(soft.sys.size())), Complex{});
  const auto neu = setup(neumann_1d(8).problem, 1);
  EXPECT_THROW(lambda_soundhard(neu.sys, ComplexField(neu.sys.size())), std::invalid_argument);
}
