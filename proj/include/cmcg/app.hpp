#pragma once

#include <omp.h>

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "cmcg.hpp"

namespace cmcg::app {

struct Context {
  RunConfig cfg;
  std::filesystem::path out;
  bool quiet = false;

  template <class... Args>
  void log(const char* fmt, Args... args) const {
    if (quiet) return;
    if constexpr (sizeof...(Args) == 0) std::fputs(fmt, stdout);
    else std::printf(fmt, args...);
    std::fflush(stdout);
  }
};

inline int steps_floor(const WaveSystem& sys, const DiscretizationConfig& d, double refinement) {
  if (d.steps_per_period > 0 || refinement <= 1.0) return 0;
  WavePropagator probe(sys, d.scheme);
  return static_cast<int>(std::ceil(refinement * probe.steps_per_period()));
}

inline int hdg_steps_floor(const HdgOperator& op, const DiscretizationConfig& d, double refinement) {
  if (d.steps_per_period > 0 || refinement <= 1.0) return 0;
  HdgPropagator probe(op);
  return static_cast<int>(std::ceil(refinement * probe.steps_per_period()));
}

inline CmcgOptions cmcg_options(const Context& ctx, const WaveSystem& sys, double refinement) {
  const auto& s = ctx.cfg.solver;
  const auto& d = ctx.cfg.discretization;
  CmcgOptions o;
  o.scheme = d.scheme;
  o.tol = s.tol;
  o.misfit_tol = s.misfit_tol;
  o.max_iter = s.max_iter;
  o.runup_periods = s.runup_periods;
  o.filter = s.filter;
  o.correct_shift = s.correct_shift;
  o.steps_per_period = d.steps_per_period;
  o.min_steps = steps_floor(sys, d, refinement);
  return o;
}

struct FeRun {
  std::shared_ptr<const FESpace> space;
  std::unique_ptr<WaveSystem> sys;
};

inline FeRun build_fe(const Scenario& sc, int order) {
  FeRun r;
  r.space = std::make_shared<const FESpace>(make_space(sc.problem.mesh, order));
  r.sys = std::make_unique<WaveSystem>(assemble_wave_system(r.space, sc.problem));
  return r;
}

inline void print_record(const Context& ctx, const IterationRecord& r) {
  if (r.iter % 10 == 0)
    ctx.log("  iter %4d  |r|_CG %.3e  |u|_J %.3e  periods %ld\n", r.iter, r.residual_cg, r.misfit_J, r.cumulative_periods);
}

inline int cmd_solve(const Context& ctx) {
  const RunConfig& c = ctx.cfg;
  const Scenario sc = build_scenario(c);
  if (c.discretization.formulation == Formulation::Hdg) {
    HdgOperator op(sc.problem, c.discretization.order, c.discretization.mass_coeff);
    MixedOptions mo;
    mo.tol = c.solver.tol;
    mo.max_iter = c.solver.max_iter;
    mo.steps_per_period = c.discretization.steps_per_period;
    mo.min_steps = hdg_steps_floor(op, c.discretization, c.discretization.step_refinement);
    mo.callback = [&](const IterationRecord& r) { print_record(ctx, r); };
    const MixedResult res = cmcg_solve_mixed(op, sc.problem, mo);
    ctx.log("hdg cmcg: %d iterations, converged %s, %d steps per period\n", res.iterations, res.converged ? "yes" : "no",
            res.steps_per_period);
    if (sc.exact) {
      ctx.log("L2 error: filtered %.6e  post-processed %.6e  reconstructed %.6e\n", dg_l2_error(op, res.u_filtered, sc.exact),
              dg_l2_error(op, res.u_postprocessed, sc.exact), dg_l2_error(op, res.u_reconstructed, sc.exact));
    }
    if (c.output.history) write_history_csv(ctx.out / "history.csv", res.history);
    if (c.output.solution) write_dg_solution_csv(ctx.out / "solution.csv", op, res.u_postprocessed);
    return res.converged ? 0 : 3;
  }
  FeRun fe = build_fe(sc, c.discretization.order);
  CmcgOptions o = cmcg_options(ctx, *fe.sys, c.discretization.step_refinement);
  std::unique_ptr<HelmholtzSystem> ref;
  if (c.solver.helmholtz_residual) {
    ref = std::make_unique<HelmholtzSystem>(assemble_helmholtz(*fe.sys, false));
    o.reference = ref.get();
  }
  o.callback = [&](const IterationRecord& r) { print_record(ctx, r); };
  ctx.log("%d DOFs, order %d, %s\n", fe.sys->size(), c.discretization.order, scheme_name(c.discretization.scheme));
  const CmcgResult res = cmcg_solve(*fe.sys, o);
  ctx.log("cmcg: %d iterations, converged %s, %d steps per period, %ld wave periods\n", res.iterations,
          res.converged ? "yes" : "no", res.steps_per_period, res.total_periods);
  if (res.misfit_absolute) ctx.log("note: zero source norm, |u|_J reported as sqrt(J)\n");
  if (res.eta != 0.0) ctx.log("eta = %.6e\n", res.eta);
  if (res.lambda != Complex{}) ctx.log("lambda = %.6e %+.6ei\n", res.lambda.real(), res.lambda.imag());
  if (sc.exact) ctx.log("L2 error: %.6e\n", l2_error(*fe.space, res.u, sc.exact));
  if (c.output.history) write_history_csv(ctx.out / "history.csv", res.history);
  if (c.output.solution) write_solution_csv(ctx.out / "solution.csv", *fe.space, res.u);
  if (c.output.vtk && fe.space->mesh->dim == 2) write_vtk(ctx.out / "solution.vtk", *fe.space, res.u);
  return res.converged ? 0 : 3;
}

inline int cmd_direct(const Context& ctx) {
  const RunConfig& c = ctx.cfg;
  const Scenario sc = build_scenario(c);
  FeRun fe = build_fe(sc, c.discretization.order);
  if (!fe.sys->has_sommerfeld) {
    if (const auto mu = resonance_warning(*fe.sys))
      std::fprintf(stderr, "warning: omega^2 = %.6g is within 1%% of the discrete eigenvalue estimate %.6g\n",
                   fe.sys->omega * fe.sys->omega, *mu);
  }
  const HelmholtzSystem H = assemble_helmholtz(*fe.sys, c.solver.lumped_reference);
  const ComplexField u = direct_solve(H);
  ctx.log("direct solve: %d DOFs, relative residual %.3e\n", fe.sys->size(), helmholtz_residual(H, u));
  if (sc.exact) ctx.log("L2 error: %.6e\n", l2_error(*fe.space, u, sc.exact));
  if (c.output.solution) write_solution_csv(ctx.out / "solution.csv", *fe.space, u);
  if (c.output.vtk && fe.space->mesh->dim == 2) write_vtk(ctx.out / "solution.vtk", *fe.space, u);
  return 0;
}

inline int cmd_converge(const Context& ctx) {
  const RunConfig& c = ctx.cfg;
  std::vector<OrderRow> rows;
  std::vector<std::pair<std::string, double>> fits;
  std::vector<int> orders = c.sweep.orders.empty() ? std::vector<int>{c.discretization.order} : c.sweep.orders;
  const bool one_d = c.domain.type == "interval";

  if (c.sweep.kind == "dt") {
    // Distance to the direct solution with the same lumping under step refinement.
    const Scenario sc = build_scenario(c);
    for (int order : orders) {
      FeRun fe = build_fe(sc, order);
      const ComplexField ustar = direct_solve(assemble_helmholtz(*fe.sys, true));
      const std::string name = "P" + std::to_string(order) + "-" + scheme_name(c.discretization.scheme);
      std::vector<double> hs, es;
      for (double f : c.sweep.refinements) {
        CmcgOptions o = cmcg_options(ctx, *fe.sys, f);
        const CmcgResult res = cmcg_solve(*fe.sys, o);
        ComplexField d = res.u;
        for (std::size_t i = 0; i < d.size(); ++i) {
          d.re[i] -= ustar.re[i];
          d.im[i] -= ustar.im[i];
        }
        const double e = l2_norm(*fe.space, d);
        OrderRow row{name, res.dt, e};
        if (!hs.empty()) row.slope = std::log(es.back() / e) / std::log(hs.back() / res.dt);
        hs.push_back(res.dt);
        es.push_back(e);
        rows.push_back(row);
        ctx.log("%s dt %.4e  |u_h - u_h*| %.4e\n", name.c_str(), res.dt, e);
      }
      fits.emplace_back(name, fitted_order(hs, es));
    }
  } else {
    const bool hdg = c.discretization.formulation == Formulation::Hdg;
    for (int order : orders) {
      std::vector<double> hs, es, es_post;
      const std::size_t levels = one_d ? c.sweep.cells.size() : c.sweep.h.size();
      if (levels < 2) throw ConfigError("converge needs at least two sweep levels");
      for (std::size_t l = 0; l < levels; ++l) {
        const Scenario sc = one_d ? build_scenario(c, c.sweep.cells[l]) : build_scenario(c, {}, c.sweep.h[l]);
        if (!sc.exact) throw ConfigError("converge requires a problem with a closed-form solution");
        const double h = mesh_size(*sc.problem.mesh);
        double e = 0.0, ep = std::nan("");
        if (hdg) {
          HdgOperator op(sc.problem, order, c.discretization.mass_coeff);
          MixedOptions mo;
          mo.tol = c.solver.tol;
          mo.max_iter = c.solver.max_iter;
          mo.min_steps = hdg_steps_floor(op, c.discretization, c.discretization.step_refinement);
          const MixedResult res = cmcg_solve_mixed(op, sc.problem, mo);
          e = dg_l2_error(op, res.u_filtered, sc.exact);
          ep = dg_l2_error(op, res.u_postprocessed, sc.exact);
        } else {
          FeRun fe = build_fe(sc, order);
          const CmcgResult res = cmcg_solve(*fe.sys, cmcg_options(ctx, *fe.sys, c.discretization.step_refinement));
          e = l2_error(*fe.space, res.u, sc.exact);
        }
        const std::string name = (hdg ? "HDG" : "P") + std::to_string(order);
        OrderRow row{name, h, e};
        if (!hs.empty()) row.slope = std::log(es.back() / e) / std::log(hs.back() / h);
        rows.push_back(row);
        if (hdg) {
          OrderRow prow{name + "-post", h, ep};
          if (!hs.empty()) prow.slope = std::log(es_post.back() / ep) / std::log(hs.back() / h);
          rows.push_back(prow);
          es_post.push_back(ep);
        }
        hs.push_back(h);
        es.push_back(e);
        ctx.log("%s%d h %.4e  error %.4e%s\n", hdg ? "HDG" : "P", order, h, e,
                hdg ? ("  post " + std::to_string(ep)).c_str() : "");
      }
      const std::string name = (hdg ? "HDG" : "P") + std::to_string(order);
      fits.emplace_back(name, fitted_order(hs, es));
      if (hdg) fits.emplace_back(name + "-post", fitted_order(hs, es_post));
    }
  }
  for (const auto& [name, s] : fits) ctx.log("fitted order %s: %.3f\n", name.c_str(), s);
  write_orders_csv(ctx.out / "orders.csv", rows, fits);
  return 0;
}

inline int cmd_compare(const Context& ctx) {
  const RunConfig& c = ctx.cfg;
  const Scenario sc = build_scenario(c);
  FeRun fe = build_fe(sc, c.discretization.order);
  CmcgOptions o = cmcg_options(ctx, *fe.sys, c.discretization.step_refinement);
  o.callback = [&](const IterationRecord& r) { print_record(ctx, r); };
  const CmcgResult res = cmcg_solve(*fe.sys, o);
  const long periods = c.solver.do_nothing_periods > 0 ? c.solver.do_nothing_periods : res.history.back().cumulative_periods;
  const DoNothingResult dn =
      do_nothing_solve(*fe.sys, c.discretization.scheme, static_cast<int>(periods), 0, res.steps_per_period);
  const ComplexField ustar = direct_solve(assemble_helmholtz(*fe.sys, false));
  auto dist = [&](const ComplexField& u) {
    ComplexField d = u;
    for (std::size_t i = 0; i < d.size(); ++i) {
      d.re[i] -= ustar.re[i];
      d.im[i] -= ustar.im[i];
    }
    return l2_norm(*fe.space, d) / l2_norm(*fe.space, ustar);
  };
  ctx.log("after %ld wave periods: CMCG |u|_J %.3e, do-nothing |w|_J %.3e\n", periods, res.history.back().misfit_J,
          dn.misfit.back());
  ctx.log("relative L2 distance to the direct solution: CMCG %.3e, do-nothing %.3e\n", dist(res.u), dist(dn.u));
  if (c.output.history) write_history_csv(ctx.out / "history.csv", res.history);
  auto out = detail::open_output(ctx.out / "do_nothing.csv");
  out << "# cmcg-do-nothing v1\nperiod,misfit_J\n";
  for (std::size_t l = 0; l < dn.misfit.size(); ++l) out << l + 1 << ',' << format_double(dn.misfit[l]) << '\n';
  return 0;
}

inline int cmd_runup(const Context& ctx) {
  const RunConfig& c = ctx.cfg;
  const Scenario sc = build_scenario(c);
  FeRun fe = build_fe(sc, c.discretization.order);
  auto out = detail::open_output(ctx.out / "runup.csv");
  out << "# cmcg-runup v1\nell,iterations,total_periods,converged\n";
  for (int ell : c.solver.runup_values) {
    CmcgOptions o = cmcg_options(ctx, *fe.sys, c.discretization.step_refinement);
    o.runup_periods = ell;
    o.filter = false;
    const CmcgResult res = cmcg_solve(*fe.sys, o);
    const long total = ell + 2L * res.iterations;
    ctx.log("ell %3d  iterations %4d  total periods %5ld%s\n", ell, res.iterations, total, res.converged ? "" : "  (not converged)");
    out << ell << ',' << res.iterations << ',' << total << ',' << (res.converged ? 1 : 0) << '\n';
  }
  return 0;
}

/// Entry point shared by the executable and the tests. Returns the process exit code.
inline int run(int argc, const char* const* argv) {
  CLI::App cli{"Time-harmonic wave solver based on exact controllability"};
  cli.require_subcommand(1);
  std::string config;
  std::string out_dir;
  int threads = 0;
  bool quiet = false;
  cli.add_option("--config", config, "configuration file (YAML)")->required()->check(CLI::ExistingFile);
  cli.add_option("--threads", threads, "number of threads for sparse kernels")->check(CLI::NonNegativeNumber);
  cli.add_option("--out", out_dir, "output directory (overrides output.dir)");
  cli.add_flag("--quiet", quiet, "suppress progress output");
  cli.fallthrough();
  auto* solve = cli.add_subcommand("solve", "controllability solve");
  auto* direct = cli.add_subcommand("direct", "reference direct Helmholtz solve");
  auto* converge = cli.add_subcommand("converge", "mesh or time step convergence sweep");
  auto* compare = cli.add_subcommand("compare", "controllability against the long-time wave solution");
  auto* runup = cli.add_subcommand("runup-study", "cost of the controllability solve against the run-up length");
  try {
    cli.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return cli.exit(e);
  }
  try {
    if (threads > 0) omp_set_num_threads(threads);
    Context ctx;
    ctx.cfg = load_config_file(config);
    ctx.out = out_dir.empty() ? std::filesystem::path(ctx.cfg.output.dir) : std::filesystem::path(out_dir);
    ctx.quiet = quiet;
    std::filesystem::create_directories(ctx.out);
    if (solve->parsed()) return cmd_solve(ctx);
    if (direct->parsed()) return cmd_direct(ctx);
    if (converge->parsed()) return cmd_converge(ctx);
    if (compare->parsed()) return cmd_compare(ctx);
    if (runup->parsed()) return cmd_runup(ctx);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}

}  // namespace cmcg::app
