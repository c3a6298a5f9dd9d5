#include <cstdio>
#include <fstream>
#include <iostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rd/adapt.hpp"
#include "rd/amg.hpp"
#include "rd/bench.hpp"
#include "rd/io.hpp"
#include "rd/parallel.hpp"

namespace {

// Rows whose converged flag is 0 make the process exit nonzero; the run
// itself always completes.
int failed_rows(const rd::EocTable& t) {
  int bad = 0;
  for (size_t r = 0; r < t.rows.size(); ++r) {
    bool has = true;
    int c = 0;
    try {
      c = rd::column_index(t, "converged");
    } catch (const std::out_of_range&) {
      has = false;
    }
    if (has && t.rows[r][static_cast<size_t>(c)] == 0.0) ++bad;
  }
  return bad;
}

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(out_path);
  if (!out) throw std::runtime_error("cannot open output file " + out_path);
  out << text;
}

struct CommonOpts {
  rd::ExperimentConfig cfg;
  std::string precond = "amg";
  std::string example = "smooth";
};

void add_common(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--rho", o.cfg.rho_list, "regularization parameters");
  cmd->add_option("--n", o.cfg.n_list, "mesh resolutions (h = 1/n)");
  cmd->add_option("--p", o.cfg.p, "subdomain count for bddc");
  cmd->add_option("--precond", o.precond,
                  "preconditioner: none|jacobi|amg|bddc");
  cmd->add_option("--tol", o.cfg.tol, "PCG relative tolerance");
  cmd->add_option("--threads", o.cfg.threads, "worker thread count");
  cmd->add_option("--seed", o.cfg.seed, "determinism anchor recorded in runs");
  cmd->add_option("--out", o.cfg.output, "CSV output path (default stdout)");
  cmd->add_option("--budget", o.cfg.dof_budget, "adaptive dof budget");
  cmd->add_option("--theta", o.cfg.theta, "bulk marking parameter");
  cmd->add_option("--example", o.example, "target: smooth|box|nonzero_bc");
  cmd->add_flag("--gnuplot", o.cfg.gnuplot,
                "emit whitespace-separated per-rho blocks instead of CSV");
}

rd::ExperimentConfig finish(CommonOpts& o) {
  o.cfg.precond = rd::precond_from_name(o.precond);
  o.cfg.example = rd::example_from_name(o.example);
  return o.cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"reaction-diffusion FEM benchmark harness"};
  app.require_subcommand(1);

  CommonOpts table_h_opts, table_rho_opts, precond_opts, adapt_opts, vtk_opts;

  CLI::App* cmd_table_h = app.add_subcommand(
      "table-h", "L2/H1 errors against the closed-form solution over h");
  add_common(cmd_table_h, table_h_opts);
  table_h_opts.cfg.rho_list = {1.0, 1e-4, 1e-8};
  table_h_opts.cfg.n_list = {4, 8, 16, 32};

  CLI::App* cmd_table_rho = app.add_subcommand(
      "table-rho", "squared target errors with mesh size matched to rho");
  add_common(cmd_table_rho, table_rho_opts);
  table_rho_opts.cfg.rho_list = {1.0, 1e-1, 1e-2, 1e-3, 1e-4};

  CLI::App* cmd_precond = app.add_subcommand(
      "bench-precond", "PCG iteration counts and timings per (rho, n)");
  add_common(cmd_precond, precond_opts);
  precond_opts.cfg.rho_list = {1.0, 1e-2, 1e-4, 1e-6, 1e-8, 1e-10, 1e-12};
  precond_opts.cfg.n_list = {8, 16, 32};

  CLI::App* cmd_adapt = app.add_subcommand(
      "adapt", "adaptive refinement history per rho, plus an eoc summary");
  add_common(cmd_adapt, adapt_opts);
  adapt_opts.cfg.rho_list = {1e-2, 1e-3, 1e-4};
  adapt_opts.cfg.dof_budget = 200000;
  adapt_opts.example = "box";

  CLI::App* cmd_vtk = app.add_subcommand(
      "export-vtk", "solve one configuration and write mesh, state, and "
                    "recovered control to a legacy VTK file");
  add_common(cmd_vtk, vtk_opts);
  vtk_opts.cfg.rho_list = {1e-4};
  vtk_opts.cfg.n_list = {16};

  CLI11_PARSE(app, argc, argv);

  try {
    if (cmd_table_h->parsed()) {
      rd::ExperimentConfig cfg = finish(table_h_opts);
      rd::EocTable t = rd::run_convergence_table(cfg);
      emit(cfg.gnuplot ? rd::gnuplot_blocks(t, "rho") : rd::to_csv(t),
           cfg.output);
      int bad = failed_rows(t);
      if (bad) {
        std::cerr << bad << " row(s) did not converge\n";
        return 1;
      }
    } else if (cmd_table_rho->parsed()) {
      rd::ExperimentConfig cfg = finish(table_rho_opts);
      rd::EocTable t = rd::run_rho_coupled_table(cfg);
      emit(cfg.gnuplot ? rd::gnuplot_blocks(t, "rho") : rd::to_csv(t),
           cfg.output);
      int bad = failed_rows(t);
      if (bad) {
        std::cerr << bad << " row(s) did not converge\n";
        return 1;
      }
    } else if (cmd_precond->parsed()) {
      rd::ExperimentConfig cfg = finish(precond_opts);
      rd::EocTable t = rd::run_precond_bench(cfg);
      emit(cfg.gnuplot ? rd::gnuplot_blocks(t, "rho") : rd::to_csv(t),
           cfg.output);
      int bad = failed_rows(t);
      if (bad) {
        std::cerr << bad << " row(s) did not converge\n";
        return 1;
      }
    } else if (cmd_adapt->parsed()) {
      rd::ExperimentConfig cfg = finish(adapt_opts);
      rd::EocTable t = rd::run_adaptive_experiment(cfg);
      rd::EocTable s = rd::adaptive_rho_summary(t);
      std::string text;
      if (cfg.gnuplot) {
        text = rd::gnuplot_blocks(t, "rho");
      } else {
        text = rd::to_csv(t);
        text += "\n";
        text += rd::to_csv(s);
      }
      emit(text, cfg.output);
    } else if (cmd_vtk->parsed()) {
      rd::ExperimentConfig cfg = finish(vtk_opts);
      rd::validate(cfg);
      if (cfg.output.empty())
        throw std::invalid_argument("export-vtk needs --out");
      if (cfg.n_list.empty() || cfg.rho_list.empty())
        throw std::invalid_argument("export-vtk needs --rho and --n");
      rd::set_num_threads(cfg.threads);
      double rho = cfg.rho_list.front();
      rd::TargetField target = rd::make_target(cfg.example);
      rd::TetMesh mesh = rd::build_structured_cube(cfg.n_list.front());
      rd::FemSystem sys = rd::build_system(mesh, rho, target);
      rd::SolveOutcome res =
          rd::solve_system(mesh, sys, cfg.precond, cfg.p, cfg.tol);
      rd::Solution sol = rd::make_solution(mesh, sys, res.u);
      rd::Vec u = rd::nodal_field(mesh, sys.dof_map, sol.coefficients);
      rd::Vec z = rd::recover_control(sol, target);
      rd::Vec tgt(mesh.n_vertices());
      for (int v = 0; v < mesh.n_vertices(); ++v)
        tgt[v] = target.evaluator(mesh.vertices[static_cast<size_t>(v)]);
      rd::write_vtk(cfg.output, mesh,
                    {{"state", u}, {"control", z}, {"target", tgt}});
      if (!res.converged) {
        std::cerr << "solve did not converge\n";
        return 1;
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
