#pragma once

#include <string>
#include <vector>

#include "rd/adapt.hpp"
#include "rd/assembly.hpp"
#include "rd/linalg.hpp"
#include "rd/mesh.hpp"
#include "rd/target.hpp"

namespace rd {

enum class PrecondKind { none, jacobi, amg, bddc };
enum class ExampleKind { smooth, box, nonzero_bc };

struct ExperimentConfig {
  ExampleKind example = ExampleKind::smooth;
  std::vector<double> rho_list;
  std::vector<int> n_list;
  int dof_budget = 0;
  PrecondKind precond = PrecondKind::amg;
  int p = 2;
  double tol = 1e-8;
  int threads = 1;
  unsigned long seed = 0;
  std::string output;
  double theta = 0.5;
  bool gnuplot = false;
};

// Throws std::invalid_argument on violated field constraints.
void validate(const ExperimentConfig& cfg);

std::string config_to_json(const ExperimentConfig& cfg);
ExperimentConfig config_from_json(const std::string& text);

std::string precond_name(PrecondKind k);
PrecondKind precond_from_name(const std::string& name);
std::string example_name(ExampleKind k);
ExampleKind example_from_name(const std::string& name);

TargetField make_target(ExampleKind k);

// Mesh resolution matched to rho (h ~ sqrt(rho)); never below 1.
int matched_n(double rho);

struct SolveOutcome {
  Vec u;
  int iterations = 0;
  bool converged = false;
  double setup_seconds = 0.0;
  double solve_seconds = 0.0;
};

SolveOutcome solve_system(const TetMesh& mesh, const FemSystem& sys,
                          PrecondKind kind, int p, double tol);

// eoc between successive mesh resolutions (h = 1/n) or parameters.
double eoc_generic(double e_prev, double e_cur, double x_prev, double x_cur);

// Numeric result table; eoc cells of first rows are NaN and render empty.
struct EocTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

std::string to_csv(const EocTable& t);
int column_index(const EocTable& t, const std::string& name);
double cell(const EocTable& t, size_t row, const std::string& name);

// Drops columns whose name ends in "seconds" (for determinism comparisons).
std::string to_csv_without_timing(const EocTable& t);

// Whitespace-separated per-group data blocks separated by blank lines.
std::string gnuplot_blocks(const EocTable& t, const std::string& group_col);

// Per (rho, n): L2 and H1-seminorm errors against the closed-form solution.
EocTable run_convergence_table(const ExperimentConfig& cfg);

// Per rho with n = matched_n(rho): squared target errors in the discrete
// dual norm and L2, with eoc over the rho ratios.
EocTable run_rho_coupled_table(const ExperimentConfig& cfg);

// Iteration counts and timings per (rho, n) for the chosen preconditioner.
EocTable run_precond_bench(const ExperimentConfig& cfg);

// Adaptive refinement history per rho (one row per level).
EocTable run_adaptive_experiment(const ExperimentConfig& cfg);

// Final-level summary per rho with eoc columns, from the history table.
EocTable adaptive_rho_summary(const EocTable& levels);

}  // namespace rd
