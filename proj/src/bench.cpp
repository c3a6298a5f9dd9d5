#include "rd/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <utility>

#include <json.hpp>

#include "rd/amg.hpp"
#include "rd/bddc.hpp"
#include "rd/parallel.hpp"

namespace rd {

namespace {

using json = nlohmann::ordered_json;
using clock_type = std::chrono::steady_clock;

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

double seconds_between(clock_type::time_point a, clock_type::time_point b) {
  return std::chrono::duration<double>(b - a).count();
}

bool integer_column(const std::string& name) {
  return name == "n" || name == "p" || name == "level" || name == "dofs" ||
         name == "iterations" || name == "converged";
}

bool timing_column(const std::string& name) {
  return name.size() >= 7 &&
         name.compare(name.size() - 7, 7, "seconds") == 0;
}

std::string format_cell(const std::string& name, double v, bool blank_nan) {
  if (std::isnan(v)) return blank_nan ? std::string() : std::string("nan");
  char buf[48];
  if (integer_column(name)) {
    std::snprintf(buf, sizeof buf, "%lld",
                  static_cast<long long>(std::llround(v)));
  } else {
    std::snprintf(buf, sizeof buf, "%.6e", v);
  }
  return buf;
}

// Dual-norm solver for K used by the rho-coupled table; dense factorization
// is fine for small systems, larger ones reuse a multigrid hierarchy.
double target_dual_norm(const FemSystem& sys, const Solution& sol) {
  Vec r = target_residual(sol);
  if (sys.dof_map.n_dofs() <= 2000) return hminus1_norm(sys, r);
  AmgHierarchy hk = build_amg(sys.K);
  LinOp kinv = [&hk, &sys](const Vec& b) {
    return pcg(sys.K, amg_precond(hk), b, 1e-11, 500).x;
  };
  return hminus1_norm_with(sys, r, kinv);
}

SystemSolver solver_from(PrecondKind kind, int p, double tol) {
  return [kind, p, tol](const TetMesh& mesh, const FemSystem& sys) {
    SolveOutcome out = solve_system(mesh, sys, kind, p, tol);
    PcgResult res;
    res.x = std::move(out.u);
    res.report.iterations = out.iterations;
    res.report.converged = out.converged;
    return res;
  };
}

}  // namespace

void validate(const ExperimentConfig& cfg) {
  if (cfg.rho_list.empty())
    throw std::invalid_argument("config: rho_list must not be empty");
  for (double rho : cfg.rho_list)
    if (!(rho > 0.0))
      throw std::invalid_argument("config: rho values must be positive");
  for (int n : cfg.n_list)
    if (n < 1)
      throw std::invalid_argument("config: mesh resolutions must be >= 1");
  if (!(cfg.tol > 0.0))
    throw std::invalid_argument("config: tol must be positive");
  if (cfg.precond == PrecondKind::bddc && cfg.p < 2)
    throw std::invalid_argument("config: bddc requires p >= 2");
  if (cfg.threads < 1)
    throw std::invalid_argument("config: threads must be >= 1");
  if (!(cfg.theta > 0.0) || cfg.theta > 1.0)
    throw std::invalid_argument("config: theta must lie in (0, 1]");
  if (cfg.dof_budget < 0)
    throw std::invalid_argument("config: dof_budget must be >= 0");
}

std::string precond_name(PrecondKind k) {
  switch (k) {
    case PrecondKind::none: return "none";
    case PrecondKind::jacobi: return "jacobi";
    case PrecondKind::amg: return "amg";
    case PrecondKind::bddc: return "bddc";
  }
  throw std::logic_error("unknown preconditioner kind");
}

PrecondKind precond_from_name(const std::string& name) {
  if (name == "none") return PrecondKind::none;
  if (name == "jacobi") return PrecondKind::jacobi;
  if (name == "amg") return PrecondKind::amg;
  if (name == "bddc") return PrecondKind::bddc;
  throw std::invalid_argument("unknown preconditioner: " + name);
}

std::string example_name(ExampleKind k) {
  switch (k) {
    case ExampleKind::smooth: return "smooth";
    case ExampleKind::box: return "box";
    case ExampleKind::nonzero_bc: return "nonzero_bc";
  }
  throw std::logic_error("unknown example kind");
}

ExampleKind example_from_name(const std::string& name) {
  if (name == "smooth") return ExampleKind::smooth;
  if (name == "box") return ExampleKind::box;
  if (name == "nonzero_bc") return ExampleKind::nonzero_bc;
  throw std::invalid_argument("unknown example: " + name);
}

std::string config_to_json(const ExperimentConfig& cfg) {
  json j;
  j["example"] = example_name(cfg.example);
  j["rho_list"] = cfg.rho_list;
  j["n_list"] = cfg.n_list;
  j["dof_budget"] = cfg.dof_budget;
  j["precond"] = precond_name(cfg.precond);
  j["p"] = cfg.p;
  j["tol"] = cfg.tol;
  j["threads"] = cfg.threads;
  j["seed"] = cfg.seed;
  j["output"] = cfg.output;
  j["theta"] = cfg.theta;
  j["gnuplot"] = cfg.gnuplot;
  return j.dump(2) + "\n";
}

ExperimentConfig config_from_json(const std::string& text) {
  json j = json::parse(text);
  ExperimentConfig cfg;
  cfg.example = example_from_name(j.at("example").get<std::string>());
  cfg.rho_list = j.at("rho_list").get<std::vector<double>>();
  cfg.n_list = j.at("n_list").get<std::vector<int>>();
  cfg.dof_budget = j.at("dof_budget").get<int>();
  cfg.precond = precond_from_name(j.at("precond").get<std::string>());
  cfg.p = j.at("p").get<int>();
  cfg.tol = j.at("tol").get<double>();
  cfg.threads = j.at("threads").get<int>();
  cfg.seed = j.at("seed").get<unsigned long>();
  cfg.output = j.at("output").get<std::string>();
  cfg.theta = j.at("theta").get<double>();
  cfg.gnuplot = j.at("gnuplot").get<bool>();
  return cfg;
}

TargetField make_target(ExampleKind k) {
  switch (k) {
    case ExampleKind::smooth: return target_smooth();
    case ExampleKind::box: return target_box();
    case ExampleKind::nonzero_bc: return target_nonzero_bc();
  }
  throw std::logic_error("unknown example kind");
}

int matched_n(double rho) {
  if (!(rho > 0.0)) throw std::invalid_argument("matched_n: rho must be positive");
  // The floating-point slack keeps exact decades (rho = 1e-4 -> n = 100)
  // from rounding up one extra cell.
  int n = static_cast<int>(std::ceil(1.0 / std::sqrt(rho) - 1e-9));
  return std::max(n, 1);
}

SolveOutcome solve_system(const TetMesh& mesh, const FemSystem& sys,
                          PrecondKind kind, int p, double tol) {
  SolveOutcome out;
  if (sys.f.size() == 0) {
    out.u = Vec(0);
    out.converged = true;
    return out;
  }
  auto t0 = clock_type::now();
  switch (kind) {
    case PrecondKind::none: {
      Mat Ad = to_dense(sys.A);
      auto t1 = clock_type::now();
      out.u = dense_cholesky_solve(Ad, sys.f);
      out.converged = true;
      out.setup_seconds = seconds_between(t0, t1);
      out.solve_seconds = seconds_between(t1, clock_type::now());
      return out;
    }
    case PrecondKind::jacobi: {
      LinOp P = jacobi_precond(sys.A);
      auto t1 = clock_type::now();
      PcgResult res = pcg(sys.A, P, sys.f, tol, 500);
      out.u = std::move(res.x);
      out.iterations = res.report.iterations;
      out.converged = res.report.converged;
      out.setup_seconds = seconds_between(t0, t1);
      out.solve_seconds = seconds_between(t1, clock_type::now());
      return out;
    }
    case PrecondKind::amg: {
      AmgHierarchy h = build_amg(sys.A);
      auto t1 = clock_type::now();
      PcgResult res = pcg(sys.A, amg_precond(h), sys.f, tol, 500);
      out.u = std::move(res.x);
      out.iterations = res.report.iterations;
      out.converged = res.report.converged;
      out.setup_seconds = seconds_between(t0, t1);
      out.solve_seconds = seconds_between(t1, clock_type::now());
      return out;
    }
    case PrecondKind::bddc: {
      Partition part = partition_geometric(mesh, sys.dof_map, p);
      BddcOperator op = build_bddc(mesh, sys, part);
      auto t1 = clock_type::now();
      Vec g = reduce_rhs(op, sys.f);
      PcgResult res = pcg(schur_op(op), bddc_precond(op), g, tol, 500);
      out.u = expand_solution(op, res.x, sys.f);
      out.iterations = res.report.iterations;
      out.converged = res.report.converged;
      out.setup_seconds = seconds_between(t0, t1);
      out.solve_seconds = seconds_between(t1, clock_type::now());
      return out;
    }
  }
  throw std::logic_error("unknown preconditioner kind");
}

double eoc_generic(double e_prev, double e_cur, double x_prev, double x_cur) {
  if (!(e_prev > 0.0) || !(e_cur > 0.0) || !(x_prev > 0.0) || !(x_cur > 0.0))
    return kNan;
  double d = std::log(x_prev / x_cur);
  if (d == 0.0) return kNan;
  return std::log(e_prev / e_cur) / d;
}

std::string to_csv(const EocTable& t) {
  std::ostringstream out;
  for (size_t c = 0; c < t.columns.size(); ++c) {
    if (c) out << ',';
    out << t.columns[c];
  }
  out << '\n';
  for (const auto& row : t.rows) {
    for (size_t c = 0; c < t.columns.size(); ++c) {
      if (c) out << ',';
      out << format_cell(t.columns[c], c < row.size() ? row[c] : kNan, true);
    }
    out << '\n';
  }
  return out.str();
}

int column_index(const EocTable& t, const std::string& name) {
  auto it = std::find(t.columns.begin(), t.columns.end(), name);
  if (it == t.columns.end())
    throw std::out_of_range("table has no column named " + name);
  return static_cast<int>(it - t.columns.begin());
}

double cell(const EocTable& t, size_t row, const std::string& name) {
  if (row >= t.rows.size()) throw std::out_of_range("table row out of range");
  return t.rows[row][static_cast<size_t>(column_index(t, name))];
}

std::string to_csv_without_timing(const EocTable& t) {
  EocTable s;
  std::vector<size_t> keep;
  for (size_t c = 0; c < t.columns.size(); ++c) {
    if (timing_column(t.columns[c])) continue;
    keep.push_back(c);
    s.columns.push_back(t.columns[c]);
  }
  for (const auto& row : t.rows) {
    std::vector<double> r;
    r.reserve(keep.size());
    for (size_t c : keep) r.push_back(c < row.size() ? row[c] : kNan);
    s.rows.push_back(std::move(r));
  }
  return to_csv(s);
}

std::string gnuplot_blocks(const EocTable& t, const std::string& group_col) {
  int gc = column_index(t, group_col);
  std::ostringstream out;
  out << '#';
  for (const auto& c : t.columns) out << ' ' << c;
  out << '\n';
  bool have_group = false;
  double group = 0.0;
  for (const auto& row : t.rows) {
    double g = row[static_cast<size_t>(gc)];
    if (!have_group || g != group) {
      if (have_group) out << "\n\n";
      out << "# " << group_col << " = " << format_cell(group_col, g, false)
          << '\n';
      group = g;
      have_group = true;
    }
    for (size_t c = 0; c < t.columns.size(); ++c) {
      if (c) out << ' ';
      out << format_cell(t.columns[c], c < row.size() ? row[c] : kNan, false);
    }
    out << '\n';
  }
  return out.str();
}

EocTable run_convergence_table(const ExperimentConfig& cfg) {
  validate(cfg);
  if (cfg.example != ExampleKind::smooth)
    throw std::invalid_argument("convergence table needs the smooth example");
  if (cfg.n_list.empty())
    throw std::invalid_argument("convergence table needs a mesh list");
  set_num_threads(cfg.threads);
  TargetField target = make_target(cfg.example);
  EocTable t;
  t.columns = {"rho", "n", "h", "l2_error", "l2_eoc", "h1_error", "h1_eoc",
               "iterations", "converged", "setup_seconds", "solve_seconds"};
  for (double rho : cfg.rho_list) {
    ManufacturedExact exact = manufactured_exact(rho);
    double prev_l2 = kNan, prev_h1 = kNan, prev_h = kNan;
    for (int n : cfg.n_list) {
      TetMesh mesh = build_structured_cube(n);
      FemSystem sys = build_system(mesh, rho, target);
      SolveOutcome res = solve_system(mesh, sys, cfg.precond, cfg.p, cfg.tol);
      Solution sol = make_solution(mesh, sys, res.u);
      double h = 1.0 / n;
      double el2 = l2_error(sol, exact.u);
      double eh1 = h1_semi_error(sol, exact.grad_u);
      t.rows.push_back({rho, double(n), h, el2,
                        eoc_generic(prev_l2, el2, prev_h, h), eh1,
                        eoc_generic(prev_h1, eh1, prev_h, h),
                        double(res.iterations), res.converged ? 1.0 : 0.0,
                        res.setup_seconds, res.solve_seconds});
      prev_l2 = el2;
      prev_h1 = eh1;
      prev_h = h;
    }
  }
  return t;
}

EocTable run_rho_coupled_table(const ExperimentConfig& cfg) {
  validate(cfg);
  if (cfg.example != ExampleKind::smooth)
    throw std::invalid_argument("rho-coupled table needs the smooth example");
  set_num_threads(cfg.threads);
  TargetField target = make_target(cfg.example);
  EocTable t;
  // eoc convention in this table: the *squared* norms are the tabulated
  // quantities, so eoc = log(e_prev^2 / e_cur^2) / log(rho_prev / rho_cur);
  // over one decade of rho this is the base-10 log of the ratio of squares.
  t.columns = {"rho", "n", "dofs", "hm1_sq", "hm1_eoc", "l2_sq", "l2_eoc",
               "iterations", "converged", "setup_seconds", "solve_seconds"};
  double prev_rho = kNan, prev_hm1 = kNan, prev_l2 = kNan;
  for (double rho : cfg.rho_list) {
    int n = matched_n(rho);
    TetMesh mesh = build_structured_cube(n);
    FemSystem sys = build_system(mesh, rho, target);
    SolveOutcome res = solve_system(mesh, sys, cfg.precond, cfg.p, cfg.tol);
    Solution sol = make_solution(mesh, sys, res.u);
    double l2_sq = l2_error_target_squared(sol, target);
    double hm1 = target_dual_norm(sys, sol);
    double hm1_sq = hm1 * hm1;
    t.rows.push_back({rho, double(n), double(sys.dof_map.n_dofs()), hm1_sq,
                      eoc_generic(prev_hm1, hm1_sq, prev_rho, rho), l2_sq,
                      eoc_generic(prev_l2, l2_sq, prev_rho, rho),
                      double(res.iterations), res.converged ? 1.0 : 0.0,
                      res.setup_seconds, res.solve_seconds});
    prev_rho = rho;
    prev_hm1 = hm1_sq;
    prev_l2 = l2_sq;
  }
  return t;
}

EocTable run_precond_bench(const ExperimentConfig& cfg) {
  validate(cfg);
  if (cfg.precond != PrecondKind::amg && cfg.precond != PrecondKind::bddc)
    throw std::invalid_argument("preconditioner benchmark needs amg or bddc");
  if (cfg.n_list.empty())
    throw std::invalid_argument("preconditioner benchmark needs a mesh list");
  set_num_threads(cfg.threads);
  TargetField target = make_target(cfg.example);
  bool bddc = cfg.precond == PrecondKind::bddc;
  EocTable t;
  if (bddc)
    t.columns = {"rho", "n", "p", "dofs", "iterations", "converged",
                 "setup_seconds", "solve_seconds"};
  else
    t.columns = {"rho", "n", "dofs", "iterations", "converged",
                 "setup_seconds", "solve_seconds"};
  for (double rho : cfg.rho_list) {
    for (int n : cfg.n_list) {
      TetMesh mesh = build_structured_cube(n);
      FemSystem sys = build_system(mesh, rho, target);
      SolveOutcome res = solve_system(mesh, sys, cfg.precond, cfg.p, cfg.tol);
      std::vector<double> row = {rho, double(n)};
      if (bddc) row.push_back(double(cfg.p));
      row.insert(row.end(),
                 {double(sys.dof_map.n_dofs()), double(res.iterations),
                  res.converged ? 1.0 : 0.0, res.setup_seconds,
                  res.solve_seconds});
      t.rows.push_back(std::move(row));
    }
  }
  return t;
}

EocTable run_adaptive_experiment(const ExperimentConfig& cfg) {
  validate(cfg);
  if (cfg.example == ExampleKind::smooth)
    throw std::invalid_argument(
        "adaptive experiment needs the box or nonzero_bc example");
  if (cfg.dof_budget < 1)
    throw std::invalid_argument("adaptive experiment needs a dof budget");
  set_num_threads(cfg.threads);
  TargetField target = make_target(cfg.example);
  SystemSolver solver = solver_from(cfg.precond, cfg.p, cfg.tol);
  TetMesh initial = build_structured_cube(8);
  EocTable t;
  t.columns = {"rho", "level", "dofs", "eta", "l2_sq", "hm1_sq", "iterations",
               "seconds"};
  for (double rho : cfg.rho_list) {
    AdaptResult res =
        adaptive_solve(initial, target, rho, cfg.dof_budget, solver, cfg.theta);
    for (const AdaptLevel& lv : res.history) {
      t.rows.push_back({rho, double(lv.level), double(lv.dofs), lv.eta,
                        lv.err_l2_sq, lv.err_hm1_sq, double(lv.iterations),
                        lv.seconds});
    }
  }
  return t;
}

EocTable adaptive_rho_summary(const EocTable& levels) {
  int rc = column_index(levels, "rho");
  int dc = column_index(levels, "dofs");
  int lc = column_index(levels, "l2_sq");
  int hc = column_index(levels, "hm1_sq");
  EocTable t;
  t.columns = {"rho", "dofs", "l2_sq", "l2_eoc", "hm1_sq", "hm1_eoc"};
  std::vector<std::vector<double>> finals;
  for (size_t i = 0; i < levels.rows.size(); ++i) {
    bool last_of_group = i + 1 == levels.rows.size() ||
                         levels.rows[i + 1][rc] != levels.rows[i][rc];
    if (last_of_group) finals.push_back(levels.rows[i]);
  }
  double prev_rho = kNan, prev_l2 = kNan, prev_hm1 = kNan;
  for (const auto& row : finals) {
    double rho = row[rc], l2 = row[lc], hm1 = row[hc];
    t.rows.push_back({rho, row[dc], l2, eoc_generic(prev_l2, l2, prev_rho, rho),
                      hm1, eoc_generic(prev_hm1, hm1, prev_rho, rho)});
    prev_rho = rho;
    prev_l2 = l2;
    prev_hm1 = hm1;
  }
  return t;
}

}  // namespace rd
