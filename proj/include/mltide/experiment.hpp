#pragma once

// Iteration-count sweeps and the self-check suite behind the command-line tool.
//
// A sweep point assembles the system for one mesh and parameter set, starts
// from rest with a small Gaussian bump in the top layer, takes one implicit
// midpoint step and records the GMRES iteration count. The CFL number is
// dt * max(nx, ny), i.e. dt / h.

#include <cmath>
#include <cstddef>
#include <iomanip>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "mltide/analysis.hpp"
#include "mltide/layers.hpp"
#include "mltide/precond.hpp"
#include "mltide/system.hpp"

namespace mltide {

enum class ExperimentKind { fr_sweep, cfl_sweep, layer_sweep, verify };

struct SolverChoice {
  PcVariant variant = PcVariant::weighted_norm;
  InnerSolver inner = InnerSolver::exact_direct;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::fr_sweep;
  std::vector<std::size_t> mesh_sizes{8, 16, 32, 64};
  std::size_t n_layers = 5;
  double rho_top = 1.03;
  double rho_bottom = 1.06;
  std::vector<double> froude{0.1, 0.5, 1.0, 3.0};
  std::vector<double> cfl{0.5, 1.0, 2.0, 4.0, 20.0};
  double fixed_froude = 1.0;  ///< Fr when sweeping CFL or layers
  double fixed_cfl = 1.0;     ///< CFL when sweeping Fr
  double rossby_inv = 1.0;
  double damping = 0.0;  ///< drag coefficient
  bool damping_bottom_only = true;
  SolverChoice solver;
  double rtol = 1e-5;
  std::size_t max_iterations = 2000;
  double amplitude = 0.01;
  double width = 0.1;

  // Layer sweep: one mesh, a range of layer counts, every solver configuration.
  std::size_t layer_mesh = 64;
  double layer_cfl = 2.0;
  std::vector<std::size_t> layer_counts{2, 3, 4, 5, 6, 7, 8, 9, 10};

  unsigned seed = 1;
  std::string out;

  void validate() const {
    auto fail = [](const std::string& m) { throw std::invalid_argument("experiment config: " + m); };
    if (mesh_sizes.empty()) fail("mesh size list is empty");
    for (auto m : mesh_sizes)
      if (m == 0) fail("mesh sizes must be positive");
    if (n_layers == 0) fail("need at least one layer");
    if (froude.empty()) fail("Froude list is empty");
    if (cfl.empty()) fail("CFL list is empty");
    if (layer_counts.empty()) fail("layer count list is empty");
    for (double v : froude)
      if (!(v > 0.0)) fail("Froude numbers must be positive");
    for (double v : cfl)
      if (!(v > 0.0)) fail("CFL numbers must be positive");
    for (auto n : layer_counts)
      if (n == 0) fail("layer counts must be positive");
    if (!(fixed_froude > 0.0) || !(fixed_cfl > 0.0) || !(layer_cfl > 0.0)) fail("fixed Fr and CFL must be positive");
    if (layer_mesh == 0) fail("layer-sweep mesh size must be positive");
    if (!(rossby_inv >= 0.0)) fail("rossby_inv must be nonnegative");
    if (!(damping >= 0.0)) fail("damping must be nonnegative");
    if (!(rtol > 0.0 && rtol < 1.0)) fail("rtol must lie in (0, 1)");
    if (max_iterations == 0) fail("iteration cap must be positive");
    if (!(width > 0.0) || amplitude == 0.0) fail("disturbance needs nonzero amplitude and positive width");
    stack(n_layers);  // density range check
  }

  LayerStack stack(std::size_t n) const {
    if (n > 1 && !(rho_bottom > rho_top)) {
      throw std::invalid_argument("experiment config: densities must strictly increase downward, got top " +
                                  std::to_string(rho_top) + " and bottom " + std::to_string(rho_bottom));
    }
    return LayerStack::equispaced(n, rho_top, rho_bottom);
  }
};

struct SweepPoint {
  std::size_t iterations = 0;
  bool converged = false;
};

/// One implicit midpoint step from the disturbed rest state; returns the
/// GMRES iteration count (the cap, flagged, if GMRES or the factorization fails).
inline SweepPoint run_point(const ExperimentConfig& cfg, std::size_t mesh_n, std::size_t n_layers, double froude,
                            double cfl, const SolverChoice& solver) {
  const Mesh mesh(mesh_n, mesh_n);
  const LayerStack stack = cfg.stack(n_layers);
  PhysicalParams p;
  p.froude = froude;
  p.rossby_inv = cfg.rossby_inv;
  const double dt = cfl / static_cast<double>(mesh_n);
  p.k = 0.5 * dt;
  if (cfg.damping > 0.0) {
    p.damping = cfg.damping_bottom_only ? PhysicalParams::bottom_only(n_layers, cfg.damping)
                                        : std::vector<double>(n_layers, cfg.damping);
  }
  const BlockSystem sys = assemble_block_system(mesh, stack, p);
  const State s0 = initial_disturbance(mesh, stack, cfg.amplitude, cfg.width);
  GmresOptions opts;
  opts.rtol = cfg.rtol;
  opts.max_iterations = cfg.max_iterations;
  try {
    const Preconditioner pc = build_preconditioner(sys, solver.variant, solver.inner);
    const StepResult r = midpoint_step(sys, s0, dt, pc, opts);
    return {r.report.iterations, true};
  } catch (const StepError&) {
    return {cfg.max_iterations, false};
  } catch (const PivotError&) {
    return {cfg.max_iterations, false};
  }
}

struct SweepTable {
  std::vector<std::string> metadata;  ///< written as '#' comment lines
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void write_csv(std::ostream& os) const {
    for (const auto& m : metadata) os << "# " << m << '\n';
    auto line = [&](const std::vector<std::string>& cells) {
      for (std::size_t i = 0; i < cells.size(); ++i) os << (i ? "," : "") << cells[i];
      os << '\n';
    };
    line(header);
    for (const auto& r : rows) line(r);
  }
};

namespace detail {

inline std::string format_value(double v) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(1) << v;
  std::string s = os.str();
  // keep one decimal (0.1, 1.0, 20.0) but not more than needed
  if (std::abs(std::stod(s) - v) > 1e-12) {
    os.str("");
    os << std::defaultfloat << std::setprecision(10) << v;
    s = os.str();
  }
  return s;
}

inline const char* solver_label(const SolverChoice& s) {
  switch (s.variant) {
    case PcVariant::full_ilu0: return "ilu";
    case PcVariant::weighted_norm: return s.inner == InnerSolver::exact_direct ? "wtd_norm_lu" : "wtd_norm_ilu";
    case PcVariant::layer_decoupled:
      return s.inner == InnerSolver::exact_direct ? "layer_decoupled_lu" : "layer_decoupled_ilu";
    case PcVariant::tridiagonal_reform: return s.inner == InnerSolver::exact_direct ? "tridiag_lu" : "tridiag_ilu";
  }
  return "?";
}

}  // namespace detail

/// The five solver configurations compared in the layer sweep.
inline std::vector<SolverChoice> layer_sweep_solvers() {
  return {{PcVariant::full_ilu0, InnerSolver::ilu0},
          {PcVariant::weighted_norm, InnerSolver::exact_direct},
          {PcVariant::layer_decoupled, InnerSolver::exact_direct},
          {PcVariant::weighted_norm, InnerSolver::ilu0},
          {PcVariant::layer_decoupled, InnerSolver::ilu0}};
}

/// Fr and CFL sweeps: one row per mesh size, one column per parameter value.
/// Layer sweep: one row per layer count, one column per solver configuration.
/// A trailing "flag" column is 1 when any entry of the row hit the iteration
/// cap or failed to factor.
inline SweepTable run_sweep(const ExperimentConfig& cfg) {
  cfg.validate();
  SweepTable t;
  std::ostringstream meta;
  meta << "CFL = dt * max(nx, ny) = dt / h; eps^-1 = " << cfg.rossby_inv << "; densities equispaced "
       << cfg.rho_top << " to " << cfg.rho_bottom << "; damping " << cfg.damping
       << (cfg.damping_bottom_only ? " (bottom layer)" : " (all layers)") << "; rtol " << cfg.rtol << "; cap "
       << cfg.max_iterations;
  t.metadata.push_back(meta.str());

  if (cfg.kind == ExperimentKind::layer_sweep) {
    t.metadata.push_back("layer sweep: mesh " + std::to_string(cfg.layer_mesh) + "x" +
                         std::to_string(cfg.layer_mesh) + ", CFL " + detail::format_value(cfg.layer_cfl) +
                         ", Fr = " + detail::format_value(cfg.fixed_froude) + " and eps^-1 = " +
                         detail::format_value(cfg.rossby_inv) + " (assumed values)");
    const auto solvers = layer_sweep_solvers();
    t.header.push_back("Nlayers");
    for (const auto& s : solvers) t.header.push_back(detail::solver_label(s));
    t.header.push_back("flag");
    for (std::size_t n : cfg.layer_counts) {
      std::vector<std::string> row{std::to_string(n)};
      bool flag = false;
      for (const auto& s : solvers) {
        const auto pt = run_point(cfg, cfg.layer_mesh, n, cfg.fixed_froude, cfg.layer_cfl, s);
        row.push_back(std::to_string(pt.iterations));
        flag = flag || !pt.converged;
      }
      row.push_back(flag ? "1" : "0");
      t.rows.push_back(std::move(row));
    }
    return t;
  }
  if (cfg.kind != ExperimentKind::fr_sweep && cfg.kind != ExperimentKind::cfl_sweep) {
    throw std::invalid_argument("run_sweep: not a sweep experiment");
  }

  const bool by_fr = cfg.kind == ExperimentKind::fr_sweep;
  const auto& values = by_fr ? cfg.froude : cfg.cfl;
  t.metadata.push_back(std::string(by_fr ? "Fr sweep" : "CFL sweep") + ": " + std::to_string(cfg.n_layers) +
                       " layers, preconditioner " + detail::solver_label(cfg.solver) + ", " +
                       (by_fr ? "CFL " + detail::format_value(cfg.fixed_cfl)
                              : "Fr " + detail::format_value(cfg.fixed_froude)));
  t.header.push_back("N");
  for (double v : values) t.header.push_back(detail::format_value(v));
  t.header.push_back("flag");
  for (std::size_t m : cfg.mesh_sizes) {
    std::vector<std::string> row{std::to_string(m)};
    bool flag = false;
    for (double v : values) {
      const double fr = by_fr ? v : cfg.fixed_froude;
      const double cfl = by_fr ? cfg.fixed_cfl : v;
      const auto pt = run_point(cfg, m, cfg.n_layers, fr, cfl, cfg.solver);
      row.push_back(std::to_string(pt.iterations));
      flag = flag || !pt.converged;
    }
    row.push_back(flag ? "1" : "0");
    t.rows.push_back(std::move(row));
  }
  return t;
}

/// Admissible stack with N uniform on [1, max_layers], rho_1 in [0.5, 2] and
/// strictly increasing densities whose total spread stays below rho_1.
inline LayerStack random_admissible_stack(std::mt19937_64& rng, std::size_t max_layers = 50) {
  std::uniform_int_distribution<std::size_t> count(1, max_layers);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::size_t n = count(rng);
  const double rho1 = 0.5 + 1.5 * unit(rng);
  const double spread = rho1 * (0.05 + 0.95 * unit(rng));
  std::vector<double> gaps(n > 1 ? n - 1 : 0);
  double total = 0.0;
  for (double& g : gaps) total += (g = 0.05 + unit(rng));
  std::vector<double> rho(n, rho1);
  for (std::size_t i = 1; i < n; ++i) rho[i] = rho[i - 1] + spread * gaps[i - 1] / total;
  return LayerStack(std::move(rho));
}

namespace detail {

inline void report_claim(std::ostream& os, bool& all, const std::string& name, bool pass, const std::string& detail) {
  os << (pass ? "PASS " : "FAIL ") << name << ": " << detail << '\n';
  all = all && pass;
}

inline std::string sci(double v) {
  std::ostringstream os;
  os << std::scientific << std::setprecision(3) << v;
  return os.str();
}

}  // namespace detail

/// Self-checks of the layer algebra, time stepping and stability estimates.
/// Writes one line per claim; returns true when every claim holds.
inline bool run_verification(const ExperimentConfig& cfg, std::ostream& os, std::size_t random_stacks = 1000) {
  cfg.validate();
  bool all = true;
  using detail::sci;

  // Layer algebra over random admissible stacks.
  std::mt19937_64 rng(cfg.seed);
  double worst_inverse = 0.0, worst_ldl = 0.0;
  std::size_t bracket_violations = 0;
  for (std::size_t t = 0; t < random_stacks; ++t) {
    const LayerStack s = random_admissible_stack(rng);
    const std::size_t n = s.size();
    const SymTridiagonal c = coupling_inverse(s);
    const DenseMatrix prod = c.to_dense() * coupling_matrix(s);
    worst_inverse = std::max(worst_inverse, max_abs_difference(prod, DenseMatrix::identity(n)) / static_cast<double>(n));
    const DenseMatrix cd = c.to_dense();
    double scale = 0.0;
    for (double v : cd.data()) scale = std::max(scale, std::abs(v));
    worst_ldl = std::max(worst_ldl, max_abs_difference(ldlt(c).reconstruct(), cd) / scale);
    const SpectralBounds b = spectral_bounds(s);
    if (!b.lambda_max_inside() || !b.lambda_min_inside()) ++bracket_violations;
  }
  detail::report_claim(os, all, "coupling inverse", worst_inverse < 1e-12,
                       "max |C A - I| / N = " + sci(worst_inverse) + " over " + std::to_string(random_stacks) +
                           " stacks (bound 1e-12)");
  detail::report_claim(os, all, "eigenvalue brackets", bracket_violations == 0,
                       std::to_string(bracket_violations) + " violations");
  detail::report_claim(os, all, "LDL^T reconstruction", worst_ldl < 1e-13,
                       "max relative entry error " + sci(worst_ldl) + " (bound 1e-13)");

  const LayerStack stack = cfg.stack(cfg.n_layers);
  const Mesh mesh8(8, 8);

  // Energy conservation and dissipation.
  {
    PhysicalParams p;
    p.froude = cfg.fixed_froude;
    p.rossby_inv = cfg.rossby_inv;
    p.k = 0.5 / 8.0;
    GmresOptions opts;
    opts.rtol = 1e-12;
    const BlockSystem sys = assemble_block_system(mesh8, stack, p);
    const Preconditioner pc = build_preconditioner(sys, PcVariant::weighted_norm, InnerSolver::exact_direct);
    State s = initial_disturbance(mesh8, stack, cfg.amplitude, cfg.width);
    const double e0 = energy(s, sys);
    double drift = 0.0;
    for (int step = 0; step < 100; ++step) {
      s = midpoint_step(sys, s, 2.0 * p.k, pc, opts).state;
      drift = std::max(drift, std::abs(energy(s, sys) - e0) / e0);
    }
    detail::report_claim(os, all, "energy conservation", drift < 1e-9,
                         "max relative drift " + sci(drift) + " over 100 steps (bound 1e-9)");

    p.damping = PhysicalParams::bottom_only(stack.size(), 0.1);
    const BlockSystem damped = assemble_block_system(mesh8, stack, p);
    const Preconditioner pcd = build_preconditioner(damped, PcVariant::weighted_norm, InnerSolver::exact_direct);
    s = initial_disturbance(mesh8, stack, cfg.amplitude, cfg.width);
    double prev = energy(s, damped);
    bool monotone = true;
    for (int step = 0; step < 100; ++step) {
      s = midpoint_step(damped, s, 2.0 * p.k, pcd, opts).state;
      const double e = energy(s, damped);
      monotone = monotone && e <= prev * (1.0 + 1e-12);
      prev = e;
    }
    detail::report_claim(os, all, "damped energy decay", monotone, "bottom drag 0.1, 100 steps");
  }

  // Tridiagonal reformulation against the coupled block.
  {
    PhysicalParams p;
    p.froude = cfg.fixed_froude;
    p.rossby_inv = cfg.rossby_inv;
    p.k = 0.5 / 8.0;
    const BlockSystem sys = assemble_block_system(mesh8, stack, p);
    const LdlFactors ldl = ldlt(coupling_inverse(stack));
    const CsrMatrix c = weighted_norm_block(sys);
    const CsrMatrix ct = tridiagonal_reform_block(sys, ldl);
    const std::size_t nv = sys.layer_velocity_size();
    std::normal_distribution<double> normal;
    std::mt19937_64 vr(cfg.seed + 1);
    double worst = 0.0;
    Vector u(c.rows()), v(c.rows());
    for (int trial = 0; trial < 100; ++trial) {
      for (double& x : u) x = normal(vr);
      for (double& x : v) x = normal(vr);
      // ut = (L^{-1} (x) I) u by forward substitution over layers
      Vector ut = u, vt = v;
      for (std::size_t i = 1; i < stack.size(); ++i)
        for (std::size_t d = 0; d < nv; ++d) {
          ut[i * nv + d] -= ldl.sub[i - 1] * ut[(i - 1) * nv + d];
          vt[i * nv + d] -= ldl.sub[i - 1] * vt[(i - 1) * nv + d];
        }
      // Relative to ||u||_C ||v||_C: u^T C v itself cancels heavily for random pairs.
      const double a = quadratic_form(c, u, v);
      const double b = quadratic_form(ct, ut, vt);
      const double scale = std::sqrt(quadratic_form(c, u, u) * quadratic_form(c, v, v));
      worst = std::max(worst, std::abs(a - b) / scale);
    }
    detail::report_claim(os, all, "reformulation identity", worst < 1e-12,
                         "max |difference| / (|u|_C |v|_C) " + sci(worst) + " over 100 pairs (bound 1e-12)");

    const Preconditioner wn = build_preconditioner(sys, PcVariant::weighted_norm, InnerSolver::exact_direct);
    const Preconditioner tr = build_preconditioner(sys, PcVariant::tridiagonal_reform, InnerSolver::exact_direct);
    Vector r(sys.size()), z1(sys.size()), z2(sys.size());
    double diff = 0.0;
    for (int trial = 0; trial < 10; ++trial) {
      for (double& x : r) x = normal(vr);
      wn.apply(r, z1);
      tr.apply(r, z2);
      for (std::size_t i = 0; i < r.size(); ++i) diff = std::max(diff, std::abs(z1[i] - z2[i]));
    }
    detail::report_claim(os, all, "tridiagonal reformulation solve", diff < 1e-9,
                         "max |difference| " + sci(diff) + " against the coupled solve (bound 1e-9)");
  }

  // Stability windows.
  {
    PhysicalParams p;
    p.froude = cfg.fixed_froude;
    p.rossby_inv = cfg.rossby_inv;
    p.k = 0.5 * mesh8.h();
    const TheoryReport chi = verify_chi_window(mesh8, stack, p);
    for (const auto& c : chi.claims)
      detail::report_claim(os, all, "window " + c.name, c.pass, "measured " + sci(c.measured) + ", bound " + sci(c.bound));

    const Mesh mesh4(4, 4);
    p.k = 0.1;
    const BlockSystem sys = assemble_block_system(mesh4, stack, p);
    const TheoryReport th = verify_infsup_continuity(sys, 500, cfg.seed);
    for (const auto& c : th.claims)
      detail::report_claim(os, all, "stability " + c.name, c.pass, "measured " + sci(c.measured) + ", bound " + sci(c.bound));
  }
  return all;
}

}  // namespace mltide
