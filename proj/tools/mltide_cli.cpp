// Command-line driver: iteration-count sweeps written as CSV, and a
// self-check suite.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "mltide/mltide.hpp"

namespace {

using namespace mltide;

std::ostream* open_output(const std::string& path, std::ofstream& file) {
  if (path.empty() || path == "-") return &std::cout;
  file.open(path);
  if (!file) throw std::runtime_error("cannot open " + path + " for writing");
  return &file;
}

double single(const std::vector<double>& v, const char* flag) {
  if (v.size() != 1) throw std::invalid_argument(std::string(flag) + " takes a single value for this experiment");
  return v.front();
}

/// Assemble the first sweep point and write its matrix and/or one-step state.
void write_diagnostics(const ExperimentConfig& cfg, const std::string& matrix_path, const std::string& snapshot_path) {
  const std::size_t n = cfg.mesh_sizes.front();
  const Mesh mesh(n, n);
  const LayerStack stack = cfg.stack(cfg.n_layers);
  PhysicalParams p;
  p.froude = cfg.kind == ExperimentKind::fr_sweep ? cfg.froude.front() : cfg.fixed_froude;
  p.rossby_inv = cfg.rossby_inv;
  const double cfl = cfg.kind == ExperimentKind::cfl_sweep ? cfg.cfl.front() : cfg.fixed_cfl;
  const double dt = cfl / static_cast<double>(n);
  p.k = 0.5 * dt;
  if (cfg.damping > 0.0) {
    p.damping = cfg.damping_bottom_only ? PhysicalParams::bottom_only(cfg.n_layers, cfg.damping)
                                        : std::vector<double>(cfg.n_layers, cfg.damping);
  }
  const BlockSystem sys = assemble_block_system(mesh, stack, p);
  if (!matrix_path.empty()) {
    std::ofstream f(matrix_path);
    if (!f) throw std::runtime_error("cannot open " + matrix_path + " for writing");
    write_matrix_market(f, sys.matrix);
  }
  if (!snapshot_path.empty()) {
    const Preconditioner pc = build_preconditioner(sys, cfg.solver.variant, cfg.solver.inner);
    GmresOptions opts;
    opts.rtol = cfg.rtol;
    opts.max_iterations = cfg.max_iterations;
    const State s = midpoint_step(sys, initial_disturbance(mesh, stack, cfg.amplitude, cfg.width), dt, pc, opts).state;
    std::ofstream f(snapshot_path);
    if (!f) throw std::runtime_error("cannot open " + snapshot_path + " for writing");
    write_state_csv(f, sys, s);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Iteration-count experiments for preconditioned multilayer shallow-water solvers"};
  app.set_config("--config", "", "Read options from a key = value file (command-line flags take precedence)");

  ExperimentConfig cfg;
  std::string experiment = "fr-sweep", pc = "wtd-norm", inner = "exact";
  std::vector<std::size_t> layers;
  std::vector<double> fr, cfl;
  double eps = 1.0;
  bool damp_all = false;
  std::string matrix_path, snapshot_path;

  const std::map<std::string, ExperimentKind> kinds{{"fr-sweep", ExperimentKind::fr_sweep},
                                                    {"cfl-sweep", ExperimentKind::cfl_sweep},
                                                    {"layer-sweep", ExperimentKind::layer_sweep},
                                                    {"verify", ExperimentKind::verify}};
  const std::map<std::string, PcVariant> variants{{"ilu", PcVariant::full_ilu0},
                                                  {"wtd-norm", PcVariant::weighted_norm},
                                                  {"layer-decoupled", PcVariant::layer_decoupled},
                                                  {"tridiag", PcVariant::tridiagonal_reform}};
  const std::map<std::string, InnerSolver> inners{{"exact", InnerSolver::exact_direct}, {"ilu0", InnerSolver::ilu0}};

  app.add_option("--experiment", experiment, "fr-sweep, cfl-sweep, layer-sweep or verify")
      ->check(CLI::IsMember(kinds))
      ->capture_default_str();
  app.add_option("--pc", pc, "Preconditioner: ilu, wtd-norm, layer-decoupled or tridiag")
      ->check(CLI::IsMember(variants))
      ->capture_default_str();
  app.add_option("--inner", inner, "Velocity-block solver: exact or ilu0")->check(CLI::IsMember(inners))->capture_default_str();
  app.add_option("--mesh-sizes", cfg.mesh_sizes, "Cells per side for each mesh")->delimiter(',')->capture_default_str();
  app.add_option("--layers", layers, "Layer count (sweeps) or list of layer counts (layer-sweep)")->delimiter(',');
  app.add_option("--fr", fr, "Froude numbers (fr-sweep) or the fixed Froude number")->delimiter(',');
  app.add_option("--cfl", cfl, "CFL numbers (cfl-sweep) or the fixed CFL number; CFL = dt / h")->delimiter(',');
  app.add_option("--eps", eps, "Rossby number (Coriolis strength is its reciprocal)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--damping", cfg.damping, "Drag coefficient, bottom layer unless --damp-all-layers")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  app.add_flag("--damp-all-layers", damp_all, "Apply the drag coefficient to every layer");
  app.add_option("--density-top", cfg.rho_top, "Top-layer density")->capture_default_str();
  app.add_option("--density-bottom", cfg.rho_bottom, "Bottom-layer density")->capture_default_str();
  app.add_option("--layer-mesh", cfg.layer_mesh, "Mesh size for layer-sweep")->capture_default_str();
  app.add_option("--rtol", cfg.rtol, "GMRES relative tolerance")->capture_default_str();
  app.add_option("--maxit", cfg.max_iterations, "GMRES iteration cap")->capture_default_str();
  app.add_option("--seed", cfg.seed, "Random seed for verify")->capture_default_str();
  app.add_option("--out", cfg.out, "Output file (default stdout)");
  app.add_option("--dump-matrix", matrix_path, "Write the first sweep point's system matrix (MatrixMarket)");
  app.add_option("--snapshot", snapshot_path, "Write the first sweep point's state after one step (CSV)");

  CLI11_PARSE(app, argc, argv);

  try {
    cfg.kind = kinds.at(experiment);
    cfg.solver = {variants.at(pc), inners.at(inner)};
    cfg.rossby_inv = 1.0 / eps;
    cfg.damping_bottom_only = !damp_all;
    switch (cfg.kind) {
      case ExperimentKind::fr_sweep:
        if (!fr.empty()) cfg.froude = fr;
        if (!cfl.empty()) cfg.fixed_cfl = single(cfl, "--cfl");
        break;
      case ExperimentKind::cfl_sweep:
        if (!cfl.empty()) cfg.cfl = cfl;
        if (!fr.empty()) cfg.fixed_froude = single(fr, "--fr");
        break;
      case ExperimentKind::layer_sweep:
        if (!layers.empty()) cfg.layer_counts = layers;
        if (!fr.empty()) cfg.fixed_froude = single(fr, "--fr");
        if (!cfl.empty()) cfg.layer_cfl = single(cfl, "--cfl");
        break;
      case ExperimentKind::verify:
        if (!fr.empty()) cfg.fixed_froude = single(fr, "--fr");
        break;
    }
    if (cfg.kind != ExperimentKind::layer_sweep && !layers.empty()) {
      if (layers.size() != 1) throw std::invalid_argument("--layers takes a single value for this experiment");
      cfg.n_layers = layers.front();
    }
    cfg.validate();

    std::ofstream file;
    std::ostream* os = open_output(cfg.out, file);
    if (cfg.kind == ExperimentKind::verify) {
      const bool ok = run_verification(cfg, *os);
      return ok ? 0 : 1;
    }
    if (!matrix_path.empty() || !snapshot_path.empty()) write_diagnostics(cfg, matrix_path, snapshot_path);
    run_sweep(cfg).write_csv(*os);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
