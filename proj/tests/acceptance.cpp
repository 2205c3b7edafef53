// Acceptance suite: one PASS/FAIL line per criterion, with the measured
// values that decided it. Exit status is nonzero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "mltide/mltide.hpp"

using namespace mltide;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

std::string fixed(double v, int digits = 2) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

int failures = 0;

void report(int id, bool pass, const std::string& detail) {
  std::cout << (pass ? "PASS" : "FAIL") << " criterion " << id << ": " << detail << std::endl;
  if (!pass) ++failures;
}

void note(const std::string& line) { std::cout << "  " << line << std::endl; }

PhysicalParams params(double fr, double rossby_inv, double k) {
  PhysicalParams p;
  p.froude = fr;
  p.rossby_inv = rossby_inv;
  p.k = k;
  return p;
}

constexpr std::size_t kStacks = 1000;
constexpr unsigned kSeed = 20240;

std::vector<LayerStack> random_stacks() {
  std::mt19937_64 rng(kSeed);
  std::vector<LayerStack> out;
  out.reserve(kStacks);
  for (std::size_t i = 0; i < kStacks; ++i) out.push_back(random_admissible_stack(rng, 50));
  return out;
}

void criterion1(const std::vector<LayerStack>& stacks) {
  const auto t0 = Clock::now();
  double worst = 0.0;  // max |CA - I| / (1e-12 N)
  double worst_abs = 0.0;
  for (const auto& s : stacks) {
    const std::size_t n = s.size();
    const DenseMatrix prod = coupling_inverse(s).to_dense() * coupling_matrix(s);
    const double err = max_abs_difference(prod, DenseMatrix::identity(n));
    worst = std::max(worst, err / (1e-12 * static_cast<double>(n)));
    worst_abs = std::max(worst_abs, err);
  }
  const double t = seconds_since(t0);
  report(1, worst < 1.0 && t < 5.0,
         "max |C A - I| = " + sci(worst_abs) + ", worst ratio to 1e-12 N = " + sci(worst) + " over " +
             std::to_string(stacks.size()) + " stacks; " + fixed(t) + " s (limit 5 s)");
}

void criterion2(const std::vector<LayerStack>& stacks) {
  const auto t0 = Clock::now();
  std::size_t violations = 0, upper_checked = 0;
  for (const auto& s : stacks) {
    const SpectralBounds b = spectral_bounds(s);
    if (!b.lambda_max_inside()) ++violations;
    if (s.size() >= 2 && !(b.lambda_min >= *b.lambda_min_lower)) ++violations;
    if (s.size() >= 5) {
      ++upper_checked;
      if (!(b.lambda_min <= *b.lambda_min_upper)) ++violations;
    }
  }
  const double t = seconds_since(t0);
  report(2, violations == 0 && t < 30.0,
         std::to_string(violations) + " bracket violations (" + std::to_string(upper_checked) +
             " stacks with N >= 5 checked against the upper bracket); " + fixed(t) + " s (limit 30 s)");
}

void criterion3(const std::vector<LayerStack>& stacks) {
  // LDL^T reconstruction: entrywise error relative to the largest entry of C.
  double worst_ldl = 0.0;
  for (const auto& s : stacks) {
    const SymTridiagonal c = coupling_inverse(s);
    const DenseMatrix cd = c.to_dense();
    double scale = 0.0;
    for (double v : cd.data()) scale = std::max(scale, std::abs(v));
    worst_ldl = std::max(worst_ldl, max_abs_difference(ldlt(c).reconstruct(), cd) / scale);
  }

  const Mesh mesh(8, 8);
  const LayerStack stack = LayerStack::equispaced(5);
  const BlockSystem sys = assemble_block_system(mesh, stack, params(1.0, 1.0, 0.5 * mesh.h()));
  const LdlFactors ldl = ldlt(coupling_inverse(stack));
  const CsrMatrix c = weighted_norm_block(sys);
  const CsrMatrix ct = tridiagonal_reform_block(sys, ldl);
  const std::size_t nv = sys.layer_velocity_size();
  std::mt19937_64 rng(kSeed + 3);
  std::normal_distribution<double> normal;
  double worst_pair = 0.0;
  Vector u(c.rows()), v(c.rows());
  for (int trial = 0; trial < 100; ++trial) {
    for (double& x : u) x = normal(rng);
    for (double& x : v) x = normal(rng);
    Vector ut = u, vt = v;
    for (std::size_t i = 1; i < stack.size(); ++i)
      for (std::size_t d = 0; d < nv; ++d) {
        ut[i * nv + d] -= ldl.sub[i - 1] * ut[(i - 1) * nv + d];
        vt[i * nv + d] -= ldl.sub[i - 1] * vt[(i - 1) * nv + d];
      }
    const double lhs = quadratic_form(c, u, v);
    const double rhs = quadratic_form(ct, ut, vt);
    const double scale = std::sqrt(quadratic_form(c, u, u) * quadratic_form(c, v, v));
    worst_pair = std::max(worst_pair, std::abs(lhs - rhs) / scale);
  }

  const Preconditioner wn = build_preconditioner(sys, PcVariant::weighted_norm, InnerSolver::exact_direct);
  const Preconditioner tr = build_preconditioner(sys, PcVariant::tridiagonal_reform, InnerSolver::exact_direct);
  double worst_apply = 0.0;
  Vector r(sys.size()), z1(sys.size()), z2(sys.size());
  for (int trial = 0; trial < 20; ++trial) {
    for (double& x : r) x = normal(rng);
    wn.apply(r, z1);
    tr.apply(r, z2);
    for (std::size_t i = 0; i < r.size(); ++i) worst_apply = std::max(worst_apply, std::abs(z1[i] - z2[i]));
  }
  report(3, worst_ldl < 1e-13 && worst_pair < 1e-12 && worst_apply < 1e-9,
         "LDL^T entry error / max|C| = " + sci(worst_ldl) + " (limit 1e-13); |u^T C v - ut^T Ct vt| / (|u|_C |v|_C) = " +
             sci(worst_pair) + " (limit 1e-12); max |tridiag - wtd_norm| = " + sci(worst_apply) + " (limit 1e-9)");
}

void criterion4() {
  const Mesh mesh(8, 8);
  bool pass = true;
  std::string detail;
  for (std::size_t n : {3u, 5u}) {
    const TheoryReport r = verify_chi_window(mesh, LayerStack::equispaced(n), params(1.0, 1.0, 0.5 * mesh.h()));
    pass = pass && r.passed() && r.chi1 < r.lambda_max;
    detail += "N=" + std::to_string(n) + ": quotients [" + sci(r.quotient_min) + ", " + sci(r.quotient_max) +
              "] in [lambda_N, lambda_1] = [" + sci(r.lambda_min) + ", " + sci(r.lambda_max) + "] and [chi0, chi1] = [" +
              sci(r.chi0) + ", " + sci(r.chi1) + "]; ";
  }
  report(4, pass, detail + "chi1 < lambda_1 strictly");
}

void criterion5() {
  const BlockSystem sys = assemble_block_system(Mesh(4, 4), LayerStack::equispaced(3), params(1.0, 1.0, 0.1));
  const TheoryReport r = verify_infsup_continuity(sys, 500, kSeed);
  report(5, r.passed(),
         "500 trials: continuity ratio max " + sci(r.continuity_ratio_max) + " <= C = " + sci(r.continuity_constant) +
             "; inf-sup ratio min " + sci(r.infsup_ratio_min) + " >= 1/(2 sqrt 3) = " + sci(r.infsup_floor));
}

void criterion6() {
  const Mesh mesh(16, 16);
  const LayerStack stack = LayerStack::equispaced(3);
  const double dt = mesh.h();
  GmresOptions opts;
  opts.rtol = 1e-12;

  const BlockSystem sys = assemble_block_system(mesh, stack, params(1.0, 1.0, 0.5 * dt));
  const Preconditioner pc = build_preconditioner(sys, PcVariant::weighted_norm, InnerSolver::exact_direct);
  State s = initial_disturbance(mesh, stack, 0.01, 0.1);
  const double e0 = energy(s, sys);
  double drift = 0.0;
  for (int step = 0; step < 100; ++step) {
    s = midpoint_step(sys, s, dt, pc, opts).state;
    drift = std::max(drift, std::abs(energy(s, sys) - e0) / e0);
  }

  PhysicalParams pd = params(1.0, 1.0, 0.5 * dt);
  pd.damping = PhysicalParams::bottom_only(stack.size(), 0.1);
  const BlockSystem damped = assemble_block_system(mesh, stack, pd);
  const Preconditioner pcd = build_preconditioner(damped, PcVariant::weighted_norm, InnerSolver::exact_direct);
  s = initial_disturbance(mesh, stack, 0.01, 0.1);
  const double d0 = energy(s, damped);
  double prev = d0;
  std::size_t increases = 0;
  for (int step = 0; step < 100; ++step) {
    s = midpoint_step(damped, s, dt, pcd, opts).state;
    const double e = energy(s, damped);
    if (e > prev) ++increases;
    prev = e;
  }
  report(6, drift < 1e-9 && increases == 0,
         "undamped max relative drift " + sci(drift) + " over 100 steps (limit 1e-9); damped: " +
             std::to_string(increases) + " increases, energy " + sci(d0) + " -> " + sci(prev));
}

using Key = std::pair<std::string, std::size_t>;  // (config label, row value)

struct Counts {
  std::size_t wn_lu = 0, wn_ilu = 0, ld_lu = 0;
  bool converged = true;
  double wn_lu_seconds = 0.0;
};

Counts run_three(const ExperimentConfig& cfg, std::size_t mesh_n, std::size_t layers, double fr, double cfl) {
  Counts c;
  const auto t0 = Clock::now();
  const auto a = run_point(cfg, mesh_n, layers, fr, cfl, {PcVariant::weighted_norm, InnerSolver::exact_direct});
  c.wn_lu_seconds = seconds_since(t0);
  const auto b = run_point(cfg, mesh_n, layers, fr, cfl, {PcVariant::weighted_norm, InnerSolver::ilu0});
  const auto d = run_point(cfg, mesh_n, layers, fr, cfl, {PcVariant::layer_decoupled, InnerSolver::exact_direct});
  c.wn_lu = a.iterations;
  c.wn_ilu = b.iterations;
  c.ld_lu = d.iterations;
  c.converged = a.converged && b.converged && d.converged;
  return c;
}

}  // namespace

int main() {
  const auto t_all = Clock::now();
  const auto stacks = random_stacks();
  criterion1(stacks);
  criterion2(stacks);
  criterion3(stacks);
  criterion4();
  criterion5();
  criterion6();

  // Criteria 7-9 share one set of solves.
  ExperimentConfig cfg;  // 5 layers, densities 1.03-1.06, eps = 1, rtol 1e-5
  const std::vector<double> froude{0.1, 0.5, 1.0, 3.0};
  const std::vector<std::size_t> meshes{8, 16, 32, 64};
  std::map<Key, Counts> table;

  double time7 = 0.0;  // weighted-norm exact solves only
  for (double fr : froude)
    for (std::size_t m : meshes) {
      const Counts c = run_three(cfg, m, 5, fr, 1.0);
      time7 += c.wn_lu_seconds;
      table[{"Fr=" + fixed(fr, 1), m}] = c;
    }

  note("Fr sweep, 5 layers, CFL 1 (wtd_norm_lu / wtd_norm_ilu / layer_decoupled_lu):");
  bool pass7 = true;
  std::string detail7;
  for (double fr : froude) {
    const std::string label = "Fr=" + fixed(fr, 1);
    std::string row = label + ":";
    for (std::size_t m : meshes) {
      const Counts& c = table[{label, m}];
      row += " N" + std::to_string(m) + " " + std::to_string(c.wn_lu) + "/" + std::to_string(c.wn_ilu) + "/" +
             std::to_string(c.ld_lu);
      pass7 = pass7 && c.converged && c.wn_lu <= 16;
    }
    const auto n64 = table[{label, 64}].wn_lu, n16 = table[{label, 16}].wn_lu;
    pass7 = pass7 && n64 <= n16 + 2;
    detail7 += label + " N64-N16 = " + std::to_string(static_cast<long>(n64) - static_cast<long>(n16)) + "; ";
    note(row);
  }
  std::size_t max7 = 0;
  for (double fr : froude)
    for (std::size_t m : meshes) max7 = std::max(max7, table[{"Fr=" + fixed(fr, 1), m}].wn_lu);
  report(7, pass7 && time7 < 600.0,
         detail7 + "max wtd_norm exact count " + std::to_string(max7) + " (limit 16); sweep " + fixed(time7, 0) +
             " s of wtd_norm exact solves (limit 600 s)");

  const auto t8 = Clock::now();
  for (std::size_t n = 2; n <= 10; ++n) table[{"layers", n}] = run_three(cfg, 64, n, 1.0, 2.0);
  const double time8 = seconds_since(t8);
  note("Layer sweep, 64x64, dt = 0.03125 (wtd_norm_lu / wtd_norm_ilu / layer_decoupled_lu):");
  std::size_t lo = static_cast<std::size_t>(-1), hi = 0;
  bool conv8 = true;
  std::string row8;
  for (std::size_t n = 2; n <= 10; ++n) {
    const Counts& c = table[{"layers", n}];
    lo = std::min(lo, c.wn_lu);
    hi = std::max(hi, c.wn_lu);
    conv8 = conv8 && c.converged;
    row8 += " N" + std::to_string(n) + " " + std::to_string(c.wn_lu) + "/" + std::to_string(c.wn_ilu) + "/" +
            std::to_string(c.ld_lu);
  }
  note(row8);
  report(8, conv8 && hi - lo <= 3,
         "wtd_norm exact counts range " + std::to_string(lo) + ".." + std::to_string(hi) + " over 2..10 layers (spread " +
             std::to_string(hi - lo) + ", limit 3); " + fixed(time8, 0) + " s");

  std::size_t bad_ilu = 0, bad_ld = 0, bad_ratio = 0;
  double worst_ratio = 0.0;
  std::string worst_where;
  for (const auto& [key, c] : table) {
    if (c.wn_lu > c.wn_ilu) ++bad_ilu;
    if (c.wn_lu > c.ld_lu) ++bad_ld;
    const double ratio = static_cast<double>(c.ld_lu) / static_cast<double>(c.wn_lu);
    if (ratio > 4.0) ++bad_ratio;
    if (ratio > worst_ratio) {
      worst_ratio = ratio;
      worst_where = key.first + (key.first == "layers" ? " N=" : " mesh ") + std::to_string(key.second);
    }
  }
  report(9, bad_ilu == 0 && bad_ld == 0 && bad_ratio == 0,
         std::to_string(table.size()) + " configurations: exact > ILU0 in " + std::to_string(bad_ilu) +
             ", wtd_norm > layer_decoupled in " + std::to_string(bad_ld) + ", layer_decoupled / wtd_norm > 4 in " +
             std::to_string(bad_ratio) + " (worst " + fixed(worst_ratio) + " at " + worst_where + ")");

  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << " in "
            << fixed(seconds_since(t_all), 0) << " s" << std::endl;
  return failures == 0 ? 0 : 1;
}
