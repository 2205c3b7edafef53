#pragma once

// Multilayer block system, implicit midpoint time stepping and energy.
//
// Unknowns are ordered velocities first, then elevations, each layer-contiguous
// (top layer first). With k the time-step coefficient the system is
//
//   [ M^V + eps^{-1} k Mperp^V + k B    -Fr^2 k (A (x) D)^T ] [u  ]   [f]
//   [ k (I (x) D)                        I (x) M^W         ] [eta] = [g]

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mltide/errors.hpp"
#include "mltide/fem.hpp"
#include "mltide/krylov.hpp"
#include "mltide/layers.hpp"
#include "mltide/mesh.hpp"
#include "mltide/sparse/csr.hpp"
#include "mltide/sparse/dense.hpp"

namespace mltide {

struct PhysicalParams {
  double froude = 1.0;
  double rossby_inv = 1.0;  ///< Coriolis strength eps^{-1}
  double k = 0.05;          ///< dt / 2 for the midpoint rule
  /// Per-layer drag coefficients; empty means no damping anywhere.
  std::vector<double> damping;

  static std::vector<double> bottom_only(std::size_t n_layers, double coefficient) {
    std::vector<double> d(n_layers, 0.0);
    if (n_layers > 0) d.back() = coefficient;
    return d;
  }

  double damping_bound() const {
    double b = 0.0;
    for (double d : damping) b = std::max(b, d);
    return b;
  }

  void validate(std::size_t n_layers) const {
    if (!(froude > 0.0)) throw std::invalid_argument("params: Froude number must be positive");
    if (!(rossby_inv >= 0.0)) throw std::invalid_argument("params: rossby_inv must be nonnegative");
    if (!(k > 0.0)) throw std::invalid_argument("params: k must be positive");
    if (!damping.empty() && damping.size() != n_layers) {
      throw std::invalid_argument("params: " + std::to_string(damping.size()) + " damping coefficients for " +
                                  std::to_string(n_layers) + " layers");
    }
    for (double d : damping)
      if (!(d >= 0.0)) throw std::invalid_argument("params: damping coefficients must be nonnegative");
  }
};

struct State {
  Vector u;    ///< N blocks of velocity dofs
  Vector eta;  ///< N blocks of cell values
};

class BlockSystem {
 public:
  Mesh mesh;
  LayerStack stack;
  PhysicalParams params;
  BoundaryCondition bc = BoundaryCondition::normal_trace_zero;
  DenseMatrix coupling;  ///< A

  // Single-layer pieces with unit coefficient.
  CsrMatrix mass_v1, div1, divdiv1, mass_w1;
  /// mu_i-weighted velocity mass of every layer.
  std::vector<CsrMatrix> layer_mass;

  CsrMatrix mass_v;          ///< blockdiag(M^{V,mu_i})
  CsrMatrix perp_mass_v;     ///< blockdiag(Mperp^{V,mu_i})
  CsrMatrix damping;         ///< blockdiag(b_i M^V)
  CsrMatrix divdiv_coupled;  ///< A (x) E

  CsrMatrix a11, a12, a21, a22;
  CsrMatrix matrix;  ///< the assembled 2x2 block matrix

  std::size_t n_layers() const { return stack.size(); }
  std::size_t layer_velocity_size() const { return mass_v1.rows(); }
  std::size_t layer_cell_size() const { return mass_w1.rows(); }
  std::size_t velocity_size() const { return a11.rows(); }
  std::size_t elevation_size() const { return a22.rows(); }
  std::size_t size() const { return matrix.rows(); }

  void apply(std::span<const double> x, std::span<double> y) const { matrix.apply(x, y); }

  /// Concatenate [u; eta].
  Vector pack(const State& s) const {
    check(s);
    Vector x(s.u);
    x.insert(x.end(), s.eta.begin(), s.eta.end());
    return x;
  }

  State unpack(std::span<const double> x) const {
    if (x.size() != size()) throw DimensionError("block system: vector length mismatch");
    State s;
    s.u.assign(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(velocity_size()));
    s.eta.assign(x.begin() + static_cast<std::ptrdiff_t>(velocity_size()), x.end());
    return s;
  }

  State zero_state() const { return {Vector(velocity_size(), 0.0), Vector(elevation_size(), 0.0)}; }

  void check(const State& s) const {
    if (s.u.size() != velocity_size() || s.eta.size() != elevation_size()) {
      throw DimensionError("block system: state has " + std::to_string(s.u.size()) + " + " +
                           std::to_string(s.eta.size()) + " entries, expected " + std::to_string(velocity_size()) +
                           " + " + std::to_string(elevation_size()));
    }
  }
};

inline BlockSystem assemble_block_system(const Mesh& mesh, const LayerStack& stack, const PhysicalParams& params,
                                         BoundaryCondition bc = BoundaryCondition::normal_trace_zero) {
  const std::size_t n = stack.size();
  params.validate(n);
  BlockSystem sys{mesh, stack, params, bc, coupling_matrix(stack)};

  const auto base = assemble_single_layer(mesh, CellField::constant(mesh, 1.0), bc);
  sys.mass_v1 = base.mass_v;
  sys.div1 = base.div;
  sys.divdiv1 = base.divdiv;
  sys.mass_w1 = base.mass_w;

  std::vector<CsrMatrix> perp(n), drag(n);
  sys.layer_mass.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const CellField mu = stack.mu_field(mesh, i);
    sys.layer_mass[i] = assemble_single_layer(mesh, mu, bc).mass_v;
    perp[i] = assemble_perp_mass(mesh, mu, bc);
    const double b = params.damping.empty() ? 0.0 : params.damping[i];
    drag[i] = scaled(base.mass_v, b);
  }
  sys.mass_v = block_diagonal(sys.layer_mass);
  sys.perp_mass_v = block_diagonal(perp);
  sys.damping = block_diagonal(drag);
  sys.divdiv_coupled = kron_lift(sys.coupling, base.divdiv);

  const double k = params.k;
  const double fr2 = params.froude * params.froude;
  const DenseMatrix identity = DenseMatrix::identity(n);
  sys.a11 = linear_combination({{1.0, &sys.mass_v}, {params.rossby_inv * k, &sys.perp_mass_v}, {k, &sys.damping}});
  sys.a12 = scaled(transpose(kron_lift(sys.coupling, base.div)), -fr2 * k);
  sys.a21 = scaled(kron_lift(identity, base.div), k);
  sys.a22 = kron_lift(identity, base.mass_w);
  sys.matrix = block_2x2(sys.a11, sys.a12, sys.a21, sys.a22);
  return sys;
}

/// 1/2 u^T M^V u + 1/2 Fr^2 eta^T (A (x) M^W) eta.
inline double energy(const State& s, const BlockSystem& sys) {
  sys.check(s);
  const double kinetic = quadratic_form(sys.mass_v, s.u, s.u);
  const std::size_t n = sys.n_layers();
  const std::size_t nc = sys.layer_cell_size();
  const auto& areas = sys.mesh.cell_areas();
  double potential = 0.0;
  for (std::size_t c = 0; c < nc; ++c) {
    double cell = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) cell += sys.coupling(i, j) * s.eta[i * nc + c] * s.eta[j * nc + c];
    potential += areas[c] * cell;
  }
  return 0.5 * kinetic + 0.5 * sys.params.froude * sys.params.froude * potential;
}

/// Fluid at rest with a Gaussian bump in the top-layer elevation.
inline State initial_disturbance(const Mesh& mesh, const LayerStack& stack, double amplitude, double width,
                                 BoundaryCondition bc = BoundaryCondition::normal_trace_zero) {
  if (amplitude == 0.0) throw std::invalid_argument("initial disturbance: amplitude must be nonzero");
  if (!(width > 0.0)) throw std::invalid_argument("initial disturbance: width must be positive");
  const std::size_t nc = mesh.num_cells();
  State s{Vector(stack.size() * DofMap(mesh, bc).size(), 0.0), Vector(stack.size() * nc, 0.0)};
  for (std::size_t c = 0; c < nc; ++c) {
    const Point p = mesh.cell_centroid(c);
    const double r2 = (p.x - 0.5) * (p.x - 0.5) + (p.y - 0.5) * (p.y - 0.5);
    s.eta[c] = amplitude * std::exp(-r2 / (width * width));
  }
  return s;
}

/// Velocity-space load vector at a given time.
using Forcing = std::function<Vector(double)>;

class StepError : public ConvergenceError {
 public:
  explicit StepError(SolveReport report)
      : ConvergenceError("midpoint step: GMRES stopped after " + std::to_string(report.iterations) +
                         " iterations at relative residual " + std::to_string(report.relative_residual)),
        report_(std::move(report)) {}
  const SolveReport& report() const { return report_; }

 private:
  SolveReport report_;
};

struct StepResult {
  State state;
  SolveReport report;
};

/// Advance by dt = 2k from time t. The midpoint unknowns x^{n+1/2} solve the
/// block system with right-hand side [M^V u^n + k F(t + k); M^W eta^n]. GMRES
/// works on the increment x^{n+1/2} - x^n (zero initial guess), whose
/// right-hand side is the residual of x^n; this is the stage-derivative form
/// of the one-stage Gauss method up to the factor k. The new state is
/// x^n + 2 (x^{n+1/2} - x^n).
template <LinearOperator Pc>
StepResult midpoint_step(const BlockSystem& sys, const State& s, double dt, const Pc& pc,
                         const GmresOptions& opts = {}, const Forcing& forcing = {}, double t = 0.0) {
  sys.check(s);
  if (!(dt > 0.0)) throw std::invalid_argument("midpoint step: dt must be positive");
  if (std::abs(0.5 * dt - sys.params.k) > 1e-12 * sys.params.k) {
    throw std::invalid_argument("midpoint step: system was assembled with k = " + std::to_string(sys.params.k) +
                                " but dt / 2 = " + std::to_string(0.5 * dt));
  }
  const std::size_t nu = sys.velocity_size();
  // Residual of x^n: the M^V u^n and M^W eta^n terms cancel exactly, leaving
  // -(k eps^{-1} Mperp + k B) u^n + Fr^2 k (A (x) D)^T eta^n + k F and -k D u^n.
  Vector rhs(sys.size(), 0.0);
  std::span<double> f(rhs.data(), nu);
  std::span<double> g(rhs.data() + nu, sys.elevation_size());
  Vector tmp(nu);
  sys.perp_mass_v.apply(s.u, tmp);
  axpy(-sys.params.rossby_inv * sys.params.k, tmp, f);
  sys.damping.apply(s.u, tmp);
  axpy(-sys.params.k, tmp, f);
  sys.a12.apply(s.eta, tmp);
  axpy(-1.0, tmp, f);
  sys.a21.apply(s.u, g);
  for (double& v : g) v = -v;
  if (forcing) {
    const Vector load = forcing(t + sys.params.k);
    if (load.size() != nu) throw DimensionError("midpoint step: forcing has the wrong length");
    axpy(sys.params.k, load, f);
  }
  Vector delta(sys.size());
  SolveReport rep = gmres(sys, pc, rhs, delta, opts);
  if (!rep.converged) throw StepError(std::move(rep));
  State next = s;
  for (std::size_t i = 0; i < nu; ++i) next.u[i] += 2.0 * delta[i];
  for (std::size_t i = 0; i < next.eta.size(); ++i) next.eta[i] += 2.0 * delta[nu + i];
  return {std::move(next), std::move(rep)};
}

}  // namespace mltide
