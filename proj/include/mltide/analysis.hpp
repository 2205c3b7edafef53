#pragma once

// Numerical checks of the stability estimates behind the preconditioners:
// continuity and inf-sup of the scaled system form against the weighted
// norm, the inverse-inequality constant, and the spectral window between the
// coupled velocity block C and its layer-decoupled replacement Chat.
//
// Matrix forms used below (layer-outer ordering, I and A act on layers):
//   ahat((u,eta),(v,w)) = v^T A11 u - Fr^2 k v^T (A(x)D)^T eta
//                         + Fr^2 w^T (A(x)M^W) eta + Fr^2 k w^T (A(x)D) u
//   bhat((u,eta),(v,w)) = u^T (M^V + Fr^2 k^2 A(x)E) v + Fr^2 eta^T (A(x)M^W) w
// and div u has cell values (M^W)^{-1} D u.

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "mltide/errors.hpp"
#include "mltide/layers.hpp"
#include "mltide/precond.hpp"
#include "mltide/sparse/csr.hpp"
#include "mltide/sparse/direct.hpp"
#include "mltide/system.hpp"

namespace mltide {

struct ExtremalEigenvalues {
  double min = 0.0;
  double max = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

using VectorMap = std::function<void(std::span<const double>, std::span<double>)>;

/// Extremal eigenvalues of the symmetric pencil K x = lambda M x (M SPD) by
/// Lanczos in the M inner product with full reorthogonalization. Ritz values
/// always lie inside the spectrum, so min is an upper estimate of the
/// smallest eigenvalue and max a lower estimate of the largest. Stops when
/// both extremal Ritz residuals are below tol relative to the spectral radius
/// estimate, or the Krylov space is exhausted.
inline ExtremalEigenvalues lanczos_extremal(std::size_t n, const VectorMap& apply_k, const VectorMap& apply_m,
                                            const VectorMap& solve_m, unsigned seed = 1, double tol = 1e-12,
                                            std::size_t max_iterations = 0) {
  if (n == 0) throw DimensionError("lanczos: empty problem");
  if (max_iterations == 0) max_iterations = n;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::vector<Vector> q, mq;
  Vector x(n), mx(n), t(n);
  for (double& v : x) v = normal(rng);
  apply_m(x, mx);
  const double nrm = std::sqrt(dot(x, mx));
  for (std::size_t i = 0; i < n; ++i) {
    x[i] /= nrm;
    mx[i] /= nrm;
  }
  q.push_back(x);
  mq.push_back(mx);

  std::vector<double> alpha, beta;
  ExtremalEigenvalues out;
  for (std::size_t j = 0; j < max_iterations; ++j) {
    apply_k(q[j], t);
    alpha.push_back(dot(q[j], t));
    solve_m(t, x);
    // Two passes of Gram-Schmidt in the M inner product against the whole basis.
    for (int pass = 0; pass < 2; ++pass)
      for (std::size_t i = 0; i <= j; ++i) axpy(-dot(mq[i], x), q[i], x);
    apply_m(x, mx);
    const double b = std::sqrt(std::max(dot(x, mx), 0.0));

    const auto m = static_cast<Eigen::Index>(alpha.size());
    Eigen::VectorXd d = Eigen::Map<const Eigen::VectorXd>(alpha.data(), m);
    Eigen::VectorXd e = m > 1 ? Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(beta.data(), m - 1))
                              : Eigen::VectorXd(0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(d, e, Eigen::ComputeEigenvectors);
    const auto& theta = es.eigenvalues();
    const auto& s = es.eigenvectors();
    out.min = theta(0);
    out.max = theta(m - 1);
    out.iterations = j + 1;
    const double scale = std::max(std::abs(out.min), std::abs(out.max));
    const double r_min = b * std::abs(s(m - 1, 0));
    const double r_max = b * std::abs(s(m - 1, m - 1));
    if (b <= 1e-14 * scale || j + 1 == n || (r_min <= tol * scale && r_max <= tol * scale)) {
      out.converged = true;
      return out;
    }
    beta.push_back(b);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] /= b;
      mx[i] /= b;
    }
    q.push_back(x);
    mq.push_back(mx);
  }
  return out;
}

/// Extremal eigenvalues of K x = lambda M x for assembled matrices, with M
/// inverted by a sparse LU.
inline ExtremalEigenvalues generalized_extremal(const CsrMatrix& k, const CsrMatrix& m, unsigned seed = 1,
                                                double tol = 1e-12) {
  if (k.rows() != m.rows() || !k.square() || !m.square()) throw DimensionError("generalized_extremal: shape mismatch");
  const DirectFactors mf(m);
  return lanczos_extremal(
      k.rows(), [&](std::span<const double> a, std::span<double> b) { k.apply(a, b); },
      [&](std::span<const double> a, std::span<double> b) { m.apply(a, b); },
      [&](std::span<const double> a, std::span<double> b) { mf.apply(a, b); }, seed, tol);
}

/// C_I = h sqrt(lambda_max) for ||div u||^2 <= lambda_max ||u||_M^2 over all
/// layers. Both forms are layer-block-diagonal, so the maximum is taken layer
/// by layer.
inline double measure_inverse_constant(const Mesh& mesh, const LayerStack& stack,
                                       BoundaryCondition bc = BoundaryCondition::normal_trace_zero) {
  const auto base = assemble_single_layer(mesh, CellField::constant(mesh, 1.0), bc);
  double lmax = 0.0;
  for (std::size_t i = 0; i < stack.size(); ++i) {
    const CsrMatrix mi = assemble_single_layer(mesh, stack.mu_field(mesh, i), bc).mass_v;
    const auto ev = generalized_extremal(base.divdiv, mi, static_cast<unsigned>(i + 1));
    if (!ev.converged) throw ConvergenceError("inverse constant: Lanczos did not converge");
    lmax = std::max(lmax, ev.max);
  }
  return mesh.h() * std::sqrt(lmax);
}

struct Claim {
  std::string name;
  double measured = 0.0;
  double bound = 0.0;
  bool pass = false;
  std::string detail;
};

struct TheoryReport {
  double continuity_constant = 0.0;
  double infsup_floor = 1.0 / (2.0 * std::sqrt(3.0));
  double inverse_constant = 0.0;  ///< C_I
  double q = 0.0;                 ///< C_I k Fr
  double chi0 = 0.0, chi1 = 0.0;
  double lambda_min = 0.0, lambda_max = 0.0;  ///< extremal eigenvalues of A
  double quotient_min = 0.0, quotient_max = 0.0;
  double continuity_ratio_max = 0.0;  ///< max ahat / (||x|| ||y||)
  double infsup_ratio_min = 0.0;
  std::vector<Claim> claims;
  /// First state violating a claim, if any.
  std::optional<State> counterexample;

  bool passed() const {
    return std::all_of(claims.begin(), claims.end(), [](const Claim& c) { return c.pass; });
  }
};

/// max{2, 1 + k/eps + k B* / C_M^2} with C_M^2 the smallest cellwise mu.
inline double continuity_constant(const BlockSystem& sys) {
  double cm2 = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < sys.n_layers(); ++i) cm2 = std::min(cm2, sys.stack.mu_field(sys.mesh, i).min());
  const double k = sys.params.k;
  return std::max(2.0, 1.0 + k * sys.params.rossby_inv + k * sys.params.damping_bound() / cm2);
}

namespace detail {

/// Evaluates ahat and bhat for one assembled system.
class ScaledForms {
 public:
  explicit ScaledForms(const BlockSystem& sys)
      : sys_(sys),
        fr2_(sys.params.froude * sys.params.froude),
        k_(sys.params.k),
        div_a_(kron_lift(sys.coupling, sys.div1)),
        div_(kron_lift(DenseMatrix::identity(sys.n_layers()), sys.div1)),
        mass_wa_(kron_lift(sys.coupling, sys.mass_w1)),
        c_(weighted_norm_block(sys)) {}

  double ahat(const State& x, const State& y) const {
    return quadratic_form(sys_.a11, y.u, x.u) - fr2_ * k_ * quadratic_form(div_a_, x.eta, y.u) +
           fr2_ * quadratic_form(mass_wa_, y.eta, x.eta) + fr2_ * k_ * quadratic_form(div_a_, y.eta, x.u);
  }

  double bhat(const State& x, const State& y) const {
    return quadratic_form(c_, x.u, y.u) + fr2_ * quadratic_form(mass_wa_, x.eta, y.eta);
  }

  double norm(const State& x) const { return std::sqrt(bhat(x, x)); }

  /// Cell values of div u in every layer.
  Vector divergence(std::span<const double> u) const {
    Vector d = spmv(div_, u);
    const auto& areas = sys_.mesh.cell_areas();
    const std::size_t nc = areas.size();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] /= areas[i % nc];
    return d;
  }

 private:
  const BlockSystem& sys_;
  double fr2_, k_;
  CsrMatrix div_a_, div_, mass_wa_, c_;
};

inline State random_state(const BlockSystem& sys, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  State s = sys.zero_state();
  for (double& v : s.u) v = normal(rng);
  for (double& v : s.eta) v = normal(rng);
  return s;
}

}  // namespace detail

/// Random-trial check of continuity, ahat(x, y) <= C ||x|| ||y||, and of the
/// constructive inf-sup argument: with v = u and w = eta + k div u,
/// ahat >= ||x||^2 / 2, ||y||^2 <= 3 ||x||^2, so ahat / (||x|| ||y||) >= 1/(2 sqrt 3).
inline TheoryReport verify_infsup_continuity(const BlockSystem& sys, std::size_t trials, unsigned seed,
                                             double slack = 1e-12) {
  TheoryReport rep;
  rep.continuity_constant = continuity_constant(sys);
  const detail::ScaledForms forms(sys);
  std::mt19937_64 rng(seed);
  double worst_lower = std::numeric_limits<double>::infinity();
  double worst_half = std::numeric_limits<double>::infinity();
  double worst_three = 0.0;
  std::optional<std::size_t> first_bad;
  for (std::size_t t = 0; t < trials; ++t) {
    const State x = detail::random_state(sys, rng);
    const State y = detail::random_state(sys, rng);
    const double nx = forms.norm(x);
    const double cont = forms.ahat(x, y) / (nx * forms.norm(y));
    rep.continuity_ratio_max = std::max(rep.continuity_ratio_max, cont);

    State test = x;
    const Vector div = forms.divergence(x.u);
    axpy(sys.params.k, div, test.eta);
    const double a = forms.ahat(x, test);
    const double nt = forms.norm(test);
    const double ratio = a / (nx * nt);
    worst_lower = std::min(worst_lower, ratio);
    worst_half = std::min(worst_half, a / (nx * nx));
    worst_three = std::max(worst_three, (nt * nt) / (nx * nx));

    const bool bad = cont > rep.continuity_constant * (1.0 + slack) || ratio < rep.infsup_floor - slack ||
                     a < (0.5 - slack) * nx * nx || nt * nt > (3.0 + slack) * nx * nx;
    if (bad && !first_bad) {
      first_bad = t;
      rep.counterexample = x;
    }
  }
  rep.infsup_ratio_min = trials ? worst_lower : 0.0;
  const std::string where = first_bad ? "first violation in trial " + std::to_string(*first_bad) : "";
  rep.claims.push_back({"continuity", rep.continuity_ratio_max, rep.continuity_constant,
                        rep.continuity_ratio_max <= rep.continuity_constant * (1.0 + slack), where});
  rep.claims.push_back({"inf-sup ratio", rep.infsup_ratio_min, rep.infsup_floor,
                        rep.infsup_ratio_min >= rep.infsup_floor - slack, where});
  rep.claims.push_back({"ahat(x, y) >= |x|^2 / 2", worst_half, 0.5, worst_half >= 0.5 - slack, where});
  rep.claims.push_back({"|y|^2 <= 3 |x|^2", worst_three, 3.0, worst_three <= 3.0 + slack, where});
  return rep;
}

/// Extremal generalized Rayleigh quotients of (C, Chat) against the naive
/// window [lambda_N, lambda_1] and the sharper [chi0, chi1]. `slack` is a
/// relative allowance for the eigenvalue estimates entering the bounds.
inline TheoryReport verify_chi_window(const Mesh& mesh, const LayerStack& stack, const PhysicalParams& params,
                                      BoundaryCondition bc = BoundaryCondition::normal_trace_zero,
                                      std::size_t random_trials = 100, unsigned seed = 7, double slack = 1e-9) {
  TheoryReport rep;
  const BlockSystem sys = assemble_block_system(mesh, stack, params, bc);
  const SpectralBounds sb = spectral_bounds(stack);
  rep.lambda_max = sb.lambda_max;
  rep.lambda_min = sb.lambda_min;
  const double h = mesh.h();
  rep.inverse_constant = measure_inverse_constant(mesh, stack, bc);
  rep.q = rep.inverse_constant * params.k * params.froude;
  const double q2 = rep.q * rep.q, h2 = h * h;
  rep.chi0 = (rep.lambda_min * q2 + h2) / (q2 + h2);
  rep.chi1 = (rep.lambda_max * q2 + h2) / (q2 + h2);

  const CsrMatrix c = weighted_norm_block(sys);
  const CsrMatrix chat = layer_decoupled_block(sys);
  const auto ev = generalized_extremal(c, chat, seed);
  if (!ev.converged) throw ConvergenceError("chi window: Lanczos did not converge");
  rep.quotient_min = ev.min;
  rep.quotient_max = ev.max;

  // Random vectors give interior quotients; they must respect the same window.
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Vector u(c.rows());
  for (std::size_t t = 0; t < random_trials; ++t) {
    for (double& v : u) v = normal(rng);
    const double r = quadratic_form(c, u, u) / quadratic_form(chat, u, u);
    rep.quotient_min = std::min(rep.quotient_min, r);
    rep.quotient_max = std::max(rep.quotient_max, r);
  }

  const double lo = 1.0 - slack, hi = 1.0 + slack;
  rep.claims.push_back({"quotient >= lambda_N", rep.quotient_min, rep.lambda_min, rep.quotient_min >= rep.lambda_min * lo, ""});
  rep.claims.push_back({"quotient <= lambda_1", rep.quotient_max, rep.lambda_max, rep.quotient_max <= rep.lambda_max * hi, ""});
  rep.claims.push_back({"quotient >= chi0", rep.quotient_min, rep.chi0, rep.quotient_min >= rep.chi0 * lo, ""});
  rep.claims.push_back({"quotient <= chi1", rep.quotient_max, rep.chi1, rep.quotient_max <= rep.chi1 * hi, ""});
  // Strict whenever lambda_1 > 1; a single layer of unit density collapses both to 1.
  const bool strict = rep.lambda_max > 1.0 ? rep.chi1 < rep.lambda_max : rep.chi1 <= rep.lambda_max;
  rep.claims.push_back({"chi1 < lambda_1", rep.chi1, rep.lambda_max, strict, ""});
  const double floor = h2 / (q2 + h2);
  rep.claims.push_back({"chi0 >= h^2 / (q^2 + h^2)", rep.chi0, floor, rep.chi0 >= floor * lo, ""});
  return rep;
}

}  // namespace mltide
