#pragma once

// Unrestarted GMRES with right preconditioning and modified Gram-Schmidt.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <span>
#include <vector>

#include "mltide/sparse/csr.hpp"

namespace mltide {

/// Anything that maps a vector of length size() to another of that length.
template <class T>
concept LinearOperator = requires(const T& op, std::span<const double> x, std::span<double> y) {
  { op.size() } -> std::convertible_to<std::size_t>;
  op.apply(x, y);
};

struct IdentityOperator {
  std::size_t n = 0;
  std::size_t size() const { return n; }
  void apply(std::span<const double> x, std::span<double> y) const { std::copy(x.begin(), x.end(), y.begin()); }
};

struct GmresOptions {
  double rtol = 1e-5;
  std::size_t max_iterations = 2000;
  /// Measure max |V^T V - I| over the Krylov basis at exit (costs O(m^2 n)).
  bool check_orthogonality = false;
};

struct SolveReport {
  std::size_t iterations = 0;
  /// Arnoldi-recurrence residual norm, entry 0 is ||b||.
  std::vector<double> residual_history;
  bool converged = false;
  /// Recurrence residual over ||b|| at exit.
  double relative_residual = 0.0;
  /// ||b - A x|| / ||b|| recomputed from the returned solution.
  double true_relative_residual = 0.0;
  double orthogonality_error = 0.0;
  double wall_time = 0.0;  ///< seconds
};

/// Solve A x = b from a zero initial guess. Iterates are built for
/// A P^{-1} y = b and mapped back, x = P^{-1} y, so the recurrence residual is
/// the unpreconditioned one. On hitting the cap, x holds the last (residual
/// minimizing) iterate and converged is false.
template <LinearOperator Op, LinearOperator Pc>
SolveReport gmres(const Op& a, const Pc& pc, std::span<const double> b, std::span<double> x,
                  const GmresOptions& opts = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t n = a.size();
  if (b.size() != n || x.size() != n || pc.size() != n) throw DimensionError("gmres: size mismatch");
  if (!(opts.rtol > 0.0 && opts.rtol < 1.0)) throw std::invalid_argument("gmres: rtol must lie in (0, 1)");

  SolveReport rep;
  std::fill(x.begin(), x.end(), 0.0);
  const double beta = norm2(b);
  rep.residual_history.push_back(beta);
  if (beta == 0.0) {
    rep.converged = true;
    rep.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
  }

  std::vector<Vector> v;
  v.emplace_back(b.begin(), b.end());
  for (double& e : v[0]) e /= beta;

  // Hessenberg columns after rotation (upper triangular R), Givens pairs, rhs g.
  std::vector<std::vector<double>> r;
  std::vector<double> cs, sn, g{beta};
  Vector z(n), w(n);
  const double target = opts.rtol * beta;
  double res = beta;

  std::size_t m = 0;
  while (m < opts.max_iterations) {
    pc.apply(v[m], z);
    a.apply(z, w);
    std::vector<double> h(m + 2, 0.0);
    for (std::size_t i = 0; i <= m; ++i) {
      h[i] = dot(w, v[i]);
      axpy(-h[i], v[i], w);
    }
    h[m + 1] = norm2(w);
    for (std::size_t i = 0; i < m; ++i) {
      const double t = cs[i] * h[i] + sn[i] * h[i + 1];
      h[i + 1] = -sn[i] * h[i] + cs[i] * h[i + 1];
      h[i] = t;
    }
    const double denom = std::hypot(h[m], h[m + 1]);
    const double c = denom == 0.0 ? 1.0 : h[m] / denom;
    const double s = denom == 0.0 ? 0.0 : h[m + 1] / denom;
    const double hnext = h[m + 1];
    h[m] = c * h[m] + s * h[m + 1];
    h[m + 1] = 0.0;
    cs.push_back(c);
    sn.push_back(s);
    g.push_back(-s * g[m]);
    g[m] = c * g[m];
    h.pop_back();
    r.push_back(std::move(h));
    ++m;
    res = std::abs(g[m]);
    rep.residual_history.push_back(res);
    if (res <= target || hnext <= 1e-14 * beta) break;
    v.emplace_back(n);
    for (std::size_t i = 0; i < n; ++i) v[m][i] = w[i] / hnext;
  }

  // Back substitution for the Krylov coefficients, then x = P^{-1} V y.
  std::vector<double> y(m, 0.0);
  for (std::size_t i = m; i-- > 0;) {
    double s = g[i];
    for (std::size_t j = i + 1; j < m; ++j) s -= r[j][i] * y[j];
    y[i] = s / r[i][i];
  }
  Vector vy(n, 0.0);
  for (std::size_t j = 0; j < m; ++j) axpy(y[j], v[j], vy);
  pc.apply(vy, x);

  rep.iterations = m;
  rep.relative_residual = res / beta;
  rep.converged = res <= target || (m > 0 && rep.relative_residual <= opts.rtol);

  a.apply(x, w);
  for (std::size_t i = 0; i < n; ++i) w[i] = b[i] - w[i];
  rep.true_relative_residual = norm2(w) / beta;
  // A happy breakdown ends the iteration with an exact solve.
  if (!rep.converged && rep.true_relative_residual <= opts.rtol) rep.converged = true;

  if (opts.check_orthogonality) {
    double worst = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i)
      for (std::size_t j = 0; j < v.size(); ++j) worst = std::max(worst, std::abs(dot(v[i], v[j]) - (i == j ? 1.0 : 0.0)));
    rep.orthogonality_error = worst;
  }
  rep.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

}  // namespace mltide
