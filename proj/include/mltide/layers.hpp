#pragma once

// Density-stratified layer stack and the N x N algebra that couples layers:
// the coupling matrix A_ij = rho_min(i,j), its explicit tridiagonal inverse,
// the LDL^T factorization of that inverse, and extremal-eigenvalue brackets.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "mltide/errors.hpp"
#include "mltide/fem.hpp"
#include "mltide/mesh.hpp"
#include "mltide/sparse/csr.hpp"
#include "mltide/sparse/dense.hpp"

namespace mltide {

/// Layers are numbered top (0) to bottom (N-1).
class LayerStack {
 public:
  /// Empty thicknesses mean unit rest thickness in every layer.
  explicit LayerStack(std::vector<double> densities, std::vector<double> rest_thicknesses = {})
      : densities_(std::move(densities)), thicknesses_(std::move(rest_thicknesses)) {
    if (thicknesses_.empty()) thicknesses_.assign(densities_.size(), 1.0);
    validate();
  }

  /// N densities equidistributed over [top, bottom].
  static LayerStack equispaced(std::size_t n, double top = 1.03, double bottom = 1.06) {
    if (n == 0) throw std::invalid_argument("layer stack: need at least one layer");
    std::vector<double> rho(n, top);
    for (std::size_t i = 1; i < n; ++i) rho[i] = top + (bottom - top) * static_cast<double>(i) / static_cast<double>(n - 1);
    return LayerStack(std::move(rho));
  }

  std::size_t size() const { return densities_.size(); }
  const std::vector<double>& densities() const { return densities_; }
  const std::vector<double>& rest_thicknesses() const { return thicknesses_; }
  double density(std::size_t i) const { return densities_[i]; }

  /// mu_i = rho_i / Dbar_i with the scalar rest thickness.
  double mu(std::size_t i) const { return densities_[i] / thicknesses_[i]; }

  /// Spatially varying bottom-layer rest thickness (variable bathymetry).
  void set_bottom_thickness(std::function<double(Point)> profile) { bottom_profile_ = std::move(profile); }
  bool has_bottom_profile() const { return static_cast<bool>(bottom_profile_); }

  /// mu_i evaluated cellwise; only the bottom layer can vary in space.
  CellField mu_field(const Mesh& mesh, std::size_t layer) const {
    if (layer + 1 == size() && bottom_profile_) {
      const double rho = densities_[layer];
      const auto& profile = bottom_profile_;
      return CellField::from_function(mesh, [&](Point p) {
        const double d = profile(p);
        if (!(d > 0.0)) throw std::invalid_argument("layer stack: bottom thickness must be positive");
        return rho / d;
      });
    }
    return CellField::constant(mesh, mu(layer));
  }

  /// Smallest and largest gap between consecutive densities (N >= 2).
  double min_gap() const {
    double g = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < size(); ++i) g = std::min(g, densities_[i + 1] - densities_[i]);
    return g;
  }
  double max_gap() const {
    double g = 0.0;
    for (std::size_t i = 0; i + 1 < size(); ++i) g = std::max(g, densities_[i + 1] - densities_[i]);
    return g;
  }

 private:
  void validate() const {
    if (densities_.empty()) throw std::invalid_argument("layer stack: need at least one layer");
    if (thicknesses_.size() != densities_.size()) {
      throw std::invalid_argument("layer stack: " + std::to_string(densities_.size()) + " densities but " +
                                  std::to_string(thicknesses_.size()) + " rest thicknesses");
    }
    for (std::size_t i = 0; i < size(); ++i) {
      if (!(densities_[i] > 0.0)) throw std::invalid_argument("layer stack: densities must be positive");
      if (!(thicknesses_[i] > 0.0)) throw std::invalid_argument("layer stack: rest thicknesses must be positive");
      if (i > 0 && !(densities_[i] > densities_[i - 1])) {
        std::ostringstream msg;
        msg << "layer stack: densities must strictly increase downward, but rho_" << i << " = " << densities_[i - 1]
            << " and rho_" << i + 1 << " = " << densities_[i];
        throw std::invalid_argument(msg.str());
      }
    }
    if (densities_.back() > 2.0 * densities_.front()) {
      throw std::invalid_argument("layer stack: bottom density exceeds twice the top density");
    }
  }

  std::vector<double> densities_;
  std::vector<double> thicknesses_;
  std::function<double(Point)> bottom_profile_;
};

// The layer algebra below needs only positive, strictly increasing densities;
// the bound rho_N <= 2 rho_1 that LayerStack enforces matters for the
// stability analysis, not here. Each routine takes raw densities and has a
// LayerStack overload.

inline void check_densities(std::span<const double> rho) {
  if (rho.empty()) throw std::invalid_argument("densities: need at least one layer");
  for (std::size_t i = 0; i < rho.size(); ++i) {
    if (!(rho[i] > 0.0)) throw std::invalid_argument("densities: must be positive");
    if (i > 0 && !(rho[i] > rho[i - 1])) throw std::invalid_argument("densities: must strictly increase downward");
  }
}

/// A_ij = rho_min(i,j).
inline DenseMatrix coupling_matrix(std::span<const double> rho) {
  check_densities(rho);
  const std::size_t n = rho.size();
  DenseMatrix a(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a(i, j) = rho[std::min(i, j)];
  return a;
}

inline DenseMatrix coupling_matrix(const LayerStack& stack) { return coupling_matrix(stack.densities()); }

/// Symmetric tridiagonal matrix stored as diagonal + first off-diagonal.
struct SymTridiagonal {
  std::vector<double> diag;
  std::vector<double> off;  ///< off[i] = T(i, i+1) = T(i+1, i)

  std::size_t size() const { return diag.size(); }

  void apply(std::span<const double> x, std::span<double> y) const {
    const std::size_t n = size();
    for (std::size_t i = 0; i < n; ++i) {
      double s = diag[i] * x[i];
      if (i > 0) s += off[i - 1] * x[i - 1];
      if (i + 1 < n) s += off[i] * x[i + 1];
      y[i] = s;
    }
  }

  DenseMatrix to_dense() const {
    DenseMatrix m(size());
    for (std::size_t i = 0; i < size(); ++i) {
      m(i, i) = diag[i];
      if (i + 1 < size()) m(i, i + 1) = m(i + 1, i) = off[i];
    }
    return m;
  }
};

/// Explicit inverse of the coupling matrix, built from reciprocal density gaps.
inline SymTridiagonal coupling_inverse(std::span<const double> rho) {
  check_densities(rho);
  const std::size_t n = rho.size();
  SymTridiagonal c;
  c.diag.assign(n, 0.0);
  c.off.assign(n > 0 ? n - 1 : 0, 0.0);
  if (n == 1) {
    c.diag[0] = 1.0 / rho[0];
    return c;
  }
  for (std::size_t i = 0; i + 1 < n; ++i) c.off[i] = -1.0 / (rho[i + 1] - rho[i]);
  c.diag[0] = 1.0 / rho[0] + 1.0 / (rho[1] - rho[0]);
  for (std::size_t i = 1; i + 1 < n; ++i) c.diag[i] = 1.0 / (rho[i] - rho[i - 1]) + 1.0 / (rho[i + 1] - rho[i]);
  c.diag[n - 1] = 1.0 / (rho[n - 1] - rho[n - 2]);
  return c;
}

inline SymTridiagonal coupling_inverse(const LayerStack& stack) { return coupling_inverse(stack.densities()); }

/// C = L D L^T with L unit lower bidiagonal and D > 0.
struct LdlFactors {
  std::vector<double> sub;   ///< L(i+1, i)
  std::vector<double> diag;  ///< D(i, i)

  std::size_t size() const { return diag.size(); }

  DenseMatrix lower() const {
    DenseMatrix l = DenseMatrix::identity(size());
    for (std::size_t i = 0; i + 1 < size(); ++i) l(i + 1, i) = sub[i];
    return l;
  }

  DenseMatrix reconstruct() const {
    const DenseMatrix l = lower();
    DenseMatrix d(size());
    for (std::size_t i = 0; i < size(); ++i) d(i, i) = diag[i];
    return l * d * l.transposed();
  }
};

inline LdlFactors ldlt(const SymTridiagonal& c) {
  const std::size_t n = c.size();
  LdlFactors f;
  f.diag.assign(n, 0.0);
  f.sub.assign(n > 0 ? n - 1 : 0, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double d = c.diag[i];
    if (i > 0) d -= f.sub[i - 1] * f.sub[i - 1] * f.diag[i - 1];
    if (!(d > 0.0)) throw PivotError("ldlt: nonpositive pivot, matrix is not positive definite", i);
    f.diag[i] = d;
    if (i + 1 < n) f.sub[i] = c.off[i] / d;
  }
  return f;
}

/// L^T diag(m) L for unit lower bidiagonal L; tridiagonal in layer index.
inline SymTridiagonal bidiagonal_congruence(const LdlFactors& f, std::span<const double> m) {
  const std::size_t n = f.size();
  SymTridiagonal t;
  t.diag.assign(n, 0.0);
  t.off.assign(n > 0 ? n - 1 : 0, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    t.diag[i] = m[i];
    if (i + 1 < n) {
      t.diag[i] += f.sub[i] * f.sub[i] * m[i + 1];
      t.off[i] = f.sub[i] * m[i + 1];
    }
  }
  return t;
}

struct PowerIterationResult {
  double eigenvalue = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

/// Largest eigenvalue of a symmetric positive semidefinite operator by power
/// iteration. For such operators the Rayleigh quotient never decreases, so the
/// estimate is a lower bound that improves monotonically from the start vector.
template <class Apply>
PowerIterationResult power_iteration(Apply&& apply, std::vector<double> x, double tol = 1e-12,
                                     std::size_t max_iterations = 10000) {
  PowerIterationResult r;
  std::vector<double> y(x.size());
  double nx = norm2(x);
  for (double& v : x) v /= nx;
  double theta_old = 0.0;
  for (std::size_t it = 1; it <= max_iterations; ++it) {
    apply(std::span<const double>(x), std::span<double>(y));
    const double theta = dot(x, y);
    r.eigenvalue = theta;
    r.iterations = it;
    if (it > 1 && std::abs(theta - theta_old) <= tol * std::abs(theta)) {
      r.converged = true;
      return r;
    }
    theta_old = theta;
    nx = norm2(y);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = y[i] / nx;
  }
  return r;
}

struct SpectralBounds {
  double lambda_max = 0.0;  ///< largest eigenvalue of A
  double lambda_min = 0.0;  ///< smallest eigenvalue of A
  double lambda_max_lower = 0.0;  ///< N rho_1
  double lambda_max_upper = 0.0;  ///< sum of densities
  /// Brackets for the smallest eigenvalue; absent for a single layer.
  std::optional<double> lambda_min_lower;  ///< min gap / 4
  std::optional<double> lambda_min_upper;  ///< 3 max gap / 10, only for N >= 5
  std::size_t iterations_max = 0;  ///< power iterations spent on lambda_max

  bool lambda_max_inside() const { return lambda_max >= lambda_max_lower && lambda_max <= lambda_max_upper; }
  bool lambda_min_inside() const {
    if (lambda_min_lower && lambda_min < *lambda_min_lower) return false;
    if (lambda_min_upper && lambda_min > *lambda_min_upper) return false;
    return true;
  }
};

/// Number of eigenvalues of a symmetric tridiagonal matrix below x, from the
/// signs of the LDL^T pivots of T - x I.
inline std::size_t sturm_count(const SymTridiagonal& t, double x) {
  std::size_t count = 0;
  double d = 1.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double off2 = i > 0 ? t.off[i - 1] * t.off[i - 1] : 0.0;
    d = t.diag[i] - x - (i > 0 ? off2 / d : 0.0);
    if (d == 0.0) d = -std::numeric_limits<double>::min();
    if (d < 0.0) ++count;
  }
  return count;
}

/// Largest eigenvalue of a symmetric tridiagonal matrix by bisection on the
/// Sturm count, starting from the Gershgorin interval; exact to roundoff.
inline double largest_eigenvalue(const SymTridiagonal& t) {
  const std::size_t n = t.size();
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = (i > 0 ? std::abs(t.off[i - 1]) : 0.0) + (i + 1 < n ? std::abs(t.off[i]) : 0.0);
    lo = std::min(lo, t.diag[i] - r);
    hi = std::max(hi, t.diag[i] + r);
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (sturm_count(t, mid) == n) hi = mid;
    else lo = mid;
  }
  return 0.5 * (lo + hi);
}

/// Extremal eigenvalues of the coupling matrix with their analytic brackets.
///
/// lambda_max comes from power iteration on A started at the all-ones vector
/// (Rayleigh quotients increase monotonically from N rho_1). lambda_min is the
/// reciprocal of the largest eigenvalue of the tridiagonal inverse, found by
/// Sturm bisection: power iteration there stalls when the two top eigenvalues
/// nearly coincide, which random density gaps readily produce.
inline SpectralBounds spectral_bounds(std::span<const double> rho, double tol = 1e-12,
                                      std::size_t max_iterations = 10000) {
  check_densities(rho);
  const std::size_t n = rho.size();
  SpectralBounds b;
  b.lambda_max_lower = static_cast<double>(n) * rho[0];
  b.lambda_max_upper = std::accumulate(rho.begin(), rho.end(), 0.0);

  const DenseMatrix a = coupling_matrix(rho);
  auto top = power_iteration([&](std::span<const double> x, std::span<double> y) { a.apply(x, y); },
                             std::vector<double>(n, 1.0), tol, max_iterations);
  if (!top.converged) {
    throw ConvergenceError("spectral_bounds: power iteration for the largest eigenvalue did not converge in " +
                           std::to_string(max_iterations) + " iterations");
  }
  b.lambda_max = top.eigenvalue;
  b.iterations_max = top.iterations;

  if (n == 1) {
    b.lambda_min = rho[0];
    return b;
  }
  double min_gap = std::numeric_limits<double>::infinity(), max_gap = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    min_gap = std::min(min_gap, rho[i + 1] - rho[i]);
    max_gap = std::max(max_gap, rho[i + 1] - rho[i]);
  }
  b.lambda_min_lower = min_gap / 4.0;
  if (n >= 5) b.lambda_min_upper = 3.0 * max_gap / 10.0;
  b.lambda_min = 1.0 / largest_eigenvalue(coupling_inverse(rho));
  return b;
}

inline SpectralBounds spectral_bounds(const LayerStack& stack, double tol = 1e-12, std::size_t max_iterations = 10000) {
  return spectral_bounds(stack.densities(), tol, max_iterations);
}

/// small (x) big in layer-outer, dof-inner ordering.
inline CsrMatrix kron_lift(const DenseMatrix& small, const CsrMatrix& big) {
  return kron(small.size(), small.data(), big);
}

}  // namespace mltide
