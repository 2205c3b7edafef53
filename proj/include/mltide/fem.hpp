#pragma once

// Lowest-order Raviart-Thomas (RT0) velocities and piecewise-constant (DG0)
// elevations on a triangular Mesh.
//
// The RT0 degree of freedom on an edge is the flux through it measured with
// the global edge normal, so the basis function psi_e satisfies
// int_e psi_e . n_e = 1. On a triangle with vertices p_0, p_1, p_2 the local
// function with unit outward flux through the edge opposite p_i is
// (x - p_i) / (2 |T|); the global function is that times the cell's edge sign.
// All element integrands are quadratic, so the edge-midpoint rule is exact.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mltide/mesh.hpp"
#include "mltide/sparse/csr.hpp"

namespace mltide {

/// Piecewise-constant coefficient, one strictly positive value per cell.
class CellField {
 public:
  CellField() = default;
  explicit CellField(std::vector<double> values) : values_(std::move(values)) {}

  static CellField constant(const Mesh& mesh, double value) {
    return CellField(std::vector<double>(mesh.num_cells(), value));
  }

  /// Evaluate f at every cell centroid.
  static CellField from_function(const Mesh& mesh, const std::function<double(Point)>& f) {
    std::vector<double> v(mesh.num_cells());
    for (std::size_t c = 0; c < v.size(); ++c) v[c] = f(mesh.cell_centroid(c));
    return CellField(std::move(v));
  }

  double operator[](std::size_t cell) const { return values_[cell]; }
  std::size_t size() const { return values_.size(); }
  const std::vector<double>& values() const { return values_; }

  double min() const {
    double m = values_.empty() ? 0.0 : values_.front();
    for (double v : values_) m = std::min(m, v);
    return m;
  }

 private:
  std::vector<double> values_;
};

enum class BoundaryCondition {
  natural,            ///< every edge carries a dof
  normal_trace_zero,  ///< boundary-edge dofs eliminated (impermeable walls)
};

/// Maps mesh edges to velocity dofs; eliminated edges map to `none`.
class DofMap {
 public:
  static constexpr std::size_t none = static_cast<std::size_t>(-1);

  DofMap() = default;
  DofMap(const Mesh& mesh, BoundaryCondition bc) : edge_to_dof_(mesh.num_edges(), none) {
    for (std::size_t e = 0; e < mesh.num_edges(); ++e) {
      if (bc == BoundaryCondition::normal_trace_zero && mesh.is_boundary_edge(e)) continue;
      edge_to_dof_[e] = dof_to_edge_.size();
      dof_to_edge_.push_back(e);
    }
  }

  std::size_t size() const { return dof_to_edge_.size(); }
  std::size_t dof(std::size_t edge) const { return edge_to_dof_[edge]; }
  std::size_t edge(std::size_t dof) const { return dof_to_edge_[dof]; }

 private:
  std::vector<std::size_t> edge_to_dof_;
  std::vector<std::size_t> dof_to_edge_;
};

struct SingleLayerMatrices {
  CsrMatrix mass_v;       ///< (kappa psi_j, psi_i)
  CsrMatrix perp_mass_v;  ///< (kappa psi_j^perp, psi_i), skew-symmetric
  CsrMatrix mass_w;       ///< diagonal of cell areas
  CsrMatrix div;          ///< (div psi_j, phi_i), cells x dofs
  CsrMatrix divdiv;       ///< (div psi_j, div psi_i)
  BoundaryCondition bc = BoundaryCondition::natural;
  DofMap dofs;
};

namespace detail {

inline void check_coefficient(const Mesh& mesh, const CellField& kappa) {
  if (kappa.size() != mesh.num_cells()) {
    throw DimensionError("fem: coefficient has " + std::to_string(kappa.size()) + " values for " +
                         std::to_string(mesh.num_cells()) + " cells");
  }
  for (std::size_t c = 0; c < kappa.size(); ++c) {
    if (!(kappa[c] > 0.0)) {
      throw std::invalid_argument("fem: coefficient must be positive, got " + std::to_string(kappa[c]) +
                                  " on cell " + std::to_string(c));
    }
  }
}

/// Local RT0 function with unit outward flux through the edge opposite vertex i.
inline Point rt0_local(const std::array<Point, 3>& p, double area, int i, Point x) {
  return (0.5 / area) * (x - p[static_cast<std::size_t>(i)]);
}

/// Element matrices for mass and perp-mass with the cell's edge signs applied.
inline void rt0_element(const Mesh& mesh, std::size_t cell, double kappa, double (&mass)[3][3],
                        double (&perp_mass)[3][3]) {
  const auto p = mesh.cell_points(cell);
  const double area = mesh.cell_area(cell);
  const auto& ce = mesh.cell_edges(cell);
  const std::array<Point, 3> quad = {0.5 * (p[1] + p[2]), 0.5 * (p[2] + p[0]), 0.5 * (p[0] + p[1])};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      double m = 0.0, pm = 0.0;
      for (const Point& q : quad) {
        const Point fi = rt0_local(p, area, i, q);
        const Point fj = rt0_local(p, area, j, q);
        m += dot(fj, fi);
        pm += dot(perp(fj), fi);
      }
      const double s = kappa * ce[static_cast<std::size_t>(i)].sign * ce[static_cast<std::size_t>(j)].sign * area / 3.0;
      mass[i][j] = s * m;
      perp_mass[i][j] = s * pm;
    }
  }
}

}  // namespace detail

/// Evaluate the global RT0 field with the given dof vector at a point of a cell.
inline Point evaluate_rt0(const Mesh& mesh, const DofMap& dofs, std::span<const double> coeffs, std::size_t cell,
                          Point x) {
  const auto p = mesh.cell_points(cell);
  const double area = mesh.cell_area(cell);
  Point u{};
  for (int i = 0; i < 3; ++i) {
    const auto& ce = mesh.cell_edges(cell)[static_cast<std::size_t>(i)];
    const std::size_t d = dofs.dof(ce.edge);
    if (d == DofMap::none) continue;
    u = u + (ce.sign * coeffs[d]) * detail::rt0_local(p, area, i, x);
  }
  return u;
}

/// RT0 interpolant: dof value is the flux of f through the edge (two-point
/// Gauss rule along the edge).
inline Vector interpolate_rt0(const Mesh& mesh, const DofMap& dofs, const std::function<Point(Point)>& f) {
  Vector out(dofs.size());
  const double g = 0.5 / std::sqrt(3.0);
  for (std::size_t d = 0; d < dofs.size(); ++d) {
    const std::size_t e = dofs.edge(d);
    const Point a = mesh.vertices()[mesh.edges()[e][0]];
    const Point b = mesh.vertices()[mesh.edges()[e][1]];
    const Point n = mesh.edge_normal(e);
    const double len = mesh.edge_length(e);
    const Point q0 = a + (0.5 - g) * (b - a);
    const Point q1 = a + (0.5 + g) * (b - a);
    out[d] = 0.5 * len * (dot(f(q0), n) + dot(f(q1), n));
  }
  return out;
}

/// (kappa psi_j^perp, psi_i) on the velocity dofs.
inline CsrMatrix assemble_perp_mass(const Mesh& mesh, const CellField& kappa,
                                    BoundaryCondition bc = BoundaryCondition::natural) {
  detail::check_coefficient(mesh, kappa);
  const DofMap dofs(mesh, bc);
  std::vector<Triplet> t;
  t.reserve(9 * mesh.num_cells());
  for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
    double m[3][3], pm[3][3];
    detail::rt0_element(mesh, c, kappa[c], m, pm);
    const auto& ce = mesh.cell_edges(c);
    for (int i = 0; i < 3; ++i) {
      const std::size_t di = dofs.dof(ce[static_cast<std::size_t>(i)].edge);
      if (di == DofMap::none) continue;
      for (int j = 0; j < 3; ++j) {
        const std::size_t dj = dofs.dof(ce[static_cast<std::size_t>(j)].edge);
        if (dj != DofMap::none) t.push_back({di, dj, pm[i][j]});
      }
    }
  }
  return CsrMatrix::from_triplets(dofs.size(), dofs.size(), std::move(t));
}

inline SingleLayerMatrices assemble_single_layer(const Mesh& mesh, const CellField& kappa,
                                                 BoundaryCondition bc = BoundaryCondition::natural) {
  detail::check_coefficient(mesh, kappa);
  SingleLayerMatrices out;
  out.bc = bc;
  out.dofs = DofMap(mesh, bc);
  const DofMap& dofs = out.dofs;
  const std::size_t nc = mesh.num_cells();

  std::vector<Triplet> mass, perp_mass, div, divdiv;
  mass.reserve(9 * nc);
  perp_mass.reserve(9 * nc);
  divdiv.reserve(9 * nc);
  div.reserve(3 * nc);
  for (std::size_t c = 0; c < nc; ++c) {
    double m[3][3], pm[3][3];
    detail::rt0_element(mesh, c, kappa[c], m, pm);
    const auto& ce = mesh.cell_edges(c);
    const double area = mesh.cell_area(c);
    for (int i = 0; i < 3; ++i) {
      const auto& ei = ce[static_cast<std::size_t>(i)];
      const std::size_t di = dofs.dof(ei.edge);
      if (di == DofMap::none) continue;
      // div psi_e = sign / |T| on the cell
      div.push_back({c, di, static_cast<double>(ei.sign)});
      for (int j = 0; j < 3; ++j) {
        const auto& ej = ce[static_cast<std::size_t>(j)];
        const std::size_t dj = dofs.dof(ej.edge);
        if (dj == DofMap::none) continue;
        mass.push_back({di, dj, m[i][j]});
        perp_mass.push_back({di, dj, pm[i][j]});
        divdiv.push_back({di, dj, ei.sign * ej.sign / area});
      }
    }
  }
  const std::size_t nv = dofs.size();
  out.mass_v = CsrMatrix::from_triplets(nv, nv, std::move(mass));
  out.perp_mass_v = CsrMatrix::from_triplets(nv, nv, std::move(perp_mass));
  out.div = CsrMatrix::from_triplets(nc, nv, std::move(div));
  out.divdiv = CsrMatrix::from_triplets(nv, nv, std::move(divdiv));
  out.mass_w = CsrMatrix::diagonal(mesh.cell_areas());
  return out;
}

}  // namespace mltide
