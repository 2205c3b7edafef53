#pragma once

// Structured right-triangle mesh of an axis-aligned rectangle.
//
// Each grid square is split by its lower-left to upper-right diagonal into two
// counterclockwise triangles. Edges carry a global orientation: the tangent
// runs from the lower to the higher vertex index and the global unit normal is
// that tangent rotated clockwise, (t_y, -t_x) / |t|.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace mltide {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

inline Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
inline Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
inline Point operator*(double s, Point a) { return {s * a.x, s * a.y}; }
inline double dot(Point a, Point b) { return a.x * b.x + a.y * b.y; }
inline double cross(Point a, Point b) { return a.x * b.y - a.y * b.x; }
/// 90 degree counterclockwise rotation, u^perp = (-u_2, u_1).
inline Point perp(Point a) { return {-a.y, a.x}; }

/// One edge of a cell together with the sign relating the cell's outward
/// normal to the global edge normal.
struct CellEdge {
  std::size_t edge = 0;
  int sign = 1;
};

class Mesh {
 public:
  Mesh(std::size_t nx, std::size_t ny, double lx = 1.0, double ly = 1.0)
      : nx_(nx), ny_(ny), lx_(lx), ly_(ly) {
    if (nx == 0 || ny == 0) {
      throw std::invalid_argument("mesh: cell counts must be positive (got nx=" +
                                  std::to_string(nx) + ", ny=" + std::to_string(ny) + ")");
    }
    if (!(lx > 0.0) || !(ly > 0.0)) {
      throw std::invalid_argument("mesh: domain extents must be positive");
    }
    build();
  }

  std::size_t nx() const { return nx_; }
  std::size_t ny() const { return ny_; }
  double lx() const { return lx_; }
  double ly() const { return ly_; }

  /// Mesh size; 1 / max(nx, ny) on the unit square.
  double h() const {
    return std::max(lx_, ly_) / static_cast<double>(std::max(nx_, ny_));
  }

  std::size_t num_vertices() const { return vertices_.size(); }
  std::size_t num_cells() const { return cells_.size(); }
  std::size_t num_edges() const { return edges_.size(); }

  const std::vector<Point>& vertices() const { return vertices_; }
  const std::vector<std::array<std::size_t, 3>>& cells() const { return cells_; }
  const std::vector<std::array<std::size_t, 2>>& edges() const { return edges_; }

  /// Local edge i of a cell is the edge opposite local vertex i.
  const std::array<CellEdge, 3>& cell_edges(std::size_t cell) const { return cell_edges_[cell]; }

  /// Cells incident to an edge (one entry for boundary edges).
  const std::vector<std::size_t>& edge_cells(std::size_t edge) const { return edge_cells_[edge]; }

  const std::vector<std::size_t>& boundary_edges() const { return boundary_edges_; }
  bool is_boundary_edge(std::size_t edge) const { return edge_cells_[edge].size() == 1; }

  std::array<Point, 3> cell_points(std::size_t cell) const {
    const auto& c = cells_[cell];
    return {vertices_[c[0]], vertices_[c[1]], vertices_[c[2]]};
  }

  double cell_area(std::size_t cell) const { return areas_[cell]; }
  const std::vector<double>& cell_areas() const { return areas_; }

  Point cell_centroid(std::size_t cell) const {
    const auto p = cell_points(cell);
    return (1.0 / 3.0) * (p[0] + p[1] + p[2]);
  }

  Point edge_midpoint(std::size_t edge) const {
    return 0.5 * (vertices_[edges_[edge][0]] + vertices_[edges_[edge][1]]);
  }

  double edge_length(std::size_t edge) const {
    const Point t = vertices_[edges_[edge][1]] - vertices_[edges_[edge][0]];
    return std::hypot(t.x, t.y);
  }

  /// Global unit normal of an edge.
  Point edge_normal(std::size_t edge) const {
    const Point t = vertices_[edges_[edge][1]] - vertices_[edges_[edge][0]];
    const double len = std::hypot(t.x, t.y);
    return {t.y / len, -t.x / len};
  }

 private:
  void build() {
    const std::size_t nvx = nx_ + 1;
    vertices_.reserve(nvx * (ny_ + 1));
    for (std::size_t j = 0; j <= ny_; ++j) {
      for (std::size_t i = 0; i <= nx_; ++i) {
        vertices_.push_back({lx_ * static_cast<double>(i) / static_cast<double>(nx_),
                             ly_ * static_cast<double>(j) / static_cast<double>(ny_)});
      }
    }

    cells_.reserve(2 * nx_ * ny_);
    for (std::size_t j = 0; j < ny_; ++j) {
      for (std::size_t i = 0; i < nx_; ++i) {
        const std::size_t v00 = j * nvx + i;
        const std::size_t v10 = v00 + 1;
        const std::size_t v01 = v00 + nvx;
        const std::size_t v11 = v01 + 1;
        cells_.push_back({v00, v10, v11});
        cells_.push_back({v00, v11, v01});
      }
    }

    std::unordered_map<std::size_t, std::size_t> edge_index;
    edge_index.reserve(3 * nx_ * ny_ + nx_ + ny_);
    const std::size_t nv = vertices_.size();
    cell_edges_.resize(cells_.size());
    areas_.resize(cells_.size());
    for (std::size_t c = 0; c < cells_.size(); ++c) {
      const auto& v = cells_[c];
      for (int le = 0; le < 3; ++le) {
        // counterclockwise traversal a -> b; outward normal is to its right
        const std::size_t a = v[(le + 1) % 3];
        const std::size_t b = v[(le + 2) % 3];
        const std::size_t lo = std::min(a, b);
        const std::size_t hi = std::max(a, b);
        auto [it, inserted] = edge_index.try_emplace(lo * nv + hi, edges_.size());
        if (inserted) {
          edges_.push_back({lo, hi});
          edge_cells_.emplace_back();
        }
        edge_cells_[it->second].push_back(c);
        cell_edges_[c][le] = {it->second, a < b ? 1 : -1};
      }
      const auto p = cell_points(c);
      areas_[c] = 0.5 * cross(p[1] - p[0], p[2] - p[0]);
    }
    for (std::size_t e = 0; e < edges_.size(); ++e) {
      if (edge_cells_[e].size() == 1) boundary_edges_.push_back(e);
    }
  }

  std::size_t nx_;
  std::size_t ny_;
  double lx_;
  double ly_;
  std::vector<Point> vertices_;
  std::vector<std::array<std::size_t, 3>> cells_;
  std::vector<std::array<std::size_t, 2>> edges_;
  std::vector<std::array<CellEdge, 3>> cell_edges_;
  std::vector<std::vector<std::size_t>> edge_cells_;
  std::vector<std::size_t> boundary_edges_;
  std::vector<double> areas_;
};

inline Mesh build_unit_square_mesh(std::size_t nx, std::size_t ny) { return Mesh(nx, ny); }

}  // namespace mltide
