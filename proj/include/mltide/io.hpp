#pragma once

// Plain-text exports: MatrixMarket for matrices, CSV for elevation snapshots.

#include <iomanip>
#include <ostream>

#include "mltide/sparse/csr.hpp"
#include "mltide/system.hpp"

namespace mltide {

/// MatrixMarket coordinate format, general real, 1-based indices.
inline void write_matrix_market(std::ostream& os, const CsrMatrix& a) {
  os << "%%MatrixMarket matrix coordinate real general\n";
  os << a.rows() << ' ' << a.cols() << ' ' << a.nnz() << '\n';
  os << std::setprecision(17);
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = a.row_ptr()[i]; k < a.row_ptr()[i + 1]; ++k)
      os << i + 1 << ' ' << a.col_idx()[k] + 1 << ' ' << a.values()[k] << '\n';
}

/// One row per cell: centroid then the elevation of every layer.
inline void write_state_csv(std::ostream& os, const BlockSystem& sys, const State& s) {
  sys.check(s);
  const std::size_t nc = sys.layer_cell_size();
  os << "x,y";
  for (std::size_t i = 0; i < sys.n_layers(); ++i) os << ",eta" << i + 1;
  os << '\n' << std::setprecision(12);
  for (std::size_t c = 0; c < nc; ++c) {
    const Point p = sys.mesh.cell_centroid(c);
    os << p.x << ',' << p.y;
    for (std::size_t i = 0; i < sys.n_layers(); ++i) os << ',' << s.eta[i * nc + c];
    os << '\n';
  }
}

}  // namespace mltide
