#pragma once

// Compressed-row sparse matrices and the handful of kernels built on them.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "mltide/errors.hpp"

namespace mltide {

using Vector = std::vector<double>;

struct Triplet {
  std::size_t row;
  std::size_t col;
  double value;
};

/// Column indices are strictly increasing within each row; no duplicates.
class CsrMatrix {
 public:
  CsrMatrix() : row_ptr_(1, 0) {}

  CsrMatrix(std::size_t nrows, std::size_t ncols, std::vector<std::size_t> row_ptr,
            std::vector<std::size_t> col_idx, std::vector<double> values)
      : nrows_(nrows),
        ncols_(ncols),
        row_ptr_(std::move(row_ptr)),
        col_idx_(std::move(col_idx)),
        values_(std::move(values)) {
    validate();
  }

  /// Duplicate (row, col) entries are summed.
  static CsrMatrix from_triplets(std::size_t nrows, std::size_t ncols, std::vector<Triplet> entries) {
    for (const auto& t : entries) {
      if (t.row >= nrows || t.col >= ncols) {
        throw DimensionError("csr: triplet (" + std::to_string(t.row) + ", " + std::to_string(t.col) +
                             ") outside " + std::to_string(nrows) + "x" + std::to_string(ncols));
      }
    }
    std::sort(entries.begin(), entries.end(), [](const Triplet& a, const Triplet& b) {
      return std::tie(a.row, a.col) < std::tie(b.row, b.col);
    });
    std::vector<std::size_t> row_ptr(nrows + 1, 0);
    std::vector<std::size_t> cols;
    std::vector<double> vals;
    cols.reserve(entries.size());
    vals.reserve(entries.size());
    for (std::size_t k = 0; k < entries.size();) {
      const std::size_t r = entries[k].row;
      const std::size_t c = entries[k].col;
      double sum = 0.0;
      for (; k < entries.size() && entries[k].row == r && entries[k].col == c; ++k) sum += entries[k].value;
      cols.push_back(c);
      vals.push_back(sum);
      ++row_ptr[r + 1];
    }
    std::partial_sum(row_ptr.begin(), row_ptr.end(), row_ptr.begin());
    return CsrMatrix(nrows, ncols, std::move(row_ptr), std::move(cols), std::move(vals));
  }

  static CsrMatrix identity(std::size_t n) { return diagonal(Vector(n, 1.0)); }

  static CsrMatrix diagonal(std::span<const double> d) {
    const std::size_t n = d.size();
    std::vector<std::size_t> rp(n + 1), ci(n);
    std::iota(rp.begin(), rp.end(), std::size_t{0});
    std::iota(ci.begin(), ci.end(), std::size_t{0});
    return CsrMatrix(n, n, std::move(rp), std::move(ci), Vector(d.begin(), d.end()));
  }

  static CsrMatrix zero(std::size_t nrows, std::size_t ncols) {
    return CsrMatrix(nrows, ncols, std::vector<std::size_t>(nrows + 1, 0), {}, {});
  }

  /// Row-major dense input; exact zeros are dropped.
  static CsrMatrix from_dense(std::size_t nrows, std::size_t ncols, std::span<const double> dense) {
    if (dense.size() != nrows * ncols) throw DimensionError("csr: dense buffer size mismatch");
    std::vector<Triplet> t;
    for (std::size_t i = 0; i < nrows; ++i)
      for (std::size_t j = 0; j < ncols; ++j)
        if (dense[i * ncols + j] != 0.0) t.push_back({i, j, dense[i * ncols + j]});
    return from_triplets(nrows, ncols, std::move(t));
  }

  std::size_t rows() const { return nrows_; }
  std::size_t cols() const { return ncols_; }
  std::size_t nnz() const { return values_.size(); }
  bool square() const { return nrows_ == ncols_; }

  const std::vector<std::size_t>& row_ptr() const { return row_ptr_; }
  const std::vector<std::size_t>& col_idx() const { return col_idx_; }
  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }

  /// Zero when the entry is not stored.
  double at(std::size_t i, std::size_t j) const {
    const auto first = col_idx_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[i]);
    const auto last = col_idx_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[i + 1]);
    const auto it = std::lower_bound(first, last, j);
    if (it == last || *it != j) return 0.0;
    return values_[static_cast<std::size_t>(it - col_idx_.begin())];
  }

  /// Index into values() of entry (i, j), or nnz() when absent.
  std::size_t find(std::size_t i, std::size_t j) const {
    const auto first = col_idx_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[i]);
    const auto last = col_idx_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[i + 1]);
    const auto it = std::lower_bound(first, last, j);
    if (it == last || *it != j) return nnz();
    return static_cast<std::size_t>(it - col_idx_.begin());
  }

  Vector diagonal_values() const {
    Vector d(std::min(nrows_, ncols_), 0.0);
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = at(i, i);
    return d;
  }

  std::vector<Triplet> triplets() const {
    std::vector<Triplet> t;
    t.reserve(nnz());
    for (std::size_t i = 0; i < nrows_; ++i)
      for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) t.push_back({i, col_idx_[k], values_[k]});
    return t;
  }

  Vector to_dense() const {
    Vector d(nrows_ * ncols_, 0.0);
    for (std::size_t i = 0; i < nrows_; ++i)
      for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) d[i * ncols_ + col_idx_[k]] = values_[k];
    return d;
  }

  /// y = A x.
  void apply(std::span<const double> x, std::span<double> y) const {
    if (x.size() != ncols_ || y.size() != nrows_) {
      throw DimensionError("spmv: " + std::to_string(nrows_) + "x" + std::to_string(ncols_) +
                           " matrix applied to vector of length " + std::to_string(x.size()));
    }
    for (std::size_t i = 0; i < nrows_; ++i) {
      double s = 0.0;
      for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) s += values_[k] * x[col_idx_[k]];
      y[i] = s;
    }
  }

  std::size_t size() const { return nrows_; }

 private:
  void validate() const {
    if (row_ptr_.size() != nrows_ + 1 || row_ptr_.front() != 0 || row_ptr_.back() != col_idx_.size() ||
        col_idx_.size() != values_.size()) {
      throw DimensionError("csr: inconsistent array lengths");
    }
    for (std::size_t i = 0; i < nrows_; ++i) {
      if (row_ptr_[i] > row_ptr_[i + 1]) throw DimensionError("csr: row_ptr must be nondecreasing");
      for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
        if (col_idx_[k] >= ncols_) throw DimensionError("csr: column index out of range");
        if (k > row_ptr_[i] && col_idx_[k] <= col_idx_[k - 1]) {
          throw DimensionError("csr: column indices must strictly increase within row " + std::to_string(i));
        }
      }
    }
  }

  std::size_t nrows_ = 0;
  std::size_t ncols_ = 0;
  std::vector<std::size_t> row_ptr_;
  std::vector<std::size_t> col_idx_;
  std::vector<double> values_;
};

inline Vector spmv(const CsrMatrix& a, std::span<const double> x) {
  Vector y(a.rows());
  a.apply(x, y);
  return y;
}

inline CsrMatrix transpose(const CsrMatrix& a) {
  std::vector<std::size_t> rp(a.cols() + 1, 0);
  for (std::size_t c : a.col_idx()) ++rp[c + 1];
  std::partial_sum(rp.begin(), rp.end(), rp.begin());
  std::vector<std::size_t> ci(a.nnz());
  Vector v(a.nnz());
  std::vector<std::size_t> next(rp.begin(), rp.end() - 1);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = a.row_ptr()[i]; k < a.row_ptr()[i + 1]; ++k) {
      const std::size_t dst = next[a.col_idx()[k]]++;
      ci[dst] = i;
      v[dst] = a.values()[k];
    }
  }
  return CsrMatrix(a.cols(), a.rows(), std::move(rp), std::move(ci), std::move(v));
}

inline CsrMatrix scaled(const CsrMatrix& a, double s) {
  CsrMatrix out = a;
  for (double& v : out.values()) v *= s;
  return out;
}

/// Sum of scaled matrices, sum_i coeff_i * A_i, on the union pattern.
inline CsrMatrix linear_combination(std::initializer_list<std::pair<double, const CsrMatrix*>> terms) {
  if (terms.size() == 0) throw DimensionError("linear_combination: no terms");
  const std::size_t nr = terms.begin()->second->rows();
  const std::size_t nc = terms.begin()->second->cols();
  std::vector<Triplet> t;
  for (const auto& [coeff, m] : terms) {
    if (m->rows() != nr || m->cols() != nc) throw DimensionError("linear_combination: shape mismatch");
    for (std::size_t i = 0; i < m->rows(); ++i)
      for (std::size_t k = m->row_ptr()[i]; k < m->row_ptr()[i + 1]; ++k)
        t.push_back({i, m->col_idx()[k], coeff * m->values()[k]});
  }
  return CsrMatrix::from_triplets(nr, nc, std::move(t));
}

/// Kronecker product small (dense, row-major n x n) with a sparse matrix.
/// Block (i, j) of the result is small(i, j) * big; structurally zero
/// entries of small produce no stored block.
inline CsrMatrix kron(std::size_t n, std::span<const double> small, const CsrMatrix& big) {
  if (small.size() != n * n) throw DimensionError("kron: small matrix must be n x n");
  const std::size_t br = big.rows();
  const std::size_t bc = big.cols();
  std::vector<std::size_t> rp(n * br + 1, 0);
  std::vector<std::size_t> ci;
  Vector vals;
  std::size_t nz_blocks = 0;
  for (double s : small) nz_blocks += (s != 0.0);
  ci.reserve(nz_blocks * big.nnz());
  vals.reserve(nz_blocks * big.nnz());
  for (std::size_t bi = 0; bi < n; ++bi) {
    for (std::size_t r = 0; r < br; ++r) {
      for (std::size_t bj = 0; bj < n; ++bj) {
        const double s = small[bi * n + bj];
        if (s == 0.0) continue;
        for (std::size_t k = big.row_ptr()[r]; k < big.row_ptr()[r + 1]; ++k) {
          ci.push_back(bj * bc + big.col_idx()[k]);
          vals.push_back(s * big.values()[k]);
        }
      }
      rp[bi * br + r + 1] = ci.size();
    }
  }
  return CsrMatrix(n * br, n * bc, std::move(rp), std::move(ci), std::move(vals));
}

/// Block-diagonal matrix from a list of (possibly different) blocks.
inline CsrMatrix block_diagonal(std::span<const CsrMatrix> blocks) {
  std::size_t nr = 0, nc = 0, nz = 0;
  for (const auto& b : blocks) {
    nr += b.rows();
    nc += b.cols();
    nz += b.nnz();
  }
  std::vector<std::size_t> rp;
  rp.reserve(nr + 1);
  rp.push_back(0);
  std::vector<std::size_t> ci;
  Vector v;
  ci.reserve(nz);
  v.reserve(nz);
  std::size_t coff = 0;
  for (const auto& b : blocks) {
    for (std::size_t i = 0; i < b.rows(); ++i) {
      for (std::size_t k = b.row_ptr()[i]; k < b.row_ptr()[i + 1]; ++k) {
        ci.push_back(coff + b.col_idx()[k]);
        v.push_back(b.values()[k]);
      }
      rp.push_back(ci.size());
    }
    coff += b.cols();
  }
  return CsrMatrix(nr, nc, std::move(rp), std::move(ci), std::move(v));
}

/// Assemble [[A, B], [C, D]] into one matrix.
inline CsrMatrix block_2x2(const CsrMatrix& a, const CsrMatrix& b, const CsrMatrix& c, const CsrMatrix& d) {
  if (a.rows() != b.rows() || c.rows() != d.rows() || a.cols() != c.cols() || b.cols() != d.cols()) {
    throw DimensionError("block_2x2: incompatible block shapes");
  }
  const std::size_t n0 = a.rows();
  const std::size_t m0 = a.cols();
  std::vector<std::size_t> rp;
  rp.reserve(a.rows() + c.rows() + 1);
  rp.push_back(0);
  std::vector<std::size_t> ci;
  Vector v;
  const std::size_t nz = a.nnz() + b.nnz() + c.nnz() + d.nnz();
  ci.reserve(nz);
  v.reserve(nz);
  auto append_row = [&](const CsrMatrix& m, std::size_t i, std::size_t coff) {
    for (std::size_t k = m.row_ptr()[i]; k < m.row_ptr()[i + 1]; ++k) {
      ci.push_back(coff + m.col_idx()[k]);
      v.push_back(m.values()[k]);
    }
  };
  for (std::size_t i = 0; i < n0; ++i) {
    append_row(a, i, 0);
    append_row(b, i, m0);
    rp.push_back(ci.size());
  }
  for (std::size_t i = 0; i < c.rows(); ++i) {
    append_row(c, i, 0);
    append_row(d, i, m0);
    rp.push_back(ci.size());
  }
  return CsrMatrix(n0 + c.rows(), m0 + b.cols(), std::move(rp), std::move(ci), std::move(v));
}

/// Principal submatrix extraction, rows/cols [begin, end).
inline CsrMatrix diagonal_block(const CsrMatrix& a, std::size_t begin, std::size_t end) {
  std::vector<std::size_t> rp{0};
  std::vector<std::size_t> ci;
  Vector v;
  for (std::size_t i = begin; i < end; ++i) {
    for (std::size_t k = a.row_ptr()[i]; k < a.row_ptr()[i + 1]; ++k) {
      const std::size_t c = a.col_idx()[k];
      if (c >= begin && c < end) {
        ci.push_back(c - begin);
        v.push_back(a.values()[k]);
      }
    }
    rp.push_back(ci.size());
  }
  return CsrMatrix(end - begin, end - begin, std::move(rp), std::move(ci), std::move(v));
}

inline double max_abs_difference(const CsrMatrix& a, const CsrMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw DimensionError("max_abs_difference: shape mismatch");
  const CsrMatrix d = linear_combination({{1.0, &a}, {-1.0, &b}});
  double m = 0.0;
  for (double x : d.values()) m = std::max(m, std::abs(x));
  return m;
}

// Small dense-vector helpers used across the solvers.

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

/// y += alpha * x
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

inline double quadratic_form(const CsrMatrix& a, std::span<const double> x, std::span<const double> y) {
  return dot(x, spmv(a, y));
}

}  // namespace mltide
