#pragma once

// Sparse direct LU factorization with a symmetric fill-reducing ordering.
//
// The matrix is symmetrically permuted by approximate minimum degree on the
// pattern of A + A^T and then factored left-looking, column by column, with
// diagonal pivots only (Gilbert-Peierls sparse triangular solves). There is no
// numerical row pivoting; this covers the symmetric positive-definite and
// diagonally dominant matrices the solvers produce.

#include <Eigen/OrderingMethods>
#include <Eigen/SparseCore>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "mltide/sparse/csr.hpp"

namespace mltide {

enum class Ordering { amd, natural };

class DirectFactors {
 public:
  explicit DirectFactors(const CsrMatrix& a, Ordering ordering = Ordering::amd) : n_(a.rows()) {
    if (!a.square()) throw DimensionError("direct_factor: matrix must be square");
    compute_ordering(a, ordering);
    factor(a);
  }

  std::size_t size() const { return n_; }
  std::size_t nnz_l() const { return l_rows_.size(); }
  std::size_t nnz_u() const { return u_rows_.size(); }
  /// perm()[k] is the original index of the k-th pivot.
  const std::vector<std::size_t>& perm() const { return perm_; }

  /// x = A^{-1} b. Safe to call concurrently on distinct output buffers.
  void apply(std::span<const double> b, std::span<double> x) const {
    if (b.size() != n_ || x.size() != n_) throw DimensionError("direct_factor: vector length mismatch");
    Vector y(n_);
    for (std::size_t k = 0; k < n_; ++k) y[k] = b[perm_[k]];
    for (std::size_t j = 0; j < n_; ++j) {
      const double yj = y[j];
      if (yj == 0.0) continue;
      for (std::size_t p = l_ptr_[j]; p < l_ptr_[j + 1]; ++p) y[l_rows_[p]] -= l_vals_[p] * yj;
    }
    for (std::size_t j = n_; j-- > 0;) {
      // diagonal is the last entry of each U column
      const std::size_t last = u_ptr_[j + 1] - 1;
      y[j] /= u_vals_[last];
      const double yj = y[j];
      if (yj == 0.0) continue;
      for (std::size_t p = u_ptr_[j]; p < last; ++p) y[u_rows_[p]] -= u_vals_[p] * yj;
    }
    for (std::size_t k = 0; k < n_; ++k) x[perm_[k]] = y[k];
  }

  Vector solve(std::span<const double> b) const {
    Vector x(n_);
    apply(b, x);
    return x;
  }

 private:
  using Index = std::uint32_t;

  void compute_ordering(const CsrMatrix& a, Ordering ordering) {
    perm_.resize(n_);
    if (ordering == Ordering::natural || n_ == 0) {
      for (std::size_t k = 0; k < n_; ++k) perm_[k] = k;
      return;
    }
    std::vector<Eigen::Triplet<double, int>> t;
    t.reserve(a.nnz());
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t k = a.row_ptr()[i]; k < a.row_ptr()[i + 1]; ++k)
        t.emplace_back(static_cast<int>(i), static_cast<int>(a.col_idx()[k]), 1.0);
    Eigen::SparseMatrix<double, Eigen::ColMajor, int> pattern(static_cast<int>(n_), static_cast<int>(n_));
    pattern.setFromTriplets(t.begin(), t.end());
    Eigen::AMDOrdering<int>::PermutationType p;
    Eigen::AMDOrdering<int>()(pattern, p);
    for (std::size_t k = 0; k < n_; ++k) perm_[k] = static_cast<std::size_t>(p.indices()[static_cast<int>(k)]);
  }

  void factor(const CsrMatrix& a) {
    // Columns of B = P A P^T are rows of A^T permuted; build B in CSC form.
    std::vector<std::size_t> inv(n_);
    for (std::size_t k = 0; k < n_; ++k) inv[perm_[k]] = k;
    std::vector<std::size_t> bptr(n_ + 1, 0);
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t k = a.row_ptr()[i]; k < a.row_ptr()[i + 1]; ++k) ++bptr[inv[a.col_idx()[k]] + 1];
    for (std::size_t j = 0; j < n_; ++j) bptr[j + 1] += bptr[j];
    std::vector<Index> brow(a.nnz());
    Vector bval(a.nnz());
    {
      std::vector<std::size_t> next(bptr.begin(), bptr.end() - 1);
      for (std::size_t i = 0; i < n_; ++i) {
        for (std::size_t k = a.row_ptr()[i]; k < a.row_ptr()[i + 1]; ++k) {
          const std::size_t dst = next[inv[a.col_idx()[k]]]++;
          brow[dst] = static_cast<Index>(inv[i]);
          bval[dst] = a.values()[k];
        }
      }
    }

    l_ptr_.assign(n_ + 1, 0);
    u_ptr_.assign(n_ + 1, 0);
    l_rows_.reserve(4 * a.nnz());
    l_vals_.reserve(4 * a.nnz());
    u_rows_.reserve(4 * a.nnz());
    u_vals_.reserve(4 * a.nnz());

    Vector x(n_, 0.0);
    std::vector<std::size_t> mark(n_, n_);  // DFS visit stamp (column being factored)
    std::vector<Index> stack(n_), pstack(n_);
    std::vector<Index> reach(n_);

    for (std::size_t k = 0; k < n_; ++k) {
      // Nonzero pattern of x = L \ B(:,k), in topological order.
      std::size_t top = n_;
      for (std::size_t p = bptr[k]; p < bptr[k + 1]; ++p) {
        const Index start = brow[p];
        if (mark[start] == k) continue;
        std::size_t head = 0;
        stack[0] = start;
        while (true) {
          const Index j = stack[head];
          if (mark[j] != k) {
            mark[j] = k;
            pstack[head] = static_cast<Index>(j < k ? l_ptr_[j] : 0);
          }
          bool done = true;
          if (j < k) {
            const std::size_t end = l_ptr_[j + 1];
            for (std::size_t q = pstack[head]; q < end; ++q) {
              const Index i = l_rows_[q];
              if (mark[i] == k) continue;
              pstack[head] = static_cast<Index>(q + 1);
              stack[++head] = i;
              done = false;
              break;
            }
          }
          if (done) {
            reach[--top] = j;
            if (head == 0) break;
            --head;
          }
        }
      }
      for (std::size_t p = bptr[k]; p < bptr[k + 1]; ++p) x[brow[p]] = bval[p];
      for (std::size_t t = top; t < n_; ++t) {
        const Index j = reach[t];
        if (j >= k) continue;
        const double xj = x[j];
        for (std::size_t q = l_ptr_[j]; q < l_ptr_[j + 1]; ++q) x[l_rows_[q]] -= l_vals_[q] * xj;
      }
      double pivot = 0.0;
      for (std::size_t t = top; t < n_; ++t) {
        const Index i = reach[t];
        if (i < k) {
          u_rows_.push_back(i);
          u_vals_.push_back(x[i]);
        } else if (i == k) {
          pivot = x[i];
        }
      }
      if (pivot == 0.0 || !std::isfinite(pivot)) {
        throw PivotError("direct_factor: zero pivot, matrix is singular", perm_[k]);
      }
      u_rows_.push_back(static_cast<Index>(k));
      u_vals_.push_back(pivot);
      u_ptr_[k + 1] = u_rows_.size();
      for (std::size_t t = top; t < n_; ++t) {
        const Index i = reach[t];
        if (i > k) {
          l_rows_.push_back(i);
          l_vals_.push_back(x[i] / pivot);
        }
        x[i] = 0.0;
      }
      l_ptr_[k + 1] = l_rows_.size();
    }
  }

  std::size_t n_;
  std::vector<std::size_t> perm_;
  std::vector<std::size_t> l_ptr_, u_ptr_;
  std::vector<Index> l_rows_, u_rows_;
  std::vector<double> l_vals_, u_vals_;
};

inline DirectFactors direct_factor(const CsrMatrix& a, Ordering ordering = Ordering::amd) {
  return DirectFactors(a, ordering);
}

}  // namespace mltide
