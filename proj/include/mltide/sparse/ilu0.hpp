#pragma once

// Zero-fill incomplete LU factorization in the natural ordering of the input.

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "mltide/sparse/csr.hpp"

namespace mltide {

/// Combined L\U factor on the pattern of the factored matrix; L has an
/// implied unit diagonal.
class Ilu0Factors {
 public:
  explicit Ilu0Factors(const CsrMatrix& a) : lu_(a), diag_(a.rows()) {
    if (!a.square()) throw DimensionError("ilu0: matrix must be square");
    factor();
  }

  std::size_t size() const { return lu_.rows(); }
  const CsrMatrix& combined() const { return lu_; }

  /// x = (LU)^{-1} b.
  void apply(std::span<const double> b, std::span<double> x) const {
    const std::size_t n = lu_.rows();
    if (b.size() != n || x.size() != n) throw DimensionError("ilu0: vector length mismatch");
    const auto& rp = lu_.row_ptr();
    const auto& ci = lu_.col_idx();
    const auto& v = lu_.values();
    for (std::size_t i = 0; i < n; ++i) {
      double s = b[i];
      for (std::size_t k = rp[i]; k < diag_[i]; ++k) s -= v[k] * x[ci[k]];
      x[i] = s;
    }
    for (std::size_t i = n; i-- > 0;) {
      double s = x[i];
      for (std::size_t k = diag_[i] + 1; k < rp[i + 1]; ++k) s -= v[k] * x[ci[k]];
      x[i] = s / v[diag_[i]];
    }
  }

  Vector solve(std::span<const double> b) const {
    Vector x(b.size());
    apply(b, x);
    return x;
  }

 private:
  void factor() {
    const std::size_t n = lu_.rows();
    const auto& rp = lu_.row_ptr();
    const auto& ci = lu_.col_idx();
    auto& v = lu_.values();
    constexpr std::size_t none = std::numeric_limits<std::size_t>::max();
    std::vector<std::size_t> pos(n, none);

    for (std::size_t i = 0; i < n; ++i) {
      diag_[i] = lu_.find(i, i);
      if (diag_[i] == lu_.nnz()) throw PivotError("ilu0: structurally missing diagonal", i);
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = rp[i]; k < rp[i + 1]; ++k) pos[ci[k]] = k;
      for (std::size_t kk = rp[i]; kk < diag_[i]; ++kk) {
        const std::size_t k = ci[kk];
        v[kk] /= v[diag_[k]];
        const double lik = v[kk];
        for (std::size_t jj = diag_[k] + 1; jj < rp[k + 1]; ++jj) {
          const std::size_t p = pos[ci[jj]];
          if (p != none) v[p] -= lik * v[jj];
        }
      }
      for (std::size_t k = rp[i]; k < rp[i + 1]; ++k) pos[ci[k]] = none;
      const double piv = v[diag_[i]];
      if (piv == 0.0 || !std::isfinite(piv)) throw PivotError("ilu0: zero pivot", i);
    }
  }

  CsrMatrix lu_;
  std::vector<std::size_t> diag_;
};

inline Ilu0Factors ilu0_factor(const CsrMatrix& a) { return Ilu0Factors(a); }

}  // namespace mltide
