#pragma once

// Block preconditioners for the multilayer system, applied as fixed linear
// operators P^{-1} so plain right-preconditioned GMRES stays valid.
//
//   full_ilu0           ILU(0) of the whole block matrix, natural ordering
//   weighted_norm       diag(C, I (x) M^W),  C = M^V + Fr^2 k^2 (A (x) E)
//   layer_decoupled     diag(Chat, I (x) M^W), Chat = M^V + Fr^2 k^2 (I (x) E)
//   tridiagonal_reform  C^{-1} through the layer change of variables
//                       x = (L (x) I) xt with A^{-1} = L Dg L^T, whose
//                       transformed matrix couples only adjacent layers

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "mltide/errors.hpp"
#include "mltide/layers.hpp"
#include "mltide/sparse/csr.hpp"
#include "mltide/sparse/direct.hpp"
#include "mltide/sparse/ilu0.hpp"
#include "mltide/system.hpp"

namespace mltide {

enum class PcVariant { full_ilu0, weighted_norm, layer_decoupled, tridiagonal_reform };
enum class InnerSolver { exact_direct, ilu0 };

inline const char* to_string(PcVariant v) {
  switch (v) {
    case PcVariant::full_ilu0: return "full_ilu0";
    case PcVariant::weighted_norm: return "weighted_norm";
    case PcVariant::layer_decoupled: return "layer_decoupled";
    case PcVariant::tridiagonal_reform: return "tridiagonal_reform";
  }
  return "?";
}

inline const char* to_string(InnerSolver s) { return s == InnerSolver::exact_direct ? "exact_direct" : "ilu0"; }

/// C = M^V + Fr^2 k^2 (A (x) E).
inline CsrMatrix weighted_norm_block(const BlockSystem& sys) {
  const double s = sys.params.froude * sys.params.froude * sys.params.k * sys.params.k;
  return linear_combination({{1.0, &sys.mass_v}, {s, &sys.divdiv_coupled}});
}

/// Layer blocks of Chat = M^V + Fr^2 k^2 (I (x) E).
inline std::vector<CsrMatrix> layer_decoupled_blocks(const BlockSystem& sys) {
  const double s = sys.params.froude * sys.params.froude * sys.params.k * sys.params.k;
  std::vector<CsrMatrix> out;
  out.reserve(sys.n_layers());
  for (const auto& m : sys.layer_mass) out.push_back(linear_combination({{1.0, &m}, {s, &sys.divdiv1}}));
  return out;
}

inline CsrMatrix layer_decoupled_block(const BlockSystem& sys) { return block_diagonal(layer_decoupled_blocks(sys)); }

/// Ct = (L^T (x) I) M^V (L (x) I) + Fr^2 k^2 (Dg^{-1} (x) E), block tridiagonal
/// over layers: diagonal M_i + l_i^2 M_{i+1} + s/d_i E, off-diagonal l_i M_{i+1}.
inline CsrMatrix tridiagonal_reform_block(const BlockSystem& sys, const LdlFactors& ldl) {
  const std::size_t n = sys.n_layers();
  const std::size_t nv = sys.layer_velocity_size();
  const double s = sys.params.froude * sys.params.froude * sys.params.k * sys.params.k;
  std::vector<Triplet> t;
  auto add = [&](std::size_t bi, std::size_t bj, double c, const CsrMatrix& m) {
    if (c == 0.0) return;
    for (std::size_t r = 0; r < nv; ++r)
      for (std::size_t p = m.row_ptr()[r]; p < m.row_ptr()[r + 1]; ++p)
        t.push_back({bi * nv + r, bj * nv + m.col_idx()[p], c * m.values()[p]});
  };
  for (std::size_t i = 0; i < n; ++i) {
    add(i, i, 1.0, sys.layer_mass[i]);
    add(i, i, s / ldl.diag[i], sys.divdiv1);
    if (i + 1 < n) {
      const double l = ldl.sub[i];
      add(i, i, l * l, sys.layer_mass[i + 1]);
      add(i, i + 1, l, sys.layer_mass[i + 1]);
      add(i + 1, i, l, sys.layer_mass[i + 1]);
    }
  }
  return CsrMatrix::from_triplets(n * nv, n * nv, std::move(t));
}

/// Exact (sparse LU) or incomplete (ILU(0)) inverse of one matrix.
class InnerInverse {
 public:
  InnerInverse(const CsrMatrix& a, InnerSolver kind) : f_(make(a, kind)) {}

  std::size_t size() const {
    return std::visit([](const auto& f) { return f.size(); }, f_);
  }
  void apply(std::span<const double> b, std::span<double> x) const {
    std::visit([&](const auto& f) { f.apply(b, x); }, f_);
  }

 private:
  static std::variant<DirectFactors, Ilu0Factors> make(const CsrMatrix& a, InnerSolver kind) {
    if (kind == InnerSolver::exact_direct) return DirectFactors(a);
    return Ilu0Factors(a);
  }
  std::variant<DirectFactors, Ilu0Factors> f_;
};

class Preconditioner {
 public:
  PcVariant variant() const { return variant_; }
  InnerSolver inner() const { return inner_; }
  std::size_t size() const { return nu_ + nw_; }

  /// z = P^{-1} r.
  void apply(std::span<const double> r, std::span<double> z) const {
    if (r.size() != size() || z.size() != size()) throw DimensionError("preconditioner: vector length mismatch");
    if (variant_ == PcVariant::full_ilu0) {
      blocks_.front().apply(r, z);
      return;
    }
    apply_velocity(r.first(nu_), z.first(nu_));
    for (std::size_t i = 0; i < nw_; ++i) z[nu_ + i] = r[nu_ + i] * inv_mass_w_[i];
  }

  /// Inverse of the velocity block alone (C, Chat, or C through the
  /// tridiagonal reformulation). Not available for full_ilu0.
  void apply_velocity(std::span<const double> r, std::span<double> z) const {
    if (r.size() != nu_ || z.size() != nu_) throw DimensionError("preconditioner: velocity length mismatch");
    switch (variant_) {
      case PcVariant::full_ilu0:
        throw std::logic_error("preconditioner: full_ilu0 has no separate velocity block");
      case PcVariant::weighted_norm:
        blocks_.front().apply(r, z);
        return;
      case PcVariant::layer_decoupled:
        for (std::size_t i = 0; i < blocks_.size(); ++i)
          blocks_[i].apply(r.subspan(i * nv_, nv_), z.subspan(i * nv_, nv_));
        return;
      case PcVariant::tridiagonal_reform: {
        // bt = (L^T (x) I) r: bt_i = r_i + l_i r_{i+1}
        const std::size_t n = ldl_.size();
        Vector bt(r.begin(), r.end()), xt(nu_);
        for (std::size_t i = 0; i + 1 < n; ++i)
          for (std::size_t d = 0; d < nv_; ++d) bt[i * nv_ + d] += ldl_.sub[i] * r[(i + 1) * nv_ + d];
        blocks_.front().apply(bt, xt);
        // z = (L (x) I) xt: z_i = xt_i + l_{i-1} xt_{i-1}
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t d = 0; d < nv_; ++d)
            z[i * nv_ + d] = xt[i * nv_ + d] + (i > 0 ? ldl_.sub[i - 1] * xt[(i - 1) * nv_ + d] : 0.0);
        return;
      }
    }
  }

  friend Preconditioner build_preconditioner(const BlockSystem& sys, PcVariant variant, InnerSolver inner);

 private:
  Preconditioner() = default;

  PcVariant variant_ = PcVariant::weighted_norm;
  InnerSolver inner_ = InnerSolver::exact_direct;
  std::size_t nu_ = 0, nw_ = 0, nv_ = 0;
  std::vector<InnerInverse> blocks_;
  Vector inv_mass_w_;
  LdlFactors ldl_;
};

/// Factor the pieces of the chosen preconditioner. For full_ilu0 the inner
/// solver is ignored.
inline Preconditioner build_preconditioner(const BlockSystem& sys, PcVariant variant, InnerSolver inner) {
  Preconditioner pc;
  pc.variant_ = variant;
  pc.inner_ = inner;
  pc.nu_ = sys.velocity_size();
  pc.nw_ = sys.elevation_size();
  pc.nv_ = sys.layer_velocity_size();
  const Vector mw = sys.a22.diagonal_values();
  pc.inv_mass_w_.resize(mw.size());
  for (std::size_t i = 0; i < mw.size(); ++i) pc.inv_mass_w_[i] = 1.0 / mw[i];

  try {
    switch (variant) {
      case PcVariant::full_ilu0:
        pc.blocks_.emplace_back(sys.matrix, InnerSolver::ilu0);
        break;
      case PcVariant::weighted_norm:
        pc.blocks_.emplace_back(weighted_norm_block(sys), inner);
        break;
      case PcVariant::layer_decoupled:
        for (const auto& b : layer_decoupled_blocks(sys)) pc.blocks_.emplace_back(b, inner);
        break;
      case PcVariant::tridiagonal_reform:
        pc.ldl_ = ldlt(coupling_inverse(sys.stack));
        pc.blocks_.emplace_back(tridiagonal_reform_block(sys, pc.ldl_), inner);
        break;
    }
  } catch (const PivotError& e) {
    throw PivotError(std::string(to_string(variant)) + " preconditioner (" + to_string(inner) + "): " + e.message(),
                     e.index());
  }
  return pc;
}

}  // namespace mltide
