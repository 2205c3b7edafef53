#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "mltide/precond.hpp"
#include "mltide/sparse/direct.hpp"
#include "mltide/system.hpp"
#include "test_util.hpp"

using namespace mltide;
using mltide::test::max_abs;
using mltide::test::random_vector;
using mltide::test::to_eigen;

namespace {

PhysicalParams params(double fr, double rossby_inv, double k) {
  PhysicalParams p;
  p.froude = fr;
  p.rossby_inv = rossby_inv;
  p.k = k;
  return p;
}

State random_state(const BlockSystem& sys, std::mt19937_64& rng) {
  return {random_vector(sys.velocity_size(), rng), random_vector(sys.elevation_size(), rng)};
}

}  // namespace

TEST(BlockSystem, SingleLayerDegenerates) {
  const Mesh m(3, 3);
  const double fr = 0.7, k = 0.05;
  const BlockSystem sys = assemble_block_system(m, LayerStack({1.0}), params(fr, 0.0, k));
  const auto s = assemble_single_layer(m, CellField::constant(m, 1.0), BoundaryCondition::normal_trace_zero);
  const Eigen::MatrixXd d = to_eigen(s.div);
  const auto nv = d.cols(), nc = d.rows();
  Eigen::MatrixXd ref(nv + nc, nv + nc);
  ref << to_eigen(s.mass_v), -fr * fr * k * d.transpose(), k * d, to_eigen(s.mass_w);
  EXPECT_LT((to_eigen(sys.matrix) - ref).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(BlockSystem, UndampedNonrotatingBlockIsSymmetric) {
  const BlockSystem sys = assemble_block_system(Mesh(3, 2), LayerStack::equispaced(3), params(1.0, 0.0, 0.1));
  const Eigen::MatrixXd a = to_eigen(sys.a11);
  EXPECT_EQ((a - a.transpose()).cwiseAbs().maxCoeff(), 0.0);
}

TEST(BlockSystem, CouplingBlockIsBlockwiseScaledTranspose) {
  const Mesh m(2, 2);
  const LayerStack stack({1.0, 1.3, 1.8});
  const double fr = 1.5, k = 0.2;
  const BlockSystem sys = assemble_block_system(m, stack, params(fr, 1.0, k));
  const Eigen::MatrixXd dt = to_eigen(sys.div1).transpose();
  const Eigen::MatrixXd a12 = to_eigen(sys.a12);
  const auto nv = dt.rows(), nc = dt.cols();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      const double aij = stack.density(static_cast<std::size_t>(std::min(i, j)));
      EXPECT_LT((a12.block(i * nv, j * nc, nv, nc) + fr * fr * k * aij * dt).cwiseAbs().maxCoeff(), 1e-15);
    }
}

TEST(BlockSystem, KroneckerPiecesMatchIndependentConstruction) {
  const Mesh m(3, 3);
  const LayerStack stack({1.0, 1.2, 1.5, 1.9});
  const BlockSystem sys = assemble_block_system(m, stack, params(1.0, 1.0, 0.1));
  const Eigen::MatrixXd e = to_eigen(sys.divdiv1);
  const Eigen::MatrixXd ea = to_eigen(sys.divdiv_coupled);
  const auto nv = e.rows();
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      EXPECT_LT((ea.block(i * nv, j * nv, nv, nv) - sys.coupling(i, j) * e).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(BlockSystem, BlockConsistency) {
  std::mt19937_64 rng(1);
  PhysicalParams p = params(1.2, 2.0, 0.08);
  p.damping = PhysicalParams::bottom_only(3, 0.4);
  const BlockSystem sys = assemble_block_system(Mesh(4, 4), LayerStack::equispaced(3), p);
  const State s = random_state(sys, rng);
  Vector y(sys.size());
  sys.apply(sys.pack(s), y);
  const Vector top = spmv(sys.a11, s.u), top2 = spmv(sys.a12, s.eta);
  const Vector bot = spmv(sys.a21, s.u), bot2 = spmv(sys.a22, s.eta);
  for (std::size_t i = 0; i < top.size(); ++i) EXPECT_NEAR(y[i], top[i] + top2[i], 1e-13);
  for (std::size_t i = 0; i < bot.size(); ++i) EXPECT_NEAR(y[top.size() + i], bot[i] + bot2[i], 1e-13);
}

TEST(BlockSystem, MassIsSpdAndPerpIsSkew) {
  std::mt19937_64 rng(2);
  const BlockSystem sys = assemble_block_system(Mesh(3, 3), LayerStack::equispaced(3), params(1.0, 1.0, 0.1));
  const Eigen::MatrixXd mv = to_eigen(sys.mass_v);
  EXPECT_GT(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(mv).eigenvalues().minCoeff(), 0.0);
  const Vector u = random_vector(sys.velocity_size(), rng);
  EXPECT_LT(std::abs(sys.params.rossby_inv * sys.params.k * quadratic_form(sys.perp_mass_v, u, u)), 1e-13 * dot(u, u));
}

TEST(BlockSystem, RejectsBadParameters) {
  const Mesh m(2, 2);
  const LayerStack s = LayerStack::equispaced(2);
  EXPECT_THROW(assemble_block_system(m, s, params(0.0, 1.0, 0.1)), std::invalid_argument);
  EXPECT_THROW(assemble_block_system(m, s, params(1.0, 1.0, -0.1)), std::invalid_argument);
  PhysicalParams p = params(1.0, 1.0, 0.1);
  p.damping = {0.1};
  EXPECT_THROW(assemble_block_system(m, s, p), std::invalid_argument);
  p.damping = {0.1, -0.1};
  EXPECT_THROW(assemble_block_system(m, s, p), std::invalid_argument);
}

TEST(Energy, Examples) {
  const Mesh m(4, 4);
  const BlockSystem one = assemble_block_system(m, LayerStack({1.0}), params(1.7, 1.0, 0.1));
  EXPECT_EQ(energy(one.zero_state(), one), 0.0);
  State s = one.zero_state();
  std::fill(s.eta.begin(), s.eta.end(), 1.0);
  EXPECT_NEAR(energy(s, one), 1.7 * 1.7 / 2.0, 1e-14);

  std::mt19937_64 rng(3);
  const BlockSystem sys = assemble_block_system(m, LayerStack::equispaced(4), params(1.0, 1.0, 0.1));
  for (int t = 0; t < 10; ++t) EXPECT_GT(energy(random_state(sys, rng), sys), 0.0);
}

TEST(Energy, MatchesAssembledQuadraticForm) {
  std::mt19937_64 rng(4);
  const Mesh m(3, 3);
  const double fr = 0.8;
  const BlockSystem sys = assemble_block_system(m, LayerStack({1.0, 1.1, 1.6}), params(fr, 1.0, 0.1));
  const State s = random_state(sys, rng);
  const CsrMatrix aw = kron_lift(sys.coupling, sys.mass_w1);
  const double ref = 0.5 * quadratic_form(sys.mass_v, s.u, s.u) + 0.5 * fr * fr * quadratic_form(aw, s.eta, s.eta);
  EXPECT_NEAR(energy(s, sys), ref, 1e-13 * ref);
}

TEST(InitialDisturbance, CentroidGaussian) {
  const Mesh m(8, 8);
  const LayerStack stack = LayerStack::equispaced(3);
  const State s = initial_disturbance(m, stack, 0.01, 0.1);
  for (double v : s.u) EXPECT_EQ(v, 0.0);
  const std::size_t nc = m.num_cells();
  for (std::size_t i = nc; i < s.eta.size(); ++i) EXPECT_EQ(s.eta[i], 0.0);
  // The closest centroids to (1/2, 1/2) sit at offsets (+-1/24, -+1/24).
  double top = 0.0;
  for (std::size_t c = 0; c < nc; ++c) top = std::max(top, s.eta[c]);
  EXPECT_NEAR(top, 0.01 * std::exp(-(2.0 / 576.0) / 0.01), 1e-15);
  EXPECT_THROW(initial_disturbance(m, stack, 0.0, 0.1), std::invalid_argument);
  EXPECT_THROW(initial_disturbance(m, stack, 0.01, 0.0), std::invalid_argument);
}

TEST(InitialDisturbance, EnergyScalesQuadratically) {
  const Mesh m(8, 8);
  const LayerStack stack = LayerStack::equispaced(5);
  const BlockSystem sys = assemble_block_system(m, stack, params(1.0, 1.0, 0.0625));
  const double e1 = energy(initial_disturbance(m, stack, 0.01, 0.1), sys);
  const double e2 = energy(initial_disturbance(m, stack, 0.02, 0.1), sys);
  EXPECT_GT(e1, 0.0);
  EXPECT_NEAR(e2 / e1, 4.0, 1e-12);
}

TEST(MidpointStep, ZeroStateStaysZero) {
  const BlockSystem sys = assemble_block_system(Mesh(4, 4), LayerStack::equispaced(3), params(1.0, 1.0, 0.1));
  const Preconditioner pc = build_preconditioner(sys, PcVariant::weighted_norm, InnerSolver::exact_direct);
  const StepResult r = midpoint_step(sys, sys.zero_state(), 0.2, pc);
  EXPECT_LE(r.report.iterations, 1u);
  EXPECT_EQ(max_abs(r.state.u), 0.0);
  EXPECT_EQ(max_abs(r.state.eta), 0.0);
}

TEST(MidpointStep, MatchesDirectSolveOfMidpointUnknowns) {
  // Second route: solve A x^{n+1/2} = [M^V u + k F; M^W eta] directly, then extrapolate.
  std::mt19937_64 rng(5);
  PhysicalParams p = params(1.3, 2.0, 0.05);
  p.damping = PhysicalParams::bottom_only(3, 0.3);
  const BlockSystem sys = assemble_block_system(Mesh(5, 5), LayerStack({1.0, 1.2, 1.5}), p);
  const State s = random_state(sys, rng);
  const Vector load = random_vector(sys.velocity_size(), rng);
  const Forcing forcing = [&](double) { return load; };

  Vector rhs = spmv(sys.mass_v, s.u);
  axpy(p.k, load, rhs);
  const Vector w = spmv(sys.a22, s.eta);
  rhs.insert(rhs.end(), w.begin(), w.end());
  const Vector half = direct_factor(sys.matrix).solve(rhs);
  const Vector x0 = sys.pack(s);

  const Preconditioner pc = build_preconditioner(sys, PcVariant::weighted_norm, InnerSolver::exact_direct);
  GmresOptions opts;
  opts.rtol = 1e-13;
  const Vector next = sys.pack(midpoint_step(sys, s, 2.0 * p.k, pc, opts, forcing).state);
  double err = 0.0;
  for (std::size_t i = 0; i < next.size(); ++i) err = std::max(err, std::abs(next[i] - (2.0 * half[i] - x0[i])));
  EXPECT_LT(err, 1e-10 * max_abs(x0));
}

TEST(MidpointStep, ForcingIsSampledAtMidpoint) {
  const BlockSystem sys = assemble_block_system(Mesh(3, 3), LayerStack::equispaced(2), params(1.0, 1.0, 0.1));
  const Preconditioner pc = build_preconditioner(sys, PcVariant::weighted_norm, InnerSolver::exact_direct);
  double seen = -1.0;
  const Forcing f = [&](double t) {
    seen = t;
    return Vector(sys.velocity_size(), 0.0);
  };
  midpoint_step(sys, sys.zero_state(), 0.2, pc, {}, f, 1.0);
  EXPECT_DOUBLE_EQ(seen, 1.1);
  const Forcing bad = [](double) { return Vector(1, 0.0); };
  EXPECT_THROW(midpoint_step(sys, sys.zero_state(), 0.2, pc, {}, bad), DimensionError);
}

TEST(MidpointStep, ConservesEnergyWithoutDamping) {
  const Mesh m(8, 8);
  const LayerStack stack = LayerStack::equispaced(3);
  const BlockSystem sys = assemble_block_system(m, stack, params(1.0, 1.0, 1.0 / 16.0));
  const Preconditioner pc = build_preconditioner(sys, PcVariant::weighted_norm, InnerSolver::exact_direct);
  GmresOptions opts;
  opts.rtol = 1e-12;
  State s = initial_disturbance(m, stack, 0.01, 0.1);
  const double e0 = energy(s, sys);
  for (int step = 0; step < 10; ++step) {
    s = midpoint_step(sys, s, 0.125, pc, opts).state;
    EXPECT_NEAR(energy(s, sys), e0, 1e-10 * e0);
  }
}

TEST(MidpointStep, DampingStrictlyDissipates) {
  const Mesh m(6, 6);
  const LayerStack stack = LayerStack::equispaced(3);
  for (std::size_t layer = 0; layer < 3; ++layer) {
    PhysicalParams p = params(1.0, 1.0, 0.05);
    p.damping.assign(3, 0.0);
    p.damping[layer] = 0.5;
    const BlockSystem sys = assemble_block_system(m, stack, p);
    const Preconditioner pc = build_preconditioner(sys, PcVariant::weighted_norm, InnerSolver::exact_direct);
    GmresOptions opts;
    opts.rtol = 1e-12;
    State s = initial_disturbance(m, stack, 0.01, 0.1);
    // let the bump start moving so every layer carries velocity
    double prev = energy(s, sys);
    for (int step = 0; step < 5; ++step) {
      s = midpoint_step(sys, s, 0.1, pc, opts).state;
      const double e = energy(s, sys);
      EXPECT_LT(e, prev) << "damped layer " << layer << ", step " << step;
      prev = e;
    }
  }
}

TEST(MidpointStep, RejectsMismatchedTimeStep) {
  const BlockSystem sys = assemble_block_system(Mesh(2, 2), LayerStack::equispaced(2), params(1.0, 1.0, 0.1));
  const IdentityOperator id{sys.size()};
  EXPECT_THROW(midpoint_step(sys, sys.zero_state(), 0.3, id), std::invalid_argument);
  EXPECT_THROW(midpoint_step(sys, sys.zero_state(), -0.2, id), std::invalid_argument);
  State bad = sys.zero_state();
  bad.u.pop_back();
  EXPECT_THROW(midpoint_step(sys, bad, 0.2, id), DimensionError);
}

TEST(MidpointStep, NonConvergenceCarriesReport) {
  const Mesh m(6, 6);
  const LayerStack stack = LayerStack::equispaced(3);
  const BlockSystem sys = assemble_block_system(m, stack, params(1.0, 1.0, 0.1));
  GmresOptions opts;
  opts.max_iterations = 2;
  try {
    midpoint_step(sys, initial_disturbance(m, stack, 0.01, 0.1), 0.2, IdentityOperator{sys.size()}, opts);
    FAIL() << "expected StepError";
  } catch (const StepError& e) {
    EXPECT_EQ(e.report().iterations, 2u);
    EXPECT_FALSE(e.report().converged);
  }
}
