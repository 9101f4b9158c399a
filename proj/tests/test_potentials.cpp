#include "qpbie/potentials.hpp"

#include <boost/math/special_functions/bessel.hpp>
#include <boost/math/special_functions/bessel_prime.hpp>
#include <gtest/gtest.h>

#include <algorithm>

#include <random>

using namespace qpbie;

namespace {

const Lattice kRef = Lattice::square2d(1.0, 1.0, 0.4, 0.7);

CVector smooth_density(const DiscreteCurve& c) {
  CVector mu(c.n);
  for (int j = 0; j < c.n; ++j) {
    const double t = c.t[j];
    mu[j] = Complex(std::cos(t) + 0.5 * std::sin(2 * t) + 0.2, 0.3 * std::cos(3 * t));
  }
  return mu;
}

struct JumpErrors {
  double double_layer = 0.0;
  double single_layer = 0.0;
};

// Off-boundary extrapolated traces against +-mu/2 + K mu and -+mu/2 + K* mu.
JumpErrors jump_errors(const BoundaryCurve& curve, int n, const GreenEvaluator& g) {
  const DiscreteCurve c = discretize(curve, n);
  const CVector mu = smooth_density(c);
  const OperatorSet ops = assemble_operators(c, g, false, true, true);
  const CVector km = ops.k * mu, ksm = ops.kadj * mu;
  JumpErrors e;
  for (int s = 0; s < 6; ++s) {
    const int i = s * n / 6 + 1;
    for (int side : {1, -1}) {
      const TraceLimit d = boundary_limit(PotentialKind::kDouble, c, mu, g, i, side);
      const TraceLimit sl = boundary_limit(PotentialKind::kSingle, c, mu, g, i, side);
      e.double_layer = std::max(e.double_layer, std::abs(d.value - (0.5 * side * mu[i] + km[i])));
      e.single_layer =
          std::max(e.single_layer, std::abs(sl.normal_derivative - (-0.5 * side * mu[i] + ksm[i])));
    }
  }
  return e;
}

}  // namespace

TEST(LogQuadrature, IntegratesLogKernelExactly) {
  // int_0^{2pi} log(4 sin^2((t - tau)/2)) cos(m tau) dtau = -2 pi cos(m t) / m
  const int n = 32;
  const LogQuadrature lq(n);
  for (int m : {1, 3, 7}) {
    for (double t : {0.0, 0.37, 2.0}) {
      double s = 0.0;
      for (int j = 0; j < n; ++j) s += lq.weight(t - kTwoPi * j / n) * std::cos(m * kTwoPi * j / n);
      EXPECT_NEAR(s, -kTwoPi * std::cos(m * t) / m, 1e-13);
    }
  }
  EXPECT_NEAR(lq.node_weight(3, 5), lq.weight(kTwoPi * (3 - 5) / n), 1e-14);
}

TEST(FreeSpace, LaplaceAdjointDoubleLayerOnCircle) {
  for (double rho : {0.3, 1.0, 2.5}) {
    const DiscreteCurve c = discretize(circle(rho, Vec2(0.1, -0.2)), 64);
    const OperatorSet ops = assemble_free_space(c, 0.0, true, true, true);
    const CVector ones = CVector::Ones(c.n);
    EXPECT_LE((ops.kadj * ones - 0.5 * ones).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LE((ops.k * ones - 0.5 * ones).cwiseAbs().maxCoeff(), 1e-12);
    // Laplace single layer of 1 on a circle: rho log(rho).
    EXPECT_LE((ops.v * ones - rho * std::log(rho) * ones).cwiseAbs().maxCoeff(), 1e-12);
  }
}

// On a circle of radius rho, e^{imt} is an eigenfunction of the free-space
// operators (Graf addition theorem). For the kernel -(i/4) H0(k r):
//   V: -(i pi rho / 2) J_m H_m,   K = K*: -1/2 - (i pi k rho / 2) J_m H_m'
// at argument k rho. S_2(., k) differs from -(i/4) H0 by c J0(k r) with
// c = (log(k/2) + gamma) / (2 pi) - i/4, which shifts V by -2 pi rho c J_m^2
// and K by -2 pi rho k c J_m J_m'.
Complex circle_eigenvalue(OperatorKind kind, int m, double k, double rho) {
  using boost::math::cyl_bessel_j;
  using boost::math::cyl_bessel_j_prime;
  using boost::math::cyl_neumann;
  using boost::math::cyl_neumann_prime;
  const double x = k * rho;
  const double j = cyl_bessel_j(m, x), jp = cyl_bessel_j_prime(m, x);
  const Complex h(j, cyl_neumann(m, x));
  const Complex hp(jp, cyl_neumann_prime(m, x));
  const Complex c = (std::log(k / 2.0) + kEulerGamma) / kTwoPi - 0.25 * kI;
  if (kind == OperatorKind::kSingle) return -kI * kPi * rho / 2.0 * j * h - kTwoPi * rho * c * j * j;
  return -0.5 - kI * kPi * x / 2.0 * j * hp - kTwoPi * x * c * j * jp;
}

TEST(FreeSpace, HelmholtzOperatorsOnCircleMatchBesselEigenvalues) {
  const double rho = 0.4, k = 2.1;
  const int n = 64;
  const DiscreteCurve c = discretize(circle(rho, Vec2(0.3, 0.1)), n);
  const OperatorSet ops = assemble_free_space(c, k, true, true, true);
  for (int m : {0, 1, 2, 5, 11}) {
    CVector mode(n);
    for (int j = 0; j < n; ++j) mode[j] = std::polar(1.0, m * c.t[j]);
    EXPECT_LE((ops.v * mode - circle_eigenvalue(OperatorKind::kSingle, m, k, rho) * mode).cwiseAbs().maxCoeff(),
              1e-12) << m;
    const Complex lk = circle_eigenvalue(OperatorKind::kDouble, m, k, rho);
    EXPECT_LE((ops.k * mode - lk * mode).cwiseAbs().maxCoeff(), 1e-12) << m;
    EXPECT_LE((ops.kadj * mode - lk * mode).cwiseAbs().maxCoeff(), 1e-12) << m;
  }
}

TEST(Potentials, JumpRelationsCircleAndKite) {
  const GreenEvaluator g(kRef, 1.3);
  for (const auto& curve : {circle(0.25, Vec2(0.5, 0.5)), kite(0.2, Vec2(0.5, 0.5))}) {
    const JumpErrors e = jump_errors(curve, 128, g);
    EXPECT_LE(e.double_layer, 1e-8) << to_string(curve.shape);
    EXPECT_LE(e.single_layer, 1e-8) << to_string(curve.shape);
  }
}

TEST(Potentials, SingleLayerIsContinuousAcrossBoundary) {
  const GreenEvaluator g(kRef, Complex(1.3, 0.2));
  const DiscreteCurve c = discretize(kite(0.2, Vec2(0.5, 0.5)), 128);
  const CVector mu = smooth_density(c);
  const CVector vm = assemble(OperatorKind::kSingle, c, g).matrix * mu;
  for (int i : {5, 40, 99}) {
    const Complex in = boundary_limit(PotentialKind::kSingle, c, mu, g, i, 1).value;
    const Complex out = boundary_limit(PotentialKind::kSingle, c, mu, g, i, -1).value;
    EXPECT_LE(std::abs(in - vm[i]), 1e-9);
    EXPECT_LE(std::abs(out - vm[i]), 1e-9);
  }
}

TEST(Potentials, NystromInterpolationBetweenNodes) {
  const GreenEvaluator g(kRef, 1.3);
  const DiscreteCurve c = discretize(circle(0.25, Vec2(0.5, 0.5)), 128);
  const DiscreteCurve fine = discretize(c.curve, 256);
  const CVector mu = smooth_density(c), mu_fine = smooth_density(fine);
  const OperatorSet ops = assemble_operators(fine, g, true, true, true);
  std::vector<double> params;
  for (int j = 1; j < 256; j += 37) params.push_back(fine.t[j]);  // odd: off the coarse nodes
  for (OperatorKind kind : {OperatorKind::kSingle, OperatorKind::kDouble, OperatorKind::kAdjointDouble}) {
    const CVector coarse = apply_at_parameters(kind, c, g, mu, params);
    const CMatrix& m = kind == OperatorKind::kSingle ? ops.v : (kind == OperatorKind::kDouble ? ops.k : ops.kadj);
    const CVector ref = m * mu_fine;
    for (std::size_t p = 0; p < params.size(); ++p) {
      EXPECT_LE(std::abs(coarse[static_cast<Eigen::Index>(p)] - ref[1 + 37 * static_cast<int>(p)]), 1e-11)
          << to_string(kind);
    }
  }
}

TEST(Potentials, SpectralConvergenceInN) {
  const GreenEvaluator g(kRef, 1.3);
  for (const auto& curve : {circle(0.25, Vec2(0.5, 0.5)), kite(0.2, Vec2(0.5, 0.5))}) {
    // Reference on a fine grid; coarse nodes are a subset.
    const DiscreteCurve ref_c = discretize(curve, 512);
    const CVector ref = assemble(OperatorKind::kDouble, ref_c, g).matrix * smooth_density(ref_c);
    std::vector<double> errs;
    for (int n : {32, 64}) {
      const DiscreteCurve c = discretize(curve, n);
      const CVector v = assemble(OperatorKind::kDouble, c, g).matrix * smooth_density(c);
      double e = 0.0;
      for (int j = 0; j < n; ++j) e = std::max(e, std::abs(v[j] - ref[j * (512 / n)]));
      errs.push_back(e);
    }
    EXPECT_LE(errs[1], std::max(1e-3 * errs[0], 1e-13)) << to_string(curve.shape) << " " << errs[0] << " " << errs[1];
  }
}

TEST(Potentials, DoubleLayerSingularValuesDecay) {
  const double rho = 0.25;
  for (double k : {0.5, 1.3, 2.9}) {
    // Free space: the circulant matrix is normal, so its singular values are
    // the moduli of the exact eigenvalues.
    const DiscreteCurve c = discretize(circle(rho, Vec2(0.5, 0.5)), 128);
    const Eigen::VectorXd s_free =
        Eigen::JacobiSVD<CMatrix>(assemble_free_space(c, k, false, true, false).k).singularValues();
    std::vector<double> exact;
    for (int m = -63; m <= 64; ++m) exact.push_back(std::abs(circle_eigenvalue(OperatorKind::kDouble, std::abs(m), k, rho)));
    std::sort(exact.rbegin(), exact.rend());
    for (int i = 0; i < 20; ++i) EXPECT_NEAR(s_free[i], exact[i], 1e-12) << k << " " << i;

    const GreenEvaluator g(kRef, k);
    const Eigen::VectorXd s = Eigen::JacobiSVD<CMatrix>(assemble(OperatorKind::kDouble, c, g).matrix).singularValues();
    EXPECT_LE(s[24] / s[0], 1e-3) << k;
    EXPECT_LE(s[60] / s[0], 1e-4) << k;
  }
}

TEST(Potentials, AssemblyIsDeterministicAcrossThreads) {
  const GreenEvaluator g(kRef, 1.3);
  const DiscreteCurve c = discretize(kite(0.2, Vec2(0.5, 0.5)), 64);
  set_thread_count(1);
  const OperatorSet a = assemble_operators(c, g, true, true, true);
  set_thread_count(4);
  const OperatorSet b = assemble_operators(c, g, true, true, true);
  set_thread_count(1);
  EXPECT_TRUE(a.v == b.v && a.k == b.k && a.kadj == b.kadj);
  EXPECT_TRUE(a.v.allFinite() && a.k.allFinite() && a.kadj.allFinite());
}

TEST(FieldEval, HelmholtzQuasiPeriodicAndLinear) {
  const GreenEvaluator g(kRef, 1.3);
  const DiscreteCurve c = discretize(circle(0.25, Vec2(0.5, 0.5)), 64);
  const CVector mu = smooth_density(c);
  for (PotentialKind kind : {PotentialKind::kSingle, PotentialKind::kDouble}) {
    const Vec2 x(0.1, 0.85);
    const double h = 1e-3;
    std::vector<Vec2> pts{x};
    for (int i = -2; i <= 2; ++i) {
      if (i == 0) continue;
      pts.push_back(x + Vec2(i * h, 0.0));
      pts.push_back(x + Vec2(0.0, i * h));
    }
    pts.push_back(x + Vec2(1.0, 0.0));
    pts.push_back(x + Vec2(-2.0, 3.0));
    const CVector u = field_eval(kind, c, mu, g, pts).values;
    // pts: 0 centre, then (-2h,x),(−2h,y),(−h,x),(−h,y),(h,x),(h,y),(2h,x),(2h,y)
    const Complex lap =
        (-u[1] + 16.0 * u[3] - 30.0 * u[0] + 16.0 * u[5] - u[7]) / (12 * h * h) +
        (-u[2] + 16.0 * u[4] - 30.0 * u[0] + 16.0 * u[6] - u[8]) / (12 * h * h);
    EXPECT_LE(std::abs(lap + 1.69 * u[0]), 1e-5);
    EXPECT_LE(std::abs(u[9] - std::polar(1.0, 0.4) * u[0]), 1e-9 * std::abs(u[0]));
    EXPECT_LE(std::abs(u[10] - std::polar(1.0, -0.8 + 2.1) * u[0]), 1e-9 * std::abs(u[0]));
    const CVector zero = field_eval(kind, c, CVector::Zero(c.n), g, pts).values;
    EXPECT_EQ(zero.cwiseAbs().maxCoeff(), 0.0);
  }
}

TEST(FieldEval, GuardFlagsPointsNearTheBoundary) {
  const GreenEvaluator g(kRef, 1.3);
  const DiscreteCurve c = discretize(circle(0.25, Vec2(0.5, 0.5)), 64);
  const FieldSample f = field_eval(PotentialKind::kSingle, c, smooth_density(c), g,
                                   {Vec2(0.5, 0.751), Vec2(0.1, 0.1)});
  EXPECT_TRUE(f.near_boundary[0]);
  EXPECT_FALSE(f.near_boundary[1]);
}

TEST(CellFlux, PlaneWaveCancelsExactly) {
  const FluxResult r = cell_flux_integral(kRef, [](const Vec2& x) {
    const Complex v = std::polar(1.0, 0.4 * x[0] + 0.7 * x[1]);
    return Field2{v, CVec2(kI * 0.4 * v, kI * 0.7 * v)};
  });
  EXPECT_LE(std::abs(r.flux), 1e-12);
  EXPECT_NEAR(r.norm_sq, 4.0, 1e-12);
}

TEST(CellFlux, LayerPotentialsHaveNoNetFlux) {
  const GreenEvaluator g(kRef, 1.3);
  const DiscreteCurve c = discretize(kite(0.2, Vec2(0.5, 0.5)), 128);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> nd;
  CVector mu(c.n);
  for (int j = 0; j < c.n; ++j) mu[j] = Complex(nd(rng), nd(rng));
  for (PotentialKind kind : {PotentialKind::kSingle, PotentialKind::kDouble}) {
    const CVector& dens = kind == PotentialKind::kSingle ? mu : smooth_density(c);
    const FluxResult r = cell_flux_integral(kRef, [&](const Vec2& x) {
      const FieldSample f = field_eval(kind, c, dens, g, {x}, {1, true});
      return Field2{f.values[0], f.gradients[0]};
    });
    EXPECT_LE(std::abs(r.flux), 1e-8 * r.norm_sq);
    EXPECT_GT(r.norm_sq, 1e-6);
  }
}
