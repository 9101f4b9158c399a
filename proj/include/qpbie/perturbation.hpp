#pragma once

// Operators for the shrinking hole p + eps * Omega, rewritten on the fixed
// reference curve. With t, s on the reference curve and G = S_2(., k) + R:
//   M1: S_2(t - s, eps k)          M2: R(eps (t - s))     M3: T(eps (t - s))
//   N_i: nu(t) . grad of the same kernels,  P_i: -nu(s) . grad
// where T(x) = J_2(k|x|) carries the log(eps) part of
// S_2(eps x, k) = S_2(x, eps k) + log(eps) T(eps x). Index 2 and 3 gradients
// are the kernel gradients evaluated at eps (t - s). Then for densities theta
// on the reference curve and theta((. - p)/eps) on the physical one:
//   V_phys  = eps (M1 + M2 + log(eps) M3)
//   K*_phys = N1 + eps N2 + eps log(eps) N3
//   K_phys  = P1 + eps P2 + eps log(eps) P3
//   S_phys(x) = eps M[eps](x),  D_phys(x) = eps P[eps](x) away from the hole.

#include "qpbie/potentials.hpp"

#include <array>
#include <string>
#include <vector>

namespace qpbie {

enum class Family { kM, kN, kP };

inline const char* to_string(Family f) {
  switch (f) {
    case Family::kM: return "M";
    case Family::kN: return "N";
    case Family::kP: return "P";
  }
  return "?";
}

struct RescaledFamily {
  Family family = Family::kM;
  int index = 1;
  double eps = 0.0;
  CMatrix matrix;
};

/// All nine rescaled matrices at one eps: m[i], n[i], p[i] hold index i + 1.
struct RescaledOperators {
  double eps = 0.0;
  std::array<CMatrix, 3> m, n, p;

  const CMatrix& get(Family f, int index) const {
    const auto i = static_cast<std::size_t>(index - 1);
    return f == Family::kM ? m[i] : (f == Family::kN ? n[i] : p[i]);
  }
};

/// Reference curve, hole centre and lattice data shared by the rescaled
/// assemblies.
struct HoleGeometry {
  DiscreteCurve reference;
  Vec2 p = Vec2(0.5, 0.5);

  double epsilon0(const Lattice& lat) const { return HoleConfig{p, 0.0, reference.curve}.epsilon0(lat); }
  /// Radius on which the leading-term splits are used (half of eps0).
  double validated_radius(const Lattice& lat) const { return 0.5 * epsilon0(lat); }

  /// Physical curve p + eps * reference, discretized on the same parameter nodes.
  DiscreteCurve physical(double eps, const Lattice& lat) const {
    return discretize(HoleConfig{p, eps, reference.curve}.rescaled(lat), reference.n);
  }
};

namespace detail {

inline void require_eps(double eps, const HoleGeometry& h, const Lattice& lat) {
  if (!(std::abs(eps) < h.epsilon0(lat))) throw Error(ErrorCode::kOutOfRange, "|eps| must be below eps0");
}

// Trapezoid-rule matrices of a smooth kernel: v (value), kadj (nu(t) . grad),
// k (-nu(s) . grad).
template <class Kernel>
OperatorSet assemble_smooth(const DiscreteCurve& c, Kernel&& kernel) {
  const int n = c.n;
  OperatorSet out{CMatrix(n, n), CMatrix(n, n), CMatrix(n, n)};
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t i) {
    RowSet rows(n, true, true, true);
    add_smooth_row(c, node_target(c, static_cast<int>(i)), kernel, rows);
    out.v.row(i) = rows.v;
    out.k.row(i) = rows.k;
    out.kadj.row(i) = rows.kadj;
  });
  return out;
}

inline Field2 analytic_correction2(const Vec2& x, Complex k) {
  const specfun::Radial2 c = specfun::radial2(x.norm(), k);
  const Complex radial = k * k * c.j_slope;
  return {c.j, CVec2(radial * x[0], radial * x[1])};
}

}  // namespace detail

/// The nine rescaled matrices at eps (any sign, |eps| < eps0).
inline RescaledOperators rescaled_operators(double eps, const HoleGeometry& h, const GreenEvaluator& g) {
  detail::require_eps(eps, h, g.lattice());
  const DiscreteCurve& c = h.reference;
  const Complex k = g.k();
  RescaledOperators out;
  out.eps = eps;
  OperatorSet s1 = assemble_free_space(c, eps * k, true, true, true);
  OperatorSet s2 = detail::assemble_smooth(c, [&](const Vec2& d) { return g.regular_part(eps * d); });
  OperatorSet s3 = detail::assemble_smooth(c, [&](const Vec2& d) { return detail::analytic_correction2(eps * d, k); });
  out.m = {std::move(s1.v), std::move(s2.v), std::move(s3.v)};
  out.n = {std::move(s1.kadj), std::move(s2.kadj), std::move(s3.kadj)};
  out.p = {std::move(s1.k), std::move(s2.k), std::move(s3.k)};
  return out;
}

inline RescaledFamily rescaled_operator(Family family, int index, double eps, const HoleGeometry& h,
                                        const GreenEvaluator& g) {
  if (index < 1 || index > 3) throw Error(ErrorCode::kDomain, "family index must be 1, 2 or 3");
  return {family, index, eps, rescaled_operators(eps, h, g).get(family, index)};
}

/// Index-1 family split as Laplace leading matrix + eps * remainder. The
/// remainder is the divided difference (X1[eps] - X1[0]) / eps, with limit 0
/// at eps = 0 (the index-1 kernels depend on eps only through (eps k)^2).
struct LeadingSplit {
  CMatrix leading;
  CMatrix remainder;
};

inline LeadingSplit leading_split(Family family, double eps, const HoleGeometry& h, const GreenEvaluator& g) {
  if (!(std::abs(eps) <= h.validated_radius(g.lattice()))) {
    throw Error(ErrorCode::kOutOfRange, "eps outside the validated radius");
  }
  const DiscreteCurve& c = h.reference;
  const auto pick = [family](OperatorSet& s) -> CMatrix& {
    return family == Family::kM ? s.v : (family == Family::kN ? s.kadj : s.k);
  };
  const bool v = family == Family::kM, ka = family == Family::kN, kd = family == Family::kP;
  OperatorSet lap = assemble_free_space(c, 0.0, v, kd, ka);
  LeadingSplit out{std::move(pick(lap)), CMatrix::Zero(c.n, c.n)};
  if (eps != 0.0) {
    OperatorSet s = assemble_free_space(c, eps * g.k(), v, kd, ka);
    out.remainder = (pick(s) - out.leading) / eps;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Rescaling identities: direct assembly on the physical curve against the
// eps-weighted combination on the reference curve.

enum class IdentityKind { kSingleTrace, kAdjoint, kDoubleBoundary, kFarSingle, kFarDouble };

inline const char* to_string(IdentityKind k) {
  switch (k) {
    case IdentityKind::kSingleTrace: return "single-trace";
    case IdentityKind::kAdjoint: return "adjoint";
    case IdentityKind::kDoubleBoundary: return "double-boundary";
    case IdentityKind::kFarSingle: return "far-single";
    case IdentityKind::kFarDouble: return "far-double";
  }
  return "?";
}

inline IdentityKind identity_kind_from_string(const std::string& s) {
  for (IdentityKind k : {IdentityKind::kSingleTrace, IdentityKind::kAdjoint, IdentityKind::kDoubleBoundary,
                         IdentityKind::kFarSingle, IdentityKind::kFarDouble}) {
    if (s == to_string(k)) return k;
  }
  throw Error(ErrorCode::kConfig, "unknown identity kind '" + s + "'");
}

/// Far-field maps M[eps](theta)(x) = int G(x - p - eps s) theta(s) dsigma_s
/// and P[eps](theta)(x) = -int nu(s) . grad G(x - p - eps s) theta(s) dsigma_s.
inline CVector far_field_map(Family family, double eps, const HoleGeometry& h, const GreenEvaluator& g,
                             const CVector& theta, const std::vector<Vec2>& probes) {
  if (family == Family::kN) throw Error(ErrorCode::kDomain, "far-field maps exist for M and P only");
  const DiscreteCurve& c = h.reference;
  CVector out(static_cast<Eigen::Index>(probes.size()));
  parallel_for(probes.size(), [&](std::size_t i) {
    Complex sum = 0.0;
    for (int j = 0; j < c.n; ++j) {
      const Field2 f = g.eval(probes[i] - h.p - eps * c.points[j]);
      const Complex kern = family == Family::kM
                               ? f.value
                               : -(c.normals[j][0] * f.gradient[0] + c.normals[j][1] * f.gradient[1]);
      sum += c.weights[j] * kern * theta[j];
    }
    out[static_cast<Eigen::Index>(i)] = sum;
  });
  return out;
}

struct IdentityOptions {
  bool drop_log_term = false;  // omit the index-3 (eps log eps) contribution
};

/// sup over nodes (boundary kinds) or probes (far kinds) of |direct - rescaled|,
/// for 0 < eps < eps0.
inline double rescaling_identity_residual(IdentityKind kind, double eps, const HoleGeometry& h,
                                          const GreenEvaluator& g, const CVector& theta,
                                          const std::vector<Vec2>& probes = {}, IdentityOptions opt = {}) {
  if (!(eps > 0.0)) throw Error(ErrorCode::kOutOfRange, "identity check needs eps > 0");
  const Lattice& lat = g.lattice();
  const DiscreteCurve phys = h.physical(eps, lat);
  if (theta.size() != phys.n) throw Error(ErrorCode::kDomain, "density length does not match curve");
  const double le = opt.drop_log_term ? 0.0 : std::log(eps);

  if (kind == IdentityKind::kFarSingle || kind == IdentityKind::kFarDouble) {
    const bool single = kind == IdentityKind::kFarSingle;
    const CVector direct =
        field_eval(single ? PotentialKind::kSingle : PotentialKind::kDouble, phys, theta, g, probes).values;
    const CVector rescaled = eps * far_field_map(single ? Family::kM : Family::kP, eps, h, g, theta, probes);
    return (direct - rescaled).cwiseAbs().maxCoeff();
  }

  const RescaledOperators r = rescaled_operators(eps, h, g);
  CVector direct, rescaled;
  switch (kind) {
    case IdentityKind::kSingleTrace:
      direct = assemble(OperatorKind::kSingle, phys, g).matrix * theta;
      rescaled = eps * (r.m[0] * theta + r.m[1] * theta + le * (r.m[2] * theta));
      break;
    case IdentityKind::kAdjoint:
      direct = assemble(OperatorKind::kAdjointDouble, phys, g).matrix * theta;
      rescaled = r.n[0] * theta + eps * (r.n[1] * theta) + eps * le * (r.n[2] * theta);
      break;
    default:
      direct = assemble(OperatorKind::kDouble, phys, g).matrix * theta;
      rescaled = r.p[0] * theta + eps * (r.p[1] * theta) + eps * le * (r.p[2] * theta);
      break;
  }
  return (direct - rescaled).cwiseAbs().maxCoeff();
}

}  // namespace qpbie
