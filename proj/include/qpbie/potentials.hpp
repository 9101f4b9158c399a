#pragma once

// Quasi-periodic single and double layer potentials on a closed curve inside
// the periodicity cell: Nystrom matrices for V, K, K* and off-boundary field
// evaluation.
//
// Conventions (x on the curve, y the integration variable, nu outward):
//   V[mu](x)  =  int G(x - y) mu(y) dsigma_y
//   K[mu](x)  = -int nu(y) . grad G(x - y) mu(y) dsigma_y
//   K*[mu](x) =  int nu(x) . grad G(x - y) mu(y) dsigma_y
// Interior traces of the double layer are +mu/2 + K mu, exterior -mu/2 + K mu;
// the single layer normal derivative is -mu/2 + K* mu from inside and
// +mu/2 + K* mu from outside.

#include "qpbie/geometry.hpp"
#include "qpbie/parallel.hpp"
#include "qpbie/qpgreen.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <cmath>
#include <functional>
#include <vector>

namespace qpbie {

enum class OperatorKind { kSingle, kDouble, kAdjointDouble };

inline const char* to_string(OperatorKind k) {
  switch (k) {
    case OperatorKind::kSingle: return "V";
    case OperatorKind::kDouble: return "K";
    case OperatorKind::kAdjointDouble: return "K*";
  }
  return "?";
}

/// Periodic log-quadrature weights for N = 2n nodes:
///   R(s) = -(2 pi / n) sum_{m=1}^{n-1} cos(m s)/m - (pi / n^2) cos(n s)
/// so that int_0^{2pi} log(4 sin^2((t - tau)/2)) f(tau) dtau ~ sum_j R(t - t_j) f_j.
class LogQuadrature {
 public:
  explicit LogQuadrature(int n_nodes) : n_(n_nodes), table_(n_nodes) {
    for (int j = 0; j < n_; ++j) table_[j] = weight(kTwoPi * j / n_);
  }

  int size() const { return n_; }
  double node_weight(int i, int j) const { return table_[((i - j) % n_ + n_) % n_]; }

  double weight(double s) const {
    const int h = n_ / 2;
    // cos(m s) by the Chebyshev recurrence.
    const double c1 = std::cos(s);
    double cm_prev = 1.0, cm = c1, sum = 0.0;
    for (int m = 1; m < h; ++m) {
      sum += cm / m;
      const double next = 2.0 * c1 * cm - cm_prev;
      cm_prev = cm;
      cm = next;
    }
    return -(kTwoPi / h) * sum - kPi / (static_cast<double>(h) * h) * cm;
  }

 private:
  int n_;
  std::vector<double> table_;
};

/// Target on the curve: parameter, exact geometry, and the node it coincides
/// with (-1 if none).
struct CurveTarget {
  double t;
  CurvePoint geom;
  int node = -1;
};

inline CurveTarget node_target(const DiscreteCurve& c, int i) {
  return {c.t[i], c.curve.at(c.t[i]), i};
}

inline CurveTarget param_target(const DiscreteCurve& c, double t) {
  t = std::fmod(t, kTwoPi);
  if (t < 0) t += kTwoPi;
  const double pos = t / kTwoPi * c.n;
  const int nearest = static_cast<int>(std::lround(pos)) % c.n;
  const int node = std::abs(pos - std::round(pos)) < 1e-12 ? nearest : -1;
  if (node >= 0) return node_target(c, node);
  return {t, c.curve.at(t), -1};
}

/// Rows of the three boundary operators for one target, accumulated into
/// the selected outputs.
struct RowSet {
  Eigen::RowVectorXcd v, k, kadj;
  bool want_v = false, want_k = false, want_kadj = false;

  RowSet(int n, bool v_on, bool k_on, bool kadj_on) : want_v(v_on), want_k(k_on), want_kadj(kadj_on) {
    if (want_v) v = Eigen::RowVectorXcd::Zero(n);
    if (want_k) k = Eigen::RowVectorXcd::Zero(n);
    if (want_kadj) kadj = Eigen::RowVectorXcd::Zero(n);
  }
};

/// Adds the free-space kernel S_2(., k), with its logarithmic singularity
/// integrated by LogQuadrature.
inline void add_free_space_row(const DiscreteCurve& c, const LogQuadrature& lq, const CurveTarget& tg,
                               Complex k, RowSet& rows) {
  const double wt = kTwoPi / c.n;
  const Complex k2 = k * k;
  const Vec2 nu_t = tg.geom.normal();
  for (int j = 0; j < c.n; ++j) {
    const double sp = c.speed[j];
    if (tg.node == j) {
      const double w_log = lq.node_weight(j, j);
      if (rows.want_v) {
        rows.v[j] += w_log * sp / (4.0 * kPi) + wt * std::log(sp) / kTwoPi * sp;
      }
      const double kappa_term = wt * c.curvature[j] / (4.0 * kPi) * sp;
      if (rows.want_k) rows.k[j] += kappa_term;
      if (rows.want_kadj) rows.kadj[j] += kappa_term;
      continue;
    }
    const Vec2 d = tg.geom.x - c.points[j];
    const double r2 = d.squaredNorm();
    const double r = std::sqrt(r2);
    const double sdiff = tg.t - c.t[j];
    const double w_log = tg.node >= 0 ? lq.node_weight(tg.node, j) : lq.weight(sdiff);
    const double sn = std::sin(0.5 * sdiff);
    const double half_smooth_log = 0.5 * std::log(r2 / (4.0 * sn * sn));
    const specfun::Radial2 rad = specfun::radial2(r, k);
    if (rows.want_v) {
      const Complex k1 = 0.5 * rad.j * sp;
      const Complex k2v = (rad.j * half_smooth_log + rad.n) * sp;
      rows.v[j] += w_log * k1 + wt * k2v;
    }
    if (rows.want_k || rows.want_kadj) {
      const Complex log_coeff = k2 * rad.j_slope;
      const Complex smooth = log_coeff * half_smooth_log + rad.j / r2 + k2 * rad.n_slope;
      if (rows.want_k) {
        const double nd = c.normals[j].dot(d);
        rows.k[j] += w_log * (-0.5 * nd * log_coeff * sp) + wt * (-nd * smooth * sp);
      }
      if (rows.want_kadj) {
        const double nd = nu_t.dot(d);
        rows.kadj[j] += w_log * (0.5 * nd * log_coeff * sp) + wt * (nd * smooth * sp);
      }
    }
  }
}

/// Adds a smooth kernel by the trapezoid rule. kernel(d) returns value and
/// gradient of the smooth function at d = x - y (d = 0 allowed).
template <class Kernel>
void add_smooth_row(const DiscreteCurve& c, const CurveTarget& tg, Kernel&& kernel, RowSet& rows) {
  const Vec2 nu_t = tg.geom.normal();
  for (int j = 0; j < c.n; ++j) {
    const Vec2 d = tg.node == j ? Vec2(Vec2::Zero()) : Vec2(tg.geom.x - c.points[j]);
    const Field2 f = kernel(d);
    const double w = c.weights[j];
    if (rows.want_v) rows.v[j] += w * f.value;
    if (rows.want_k) rows.k[j] -= w * (c.normals[j][0] * f.gradient[0] + c.normals[j][1] * f.gradient[1]);
    if (rows.want_kadj) rows.kadj[j] += w * (nu_t[0] * f.gradient[0] + nu_t[1] * f.gradient[1]);
  }
}

struct OperatorSet {
  CMatrix v, k, kadj;
};

/// Nystrom matrices for the kernel S_2(., k_free) + smooth, where smooth(d)
/// returns value and gradient of an analytic kernel at d = x - y.
template <class Smooth>
OperatorSet assemble_split(const DiscreteCurve& c, Complex k_free, Smooth&& smooth, bool want_v,
                           bool want_k, bool want_kadj) {
  const int n = c.n;
  OperatorSet out;
  if (want_v) out.v.resize(n, n);
  if (want_k) out.k.resize(n, n);
  if (want_kadj) out.kadj.resize(n, n);
  const LogQuadrature lq(n);
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t i) {
    RowSet rows(n, want_v, want_k, want_kadj);
    const CurveTarget tg = node_target(c, static_cast<int>(i));
    add_free_space_row(c, lq, tg, k_free, rows);
    add_smooth_row(c, tg, smooth, rows);
    if (want_v) out.v.row(i) = rows.v;
    if (want_k) out.k.row(i) = rows.k;
    if (want_kadj) out.kadj.row(i) = rows.kadj;
  });
  return out;
}

/// Free-space operators with kernel S_2(., k) only (k = 0 gives Laplace).
inline OperatorSet assemble_free_space(const DiscreteCurve& c, Complex k, bool want_v, bool want_k,
                                       bool want_kadj) {
  return assemble_split(
      c, k, [](const Vec2&) { return Field2{0.0, CVec2::Zero()}; }, want_v, want_k, want_kadj);
}

/// Quasi-periodic V, K, K* on the nodes (empty matrices for unrequested kinds).
inline OperatorSet assemble_operators(const DiscreteCurve& c, const GreenEvaluator& g, bool want_v,
                                      bool want_k, bool want_kadj) {
  return assemble_split(
      c, g.k(), [&](const Vec2& d) { return g.regular_part(d); }, want_v, want_k, want_kadj);
}

struct BoundaryOperator {
  OperatorKind kind;
  CMatrix matrix;
};

inline BoundaryOperator assemble(OperatorKind kind, const DiscreteCurve& c, const GreenEvaluator& g) {
  const OperatorSet s = assemble_operators(c, g, kind == OperatorKind::kSingle,
                                           kind == OperatorKind::kDouble,
                                           kind == OperatorKind::kAdjointDouble);
  switch (kind) {
    case OperatorKind::kSingle: return {kind, s.v};
    case OperatorKind::kDouble: return {kind, s.k};
    case OperatorKind::kAdjointDouble: return {kind, s.kadj};
  }
  return {kind, CMatrix()};
}

/// Applies the boundary operator of the given kind at arbitrary curve
/// parameters (Nystrom interpolation), for checks between nodes.
inline CVector apply_at_parameters(OperatorKind kind, const DiscreteCurve& c, const GreenEvaluator& g,
                                   const CVector& density, const std::vector<double>& params) {
  CVector out(static_cast<Eigen::Index>(params.size()));
  const LogQuadrature lq(c.n);
  parallel_for(params.size(), [&](std::size_t i) {
    RowSet rows(c.n, kind == OperatorKind::kSingle, kind == OperatorKind::kDouble,
                kind == OperatorKind::kAdjointDouble);
    const CurveTarget tg = param_target(c, params[i]);
    add_free_space_row(c, lq, tg, g.k(), rows);
    add_smooth_row(c, tg, [&](const Vec2& d) { return g.regular_part(d); }, rows);
    const Eigen::RowVectorXcd& r =
        kind == OperatorKind::kSingle ? rows.v : (kind == OperatorKind::kDouble ? rows.k : rows.kadj);
    out[static_cast<Eigen::Index>(i)] = (r * density).value();
  });
  return out;
}

// ---------------------------------------------------------------------------
// Off-boundary evaluation.

enum class PotentialKind { kSingle, kDouble };

struct FieldSample {
  std::vector<Vec2> points;
  CVector values;
  std::vector<CVec2> gradients;     // empty unless requested
  std::vector<bool> near_boundary;  // inside the accuracy guard distance
};

struct FieldOptions {
  int upsample = 1;  // fine-grid factor for the free-space part
  bool gradients = false;
};

namespace detail {

// Nodes of an M-point discretization with the density interpolated there.
struct FineGrid {
  DiscreteCurve curve;
  CVector density;
};

inline FineGrid make_fine_grid(const DiscreteCurve& c, const CVector& density, int factor) {
  FineGrid f{discretize(c.curve, c.n * factor), CVector()};
  f.density = factor == 1 ? density : TrigInterpolant(density).resample(c.n * factor);
  return f;
}

}  // namespace detail

/// Single or double layer potential with nodal density at arbitrary points
/// off the periodic array of curves. The point is first moved into the cell
/// centered at the curve center (the potential is quasi-periodic). With
/// upsample > 1 the free-space part S_2 is integrated on a refined grid with
/// the interpolated density and the regular part on the original nodes.
inline FieldSample field_eval(PotentialKind kind, const DiscreteCurve& c, const CVector& density,
                              const GreenEvaluator& g, const std::vector<Vec2>& points,
                              FieldOptions opt = {}) {
  if (density.size() != c.n) throw Error(ErrorCode::kDomain, "density length does not match curve");
  if (opt.upsample < 1) throw Error(ErrorCode::kDomain, "upsample factor must be >= 1");
  if (opt.upsample > 1 && opt.gradients && kind == PotentialKind::kDouble) {
    throw Error(ErrorCode::kDomain, "double layer gradients are evaluated without upsampling");
  }
  const Lattice& lat = g.lattice();
  const detail::FineGrid fine = detail::make_fine_grid(c, density, opt.upsample);
  const double guard = kTwoPi / c.n * c.max_speed();
  FieldSample out;
  out.points = points;
  out.values = CVector::Zero(static_cast<Eigen::Index>(points.size()));
  out.near_boundary.assign(points.size(), false);
  if (opt.gradients) out.gradients.assign(points.size(), CVec2::Zero());
  const Complex k = g.k();
  std::vector<char> near(points.size(), 0);

  parallel_for(points.size(), [&](std::size_t p) {
    Vec2 x = points[p];
    double arg = 0.0;
    for (int i = 0; i < 2; ++i) {
      const double m = std::floor((x[i] - c.curve.center[i]) / lat.q[i] + 0.5);
      x[i] -= m * lat.q[i];
      arg += lat.eta[i] * m * lat.q[i];
    }
    const Complex phase = std::polar(1.0, arg);
    Complex u = 0.0;
    CVec2 grad = CVec2::Zero();
    double dmin = std::numeric_limits<double>::infinity();
    for (int j = 0; j < fine.curve.n; ++j) dmin = std::min(dmin, (x - fine.curve.points[j]).norm());
    near[p] = dmin < guard;

    const bool split = opt.upsample > 1;
    for (int j = 0; j < c.n; ++j) {
      const Vec2 d = x - c.points[j];
      const Complex wmu = c.weights[j] * density[j];
      if (kind == PotentialKind::kDouble && opt.gradients) {
        const Field2H f = g.eval_hessian(d);
        u -= wmu * (c.normals[j][0] * f.gradient[0] + c.normals[j][1] * f.gradient[1]);
        grad -= wmu * (f.hessian * c.normals[j].cast<Complex>());
        continue;
      }
      const Field2 f = split ? g.regular_part(d) : g.eval(d);
      if (kind == PotentialKind::kSingle) {
        u += wmu * f.value;
        if (opt.gradients) grad += wmu * f.gradient;
      } else {
        u -= wmu * (c.normals[j][0] * f.gradient[0] + c.normals[j][1] * f.gradient[1]);
      }
    }
    if (split) {
      for (int j = 0; j < fine.curve.n; ++j) {
        const Vec2 d = x - fine.curve.points[j];
        const Complex wmu = fine.curve.weights[j] * fine.density[j];
        const Field2 s = specfun::fundamental_solution2(d, k);
        if (kind == PotentialKind::kSingle) {
          u += wmu * s.value;
          if (opt.gradients) grad += wmu * s.gradient;
        } else {
          const Vec2& nu = fine.curve.normals[j];
          u -= wmu * (nu[0] * s.gradient[0] + nu[1] * s.gradient[1]);
        }
      }
    }
    out.values[static_cast<Eigen::Index>(p)] = phase * u;
    if (opt.gradients) out.gradients[p] = phase * grad;
  });
  for (std::size_t p = 0; p < points.size(); ++p) out.near_boundary[p] = near[p] != 0;
  return out;
}

/// Value at h = 0 of the polynomial through (h_i, f_i) (Neville).
inline Complex extrapolate_to_zero(const std::vector<double>& h, std::vector<Complex> f) {
  const std::size_t n = h.size();
  for (std::size_t m = 1; m < n; ++m) {
    for (std::size_t i = 0; i + m < n; ++i) {
      f[i] = (h[i + m] * f[i] - h[i] * f[i + 1]) / (h[i + m] - h[i]);
    }
  }
  return f[0];
}

struct TraceOptions {
  int fine_nodes = 16384;  // free-space part resampled to about this many nodes
  double step = 4.2;       // first offset, in fine-grid arc-length spacings
  int points = 8;
};

struct TraceLimit {
  Complex value;
  Complex normal_derivative;
};

/// One-sided boundary limit of a layer potential at node i, from the
/// interior (side = +1) or the exterior (side = -1), by polynomial
/// extrapolation of off-boundary values along the normal. The normal
/// derivative is only formed for the single layer.
inline TraceLimit boundary_limit(PotentialKind kind, const DiscreteCurve& c, const CVector& density,
                                 const GreenEvaluator& g, int i, int side, TraceOptions opt = {}) {
  std::vector<Vec2> pts;
  std::vector<double> hs;
  const int upsample = std::max(1, opt.fine_nodes / c.n);
  const double h0 = opt.step * kTwoPi / (c.n * upsample) * c.speed[i];
  for (int m = 1; m <= opt.points; ++m) {
    hs.push_back(m * h0);
    pts.push_back(c.points[i] - side * m * h0 * c.normals[i]);
  }
  const bool grads = kind == PotentialKind::kSingle;
  const FieldSample f = field_eval(kind, c, density, g, pts, {upsample, grads});
  std::vector<Complex> vals(pts.size()), dn(pts.size());
  const CVec2 nu = c.normals[i].cast<Complex>();
  for (std::size_t m = 0; m < pts.size(); ++m) {
    vals[m] = f.values[static_cast<Eigen::Index>(m)];
    if (grads) dn[m] = f.gradients[m].transpose() * nu;
  }
  return {extrapolate_to_zero(hs, vals), grads ? extrapolate_to_zero(hs, dn) : Complex(0.0)};
}

// ---------------------------------------------------------------------------
// Flux of a quasi-periodic field through the cell boundary.

struct FluxResult {
  Complex flux;     // int_{dQ} d_nu v conj(v) dsigma
  double norm_sq;   // int_{dQ} |v|^2 dsigma
};

/// Gauss-Legendre quadrature on the four faces of prod [0, q_j], with the
/// same nodes on opposite faces. field(x) returns v(x) and grad v(x).
inline FluxResult cell_flux_integral(const Lattice& lat, const std::function<Field2(const Vec2&)>& field,
                                     int panels = 4) {
  using Rule = boost::math::quadrature::gauss<double, 20>;
  std::vector<double> nodes, weights;
  for (std::size_t i = 0; i < Rule::abscissa().size(); ++i) {
    const double a = Rule::abscissa()[i], w = Rule::weights()[i];
    nodes.push_back(a);
    weights.push_back(w);
    if (a != 0.0) {
      nodes.push_back(-a);
      weights.push_back(w);
    }
  }
  FluxResult res{0.0, 0.0};
  for (int face = 0; face < 2; ++face) {
    const int along = 1 - face;
    const double len = lat.q[along];
    for (int side = 0; side < 2; ++side) {
      const double sign = side == 0 ? -1.0 : 1.0;
      for (int pnl = 0; pnl < panels; ++pnl) {
        const double lo = len * pnl / panels, h = len / panels;
        for (std::size_t i = 0; i < nodes.size(); ++i) {
          Vec2 x;
          x[face] = side == 0 ? 0.0 : lat.q[face];
          x[along] = lo + 0.5 * h * (nodes[i] + 1.0);
          const double w = 0.5 * h * weights[i];
          const Field2 f = field(x);
          res.flux += w * sign * f.gradient[face] * std::conj(f.value);
          res.norm_sq += w * std::norm(f.value);
        }
      }
    }
  }
  return res;
}

}  // namespace qpbie
