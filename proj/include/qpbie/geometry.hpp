#pragma once

// Smooth closed boundary curves, their equispaced discretizations, and the
// shrinking-hole family p + eps * Omega.

#include "qpbie/common.hpp"
#include "qpbie/lattice.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace qpbie {

enum class Shape { kCircle, kEllipse, kKite };

inline const char* to_string(Shape s) {
  switch (s) {
    case Shape::kCircle: return "circle";
    case Shape::kEllipse: return "ellipse";
    case Shape::kKite: return "kite";
  }
  return "unknown";
}

inline Shape shape_from_string(const std::string& name) {
  if (name == "circle") return Shape::kCircle;
  if (name == "ellipse") return Shape::kEllipse;
  if (name == "kite") return Shape::kKite;
  throw Error(ErrorCode::kConfig, "unknown shape '" + name + "'");
}

struct CurvePoint {
  Vec2 x;    // position
  Vec2 dx;   // x'(t)
  Vec2 ddx;  // x''(t)

  double speed() const { return dx.norm(); }
  /// Outward unit normal for a counterclockwise parametrization.
  Vec2 normal() const { return Vec2(dx[1], -dx[0]) / dx.norm(); }
  double curvature() const {
    const double s = dx.norm();
    return (dx[0] * ddx[1] - dx[1] * ddx[0]) / (s * s * s);
  }
};

/// x(t) = center + scale * base(t), counterclockwise, t in [0, 2 pi).
/// Circle: base = (a cos t, a sin t). Ellipse: (a cos t, b sin t).
/// Kite: (cos t + 0.65 cos 2t - 0.65, 1.5 sin t), size set by scale.
struct BoundaryCurve {
  Shape shape = Shape::kCircle;
  double a = 1.0;
  double b = 1.0;
  Vec2 center = Vec2::Zero();
  double scale = 1.0;

  CurvePoint at(double t) const {
    const double c = std::cos(t), s = std::sin(t);
    Vec2 x, dx, ddx;
    switch (shape) {
      case Shape::kCircle:
        x = {a * c, a * s};
        dx = {-a * s, a * c};
        ddx = {-a * c, -a * s};
        break;
      case Shape::kEllipse:
        x = {a * c, b * s};
        dx = {-a * s, b * c};
        ddx = {-a * c, -b * s};
        break;
      case Shape::kKite: {
        const double c2 = std::cos(2 * t), s2 = std::sin(2 * t);
        x = {c + 0.65 * c2 - 0.65, 1.5 * s};
        dx = {-s - 1.3 * s2, 1.5 * c};
        ddx = {-c - 2.6 * c2, -1.5 * s};
        break;
      }
    }
    return {center + scale * x, scale * dx, scale * ddx};
  }
};

inline BoundaryCurve make_curve(Shape shape, const Vec2& center, double a = 1.0, double b = 1.0,
                                double scale = 1.0) {
  if (!(a > 0.0) || !(b > 0.0) || !(scale > 0.0)) {
    throw Error(ErrorCode::kDomain, "shape parameters must be positive");
  }
  BoundaryCurve c;
  c.shape = shape;
  c.a = a;
  c.b = shape == Shape::kCircle ? a : b;
  c.center = center;
  c.scale = scale;
  return c;
}

inline BoundaryCurve circle(double r, const Vec2& center = Vec2::Zero()) {
  return make_curve(Shape::kCircle, center, r, r);
}
inline BoundaryCurve ellipse(double a, double b, const Vec2& center = Vec2::Zero()) {
  return make_curve(Shape::kEllipse, center, a, b);
}
inline BoundaryCurve kite(double size = 1.0, const Vec2& center = Vec2::Zero()) {
  return make_curve(Shape::kKite, center, 1.0, 1.0, size);
}

/// Distance from the curve to the boundary of the cell prod ]0, q_j[,
/// negative if the curve leaves the cell. Dense sampling.
inline double cell_clearance(const BoundaryCurve& c, const Lattice& lat, int samples = 2048) {
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < samples; ++i) {
    const Vec2 x = c.at(kTwoPi * i / samples).x;
    for (int j = 0; j < 2; ++j) best = std::min({best, x[j], lat.q[j] - x[j]});
  }
  return best;
}

inline void require_inside_cell(const BoundaryCurve& c, const Lattice& lat) {
  if (!(cell_clearance(c, lat) > 0.0)) {
    throw Error(ErrorCode::kDomain, "boundary curve does not fit inside the periodicity cell");
  }
}

/// Nodes t_j = 2 pi j / N with the geometric data the quadratures need.
struct DiscreteCurve {
  BoundaryCurve curve;
  int n = 0;
  Eigen::VectorXd t;
  std::vector<Vec2> points;
  std::vector<Vec2> tangents;  // x'(t_j)
  std::vector<Vec2> normals;
  Eigen::VectorXd speed;
  Eigen::VectorXd curvature;
  Eigen::VectorXd weights;  // 2 pi / N * speed

  int size() const { return n; }
  double max_speed() const { return speed.maxCoeff(); }
  double length() const { return weights.sum(); }
};

inline DiscreteCurve discretize(const BoundaryCurve& curve, int n) {
  if (n < 16 || n % 2 != 0) throw Error(ErrorCode::kDomain, "node count must be even and >= 16");
  DiscreteCurve d;
  d.curve = curve;
  d.n = n;
  d.t.resize(n);
  d.speed.resize(n);
  d.curvature.resize(n);
  d.weights.resize(n);
  d.points.resize(n);
  d.tangents.resize(n);
  d.normals.resize(n);
  for (int j = 0; j < n; ++j) {
    const double t = kTwoPi * j / n;
    const CurvePoint p = curve.at(t);
    d.t[j] = t;
    d.points[j] = p.x;
    d.tangents[j] = p.dx;
    d.normals[j] = p.normal();
    d.speed[j] = p.speed();
    d.curvature[j] = p.curvature();
    d.weights[j] = kTwoPi / n * d.speed[j];
    if (!(d.speed[j] > 0.0)) throw Error(ErrorCode::kDomain, "curve is not regular");
  }
  return d;
}

/// Winding number of the discrete curve around y (1 for interior points of a
/// counterclockwise curve).
inline double winding_number(const DiscreteCurve& c, const Vec2& y) {
  double total = 0.0;
  for (int j = 0; j < c.n; ++j) {
    const Vec2 a = c.points[j] - y, b = c.points[(j + 1) % c.n] - y;
    total += std::atan2(a[0] * b[1] - a[1] * b[0], a.dot(b));
  }
  return total / kTwoPi;
}

// ---------------------------------------------------------------------------
// Trigonometric interpolation of nodal densities.

/// Fourier representation of N equispaced samples, with the Nyquist mode
/// split evenly between +N/2 and -N/2 so that the interpolant is real for
/// real data.
class TrigInterpolant {
 public:
  explicit TrigInterpolant(const CVector& values) : n_(static_cast<int>(values.size())) {
    Eigen::FFT<double> fft;
    std::vector<Complex> in(values.data(), values.data() + n_), out;
    fft.fwd(out, in);
    coeffs_.resize(n_);
    for (int i = 0; i < n_; ++i) coeffs_[i] = out[i] / static_cast<double>(n_);
  }

  int size() const { return n_; }

  Complex operator()(double t) const {
    Complex sum = coeffs_[0];
    const int h = n_ / 2;
    for (int m = 1; m < h; ++m) {
      sum += coeffs_[m] * std::polar(1.0, m * t) + coeffs_[n_ - m] * std::polar(1.0, -m * t);
    }
    sum += coeffs_[h] * std::cos(h * t);
    return sum;
  }

  /// Samples at M >= N equispaced nodes by zero padding.
  CVector resample(int m) const {
    if (m < n_ || m % 2 != 0) throw Error(ErrorCode::kDomain, "resample size must be even and >= N");
    std::vector<Complex> spec(m, 0.0), out;
    const int h = n_ / 2;
    spec[0] = coeffs_[0];
    for (int k = 1; k < h; ++k) {
      spec[k] = coeffs_[k];
      spec[m - k] = coeffs_[n_ - k];
    }
    if (m == n_) {
      spec[h] = coeffs_[h];
    } else {
      spec[h] = 0.5 * coeffs_[h];
      spec[m - h] = 0.5 * coeffs_[h];
    }
    Eigen::FFT<double> fft;
    fft.SetFlag(Eigen::FFT<double>::Unscaled);
    fft.inv(out, spec);
    CVector r(m);
    for (int i = 0; i < m; ++i) r[i] = out[i];
    return r;
  }

 private:
  int n_;
  std::vector<Complex> coeffs_;
};

// ---------------------------------------------------------------------------
// Shrinking hole p + eps * Omega.

struct HoleConfig {
  Vec2 p = Vec2(0.5, 0.5);
  double eps = 0.1;
  BoundaryCurve reference;

  /// Largest eps0 with p + eps * closure(Omega) inside the cell for all
  /// 0 < eps < eps0, from dense samples of the reference curve.
  double epsilon0(const Lattice& lat, int samples = 4096) const {
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < samples; ++i) {
      const Vec2 x = reference.at(kTwoPi * i / samples).x;
      for (int j = 0; j < 2; ++j) {
        if (x[j] > 0.0) best = std::min(best, (lat.q[j] - p[j]) / x[j]);
        if (x[j] < 0.0) best = std::min(best, p[j] / -x[j]);
      }
    }
    return best;
  }

  BoundaryCurve rescaled(const Lattice& lat) const {
    if (!(eps > 0.0) || !(eps < epsilon0(lat))) {
      throw Error(ErrorCode::kOutOfRange, "eps outside (0, eps0)");
    }
    return rescale_unchecked();
  }

  BoundaryCurve rescale_unchecked() const {
    BoundaryCurve c = reference;
    c.center = p + eps * reference.center;
    c.scale = eps * reference.scale;
    return c;
  }
};

}  // namespace qpbie
