#pragma once

// Holomorphic-in-k fundamental solutions of the Helmholtz operator built from
// the entire Bessel extensions J~_nu(z) = z^{-nu} J_nu(z) and the
// log-subtracted Neumann function N~_m.

#include "qpbie/common.hpp"

#include <array>
#include <cmath>
#include <span>
#include <vector>

namespace qpbie::specfun {

using Point = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 3, 1>;
using CPoint = Eigen::Matrix<Complex, Eigen::Dynamic, 1, 0, 3, 1>;

inline constexpr double kSeriesRadius = 12.0;
inline constexpr double kMaxArgument = 100.0;
inline constexpr double kDefaultSeriesTolerance = 1e-14;

/// f(z) together with f'(z)/z. Every entire function in this module is even,
/// so f'(z)/z is itself entire and finite at z = 0.
struct ValueSlope {
  Complex value;
  Complex slope;
};

/// Even power series f(z) = sum_m c_m (z^2)^m with a finite coefficient table
/// and adaptive truncation against a geometric tail bound.
class EntireSeries {
 public:
  enum class Kind { kBesselJ, kNeumannLogFree };

  /// Coefficients of J~_nu. nu may be a negative integer or half integer.
  static EntireSeries bessel_j(double nu, int degree = 75,
                               double tolerance = kDefaultSeriesTolerance) {
    EntireSeries s(Kind::kBesselJ, nu, tolerance);
    s.coeffs_.assign(static_cast<std::size_t>(degree) + 1, 0.0);
    // 1/Gamma(m + nu + 1) vanishes below m0 for negative integer nu.
    int m0 = 0;
    while (nonpositive_integer(m0 + nu + 1.0)) ++m0;
    if (m0 > degree) return s;
    double c = std::pow(-0.25, m0) * std::pow(2.0, -nu) /
               (std::tgamma(m0 + 1.0) * std::tgamma(m0 + nu + 1.0));
    for (int m = m0; m <= degree; ++m) {
      s.coeffs_[m] = c;
      c *= -0.25 / ((m + 1.0) * (m + nu + 1.0));
    }
    return s;
  }

  /// Coefficients of N~_m for integer order m >= 0.
  static EntireSeries neumann_log_free(int m, int degree = 75,
                                       double tolerance = kDefaultSeriesTolerance) {
    EntireSeries s(Kind::kNeumannLogFree, m, tolerance);
    s.coeffs_.assign(static_cast<std::size_t>(degree) + 1, 0.0);
    // Polynomial head, then the recurrence-driven tail.
    for (int k = 0; k < m && k <= degree; ++k) s.coeffs_[k] = s.closed_form(k);
    double d = 1.0 / std::tgamma(m + 1.0);  // (-1/4)^j / (j! (m+j)!) at j = 0
    double hj = 0.0, hmj = harmonic(m);
    for (int j = 0; m + j <= degree; ++j) {
      s.coeffs_[m + j] = -std::ldexp(1.0, -m) / kPi * (hj + hmj) * d;
      d *= -0.25 / ((j + 1.0) * (m + j + 1.0));
      hj += 1.0 / (j + 1.0);
      hmj += 1.0 / (m + j + 1.0);
    }
    return s;
  }

  Kind kind() const { return kind_; }
  double order() const { return order_; }
  int degree() const { return static_cast<int>(coeffs_.size()) - 1; }
  double tolerance() const { return tolerance_; }
  std::span<const double> coefficients() const { return coeffs_; }

  Complex operator()(Complex z) const { return evaluate(z).value; }

  /// Adaptive evaluation. Throws kNotConverged when the coefficient table is
  /// exhausted before the tail bound drops under tolerance.
  ValueSlope evaluate(Complex z) const {
    const Complex w = z * z;
    const double aw = std::abs(w);
    Complex sum = 0.0, slope = 0.0, wpow = 1.0, wpow_prev = 0.0;
    double scale = 0.0;
    const int d = degree();
    for (int m = 0; m <= d; ++m) {
      const Complex term = coeffs_[m] * wpow;
      sum += term;
      if (m > 0) slope += (2.0 * m * coeffs_[m]) * wpow_prev;
      scale = std::max(scale, std::abs(term));
      if (m + 1 <= d && m >= 1 && coeffs_[m] != 0.0) {
        const double ratio = std::abs(coeffs_[m + 1] / coeffs_[m]) * aw;
        const double next = std::abs(coeffs_[m + 1]) * std::abs(wpow) * aw;
        if (ratio < 0.5 && next / (1.0 - ratio) <= tolerance_ * 1e-2 * scale) {
          return {sum, slope};
        }
      }
      wpow_prev = wpow;
      wpow *= w;
    }
    if (aw == 0.0) return {sum, slope};
    throw Error(ErrorCode::kNotConverged,
                "entire series truncation not converged at |z| = " +
                    std::to_string(std::abs(z)));
  }

  /// Plain partial sum through power w^degree, no adaptivity.
  Complex partial_sum(Complex z, int degree) const {
    const Complex w = z * z;
    Complex sum = 0.0, wpow = 1.0;
    const int d = std::min(degree, this->degree());
    for (int m = 0; m <= d; ++m) {
      sum += coeffs_[m] * wpow;
      wpow *= w;
    }
    return sum;
  }

  /// Largest relative mismatch between the stored table and an independent
  /// closed-form recomputation (lgamma based).
  double recurrence_mismatch() const {
    double worst = 0.0;
    for (int m = 0; m <= degree(); ++m) {
      const double ref = closed_form(m);
      if (ref == 0.0 && coeffs_[m] == 0.0) continue;
      const double denom = std::max(std::abs(ref), 1e-300);
      worst = std::max(worst, std::abs(coeffs_[m] - ref) / denom);
    }
    return worst;
  }

 private:
  EntireSeries(Kind kind, double order, double tol)
      : kind_(kind), order_(order), tolerance_(tol) {}

  static double harmonic(int n) {
    double h = 0.0;
    for (int i = 1; i <= n; ++i) h += 1.0 / i;
    return h;
  }

  static bool nonpositive_integer(double x) {
    return x <= 0.0 && std::floor(x) == x;
  }

  // Coefficient of w^m evaluated from factorials via lgamma.
  double closed_form(int m) const {
    if (kind_ == Kind::kBesselJ) {
      const double a = m + order_ + 1.0;
      if (nonpositive_integer(a)) return 0.0;
      const double sign_gamma = std::tgamma(a) < 0.0 ? -1.0 : 1.0;
      const double logmag = -order_ * std::log(2.0) - 2.0 * m * std::log(2.0) -
                            std::lgamma(m + 1.0) - std::lgamma(a);
      return ((m % 2) ? -1.0 : 1.0) * sign_gamma * std::exp(logmag);
    }
    const int mo = static_cast<int>(order_);
    if (m < mo) {
      return -std::exp(std::lgamma(mo - m) - std::lgamma(m + 1.0) +
                       (mo - 2.0 * m) * std::log(2.0)) / kPi;
    }
    const int j = m - mo;
    const double h = harmonic(j) + harmonic(mo + j);
    if (h == 0.0) return 0.0;
    const double logmag = -mo * std::log(2.0) - 2.0 * j * std::log(2.0) -
                          std::lgamma(j + 1.0) - std::lgamma(mo + j + 1.0);
    return -((j % 2) ? -1.0 : 1.0) * h * std::exp(logmag) / kPi;
  }

  Kind kind_;
  double order_;
  double tolerance_;
  std::vector<double> coeffs_;
};

namespace detail {

inline void check_argument(Complex z) {
  if (!(std::abs(z) <= kMaxArgument)) {
    throw Error(ErrorCode::kDomain, "argument outside validated range |z| <= 100");
  }
}

inline void check_order(double nu) {
  const double twice = 2.0 * nu;
  if (std::abs(nu) > 10.0 || std::floor(twice) != twice) {
    throw Error(ErrorCode::kDomain, "order must be an integer or half integer with |nu| <= 10");
  }
}

struct Hankel {
  Complex h1, h2;
};

// Large-argument Hankel expansions, Re z >= 0. Summation stops at the smallest
// term, which bounds the remainder.
inline Hankel hankel_asymptotic(double nu, Complex z) {
  const double mu = 4.0 * nu * nu;
  Complex s1 = 1.0, s2 = 1.0;
  Complex a = 1.0;
  double last = 1.0;
  const Complex iz = kI / z;
  Complex p1 = 1.0, p2 = 1.0;
  for (int m = 1; m < 200; ++m) {
    a *= (mu - (2.0 * m - 1.0) * (2.0 * m - 1.0)) / (8.0 * m);
    p1 *= iz;
    p2 *= -iz;
    const double mag = std::abs(a * p1);
    if (mag > last || mag == 0.0) break;
    s1 += a * p1;
    s2 += a * p2;
    last = mag;
    if (mag < 1e-18) break;
  }
  const Complex omega = z - 0.5 * nu * kPi - 0.25 * kPi;
  const Complex pre = std::sqrt(2.0 / (kPi * z));
  return {pre * std::exp(kI * omega) * s1, pre * std::exp(-kI * omega) * s2};
}

inline Complex bessel_j_large(double nu, Complex z) {
  const Hankel h = hankel_asymptotic(nu, z);
  return 0.5 * (h.h1 + h.h2);
}

inline Complex bessel_y_large(double nu, Complex z) {
  const Hankel h = hankel_asymptotic(nu, z);
  return (h.h1 - h.h2) / (2.0 * kI);
}

// Evenness lets the asymptotic path work in the closed right half plane.
inline Complex right_half(Complex z) { return z.real() < 0.0 ? -z : z; }

inline const EntireSeries& cached_bessel_j(double nu) {
  // Orders -10, -9.5, ..., 10.
  static const std::vector<EntireSeries> table = [] {
    std::vector<EntireSeries> t;
    for (int i = 0; i < 41; ++i) t.push_back(EntireSeries::bessel_j(-10.0 + 0.5 * i));
    return t;
  }();
  return table[static_cast<std::size_t>(std::lround(2.0 * nu + 20.0))];
}

inline const EntireSeries& cached_neumann(int m) {
  static const std::array<EntireSeries, 2> table{EntireSeries::neumann_log_free(0),
                                                 EntireSeries::neumann_log_free(1)};
  return table[static_cast<std::size_t>(m)];
}

}  // namespace detail

/// J~_nu(z) and its slope J~_nu'(z)/z = -J~_{nu+1}(z).
inline ValueSlope entire_bessel_j_slope(double nu, Complex z) {
  detail::check_order(nu);
  detail::check_argument(z);
  if (std::abs(z) <= kSeriesRadius) return detail::cached_bessel_j(nu).evaluate(z);
  const Complex zr = detail::right_half(z);
  const Complex value = std::pow(zr, -nu) * detail::bessel_j_large(nu, zr);
  const Complex next = std::pow(zr, -(nu + 1.0)) * detail::bessel_j_large(nu + 1.0, zr);
  return {value, -next};
}

inline Complex entire_bessel_j(double nu, Complex z) {
  return entire_bessel_j_slope(nu, z).value;
}

/// N~_{(n-2)/2}(z) for even n in {2, 4}, with slope.
inline ValueSlope entire_neumann_slope(int n, Complex z) {
  if (n != 2 && n != 4) {
    throw Error(ErrorCode::kDomain, "entire_neumann requires n in {2, 4}");
  }
  detail::check_argument(z);
  const int m = (n - 2) / 2;
  if (std::abs(z) <= kSeriesRadius) return detail::cached_neumann(m).evaluate(z);
  const Complex zr = detail::right_half(z);
  const Complex lg = std::log(zr / 2.0) + kEulerGamma;
  const Complex zm = std::pow(zr, static_cast<double>(m));
  const Complex jm = detail::bessel_j_large(m, zr), ym = detail::bessel_y_large(m, zr);
  const Complex jm1 = detail::bessel_j_large(m - 1.0, zr);
  const Complex ym1 = detail::bessel_y_large(m - 1.0, zr);
  const Complex value = zm * (ym - 2.0 / kPi * lg * jm);
  // d/dz [z^m C_m] = z^m C_{m-1}
  const Complex deriv =
      zm * ym1 - 2.0 / kPi * (zm / zr * jm + lg * zm * jm1);
  return {value, deriv / zr};
}

inline Complex entire_neumann(int n, Complex z) { return entire_neumann_slope(n, z).value; }

/// Surface measure of the unit sphere in R^n.
inline double sphere_measure(int n) {
  return 2.0 * std::pow(kPi, 0.5 * n) / std::tgamma(0.5 * n);
}

struct FsCoefficients {
  Complex j;        // J_n(z)
  Complex n;        // N_n(z)
  Complex j_slope;  // J_n'(z)/z
  Complex n_slope;  // N_n'(z)/z
};

inline void check_dimension(int n) {
  if (n != 2 && n != 3) throw Error(ErrorCode::kDomain, "dimension must be 2 or 3");
}

/// The pair (J_n, N_n) of the holomorphic fundamental-solution family.
inline FsCoefficients fs_coefficients(int n, Complex z) {
  check_dimension(n);
  if (n % 2 == 0) {
    const double cj = std::pow(kTwoPi, -0.5 * n);
    const double cn = std::pow(2.0, -0.5 * n - 1.0) * std::pow(kPi, -0.5 * n + 1.0);
    const ValueSlope jt = entire_bessel_j_slope(0.5 * (n - 2), z);
    const ValueSlope nt = entire_neumann_slope(n, z);
    return {cj * jt.value, cn * nt.value, cj * jt.slope, cn * nt.slope};
  }
  const double sign = ((n - 1) / 2) % 2 ? -1.0 : 1.0;
  const double cn = sign * std::pow(2.0, -0.5 * n - 1.0) * std::pow(kPi, -0.5 * n + 1.0);
  const ValueSlope jt = entire_bessel_j_slope(-0.5 * (n - 2), z);
  return {0.0, cn * jt.value, 0.0, cn * jt.slope};
}

struct FundamentalSolutionValue {
  Complex value;
  CPoint gradient;
};

namespace detail {
inline Complex ipow(Complex k, int p) {
  Complex r = 1.0;
  for (int i = 0; i < p; ++i) r *= k;
  return r;
}
}  // namespace detail

/// S_n(x, k) and its gradient. At k = 0 this is the Laplace fundamental
/// solution with the sign convention Delta S_n = delta.
inline FundamentalSolutionValue fundamental_solution(int n, const Point& x, Complex k) {
  check_dimension(n);
  if (x.size() != n) throw Error(ErrorCode::kDomain, "point dimension mismatch");
  const double r = x.norm();
  if (r == 0.0) throw Error(ErrorCode::kDomain, "fundamental solution undefined at x = 0");
  const FsCoefficients c = fs_coefficients(n, r * k);
  const Complex kn2 = detail::ipow(k, n - 2);
  const double lr = std::log(r);
  const double rn2 = std::pow(r, n - 2);
  const Complex value = kn2 * c.j * lr + c.n / rn2;
  // Upsilon'(r)/r
  const Complex radial = kn2 * (k * k * c.j_slope * lr + c.j / (r * r)) +
                         k * k * c.n_slope / rn2 - (n - 2.0) * c.n / (rn2 * r * r);
  FundamentalSolutionValue out{value, CPoint(n)};
  for (int i = 0; i < n; ++i) out.gradient[i] = radial * x[i];
  return out;
}

/// d/dk S_n(x, k), by term-wise differentiation of the series.
inline Complex fundamental_solution_dk(int n, const Point& x, Complex k) {
  check_dimension(n);
  const double r = x.norm();
  if (r == 0.0) throw Error(ErrorCode::kDomain, "fundamental solution undefined at x = 0");
  const FsCoefficients c = fs_coefficients(n, r * k);
  const double lr = std::log(r);
  Complex out = 0.0;
  if (n > 2) out += (n - 2.0) * detail::ipow(k, n - 3) * c.j * lr;
  // d/dk J(rk) = r * (rk) * slope
  out += detail::ipow(k, n - 2) * r * r * k * c.j_slope * lr;
  out += r * r * k * c.n_slope / std::pow(r, n - 2);
  return out;
}

/// T^k_n(x) = J_n(k|x|) with gradient; identically zero for odd n.
inline FundamentalSolutionValue analytic_correction(int n, const Point& x, Complex k) {
  check_dimension(n);
  if (x.size() != n) throw Error(ErrorCode::kDomain, "point dimension mismatch");
  FundamentalSolutionValue out{0.0, CPoint::Zero(n)};
  if (n % 2 == 1) return out;
  const FsCoefficients c = fs_coefficients(n, x.norm() * k);
  out.value = c.j;
  for (int i = 0; i < n; ++i) out.gradient[i] = k * k * c.j_slope * x[i];
  return out;
}

// ---------------------------------------------------------------------------
// Two-dimensional fast path used by the quadrature kernels.

/// Radial data of S_2(., k) at distance r: value, Upsilon'(r)/r, and the
/// pieces needed by log-splitting quadrature.
struct Radial2 {
  Complex j;        // J_2(kr) = J0(kr)/(2 pi)
  Complex n;        // N_2(kr)
  Complex j_slope;  // J_2'(z)/z at z = kr
  Complex n_slope;  // N_2'(z)/z at z = kr
};

inline Radial2 radial2(double r, Complex k) {
  const FsCoefficients c = fs_coefficients(2, r * k);
  return {c.j, c.n, c.j_slope, c.n_slope};
}

struct Field2 {
  Complex value;
  CVec2 gradient;
};

inline Field2 fundamental_solution2(const Vec2& x, Complex k) {
  const double r = x.norm();
  if (r == 0.0) throw Error(ErrorCode::kDomain, "fundamental solution undefined at x = 0");
  const Radial2 c = radial2(r, k);
  const double lr = std::log(r);
  const Complex k2 = k * k;
  const Complex radial = k2 * c.j_slope * lr + c.j / (r * r) + k2 * c.n_slope;
  return {c.j * lr + c.n, CVec2(radial * x[0], radial * x[1])};
}

}  // namespace qpbie::specfun
