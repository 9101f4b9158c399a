#pragma once

// Quasi-periodic Green's function of the Helmholtz operator in the plane,
// evaluated by Ewald splitting, and its regular part G - S_2(., k).

#include "qpbie/lattice.hpp"
#include "qpbie/specfun.hpp"

#include <boost/math/special_functions/expint.hpp>

#include <cmath>
#include <vector>

namespace qpbie {

using Field2 = specfun::Field2;

struct Field2H {
  Complex value;
  CVec2 gradient;
  CMat2 hessian;
};

namespace detail {

// sum_j w^j/j! E_{j+1}(a) and sum_j w^j/j! E_j(a), the screened-image radial
// profile and its derivative companion.
struct ScreenedSums {
  Complex f;    // with E_{j+1}
  Complex df;   // with E_j
  Complex ddf;  // with E_{j-1}
};

inline ScreenedSums screened_sums(double a, Complex w) {
  const double ea = std::exp(-a);
  double e_prev = ea / a;                    // E_0
  double e_cur = boost::math::expint(1, a);  // E_1
  Complex f = e_cur, df = e_prev, ddf = ea * (1.0 / a + 1.0 / (a * a));
  Complex c = 1.0;
  for (int j = 1; j < 400; ++j) {
    c *= w / static_cast<double>(j);
    const double e_next = (ea - a * e_cur) / j;  // E_{j+1}
    const Complex tf = c * e_next, tdf = c * e_cur, tddf = c * e_prev;
    f += tf;
    df += tdf;
    ddf += tddf;
    e_prev = e_cur;
    e_cur = e_next;
    if (std::abs(tf) <= 1e-17 * std::abs(f) && std::abs(tdf) <= 1e-17 * std::abs(df) &&
        std::abs(tddf) <= 1e-17 * std::abs(ddf) && static_cast<double>(j) > std::abs(w)) {
      break;
    }
  }
  return {f, df, ddf};
}

}  // namespace detail

/// Ewald evaluator for G^k_{q,eta} in two dimensions. Immutable after
/// construction; evaluation methods are safe to call concurrently.
class GreenEvaluator {
 public:
  struct Options {
    double ewald_split = 0.0;  // 0 selects sqrt(pi) / max q
    double tolerance = 1e-14;
  };

  GreenEvaluator(Lattice lattice, Complex k) : GreenEvaluator(std::move(lattice), k, Options{}) {}

  GreenEvaluator(Lattice lattice, Complex k, Options opt)
      : lattice_(std::move(lattice)), wave_(make_wave_context(lattice_, k)), tol_(opt.tolerance) {
    if (lattice_.dim() != 2) throw Error(ErrorCode::kDomain, "Ewald evaluator is two-dimensional");
    if (wave_.resonant()) {
      throw Error(ErrorCode::kResonance,
                  "k^2 lies in the quasi-periodic spectrum; Green's function refused");
    }
    split_ = opt.ewald_split > 0.0 ? opt.ewald_split : std::sqrt(kPi) / lattice_.max_side();
    w_ = k * k / (4.0 * split_ * split_);
    build_spectral();
    build_spatial();
  }

  const Lattice& lattice() const { return lattice_; }
  const WaveContext& wave() const { return wave_; }
  Complex k() const { return wave_.k; }
  double ewald_split() const { return split_; }
  double tolerance() const { return tol_; }
  int spectral_truncation() const { return spectral_radius_; }
  int spatial_truncation() const { return spatial_radius_; }

  /// G and grad G at x. Throws kNearLattice within 1e-8 min q of a lattice point.
  Field2 eval(const Vec2& x) const {
    Complex phase;
    const Vec2 xr = reduce(x, phase);
    if (xr.norm() <= 1e-8 * lattice_.min_side()) {
      throw Error(ErrorCode::kNearLattice, "Green's function evaluated at a lattice point");
    }
    Field2 out = spectral(xr);
    for (const auto& img : images_) accumulate_image(xr, img, out);
    out.value *= phase;
    out.gradient *= phase;
    return out;
  }

  Complex value(const Vec2& x) const { return eval(x).value; }

  /// G with gradient and Hessian.
  Field2H eval_hessian(const Vec2& x) const {
    Complex phase;
    const Vec2 xr = reduce(x, phase);
    if (xr.norm() <= 1e-8 * lattice_.min_side()) {
      throw Error(ErrorCode::kNearLattice, "Green's function evaluated at a lattice point");
    }
    Field2H out{0.0, CVec2::Zero(), CMat2::Zero()};
    for_each_mode(xr, [&](double xi1, double xi2, Complex t) {
      out.value += t;
      out.gradient[0] += kI * xi1 * t;
      out.gradient[1] += kI * xi2 * t;
      out.hessian(0, 0) -= xi1 * xi1 * t;
      out.hessian(0, 1) -= xi1 * xi2 * t;
      out.hessian(1, 1) -= xi2 * xi2 * t;
    });
    const double e2 = split_ * split_;
    for (const auto& img : images_) {
      const Vec2 d = xr - img.offset;
      const double a = e2 * d.squaredNorm();
      if (a > a_cut_) continue;
      const detail::ScreenedSums s = detail::screened_sums(a, w_);
      out.value -= img.phase * s.f / (4.0 * kPi);
      const Complex gfac = img.phase * s.df * (e2 / kTwoPi);
      out.gradient[0] += gfac * d[0];
      out.gradient[1] += gfac * d[1];
      const Complex hfac = -img.phase * s.ddf * (e2 * e2 / kPi);
      out.hessian(0, 0) += gfac + hfac * d[0] * d[0];
      out.hessian(0, 1) += hfac * d[0] * d[1];
      out.hessian(1, 1) += gfac + hfac * d[1] * d[1];
    }
    out.hessian(1, 0) = out.hessian(0, 1);
    out.value *= phase;
    out.gradient *= phase;
    out.hessian *= phase;
    return out;
  }

  /// R = G - S_2(., k), including its analytic value at x = 0.
  Field2 regular_part(const Vec2& x) const {
    if (x.norm() == 0.0) return regular_part_at_origin();
    const Field2 g = eval(x);
    const Field2 s = specfun::fundamental_solution2(x, wave_.k);
    return {g.value - s.value, g.gradient - s.gradient};
  }

  /// R(0) and grad R(0). Spectral part plus non-central images evaluated at
  /// the origin, plus the limit of (central screened image - S_2).
  Field2 regular_part_at_origin() const {
    const Vec2 zero = Vec2::Zero();
    Field2 out = spectral(zero);
    for (const auto& img : images_) {
      if (img.offset.norm() == 0.0) continue;
      accumulate_image(zero, img, out);
    }
    Complex tail = 0.0, c = 1.0;
    for (int j = 1; j < 400; ++j) {
      c *= w_ / static_cast<double>(j);
      const Complex t = c / static_cast<double>(j);
      tail += t;
      if (std::abs(t) <= 1e-17 * std::max(1.0, std::abs(tail)) && j > std::abs(w_)) break;
    }
    out.value += (kEulerGamma + 2.0 * std::log(split_)) / (4.0 * kPi) - tail / (4.0 * kPi);
    return out;
  }

  /// Reduces x into the central cell [-q/2, q/2)^2; G(x) = phase * G(reduced).
  Vec2 reduce(const Vec2& x, Complex& phase) const {
    Vec2 xr;
    double arg = 0.0;
    for (int i = 0; i < 2; ++i) {
      const double m = std::floor(x[i] / lattice_.q[i] + 0.5);
      xr[i] = x[i] - m * lattice_.q[i];
      arg += lattice_.eta[i] * m * lattice_.q[i];
    }
    phase = std::polar(1.0, arg);
    return xr;
  }

 private:
  struct Mode {
    double xi1, xi2;
    Complex coeff;  // -exp((k^2-|xi|^2)/(4E^2)) / (|Q| (|xi|^2 - k^2))
  };
  struct Image {
    Vec2 offset;  // q m
    Complex phase;  // exp(i eta . q m)
  };

  void build_spectral() {
    const Complex k2 = wave_.k * wave_.k;
    const double e2 = 4.0 * split_ * split_;
    const double area = lattice_.cell_measure();
    const int s_min = default_search_radius(lattice_, wave_.k);
    int quiet = 0;
    for (int s = 0; s < 400; ++s) {
      double shell = 0.0;
      for_each_shell(s, [&](int z1, int z2) {
        const double xi1 = kTwoPi * z1 / lattice_.q[0] + lattice_.eta[0];
        const double xi2 = kTwoPi * z2 / lattice_.q[1] + lattice_.eta[1];
        const double xi_sq = xi1 * xi1 + xi2 * xi2;
        const Complex c = -std::exp((k2 - xi_sq) / e2) / (area * (xi_sq - k2));
        shell += std::abs(c) * (1.0 + std::sqrt(xi_sq));
        modes_.push_back({xi1, xi2, c});
      });
      spectral_radius_ = s;
      quiet = (s >= s_min && shell < tol_ / 10.0) ? quiet + 1 : 0;
      if (quiet == 2) break;
    }
    if (quiet < 2) throw Error(ErrorCode::kNotConverged, "spectral Ewald sum did not converge");
    const int w = 2 * spectral_radius_ + 1;
    coeff_grid_.assign(static_cast<std::size_t>(w * w), 0.0);
    for (const auto& m : modes_) {
      const int a = static_cast<int>(std::lround((m.xi1 - lattice_.eta[0]) * lattice_.q[0] / kTwoPi));
      const int b = static_cast<int>(std::lround((m.xi2 - lattice_.eta[1]) * lattice_.q[1] / kTwoPi));
      coeff_grid_[static_cast<std::size_t>((a + spectral_radius_) * w + b + spectral_radius_)] = m.coeff;
    }
  }

  void build_spatial() {
    const double hmin = lattice_.min_side();
    int quiet = 0;
    for (int s = 0; s < 400; ++s) {
      for_each_shell(s, [&](int m1, int m2) {
        const Vec2 off(m1 * lattice_.q[0], m2 * lattice_.q[1]);
        images_.push_back({off, std::polar(1.0, lattice_.eta.dot(off))});
      });
      spatial_radius_ = s;
      // Bound for shell s + 1 when x is in the central cell.
      const double dist = (s + 0.5) * hmin;
      const double a = split_ * split_ * dist * dist;
      const double bound = 8.0 * (s + 1) * std::exp(std::abs(w_) - a) / a *
                           (1.0 + split_ * split_ * dist) / (4.0 * kPi);
      quiet = (s >= 1 && bound < tol_ / 10.0) ? quiet + 1 : 0;
      if (quiet == 2) break;
    }
    if (quiet < 2) throw Error(ErrorCode::kNotConverged, "spatial Ewald sum did not converge");
    // Individual images below tolerance are skipped at evaluation time.
    const double e2 = split_ * split_;
    a_cut_ = 1.0;
    while (std::exp(std::abs(w_) - a_cut_) / a_cut_ * (1.0 + e2 * (1.0 + std::sqrt(a_cut_ / e2))) /
               (4.0 * kPi) > tol_ / 100.0) {
      a_cut_ += 0.25;
    }
  }

  template <class F>
  static void for_each_shell(int s, F&& f) {
    if (s == 0) {
      f(0, 0);
      return;
    }
    for (int i = -s; i <= s; ++i) {
      f(i, -s);
      f(i, s);
    }
    for (int j = -s + 1; j <= s - 1; ++j) {
      f(-s, j);
      f(s, j);
    }
  }

  // Calls f(xi1, xi2, term) for every retained mode, with the plane waves
  // built from one-dimensional phase recurrences.
  template <class F>
  void for_each_mode(const Vec2& x, F&& f) const {
    const int s = spectral_radius_, w = 2 * s + 1;
    const std::vector<Complex> p1 = axis_phases(x, 0), p2 = axis_phases(x, 1);
    for (int a = 0; a < w; ++a) {
      const double xi1 = kTwoPi * (a - s) / lattice_.q[0] + lattice_.eta[0];
      for (int b = 0; b < w; ++b) {
        const double xi2 = kTwoPi * (b - s) / lattice_.q[1] + lattice_.eta[1];
        f(xi1, xi2, coeff_grid_[static_cast<std::size_t>(a * w + b)] * p1[a] * p2[b]);
      }
    }
  }

  std::vector<Complex> axis_phases(const Vec2& x, int axis) const {
    const int s = spectral_radius_;
    std::vector<Complex> out(static_cast<std::size_t>(2 * s + 1));
    const double q = lattice_.q[axis];
    const Complex step = std::polar(1.0, kTwoPi / q * x[axis]);
    Complex cur = std::polar(1.0, (lattice_.eta[axis] - kTwoPi * s / q) * x[axis]);
    for (int a = 0; a <= 2 * s; ++a) {
      out[static_cast<std::size_t>(a)] = cur;
      cur *= step;
    }
    return out;
  }

  Field2 spectral(const Vec2& x) const {
    Complex v = 0.0, g1 = 0.0, g2 = 0.0;
    for_each_mode(x, [&](double xi1, double xi2, Complex t) {
      v += t;
      g1 += xi1 * t;
      g2 += xi2 * t;
    });
    return {v, CVec2(kI * g1, kI * g2)};
  }

  void accumulate_image(const Vec2& x, const Image& img, Field2& out) const {
    const Vec2 d = x - img.offset;
    const double a = split_ * split_ * d.squaredNorm();
    if (a == 0.0 || a > a_cut_) return;
    const detail::ScreenedSums s = detail::screened_sums(a, w_);
    out.value -= img.phase * s.f / (4.0 * kPi);
    const Complex gfac = img.phase * s.df * (split_ * split_ / kTwoPi);
    out.gradient[0] += gfac * d[0];
    out.gradient[1] += gfac * d[1];
  }

  Lattice lattice_;
  WaveContext wave_;
  double tol_;
  double split_ = 0.0;
  Complex w_;
  int spectral_radius_ = 0;
  int spatial_radius_ = 0;
  std::vector<Mode> modes_;
  std::vector<Complex> coeff_grid_;
  std::vector<Image> images_;
  double a_cut_ = 800.0;
};

/// H_0^{(1)}(z) for Im z >= 0, from the entire building blocks inside the
/// series disk and the Hankel expansion outside.
inline Complex hankel1_0(Complex z) {
  if (std::abs(z) <= specfun::kSeriesRadius) {
    const Complex j0 = specfun::entire_bessel_j(0.0, z);
    const Complex y0 = specfun::entire_neumann(2, z) + 2.0 / kPi * (std::log(z / 2.0) + kEulerGamma) * j0;
    return j0 + kI * y0;
  }
  return specfun::detail::hankel_asymptotic(0.0, z).h1;
}

struct OracleResult {
  Complex value;
  double tail_bound;
};

/// Direct image sum  sum_m -(i/4) H_0^{(1)}(k|x - q m|) exp(i eta . q m)
/// over |m|_inf <= truncation. Needs Im k >= 0.3 for absolute convergence at
/// a usable rate. With no resonances this equals G^k_{q,eta} exactly: the
/// difference is a quasi-periodic entire Helmholtz solution whose Fourier
/// coefficients all vanish.
inline OracleResult image_sum_oracle(const Lattice& lat, Complex k, const Vec2& x, int truncation) {
  if (k.imag() < 0.3) throw Error(ErrorCode::kDomain, "image sum oracle needs Im k >= 0.3");
  if (lat.dim() != 2) throw Error(ErrorCode::kDomain, "image sum oracle is two-dimensional");
  Complex sum = 0.0;
  for (int m1 = -truncation; m1 <= truncation; ++m1) {
    for (int m2 = -truncation; m2 <= truncation; ++m2) {
      const Vec2 off(m1 * lat.q[0], m2 * lat.q[1]);
      const double r = (x - off).norm();
      if (r == 0.0) throw Error(ErrorCode::kNearLattice, "oracle evaluated at a lattice point");
      sum += -0.25 * kI * hankel1_0(k * r) * std::polar(1.0, lat.eta.dot(off));
    }
  }
  // |H_0(z)| <= sqrt(2/(pi|z|)) e^{-Im z} (1 + 1/(8|z|)) outside the sum box.
  double tail = 0.0;
  const double h = lat.min_side();
  for (int s = truncation + 1; s < truncation + 400; ++s) {
    const double r = std::max((s - 0.5) * h - x.norm(), 1e-3);
    const double z = std::abs(k) * r;
    tail += 8.0 * s * 0.25 * std::sqrt(2.0 / (kPi * z)) * (1.0 + 1.0 / (8.0 * z)) *
            std::exp(-k.imag() * r);
  }
  return {sum, tail};
}

}  // namespace qpbie
