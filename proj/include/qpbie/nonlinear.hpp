#pragma once

// Nonlinear Robin condition on a shrinking hole:
//   Helmholtz, quasi-periodic in the perforated domain,
//   d_nu u = G(u) on p + eps * dOmega (nu outward from the hole).
// With u = S[theta((. - p)/eps)] this becomes Lambda[eps, r, theta] = 0 on the
// reference curve, r standing for eps log eps:
//   Lambda = 1/2 theta + N1 theta + eps N2 theta + r N3 theta
//            - G(eps M1 theta + eps M2 theta + r M3 theta)
// At eps = r = 0 it reduces to (1/2 I + K*_Laplace) theta = G(0).

#include "qpbie/perturbation.hpp"

#include <Eigen/LU>

#include <functional>
#include <memory>
#include <random>
#include <string>
#include <vector>

namespace qpbie {

struct RobinNonlinearity {
  std::function<Complex(Complex)> value;
  std::function<Complex(Complex)> derivative;
  std::string description;

  Complex operator()(Complex u) const { return value(u); }
};

inline RobinNonlinearity constant_nonlinearity(Complex c) {
  return {[c](Complex) { return c; }, [](Complex) { return Complex(0.0); }, "constant"};
}

inline RobinNonlinearity affine_nonlinearity(Complex a, Complex b) {
  return {[a, b](Complex u) { return a + b * u; }, [b](Complex) { return b; }, "affine"};
}

/// G(u) = offset + gamma u^2.
inline RobinNonlinearity quadratic_nonlinearity(Complex gamma, Complex offset = 0.0) {
  return {[gamma, offset](Complex u) { return offset + gamma * u * u; },
          [gamma](Complex u) { return 2.0 * gamma * u; }, "quadratic"};
}

/// G(u) = offset + gamma sin(u).
inline RobinNonlinearity sine_nonlinearity(Complex gamma, Complex offset = 0.0) {
  return {[gamma, offset](Complex u) { return offset + gamma * std::sin(u); },
          [gamma](Complex u) { return gamma * std::cos(u); }, "sine"};
}

/// Built-in nonlinearity by name: constant {c}, affine {a, b},
/// quadratic {gamma[, offset]}, sine {gamma[, offset]}.
inline RobinNonlinearity nonlinearity_from_name(const std::string& name, const std::vector<Complex>& params) {
  const auto need = [&](std::size_t lo, std::size_t hi) {
    if (params.size() < lo || params.size() > hi) {
      throw Error(ErrorCode::kConfig, "wrong number of parameters for nonlinearity '" + name + "'");
    }
  };
  const auto opt = [&](std::size_t i) { return i < params.size() ? params[i] : Complex(0.0); };
  if (name == "constant") {
    need(1, 1);
    return constant_nonlinearity(params[0]);
  }
  if (name == "affine") {
    need(2, 2);
    return affine_nonlinearity(params[0], params[1]);
  }
  if (name == "quadratic") {
    need(1, 2);
    return quadratic_nonlinearity(params[0], opt(1));
  }
  if (name == "sine") {
    need(1, 2);
    return sine_nonlinearity(params[0], opt(1));
  }
  throw Error(ErrorCode::kConfig, "unknown nonlinearity '" + name + "'");
}

/// Largest relative mismatch between G' and central differences of G at
/// random complex points in the unit square around 0.
inline double derivative_mismatch(const RobinNonlinearity& b, std::uint64_t seed = 0, int points = 20) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double h = 1e-5;
  double worst = 0.0;
  for (int i = 0; i < points; ++i) {
    const Complex z(u(rng), u(rng));
    const Complex fd = (b(z + h) - b(z - h)) / (2.0 * h);
    worst = std::max(worst, std::abs(fd - b.derivative(z)) / std::max(1.0, std::abs(b.derivative(z))));
  }
  return worst;
}

inline void check_derivative(const RobinNonlinearity& b, std::uint64_t seed = 0) {
  if (!(derivative_mismatch(b, seed) <= 1e-7)) {
    throw Error(ErrorCode::kDomain, "derivative of nonlinearity '" + b.description + "' is inconsistent");
  }
}

struct NewtonOptions {
  double tolerance = 1e-12;  // sup norm of Lambda
  int max_iterations = 30;
  int max_halvings = 8;
};

struct ContinuationState {
  double eps = 0.0;
  double r = 0.0;
  CVector theta;
  int newton_iterations = 0;
  double residual_norm = 0.0;
  std::vector<double> residual_history;  // sup norm of Lambda before each step and at acceptance
  std::vector<double> step_history;      // sup norm of each accepted Newton step
};

/// Ratios |s_{m+1}| / |s_m|^2 of consecutive Newton step sizes, skipping
/// steps below the noise floor; bounded for quadratic convergence.
inline std::vector<double> quadratic_ratios(const ContinuationState& s, double floor = 1e-13) {
  std::vector<double> out;
  for (std::size_t m = 0; m + 1 < s.step_history.size(); ++m) {
    if (s.step_history[m + 1] > floor) out.push_back(s.step_history[m + 1] / (s.step_history[m] * s.step_history[m]));
  }
  return out;
}

/// Log-argument factor r = tau_n eps log eps (tau_2 = 1).
inline double log_argument(double eps) { return eps > 0.0 ? eps * std::log(eps) : 0.0; }

/// Geometric eps grid from min(validated radius, eps0 / 4) down to eps_min.
inline std::vector<double> default_schedule(const HoleGeometry& h, const Lattice& lat, int points = 8,
                                            double eps_min = 1e-3) {
  if (points < 2) throw Error(ErrorCode::kDomain, "schedule needs at least 2 points");
  const double top = std::min(h.validated_radius(lat), 0.25 * h.epsilon0(lat));
  std::vector<double> out;
  for (int i = 0; i < points; ++i) out.push_back(top * std::pow(eps_min / top, i / (points - 1.0)));
  return out;
}

class RobinProblem {
 public:
  RobinProblem(HoleGeometry hole, const GreenEvaluator& g, RobinNonlinearity b, NewtonOptions opt = {})
      : hole_(std::move(hole)), g_(g), b_(std::move(b)), opt_(opt) {
    const int n = hole_.reference.n;
    const CMatrix m = assemble_free_space(hole_.reference, 0.0, false, false, true).kadj +
                      0.5 * CMatrix::Identity(n, n);
    const CVector rhs = CVector::Constant(n, b_(0.0));
    const Eigen::PartialPivLU<CMatrix> lu(m);
    limit_ = lu.solve(rhs);
    limit_ += lu.solve(rhs - m * limit_);
    const double res = (m * limit_ - rhs).cwiseAbs().maxCoeff();
    if (!std::isfinite(res) || res > 1e-12 * std::max(1.0, rhs.cwiseAbs().maxCoeff())) {
      throw Error(ErrorCode::kIllConditioned, "limit equation is singular");
    }
  }

  const HoleGeometry& hole() const { return hole_; }
  const GreenEvaluator& green() const { return g_; }
  const RobinNonlinearity& nonlinearity() const { return b_; }

  /// theta~: solution of (1/2 I + K*_Laplace) theta = G(0) on the reference curve.
  const CVector& limit_density() const { return limit_; }

  CVector lambda_residual(double eps, double r, const CVector& theta) const {
    const RescaledOperators& ops = operators(eps);
    const CVector w = inner(ops, eps, r, theta);
    CVector out = 0.5 * theta + ops.n[0] * theta + eps * (ops.n[1] * theta) + r * (ops.n[2] * theta);
    for (Eigen::Index i = 0; i < out.size(); ++i) out[i] -= b_(w[i]);
    return out;
  }

  CMatrix lambda_jacobian(double eps, double r, const CVector& theta) const {
    const RescaledOperators& ops = operators(eps);
    const CVector w = inner(ops, eps, r, theta);
    const int n = hole_.reference.n;
    CMatrix inner_op = eps * (ops.m[0] + ops.m[1]) + r * ops.m[2];
    for (int i = 0; i < n; ++i) inner_op.row(i) *= b_.derivative(w[i]);
    return 0.5 * CMatrix::Identity(n, n) + ops.n[0] + eps * ops.n[1] + r * ops.n[2] - inner_op;
  }

  /// Newton for Lambda[eps, eps log eps, .] = 0 from the given start.
  ContinuationState solve_theta(double eps, const CVector& start) const {
    if (!(eps >= 0.0) || !(eps <= hole_.validated_radius(g_.lattice()))) {
      throw Error(ErrorCode::kOutOfRange, "eps outside the validated radius");
    }
    ContinuationState s;
    s.eps = eps;
    s.r = log_argument(eps);
    s.theta = start;
    CVector res = lambda_residual(eps, s.r, s.theta);
    double norm = res.cwiseAbs().maxCoeff();
    s.residual_history.push_back(norm);
    while (norm > opt_.tolerance) {
      if (s.newton_iterations == opt_.max_iterations) {
        throw Error(ErrorCode::kNewtonDivergence, "Newton did not converge at eps = " + std::to_string(eps));
      }
      const Eigen::PartialPivLU<CMatrix> lu(lambda_jacobian(eps, s.r, s.theta));
      const CVector step = lu.solve(-res);
      double lambda = 1.0;
      CVector trial, trial_res;
      double trial_norm = 0.0;
      for (int h = 0;; ++h) {
        trial = s.theta + lambda * step;
        trial_res = lambda_residual(eps, s.r, trial);
        trial_norm = trial_res.cwiseAbs().maxCoeff();
        if (trial_norm < norm || trial_norm <= opt_.tolerance) break;
        if (h == opt_.max_halvings) {
          throw Error(ErrorCode::kNewtonDivergence,
                      "Newton step damping exhausted at eps = " + std::to_string(eps));
        }
        lambda *= 0.5;
      }
      s.step_history.push_back(lambda * step.cwiseAbs().maxCoeff());
      s.theta = std::move(trial);
      res = std::move(trial_res);
      norm = trial_norm;
      ++s.newton_iterations;
      s.residual_history.push_back(norm);
    }
    s.residual_norm = norm;
    return s;
  }

  /// Continuation along eps values (in the given order), the first solve
  /// warm-started from theta~ and each later one from its predecessor.
  std::vector<ContinuationState> continuation(const std::vector<double>& eps_values) const {
    std::vector<ContinuationState> out;
    CVector start = limit_;
    for (double eps : eps_values) {
      out.push_back(solve_theta(eps, start));
      start = out.back().theta;
    }
    return out;
  }

  /// u(eps, x) = S[theta((. - p)/eps)](x) at points of the perforated domain.
  FieldSample reconstruct_field(const ContinuationState& s, const std::vector<Vec2>& points,
                                FieldOptions opt = {}) const {
    const DiscreteCurve phys = hole_.physical(s.eps, g_.lattice());
    return field_eval(PotentialKind::kSingle, phys, s.theta, g_, points, opt);
  }

  /// sup |d_nu u - G(u)| at the midpoints between nodes of the physical
  /// curve, with traces from the direct (unscaled) boundary operators.
  double boundary_condition_residual(const ContinuationState& s) const {
    const DiscreteCurve phys = hole_.physical(s.eps, g_.lattice());
    std::vector<double> params(static_cast<std::size_t>(phys.n));
    for (int j = 0; j < phys.n; ++j) params[static_cast<std::size_t>(j)] = phys.t[j] + kPi / phys.n;
    const CVector u = apply_at_parameters(OperatorKind::kSingle, phys, g_, s.theta, params);
    const CVector ks = apply_at_parameters(OperatorKind::kAdjointDouble, phys, g_, s.theta, params);
    const TrigInterpolant th(s.theta);
    double worst = 0.0;
    for (std::size_t i = 0; i < params.size(); ++i) {
      const auto e = static_cast<Eigen::Index>(i);
      worst = std::max(worst, std::abs(0.5 * th(params[i]) + ks[e] - b_(u[e])));
    }
    return worst;
  }

 private:
  const RescaledOperators& operators(double eps) const {
    if (!cache_ || cache_->eps != eps) {
      cache_ = std::make_shared<RescaledOperators>(rescaled_operators(eps, hole_, g_));
    }
    return *cache_;
  }

  CVector inner(const RescaledOperators& ops, double eps, double r, const CVector& theta) const {
    return eps * (ops.m[0] * theta + ops.m[1] * theta) + r * (ops.m[2] * theta);
  }

  HoleGeometry hole_;
  const GreenEvaluator& g_;
  RobinNonlinearity b_;
  NewtonOptions opt_;
  CVector limit_;
  mutable std::shared_ptr<RescaledOperators> cache_;
};

// ---------------------------------------------------------------------------
// Far-field behaviour u(eps, x) = eps U[eps, eps log eps](x).

struct FarFieldFit {
  std::vector<Vec2> probes;
  std::vector<double> exponents;  // slope of log|u| against log eps
  CVector c0;                     // fitted U[0, 0](x)
  CVector predicted;              // G(x - p) * int theta~ dsigma
  std::vector<double> fit_residuals;
  std::vector<std::string> warnings;
};

/// Fits u(eps, x) / eps = c0 + c1 eps + c2 eps log eps at each probe over the
/// sweep, and the leading exponent of |u|.
inline FarFieldFit far_field_scaling(const RobinProblem& prob, const std::vector<ContinuationState>& sweep,
                                     const std::vector<Vec2>& probes) {
  const HoleGeometry& h = prob.hole();
  const Lattice& lat = prob.green().lattice();
  double reach = 0.0;
  for (const ContinuationState& s : sweep) {
    if (!(s.eps > 0.0)) throw Error(ErrorCode::kDomain, "far-field fit needs eps > 0");
    for (const Vec2& y : h.reference.points) reach = std::max(reach, s.eps * y.norm());
  }
  for (const Vec2& x : probes) {
    Vec2 d = x - h.p;
    for (int i = 0; i < 2; ++i) d[i] -= lat.q[i] * std::round(d[i] / lat.q[i]);
    if (d.norm() <= reach) throw Error(ErrorCode::kDomain, "probe too close to a copy of the hole");
  }
  FarFieldFit fit;
  fit.probes = probes;
  const int m = static_cast<int>(sweep.size());
  if (m < 4) fit.warnings.push_back("sweep has fewer than 4 points; fit is degenerate or exact");
  if (m < 3) throw Error(ErrorCode::kDomain, "far-field fit needs at least 3 eps values");

  CMatrix u(m, static_cast<Eigen::Index>(probes.size()));
  for (int i = 0; i < m; ++i) u.row(i) = prob.reconstruct_field(sweep[static_cast<std::size_t>(i)], probes).values.transpose();

  const double mass_re = (h.reference.weights.array() * prob.limit_density().real().array()).sum();
  const double mass_im = (h.reference.weights.array() * prob.limit_density().imag().array()).sum();
  const Complex mass(mass_re, mass_im);

  Eigen::MatrixXd design(m, 3);
  Eigen::VectorXd le(m);
  for (int i = 0; i < m; ++i) {
    const double e = sweep[static_cast<std::size_t>(i)].eps;
    design(i, 0) = 1.0;
    design(i, 1) = e;
    design(i, 2) = e * std::log(e);
    le[i] = std::log(e);
  }
  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  fit.c0.resize(static_cast<Eigen::Index>(probes.size()));
  fit.predicted.resize(fit.c0.size());
  for (Eigen::Index p = 0; p < fit.c0.size(); ++p) {
    CVector y(m);
    Eigen::VectorXd ly(m);
    for (int i = 0; i < m; ++i) {
      y[i] = u(i, p) / sweep[static_cast<std::size_t>(i)].eps;
      ly[i] = std::log(std::abs(u(i, p)));
    }
    const Eigen::VectorXd cr = qr.solve(y.real()), ci = qr.solve(y.imag());
    fit.c0[p] = Complex(cr[0], ci[0]);
    const CVector model = design.cast<Complex>() * (cr.cast<Complex>() + kI * ci.cast<Complex>());
    fit.fit_residuals.push_back((model - y).cwiseAbs().maxCoeff());
    if (!ly.allFinite()) {
      fit.exponents.push_back(std::numeric_limits<double>::quiet_NaN());
      fit.warnings.push_back("field vanishes at a probe; exponent undefined");
    } else {
      const double mx = le.mean(), my = ly.mean();
      fit.exponents.push_back(((le.array() - mx) * (ly.array() - my)).sum() / (le.array() - mx).square().sum());
    }
    fit.predicted[p] = prob.green().value(probes[static_cast<std::size_t>(p)] - h.p) * mass;
  }
  return fit;
}

}  // namespace qpbie
