#pragma once

// Exterior quasi-periodic Dirichlet and Neumann problems on the perforated
// domain, solved by boundary integral equations:
//   Dirichlet: (-1/2 I + K + i A V) mu = g,  u = D[mu] + i A S[mu]
//   Neumann:   ( 1/2 I + K*) mu = h,         u = S[mu]
// A is a caller-supplied flag (1 when k^2 is an interior Neumann eigenvalue
// of the hole).

#include "qpbie/potentials.hpp"

#include <boost/math/special_functions/bessel.hpp>
#include <boost/math/special_functions/bessel_prime.hpp>
#include <boost/math/tools/roots.hpp>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include <functional>
#include <string>
#include <vector>

namespace qpbie {

enum class BoundaryProblem { kDirichlet, kNeumann };

inline const char* to_string(BoundaryProblem p) {
  return p == BoundaryProblem::kDirichlet ? "dirichlet" : "neumann";
}

/// Boundary data as a function of the boundary point (position, tangent).
using BoundaryData = std::function<Complex(const CurvePoint&)>;

struct SolverOptions {
  double linear_tolerance = 1e-10;    // relative residual of the refined linear solve
  double boundary_tolerance = 1e-6;   // off-node boundary-condition mismatch before warning
  double condition_warning = 1e8;
};

struct BVPSolution {
  BoundaryProblem problem = BoundaryProblem::kDirichlet;
  DiscreteCurve curve;
  CVector density;
  int a_flag = 0;
  double condition_estimate = 0.0;
  double linear_residual = 0.0;
  double boundary_residual = 0.0;
  std::vector<std::string> warnings;
};

namespace detail {

struct LinearSolve {
  CVector x;
  double condition = 0.0;
  double residual = 0.0;
};

// Dense LU with one step of iterative refinement.
inline LinearSolve lu_solve(const CMatrix& a, const CVector& b) {
  const Eigen::PartialPivLU<CMatrix> lu(a);
  LinearSolve s;
  s.x = lu.solve(b);
  s.x += lu.solve(b - a * s.x);
  const double rc = lu.rcond();
  s.condition = rc > 0.0 ? 1.0 / rc : std::numeric_limits<double>::infinity();
  const double scale = std::max(b.norm(), std::numeric_limits<double>::min());
  s.residual = (b - a * s.x).norm() / scale;
  return s;
}

// Midpoints between nodes, where the Nystrom interpolant is least trusted.
inline std::vector<double> check_parameters(const DiscreteCurve& c) {
  std::vector<double> t(static_cast<std::size_t>(c.n));
  for (int j = 0; j < c.n; ++j) t[static_cast<std::size_t>(j)] = c.t[j] + kPi / c.n;
  return t;
}

inline CVector sample(const DiscreteCurve& c, const BoundaryData& data) {
  CVector v(c.n);
  for (int j = 0; j < c.n; ++j) v[j] = data(c.curve.at(c.t[j]));
  return v;
}

inline void finish(BVPSolution& s, const LinearSolve& ls, const SolverOptions& opt) {
  s.condition_estimate = ls.condition;
  s.linear_residual = ls.residual;
  if (!std::isfinite(ls.condition) || !(ls.residual <= opt.linear_tolerance)) {
    throw Error(ErrorCode::kIllConditioned,
                "linear solve residual " + std::to_string(ls.residual) + " exceeds tolerance");
  }
  if (ls.condition > opt.condition_warning) {
    s.warnings.push_back("condition estimate " + std::to_string(ls.condition) +
                         " is large; k may be close to an eigenvalue of the perforated domain");
  }
}

}  // namespace detail

/// System matrix T = -1/2 I + K + i A V.
inline CMatrix dirichlet_matrix(const DiscreteCurve& c, const GreenEvaluator& g, int a_flag) {
  const OperatorSet ops = assemble_operators(c, g, a_flag != 0, true, false);
  CMatrix t = ops.k - 0.5 * CMatrix::Identity(c.n, c.n);
  if (a_flag != 0) t += kI * ops.v;
  return t;
}

/// System matrix M = 1/2 I + K*.
inline CMatrix neumann_matrix(const DiscreteCurve& c, const GreenEvaluator& g) {
  return assemble(OperatorKind::kAdjointDouble, c, g).matrix + 0.5 * CMatrix::Identity(c.n, c.n);
}

namespace detail {

// data_at(t) supplies the boundary data between nodes for the residual check.
inline BVPSolution solve(BoundaryProblem problem, const DiscreteCurve& c, const GreenEvaluator& g,
                         const CVector& data, const std::function<Complex(double)>& data_at, int a_flag,
                         const SolverOptions& opt) {
  if (data.size() != c.n) throw Error(ErrorCode::kDomain, "boundary data length does not match curve");
  if (a_flag != 0 && a_flag != 1) throw Error(ErrorCode::kDomain, "A flag must be 0 or 1");
  BVPSolution s;
  s.problem = problem;
  s.curve = c;
  s.a_flag = a_flag;
  const bool dirichlet = problem == BoundaryProblem::kDirichlet;
  const LinearSolve ls = lu_solve(dirichlet ? dirichlet_matrix(c, g, a_flag) : neumann_matrix(c, g), data);
  s.density = ls.x;
  finish(s, ls, opt);

  const std::vector<double> params = check_parameters(c);
  const TrigInterpolant mu(s.density);
  CVector lhs =
      apply_at_parameters(dirichlet ? OperatorKind::kDouble : OperatorKind::kAdjointDouble, c, g, s.density, params);
  if (a_flag != 0) lhs += kI * apply_at_parameters(OperatorKind::kSingle, c, g, s.density, params);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto e = static_cast<Eigen::Index>(i);
    lhs[e] += (dirichlet ? -0.5 : 0.5) * mu(params[i]) - data_at(params[i]);
  }
  s.boundary_residual = lhs.cwiseAbs().maxCoeff();
  if (s.boundary_residual > opt.boundary_tolerance) {
    s.warnings.push_back("boundary condition residual " + std::to_string(s.boundary_residual) +
                         " at off-node points");
  }
  return s;
}

}  // namespace detail

/// Dirichlet problem with boundary data known only at the nodes; the
/// off-node check compares against its trigonometric interpolant.
inline BVPSolution solve_dirichlet(const DiscreteCurve& c, const GreenEvaluator& g, const CVector& data,
                                   int a_flag = 0, const SolverOptions& opt = {}) {
  const TrigInterpolant gi(data);
  return detail::solve(BoundaryProblem::kDirichlet, c, g, data, gi, a_flag, opt);
}

/// Dirichlet problem with data given as a function on the curve; the
/// off-node check uses the exact data.
inline BVPSolution solve_dirichlet(const DiscreteCurve& c, const GreenEvaluator& g, const BoundaryData& data,
                                   int a_flag = 0, const SolverOptions& opt = {}) {
  return detail::solve(BoundaryProblem::kDirichlet, c, g, detail::sample(c, data),
                       [&](double t) { return data(c.curve.at(t)); }, a_flag, opt);
}

inline BVPSolution solve_neumann(const DiscreteCurve& c, const GreenEvaluator& g, const CVector& data,
                                 const SolverOptions& opt = {}) {
  const TrigInterpolant hi(data);
  return detail::solve(BoundaryProblem::kNeumann, c, g, data, hi, 0, opt);
}

inline BVPSolution solve_neumann(const DiscreteCurve& c, const GreenEvaluator& g, const BoundaryData& data,
                                 const SolverOptions& opt = {}) {
  return detail::solve(BoundaryProblem::kNeumann, c, g, detail::sample(c, data),
                       [&](double t) { return data(c.curve.at(t)); }, 0, opt);
}

/// The solution field u at points of the perforated domain.
inline FieldSample evaluate_solution(const BVPSolution& s, const GreenEvaluator& g,
                                     const std::vector<Vec2>& points, FieldOptions opt = {}) {
  if (s.problem == BoundaryProblem::kNeumann) {
    return field_eval(PotentialKind::kSingle, s.curve, s.density, g, points, opt);
  }
  FieldSample u = field_eval(PotentialKind::kDouble, s.curve, s.density, g, points, opt);
  if (s.a_flag != 0) {
    const FieldSample v = field_eval(PotentialKind::kSingle, s.curve, s.density, g, points, opt);
    u.values += kI * v.values;
    for (std::size_t p = 0; p < u.gradients.size(); ++p) u.gradients[p] += kI * v.gradients[p];
  }
  return u;
}

// ---------------------------------------------------------------------------
// Interior Neumann eigenvalues of a disk, for choosing the A flag.

struct DiskEigenvalue {
  double k;  // wavenumber: zero of J_m'(k rho)
  int m;     // angular order (multiplicity 2 for m > 0)
  int index;
};

/// Wavenumbers 0 < k <= k_max with J_m'(k rho) = 0, sorted.
inline std::vector<DiskEigenvalue> disk_neumann_eigenvalues(double rho, double k_max) {
  if (!(rho > 0.0) || !(k_max > 0.0)) throw Error(ErrorCode::kDomain, "radius and k_max must be positive");
  using boost::math::cyl_bessel_j_prime;
  std::vector<DiskEigenvalue> out;
  const double x_max = k_max * rho;
  const double step = 0.05;
  for (int m = 0; m <= static_cast<int>(x_max) + 1; ++m) {
    int index = 0;
    double a = 1e-3, fa = cyl_bessel_j_prime(m, a);
    for (double b = a + step; b <= x_max + step; b += step) {
      const double fb = cyl_bessel_j_prime(m, b);
      if ((fa < 0.0) != (fb < 0.0) && fa != 0.0) {
        boost::uintmax_t iters = 200;
        const auto root = boost::math::tools::toms748_solve(
            [m](double x) { return cyl_bessel_j_prime(m, x); }, a, b, fa, fb,
            boost::math::tools::eps_tolerance<double>(52), iters);
        const double x = 0.5 * (root.first + root.second);
        if (x <= x_max) out.push_back({x / rho, m, ++index});
      }
      a = b;
      fa = fb;
    }
  }
  std::sort(out.begin(), out.end(), [](const DiskEigenvalue& l, const DiskEigenvalue& r) { return l.k < r.k; });
  return out;
}

}  // namespace qpbie
