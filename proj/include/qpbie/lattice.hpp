#pragma once

// Diagonal periodicity lattice qZ^n, Bloch vector eta, and the dual-lattice
// resonance machinery.

#include "qpbie/common.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace qpbie {

using IndexVec = Eigen::VectorXi;

struct Lattice {
  Eigen::VectorXd q;    // cell side lengths
  Eigen::VectorXd eta;  // Bloch vector

  Lattice() = default;
  Lattice(Eigen::VectorXd q_diag, Eigen::VectorXd bloch) : q(std::move(q_diag)), eta(std::move(bloch)) {
    if (q.size() < 1 || q.size() != eta.size()) {
      throw Error(ErrorCode::kDomain, "lattice q and eta must have equal positive dimension");
    }
    for (int i = 0; i < q.size(); ++i) {
      if (!(q[i] > 0.0)) throw Error(ErrorCode::kDomain, "lattice side lengths must be positive");
    }
  }

  static Lattice square2d(double q1, double q2, double eta1, double eta2) {
    return Lattice(Eigen::Vector2d(q1, q2), Eigen::Vector2d(eta1, eta2));
  }

  int dim() const { return static_cast<int>(q.size()); }
  double cell_measure() const { return q.prod(); }
  double min_side() const { return q.minCoeff(); }
  double max_side() const { return q.maxCoeff(); }
};

inline constexpr double kResonanceTolerance = 1e-9;

/// 2 pi q^{-1} z + eta.
inline Eigen::VectorXd dual_vector(const Lattice& lat, const IndexVec& z) {
  Eigen::VectorXd xi(lat.dim());
  for (int i = 0; i < lat.dim(); ++i) xi[i] = kTwoPi * z[i] / lat.q[i] + lat.eta[i];
  return xi;
}

/// Smallest index-box half width that contains every z with |xi(z)| <= |k|.
inline int default_search_radius(const Lattice& lat, Complex k) {
  return static_cast<int>(std::ceil((std::abs(k) + lat.eta.norm()) * lat.max_side() / kTwoPi)) + 2;
}

/// Calls f(z) for every integer vector with |z|_inf <= radius, in
/// lexicographic order.
template <class F>
void for_each_index(int dim, int radius, F&& f) {
  IndexVec z = IndexVec::Constant(dim, -radius);
  for (;;) {
    f(static_cast<const IndexVec&>(z));
    int i = dim - 1;
    while (i >= 0 && z[i] == radius) {
      z[i] = -radius;
      --i;
    }
    if (i < 0) return;
    ++z[i];
  }
}

inline std::vector<IndexVec> resonance_set(const Lattice& lat, Complex k, int search_radius = -1,
                                           double tolerance = kResonanceTolerance) {
  const int needed = static_cast<int>(std::ceil(std::abs(k) * lat.max_side() / kTwoPi)) + 2;
  if (search_radius < 0) search_radius = default_search_radius(lat, k);
  if (search_radius < needed) {
    throw Error(ErrorCode::kDomain, "resonance search radius too small for |k|");
  }
  std::vector<IndexVec> out;
  const Complex k2 = k * k;
  for_each_index(lat.dim(), search_radius, [&](const IndexVec& z) {
    if (std::abs(k2 - dual_vector(lat, z).squaredNorm()) <= tolerance) out.push_back(z);
  });
  return out;
}

/// min_z |k^2 - |xi(z)|^2| over the scan box; 0 when k^2 lies in the
/// quasi-periodic Laplace spectrum (up to tolerance).
inline double spectrum_distance(const Lattice& lat, Complex k, double tolerance = kResonanceTolerance) {
  double best = std::numeric_limits<double>::infinity();
  const Complex k2 = k * k;
  for_each_index(lat.dim(), default_search_radius(lat, k), [&](const IndexVec& z) {
    best = std::min(best, std::abs(k2 - dual_vector(lat, z).squaredNorm()));
  });
  return best <= tolerance ? 0.0 : best;
}

struct WaveContext {
  Complex k;
  std::vector<IndexVec> resonance_set;
  double spectral_distance = 0.0;

  bool resonant() const { return !resonance_set.empty(); }
};

inline WaveContext make_wave_context(const Lattice& lat, Complex k) {
  return {k, resonance_set(lat, k), spectrum_distance(lat, k)};
}

}  // namespace qpbie
