#pragma once

#include <Eigen/Dense>

#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

namespace qpbie {

using Complex = std::complex<double>;
using Vec2 = Eigen::Vector2d;
using CVec2 = Eigen::Vector2cd;
using CMat2 = Eigen::Matrix2cd;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr double kEulerGamma = std::numbers::egamma;
inline constexpr Complex kI{0.0, 1.0};

inline constexpr const char* kVersion = "0.3.0";

enum class ErrorCode {
  kDomain,
  kNotConverged,
  kResonance,
  kNearLattice,
  kIllConditioned,
  kNewtonDivergence,
  kOutOfRange,
  kConfig,
  kIO,
};

/// Base exception for the library. The code lets front ends map failures
/// onto exit statuses without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline const char* to_string(ErrorCode c) {
  switch (c) {
    case ErrorCode::kDomain: return "domain";
    case ErrorCode::kNotConverged: return "not-converged";
    case ErrorCode::kResonance: return "resonance";
    case ErrorCode::kNearLattice: return "near-lattice-point";
    case ErrorCode::kIllConditioned: return "ill-conditioned";
    case ErrorCode::kNewtonDivergence: return "newton-divergence";
    case ErrorCode::kOutOfRange: return "out-of-range";
    case ErrorCode::kConfig: return "config";
    case ErrorCode::kIO: return "io";
  }
  return "unknown";
}

}  // namespace qpbie
