#pragma once

// Privileged bivectors and the in-plane rotations that sweep the spotlight.

#include <Eigen/Core>

#include <compare>

namespace srm {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
// Rows are samples (or basis vectors); row-major keeps each one contiguous.
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline constexpr double kUnitNormTol = 1e-9;
inline constexpr double kDegenerateDotTol = 1e-6;

// A vector of Euclidean length one (checked at construction).
class UnitVector {
 public:
  explicit UnitVector(Vector v);

  // Rescales v to unit length; throws InvalidArgument for a zero vector.
  static UnitVector normalized(const Vector& v);

  const Vector& vec() const { return v_; }
  Eigen::Index size() const { return v_.size(); }
  double dot(const UnitVector& other) const { return v_.dot(other.v_); }

 private:
  Vector v_;
};

// Ordered pair of basis indices naming a privileged plane.
struct PlaneIndex {
  int alpha = 0;
  int beta = 1;
  auto operator<=>(const PlaneIndex&) const = default;
};

// B = (a b^T - b a^T) / 2, an element of so(n).
struct Bivector {
  Matrix matrix;
  PlaneIndex plane;
};

// Which way R(theta) turns the plane for increasing theta.
enum class Handedness {
  AlphaToBeta,  // R(pi/2) b_alpha = +b_beta component
  BetaToAlpha,
};

// Orthonormal frame (u, v) of span{b_alpha, b_beta} with u = b_alpha.
class PlaneRotor {
 public:
  PlaneRotor(Vector u, Vector v, PlaneIndex plane, Handedness handedness);

  const Vector& u() const { return u_; }
  const Vector& v() const { return v_; }
  PlaneIndex plane() const { return plane_; }
  Handedness handedness() const { return handedness_; }
  Eigen::Index dim() const { return u_.size(); }

  // Signed sine factor for the chosen handedness.
  double orientation() const { return handedness_ == Handedness::AlphaToBeta ? 1.0 : -1.0; }

 private:
  Vector u_;
  Vector v_;
  PlaneIndex plane_;
  Handedness handedness_;
};

Bivector build_bivector(const UnitVector& a, const UnitVector& b, PlaneIndex plane = {});

PlaneRotor plane_rotor(const UnitVector& a, const UnitVector& b, PlaneIndex plane = {},
                       Handedness handedness = Handedness::AlphaToBeta);

// R(theta) = I + (cos - 1)(uu^T + vv^T) + sin (vu^T - uv^T)
Matrix rotate(const PlaneRotor& rotor, double theta);

// R(theta) * anchor.
UnitVector rotate_spotlight(const PlaneRotor& rotor, double theta, const UnitVector& anchor);

// Exponential map evaluated through the complex eigendecomposition of the
// bivector, with the two nonzero eigenvalues rescaled to +-i. Slow; kept as an
// independent check of rotate().
Matrix eigen_rotor_oracle(const Bivector& biv, double theta,
                          Handedness handedness = Handedness::AlphaToBeta);

}  // namespace srm
