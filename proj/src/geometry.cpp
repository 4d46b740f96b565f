#include "srm/geometry.hpp"

#include "srm/error.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <complex>
#include <string>

namespace srm {

UnitVector::UnitVector(Vector v) : v_(std::move(v)) {
  const double norm = v_.norm();
  if (!(std::abs(norm - 1.0) <= kUnitNormTol)) {
    throw Error(ErrorCode::InvalidArgument,
                "vector norm " + std::to_string(norm) + " is not 1");
  }
}

UnitVector UnitVector::normalized(const Vector& v) {
  const double norm = v.norm();
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    throw Error(ErrorCode::InvalidArgument, "cannot normalize a zero or non-finite vector");
  }
  return UnitVector(v / norm);
}

PlaneRotor::PlaneRotor(Vector u, Vector v, PlaneIndex plane, Handedness handedness)
    : u_(std::move(u)), v_(std::move(v)), plane_(plane), handedness_(handedness) {
  if (u_.size() != v_.size()) {
    throw Error(ErrorCode::DimensionMismatch, "rotor frame vectors differ in length");
  }
}

namespace {

void check_plane(const UnitVector& a, const UnitVector& b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::DimensionMismatch, "generators live in different dimensions");
  }
  const double c = a.dot(b);
  if (std::abs(c) >= 1.0 - kDegenerateDotTol) {
    throw Error(ErrorCode::DegeneratePlane,
                "generators are (anti)parallel, |a.b| = " + std::to_string(std::abs(c)));
  }
}

}  // namespace

Bivector build_bivector(const UnitVector& a, const UnitVector& b, PlaneIndex plane) {
  check_plane(a, b);
  const Vector& x = a.vec();
  const Vector& y = b.vec();
  Matrix m = 0.5 * (x * y.transpose() - y * x.transpose());
  return Bivector{std::move(m), plane};
}

PlaneRotor plane_rotor(const UnitVector& a, const UnitVector& b, PlaneIndex plane,
                       Handedness handedness) {
  check_plane(a, b);
  Vector v = b.vec() - a.dot(b) * a.vec();
  v.normalize();
  // One re-orthogonalization pass keeps u.v at round-off level for nearly parallel inputs.
  v -= v.dot(a.vec()) * a.vec();
  v.normalize();
  return PlaneRotor(a.vec(), std::move(v), plane, handedness);
}

Matrix rotate(const PlaneRotor& rotor, double theta) {
  const Vector& u = rotor.u();
  const Vector& v = rotor.v();
  const double c = std::cos(theta);
  const double s = rotor.orientation() * std::sin(theta);
  const Eigen::Index n = rotor.dim();
  Matrix r = Matrix::Identity(n, n);
  r.noalias() += (c - 1.0) * (u * u.transpose() + v * v.transpose());
  r.noalias() += s * (v * u.transpose() - u * v.transpose());
  return r;
}

UnitVector rotate_spotlight(const PlaneRotor& rotor, double theta, const UnitVector& anchor) {
  if (anchor.size() != rotor.dim()) {
    throw Error(ErrorCode::DimensionMismatch, "anchor does not match rotor dimension");
  }
  Vector out = rotate(rotor, theta) * anchor.vec();
  return UnitVector(std::move(out));
}

Matrix eigen_rotor_oracle(const Bivector& biv, double theta, Handedness handedness) {
  using Complex = std::complex<double>;
  const Eigen::Index n = biv.matrix.rows();
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(biv.matrix.cast<Complex>());
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorCode::NumericalFailure, "bivector eigensolve did not converge");
  }
  const auto& values = solver.eigenvalues();
  const auto& vectors = solver.eigenvectors();

  const double scale = biv.matrix.cwiseAbs().maxCoeff();
  const double zero_tol = 1e-10 * (scale > 0.0 ? scale : 1.0);

  // B as built turns b_alpha towards -b_beta under exp(+theta B); flip for AlphaToBeta.
  const double sign = handedness == Handedness::AlphaToBeta ? -1.0 : 1.0;

  Eigen::MatrixXcd projector_sum = Eigen::MatrixXcd::Zero(n, n);
  Eigen::MatrixXcd rotated = Eigen::MatrixXcd::Zero(n, n);
  int nonzero = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Complex lambda = values[i];
    if (std::abs(lambda) <= zero_tol) continue;
    ++nonzero;
    const Complex unit = lambda / std::abs(lambda);  // +-i
    Eigen::VectorXcd vi = vectors.col(i);
    vi.normalize();
    const Eigen::MatrixXcd outer = vi * vi.adjoint();
    projector_sum += outer;
    rotated += std::exp(sign * theta * unit) * outer;
  }
  if (nonzero != 2) {
    throw Error(ErrorCode::NumericalFailure,
                "expected two nonzero eigenvalues, found " + std::to_string(nonzero));
  }
  // Zero eigenvalues contribute exp(0) = 1 on the kernel of B.
  const Eigen::MatrixXcd full = Eigen::MatrixXcd::Identity(n, n) - projector_sum + rotated;
  if (full.imag().cwiseAbs().maxCoeff() > 1e-9) {
    throw Error(ErrorCode::NumericalFailure, "exponential map has a non-real part");
  }
  return full.real();
}

}  // namespace srm
