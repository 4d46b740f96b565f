#pragma once

// Privileged basis families and the plane sets enumerated over them.

#include "srm/geometry.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace srm {

enum class BasisKind { Standard, Elementwise, Simplex, Thompson, Random, File };

std::string_view to_string(BasisKind kind);
BasisKind parse_basis_kind(std::string_view name);

// m unit vectors in R^n stored as the rows of an m x n matrix.
struct BasisSet {
  RowMatrix vectors;
  BasisKind kind = BasisKind::File;
  std::optional<std::uint64_t> seed;

  Eigen::Index count() const { return vectors.rows(); }
  Eigen::Index dim() const { return vectors.cols(); }
  UnitVector vector(Eigen::Index i) const { return UnitVector(vectors.row(i).transpose()); }
  Matrix gram() const { return vectors * vectors.transpose(); }
};

// Throws InvalidArgument unless every row is unit length (1e-9).
void validate_basis(const BasisSet& basis);

BasisSet gen_standard(int n);
BasisSet gen_elementwise(int n, std::optional<std::uint64_t> rotation_seed = std::nullopt);
BasisSet gen_simplex(int n, std::optional<std::uint64_t> rotation_seed = std::nullopt);
BasisSet gen_random(int n, int m, std::uint64_t seed);

// Haar-distributed orthogonal matrix: QR of a seeded Gaussian matrix with the
// signs of R's diagonal folded into Q.
Matrix random_orthogonal(int n, std::uint64_t seed);

// D_ij = 1 / |b_i - b_j|^2 off the diagonal; zero on the diagonal and for
// coincident vectors.
Matrix inverse_distance_matrix(const BasisSet& basis);

// E = sum_{i != j} D_ij (b_i . b_j)
double thompson_energy(const BasisSet& basis);

struct ThompsonConfig {
  double learning_rate = 0.05;
  int iterations = 5000;
  std::uint64_t seed = 0;
  double convergence_tol = 1e-9;
  // When false D is held fixed inside each gradient evaluation.
  bool gradient_through_distance = true;

  void validate() const;
};

struct ThompsonResult {
  BasisSet basis;
  bool converged = false;
  int steps = 0;
  // Trial steps discarded by backtracking because the energy went up.
  int rejected_steps = 0;
  // Energy of the initial configuration followed by one entry per step.
  std::vector<double> energy_trace;
  double final_energy() const { return energy_trace.empty() ? 0.0 : energy_trace.back(); }
};

// Projected gradient descent on thompson_energy; rows are renormalized after
// every step and a step that raises the energy is retried at half the size.
// Not reaching the tolerance is reported through `converged`.
ThompsonResult gen_thompson(int n, int m, const ThompsonConfig& config = {});

// Gradient of thompson_energy with respect to each row (exposed for tests).
RowMatrix thompson_gradient(const RowMatrix& vectors, bool through_distance = true);

enum class PlaneMode { Combination, Permutation };

std::string_view to_string(PlaneMode mode);
PlaneMode parse_plane_mode(std::string_view name);

struct PlaneSet {
  std::vector<PlaneIndex> pairs;
  PlaneMode mode = PlaneMode::Combination;
};

PlaneSet plane_set(const BasisSet& basis, PlaneMode mode);
PlaneSet plane_set(Eigen::Index m, PlaneMode mode);

}  // namespace srm
