#include "srm/basis.hpp"

#include "srm/error.hpp"

#include <Eigen/QR>

#include <cmath>
#include <random>

namespace srm {

std::string_view to_string(BasisKind kind) {
  switch (kind) {
    case BasisKind::Standard: return "standard";
    case BasisKind::Elementwise: return "elementwise";
    case BasisKind::Simplex: return "simplex";
    case BasisKind::Thompson: return "thompson";
    case BasisKind::Random: return "random";
    case BasisKind::File: return "file";
  }
  return "file";
}

BasisKind parse_basis_kind(std::string_view name) {
  for (auto kind : {BasisKind::Standard, BasisKind::Elementwise, BasisKind::Simplex,
                    BasisKind::Thompson, BasisKind::Random}) {
    if (to_string(kind) == name) return kind;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown basis kind '" + std::string(name) + "'");
}

std::string_view to_string(PlaneMode mode) {
  return mode == PlaneMode::Combination ? "combination" : "permutation";
}

PlaneMode parse_plane_mode(std::string_view name) {
  if (name == "combination") return PlaneMode::Combination;
  if (name == "permutation") return PlaneMode::Permutation;
  throw Error(ErrorCode::InvalidArgument, "unknown plane mode '" + std::string(name) + "'");
}

void validate_basis(const BasisSet& basis) {
  if (basis.count() < 1 || basis.dim() < 1) {
    throw Error(ErrorCode::InvalidArgument, "basis is empty");
  }
  for (Eigen::Index i = 0; i < basis.count(); ++i) {
    const double norm = basis.vectors.row(i).norm();
    if (!(std::abs(norm - 1.0) <= kUnitNormTol)) {
      throw Error(ErrorCode::InvalidArgument,
                  "basis row " + std::to_string(i) + " has norm " + std::to_string(norm));
    }
  }
}

namespace {

void require_dim(int n) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "dimension n must be >= 1");
}

void normalize_rows(RowMatrix& rows) {
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    rows.row(i).normalize();
  }
}

RowMatrix gaussian_rows(int rows, int cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  RowMatrix out(rows, cols);
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    for (Eigen::Index j = 0; j < out.cols(); ++j) out(i, j) = normal(rng);
  }
  return out;
}

}  // namespace

Matrix random_orthogonal(int n, std::uint64_t seed) {
  require_dim(n);
  std::mt19937_64 rng(seed);
  const Matrix g = gaussian_rows(n, n, rng);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(n, n);
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < n; ++j) {
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  }
  return q;
}

BasisSet gen_standard(int n) {
  require_dim(n);
  return BasisSet{RowMatrix::Identity(n, n), BasisKind::Standard, std::nullopt};
}

BasisSet gen_elementwise(int n, std::optional<std::uint64_t> rotation_seed) {
  require_dim(n);
  RowMatrix rows(2 * n, n);
  rows.topRows(n) = RowMatrix::Identity(n, n);
  rows.bottomRows(n) = -RowMatrix::Identity(n, n);
  if (rotation_seed) {
    const Matrix q = random_orthogonal(n, *rotation_seed);
    rows = (rows * q.transpose()).eval();
  }
  return BasisSet{std::move(rows), BasisKind::Elementwise, rotation_seed};
}

BasisSet gen_simplex(int n, std::optional<std::uint64_t> rotation_seed) {
  require_dim(n);
  const int m = n + 1;
  // Centered one-hot corners of R^{n+1} all lie in the hyperplane orthogonal
  // to the ones vector; express them in an orthonormal basis of that plane.
  const Matrix centered = Matrix::Identity(m, m) - Matrix::Constant(m, m, 1.0 / m);
  Eigen::HouseholderQR<Matrix> qr(Vector::Ones(m));
  const Matrix q = qr.householderQ() * Matrix::Identity(m, m);
  RowMatrix rows = centered * q.rightCols(n);
  normalize_rows(rows);
  if (rotation_seed) {
    const Matrix rot = random_orthogonal(n, *rotation_seed);
    rows = (rows * rot.transpose()).eval();
  }
  return BasisSet{std::move(rows), BasisKind::Simplex, rotation_seed};
}

BasisSet gen_random(int n, int m, std::uint64_t seed) {
  require_dim(n);
  if (m < 2) throw Error(ErrorCode::InvalidArgument, "random basis needs m >= 2");
  std::mt19937_64 rng(seed);
  RowMatrix rows = gaussian_rows(m, n, rng);
  normalize_rows(rows);
  return BasisSet{std::move(rows), BasisKind::Random, seed};
}

namespace {

constexpr double kCoincidentTol = 1e-12;
constexpr int kMaxHalvings = 40;

Matrix inverse_distances(const RowMatrix& v) {
  const Eigen::Index m = v.rows();
  Matrix d = Matrix::Zero(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = i + 1; j < m; ++j) {
      const double dist2 = (v.row(i) - v.row(j)).squaredNorm();
      const double value = dist2 < kCoincidentTol ? 0.0 : 1.0 / dist2;
      d(i, j) = value;
      d(j, i) = value;
    }
  }
  return d;
}

double energy_of(const RowMatrix& v) {
  const Matrix d = inverse_distances(v);
  const Matrix g = v * v.transpose();
  // Diagonal of d is zero, which removes the i == j terms.
  return d.cwiseProduct(g).sum();
}

}  // namespace

Matrix inverse_distance_matrix(const BasisSet& basis) { return inverse_distances(basis.vectors); }

double thompson_energy(const BasisSet& basis) { return energy_of(basis.vectors); }

RowMatrix thompson_gradient(const RowMatrix& v, bool through_distance) {
  const Eigen::Index m = v.rows();
  const Matrix d = inverse_distances(v);
  const Matrix g = v * v.transpose();
  RowMatrix grad = RowMatrix::Zero(m, v.cols());
  // E is symmetric in (i, j), so every unordered pair contributes twice.
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      if (i == j || d(i, j) == 0.0) continue;
      grad.row(i) += 2.0 * d(i, j) * v.row(j);
      if (through_distance) {
        // dD_ij/db_i = -D_ij^2 * 2 (b_i - b_j)
        grad.row(i) -= 4.0 * g(i, j) * d(i, j) * d(i, j) * (v.row(i) - v.row(j));
      }
    }
  }
  return grad;
}

void ThompsonConfig::validate() const {
  if (!(learning_rate > 0.0)) throw Error(ErrorCode::InvalidArgument, "learning_rate must be > 0");
  if (iterations < 1) throw Error(ErrorCode::InvalidArgument, "iterations must be >= 1");
  if (!(convergence_tol > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "convergence_tol must be > 0");
  }
}

ThompsonResult gen_thompson(int n, int m, const ThompsonConfig& config) {
  require_dim(n);
  if (m < 2) throw Error(ErrorCode::InvalidArgument, "Thompson basis needs m >= 2");
  config.validate();

  std::mt19937_64 rng(config.seed);
  RowMatrix v = gaussian_rows(m, n, rng);
  normalize_rows(v);

  ThompsonResult result;
  double energy = energy_of(v);
  result.energy_trace.reserve(static_cast<std::size_t>(config.iterations) + 1);
  result.energy_trace.push_back(energy);
  for (int step = 0; step < config.iterations; ++step) {
    const RowMatrix grad = thompson_gradient(v, config.gradient_through_distance);
    // Near-coincident points make the gradient explode; halve the step
    // until the energy does not go up.
    double eta = config.learning_rate;
    RowMatrix candidate;
    double next = energy;
    bool accepted = false;
    for (int halving = 0; halving <= kMaxHalvings; ++halving, eta *= 0.5) {
      candidate = v - eta * grad;
      normalize_rows(candidate);
      next = energy_of(candidate);
      if (!std::isfinite(next)) {
        throw Error(ErrorCode::NumericalFailure, "Thompson energy became non-finite");
      }
      if (next <= energy) {
        accepted = true;
        break;
      }
      ++result.rejected_steps;
    }
    if (!accepted) {
      // No descent direction left at machine precision.
      result.converged = true;
      break;
    }
    v = std::move(candidate);
    result.energy_trace.push_back(next);
    result.steps = step + 1;
    const double change = energy - next;
    energy = next;
    if (change < config.convergence_tol) {
      result.converged = true;
      break;
    }
  }
  result.basis = BasisSet{std::move(v), BasisKind::Thompson, config.seed};
  return result;
}

PlaneSet plane_set(Eigen::Index m, PlaneMode mode) {
  if (m < 2) throw Error(ErrorCode::InvalidArgument, "plane set needs m >= 2");
  PlaneSet set;
  set.mode = mode;
  const int count = static_cast<int>(m);
  set.pairs.reserve(mode == PlaneMode::Combination ? count * (count - 1) / 2
                                                   : count * (count - 1));
  for (int a = 0; a < count; ++a) {
    for (int b = 0; b < count; ++b) {
      if (a == b) continue;
      if (mode == PlaneMode::Combination && b < a) continue;
      set.pairs.push_back({a, b});
    }
  }
  return set;
}

PlaneSet plane_set(const BasisSet& basis, PlaneMode mode) { return plane_set(basis.count(), mode); }

}  // namespace srm
