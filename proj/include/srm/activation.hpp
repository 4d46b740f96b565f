#pragma once

// Generalized tanh: tanh applied along an arbitrary privileged basis, with the
// anti-interference correction that restores tanh along every basis direction.

#include "srm/basis.hpp"

#include <memory>
#include <vector>

namespace srm {

// sigma(x) = sum_i tanh(x . e_i) e_i
Vector elementwise_tanh(const Vector& x);

// N(alpha), averaged over basis directions j. Throws DegenerateBasis when a
// direction has no positive overlap mass (cannot happen for unit rows, but
// guards hand-built inputs).
double correction_N(const BasisSet& basis, double alpha);

// Tabulated N over ||x|| in [0, 20] with linear interpolation; inputs past the
// end of the grid clamp to the last node.
class CorrectionTable {
 public:
  static constexpr int kPoints = 1024;
  static constexpr double kMaxNorm = 20.0;

  explicit CorrectionTable(const BasisSet& basis);
  double operator()(double alpha) const;

 private:
  std::vector<double> values_;
};

class GeneralizedTanh {
 public:
  explicit GeneralizedTanh(BasisSet basis, bool apply_correction = true);

  const BasisSet& basis() const { return basis_; }
  bool apply_correction() const { return apply_correction_; }
  Eigen::Index dim() const { return basis_.dim(); }

  // Switches N(||x||) evaluation to the interpolated table.
  void use_lookup_table(bool enabled);
  bool uses_lookup_table() const { return static_cast<bool>(table_); }

  double correction(double alpha) const;
  double correction_derivative(double alpha) const;

  Vector apply(const Vector& x) const;
  Vector backward(const Vector& x, const Vector& upstream) const;

  // Row-wise versions over a batch (rows are samples).
  RowMatrix apply_rows(const RowMatrix& x) const;
  RowMatrix backward_rows(const RowMatrix& x, const RowMatrix& upstream) const;

 private:
  BasisSet basis_;
  bool apply_correction_;
  // Positive part of the Gram matrix and each direction's normalizer.
  Matrix positive_gram_;
  Matrix gram_;
  std::vector<double> denominators_;
  std::shared_ptr<const CorrectionTable> table_;
};

Vector gtanh_apply(const GeneralizedTanh& act, const Vector& x);
Vector gtanh_backward(const GeneralizedTanh& act, const Vector& x, const Vector& upstream);

// sigma(x) = tanh(||x||) x_hat / max_i(b_i . x_hat)
Vector max_tanh_apply(const BasisSet& basis, const Vector& x);

}  // namespace srm
