#include "srm/activation.hpp"

#include "srm/error.hpp"

#include <algorithm>
#include <cmath>

namespace srm {

namespace {

constexpr double kDenominatorTol = 1e-12;
constexpr double kCoverageTol = 1e-9;

double sech2(double z) {
  const double t = std::tanh(z);
  return 1.0 - t * t;
}

struct OverlapTables {
  Matrix gram;
  Matrix positive;
  std::vector<double> denominators;
};

OverlapTables overlaps(const BasisSet& basis) {
  OverlapTables t;
  t.gram = basis.gram();
  t.positive = t.gram.cwiseMax(0.0);
  const Eigen::Index m = basis.count();
  t.denominators.resize(static_cast<std::size_t>(m));
  for (Eigen::Index j = 0; j < m; ++j) {
    const double den = t.positive.row(j).squaredNorm();
    if (den < kDenominatorTol) {
      throw Error(ErrorCode::DegenerateBasis,
                  "basis direction " + std::to_string(j) + " has no positive overlap");
    }
    t.denominators[static_cast<std::size_t>(j)] = den;
  }
  return t;
}

// N(alpha) and optionally dN/dalpha from precomputed overlaps.
double correction_value(const Matrix& gram, const Matrix& positive,
                        const std::vector<double>& denominators, double alpha, double* derivative) {
  const Eigen::Index m = gram.rows();
  double value = 0.0;
  double slope = 0.0;
  for (Eigen::Index j = 0; j < m; ++j) {
    double num = 0.0;
    double dnum = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
      if (i == j) continue;
      const double p = positive(j, i);
      if (p == 0.0) continue;
      const double th = std::tanh(alpha * p);
      num += th * gram(i, j);
      if (derivative) dnum += (1.0 - th * th) * p * gram(i, j);
    }
    const double den = denominators[static_cast<std::size_t>(j)];
    value += num / den;
    slope += dnum / den;
  }
  if (derivative) *derivative = -slope / static_cast<double>(m);
  return -value / static_cast<double>(m);
}

double correction_value_of(const OverlapTables& t, double alpha) {
  return correction_value(t.gram, t.positive, t.denominators, alpha, nullptr);
}

}  // namespace

Vector elementwise_tanh(const Vector& x) { return x.array().tanh().matrix(); }

double correction_N(const BasisSet& basis, double alpha) {
  if (!(alpha >= 0.0)) throw Error(ErrorCode::DomainError, "correction_N needs alpha >= 0");
  return correction_value_of(overlaps(basis), alpha);
}

CorrectionTable::CorrectionTable(const BasisSet& basis) {
  const OverlapTables t = overlaps(basis);
  values_.resize(kPoints);
  for (int k = 0; k < kPoints; ++k) {
    const double alpha = kMaxNorm * k / (kPoints - 1);
    values_[static_cast<std::size_t>(k)] = correction_value_of(t, alpha);
  }
}

double CorrectionTable::operator()(double alpha) const {
  const double pos = std::clamp(alpha, 0.0, kMaxNorm) / kMaxNorm * (kPoints - 1);
  const int k = std::min(static_cast<int>(pos), kPoints - 2);
  const double frac = pos - k;
  return (1.0 - frac) * values_[static_cast<std::size_t>(k)] +
         frac * values_[static_cast<std::size_t>(k) + 1];
}

GeneralizedTanh::GeneralizedTanh(BasisSet basis, bool apply_correction)
    : basis_(std::move(basis)), apply_correction_(apply_correction) {
  validate_basis(basis_);
  OverlapTables t = overlaps(basis_);
  gram_ = std::move(t.gram);
  positive_gram_ = std::move(t.positive);
  denominators_ = std::move(t.denominators);
}

void GeneralizedTanh::use_lookup_table(bool enabled) {
  if (enabled) {
    table_ = std::make_shared<const CorrectionTable>(basis_);
  } else {
    table_.reset();
  }
}

double GeneralizedTanh::correction(double alpha) const {
  if (!apply_correction_) return 0.0;
  if (table_) return (*table_)(alpha);
  return correction_value(gram_, positive_gram_, denominators_, alpha, nullptr);
}

double GeneralizedTanh::correction_derivative(double alpha) const {
  if (!apply_correction_) return 0.0;
  double slope = 0.0;
  correction_value(gram_, positive_gram_, denominators_, alpha, &slope);
  return slope;
}

Vector GeneralizedTanh::apply(const Vector& x) const {
  if (x.size() != dim()) throw Error(ErrorCode::DimensionMismatch, "gtanh input dimension");
  const auto& b = basis_.vectors;
  const double r = x.norm();
  Vector out = Vector::Zero(dim());
  if (r == 0.0) return out;
  const Vector s = b * x;
  const double n_corr = apply_correction_ ? correction(r) : 0.0;
  for (Eigen::Index i = 0; i < b.rows(); ++i) {
    if (s[i] <= 0.0) continue;
    const double coeff = std::tanh(s[i]) + (s[i] / r) * n_corr;
    out += coeff * b.row(i).transpose();
  }
  return out;
}

Vector GeneralizedTanh::backward(const Vector& x, const Vector& upstream) const {
  if (x.size() != dim() || upstream.size() != dim()) {
    throw Error(ErrorCode::DimensionMismatch, "gtanh backward dimension");
  }
  const auto& b = basis_.vectors;
  const double r = x.norm();
  Vector grad = Vector::Zero(dim());
  if (r == 0.0) return grad;
  const Vector s = b * x;
  const Vector gb = b * upstream;
  const Vector x_hat = x / r;

  // y = sum_i tanh(s_i^+) b_i + N(r) sum_i (s_i^+ / r) b_i
  double weighted = 0.0;  // sum_i max(0, t_i) gb_i
  Vector dir = Vector::Zero(dim());
  for (Eigen::Index i = 0; i < b.rows(); ++i) {
    if (s[i] <= 0.0) continue;
    grad += gb[i] * sech2(s[i]) * b.row(i).transpose();
    const double t = s[i] / r;
    weighted += t * gb[i];
    dir += gb[i] * (b.row(i).transpose() - t * x_hat);
  }
  if (apply_correction_) {
    double dn = 0.0;
    const double n_exact = correction_value(gram_, positive_gram_, denominators_, r, &dn);
    const double n_corr = table_ ? (*table_)(r) : n_exact;
    grad += n_corr * dir / r + dn * weighted * x_hat;
  }
  return grad;
}

RowMatrix GeneralizedTanh::apply_rows(const RowMatrix& x) const {
  RowMatrix out(x.rows(), x.cols());
  for (Eigen::Index k = 0; k < x.rows(); ++k) {
    out.row(k) = apply(x.row(k).transpose()).transpose();
  }
  return out;
}

RowMatrix GeneralizedTanh::backward_rows(const RowMatrix& x, const RowMatrix& upstream) const {
  RowMatrix out(x.rows(), x.cols());
  for (Eigen::Index k = 0; k < x.rows(); ++k) {
    out.row(k) = backward(x.row(k).transpose(), upstream.row(k).transpose()).transpose();
  }
  return out;
}

Vector gtanh_apply(const GeneralizedTanh& act, const Vector& x) { return act.apply(x); }

Vector gtanh_backward(const GeneralizedTanh& act, const Vector& x, const Vector& upstream) {
  return act.backward(x, upstream);
}

Vector max_tanh_apply(const BasisSet& basis, const Vector& x) {
  if (x.size() != basis.dim()) throw Error(ErrorCode::DimensionMismatch, "max-tanh input");
  const double r = x.norm();
  if (r == 0.0) return Vector::Zero(x.size());
  const Vector x_hat = x / r;
  const double best = (basis.vectors * x_hat).maxCoeff();
  if (!(best > kCoverageTol)) {
    throw Error(ErrorCode::UncoveredDirection, "no basis vector has positive overlap with x");
  }
  return std::tanh(r) * x_hat / best;
}

}  // namespace srm
