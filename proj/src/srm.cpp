#include "srm/srm.hpp"

#include "srm/error.hpp"
#include "srm/io.hpp"
#include "srm/kernels.hpp"

#include <boost/math/special_functions/beta.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace srm {

ActivationSet ActivationSet::from_rows(const RowMatrix& raw) {
  std::vector<Eigen::Index> keep;
  keep.reserve(static_cast<std::size_t>(raw.rows()));
  for (Eigen::Index r = 0; r < raw.rows(); ++r) {
    const double norm = raw.row(r).norm();
    if (!std::isfinite(norm)) {
      throw Error(ErrorCode::NumericalFailure, "activation row " + std::to_string(r) +
                                                   " is not finite");
    }
    if (norm >= kZeroRowTol) keep.push_back(r);
  }
  if (keep.empty()) throw Error(ErrorCode::EmptyDataset, "no nonzero activation rows");

  ActivationSet set;
  set.skipped_ = static_cast<std::size_t>(raw.rows()) - keep.size();
  set.rows_.resize(static_cast<Eigen::Index>(keep.size()), raw.cols());
  set.normalized_.resize(set.rows_.rows(), raw.cols());
  for (std::size_t k = 0; k < keep.size(); ++k) {
    const auto r = static_cast<Eigen::Index>(k);
    set.rows_.row(r) = raw.row(keep[k]);
    set.normalized_.row(r) = raw.row(keep[k]) / raw.row(keep[k]).norm();
  }
  return set;
}

std::string_view to_string(SrmVariant variant) {
  switch (variant) {
    case SrmVariant::Plain: return "plain";
    case SrmVariant::Signed: return "signed";
    case SrmVariant::Self: return "self";
  }
  return "plain";
}

SrmVariant parse_variant(std::string_view name) {
  if (name == "plain") return SrmVariant::Plain;
  if (name == "signed") return SrmVariant::Signed;
  if (name == "self") return SrmVariant::Self;
  throw Error(ErrorCode::InvalidArgument, "unknown SRM variant '" + std::string(name) + "'");
}

void SrmConfig::validate() const {
  if (!(epsilon > -1.0 && epsilon <= 1.0)) {
    throw Error(ErrorCode::InvalidEpsilon, "epsilon must lie in (-1, 1], got " +
                                               io::format_double(epsilon));
  }
  if (variant == SrmVariant::Signed && !(epsilon > 0.0)) {
    throw Error(ErrorCode::InvalidEpsilon, "signed SRM needs epsilon > 0");
  }
  if (theta_samples < 4) throw Error(ErrorCode::InvalidArgument, "theta_samples must be >= 4");
}

std::vector<double> theta_grid(int samples) {
  std::vector<double> thetas(static_cast<std::size_t>(samples));
  for (int t = 0; t < samples; ++t) {
    thetas[static_cast<std::size_t>(t)] = 2.0 * std::numbers::pi * t / samples;
  }
  return thetas;
}

double SrmCurve::amplitude() const {
  if (values.empty()) return 0.0;
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  return *hi - *lo;
}

std::vector<double> SrmEnsemble::median_curve() const {
  std::vector<double> out(thetas.size(), 0.0);
  if (curves.empty()) return out;
  std::vector<double> column(curves.size());
  for (std::size_t t = 0; t < thetas.size(); ++t) {
    for (std::size_t p = 0; p < curves.size(); ++p) column[p] = curves[p].values[t];
    std::sort(column.begin(), column.end());
    const std::size_t mid = column.size() / 2;
    out[t] = column.size() % 2 ? column[mid] : 0.5 * (column[mid - 1] + column[mid]);
  }
  return out;
}

std::vector<double> SrmEnsemble::amplitudes() const {
  std::vector<double> out;
  out.reserve(curves.size());
  for (const auto& c : curves) out.push_back(c.amplitude());
  return out;
}

double SrmEnsemble::mean_amplitude() const {
  if (mean_curve.empty()) return 0.0;
  const auto [lo, hi] = std::minmax_element(mean_curve.begin(), mean_curve.end());
  return *hi - *lo;
}

namespace {

void check_fraction_inputs(const ActivationSet& data, const PlaneRotor& rotor,
                           const UnitVector& anchor) {
  if (data.size() == 0) throw Error(ErrorCode::EmptyDataset, "no activation rows");
  if (data.dim() != rotor.dim() || anchor.size() != rotor.dim()) {
    throw Error(ErrorCode::DimensionMismatch, "activation and rotor dimensions differ");
  }
}

}  // namespace

double srm_fraction(const ActivationSet& data, const PlaneRotor& rotor, const UnitVector& anchor,
                    double theta, double epsilon) {
  check_fraction_inputs(data, rotor, anchor);
  const Vector spotlight = rotate_spotlight(rotor, theta, anchor).vec();
  const Vector dots = data.normalized() * spotlight;
  const auto inside = (dots.array() >= epsilon).count();
  return static_cast<double>(inside) / static_cast<double>(data.size());
}

double signed_srm_fraction(const ActivationSet& data, const PlaneRotor& rotor,
                           const UnitVector& anchor, double theta, double epsilon) {
  if (!(epsilon > 0.0)) throw Error(ErrorCode::InvalidEpsilon, "signed SRM needs epsilon > 0");
  check_fraction_inputs(data, rotor, anchor);
  const Vector spotlight = rotate_spotlight(rotor, theta, anchor).vec();
  const Vector dots = data.normalized() * spotlight;
  const auto inside = (dots.array() >= epsilon).count();
  const auto opposite = (dots.array() <= -epsilon).count();
  return static_cast<double>(inside - opposite) / static_cast<double>(data.size());
}

SrmEnsemble run_ensemble(const ActivationSet& data, const BasisSet& basis, const PlaneSet& planes,
                         const SrmConfig& config, const ExecutionOptions& exec) {
  config.validate();
  validate_basis(basis);

  const RowMatrix* rows = &data.normalized();
  RowMatrix self_rows;
  if (config.variant == SrmVariant::Self) {
    self_rows = basis.vectors;
    rows = &self_rows;
  } else {
    if (data.size() == 0) throw Error(ErrorCode::EmptyDataset, "no activation rows");
    if (data.dim() != basis.dim()) {
      throw Error(ErrorCode::DimensionMismatch,
                  "activations have " + std::to_string(data.dim()) + " columns, basis has " +
                      std::to_string(basis.dim()));
    }
  }

  SrmEnsemble ensemble;
  ensemble.config = config;
  ensemble.thetas = theta_grid(config.theta_samples);
  ensemble.basis_fingerprint = basis_fingerprint(basis);

  std::vector<PlaneRotor> rotors;
  rotors.reserve(planes.pairs.size());
  for (const auto& plane : planes.pairs) {
    if (plane.alpha < 0 || plane.beta < 0 || plane.alpha >= basis.count() ||
        plane.beta >= basis.count()) {
      throw Error(ErrorCode::InvalidArgument, "plane index outside the basis");
    }
    try {
      rotors.push_back(plane_rotor(basis.vector(plane.alpha), basis.vector(plane.beta), plane));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::DegeneratePlane) throw;
      ensemble.skipped_planes.push_back(plane);
    }
  }

  const auto count = config.variant == SrmVariant::Signed ? kernels::Count::Signed
                                                          : kernels::Count::Positive;
  auto values =
      kernels::sweep_planes(*rows, rotors, ensemble.thetas, config.epsilon, count, exec.threads);

  ensemble.curves.reserve(rotors.size());
  for (std::size_t p = 0; p < rotors.size(); ++p) {
    ensemble.curves.push_back(SrmCurve{rotors[p].plane(), ensemble.thetas, std::move(values[p])});
  }

  ensemble.mean_curve.assign(ensemble.thetas.size(), 0.0);
  if (!ensemble.curves.empty()) {
    for (const auto& curve : ensemble.curves) {
      for (std::size_t t = 0; t < curve.values.size(); ++t) {
        ensemble.mean_curve[t] += curve.values[t];
      }
    }
    const double inv = 1.0 / static_cast<double>(ensemble.curves.size());
    for (double& v : ensemble.mean_curve) v *= inv;
  }
  return ensemble;
}

SrmEnsemble self_srm(const BasisSet& basis, const PlaneSet& planes, SrmConfig config,
                     const ExecutionOptions& exec) {
  config.variant = SrmVariant::Self;
  return run_ensemble(ActivationSet{}, basis, planes, config, exec);
}

double expected_uniform_fraction(int n, double epsilon) {
  if (n < 2) throw Error(ErrorCode::DomainError, "expected fraction needs n >= 2");
  if (!(epsilon > -1.0 && epsilon <= 1.0)) {
    throw Error(ErrorCode::DomainError, "epsilon must lie in (-1, 1]");
  }
  if (epsilon < 0.0) return 1.0 - expected_uniform_fraction(n, -epsilon);

  // Half of the double-cone (n-segment) volume ratio: V_{n-1}/V_n times the
  // bracketed beta-function expression, with cos(phi) = epsilon.
  const double dn = n;
  const double cos_phi = epsilon;
  const double sin_phi = std::sqrt(std::max(0.0, 1.0 - epsilon * epsilon));
  const double log_ratio = std::lgamma(dn / 2.0 + 1.0) - std::lgamma((dn + 1.0) / 2.0) -
                           0.5 * std::log(std::numbers::pi);
  const double a = 0.5;
  const double b = (dn + 1.0) / 2.0;
  const double bracket = (2.0 / dn) * std::pow(sin_phi, dn - 1.0) * cos_phi +
                         boost::math::beta(a, b) -
                         boost::math::beta(a, b, cos_phi * cos_phi);
  return 0.5 * std::exp(log_ratio) * bracket;
}

McEstimate mc_uniform_oracle(int n, double epsilon, std::size_t samples, std::uint64_t seed) {
  if (n < 1) throw Error(ErrorCode::DomainError, "MC oracle needs n >= 1");
  if (samples < 1000) throw Error(ErrorCode::InvalidArgument, "MC oracle needs >= 1000 samples");

  // Fixed-size chunks with their own seeds keep the estimate independent of
  // the thread count.
  constexpr std::size_t kChunk = 1 << 15;
  const long chunks = static_cast<long>((samples + kChunk - 1) / kChunk);
  long long hits = 0;
#pragma omp parallel for reduction(+ : hits) schedule(static)
  for (long c = 0; c < chunks; ++c) {
    std::seed_seq seq{seed, static_cast<std::uint64_t>(c)};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> normal(0.0, 1.0);
    const std::size_t begin = static_cast<std::size_t>(c) * kChunk;
    const std::size_t end = std::min(samples, begin + kChunk);
    for (std::size_t s = begin; s < end; ++s) {
      const double first = normal(rng);
      double norm2 = first * first;
      for (int k = 1; k < n; ++k) {
        const double z = normal(rng);
        norm2 += z * z;
      }
      hits += first >= epsilon * std::sqrt(norm2);
    }
  }
  McEstimate est;
  est.samples = samples;
  est.fraction = static_cast<double>(hits) / static_cast<double>(samples);
  est.standard_error =
      std::sqrt(est.fraction * (1.0 - est.fraction) / static_cast<double>(samples));
  return est;
}

double curve_correlation(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.empty()) {
    throw Error(ErrorCode::DimensionMismatch, "curves must share a non-empty grid");
  }
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma;
    const double db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa <= 0.0 || sbb <= 0.0) throw Error(ErrorCode::ZeroVariance, "curve has zero variance");
  return sab / std::sqrt(saa * sbb);
}

std::uint64_t basis_fingerprint(const BasisSet& basis) {
  const std::string text = io::format_basis_csv(basis);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace srm
