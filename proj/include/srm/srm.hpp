#pragma once

// Spotlight-resonance measurements: the fraction of normalized activations
// inside a cone that sweeps around each privileged plane.

#include "srm/basis.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace srm {

inline constexpr double kZeroRowTol = 1e-12;

// Activation rows with zero-norm rows dropped; keeps both raw and unit views.
class ActivationSet {
 public:
  // Throws EmptyDataset if no row survives the zero-norm filter.
  static ActivationSet from_rows(const RowMatrix& raw);

  const RowMatrix& rows() const { return rows_; }
  const RowMatrix& normalized() const { return normalized_; }
  std::size_t skipped_zero_rows() const { return skipped_; }
  Eigen::Index size() const { return rows_.rows(); }
  Eigen::Index dim() const { return rows_.cols(); }

 private:
  RowMatrix rows_;
  RowMatrix normalized_;
  std::size_t skipped_ = 0;
};

enum class SrmVariant { Plain, Signed, Self };

std::string_view to_string(SrmVariant variant);
SrmVariant parse_variant(std::string_view name);

struct SrmConfig {
  double epsilon = 0.9;  // cos of the cone half-angle
  int theta_samples = 360;
  SrmVariant variant = SrmVariant::Plain;
  PlaneMode mode = PlaneMode::Combination;

  void validate() const;
};

// theta_t = 2 pi t / samples, t = 0 .. samples-1
std::vector<double> theta_grid(int samples);

struct SrmCurve {
  PlaneIndex plane;
  std::vector<double> thetas;
  std::vector<double> values;

  double amplitude() const;
};

struct SrmEnsemble {
  std::vector<SrmCurve> curves;
  std::vector<double> thetas;
  std::vector<double> mean_curve;
  SrmConfig config;
  std::uint64_t basis_fingerprint = 0;
  // Planes whose generators are (anti)parallel; they have no defined sweep.
  std::vector<PlaneIndex> skipped_planes;

  std::vector<double> median_curve() const;
  std::vector<double> amplitudes() const;
  double mean_amplitude() const;
};

double srm_fraction(const ActivationSet& data, const PlaneRotor& rotor, const UnitVector& anchor,
                    double theta, double epsilon);

double signed_srm_fraction(const ActivationSet& data, const PlaneRotor& rotor,
                           const UnitVector& anchor, double theta, double epsilon);

struct ExecutionOptions {
  // Plane-level team size; 0 leaves the OpenMP default in place. Results do
  // not depend on it.
  int threads = 0;
};

SrmEnsemble run_ensemble(const ActivationSet& data, const BasisSet& basis, const PlaneSet& planes,
                         const SrmConfig& config, const ExecutionOptions& exec = {});

SrmEnsemble self_srm(const BasisSet& basis, const PlaneSet& planes, SrmConfig config,
                     const ExecutionOptions& exec = {});

// Expected SRM fraction for activations uniform on the sphere S^{n-1}.
double expected_uniform_fraction(int n, double epsilon);

struct McEstimate {
  double fraction = 0.0;
  double standard_error = 0.0;
  std::size_t samples = 0;
};

McEstimate mc_uniform_oracle(int n, double epsilon, std::size_t samples, std::uint64_t seed);

double curve_correlation(std::span<const double> a, std::span<const double> b);

// FNV-1a over the canonical CSV text of the basis.
std::uint64_t basis_fingerprint(const BasisSet& basis);

}  // namespace srm
