#include "srm/kernels.hpp"

#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace srm::kernels {

namespace {

double tally(const Vector& dots, double epsilon, Count count) {
  Eigen::Index inside = 0;
  Eigen::Index opposite = 0;
  for (Eigen::Index k = 0; k < dots.size(); ++k) {
    inside += dots[k] >= epsilon;
    if (count == Count::Signed) opposite += dots[k] <= -epsilon;
  }
  return static_cast<double>(inside - opposite) / static_cast<double>(dots.size());
}

}  // namespace

std::vector<double> sweep_plane_reference(const RowMatrix& unit_rows, const PlaneRotor& rotor,
                                          std::span<const double> thetas, double epsilon,
                                          Count count) {
  std::vector<double> values;
  values.reserve(thetas.size());
  for (double theta : thetas) {
    const Vector spotlight = rotate(rotor, theta) * rotor.u();
    const Vector dots = unit_rows * spotlight;
    values.push_back(tally(dots, epsilon, count));
  }
  return values;
}

std::vector<double> sweep_plane(const RowMatrix& unit_rows, const PlaneRotor& rotor,
                                std::span<const double> thetas, double epsilon, Count count) {
  // spotlight(theta) = cos(theta) u + s sin(theta) v, so each dot product is a
  // fixed combination of the row's projections onto u and v.
  const Vector pu = unit_rows * rotor.u();
  const Vector pv = unit_rows * rotor.v();
  const Eigen::Index d = pu.size();
  std::vector<double> values;
  values.reserve(thetas.size());
  for (double theta : thetas) {
    const double c = std::cos(theta);
    const double s = rotor.orientation() * std::sin(theta);
    long inside = 0;
    long opposite = 0;
    if (count == Count::Signed) {
#pragma omp simd reduction(+ : inside, opposite)
      for (Eigen::Index k = 0; k < d; ++k) {
        const double dot = c * pu[k] + s * pv[k];
        inside += dot >= epsilon;
        opposite += dot <= -epsilon;
      }
    } else {
#pragma omp simd reduction(+ : inside)
      for (Eigen::Index k = 0; k < d; ++k) {
        inside += (c * pu[k] + s * pv[k]) >= epsilon;
      }
    }
    values.push_back(static_cast<double>(inside - opposite) / static_cast<double>(d));
  }
  return values;
}

std::vector<std::vector<double>> sweep_planes(const RowMatrix& unit_rows,
                                              std::span<const PlaneRotor> rotors,
                                              std::span<const double> thetas, double epsilon,
                                              Count count, int threads) {
  std::vector<std::vector<double>> curves(rotors.size());
  const long n_planes = static_cast<long>(rotors.size());
#ifdef _OPENMP
  const int team = threads > 0 ? threads : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic, 4) num_threads(team)
#endif
  for (long p = 0; p < n_planes; ++p) {
    curves[static_cast<std::size_t>(p)] =
        sweep_plane(unit_rows, rotors[static_cast<std::size_t>(p)], thetas, epsilon, count);
  }
  (void)threads;
  return curves;
}

std::vector<std::vector<double>> sweep_planes_serial(const RowMatrix& unit_rows,
                                                     std::span<const PlaneRotor> rotors,
                                                     std::span<const double> thetas,
                                                     double epsilon, Count count) {
  std::vector<std::vector<double>> curves;
  curves.reserve(rotors.size());
  for (const auto& rotor : rotors) {
    curves.push_back(sweep_plane_reference(unit_rows, rotor, thetas, epsilon, count));
  }
  return curves;
}

}  // namespace srm::kernels
