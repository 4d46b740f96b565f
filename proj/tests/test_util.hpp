#pragma once

#include "srm/geometry.hpp"

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>

namespace testutil {

inline constexpr double kPi = std::numbers::pi;

inline srm::Vector random_gaussian(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  srm::Vector v(n);
  for (int i = 0; i < n; ++i) v[i] = g(rng);
  return v;
}

inline srm::UnitVector random_unit(int n, std::mt19937_64& rng) {
  return srm::UnitVector::normalized(random_gaussian(n, rng));
}

inline srm::Vector basis_vector(int n, int i) {
  srm::Vector e = srm::Vector::Zero(n);
  e[i] = 1.0;
  return e;
}

inline double max_abs(const srm::Matrix& m) { return m.cwiseAbs().maxCoeff(); }

// Scaling-and-squaring Taylor exponential; independent of any eigensolver.
inline srm::Matrix expm_taylor(const srm::Matrix& a) {
  const double norm = a.cwiseAbs().rowwise().sum().maxCoeff();
  int squarings = 0;
  if (norm > 0.5) squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
  const srm::Matrix scaled = a / std::ldexp(1.0, squarings);
  srm::Matrix result = srm::Matrix::Identity(a.rows(), a.cols());
  srm::Matrix term = result;
  for (int k = 1; k < 30; ++k) {
    term = term * scaled / static_cast<double>(k);
    result += term;
  }
  for (int s = 0; s < squarings; ++s) result = result * result;
  return result;
}

inline std::filesystem::path mnist_dir() { return SRM_MNIST_DIR; }

inline bool have_mnist() {
  return std::filesystem::exists(mnist_dir() / "train-images-idx3-ubyte") &&
         std::filesystem::exists(mnist_dir() / "t10k-images-idx3-ubyte");
}

}  // namespace testutil
