#pragma once

// Inner loops of the SRM sweep. The reference path follows the textbook recipe
// literally (build R(theta), rotate the anchor, dot every row) and exists for
// tests and benchmarks. The production path projects every row once onto the
// plane frame and sweeps theta over the two projections, parallel over planes.

#include "srm/geometry.hpp"

#include <span>
#include <vector>

namespace srm::kernels {

enum class Count { Positive, Signed };

std::vector<double> sweep_plane_reference(const RowMatrix& unit_rows, const PlaneRotor& rotor,
                                          std::span<const double> thetas, double epsilon,
                                          Count count);

std::vector<double> sweep_plane(const RowMatrix& unit_rows, const PlaneRotor& rotor,
                                std::span<const double> thetas, double epsilon, Count count);

// One output curve per rotor, in input order. threads <= 0 uses the OpenMP
// default team size.
std::vector<std::vector<double>> sweep_planes(const RowMatrix& unit_rows,
                                              std::span<const PlaneRotor> rotors,
                                              std::span<const double> thetas, double epsilon,
                                              Count count, int threads = 0);

std::vector<std::vector<double>> sweep_planes_serial(const RowMatrix& unit_rows,
                                                     std::span<const PlaneRotor> rotors,
                                                     std::span<const double> thetas,
                                                     double epsilon, Count count);

}  // namespace srm::kernels
