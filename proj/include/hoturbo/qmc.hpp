#pragma once

#include <Eigen/Core>
#include <cstdint>

namespace hoturbo {

/// n points of a randomly digit-shifted Sobol sequence in [0,1)^d.
/// The shift words come from `seed`, so different seeds give different
/// point sets with the same low-discrepancy structure.
Eigen::MatrixXd sobol_points(std::size_t n, std::size_t d, std::uint64_t seed);

}  // namespace hoturbo
