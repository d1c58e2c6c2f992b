#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace abk {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// One stream per run. Every iteration consumes exactly one uniform draw for
// the block choice followed by the noise draws of that block.
using Rng = std::mt19937_64;

}  // namespace abk
