#pragma once

#include <Eigen/Dense>

namespace predmkt {

using Real = double;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Coalitions are enumerated over all support subsets, so sizes are capped.
inline constexpr int kCoalitionCap = 10;

}  // namespace predmkt
