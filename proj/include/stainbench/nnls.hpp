#pragma once

#include <Eigen/Core>

namespace stainbench {

// Minimises x'Gx - 2b'x over x >= 0 for a 2x2 symmetric positive semidefinite
// Gram matrix G. Exact: enumerates the four active sets and keeps the feasible
// candidate with the smallest objective.
//
// With G = A'A and b = A'y this is non-negative least squares on ||y - Ax||^2.
// Shifting b by -lambda/2 adds an l1 penalty lambda * sum(x) (soft threshold).
Eigen::Vector2d nnls2(const Eigen::Matrix2d& gram, const Eigen::Vector2d& rhs) noexcept;

// Unconstrained minimiser of the same quadratic (pseudo-inverse on singular G).
Eigen::Vector2d lstsq2(const Eigen::Matrix2d& gram, const Eigen::Vector2d& rhs) noexcept;

} // namespace stainbench
