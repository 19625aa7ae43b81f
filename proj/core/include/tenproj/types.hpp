#ifndef TENPROJ_TYPES_HPP
#define TENPROJ_TYPES_HPP

#include <Eigen/Core>
#include <array>
#include <cstddef>

namespace tenproj {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;  // column-major
using Vector = Eigen::VectorXd;

/// Extents of a 3-order tensor, (p1, p2, p3).
using Dims3 = std::array<Index, 3>;

/// Throws std::invalid_argument unless 1 <= mode <= 3.
void check_mode(int mode);

}  // namespace tenproj

#endif  // TENPROJ_TYPES_HPP
