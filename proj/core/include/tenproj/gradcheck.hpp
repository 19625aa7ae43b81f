#ifndef TENPROJ_GRADCHECK_HPP
#define TENPROJ_GRADCHECK_HPP

#include <functional>

#include "tenproj/types.hpp"

namespace tenproj {

/// Central differences of a scalar function of a flat parameter vector:
/// g_i = (f(x + h e_i) - f(x - h e_i)) / 2h. `x` is restored on return.
/// Throws std::runtime_error if f returns a non-finite value.
Vector central_diff_gradient(const std::function<double(const Vector&)>& f, Vector x, double step = 1e-5);

struct GradCheckReport {
  double max_rel = 0.0;
  double max_abs = 0.0;
  Index worst_index = -1;
  double step = 1e-5;
  bool pass = true;
};

/// Entry-wise rel = |a - n| / max(|a|, |n|, tol_abs). An entry passes when
/// rel <= tol or |a - n| <= tol_abs.
GradCheckReport compare_gradients(const Vector& analytic, const Vector& numeric, double tol = 1e-6,
                                  double tol_abs = 1e-8);

}  // namespace tenproj

#endif  // TENPROJ_GRADCHECK_HPP
