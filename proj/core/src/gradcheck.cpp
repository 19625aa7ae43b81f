#include "tenproj/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tenproj {

Vector central_diff_gradient(const std::function<double(const Vector&)>& f, Vector x, double step) {
  if (!(step > 0.0)) throw std::invalid_argument("central_diff_gradient: step must be positive");
  Vector g(x.size());
  for (Index i = 0; i < x.size(); ++i) {
    const double saved = x(i);
    x(i) = saved + step;
    const double up = f(x);
    x(i) = saved - step;
    const double down = f(x);
    x(i) = saved;
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw std::runtime_error("central_diff_gradient: non-finite evaluation at index " + std::to_string(i));
    }
    g(i) = (up - down) / (2.0 * step);
  }
  return g;
}

GradCheckReport compare_gradients(const Vector& analytic, const Vector& numeric, double tol, double tol_abs) {
  if (analytic.size() != numeric.size()) throw std::invalid_argument("compare_gradients: size mismatch");
  GradCheckReport r;
  bool worst_failed = false;
  double worst_rel = -1.0;
  for (Index i = 0; i < analytic.size(); ++i) {
    const double a = analytic(i);
    const double n = numeric(i);
    const double diff = std::abs(a - n);
    const double rel = diff / std::max({std::abs(a), std::abs(n), tol_abs});
    r.max_abs = std::max(r.max_abs, diff);
    r.max_rel = std::max(r.max_rel, rel);
    const bool ok = rel <= tol || diff <= tol_abs;
    if (!ok) r.pass = false;
    // failing entries rank above passing ones
    if ((!ok && !worst_failed) || (!ok == worst_failed && rel > worst_rel)) {
      worst_failed = !ok;
      worst_rel = rel;
      r.worst_index = i;
    }
  }
  return r;
}

}  // namespace tenproj
