#include "fpa/special_math.hpp"

#include <cmath>

namespace fpa {

namespace {

double halley_step(double w, double z) {
  const double ew = std::exp(w);
  const double f = w * ew - z;
  // Halley iteration for f(w) = w e^w - z.
  const double denom = ew * (w + 1.0) - (w + 2.0) * f / (2.0 * w + 2.0);
  return w - f / denom;
}

}  // namespace

double lambert_w0(double z, const RealTolerance& tol) {
  const double min_z = -std::exp(-1.0);
  if (z < min_z - tol.abs_tol) {
    throw MathDomainError("lambert_w0: argument below -1/e");
  }
  if (z <= min_z) return -1.0;
  if (z == 0.0) return 0.0;

  // Bisection bracket: W0 is increasing, W0(z) in [-1, max(0, ln z) + 1].
  double lo = -1.0;
  double hi = (z > 0.0) ? std::log(1.0 + z) + 1.0 : 0.0;
  double w = 0.5 * (lo + hi);
  for (int i = 0; i < tol.max_iters; ++i) {
    const double f = w * std::exp(w) - z;
    if (f > 0.0) {
      hi = w;
    } else {
      lo = w;
    }
    w = 0.5 * (lo + hi);
    if (hi - lo < 1e-6) break;
  }

  // Halley refinement from the bisection seed.
  for (int i = 0; i < tol.max_iters; ++i) {
    const double next = halley_step(w, z);
    if (!std::isfinite(next)) break;
    const double moved = std::abs(next - w);
    w = std::max(next, -1.0);
    if (moved <= tol.abs_tol + tol.rel_tol * std::abs(w)) break;
  }

  if (std::abs(w * std::exp(w) - z) > 1e3 * tol.abs_tol * std::max(1.0, std::abs(z))) {
    throw std::runtime_error("lambert_w0: did not converge");
  }
  return w;
}

double lambert_w0_derivative(double z, const RealTolerance& tol) {
  const double min_z = -std::exp(-1.0);
  if (z <= min_z) {
    throw MathDomainError("lambert_w0_derivative: argument must exceed -1/e");
  }
  if (z == 0.0) return 1.0;
  const double w = lambert_w0(z, tol);
  return w / (z * (1.0 + w));
}

double theta_threshold(const RealTolerance& tol) {
  return 1.0 + 0.5 * lambert_w0(-2.0 * std::exp(-2.0), tol);
}

double beta_threshold(const RealTolerance& tol) {
  // Sign change of g(z) = z - 1 + e^(-1/z): g(0.5) < 0, g(1) > 0.
  double lo = 0.5, hi = 1.0;
  for (int i = 0; i < tol.max_iters; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double g = mid - 1.0 + std::exp(-1.0 / mid);
    if (g < 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo < tol.abs_tol) break;
  }
  return 0.5 * (lo + hi);
}

}  // namespace fpa
