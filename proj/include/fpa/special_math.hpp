#pragma once

#include <stdexcept>

namespace fpa {

/// Tolerances shared by the iterative solvers in this header.
struct RealTolerance {
  double abs_tol = 1e-12;
  double rel_tol = 0.0;
  int max_iters = 200;
};

class MathDomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Principal branch of the Lambert W function on [-1/e, inf),
/// i.e. the w >= -1 solving w * e^w = z.
double lambert_w0(double z, const RealTolerance& tol = {});

/// d/dz W0(z) = W0(z) / (z * (1 + W0(z))); returns the limit value 1 at z = 0.
double lambert_w0_derivative(double z, const RealTolerance& tol = {});

/// 1 + W0(-2 e^-2) / 2, the type where the flat and the Lambert branch of
/// the hybrid welfare bound meet (~0.7968).
double theta_threshold(const RealTolerance& tol = {});

/// Unique fixed point of z -> 1 - e^(-1/z) in (0,1) (~0.7406).
double beta_threshold(const RealTolerance& tol = {});

}  // namespace fpa
