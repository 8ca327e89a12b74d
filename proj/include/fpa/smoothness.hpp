#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fpa/core.hpp"
#include "fpa/profiles.hpp"

namespace fpa {

/// One admissible welfare-deviation pair for a type: mu is free within the
/// type's range and lambda is pinned by it (and by the reserve gap eta).
struct SmoothnessParams {
  double type = 0.0;    // t in [0,1]
  double eta = 0.0;     // relative reserve gap in [0,1)
  double mu = 0.0;
  double lambda = 0.0;

  /// Validates the (type, eta, mu) combination and derives lambda.
  static SmoothnessParams make(double type, double eta, double mu);
  /// Smallest admissible mu for the type (0 for types 0 and 1).
  static double mu_lower_bound(double type, double eta);
  /// Largest admissible mu (1/(1-eta) for type 0, unbounded otherwise).
  static double mu_upper_bound(double type, double eta);
};

/// gamma(mu) = (1/t)(1 - (1 - t*eta) e^(-t/mu)), in [eta, 1] for admissible mu.
double gamma(double mu, double type, double eta);

/// Randomized single-auction overbid for a value-maximizing winner with
/// value v: CDF mu*z/v + 1 - mu on [eta*v, v].
ParametricBid deviation_type_zero(double v, double eta, double mu);

/// Randomized single-auction overbid for a type-t winner with value v:
/// density mu/(v - t*z) on [eta*v, gamma*v].
ParametricBid deviation_type_t(double v, double type, double eta, double mu);

/// Residual of the per-auction welfare guarantee
///   E[g(B', b_-rw)] - (lambda * v - mu * winning_payment)
/// for one sold auction; expected to be >= -1e-9 for admissible parameters.
/// `bids` holds all n bids of the auction (the rightful winner's own bid
/// included); the item must sell at reserve eta*v.
double smoothness_check(double type, double eta, double mu, double v_rw,
                        const std::vector<double>& bids, int rw_index);

/// max_t(delta_t mu_t) + max_t(delta_t (1 - t)) <= 1 with delta in (0,1]^T.
bool calibration_feasible(const Vector& delta, const Vector& mu,
                          const Vector& types);

/// Closed-form optimum of the calibration problem:
/// min{ min_t lambda_t, (max_t mu_t/lambda_t + max_t (1-t)/lambda_t)^-1 }.
double rmp_objective(const Vector& lambda, const Vector& mu,
                     const Vector& types);

/// The high/low partition solution: types at or above omega share
/// mu = t / (-ln(1-omega)); lower ones use their own t (or 1 at type 0).
struct MuStar {
  Vector mu;
  Vector lambda;
};
MuStar mu_star(double omega, const Vector& types);

/// Certified lower bound min{omega/-ln(1-omega), omega/(omega + max T)} on
/// the calibration optimum, with the achieving parameters.
struct RmpLowerBound {
  double value = 0.0;
  MuStar certificate;
};
RmpLowerBound poa_rmp_lower_bound(const Vector& types, double omega);

/// Welfare-ratio bound for budgeted agents as a function of the largest
/// type: 2 below the threshold, 1 + z/(1 + W0(-e^(-z-1))) above.
double bound_P(double t);

/// Budget-free single-type bound: e/(e-1) for t >= 1-1/e, 2 at t = 0,
/// 1 - (1-t)ln(1-t)/t between.
double bound_Q_common(double t);

/// Budget-free single-type bound with reserves (three regimes in (t, eta)).
double bound_Pt_eta(double t, double eta);

/// zeta(eta) = 2 - eta + W0(-(1-eta)^2 e^(eta-2)), positive on [0,1).
double zeta(double eta);

/// Mixed value/utility-maximizer bound with reserves:
/// (1-eta) * zeta / (zeta - 1); ~2.1885 at eta = 0, -> 1 as eta -> 1.
double bound_Q_eta(double eta);

/// Budget-free bound when every type is at least beta:
/// 1 / (t_min (1 - e^(-1/t_min))).
double bound_min_type(double t_min);

/// Best certificate found for the calibration program over the augmented
/// type set; implied welfare-ratio upper bound is 1/objective.
struct RmpSolution {
  Vector types;   // augmented type set, sorted
  Vector mu;
  Vector lambda;
  Vector delta;   // optimal calibration vector (objective / lambda_t)
  double objective = 0.0;
  double implied_poa_upper = 0.0;
};
RmpSolution poa_upper_bound(const Vector& types, double eta, bool budgeted);

/// CSV curve emission ("x,value,curve"): which = fig1a | fig1b | q_eta.
std::string emit_curves(const std::string& which, int points);

}  // namespace fpa
