#include "fpa/smoothness.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

#include "fpa/special_math.hpp"

namespace fpa {

namespace {

void require(bool cond, const char* msg) {
  if (!cond) throw std::invalid_argument(msg);
}

double e() { return std::exp(1.0); }

}  // namespace

// ---------------------------------------------------------------------------
// Per-type admissible pairs

double SmoothnessParams::mu_lower_bound(double type, double eta) {
  require(type >= 0 && type <= 1, "type outside [0,1]");
  require(eta >= 0 && eta < 1, "eta outside [0,1)");
  if (type <= 0.0 || type >= 1.0) return 0.0;
  return type / std::log((1.0 - type * eta) / (1.0 - type));
}

double SmoothnessParams::mu_upper_bound(double type, double eta) {
  require(eta >= 0 && eta < 1, "eta outside [0,1)");
  if (type == 0.0) return 1.0 / (1.0 - eta);
  return kInf;
}

SmoothnessParams SmoothnessParams::make(double type, double eta, double mu) {
  require(type >= 0 && type <= 1, "type outside [0,1]");
  require(eta >= 0 && eta < 1, "eta outside [0,1)");
  require(mu > 0, "mu must be positive");
  require(mu >= mu_lower_bound(type, eta) - 1e-12, "mu below admissible range");
  require(mu <= mu_upper_bound(type, eta) + 1e-12, "mu above admissible range");

  SmoothnessParams p;
  p.type = type;
  p.eta = eta;
  p.mu = mu;
  if (type == 0.0) {
    p.lambda = mu;
  } else {
    p.lambda = mu * gamma(mu, type, eta);
  }
  return p;
}

double gamma(double mu, double type, double eta) {
  require(type > 0 && type <= 1, "gamma: type outside (0,1]");
  require(eta >= 0 && eta < 1, "gamma: eta outside [0,1)");
  require(mu > 0, "gamma: mu must be positive");
  return (1.0 - (1.0 - type * eta) * std::exp(-type / mu)) / type;
}

// ---------------------------------------------------------------------------
// Deviation distributions

ParametricBid deviation_type_zero(double v, double eta, double mu) {
  require(v > 0, "deviation_type_zero: value must be positive");
  require(eta >= 0 && eta < 1, "deviation_type_zero: eta outside [0,1)");
  require(mu > 0 && mu <= 1.0 / (1.0 - eta) + 1e-12,
          "deviation_type_zero: mu outside (0, 1/(1-eta)]");
  return make_parametric("affine", {{"alpha", mu / v}, {"beta", 1.0 - mu}},
                         eta * v, v);
}

ParametricBid deviation_type_t(double v, double type, double eta, double mu) {
  require(v > 0, "deviation_type_t: value must be positive");
  require(type > 0 && type <= 1, "deviation_type_t: type outside (0,1]");
  require(mu >= SmoothnessParams::mu_lower_bound(type, eta) - 1e-12,
          "deviation_type_t: mu below admissible range");
  const double g = gamma(mu, type, eta);
  return make_parametric("log_reciprocal",
                         {{"mu", mu / v}, {"t", type / v}, {"v", 1.0}},
                         eta * v, g * v);
}

double smoothness_check(double type, double eta, double mu, double v_rw,
                        const std::vector<double>& bids, int rw_index) {
  const auto params = SmoothnessParams::make(type, eta, mu);
  const double reserve = eta * v_rw;
  const double top_bid = *std::max_element(bids.begin(), bids.end());
  if (top_bid + 1e-12 < reserve) {
    throw std::invalid_argument("smoothness_check: the item does not sell");
  }
  const double winning_payment = top_bid;

  double opp_top = 0.0;
  for (int i = 0; i < static_cast<int>(bids.size()); ++i) {
    if (i != rw_index) opp_top = std::max(opp_top, bids[i]);
  }
  const double threshold = std::max(reserve, opp_top);

  // Expected gain of the randomized overbid against the others (ties are
  // counted as losses, which only lowers the left-hand side).
  const ParametricBid dev = type == 0.0
                                ? deviation_type_zero(v_rw, eta, mu)
                                : deviation_type_t(v_rw, type, eta, mu);
  double expected = 0.0;
  if (dev.atom_at_lo > 0.0 && dev.lo > threshold) {
    expected += dev.atom_at_lo * (v_rw - type * dev.lo);
  }
  const double from = std::max(threshold, dev.lo);
  if (from < dev.hi) {
    expected += integrate(
        [&](double z) { return (v_rw - type * z) * dev.pdf(z); }, from, dev.hi,
        1e-12);
  }
  // Atom exactly at the threshold: win only when no opponent matches it.
  if (dev.atom_at_lo > 0.0 && dev.lo == threshold && opp_top < reserve) {
    expected += dev.atom_at_lo * (v_rw - type * dev.lo);
  }

  return expected - (params.lambda * v_rw - params.mu * winning_payment);
}

// ---------------------------------------------------------------------------
// Calibration

bool calibration_feasible(const Vector& delta, const Vector& mu,
                          const Vector& types) {
  require(delta.size() == mu.size() && mu.size() == types.size(),
          "calibration_feasible: size mismatch");
  require((delta.array() > 0).all() && (delta.array() <= 1).all(),
          "calibration_feasible: delta outside (0,1]");
  require((mu.array() > 0).all(), "calibration_feasible: mu must be positive");
  const double lhs = (delta.array() * mu.array()).maxCoeff() +
                     (delta.array() * (1.0 - types.array())).maxCoeff();
  return lhs <= 1.0;
}

double rmp_objective(const Vector& lambda, const Vector& mu,
                     const Vector& types) {
  require(lambda.size() == mu.size() && mu.size() == types.size(),
          "rmp_objective: size mismatch");
  require((lambda.array() > 0).all() && (mu.array() > 0).all(),
          "rmp_objective: parameters must be positive");
  const double min_lambda = lambda.minCoeff();
  const double denom = (mu.array() / lambda.array()).maxCoeff() +
                       ((1.0 - types.array()) / lambda.array()).maxCoeff();
  return std::min(min_lambda, 1.0 / denom);
}

MuStar mu_star(double omega, const Vector& types) {
  require(omega > 0 && omega < 1, "mu_star: omega outside (0,1)");
  MuStar out;
  out.mu = Vector::Zero(types.size());
  out.lambda = Vector::Zero(types.size());
  const double log_high = -std::log(1.0 - omega);
  for (int k = 0; k < types.size(); ++k) {
    const double t = types[k];
    if (t >= omega) {
      out.mu[k] = t / log_high;
      out.lambda[k] = omega / log_high;
    } else if (t > 0.0) {
      out.mu[k] = t / (-std::log(1.0 - t));
      out.lambda[k] = out.mu[k];
    } else {
      out.mu[k] = 1.0;
      out.lambda[k] = 1.0;
    }
  }
  return out;
}

RmpLowerBound poa_rmp_lower_bound(const Vector& types, double omega) {
  const double max_t = types.maxCoeff();
  require(max_t > 0, "poa_rmp_lower_bound: max type must be positive");
  require(omega > 0 && omega <= max_t && omega < 1,
          "poa_rmp_lower_bound: omega outside (0, max T] and (0,1)");
  RmpLowerBound out;
  out.certificate = mu_star(omega, types);
  out.value = std::min(omega / (-std::log(1.0 - omega)),
                       omega / (omega + max_t));
  return out;
}

// ---------------------------------------------------------------------------
// Bound functions

double bound_P(double t) {
  require(t >= 0 && t <= 1, "bound_P: argument outside [0,1]");
  if (t <= theta_threshold()) return 2.0;
  return 1.0 + t / (1.0 + lambert_w0(-std::exp(-t - 1.0)));
}

double bound_Q_common(double t) {
  require(t >= 0 && t <= 1, "bound_Q_common: argument outside [0,1]");
  if (t >= 1.0 - 1.0 / e()) return e() / (e() - 1.0);
  if (t == 0.0) return 2.0;
  return 1.0 - (1.0 - t) * std::log(1.0 - t) / t;
}

double bound_Pt_eta(double t, double eta) {
  require(t >= 0 && t <= 1, "bound_Pt_eta: type outside [0,1]");
  require(eta >= 0 && eta < 1, "bound_Pt_eta: eta outside [0,1)");
  if (t == 0.0) return 2.0 - eta;
  const double cutoff = (1.0 - e() * (1.0 - t)) / t;
  if (t > 1.0 - 1.0 / e() && eta < cutoff) {
    return e() / (e() - 1.0 + t * eta);
  }
  return 1.0 + (1.0 - t) / t * std::log((1.0 - t * eta) / (1.0 - t));
}

double zeta(double eta) {
  require(eta >= 0 && eta < 1, "zeta: eta outside [0,1)");
  const double s = 1.0 - eta;
  return 2.0 - eta + lambert_w0(-s * s * std::exp(eta - 2.0));
}

double bound_Q_eta(double eta) {
  const double z = zeta(eta);
  return (1.0 - eta) * z / (z - 1.0);
}

double bound_min_type(double t_min) {
  require(t_min >= beta_threshold() - 1e-12 && t_min <= 1,
          "bound_min_type: argument below the admissible threshold");
  return 1.0 / (t_min * (1.0 - std::exp(-1.0 / t_min)));
}

// ---------------------------------------------------------------------------
// Certificate search

namespace {

Vector lambda_for(const Vector& types, const Vector& mu, double eta) {
  Vector lambda(types.size());
  for (int k = 0; k < types.size(); ++k) {
    lambda[k] = SmoothnessParams::make(types[k], eta, mu[k]).lambda;
  }
  return lambda;
}

bool mu_admissible(const Vector& types, const Vector& mu, double eta) {
  for (int k = 0; k < types.size(); ++k) {
    if (mu[k] <= 0) return false;
    if (mu[k] < SmoothnessParams::mu_lower_bound(types[k], eta) - 1e-12) {
      return false;
    }
    if (mu[k] > SmoothnessParams::mu_upper_bound(types[k], eta) + 1e-12) {
      return false;
    }
  }
  return true;
}

double objective_of(const Vector& types, const Vector& mu, double eta) {
  return rmp_objective(lambda_for(types, mu, eta), mu, types);
}

}  // namespace

RmpSolution poa_upper_bound(const Vector& types_in, double eta, bool budgeted) {
  require(eta >= 0 && eta < 1, "poa_upper_bound: eta outside [0,1)");
  std::set<double> type_set(types_in.data(), types_in.data() + types_in.size());
  for (double t : type_set) {
    require(t >= 0 && t <= 1, "poa_upper_bound: type outside [0,1]");
  }
  if (budgeted) type_set.insert(0.0);
  Vector types(static_cast<int>(type_set.size()));
  int k = 0;
  for (double t : type_set) types[k++] = t;

  const double max_t = types.maxCoeff();

  std::vector<Vector> candidates;

  // High/low partition family over a deterministic omega sweep (its members
  // are admissible without reserves; with reserves each entry is clipped
  // into its admissible range below).
  std::vector<double> omegas;
  if (max_t > 0) {
    const double omega_hi = std::min(max_t, 1.0 - 1e-9);
    for (int i = 1; i <= 10'000; ++i) omegas.push_back(omega_hi * i / 10'000);
    omegas.push_back(std::min(1.0 - 1.0 / e(), omega_hi));
    if (max_t > theta_threshold()) {
      omegas.push_back(1.0 + lambert_w0(-std::exp(-max_t - 1.0)));
    }
  }
  for (double omega : omegas) {
    if (omega <= 0 || omega >= 1) continue;
    Vector mu = mu_star(omega, types).mu;
    for (int i = 0; i < types.size(); ++i) {
      mu[i] = std::clamp(mu[i],
                         SmoothnessParams::mu_lower_bound(types[i], eta),
                         SmoothnessParams::mu_upper_bound(types[i], eta));
      if (mu[i] <= 0) mu[i] = 1e-9;
    }
    candidates.push_back(mu);
  }

  // Reserve-specific anchors.
  {
    Vector mu(types.size());
    for (int i = 0; i < types.size(); ++i) {
      const double t = types[i];
      if (t == 0.0) {
        mu[i] = 1.0 / (1.0 - eta);
      } else if (t == 1.0) {
        mu[i] = 1.0 / zeta(eta);
      } else {
        const double floor = SmoothnessParams::mu_lower_bound(t, eta);
        mu[i] = std::max(t, floor);
      }
    }
    candidates.push_back(mu);
    for (int i = 0; i < types.size(); ++i) {
      Vector alt = mu;
      const double floor = SmoothnessParams::mu_lower_bound(types[i], eta);
      if (floor > 0) {
        alt[i] = floor;
        candidates.push_back(alt);
      }
    }
  }

  RmpSolution best;
  best.types = types;
  best.objective = -kInf;
  for (const auto& mu : candidates) {
    if (!mu_admissible(types, mu, eta)) continue;
    const double value = objective_of(types, mu, eta);
    if (value > best.objective) {
      best.objective = value;
      best.mu = mu;
    }
  }
  require(best.objective > 0, "poa_upper_bound: no admissible certificate");

  // Coordinate refinement around the best candidate.
  Vector mu = best.mu;
  for (int round = 0; round < 4; ++round) {
    for (int i = 0; i < types.size(); ++i) {
      const double lo =
          std::max(SmoothnessParams::mu_lower_bound(types[i], eta), 1e-9);
      const double hi =
          std::min(SmoothnessParams::mu_upper_bound(types[i], eta),
                   std::max(4.0, 4.0 * mu[i]));
      double a = lo, b = hi;
      const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
      for (int it = 0; it < 90; ++it) {
        const double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
        Vector m1 = mu, m2 = mu;
        m1[i] = x1;
        m2[i] = x2;
        if (objective_of(types, m1, eta) >= objective_of(types, m2, eta)) {
          b = x2;
        } else {
          a = x1;
        }
      }
      Vector trial = mu;
      trial[i] = 0.5 * (a + b);
      if (objective_of(types, trial, eta) > objective_of(types, mu, eta)) {
        mu = trial;
      }
    }
  }
  if (objective_of(types, mu, eta) > best.objective) {
    best.objective = objective_of(types, mu, eta);
    best.mu = mu;
  }

  best.lambda = lambda_for(types, best.mu, eta);
  best.delta = Vector(types.size());
  for (int i = 0; i < types.size(); ++i) {
    best.delta[i] = std::min(1.0, best.objective / best.lambda[i]);
  }
  best.implied_poa_upper = 1.0 / best.objective;
  return best;
}

// ---------------------------------------------------------------------------
// Curve emission

std::string emit_curves(const std::string& which, int points) {
  require(points >= 2, "emit_curves: need at least two points");
  std::ostringstream os;
  os.precision(12);
  os << "x,value,curve\n";
  if (which == "fig1a") {
    for (int i = 0; i < points; ++i) {
      const double t = static_cast<double>(i) / (points - 1);
      os << t << "," << bound_P(t) << ",P\n";
    }
    for (int i = 0; i < points; ++i) {
      const double t = static_cast<double>(i) / (points - 1);
      os << t << "," << bound_Q_common(t) << ",Q\n";
    }
  } else if (which == "fig1b") {
    for (double t : {0.0, 0.3, 0.7, 1.0}) {
      for (int i = 0; i < points; ++i) {
        const double eta = (1.0 - 1e-9) * i / (points - 1);
        os << eta << "," << bound_Pt_eta(t, eta) << ",Pt_eta_t" << t << "\n";
      }
    }
  } else if (which == "q_eta") {
    for (int i = 0; i < points; ++i) {
      const double eta = (1.0 - 1e-9) * i / (points - 1);
      os << eta << "," << bound_Q_eta(eta) << ",Q_eta\n";
    }
  } else {
    throw std::invalid_argument("emit_curves: unknown curve set " + which);
  }
  return os.str();
}

}  // namespace fpa
