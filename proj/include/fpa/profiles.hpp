#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "fpa/core.hpp"

namespace fpa {

/// One-dimensional bid distribution on [lo, hi] with a closed-form CDF/PDF
/// and an optional atom at the lower endpoint (mass cdf(lo)). Families are
/// registered by name so profiles serialize by (name, params).
struct ParametricBid {
  std::string family;
  std::map<std::string, double> params;
  double lo = 0.0;
  double hi = 1.0;
  double atom_at_lo = 0.0;
  std::function<double(double)> cdf;  // includes the atom: cdf(lo) = atom mass
  std::function<double(double)> pdf;  // density on (lo, hi]

  /// P[X < x] (strictly below).
  double prob_below(double x) const;
  /// P[X <= x].
  double prob_at_most(double x) const;
  /// Deterministic inverse-CDF draw for u in [0,1).
  double quantile(double u) const;
  /// Consistency checks: cdf(hi) = 1, monotone cdf, pdf >= 0, and
  /// atom + integral(pdf) = 1 within quadrature tolerance.
  void validate() const;
};

/// Families: "affine"   F(x) = alpha*x + beta           params alpha, beta
///           "reciprocal" F(x) = k / (1 - t*x)          params k, t
///           "log_reciprocal" f(x) = mu / (v - t*x)     params mu, t, v
///           "uniform"  F(x) = (x - lo) / (hi - lo)
/// All on [lo, hi]; any mass the CDF places at lo becomes an atom.
ParametricBid make_parametric(const std::string& family,
                              const std::map<std::string, double>& params,
                              double lo, double hi);

/// Correlated distribution over pure bid matrices with finite support.
struct FiniteProfile {
  struct Atom {
    double prob;
    Matrix bids;  // n x m
  };
  std::vector<Atom> atoms;

  void validate() const;
};

/// Placement of a shared scalar draw inside a bid matrix: each cell either
/// bids a constant or bids the drawn value.
struct BidMap {
  Matrix constants;                          // n x m
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> draws;  // n x m

  static BidMap all_constant(const Matrix& bids);
  Matrix realize(double x) const;
  bool any_draw() const { return draws.any(); }
};

/// All agents' bids are a deterministic function of one shared draw.
struct CoupledProfile {
  ParametricBid x;
  BidMap map;
};

/// Independent per-agent components: either a finite mixture over the
/// agent's own bid vectors or a single shared draw placed in the own row.
struct ProductComponent {
  struct FiniteRow {
    std::vector<std::pair<double, Vector>> atoms;  // prob, own bid vector
  };
  struct ParametricRow {
    ParametricBid x;
    Vector constants;                       // own row, constant entries
    std::vector<bool> draws;                // own row, drawn entries
  };
  std::variant<FiniteRow, ParametricRow> row;
};

struct ProductProfile {
  std::vector<ProductComponent> components;  // size n
};

using RandomBidProfile = std::variant<FiniteProfile, ProductProfile, CoupledProfile>;

/// Deterministic single-profile shorthand.
RandomBidProfile deterministic_profile(const Matrix& bids);

/// Weighted scenario: a pure bid matrix, or a bid map driven by one draw.
/// Every profile kind reduces to a list of these; all expectations are
/// computed scenario by scenario.
struct Scenario {
  double prob = 1.0;
  BidMap map;
  std::optional<ParametricBid> x;  // engaged iff map has draw cells

  bool pure() const { return !x.has_value(); }
};

std::vector<Scenario> to_scenarios(const RandomBidProfile& profile, int n, int m);

/// Marginal over the other agents: drops agent i's row (indices above i
/// shift down by one).
RandomBidProfile marginal_excluding(const RandomBidProfile& profile, int agent,
                                    int n, int m);

/// Expectations of the standard outcome functionals under a profile.
struct OutcomeStats {
  Vector expected_value;    // per agent, E[v_i(x_i)]
  Vector expected_payment;  // per agent
  Vector expected_item_price;  // per item, E[winning payment], 0 when unsold
};

OutcomeStats expected_outcome_stats(const Instance& inst,
                                    const RandomBidProfile& profile);

/// Liquid welfare sum_i min(tau_i E[v_i(x_i)], budget_i).
double liquid_welfare(const Instance& inst, const RandomBidProfile& profile);

/// Budget-free proxy: valuations capped at the budgets, budgets lifted to
/// infinity, and agents whose expected value under the profile exceeds their
/// budget remapped to payment sensitivity 0.
Instance proxy_instance(const Instance& inst, const RandomBidProfile& profile);

/// Deterministic pseudo-random draw of a pure bid matrix.
Matrix sample(const RandomBidProfile& profile, int n, int m, std::uint64_t seed);

/// Adaptive Simpson quadrature used for payment moments of parametric
/// scenarios. Exposed for tests.
double integrate(const std::function<double(double)>& f, double a, double b,
                 double tol = 1e-11);

}  // namespace fpa
