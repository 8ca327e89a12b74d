#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fpa/core.hpp"
#include "fpa/profiles.hpp"

namespace fpa {

/// Realized gain v_i(x_i) - sigma_i * p_i of one outcome.
double gain(const Instance& inst, int agent, const Outcome& outcome);

/// Slack of the ROI and budget constraints under a profile; feasible when
/// every slack is >= -tol.
struct ConstraintReport {
  Vector roi_slack;     // tau_i E[value_i] - E[payment_i]
  Vector budget_slack;  // budget_i - E[payment_i] (may be +inf)
  bool feasible(double tol = 1e-9) const;
};

ConstraintReport check_feasible(const Instance& inst,
                                const RandomBidProfile& profile);

/// Candidate pure deviation bids per agent and auction: a regular grid
/// augmented with every level at which a win event can flip (reserves,
/// opponents' support endpoints and atoms, own clause values, tie points).
struct DeviationSet {
  std::vector<std::vector<std::vector<double>>> bids;  // [agent][auction]

  static DeviationSet build(const Instance& inst, const RandomBidProfile& profile,
                            double grid_step);
  /// Product size of the per-auction candidate lists for one agent.
  double combinations(int agent) const;
};

/// Expectations of one pure unilateral deviation against the others'
/// marginal: the deviator's row in the profile is replaced by `bid_vector`.
struct DeviationStats {
  double gain = 0.0;
  double value = 0.0;    // E[v_i(x_i)], capped at `value_cap` when set
  double payment = 0.0;  // E[p_i]
};

DeviationStats deviation_stats(const Instance& inst,
                               const RandomBidProfile& profile, int agent,
                               const Vector& bid_vector,
                               std::optional<double> value_cap = std::nullopt,
                               std::optional<double> sigma_override = std::nullopt);

/// E[g_i(b'_i, B_-i)] for a pure bid vector.
double expected_gain_deviation(const Instance& inst,
                               const RandomBidProfile& profile, int agent,
                               const Vector& bid_vector);

/// E[g_i(B'_i, B_-i)] for a one-auction randomized deviation (constants
/// elsewhere); only supported against finite-support marginals.
double expected_gain_deviation(const Instance& inst,
                               const RandomBidProfile& profile, int agent,
                               const ParametricBid& draw, int auction,
                               const Vector& other_bids);

/// A mixed deviation: weighted pure bid vectors (weights sum to 1).
using MixedDeviation = std::vector<std::pair<double, Vector>>;

struct VerifyOptions {
  double tol = 1e-7;
  double grid_step = 1e-3;
  std::optional<DeviationSet> deviations;
  /// Explicit mixed deviations to test for refutation, per agent.
  std::map<int, std::vector<MixedDeviation>> candidate_mixtures;
  /// Hard cap on enumerated deviation vectors for non-additive agents.
  double max_vector_combinations = 4e6;
};

enum class Verdict { kVerified, kRefuted, kInconclusive };

std::string to_string(Verdict v);

struct EquilibriumReport {
  ConstraintReport feasibility;
  bool profile_feasible = false;

  Vector eq_gain;                   // per agent, E[g_i(B)]
  Vector max_deviation_gain;        // unconstrained sup over the checked set
  Vector feasible_deviation_bound;  // bound on constraint-feasible deviations
  double epsilon = 0.0;             // max_i feasible bound - eq gain
  bool sufficient_cce = false;      // epsilon <= tol
  Verdict verdict = Verdict::kInconclusive;
  std::string detail;               // refuting deviation, failure reason

  bool is_product = false;
  bool well_supported = false;
  Vector unsold_prob;  // per item

  double lw = 0.0;
  double opt = 0.0;
  double ratio = 0.0;  // opt / lw when lw > 0
};

/// Coarse-correlated check. Verifies when no deviation from the checked set
/// (nor any mixture of them meeting the ROI/budget constraints in
/// expectation) improves on the equilibrium gain, refutes when an explicit
/// feasible improving deviation is found, and stays inconclusive otherwise.
EquilibriumReport verify_cce(const Instance& inst,
                             const RandomBidProfile& profile,
                             const VerifyOptions& options = {});

/// Same deviation test; additionally requires product structure.
EquilibriumReport verify_mne(const Instance& inst,
                             const RandomBidProfile& profile,
                             const VerifyOptions& options = {});

/// Necessary-condition check for correlated equilibria of finite-support
/// profiles: single-recommendation swaps with constraints re-aggregated over
/// the full support. Incomplete by design (multi-recommendation swaps are
/// not searched).
struct SwapImprovement {
  int agent = -1;
  int atom = -1;
  Vector target;
  double gain_delta = 0.0;
};

struct CeReport {
  bool no_improving_swap = true;
  std::optional<SwapImprovement> best;
  Verdict verdict = Verdict::kVerified;  // kRefuted when a swap improves
};

CeReport verify_ce_finite(const Instance& inst, const FiniteProfile& profile,
                          const VerifyOptions& options = {});

/// True when every item sells with probability one; also reports per-item
/// unsold probabilities.
struct WellSupportedReport {
  bool well_supported = false;
  Vector unsold_prob;
};

WellSupportedReport well_supported(const Instance& inst,
                                   const RandomBidProfile& profile,
                                   double tol = 1e-12);

/// Iterated pure best responses over a bid grid, each response maximizing
/// the agent's gain among bid vectors meeting their ROI/budget constraints
/// pointwise. Reports a fixed point or a cycle.
struct BrdResult {
  Matrix final_bids;
  bool fixed_point = false;
  int rounds = 0;
  int cycle_length = 0;  // 0 when none detected
};

BrdResult best_response_dynamics(const Instance& inst, double grid_step,
                                 int max_rounds, std::uint64_t seed);

/// Residual of the per-agent welfare decomposition
///   min(E[v_i(B)], budget_i)
///     - delta * E[ghat_i(B'_i, B_-i)] - (1 - delta + delta*sighat_i) E[p_i(B)]
/// where ghat uses the budget-capped valuation and the proxy sensitivity.
/// Non-negative (up to tolerance) whenever B is a feasible equilibrium and
/// the deviation is feasible.
double lw_lower_bound_check(const Instance& inst,
                            const RandomBidProfile& profile, int agent,
                            const MixedDeviation& deviation, double delta);

}  // namespace fpa
