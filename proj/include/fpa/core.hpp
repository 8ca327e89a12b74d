#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace fpa {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Items are indexed 0..m-1; a bundle is a bitmask over items (m <= 63).
using ItemSet = std::uint64_t;

inline bool contains(ItemSet s, int item) { return (s >> item) & 1u; }
inline ItemSet with_item(ItemSet s, int item) { return s | (ItemSet{1} << item); }

/// Monotone valuation over item subsets: additive, XOS (max over additive
/// clauses), or a budget-capped wrapper around either.
class Valuation {
 public:
  enum class Kind { kAdditive, kXos, kBudgetCapped };

  static Valuation additive(Vector values);
  static Valuation xos(std::vector<Vector> clauses);
  static Valuation budget_capped(Valuation inner, double cap);

  Kind kind() const { return kind_; }
  int num_items() const;

  /// Value of a bundle; empty set evaluates to 0.
  double operator()(ItemSet bundle) const;

  /// Value of the singleton {item}.
  double singleton(int item) const;

  /// Largest clause entry over all items (upper bound on any marginal value).
  double max_entry() const;

  /// Scales the valuation pointwise by c >= 0.
  Valuation scaled(double c) const;

  const std::vector<Vector>& clauses() const { return clauses_; }
  double cap() const { return cap_; }
  const Valuation& inner() const { return *inner_; }

 private:
  Kind kind_ = Kind::kAdditive;
  std::vector<Vector> clauses_;  // additive: exactly one clause
  double cap_ = kInf;            // budget-capped only
  std::shared_ptr<const Valuation> inner_;
};

/// Deterministic tie resolution for one auction. Precedence: exact-value
/// override, then threshold rule, then the default priority list
/// (lexicographic agent order when none is given).
struct TieBreakRule {
  struct ValueOverride {
    int auction;
    double value;
    std::vector<int> priority;
  };
  struct ThresholdOverride {
    int auction;
    double threshold;
    std::vector<int> below;  // applied when tie value <= threshold
    std::vector<int> above;  // applied when tie value >  threshold
  };

  std::vector<std::vector<int>> default_priority;  // per auction; may be empty
  std::vector<ValueOverride> overrides;
  std::vector<ThresholdOverride> thresholds;

  /// Winner among `tied` (non-empty) for a tie at `value` in `auction`.
  /// `exact` selects whether exact-value overrides are consulted; callers
  /// integrating over a continuous bid distribution disable them off-atom.
  int winner_among(int auction, double value, const std::vector<int>& tied,
                   bool exact = true) const;
};

/// A simultaneous first-price auction market.
struct Instance {
  int n = 0;  // agents, >= 2
  int m = 0;  // items, >= 1
  Vector reserves;                   // size m, >= 0
  std::vector<Valuation> valuations; // size n
  Vector sigmas;                     // size n, payment sensitivity in [0,1]
  Vector taus;                       // size n, ROI targets > 0
  Vector budgets;                    // size n, > 0 or +inf
  TieBreakRule tiebreak;

  void validate() const;

  static Instance make(int n, int m, Vector reserves,
                       std::vector<Valuation> valuations, Vector sigmas,
                       Vector budgets, TieBreakRule tiebreak = {},
                       std::optional<Vector> taus = std::nullopt);
};

/// Allocation and payments of one simultaneous run.
struct Outcome {
  std::vector<int> winner;     // per item; -1 when unsold
  Matrix payments;             // n x m, winner pays their bid
  std::vector<ItemSet> bundle; // per agent

  double payment_of(int agent) const { return payments.row(agent).sum(); }
};

/// Bids within this distance are treated as tied.
inline constexpr double kTieTol = 1e-9;

/// Runs all m first-price auctions with reserves on a pure bid matrix.
Outcome run_auctions(const Instance& inst, const Matrix& bids,
                     bool exact_ties = true);

/// Exhaustive liquid-welfare maximizer. Enumerates every assignment of each
/// item to an agent or to none ((n+1)^m cases, guarded by `limit`).
struct OptimalAllocation {
  std::vector<int> assignment;  // per item; -1 = unassigned
  std::vector<ItemSet> bundle;  // per agent
  double value = 0.0;
};
OptimalAllocation optimal_allocation(const Instance& inst,
                                     std::int64_t limit = 10'000'000);

/// Additive representatives chosen at the optimal bundles: for each agent a
/// maximizing clause of their valuation at bundle x*_i, exact on the bundle
/// and dominated by the valuation everywhere.
Matrix opt_representatives(const Instance& inst, const OptimalAllocation& opt);

/// Per-item winner under the representatives; ties go to the optimal-
/// allocation winner, then to the smallest agent index.
std::vector<int> rightful_winners(const Instance& inst,
                                  const OptimalAllocation& opt,
                                  const Matrix& reps);

struct EtaGaps {
  Vector per_item;  // eta_j
  double min_gap = 0.0;
};

/// Relative reserve gaps eta_j = r_j / v*_{rw(j) j}; throws when some
/// eta_j >= 1 (reserve at or above the rightful winner's value).
EtaGaps eta_gaps(const Instance& inst);

/// Folds the ROI targets into the valuations: v' = tau * v, sigma' =
/// sigma * tau, tau' = 1. Optimal welfare and per-profile welfare are
/// unchanged.
Instance normalize_targets(const Instance& inst);

/// Caps a valuation at `cap` (> 0); infinite cap returns the input.
Valuation budget_cap(const Valuation& v, double cap);

}  // namespace fpa
