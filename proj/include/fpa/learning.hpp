#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fpa/core.hpp"
#include "fpa/profiles.hpp"

namespace fpa {

/// Repeated single-item first-price auction with a reserve on a shared bid
/// grid. Values, reserve, and bids are integer multiples of `increment`;
/// nobody bids above their own value; ties among reserve-meeting top bids
/// are broken uniformly at random.
struct RepeatedGame {
  Vector values;     // per agent
  Vector sigmas;     // per agent, in [0,1]
  double reserve = 0.0;
  double increment = 0.05;
  int rounds = 10'000;

  void validate() const;
  /// Number of grid actions of agent i (bids 0, inc, ..., v_i).
  int num_actions(int agent) const;
  double bid_of(int agent, int action) const;
  /// Expected gain of bidding `bid` against the opponents' bids, with
  /// uniform tie sharing.
  double expected_gain(int agent, double bid,
                       const std::vector<double>& all_bids) const;
};

struct LearnerConfig {
  enum class Algo { kHedge, kEpsGreedyMeanBased };
  Algo algo = Algo::kHedge;
  double rate_scale = 1.0;     // hedge rate = rate_scale * sqrt(ln K / T)
  double explore_scale = 1.0;  // eps-greedy exploration = scale * t^(-1/3)
  std::uint64_t seed = 0;
};

struct History {
  std::vector<std::vector<double>> bids;   // [round][agent]
  std::vector<int> winner;                 // -1 when unsold
  std::vector<double> payment;             // winning payment per round
  std::vector<std::vector<double>> gains;  // realized (expected-tie) gains
};

/// Full-information simulation; deterministic given the seeds.
History run_repeated(const RepeatedGame& game,
                     const std::vector<LearnerConfig>& configs);

/// Best fixed bid in hindsight over the agent's grid minus realized gains.
double regret(const RepeatedGame& game, const History& history, int agent);

/// Joint empirical distribution of the final `window_fraction` of rounds.
FiniteProfile empirical_cce(const RepeatedGame& game, const History& history,
                            double window_fraction);

/// Largest advantage any agent gets from a fixed grid bid against the
/// window's joint play; equals windowed regret / window length.
double empirical_cce_epsilon(const RepeatedGame& game, const History& history,
                             double window_fraction);

/// A support action weakly dominated within the other agent's support.
struct DominatedAction {
  int agent = -1;
  double action = 0.0;
  double dominating = 0.0;
};

/// Checks, for both agents, every action of `support` against all grid
/// actions, with domination judged on the opposing support (two-agent
/// games only).
std::vector<DominatedAction> co_undominated_check(
    const RepeatedGame& game, const std::vector<std::vector<double>>& support);

/// Per-agent supports of the final window: actions played in at least
/// `min_freq` of the window's rounds.
std::vector<std::vector<double>> window_support(const RepeatedGame& game,
                                                const History& history,
                                                double window_fraction,
                                                double min_freq = 0.01);

/// Fraction of rounds in which the item sold.
double well_supported_fraction(const History& history, double reserve);
double well_supported_fraction_window(const History& history, double reserve,
                                      double window_fraction);

/// Round-by-round CSV log: round, bids, winner, payment, gains.
std::string history_csv(const RepeatedGame& game, const History& history);

}  // namespace fpa
